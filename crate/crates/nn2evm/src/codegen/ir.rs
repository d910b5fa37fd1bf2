//! Statement IR for the generated classify function.
//!
//! One semantic program per model is lowered by level-specific passes (see
//! `lower`); a single printer renders it to Solidity and a small interpreter
//! executes it directly, recording every fixed-point multiply/add so level
//! equivalence and contract/simulator agreement are checkable structurally.

use std::collections::HashMap;

use num::bigint::BigInt;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fixed::{scale, FpOp, FpOpKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// Integer literal (dimensions, offsets, zero).
    Lit(i128),
    /// Scalar local variable.
    Local(String),
    /// Storage read `p<layer>[index]`.
    Param { layer: usize, index: Box<Expr> },
    /// Calldata read `input[index]`.
    Input(Box<Expr>),
    /// Memory array read `<array>[index]`.
    Mem { array: String, index: Box<Expr> },
    /// Index arithmetic.
    IdxAdd(Box<Expr>, Box<Expr>),
    IdxMul(Box<Expr>, Box<Expr>),
    /// Fixed-point ops at scale 1e18.
    FpMul(Box<Expr>, Box<Expr>),
    FpAdd(Box<Expr>, Box<Expr>),
    Relu(Box<Expr>),
    /// Level-A fixed-point wrapper conversions; runtime no-ops.
    Wrap(Box<Expr>),
    Unwrap(Box<Expr>),
}

impl Expr {
    pub fn local(name: &str) -> Expr {
        Expr::Local(name.to_string())
    }

    /// Whether `name` occurs as a local reference anywhere in this expression.
    pub fn references(&self, name: &str) -> bool {
        match self {
            Expr::Lit(_) => false,
            Expr::Local(n) => n == name,
            Expr::Param { index, .. } | Expr::Input(index) | Expr::Mem { index, .. } => {
                index.references(name)
            }
            Expr::IdxAdd(a, b) | Expr::IdxMul(a, b) | Expr::FpMul(a, b) | Expr::FpAdd(a, b) => {
                a.references(name) || b.references(name)
            }
            Expr::Relu(a) | Expr::Wrap(a) | Expr::Unwrap(a) => a.references(name),
        }
    }
}

/// Declared type of a local: `int256`, `uint256`, or the level-A wrapper
/// struct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Int,
    Uint,
    Sd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    /// `require(input.length == n, ...)`.
    RequireInputLen(usize),
    /// `int256[len] memory name;`
    DeclArray { name: String, len: usize },
    DeclLocal { name: String, ty: Ty, init: Expr },
    AssignLocal { name: String, value: Expr },
    AssignMem { array: String, index: Expr, value: Expr },
    For { var: String, start: usize, bound: usize, body: Vec<Stmt> },
    /// `if (lhs > rhs) { then }` — the argmax update.
    IfGt { lhs: Expr, rhs: Expr, then: Vec<Stmt> },
    Return(Expr),
}

/// How fixed-point operations appear in the printed source. The trace
/// interpreter ignores these; they change bytes, not arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceStyle {
    pub mul: MulSurface,
    pub add: AddSurface,
    pub relu: ReluSurface,
    /// Whether values flow through the SD wrapper struct (level A).
    pub wrapped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MulSurface {
    /// `sdMul(a, b)` on wrapped values.
    WrappedCall,
    /// `mulFixed(a, b)` on bare int256.
    HelperCall,
    /// `(a * b) / SCALE` inline.
    Inline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddSurface {
    WrappedCall,
    HelperCall,
    /// `a + b` inline.
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReluSurface {
    WrappedCall,
    HelperCall,
    /// `x > 0 ? x : int256(0)` inline.
    Ternary,
}

/// The classify function body for one model at one optimization level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramIr {
    pub input_len: usize,
    /// Name of the memory array holding the final logits.
    pub logits_array: String,
    pub stmts: Vec<Stmt>,
    pub style: SurfaceStyle,
}

impl ProgramIr {
    fn walk_exprs(&self, f: &mut impl FnMut(&Expr)) {
        fn walk_expr(e: &Expr, f: &mut impl FnMut(&Expr)) {
            f(e);
            match e {
                Expr::Lit(_) | Expr::Local(_) => {}
                Expr::Param { index, .. } | Expr::Input(index) | Expr::Mem { index, .. } => {
                    walk_expr(index, f)
                }
                Expr::IdxAdd(a, b)
                | Expr::IdxMul(a, b)
                | Expr::FpMul(a, b)
                | Expr::FpAdd(a, b) => {
                    walk_expr(a, f);
                    walk_expr(b, f);
                }
                Expr::Relu(a) | Expr::Wrap(a) | Expr::Unwrap(a) => walk_expr(a, f),
            }
        }
        fn walk_stmts(stmts: &[Stmt], f: &mut impl FnMut(&Expr)) {
            for s in stmts {
                match s {
                    Stmt::RequireInputLen(_) | Stmt::DeclArray { .. } => {}
                    Stmt::DeclLocal { init, .. } => walk_expr(init, f),
                    Stmt::AssignLocal { value, .. } => walk_expr(value, f),
                    Stmt::AssignMem { index, value, .. } => {
                        walk_expr(index, f);
                        walk_expr(value, f);
                    }
                    Stmt::For { body, .. } => walk_stmts(body, f),
                    Stmt::IfGt { lhs, rhs, then } => {
                        walk_expr(lhs, f);
                        walk_expr(rhs, f);
                        walk_stmts(then, f);
                    }
                    Stmt::Return(e) => walk_expr(e, f),
                }
            }
        }
        walk_stmts(&self.stmts, f);
    }

    pub fn uses_relu(&self) -> bool {
        let mut found = false;
        self.walk_exprs(&mut |e| {
            if matches!(e, Expr::Relu(_)) {
                found = true;
            }
        });
        found
    }
}

/// Result of interpreting a program on concrete parameters and input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifyRun {
    pub class: usize,
    pub logits: Vec<BigInt>,
    pub ops: Vec<FpOp>,
}

struct Interp<'a> {
    params: &'a [Vec<BigInt>],
    input: &'a [BigInt],
    locals: HashMap<String, BigInt>,
    arrays: HashMap<String, Vec<BigInt>>,
    ops: Vec<FpOp>,
}

fn range_bound() -> BigInt {
    BigInt::one() << 255
}

impl<'a> Interp<'a> {
    fn eval(&mut self, e: &Expr) -> Result<BigInt> {
        Ok(match e {
            Expr::Lit(v) => BigInt::from(*v),
            Expr::Local(name) => self
                .locals
                .get(name)
                .cloned()
                .ok_or_else(|| Error::Codegen(format!("undefined local {name}")))?,
            Expr::Param { layer, index } => {
                let idx = self.eval_index(index)?;
                self.params
                    .get(*layer)
                    .and_then(|p| p.get(idx))
                    .cloned()
                    .ok_or_else(|| Error::Codegen(format!("param read p{layer}[{idx}] out of range")))?
            }
            Expr::Input(index) => {
                let idx = self.eval_index(index)?;
                self.input
                    .get(idx)
                    .cloned()
                    .ok_or_else(|| Error::Codegen(format!("input read [{idx}] out of range")))?
            }
            Expr::Mem { array, index } => {
                let idx = self.eval_index(index)?;
                self.arrays
                    .get(array)
                    .and_then(|a| a.get(idx))
                    .cloned()
                    .ok_or_else(|| Error::Codegen(format!("memory read {array}[{idx}] out of range")))?
            }
            Expr::IdxAdd(a, b) => self.eval(a)? + self.eval(b)?,
            Expr::IdxMul(a, b) => self.eval(a)? * self.eval(b)?,
            Expr::FpMul(a, b) => {
                let lhs = self.eval(a)?;
                let rhs = self.eval(b)?;
                let product = &lhs * &rhs;
                if product.abs() >= range_bound() {
                    return Err(Error::Overflow(format!("product {lhs} * {rhs}")));
                }
                let out = product / scale();
                self.ops.push(FpOp { kind: FpOpKind::Mul, lhs, rhs, out: out.clone() });
                out
            }
            Expr::FpAdd(a, b) => {
                let lhs = self.eval(a)?;
                let rhs = self.eval(b)?;
                let out = &lhs + &rhs;
                if out.abs() >= range_bound() {
                    return Err(Error::Overflow(format!("sum {lhs} + {rhs}")));
                }
                self.ops.push(FpOp { kind: FpOpKind::Add, lhs, rhs, out: out.clone() });
                out
            }
            Expr::Relu(a) => {
                let v = self.eval(a)?;
                if v.is_negative() {
                    BigInt::zero()
                } else {
                    v
                }
            }
            Expr::Wrap(a) | Expr::Unwrap(a) => self.eval(a)?,
        })
    }

    fn eval_index(&mut self, e: &Expr) -> Result<usize> {
        let v = self.eval(e)?;
        v.to_string()
            .parse()
            .map_err(|_| Error::Codegen(format!("index {v} not addressable")))
    }

    fn exec(&mut self, stmts: &[Stmt]) -> Result<Option<BigInt>> {
        for stmt in stmts {
            match stmt {
                Stmt::RequireInputLen(n) => {
                    if self.input.len() != *n {
                        return Err(Error::Shape(format!(
                            "input has {} entries, contract requires {n}",
                            self.input.len()
                        )));
                    }
                }
                Stmt::DeclArray { name, len } => {
                    self.arrays.insert(name.clone(), vec![BigInt::zero(); *len]);
                }
                Stmt::DeclLocal { name, init, .. } => {
                    let v = self.eval(init)?;
                    self.locals.insert(name.clone(), v);
                }
                Stmt::AssignLocal { name, value } => {
                    let v = self.eval(value)?;
                    if !self.locals.contains_key(name) {
                        return Err(Error::Codegen(format!("assignment to undeclared {name}")));
                    }
                    self.locals.insert(name.clone(), v);
                }
                Stmt::AssignMem { array, index, value } => {
                    let idx = self.eval_index(index)?;
                    let v = self.eval(value)?;
                    let arr = self
                        .arrays
                        .get_mut(array)
                        .ok_or_else(|| Error::Codegen(format!("undeclared array {array}")))?;
                    if idx >= arr.len() {
                        return Err(Error::Codegen(format!("write {array}[{idx}] out of range")));
                    }
                    arr[idx] = v;
                }
                Stmt::For { var, start, bound, body } => {
                    for i in *start..*bound {
                        self.locals.insert(var.clone(), BigInt::from(i));
                        if let Some(ret) = self.exec(body)? {
                            return Ok(Some(ret));
                        }
                    }
                    self.locals.remove(var);
                }
                Stmt::IfGt { lhs, rhs, then } => {
                    let l = self.eval(lhs)?;
                    let r = self.eval(rhs)?;
                    if l > r {
                        if let Some(ret) = self.exec(then)? {
                            return Ok(Some(ret));
                        }
                    }
                }
                Stmt::Return(e) => {
                    let v = self.eval(e)?;
                    return Ok(Some(v));
                }
            }
        }
        Ok(None)
    }
}

/// Executes the program against concrete storage parameters and input raws.
pub fn interpret(ir: &ProgramIr, params: &[Vec<BigInt>], input: &[BigInt]) -> Result<ClassifyRun> {
    let mut interp =
        Interp { params, input, locals: HashMap::new(), arrays: HashMap::new(), ops: Vec::new() };
    let returned = interp
        .exec(&ir.stmts)?
        .ok_or_else(|| Error::Codegen("classify body did not return".into()))?;
    let class = returned
        .to_string()
        .parse()
        .map_err(|_| Error::Codegen(format!("returned class {returned} not a small index")))?;
    let logits = interp
        .arrays
        .remove(&ir.logits_array)
        .ok_or_else(|| Error::Codegen(format!("logits array {} missing", ir.logits_array)))?;
    Ok(ClassifyRun { class, logits, ops: interp.ops })
}
