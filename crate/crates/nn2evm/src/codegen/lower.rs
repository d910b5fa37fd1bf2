//! Lowers a model architecture into the statement IR at each optimization
//! level. One baseline program is built per model; the levels are produced by
//! passes over it rather than by separate templates:
//!
//! - level A: operand/product temporaries plus SD wrapper conversions,
//! - level B: the baseline itself (bare int256, helper calls, product temp),
//! - level C: single-use temporaries inlined into their use site,
//! - level D: C plus loop-invariant row-base hoisting, with helper calls
//!   replaced by inline operators in the printed surface.

use std::collections::HashSet;

use crate::codegen::ir::{
    AddSurface, Expr, MulSurface, ProgramIr, ReluSurface, Stmt, SurfaceStyle, Ty,
};
use crate::codegen::OptLevel;
use crate::model::{Activation, ArchSpec};

pub fn lower(arch: &ArchSpec, level: OptLevel) -> ProgramIr {
    let base = build_baseline(arch);
    match level {
        OptLevel::A => {
            let mut ir = wrap_fixed_point(introduce_operand_temps(base));
            ir.style = SurfaceStyle {
                mul: MulSurface::WrappedCall,
                add: AddSurface::WrappedCall,
                relu: ReluSurface::WrappedCall,
                wrapped: true,
            };
            ir
        }
        OptLevel::B => base,
        OptLevel::C => inline_single_use_temps(base),
        OptLevel::D => {
            let mut ir = hoist_loop_invariant_index_mul(inline_single_use_temps(base));
            ir.style = SurfaceStyle {
                mul: MulSurface::Inline,
                add: AddSurface::Operator,
                relu: ReluSurface::Ternary,
                wrapped: false,
            };
            ir
        }
    }
}

/// The level-B program: per layer a dot-product loop nest accumulating
/// `acc = addFixed(acc, mulFixed(weight, activation))` through a product
/// temporary, then an argmax readout. Biases live at flat offset
/// `out_dim * in_dim + o` of each layer's parameter block.
fn build_baseline(arch: &ArchSpec) -> ProgramIr {
    let mut stmts = vec![Stmt::RequireInputLen(arch.input_dim())];
    for k in 0..arch.n_layers() {
        let (out_dim, in_dim) = (arch.out_dim(k), arch.in_dim(k));
        let arr = format!("h{k}");
        stmts.push(Stmt::DeclArray { name: arr.clone(), len: out_dim });

        let weight_index = Expr::IdxAdd(
            Box::new(Expr::IdxMul(Box::new(Expr::local("o")), Box::new(Expr::Lit(in_dim as i128)))),
            Box::new(Expr::local("j")),
        );
        let source = if k == 0 {
            Expr::Input(Box::new(Expr::local("j")))
        } else {
            Expr::Mem { array: format!("h{}", k - 1), index: Box::new(Expr::local("j")) }
        };
        let bias_index = Expr::IdxAdd(
            Box::new(Expr::Lit((out_dim * in_dim) as i128)),
            Box::new(Expr::local("o")),
        );

        let inner = vec![
            Stmt::DeclLocal {
                name: "prod".into(),
                ty: Ty::Int,
                init: Expr::FpMul(
                    Box::new(Expr::Param { layer: k, index: Box::new(weight_index) }),
                    Box::new(source),
                ),
            },
            Stmt::AssignLocal {
                name: "acc".into(),
                value: Expr::FpAdd(Box::new(Expr::local("acc")), Box::new(Expr::local("prod"))),
            },
        ];
        let store = match arch.activation(k) {
            Activation::Relu => Expr::Relu(Box::new(Expr::local("acc"))),
            Activation::Identity => Expr::local("acc"),
        };
        stmts.push(Stmt::For {
            var: "o".into(),
            start: 0,
            bound: out_dim,
            body: vec![
                Stmt::DeclLocal {
                    name: "acc".into(),
                    ty: Ty::Int,
                    init: Expr::Param { layer: k, index: Box::new(bias_index) },
                },
                Stmt::For { var: "j".into(), start: 0, bound: in_dim, body: inner },
                Stmt::AssignMem { array: arr, index: Expr::local("o"), value: store },
            ],
        });
    }

    let logits = format!("h{}", arch.n_layers() - 1);
    stmts.push(Stmt::DeclLocal { name: "best".into(), ty: Ty::Uint, init: Expr::Lit(0) });
    stmts.push(Stmt::DeclLocal {
        name: "bestVal".into(),
        ty: Ty::Int,
        init: Expr::Mem { array: logits.clone(), index: Box::new(Expr::Lit(0)) },
    });
    stmts.push(Stmt::For {
        var: "c".into(),
        start: 1,
        bound: arch.n_classes(),
        body: vec![Stmt::IfGt {
            lhs: Expr::Mem { array: logits.clone(), index: Box::new(Expr::local("c")) },
            rhs: Expr::local("bestVal"),
            then: vec![
                Stmt::AssignLocal {
                    name: "bestVal".into(),
                    value: Expr::Mem { array: logits.clone(), index: Box::new(Expr::local("c")) },
                },
                Stmt::AssignLocal { name: "best".into(), value: Expr::local("c") },
            ],
        }],
    });
    stmts.push(Stmt::Return(Expr::local("best")));

    ProgramIr {
        input_len: arch.input_dim(),
        logits_array: logits,
        stmts,
        style: SurfaceStyle {
            mul: MulSurface::HelperCall,
            add: AddSurface::HelperCall,
            relu: ReluSurface::HelperCall,
            wrapped: false,
        },
    }
}

/// Level-A pass, step 1: give every fp-multiply operand and every activation
/// store its own named temporary.
fn introduce_operand_temps(mut ir: ProgramIr) -> ProgramIr {
    fn rewrite_block(stmts: Vec<Stmt>) -> Vec<Stmt> {
        let mut out = Vec::with_capacity(stmts.len());
        for stmt in stmts {
            match stmt {
                Stmt::DeclLocal { name, ty, init: Expr::FpMul(a, b) } => {
                    let mut operand = |e: Box<Expr>, temp: &str| -> Box<Expr> {
                        if matches!(*e, Expr::Local(_)) {
                            e
                        } else {
                            out.push(Stmt::DeclLocal { name: temp.into(), ty: Ty::Int, init: *e });
                            Box::new(Expr::local(temp))
                        }
                    };
                    let a = operand(a, "w");
                    let b = operand(b, "x");
                    out.push(Stmt::DeclLocal { name, ty, init: Expr::FpMul(a, b) });
                }
                Stmt::AssignMem { array, index, value: Expr::Relu(inner) } => {
                    out.push(Stmt::DeclLocal {
                        name: "act".into(),
                        ty: Ty::Int,
                        init: Expr::Relu(inner),
                    });
                    out.push(Stmt::AssignMem { array, index, value: Expr::local("act") });
                }
                Stmt::For { var, start, bound, body } => {
                    out.push(Stmt::For { var, start, bound, body: rewrite_block(body) });
                }
                Stmt::IfGt { lhs, rhs, then } => {
                    out.push(Stmt::IfGt { lhs, rhs, then: rewrite_block(then) });
                }
                other => out.push(other),
            }
        }
        out
    }
    ir.stmts = rewrite_block(ir.stmts);
    ir
}

/// Level-A pass, step 2: route every value that flows through fixed-point
/// arithmetic through the SD wrapper struct, inserting wrap() at loads and
/// unwrap() at memory stores.
fn wrap_fixed_point(mut ir: ProgramIr) -> ProgramIr {
    let fp_locals = collect_fp_locals(&ir.stmts);

    fn is_fp_op(e: &Expr) -> bool {
        matches!(e, Expr::FpMul(..) | Expr::FpAdd(..) | Expr::Relu(..))
    }

    fn rewrite_block(stmts: Vec<Stmt>, fp: &HashSet<String>) -> Vec<Stmt> {
        stmts
            .into_iter()
            .map(|stmt| match stmt {
                Stmt::DeclLocal { name, ty, init } if fp.contains(&name) => {
                    let init = if is_fp_op(&init) { init } else { Expr::Wrap(Box::new(init)) };
                    let _ = ty;
                    Stmt::DeclLocal { name, ty: Ty::Sd, init }
                }
                Stmt::AssignMem { array, index, value: Expr::Local(n) } if fp.contains(&n) => {
                    Stmt::AssignMem {
                        array,
                        index,
                        value: Expr::Unwrap(Box::new(Expr::Local(n))),
                    }
                }
                Stmt::For { var, start, bound, body } => {
                    Stmt::For { var, start, bound, body: rewrite_block(body, fp) }
                }
                Stmt::IfGt { lhs, rhs, then } => {
                    Stmt::IfGt { lhs, rhs, then: rewrite_block(then, fp) }
                }
                other => other,
            })
            .collect()
    }

    ir.stmts = rewrite_block(ir.stmts, &fp_locals);
    ir
}

/// Locals that carry fixed-point values: declared from an fp op, or used as
/// an operand of one (computed to a fixpoint).
fn collect_fp_locals(stmts: &[Stmt]) -> HashSet<String> {
    fn operand_locals(e: &Expr, set: &mut HashSet<String>) {
        match e {
            Expr::FpMul(a, b) | Expr::FpAdd(a, b) => {
                for side in [a, b] {
                    if let Expr::Local(n) = side.as_ref() {
                        set.insert(n.clone());
                    }
                    operand_locals(side, set);
                }
            }
            Expr::Relu(a) => {
                if let Expr::Local(n) = a.as_ref() {
                    set.insert(n.clone());
                }
                operand_locals(a, set);
            }
            Expr::Param { index, .. } | Expr::Input(index) | Expr::Mem { index, .. } => {
                operand_locals(index, set)
            }
            Expr::IdxAdd(a, b) | Expr::IdxMul(a, b) => {
                operand_locals(a, set);
                operand_locals(b, set);
            }
            Expr::Wrap(a) | Expr::Unwrap(a) => operand_locals(a, set),
            Expr::Lit(_) | Expr::Local(_) => {}
        }
    }

    fn scan(stmts: &[Stmt], set: &mut HashSet<String>) {
        for stmt in stmts {
            match stmt {
                Stmt::DeclLocal { name, init, .. } => {
                    if matches!(init, Expr::FpMul(..) | Expr::FpAdd(..) | Expr::Relu(..)) {
                        set.insert(name.clone());
                    }
                    operand_locals(init, set);
                }
                Stmt::AssignLocal { name, value } => {
                    if matches!(value, Expr::FpMul(..) | Expr::FpAdd(..) | Expr::Relu(..)) {
                        set.insert(name.clone());
                    }
                    operand_locals(value, set);
                }
                Stmt::AssignMem { index, value, .. } => {
                    operand_locals(index, set);
                    operand_locals(value, set);
                }
                Stmt::For { body, .. } => scan(body, set),
                Stmt::IfGt { lhs, rhs, then } => {
                    operand_locals(lhs, set);
                    operand_locals(rhs, set);
                    scan(then, set);
                }
                Stmt::RequireInputLen(_) | Stmt::DeclArray { .. } | Stmt::Return(_) => {}
            }
        }
    }

    let mut set = HashSet::new();
    let mut previous = usize::MAX;
    while set.len() != previous {
        previous = set.len();
        scan(stmts, &mut set);
    }
    set
}

/// Level-C pass: a local declared once, never reassigned, and read exactly
/// once later in its block is folded into the read site.
fn inline_single_use_temps(mut ir: ProgramIr) -> ProgramIr {
    fn count_uses(stmts: &[Stmt], name: &str) -> usize {
        fn expr_uses(e: &Expr, name: &str) -> usize {
            match e {
                Expr::Local(n) => usize::from(n == name),
                Expr::Lit(_) => 0,
                Expr::Param { index, .. } | Expr::Input(index) | Expr::Mem { index, .. } => {
                    expr_uses(index, name)
                }
                Expr::IdxAdd(a, b)
                | Expr::IdxMul(a, b)
                | Expr::FpMul(a, b)
                | Expr::FpAdd(a, b) => expr_uses(a, name) + expr_uses(b, name),
                Expr::Relu(a) | Expr::Wrap(a) | Expr::Unwrap(a) => expr_uses(a, name),
            }
        }
        stmts
            .iter()
            .map(|s| match s {
                Stmt::DeclLocal { init, .. } => expr_uses(init, name),
                Stmt::AssignLocal { value, .. } => expr_uses(value, name),
                Stmt::AssignMem { index, value, .. } => {
                    expr_uses(index, name) + expr_uses(value, name)
                }
                Stmt::For { body, .. } => count_uses(body, name),
                Stmt::IfGt { lhs, rhs, then } => {
                    expr_uses(lhs, name) + expr_uses(rhs, name) + count_uses(then, name)
                }
                Stmt::Return(e) => expr_uses(e, name),
                Stmt::RequireInputLen(_) | Stmt::DeclArray { .. } => 0,
            })
            .sum()
    }

    fn is_reassigned(stmts: &[Stmt], name: &str) -> bool {
        stmts.iter().any(|s| match s {
            Stmt::AssignLocal { name: n, .. } => n == name,
            Stmt::For { body, .. } => is_reassigned(body, name),
            Stmt::IfGt { then, .. } => is_reassigned(then, name),
            _ => false,
        })
    }

    fn substitute_once(e: &mut Expr, name: &str, replacement: &Expr, done: &mut bool) {
        if *done {
            return;
        }
        if let Expr::Local(n) = e {
            if n == name {
                *e = replacement.clone();
                *done = true;
                return;
            }
        }
        match e {
            Expr::Param { index, .. } | Expr::Input(index) | Expr::Mem { index, .. } => {
                substitute_once(index, name, replacement, done)
            }
            Expr::IdxAdd(a, b) | Expr::IdxMul(a, b) | Expr::FpMul(a, b) | Expr::FpAdd(a, b) => {
                substitute_once(a, name, replacement, done);
                substitute_once(b, name, replacement, done);
            }
            Expr::Relu(a) | Expr::Wrap(a) | Expr::Unwrap(a) => {
                substitute_once(a, name, replacement, done)
            }
            Expr::Lit(_) | Expr::Local(_) => {}
        }
    }

    fn substitute_in_block(stmts: &mut [Stmt], name: &str, replacement: &Expr) {
        let mut done = false;
        for s in stmts.iter_mut() {
            if done {
                break;
            }
            match s {
                Stmt::DeclLocal { init, .. } => substitute_once(init, name, replacement, &mut done),
                Stmt::AssignLocal { value, .. } => {
                    substitute_once(value, name, replacement, &mut done)
                }
                Stmt::AssignMem { index, value, .. } => {
                    substitute_once(index, name, replacement, &mut done);
                    substitute_once(value, name, replacement, &mut done);
                }
                Stmt::Return(e) => substitute_once(e, name, replacement, &mut done),
                Stmt::For { .. } | Stmt::IfGt { .. } => {}
                Stmt::RequireInputLen(_) | Stmt::DeclArray { .. } => {}
            }
        }
    }

    fn rewrite_block(stmts: Vec<Stmt>) -> Vec<Stmt> {
        // Recurse first so nested loop bodies are simplified before this block.
        let mut stmts: Vec<Stmt> = stmts
            .into_iter()
            .map(|s| match s {
                Stmt::For { var, start, bound, body } => {
                    Stmt::For { var, start, bound, body: rewrite_block(body) }
                }
                Stmt::IfGt { lhs, rhs, then } => Stmt::IfGt { lhs, rhs, then: rewrite_block(then) },
                other => other,
            })
            .collect();

        loop {
            let mut candidate = None;
            for (i, s) in stmts.iter().enumerate() {
                if let Stmt::DeclLocal { name, init, .. } = s {
                    let rest = &stmts[i + 1..];
                    // Only fold within straight-line statements of this block;
                    // reads inside nested loops would change evaluation counts.
                    let straight_uses = rest
                        .iter()
                        .take_while(|r| !matches!(r, Stmt::For { .. } | Stmt::IfGt { .. }))
                        .collect::<Vec<_>>();
                    let total = count_uses(rest, name);
                    let straight: usize = straight_uses
                        .iter()
                        .map(|r| count_uses(std::slice::from_ref(*r), name))
                        .sum();
                    if total == 1 && straight == 1 && !is_reassigned(rest, name) {
                        candidate = Some((i, name.clone(), init.clone()));
                        break;
                    }
                }
            }
            match candidate {
                Some((i, name, init)) => {
                    stmts.remove(i);
                    substitute_in_block(&mut stmts[i..], &name, &init);
                }
                None => break,
            }
        }
        stmts
    }

    ir.stmts = rewrite_block(ir.stmts);
    ir
}

/// Level-D pass: an index multiplication inside an inner loop whose operands
/// do not involve the inner loop variable is computed once per outer
/// iteration in a hoisted local.
fn hoist_loop_invariant_index_mul(mut ir: ProgramIr) -> ProgramIr {
    fn find_invariant_muls(stmts: &[Stmt], loop_var: &str, found: &mut Vec<Expr>) {
        fn scan_expr(e: &Expr, loop_var: &str, found: &mut Vec<Expr>) {
            if let Expr::IdxMul(a, b) = e {
                if !a.references(loop_var) && !b.references(loop_var) && !found.contains(e) {
                    found.push(e.clone());
                    return;
                }
            }
            match e {
                Expr::Param { index, .. } | Expr::Input(index) | Expr::Mem { index, .. } => {
                    scan_expr(index, loop_var, found)
                }
                Expr::IdxAdd(a, b)
                | Expr::IdxMul(a, b)
                | Expr::FpMul(a, b)
                | Expr::FpAdd(a, b) => {
                    scan_expr(a, loop_var, found);
                    scan_expr(b, loop_var, found);
                }
                Expr::Relu(a) | Expr::Wrap(a) | Expr::Unwrap(a) => scan_expr(a, loop_var, found),
                Expr::Lit(_) | Expr::Local(_) => {}
            }
        }
        for s in stmts {
            match s {
                Stmt::DeclLocal { init, .. } => scan_expr(init, loop_var, found),
                Stmt::AssignLocal { value, .. } => scan_expr(value, loop_var, found),
                Stmt::AssignMem { index, value, .. } => {
                    scan_expr(index, loop_var, found);
                    scan_expr(value, loop_var, found);
                }
                Stmt::For { body, .. } => find_invariant_muls(body, loop_var, found),
                Stmt::IfGt { lhs, rhs, then } => {
                    scan_expr(lhs, loop_var, found);
                    scan_expr(rhs, loop_var, found);
                    find_invariant_muls(then, loop_var, found);
                }
                _ => {}
            }
        }
    }

    fn replace_expr(e: &mut Expr, target: &Expr, local: &str) {
        if e == target {
            *e = Expr::local(local);
            return;
        }
        match e {
            Expr::Param { index, .. } | Expr::Input(index) | Expr::Mem { index, .. } => {
                replace_expr(index, target, local)
            }
            Expr::IdxAdd(a, b) | Expr::IdxMul(a, b) | Expr::FpMul(a, b) | Expr::FpAdd(a, b) => {
                replace_expr(a, target, local);
                replace_expr(b, target, local);
            }
            Expr::Relu(a) | Expr::Wrap(a) | Expr::Unwrap(a) => replace_expr(a, target, local),
            Expr::Lit(_) | Expr::Local(_) => {}
        }
    }

    fn replace_in_stmts(stmts: &mut [Stmt], target: &Expr, local: &str) {
        for s in stmts {
            match s {
                Stmt::DeclLocal { init, .. } => replace_expr(init, target, local),
                Stmt::AssignLocal { value, .. } => replace_expr(value, target, local),
                Stmt::AssignMem { index, value, .. } => {
                    replace_expr(index, target, local);
                    replace_expr(value, target, local);
                }
                Stmt::For { body, .. } => replace_in_stmts(body, target, local),
                Stmt::IfGt { lhs, rhs, then } => {
                    replace_expr(lhs, target, local);
                    replace_expr(rhs, target, local);
                    replace_in_stmts(then, target, local);
                }
                _ => {}
            }
        }
    }

    fn rewrite_block(stmts: Vec<Stmt>) -> Vec<Stmt> {
        let mut out = Vec::with_capacity(stmts.len());
        for stmt in stmts {
            match stmt {
                Stmt::For { var, start, bound, body } => {
                    // Recurse: hoist within nested structures first.
                    let mut body = rewrite_block(body);
                    // Hoist out of directly nested loops into this body.
                    let mut rewritten = Vec::with_capacity(body.len());
                    for inner in body.drain(..) {
                        match inner {
                            Stmt::For {
                                var: ivar,
                                start: istart,
                                bound: ibound,
                                body: mut ibody,
                            } => {
                                let mut invariants = Vec::new();
                                find_invariant_muls(&ibody, &ivar, &mut invariants);
                                for inv in invariants {
                                    let name = format!("rowBase{}", hoist_count(&rewritten));
                                    replace_in_stmts(&mut ibody, &inv, &name);
                                    rewritten.push(Stmt::DeclLocal {
                                        name,
                                        ty: Ty::Uint,
                                        init: inv,
                                    });
                                }
                                rewritten.push(Stmt::For {
                                    var: ivar,
                                    start: istart,
                                    bound: ibound,
                                    body: ibody,
                                });
                            }
                            other => rewritten.push(other),
                        }
                    }
                    out.push(Stmt::For { var, start, bound, body: rewritten });
                }
                Stmt::IfGt { lhs, rhs, then } => {
                    out.push(Stmt::IfGt { lhs, rhs, then: rewrite_block(then) })
                }
                other => out.push(other),
            }
        }
        out
    }

    fn hoist_count(stmts: &[Stmt]) -> usize {
        stmts
            .iter()
            .filter(|s| matches!(s, Stmt::DeclLocal { name, .. } if name.starts_with("rowBase")))
            .count()
    }

    ir.stmts = rewrite_block(ir.stmts);
    ir
}
