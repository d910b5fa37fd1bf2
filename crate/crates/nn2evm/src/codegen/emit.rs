//! Renders the statement IR to self-contained Solidity source. One printer
//! serves all four levels; the level decides structure (via the lowering
//! passes) and surface style (helper calls vs. inline operators).

use crate::codegen::ir::{
    AddSurface, Expr, MulSurface, ProgramIr, ReluSurface, Stmt, Ty,
};
use crate::codegen::OptLevel;
use crate::model::ArchSpec;

pub fn emit_contract(arch: &ArchSpec, ir: &ProgramIr, level: OptLevel) -> String {
    let mut out = String::new();
    out.push_str("// SPDX-License-Identifier: MIT\n");
    out.push_str("pragma solidity ^0.8.19;\n\n");
    out.push_str(&format!(
        "/// MLP inference at fixed-point scale 1e18, optimization level {level}.\n"
    ));
    out.push_str(&format!(
        "/// Architecture {}: {} inputs, layer widths {:?}.\n",
        arch.notation(),
        arch.input_dim(),
        arch.layer_dims()
    ));
    out.push_str("/// Weights are uploaded in batches via setWeights; classification is a\n");
    out.push_str("/// view function and costs no gas.\n");
    out.push_str("contract MlpClassifier {\n");
    out.push_str("    int256 internal constant SCALE = 1e18;\n\n");

    // All parameters in one flat array, layer blocks back to back (weights
    // row-major, then biases), so one upload batch may span layers.
    out.push_str(&format!("    int256[{}] internal p;\n\n", arch.n_params()));

    emit_helpers(&mut out, ir);
    emit_set_weights(&mut out, arch);
    emit_classify(&mut out, arch, ir);

    out.push_str("}\n");
    out
}

/// Printer context: surface styles plus the flat storage base per layer.
struct EmitCtx<'a> {
    ir: &'a ProgramIr,
    bases: Vec<usize>,
}

fn emit_helpers(out: &mut String, ir: &ProgramIr) {
    let relu_used = ir.uses_relu();
    if ir.style.wrapped {
        out.push_str("    struct SD { int256 v; }\n\n");
        out.push_str("    function wrap(int256 x) internal pure returns (SD memory) { SD memory r; r.v = x; return r; }\n");
        out.push_str("    function unwrap(SD memory a) internal pure returns (int256) { return a.v; }\n");
        out.push_str("    function sdMul(SD memory a, SD memory b) internal pure returns (SD memory) { return wrap((a.v * b.v) / SCALE); }\n");
        out.push_str("    function sdAdd(SD memory a, SD memory b) internal pure returns (SD memory) { return wrap(a.v + b.v); }\n");
        if relu_used {
            out.push_str("    function sdRelu(SD memory a) internal pure returns (SD memory) { if (a.v > 0) { return a; } return wrap(0); }\n");
        }
        out.push('\n');
        return;
    }
    let mut any = false;
    if ir.style.mul == MulSurface::HelperCall {
        out.push_str("    function mulFixed(int256 a, int256 b) internal pure returns (int256) { return (a * b) / SCALE; }\n");
        any = true;
    }
    if ir.style.add == AddSurface::HelperCall {
        out.push_str("    function addFixed(int256 a, int256 b) internal pure returns (int256) { return a + b; }\n");
        any = true;
    }
    if relu_used && ir.style.relu == ReluSurface::HelperCall {
        out.push_str("    function relu(int256 a) internal pure returns (int256) { return a > 0 ? a : int256(0); }\n");
        any = true;
    }
    if any {
        out.push('\n');
    }
}

fn emit_set_weights(out: &mut String, arch: &ArchSpec) {
    out.push_str(
        "    function setWeights(uint256 layer, uint256 offset, int256[] calldata values) external {\n",
    );
    out.push_str("        uint256 base;\n");
    for k in 0..arch.n_layers() {
        let head = if k == 0 { "if" } else { "else if" };
        out.push_str(&format!(
            "        {head} (layer == {k}) {{ base = {}; }}\n",
            layer_base(arch, k)
        ));
    }
    out.push_str("        else { revert(\"layer out of range\"); }\n");
    out.push_str(
        "        for (uint256 i = 0; i < values.length; i++) { p[base + offset + i] = values[i]; }\n",
    );
    out.push_str("    }\n\n");
}

/// Flat storage index where layer `k`'s parameter block starts.
pub fn layer_base(arch: &ArchSpec, k: usize) -> usize {
    (0..k).map(|m| arch.out_dim(m) * arch.in_dim(m) + arch.out_dim(m)).sum()
}

fn emit_classify(out: &mut String, arch: &ArchSpec, ir: &ProgramIr) {
    let ctx = EmitCtx { ir, bases: (0..arch.n_layers()).map(|k| layer_base(arch, k)).collect() };
    out.push_str(
        "    function classify(int256[] calldata input) external view returns (uint8) {\n",
    );
    for stmt in &ir.stmts {
        emit_stmt(out, stmt, &ctx, 2);
    }
    out.push_str("    }\n");
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn emit_stmt(out: &mut String, stmt: &Stmt, ctx: &EmitCtx, depth: usize) {
    match stmt {
        Stmt::RequireInputLen(n) => {
            indent(out, depth);
            out.push_str(&format!("require(input.length == {n}, \"input length mismatch\");\n"));
        }
        Stmt::DeclArray { name, len } => {
            indent(out, depth);
            out.push_str(&format!("int256[{len}] memory {name};\n"));
        }
        Stmt::DeclLocal { name, ty, init } => {
            indent(out, depth);
            let ty_s = match ty {
                Ty::Int => "int256",
                Ty::Uint => "uint256",
                Ty::Sd => "SD memory",
            };
            out.push_str(&format!("{ty_s} {name} = {};\n", expr(init, ctx)));
        }
        Stmt::AssignLocal { name, value } => {
            indent(out, depth);
            out.push_str(&format!("{name} = {};\n", expr(value, ctx)));
        }
        Stmt::AssignMem { array, index, value } => {
            indent(out, depth);
            out.push_str(&format!("{array}[{}] = {};\n", expr(index, ctx), expr(value, ctx)));
        }
        Stmt::For { var, start, bound, body } => {
            indent(out, depth);
            out.push_str(&format!(
                "for (uint256 {var} = {start}; {var} < {bound}; {var}++) {{\n"
            ));
            for s in body {
                emit_stmt(out, s, ctx, depth + 1);
            }
            indent(out, depth);
            out.push_str("}\n");
        }
        Stmt::IfGt { lhs, rhs, then } => {
            indent(out, depth);
            out.push_str(&format!("if ({} > {}) {{\n", expr(lhs, ctx), expr(rhs, ctx)));
            for s in then {
                emit_stmt(out, s, ctx, depth + 1);
            }
            indent(out, depth);
            out.push_str("}\n");
        }
        Stmt::Return(e) => {
            indent(out, depth);
            out.push_str(&format!("return uint8({});\n", expr(e, ctx)));
        }
    }
}

fn expr(e: &Expr, ctx: &EmitCtx) -> String {
    match e {
        Expr::Lit(v) => v.to_string(),
        Expr::Local(n) => n.clone(),
        Expr::Param { layer, index } => {
            let base = ctx.bases[*layer];
            if base == 0 {
                format!("p[{}]", expr(index, ctx))
            } else {
                format!("p[{base} + {}]", expr(index, ctx))
            }
        }
        Expr::Input(index) => format!("input[{}]", expr(index, ctx)),
        Expr::Mem { array, index } => format!("{array}[{}]", expr(index, ctx)),
        Expr::IdxAdd(a, b) => format!("{} + {}", expr(a, ctx), expr(b, ctx)),
        Expr::IdxMul(a, b) => format!("{} * {}", expr(a, ctx), expr(b, ctx)),
        Expr::FpMul(a, b) => match ctx.ir.style.mul {
            MulSurface::WrappedCall => format!("sdMul({}, {})", expr(a, ctx), expr(b, ctx)),
            MulSurface::HelperCall => format!("mulFixed({}, {})", expr(a, ctx), expr(b, ctx)),
            MulSurface::Inline => format!("({} * {}) / SCALE", expr(a, ctx), expr(b, ctx)),
        },
        Expr::FpAdd(a, b) => match ctx.ir.style.add {
            AddSurface::WrappedCall => format!("sdAdd({}, {})", expr(a, ctx), expr(b, ctx)),
            AddSurface::HelperCall => format!("addFixed({}, {})", expr(a, ctx), expr(b, ctx)),
            AddSurface::Operator => format!("{} + {}", expr(a, ctx), expr(b, ctx)),
        },
        Expr::Relu(a) => match ctx.ir.style.relu {
            ReluSurface::WrappedCall => format!("sdRelu({})", expr(a, ctx)),
            ReluSurface::HelperCall => format!("relu({})", expr(a, ctx)),
            ReluSurface::Ternary => {
                let inner = expr(a, ctx);
                format!("{inner} > 0 ? {inner} : int256(0)")
            }
        },
        Expr::Wrap(a) => format!("wrap({})", expr(a, ctx)),
        Expr::Unwrap(a) => format!("unwrap({})", expr(a, ctx)),
    }
}
