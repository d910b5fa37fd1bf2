//! Contract generation: four gas-optimization levels lowered from one
//! statement IR, parameter layout metadata, upload batch planning, and an
//! optional Solidity-compiler integration hook.

pub mod emit;
pub mod ir;
pub mod lower;
pub mod solc;
pub mod upload;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::Fp;
use crate::infer::QuantizedModel;
use crate::model::ArchSpec;

pub use ir::ClassifyRun;
pub use upload::{plan_weight_upload, Batch, BatchPlan};

/// The four gas-optimization levels, from baseline wrapper-heavy translation
/// (A) to hoisted inline arithmetic (D).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OptLevel {
    A,
    B,
    C,
    D,
}

impl OptLevel {
    pub const ALL: [OptLevel; 4] = [OptLevel::A, OptLevel::B, OptLevel::C, OptLevel::D];
}

impl std::fmt::Display for OptLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptLevel::A => "A",
            OptLevel::B => "B",
            OptLevel::C => "C",
            OptLevel::D => "D",
        })
    }
}

impl std::str::FromStr for OptLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(OptLevel::A),
            "B" => Ok(OptLevel::B),
            "C" => Ok(OptLevel::C),
            "D" => Ok(OptLevel::D),
            other => Err(Error::Config(format!("unknown optimization level {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    #[serde(rename = "weight")]
    Weight,
    #[serde(rename = "bias")]
    Bias,
}

/// One parameter's place in a layer's storage block: weights occupy flat
/// offsets `[0, out*in)` row-major, biases `[out*in, out*in + out)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSlot {
    pub layer: usize,
    pub kind: ParamKind,
    pub offset: usize,
}

/// Every parameter of the model exactly once, in upload order.
pub fn param_layout(arch: &ArchSpec) -> Vec<ParamSlot> {
    let mut layout = Vec::with_capacity(arch.n_params());
    for k in 0..arch.n_layers() {
        let n_w = arch.out_dim(k) * arch.in_dim(k);
        for offset in 0..n_w {
            layout.push(ParamSlot { layer: k, kind: ParamKind::Weight, offset });
        }
        for o in 0..arch.out_dim(k) {
            layout.push(ParamSlot { layer: k, kind: ParamKind::Bias, offset: n_w + o });
        }
    }
    layout
}

pub const SETTER_SIGNATURE: &str = "setWeights(uint256,uint256,int256[])";
pub const CLASSIFY_SIGNATURE: &str = "classify(int256[])";

/// Generated contract source plus its layout and signature metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractArtifact {
    pub source: String,
    pub opt_level: OptLevel,
    pub source_bytes: usize,
    pub param_layout: Vec<ParamSlot>,
    pub setter_signature: &'static str,
    pub classify_signature: &'static str,
    /// Compiled bytecode size when a compiler has been run on the source.
    pub compiled_size: Option<usize>,
}

#[derive(Serialize)]
struct LayoutDoc<'a> {
    opt_level: String,
    source_bytes: usize,
    functions: Vec<&'a str>,
    params: &'a [ParamSlot],
}

impl ContractArtifact {
    /// Layout JSON: level, size, exposed function signatures, and the
    /// per-parameter slot list.
    pub fn layout_json(&self) -> String {
        let doc = LayoutDoc {
            opt_level: self.opt_level.to_string(),
            source_bytes: self.source_bytes,
            functions: vec![self.setter_signature, self.classify_signature],
            params: &self.param_layout,
        };
        serde_json::to_string_pretty(&doc).expect("layout serialization")
    }
}

#[derive(Debug, Clone)]
pub struct CodegenOptions {
    /// Largest parameter block (weights + biases of one layer) a single
    /// setter target array may hold.
    pub max_layer_params: usize,
}

impl Default for CodegenOptions {
    fn default() -> Self {
        CodegenOptions { max_layer_params: 1 << 32 }
    }
}

/// Emits the inference contract for a quantized model at one level.
/// Deterministic: same model and level produce byte-identical source.
pub fn generate_contract(qm: &QuantizedModel, level: OptLevel) -> Result<ContractArtifact> {
    generate_contract_with(qm, level, &CodegenOptions::default())
}

pub fn generate_contract_with(
    qm: &QuantizedModel,
    level: OptLevel,
    opts: &CodegenOptions,
) -> Result<ContractArtifact> {
    let arch = qm.arch();
    for k in 0..arch.n_layers() {
        let block = arch.out_dim(k) * arch.in_dim(k) + arch.out_dim(k);
        if block > opts.max_layer_params {
            return Err(Error::Codegen(format!(
                "layer {k} has {block} parameters, above the setter limit {}",
                opts.max_layer_params
            )));
        }
    }
    let ir = lower::lower(arch, level);
    let source = emit::emit_contract(arch, &ir, level);
    Ok(ContractArtifact {
        source_bytes: source.len(),
        source,
        opt_level: level,
        param_layout: param_layout(arch),
        setter_signature: SETTER_SIGNATURE,
        classify_signature: CLASSIFY_SIGNATURE,
        compiled_size: None,
    })
}

/// Executes the generated program for `level` on a concrete input by
/// interpreting its IR, recording every fixed-point operation. This is the
/// structural oracle for cross-level equivalence and for agreement with
/// `infer::forward_fixed`.
pub fn trace_classify(qm: &QuantizedModel, level: OptLevel, input: &[Fp]) -> Result<ClassifyRun> {
    let arch = qm.arch();
    let params: Vec<Vec<num::BigInt>> = (0..arch.n_layers())
        .map(|k| qm.layer_params(k).into_iter().map(Fp::into_raw).collect())
        .collect();
    let raws: Vec<num::BigInt> = input.iter().map(|fp| fp.raw().clone()).collect();
    let ir = lower::lower(arch, level);
    ir::interpret(&ir, &params, &raws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infer::{argmax_fixed, forward_fixed_traced, quantize_model};
    use crate::model::Model;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_qmodel(input: usize, dims: Vec<usize>, seed: u64) -> QuantizedModel {
        let arch = ArchSpec::new(input, dims).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..arch.n_layers())
            .map(|k| {
                (0..arch.out_dim(k) * arch.in_dim(k)).map(|_| rng.gen_range(-1.0..1.0)).collect()
            })
            .collect();
        let biases = (0..arch.n_layers())
            .map(|k| (0..arch.out_dim(k)).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        quantize_model(&Model::new(arch, weights, biases).unwrap(), 18).unwrap()
    }

    #[test]
    fn generation_is_deterministic() {
        let qm = random_qmodel(6, vec![3, 10], 2);
        for level in OptLevel::ALL {
            let a = generate_contract(&qm, level).unwrap();
            let b = generate_contract(&qm, level).unwrap();
            assert_eq!(a.source, b.source);
            assert_eq!(a.source_bytes, a.source.len());
        }
    }

    #[test]
    fn source_sizes_decrease_with_level() {
        for dims in [vec![4, 10], vec![10], vec![8, 8, 10]] {
            let qm = random_qmodel(12, dims.clone(), 7);
            let sizes: Vec<usize> = OptLevel::ALL
                .iter()
                .map(|&l| generate_contract(&qm, l).unwrap().source_bytes)
                .collect();
            assert!(
                sizes[0] >= sizes[1] && sizes[1] >= sizes[2] && sizes[2] >= sizes[3],
                "sizes not non-increasing for {dims:?}: {sizes:?}"
            );
            assert!(sizes[0] > sizes[3], "A not strictly larger than D for {dims:?}: {sizes:?}");
        }
    }

    #[test]
    fn traces_identical_across_levels_and_match_simulator() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for trial in 0..5u64 {
            let input_dim = rng.gen_range(2..6);
            let hidden = rng.gen_range(2..5);
            let qm = random_qmodel(input_dim, vec![hidden, 4], 100 + trial);
            let x: Vec<Fp> = (0..input_dim)
                .map(|_| Fp::quantize(rng.gen_range(-1.0..1.0), 18).unwrap())
                .collect();

            let (logits, sim_ops) = forward_fixed_traced(&qm, &x).unwrap();
            let sim_class = argmax_fixed(&logits);

            let runs: Vec<ClassifyRun> = OptLevel::ALL
                .iter()
                .map(|&l| trace_classify(&qm, l, &x).unwrap())
                .collect();
            for run in &runs {
                assert_eq!(run.ops, sim_ops, "trace mismatch vs simulator");
                assert_eq!(run.class, sim_class);
                let logit_raws: Vec<_> = logits.iter().map(|fp| fp.raw().clone()).collect();
                assert_eq!(run.logits, logit_raws);
            }
            for pair in runs.windows(2) {
                assert_eq!(pair[0].ops, pair[1].ops);
            }
        }
    }

    #[test]
    fn interpreter_enforces_input_length() {
        let qm = random_qmodel(4, vec![2], 3);
        let short = vec![Fp::zero(); 3];
        assert!(trace_classify(&qm, OptLevel::B, &short).is_err());
    }

    #[test]
    fn layout_covers_every_parameter_once() {
        let arch = ArchSpec::new(784, vec![4, 10]).unwrap();
        let layout = param_layout(&arch);
        assert_eq!(layout.len(), 3190);
        // Weights then biases per layer, offsets contiguous within the block.
        let mut per_layer: Vec<Vec<&ParamSlot>> = vec![Vec::new(); 2];
        for slot in &layout {
            per_layer[slot.layer].push(slot);
        }
        for (k, slots) in per_layer.iter().enumerate() {
            let n_w = arch.out_dim(k) * arch.in_dim(k);
            for (i, slot) in slots.iter().enumerate() {
                assert_eq!(slot.offset, i);
                let expect = if i < n_w { ParamKind::Weight } else { ParamKind::Bias };
                assert_eq!(slot.kind, expect);
            }
        }
    }

    #[test]
    fn layer_param_limit_enforced() {
        let qm = random_qmodel(8, vec![4], 4);
        let opts = CodegenOptions { max_layer_params: 10 };
        assert!(matches!(
            generate_contract_with(&qm, OptLevel::A, &opts),
            Err(Error::Codegen(_))
        ));
    }

    #[test]
    fn level_parses_from_str() {
        assert_eq!("a".parse::<OptLevel>().unwrap(), OptLevel::A);
        assert_eq!("D".parse::<OptLevel>().unwrap(), OptLevel::D);
        assert!("E".parse::<OptLevel>().is_err());
    }

    #[test]
    fn layout_json_shape() {
        let qm = random_qmodel(2, vec![2], 6);
        let artifact = generate_contract(&qm, OptLevel::C).unwrap();
        let json = artifact.layout_json();
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["opt_level"], "C");
        assert_eq!(doc["functions"][0], SETTER_SIGNATURE);
        assert_eq!(doc["params"].as_array().unwrap().len(), 6);
        assert_eq!(doc["params"][0]["kind"], "weight");
    }
}
