//! Transaction-split planning for the weight upload: greedy in-order packing
//! of parameter values into setWeights calls, each kept under
//! `margin * gas_limit` by the static gas model.

use num::bigint::BigInt;
use num::{Integer, One};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::{CalldataStats, GasConfig};
use crate::infer::QuantizedModel;

/// Fixed stand-in for the setWeights function selector; modeled as four
/// nonzero bytes in gas accounting.
pub const SETTER_SELECTOR: [u8; 4] = [0x73, 0x3c, 0x5d, 0xaa];

/// One setWeights transaction. `layer` and `offset` address the first value
/// (offset is local to that layer's block); since layer blocks sit back to
/// back in contract storage, a batch's values may run past the block into
/// the following layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub layer: usize,
    pub offset: usize,
    pub values: Vec<BigInt>,
}

fn abi_word_uint(v: u128) -> [u8; 32] {
    let mut w = [0u8; 32];
    w[16..].copy_from_slice(&v.to_be_bytes());
    w
}

/// 32-byte big-endian two's complement of a value with `|v| < 2^255`.
fn abi_word_int(v: &BigInt) -> [u8; 32] {
    let modulus = BigInt::one() << 256;
    let rep = v.mod_floor(&modulus);
    let (_, bytes) = rep.to_bytes_be();
    let mut w = [0u8; 32];
    w[32 - bytes.len()..].copy_from_slice(&bytes);
    w
}

impl Batch {
    /// ABI-encoded `setWeights(uint256,uint256,int256[])` calldata.
    pub fn abi_calldata(&self) -> Vec<u8> {
        let mut data = Vec::with_capacity(4 + 32 * (4 + self.values.len()));
        data.extend_from_slice(&SETTER_SELECTOR);
        data.extend_from_slice(&abi_word_uint(self.layer as u128));
        data.extend_from_slice(&abi_word_uint(self.offset as u128));
        data.extend_from_slice(&abi_word_uint(0x60));
        data.extend_from_slice(&abi_word_uint(self.values.len() as u128));
        for v in &self.values {
            data.extend_from_slice(&abi_word_int(v));
        }
        data
    }
}

/// Ordered upload schedule; concatenating the batches reproduces every
/// parameter value in layout order exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlan {
    pub gas_limit: u64,
    pub margin: f64,
    pub batches: Vec<Batch>,
}

#[derive(Serialize, Deserialize)]
struct PlanDoc {
    gas_limit: u64,
    margin: f64,
    batches: Vec<BatchDoc>,
}

#[derive(Serialize, Deserialize)]
struct BatchDoc {
    layer: usize,
    offset: usize,
    values: Vec<String>,
}

impl BatchPlan {
    pub fn total_params(&self) -> usize {
        self.batches.iter().map(|b| b.values.len()).sum()
    }

    /// All values in upload order.
    pub fn values_in_order(&self) -> Vec<&BigInt> {
        self.batches.iter().flat_map(|b| b.values.iter()).collect()
    }

    /// Checks the plan is a disjoint in-order cover of the model's parameter
    /// layout: each batch starts exactly where the previous one ended and the
    /// final batch ends at the last parameter.
    pub fn validate_cover(&self, arch: &crate::model::ArchSpec) -> Result<()> {
        let base = |k: usize| crate::codegen::emit::layer_base(arch, k);
        let mut expected = 0usize;
        for (i, b) in self.batches.iter().enumerate() {
            if b.layer >= arch.n_layers() {
                return Err(Error::Shape(format!("batch {i} references layer {}", b.layer)));
            }
            let block = arch.out_dim(b.layer) * arch.in_dim(b.layer) + arch.out_dim(b.layer);
            if b.offset >= block {
                return Err(Error::Shape(format!(
                    "batch {i} offset {} outside layer {} block of {block}",
                    b.offset, b.layer
                )));
            }
            let start = base(b.layer) + b.offset;
            if start != expected {
                return Err(Error::Shape(format!(
                    "batch {i} starts at flat slot {start}, expected {expected}"
                )));
            }
            expected += b.values.len();
        }
        if expected != arch.n_params() {
            return Err(Error::Shape(format!(
                "plan covers {expected} parameters, model has {}",
                arch.n_params()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = PlanDoc {
            gas_limit: self.gas_limit,
            margin: self.margin,
            batches: self
                .batches
                .iter()
                .map(|b| BatchDoc {
                    layer: b.layer,
                    offset: b.offset,
                    values: b.values.iter().map(|v| v.to_string()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("plan serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PlanDoc = serde_json::from_str(text)?;
        let batches = doc
            .batches
            .into_iter()
            .map(|b| {
                let values = b
                    .values
                    .iter()
                    .map(|s| {
                        s.parse::<BigInt>()
                            .map_err(|_| Error::Shape(format!("unparseable raw value {s:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Batch { layer: b.layer, offset: b.offset, values })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BatchPlan { gas_limit: doc.gas_limit, margin: doc.margin, batches })
    }
}

fn word_stats(word: &[u8; 32]) -> CalldataStats {
    CalldataStats::from_bytes(word)
}

fn stats_cost(cfg: &GasConfig, stats: CalldataStats) -> u64 {
    stats.nonzero * cfg.calldata_nonzero_byte + stats.zero * cfg.calldata_zero_byte
}

/// Greedy in-order packer over the global value list. Each entry carries the
/// (layer, local offset) address of its slot; each batch's gas, computed with
/// real ABI-encoded calldata, stays within `budget`.
fn pack_batches(
    entries: &[(usize, usize, BigInt)],
    cfg: &GasConfig,
    budget: u64,
) -> Result<Vec<Batch>> {
    let selector_cost = 4 * cfg.calldata_nonzero_byte;
    let ptr_cost = stats_cost(cfg, word_stats(&abi_word_uint(0x60)));
    let slot_cost = cfg.sstore_new_slot + cfg.sstore_cold_access + cfg.exec_overhead_per_word;

    let mut batches = Vec::new();
    let mut pos = 0usize;
    while pos < entries.len() {
        let (layer, offset, _) = entries[pos];
        let head = cfg.tx_intrinsic
            + selector_cost
            + stats_cost(cfg, word_stats(&abi_word_uint(layer as u128)))
            + stats_cost(cfg, word_stats(&abi_word_uint(offset as u128)))
            + ptr_cost;
        let mut value_cost = 0u64;
        let mut n = 0usize;
        while pos + n < entries.len() {
            let candidate_value_cost =
                value_cost + stats_cost(cfg, word_stats(&abi_word_int(&entries[pos + n].2)));
            let len_cost = stats_cost(cfg, word_stats(&abi_word_uint((n + 1) as u128)));
            let gas = head + len_cost + candidate_value_cost + (n as u64 + 1) * slot_cost;
            if gas > budget {
                break;
            }
            value_cost = candidate_value_cost;
            n += 1;
        }
        if n == 0 {
            return Err(Error::Infeasible(format!(
                "parameter at layer {layer} offset {offset} alone exceeds the per-transaction budget {budget}"
            )));
        }
        batches.push(Batch {
            layer,
            offset,
            values: entries[pos..pos + n].iter().map(|(_, _, v)| v.clone()).collect(),
        });
        pos += n;
    }
    Ok(batches)
}

/// Plans the weight upload for a quantized model: values in parameter-layout
/// order (per layer: weights row-major, then biases), split greedily so every
/// transaction's estimated gas is at most `margin * gas_limit`.
pub fn plan_weight_upload(
    qm: &QuantizedModel,
    cfg: &GasConfig,
    gas_limit: u64,
    margin: f64,
) -> Result<BatchPlan> {
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(Error::Config(format!("margin {margin} outside (0, 1]")));
    }
    if gas_limit <= cfg.tx_intrinsic {
        return Err(Error::Infeasible(format!(
            "gas limit {gas_limit} does not cover the intrinsic transaction cost"
        )));
    }
    let budget = (margin * gas_limit as f64).floor() as u64;
    let mut entries = Vec::with_capacity(qm.arch().n_params());
    for k in 0..qm.arch().n_layers() {
        for (i, fp) in qm.layer_params(k).into_iter().enumerate() {
            entries.push((k, i, fp.into_raw()));
        }
    }
    let batches = pack_batches(&entries, cfg, budget)?;
    Ok(BatchPlan { gas_limit, margin, batches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::estimate_tx_gas;
    use crate::infer::quantize_model;
    use crate::model::{ArchSpec, Model};
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
        let model = Model::new(arch, weights, biases).unwrap();
        quantize_model(&model, 18).unwrap()
    }

    #[test]
    fn empty_layout_gives_empty_plan() {
        let cfg = GasConfig::default();
        let batches = pack_batches(&[], &cfg, 1_000_000).unwrap();
        assert!(batches.is_empty());
    }

    #[test]
    fn incremental_accounting_matches_encoded_calldata() {
        let cfg = GasConfig::default();
        let qm = random_qmodel(9, vec![5, 10], 3);
        let plan = plan_weight_upload(&qm, &cfg, 200_000, 0.9).unwrap();
        assert!(plan.batches.len() > 1);
        let budget = (0.9 * 200_000f64).floor() as u64;
        for b in &plan.batches {
            let gas = estimate_tx_gas(
                &cfg,
                CalldataStats::from_bytes(&b.abi_calldata()),
                b.values.len() as u64,
            );
            assert!(gas <= budget, "batch gas {gas} over budget {budget}");
        }
    }

    #[test]
    fn flatten_reproduces_layout_order() {
        let cfg = GasConfig::default();
        let qm = random_qmodel(7, vec![4, 10], 5);
        let plan = plan_weight_upload(&qm, &cfg, 150_000, 0.8).unwrap();
        plan.validate_cover(qm.arch()).unwrap();
        let flat = plan.values_in_order();
        let mut expected = Vec::new();
        for k in 0..qm.arch().n_layers() {
            for fp in qm.layer_params(k) {
                expected.push(fp.into_raw());
            }
        }
        assert_eq!(flat.len(), expected.len());
        for (got, want) in flat.iter().zip(expected.iter()) {
            assert_eq!(*got, want);
        }
    }

    #[test]
    fn generous_limit_packs_everything_into_one_batch() {
        let cfg = GasConfig::default();
        let qm = random_qmodel(3, vec![2, 2, 10], 8);
        let plan = plan_weight_upload(&qm, &cfg, 67_500_000_000, 0.9).unwrap();
        assert_eq!(plan.batches.len(), 1);
        assert_eq!(plan.batches[0].layer, 0);
        assert_eq!(plan.batches[0].offset, 0);
        plan.validate_cover(qm.arch()).unwrap();
    }

    #[test]
    fn cover_validation_rejects_gaps() {
        let cfg = GasConfig::default();
        let qm = random_qmodel(3, vec![2, 2], 4);
        let mut plan = plan_weight_upload(&qm, &cfg, 15_000_000, 0.9).unwrap();
        plan.batches[0].values.pop();
        assert!(plan.validate_cover(qm.arch()).is_err());
    }

    #[test]
    fn single_parameter_too_large_is_infeasible() {
        let cfg = GasConfig::default();
        let qm = random_qmodel(2, vec![2], 1);
        // Budget below one slot write.
        match plan_weight_upload(&qm, &cfg, 40_000, 0.5) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn margin_validation() {
        let cfg = GasConfig::default();
        let qm = random_qmodel(2, vec![2], 1);
        assert!(plan_weight_upload(&qm, &cfg, 100_000, 0.0).is_err());
        assert!(plan_weight_upload(&qm, &cfg, 100_000, 1.5).is_err());
        assert!(plan_weight_upload(&qm, &cfg, 21_000, 0.9).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let cfg = GasConfig::default();
        let qm = random_qmodel(4, vec![3], 9);
        let plan = plan_weight_upload(&qm, &cfg, 15_000_000, 0.9).unwrap();
        let json = plan.to_json();
        let back = BatchPlan::from_json(&json).unwrap();
        assert_eq!(back, plan);
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn abi_word_encoding() {
        let w = abi_word_uint(0x60);
        assert_eq!(w[31], 0x60);
        assert!(w[..31].iter().all(|&b| b == 0));

        let minus_one = abi_word_int(&BigInt::from(-1));
        assert!(minus_one.iter().all(|&b| b == 0xff));

        let v = abi_word_int(&BigInt::from(1_500_000_000_000_000_000_i64));
        assert_eq!(BigInt::from_bytes_be(num::bigint::Sign::Plus, &v), BigInt::from(1_500_000_000_000_000_000_i64));

        let neg = abi_word_int(&BigInt::from(-42));
        // Two's complement: 2^256 - 42.
        let expected = (BigInt::one() << 256) - 42;
        assert_eq!(BigInt::from_bytes_be(num::bigint::Sign::Plus, &neg), expected);
    }
}
