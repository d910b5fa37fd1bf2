//! Static EVM gas cost model for deployment and weight upload, plus fiat
//! conversion. A calibrated formula stands in for execution on a node:
//! `exec_overhead_per_word` and `bytecode_ratio` are explicit calibration
//! constants, overridable like every other field.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::ToPrimitive;

use crate::codegen::upload::BatchPlan;
use crate::codegen::ContractArtifact;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GasConfig {
    pub tx_intrinsic: u64,
    pub calldata_nonzero_byte: u64,
    pub calldata_zero_byte: u64,
    pub sstore_new_slot: u64,
    pub sstore_cold_access: u64,
    pub create_overhead: u64,
    pub code_deposit_per_byte: u64,
    /// Calibration: execution overhead charged per stored word.
    pub exec_overhead_per_word: u64,
    /// Calibration: source-to-bytecode size ratio used when no compiled size
    /// is known.
    pub bytecode_ratio: f64,
    pub gas_price_gwei: f64,
    pub eth_usd: f64,
}

impl Default for GasConfig {
    fn default() -> Self {
        GasConfig {
            tx_intrinsic: 21_000,
            calldata_nonzero_byte: 16,
            calldata_zero_byte: 4,
            sstore_new_slot: 20_000,
            sstore_cold_access: 2_100,
            create_overhead: 32_000,
            code_deposit_per_byte: 200,
            exec_overhead_per_word: 500,
            bytecode_ratio: 0.30,
            gas_price_gwei: 4.0,
            eth_usd: 2_500.0,
        }
    }
}

impl GasConfig {
    pub fn validate(&self) -> Result<()> {
        let ints = [
            self.tx_intrinsic,
            self.calldata_nonzero_byte,
            self.calldata_zero_byte,
            self.sstore_new_slot,
            self.sstore_cold_access,
            self.create_overhead,
            self.code_deposit_per_byte,
            self.exec_overhead_per_word,
        ];
        if ints.contains(&0) {
            return Err(Error::Config("gas constants must be positive".into()));
        }
        if !(self.bytecode_ratio > 0.0 && self.gas_price_gwei > 0.0 && self.eth_usd > 0.0) {
            return Err(Error::Config("ratios and prices must be positive".into()));
        }
        Ok(())
    }
}

/// Zero/nonzero byte counts of a transaction payload.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CalldataStats {
    pub zero: u64,
    pub nonzero: u64,
}

impl CalldataStats {
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let zero = bytes.iter().filter(|&&b| b == 0).count() as u64;
        CalldataStats { zero, nonzero: bytes.len() as u64 - zero }
    }

    pub fn total(&self) -> u64 {
        self.zero + self.nonzero
    }
}

/// Gas for one transaction: intrinsic cost, calldata byte costs, and per
/// fresh slot the SSTORE-new, cold-access, and execution-overhead charges.
pub fn estimate_tx_gas(cfg: &GasConfig, calldata: CalldataStats, fresh_slots: u64) -> u64 {
    cfg.tx_intrinsic
        + calldata.nonzero * cfg.calldata_nonzero_byte
        + calldata.zero * cfg.calldata_zero_byte
        + fresh_slots * (cfg.sstore_new_slot + cfg.sstore_cold_access)
        + fresh_slots * cfg.exec_overhead_per_word
}

/// One costed pipeline phase.
#[derive(Debug, Clone, PartialEq)]
pub struct GasReport {
    pub phase: String,
    pub gas_used: u64,
    pub eth_cost: f64,
    pub usd_cost: f64,
}

impl GasReport {
    pub fn new(phase: impl Into<String>, gas_used: u64, cfg: &GasConfig) -> Self {
        let (eth_cost, usd_cost) = to_fiat(gas_used, cfg.gas_price_gwei, cfg.eth_usd);
        GasReport { phase: phase.into(), gas_used, eth_cost, usd_cost }
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{:.4},{:.2}", self.phase, self.gas_used, self.eth_cost, self.usd_cost)
    }
}

pub fn reports_to_csv(reports: &[GasReport]) -> String {
    let mut s = String::from("phase,gas,eth,usd\n");
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Converts gas to (ETH, USD): `eth = gas * gwei * 1e-9`, `usd = eth * rate`,
/// rounded half-up to 4 and 2 decimal places respectively. Rounding happens
/// in exact rational arithmetic.
pub fn to_fiat(gas: u64, gas_price_gwei: f64, eth_usd: f64) -> (f64, f64) {
    let gwei = BigRational::from_float(gas_price_gwei).unwrap_or_default();
    let rate = BigRational::from_float(eth_usd).unwrap_or_default();
    let eth_exact = BigRational::from_integer(BigInt::from(gas)) * gwei
        / BigRational::from_integer(BigInt::from(1_000_000_000_u64));
    let usd_exact = eth_exact.clone() * rate;

    let eth_e4 = (eth_exact * BigRational::from_integer(BigInt::from(10_000)))
        .round()
        .to_integer();
    let usd_e2 = (usd_exact * BigRational::from_integer(BigInt::from(100))).round().to_integer();
    (
        eth_e4.to_f64().unwrap_or(f64::NAN) / 1e4,
        usd_e2.to_f64().unwrap_or(f64::NAN) / 1e2,
    )
}

/// Total upload gas: one [`estimate_tx_gas`] per batch, with the batch's
/// actual ABI-encoded calldata and one fresh slot per value.
pub fn estimate_upload_gas(plan: &BatchPlan, cfg: &GasConfig) -> u64 {
    plan.batches
        .iter()
        .map(|b| {
            let stats = CalldataStats::from_bytes(&b.abi_calldata());
            estimate_tx_gas(cfg, stats, b.values.len() as u64)
        })
        .sum()
}

/// Upload gas as a costed report row.
pub fn upload_report(plan: &BatchPlan, cfg: &GasConfig) -> GasReport {
    GasReport::new("Uploading Weights", estimate_upload_gas(plan, cfg), cfg)
}

/// Bytecode size used for deployment estimates: the compiled size when one
/// is recorded on the artifact, else `ceil(bytecode_ratio * source_bytes)`.
pub fn estimated_bytecode_bytes(artifact: &ContractArtifact, cfg: &GasConfig) -> u64 {
    match artifact.compiled_size {
        Some(n) => n as u64,
        None => (cfg.bytecode_ratio * artifact.source_bytes as f64).ceil() as u64,
    }
}

/// Deployment gas: intrinsic + CREATE overhead + code deposit + init
/// calldata, with init calldata modeled as all-nonzero bytecode bytes.
pub fn estimate_deploy_gas(artifact: &ContractArtifact, cfg: &GasConfig) -> u64 {
    let bytecode = estimated_bytecode_bytes(artifact, cfg);
    cfg.tx_intrinsic
        + cfg.create_overhead
        + bytecode * cfg.code_deposit_per_byte
        + bytecode * cfg.calldata_nonzero_byte
}

pub fn deploy_report(artifact: &ContractArtifact, cfg: &GasConfig) -> GasReport {
    GasReport::new("Deployment", estimate_deploy_gas(artifact, cfg), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tx_gas_examples() {
        let cfg = GasConfig::default();
        assert_eq!(estimate_tx_gas(&cfg, CalldataStats::default(), 0), 21_000);
        assert_eq!(
            estimate_tx_gas(&cfg, CalldataStats { zero: 0, nonzero: 32 }, 1),
            21_000 + 512 + 22_100 + 500
        );
        assert_eq!(estimate_tx_gas(&cfg, CalldataStats { zero: 100, nonzero: 0 }, 0), 21_400);
    }

    #[test]
    fn fiat_reproduces_reference_costs() {
        let (eth, usd) = to_fiat(73_721_648, 4.0, 2_500.0);
        assert_eq!(format!("{eth:.4}"), "0.2949");
        assert_eq!(format!("{usd:.2}"), "737.22");

        let (eth, usd) = to_fiat(1_339_833, 4.0, 2_500.0);
        assert_eq!(format!("{eth:.4}"), "0.0054");
        assert_eq!(format!("{usd:.2}"), "13.40");

        let (eth, usd) = to_fiat(0, 9.0, 3_000.0);
        assert_eq!(eth, 0.0);
        assert_eq!(usd, 0.0);
    }

    #[test]
    fn fiat_rounds_half_up() {
        // 125,000 gas at 4 gwei = 0.0005 ETH = 1.25 USD at 2500; the ETH
        // figure sits exactly on a 4-decimal grid point.
        let (eth, usd) = to_fiat(125_000, 4.0, 2_500.0);
        assert_eq!(format!("{eth:.4}"), "0.0005");
        assert_eq!(format!("{usd:.2}"), "1.25");
        // 112,500 gas at 4 gwei = 0.00045 ETH, a half-way case -> 0.0005.
        let (eth, _) = to_fiat(112_500, 4.0, 2_500.0);
        assert_eq!(format!("{eth:.4}"), "0.0005");
    }

    #[test]
    fn fiat_linear_in_gas() {
        let (e1, u1) = to_fiat(1_000_000, 4.0, 2_500.0);
        let (e2, u2) = to_fiat(2_000_000, 4.0, 2_500.0);
        assert!((e2 - 2.0 * e1).abs() < 1e-12);
        assert!((u2 - 2.0 * u1).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(GasConfig::default().validate().is_ok());
        let bad = GasConfig { tx_intrinsic: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = GasConfig { eth_usd: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
