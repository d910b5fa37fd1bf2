//! Splits the 784-4-10 weight upload into transactions under the mainnet
//! block gas limit and prints the per-batch gas, then shows that a raised
//! local-network limit collapses the plan to a single transaction.

use std::path::PathBuf;

use nn2evm::codegen::plan_weight_upload;
use nn2evm::gas::{estimate_tx_gas, estimate_upload_gas, CalldataStats, GasConfig};
use nn2evm::infer::quantize_model;
use nn2evm::report::seeded_model;

fn main() -> nn2evm::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "nn2evm-out".into()).into();
    std::fs::create_dir_all(&out)?;

    let cfg = GasConfig::default();
    let model = seeded_model(784, 4, 10, 42)?;
    let qm = quantize_model(&model, 18)?;

    let mainnet = plan_weight_upload(&qm, &cfg, 15_000_000, 0.9)?;
    println!("mainnet limit 15M gas, margin 0.9:");
    for (i, b) in mainnet.batches.iter().enumerate() {
        let gas = estimate_tx_gas(
            &cfg,
            CalldataStats::from_bytes(&b.abi_calldata()),
            b.values.len() as u64,
        );
        println!("  batch {i}: layer {} offset {:>5} x{:>4} values, {gas} gas", b.layer, b.offset, b.values.len());
    }
    println!("  total: {} gas over {} batches", estimate_upload_gas(&mainnet, &cfg), mainnet.batches.len());

    let raised = plan_weight_upload(&qm, &cfg, 67_500_000_000, 0.9)?;
    println!("raised local limit 6.75e10: {} batch(es) for all {} parameters", raised.batches.len(), raised.total_params());

    let path = out.join("plan.json");
    std::fs::write(&path, mainnet.to_json())?;
    println!("wrote {}", path.display());
    Ok(())
}
