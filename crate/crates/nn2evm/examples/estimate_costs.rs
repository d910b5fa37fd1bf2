//! Predicts deployment and weight-upload gas for the 784-4-10 model and
//! converts to ETH/USD at 4 gwei and $2,500 per ETH. Classification itself
//! is a view call and costs nothing.

use nn2evm::codegen::{generate_contract, plan_weight_upload, solc, OptLevel};
use nn2evm::gas::{deploy_report, reports_to_csv, upload_report, GasConfig};
use nn2evm::infer::quantize_model;
use nn2evm::report::seeded_model;

fn main() -> nn2evm::Result<()> {
    let cfg = GasConfig::default();
    let model = seeded_model(784, 4, 10, 42)?;
    let qm = quantize_model(&model, 18)?;

    let mut artifact = generate_contract(&qm, OptLevel::D)?;
    if let Some(compiler) = solc::detect_compiler() {
        let dir = tempfile::tempdir()?;
        let size = solc::compile(&compiler, &artifact.source, dir.path())?;
        println!("compiled with {compiler}: {size} bytecode bytes");
        artifact.compiled_size = Some(size);
    } else {
        println!("no Solidity compiler found; sizing bytecode from source length");
    }

    let plan = plan_weight_upload(&qm, &cfg, 15_000_000, 0.9)?;
    let reports = vec![deploy_report(&artifact, &cfg), upload_report(&plan, &cfg)];
    print!("{}", reports_to_csv(&reports));
    println!("Classification,0,0.0000,0.00");
    Ok(())
}
