//! Sweeps the hidden-layer width and reports deployment and upload gas per
//! model: deployment stays flat while upload grows linearly with each neuron
//! (every extra neuron adds 795 parameters, each one storage slot).

use nn2evm::codegen::{generate_contract, plan_weight_upload, OptLevel};
use nn2evm::gas::{estimate_deploy_gas, estimate_upload_gas, GasConfig};
use nn2evm::infer::quantize_model;
use nn2evm::report::{linear_fit, seeded_model};

fn main() -> nn2evm::Result<()> {
    let cfg = GasConfig::default();
    let sizes = [2usize, 4, 8, 16, 32];

    println!("hidden_neurons,n_params,deploy_gas,upload_gas");
    let mut params = Vec::new();
    let mut upload = Vec::new();
    for &h in &sizes {
        let model = seeded_model(784, h, 10, 42)?;
        let qm = quantize_model(&model, 18)?;
        let artifact = generate_contract(&qm, OptLevel::D)?;
        let plan = plan_weight_upload(&qm, &cfg, 15_000_000, 0.9)?;
        let deploy = estimate_deploy_gas(&artifact, &cfg);
        let up = estimate_upload_gas(&plan, &cfg);
        println!("{h},{},{deploy},{up}", model.arch().n_params());
        params.push(model.arch().n_params() as f64);
        upload.push(up as f64);
    }

    let (slope, intercept, r2) = linear_fit(&params, &upload);
    println!("# upload gas ~= {slope:.0} * n_params + {intercept:.0} (r2 = {r2:.6})");
    Ok(())
}
