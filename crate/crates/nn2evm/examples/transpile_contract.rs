//! Emits the inference contract at all four optimization levels for a small
//! fixed model and shows that the source shrinks A -> D while the recorded
//! arithmetic stays identical.

use std::path::PathBuf;

use nn2evm::codegen::{generate_contract, trace_classify, OptLevel};
use nn2evm::fixed::Fp;
use nn2evm::infer::quantize_model;
use nn2evm::model::{ArchSpec, Model};

fn main() -> nn2evm::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "nn2evm-out".into()).into();
    std::fs::create_dir_all(&out)?;

    let arch = ArchSpec::new(1, vec![2, 2])?;
    let model = Model::new(
        arch,
        vec![vec![0.5, -0.25], vec![1.0, -0.5, 0.25, 0.75]],
        vec![vec![0.125, 0.0625], vec![-0.03125, 0.015625]],
    )?;
    let qm = quantize_model(&model, 18)?;
    let input = vec![Fp::from_decimal("1")?];

    let mut reference_ops = None;
    for level in OptLevel::ALL {
        let artifact = generate_contract(&qm, level)?;
        let path = out.join(format!("contract_{level}.sol"));
        std::fs::write(&path, &artifact.source)?;

        let run = trace_classify(&qm, level, &input)?;
        let ops = run.ops.len();
        match &reference_ops {
            None => reference_ops = Some(run.ops),
            Some(reference) => assert_eq!(reference, &run.ops, "levels must agree"),
        }
        println!(
            "level {level}: {:>5} source bytes, {ops} fp ops, class {} -> {}",
            artifact.source_bytes,
            run.class,
            path.display()
        );
    }
    println!("all four levels computed the identical fp_mul/fp_add sequence");
    Ok(())
}
