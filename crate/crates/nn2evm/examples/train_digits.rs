//! Trains a 784-4-10 MLP on synthetic digits, reports train/test accuracy,
//! and saves the weight manifest for the other examples and the CLI.

use std::path::PathBuf;

use nn2evm::infer::evaluate_float;
use nn2evm::model::parse_arch_notation;
use nn2evm::synth;
use nn2evm::train::{train_mlp, HyperParams};

fn main() -> nn2evm::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "nn2evm-out".into()).into();
    std::fs::create_dir_all(&out)?;

    let arch = parse_arch_notation("2L4N10N", 784)?;
    let (train_images, train_labels) = synth::generate(6_000, 1);
    let (test_images, test_labels) = synth::generate(1_000, 2);

    let hp = HyperParams::default();
    println!(
        "training {} on {} images ({} epochs, batch {}, lr {}, seed {})...",
        arch.notation(),
        train_images.count(),
        hp.epochs,
        hp.batch_size,
        hp.learning_rate,
        hp.seed
    );
    let model = train_mlp(&arch, &train_images, &train_labels, &hp)?;

    let train_acc = evaluate_float(&model, &train_images, &train_labels, 6_000)?;
    let test_acc = evaluate_float(&model, &test_images, &test_labels, 1_000)?;
    println!("train accuracy {:.4}", train_acc.accuracy());
    println!("test accuracy  {:.4}", test_acc.accuracy());

    let path = out.join("model.json");
    model.save_manifest(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
