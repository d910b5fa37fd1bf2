//! Trains a model, then sweeps the weight-quantization precision from 18
//! down to 0 decimal digits and counts correct fixed-point predictions on
//! 40 test images. Internal arithmetic always stays at 18 decimals.

use nn2evm::infer::precision_sweep;
use nn2evm::model::parse_arch_notation;
use nn2evm::synth;
use nn2evm::train::{train_mlp, HyperParams};

fn main() -> nn2evm::Result<()> {
    let arch = parse_arch_notation("2L4N10N", 784)?;
    let (train_images, train_labels) = synth::generate(2_000, 1);
    let (test_images, test_labels) = synth::generate(40, 2);

    let hp = HyperParams { epochs: 10, ..Default::default() };
    let model = train_mlp(&arch, &train_images, &train_labels, &hp)?;

    let sweep = precision_sweep(&model, &test_images, &test_labels, &[18, 10, 4, 2, 1, 0], 40)?;
    print!("{}", sweep.to_csv());
    Ok(())
}
