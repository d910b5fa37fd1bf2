//! Runs one image through both inference modes: the double-precision
//! reference and the fixed-point simulation of the generated contract,
//! printing logits side by side so the quantization gap is visible.

use nn2evm::infer::{
    argmax_fixed, argmax_float, forward_fixed, forward_float, quantize_input, quantize_model,
};
use nn2evm::mnist::normalize_pixels;
use nn2evm::model::parse_arch_notation;
use nn2evm::synth;
use nn2evm::train::{train_mlp, HyperParams};

fn main() -> nn2evm::Result<()> {
    let arch = parse_arch_notation("2L4N10N", 784)?;
    let (images, labels) = synth::generate(512, 1);
    let hp = HyperParams { epochs: 5, ..Default::default() };
    let model = train_mlp(&arch, &images, &labels, &hp)?;
    let qm = quantize_model(&model, 18)?;

    let (probe_images, probe_labels) = synth::generate(1, 9);
    let raw = probe_images.image(0);

    let xf = normalize_pixels(raw, 784)?;
    let float_logits = forward_float(&model, &xf)?;
    let xq = quantize_input(raw);
    let fixed_logits = forward_fixed(&qm, &xq)?;

    println!("label: {}", probe_labels.label(0));
    println!("{:>5} {:>24} {:>26}", "class", "float logit", "fixed logit (18 dec)");
    for (c, (f, q)) in float_logits.iter().zip(fixed_logits.iter()).enumerate() {
        println!("{c:>5} {f:>24.12} {:>26}", q.to_decimal());
    }
    println!("predicted: float {} | fixed {}", argmax_float(&float_logits), argmax_fixed(&fixed_logits));
    Ok(())
}
