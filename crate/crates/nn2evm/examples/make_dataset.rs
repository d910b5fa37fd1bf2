//! Synthesizes a deterministic digit dataset and writes it as standard IDX
//! files (train + test pairs), ready for the `nn2evm` CLI or any MNIST
//! tooling. Pass an output directory (default `nn2evm-out`).

use std::path::PathBuf;

use nn2evm::mnist::{write_idx_images, write_idx_labels};
use nn2evm::synth;

fn main() -> nn2evm::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "nn2evm-out".into()).into();
    std::fs::create_dir_all(&out)?;

    let (train_images, train_labels) = synth::generate(6_000, 1);
    let (test_images, test_labels) = synth::generate(1_000, 2);

    for (name, bytes) in [
        ("train-images-idx3-ubyte", write_idx_images(&train_images)),
        ("train-labels-idx1-ubyte", write_idx_labels(&train_labels)),
        ("t10k-images-idx3-ubyte", write_idx_images(&test_images)),
        ("t10k-labels-idx1-ubyte", write_idx_labels(&test_labels)),
    ] {
        let path = out.join(name);
        std::fs::write(&path, &bytes)?;
        println!("wrote {} ({} bytes)", path.display(), bytes.len());
    }
    Ok(())
}
