//! Compile trained multi-layer perceptrons into EVM inference contracts.
//!
//! The pipeline: parse MNIST-format IDX data, train an MLP with mini-batch
//! SGD, quantize the weights to signed 18-decimal fixed point, emit
//! self-contained Solidity at four gas-optimization levels, plan the
//! transaction-split weight upload under a block gas limit, and predict
//! gas and fiat costs. A bit-exact fixed-point simulator reproduces the
//! contract's arithmetic off-chain, so on-chain/off-chain accuracy claims
//! can be verified without a blockchain.
//!
//! ## Runnable examples
//!
//! One example per capability, under `examples/`:
//!
//! ```bash
//! cargo run --release -p nn2evm --example make_dataset      # synthesize IDX digit files
//! cargo run --release -p nn2evm --example train_digits      # train and save a manifest
//! cargo run --release -p nn2evm --example fixed_vs_float    # compare both inference modes
//! cargo run --release -p nn2evm --example transpile_contract # emit levels A-D
//! cargo run --release -p nn2evm --example plan_upload       # batch the weight upload
//! cargo run --release -p nn2evm --example estimate_costs    # gas and fiat prediction
//! cargo run --release -p nn2evm --example precision_sweep   # accuracy vs quantization
//! cargo run --release -p nn2evm --example complexity_vs_gas # gas vs hidden width
//! ```
//!
//! The same capabilities are scriptable through the `nn2evm` binary; see the
//! README for subcommands and flags.

pub mod cli;
pub mod codegen;
pub mod error;
pub mod fixed;
pub mod gas;
pub mod infer;
pub mod mnist;
pub mod model;
pub mod report;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
