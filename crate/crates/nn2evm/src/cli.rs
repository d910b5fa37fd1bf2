//! Command-line pipeline driver. Every subcommand is a thin wrapper over the
//! library and writes only inside the `--out` directory; identical flags and
//! seed produce byte-identical outputs.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::codegen::{self, solc, OptLevel};
use crate::error::{Error, Result};
use crate::gas::{self, GasConfig, GasReport};
use crate::infer;
use crate::mnist;
use crate::model::{parse_arch_notation, ArchSpec, Model};
use crate::train::{train_mlp, HyperParams};

#[derive(Parser)]
#[command(name = "nn2evm", version, about = "Compile trained MLPs into EVM inference contracts")]
struct Cli {
    /// TOML config file supplying defaults for the common flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an MLP on IDX data and write its weight manifest.
    Train(TrainArgs),
    /// Generate contract source and layout metadata at one or all levels.
    Transpile(TranspileArgs),
    /// Plan the transaction-split weight upload under a gas limit.
    PlanUpload(PlanArgs),
    /// Estimate deployment and upload gas with fiat conversion.
    EstimateGas(EstimateArgs),
    /// Classify one image in float and fixed modes.
    Infer(InferArgs),
    /// Accuracy over a test set in both modes, with disagreements.
    Evaluate(EvaluateArgs),
    /// Correct predictions per quantization precision.
    SweepPrecision(SweepArgs),
    /// Gas versus model complexity across a family of hidden sizes.
    Report(ReportArgs),
}

/// Config-file keys; every flag of the same name overrides its entry.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    arch: Option<String>,
    input_dim: Option<usize>,
    precision: Option<u32>,
    level: Option<String>,
    gas_limit: Option<u64>,
    margin: Option<f64>,
    gas_price_gwei: Option<f64>,
    eth_usd: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    fn level(&self) -> Result<Option<OptLevel>> {
        self.level.as_deref().map(str::parse).transpose()
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Quantization precision in decimal digits (0..=18).
    #[arg(long)]
    precision: Option<u32>,
    /// Block gas limit for upload planning.
    #[arg(long)]
    gas_limit: Option<u64>,
    /// Per-transaction budget as a fraction of the gas limit, in (0, 1].
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    gas_price_gwei: Option<f64>,
    #[arg(long)]
    eth_usd: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; nothing is written outside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Resolved {
    precision: u32,
    gas_limit: u64,
    margin: f64,
    seed: u64,
    out: PathBuf,
    gas: GasConfig,
}

impl CommonArgs {
    fn resolve(&self, file: &FileConfig) -> Result<Resolved> {
        let precision = self.precision.or(file.precision).unwrap_or(18);
        if precision > 18 {
            return Err(Error::PrecisionRange(precision));
        }
        let mut gas = GasConfig::default();
        if let Some(g) = self.gas_price_gwei.or(file.gas_price_gwei) {
            gas.gas_price_gwei = g;
        }
        if let Some(u) = self.eth_usd.or(file.eth_usd) {
            gas.eth_usd = u;
        }
        gas.validate()?;
        Ok(Resolved {
            precision,
            gas_limit: self.gas_limit.or(file.gas_limit).unwrap_or(15_000_000),
            margin: self.margin.or(file.margin).unwrap_or(0.9),
            seed: self.seed.or(file.seed).unwrap_or(42),
            out: self.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
            gas,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    /// IDX image file.
    #[arg(long)]
    images: PathBuf,
    /// IDX label file.
    #[arg(long)]
    labels: PathBuf,
    /// Architecture notation, e.g. 2L4N10N.
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    input_dim: Option<usize>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    /// Train on only the first N images.
    #[arg(long)]
    limit: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TranspileArgs {
    /// Weight manifest produced by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Single level A..D.
    #[arg(long)]
    level: Option<String>,
    /// Emit all four levels.
    #[arg(long)]
    levels: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    level: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    images: PathBuf,
    /// Image index within the IDX file.
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Evaluate the first N images (default: whole set).
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Comma-separated precisions, e.g. 18,10,4,2,1,0.
    #[arg(long, default_value = "18,10,4,2,1,0")]
    precisions: String,
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Comma-separated hidden-layer sizes, e.g. 2,4,8,16,32.
    #[arg(long, default_value = "2,4,8,16,32")]
    hidden_sizes: String,
    #[arg(long)]
    input_dim: Option<usize>,
    #[arg(long)]
    level: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

/// Runs the CLI; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!(
                "{}",
                serde_json::json!({"error": {"kind": "usage", "message": e.to_string()}})
            );
            return 64;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}})
            );
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Train(args) => cmd_train(args, &file),
        Command::Transpile(args) => cmd_transpile(args, &file),
        Command::PlanUpload(args) => cmd_plan_upload(args, &file),
        Command::EstimateGas(args) => cmd_estimate_gas(args, &file),
        Command::Infer(args) => cmd_infer(args, &file),
        Command::Evaluate(args) => cmd_evaluate(args, &file),
        Command::SweepPrecision(args) => cmd_sweep(args, &file),
        Command::Report(args) => cmd_report(args, &file),
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    ensure_out_dir(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn resolve_arch(
    arch_flag: Option<&str>,
    input_dim_flag: Option<usize>,
    file: &FileConfig,
) -> Result<ArchSpec> {
    let notation = arch_flag
        .map(str::to_string)
        .or_else(|| file.arch.clone())
        .ok_or_else(|| Error::Config("--arch is required (flag or config file)".into()))?;
    let input_dim = input_dim_flag.or(file.input_dim).unwrap_or(784);
    parse_arch_notation(&notation, input_dim)
}

fn resolve_level(flag: Option<&str>, file: &FileConfig, default: OptLevel) -> Result<OptLevel> {
    match flag {
        Some(s) => s.parse(),
        None => Ok(file.level()?.unwrap_or(default)),
    }
}

fn take_first(images: &mnist::ImageSet, labels: &mnist::LabelSet, n: usize) -> Result<(mnist::ImageSet, mnist::LabelSet)> {
    if n > images.count() || n > labels.count() {
        return Err(Error::Shape(format!(
            "--limit {n} exceeds dataset size {}",
            images.count().min(labels.count())
        )));
    }
    let pixels = images.pixels()[..n * images.image_len()].to_vec();
    let imgs = mnist::ImageSet::new(n, images.rows(), images.cols(), pixels)?;
    let labs = mnist::LabelSet::new(labels.labels()[..n].to_vec())?;
    Ok((imgs, labs))
}

fn cmd_train(args: TrainArgs, file: &FileConfig) -> Result<()> {
    let resolved = args.common.resolve(file)?;
    let arch = resolve_arch(args.arch.as_deref(), args.input_dim, file)?;
    let mut images = mnist::load_idx_images(&args.images)?;
    let mut labels = mnist::load_idx_labels(&args.labels)?;
    if let Some(n) = args.limit {
        (images, labels) = take_first(&images, &labels, n)?;
    }
    let hp = HyperParams {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        seed: resolved.seed,
    };
    let model = train_mlp(&arch, &images, &labels, &hp)?;
    let path = write_out(&resolved.out, "model.json", &model.to_manifest_json())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_transpile(args: TranspileArgs, file: &FileConfig) -> Result<()> {
    let resolved = args.common.resolve(file)?;
    let model = Model::load_manifest(&args.model)?;
    let qm = infer::quantize_model(&model, resolved.precision)?;
    let levels: Vec<OptLevel> = if args.levels {
        OptLevel::ALL.to_vec()
    } else {
        vec![resolve_level(args.level.as_deref(), file, OptLevel::D)?]
    };
    for level in levels {
        let artifact = codegen::generate_contract(&qm, level)?;
        let sol = write_out(&resolved.out, &format!("contract_{level}.sol"), &artifact.source)?;
        let layout =
            write_out(&resolved.out, &format!("layout_{level}.json"), &artifact.layout_json())?;
        println!(
            "level {level}: {} bytes -> {} + {}",
            artifact.source_bytes,
            sol.display(),
            layout.display()
        );
    }
    Ok(())
}

fn cmd_plan_upload(args: PlanArgs, file: &FileConfig) -> Result<()> {
    let resolved = args.common.resolve(file)?;
    let model = Model::load_manifest(&args.model)?;
    let qm = infer::quantize_model(&model, resolved.precision)?;
    let plan =
        codegen::plan_weight_upload(&qm, &resolved.gas, resolved.gas_limit, resolved.margin)?;
    let gas = gas::estimate_upload_gas(&plan, &resolved.gas);
    let path = write_out(&resolved.out, "plan.json", &plan.to_json())?;
    println!(
        "{} parameters in {} batches, estimated {} gas -> {}",
        plan.total_params(),
        plan.batches.len(),
        gas,
        path.display()
    );
    Ok(())
}

/// Generates the artifact and, when a Solidity compiler is available, feeds
/// the real bytecode size into the deployment estimate.
fn artifact_with_compiled_size(
    qm: &infer::QuantizedModel,
    level: OptLevel,
) -> Result<codegen::ContractArtifact> {
    let mut artifact = codegen::generate_contract(qm, level)?;
    if let Some(compiler) = solc::detect_compiler() {
        let dir = tempfile::tempdir()?;
        artifact.compiled_size = Some(solc::compile(&compiler, &artifact.source, dir.path())?);
    }
    Ok(artifact)
}

fn cmd_estimate_gas(args: EstimateArgs, file: &FileConfig) -> Result<()> {
    let resolved = args.common.resolve(file)?;
    let model = Model::load_manifest(&args.model)?;
    let qm = infer::quantize_model(&model, resolved.precision)?;
    let level = resolve_level(args.level.as_deref(), file, OptLevel::D)?;
    let artifact = artifact_with_compiled_size(&qm, level)?;
    let plan =
        codegen::plan_weight_upload(&qm, &resolved.gas, resolved.gas_limit, resolved.margin)?;

    let reports: Vec<GasReport> = vec![
        gas::deploy_report(&artifact, &resolved.gas),
        gas::upload_report(&plan, &resolved.gas),
    ];
    let csv = gas::reports_to_csv(&reports);
    write_out(&resolved.out, "gas.csv", &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_infer(args: InferArgs, file: &FileConfig) -> Result<()> {
    let resolved = args.common.resolve(file)?;
    let model = Model::load_manifest(&args.model)?;
    let qm = infer::quantize_model(&model, resolved.precision)?;
    let images = mnist::load_idx_images(&args.images)?;
    if args.index >= images.count() {
        return Err(Error::Shape(format!(
            "--index {} out of range for {} images",
            args.index,
            images.count()
        )));
    }
    let raw = images.image(args.index);
    let xf = mnist::normalize_pixels(raw, model.arch().input_dim())?;
    let pred_float = infer::argmax_float(&infer::forward_float(&model, &xf)?);
    let xq = infer::quantize_input(raw);
    let pred_fixed = infer::argmax_fixed(&infer::forward_fixed(&qm, &xq)?);
    println!("image_index,pred_float,pred_fixed");
    println!("{},{},{}", args.index, pred_float, pred_fixed);
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs, file: &FileConfig) -> Result<()> {
    let resolved = args.common.resolve(file)?;
    let model = Model::load_manifest(&args.model)?;
    let images = mnist::load_idx_images(&args.images)?;
    let labels = mnist::load_idx_labels(&args.labels)?;
    let n = args.n.unwrap_or_else(|| images.count().min(labels.count()));
    let dual = infer::evaluate_dual(&model, resolved.precision, &images, &labels, n)?;
    let accuracy = dual.accuracy_csv();
    write_out(&resolved.out, "accuracy.csv", &accuracy)?;
    write_out(&resolved.out, "disagreements.csv", &dual.disagreements_csv())?;
    print!("{accuracy}");
    Ok(())
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid {what} entry {p:?}")))
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs, file: &FileConfig) -> Result<()> {
    let resolved = args.common.resolve(file)?;
    let model = Model::load_manifest(&args.model)?;
    let images = mnist::load_idx_images(&args.images)?;
    let labels = mnist::load_idx_labels(&args.labels)?;
    let precisions: Vec<u32> = args
        .precisions
        .split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid precision entry {p:?}")))
        })
        .collect::<Result<_>>()?;
    for &d in &precisions {
        if d > 18 {
            return Err(Error::PrecisionRange(d));
        }
    }
    let sweep = infer::precision_sweep(&model, &images, &labels, &precisions, args.n)?;
    let csv = sweep.to_csv();
    write_out(&resolved.out, "sweep.csv", &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_report(args: ReportArgs, file: &FileConfig) -> Result<()> {
    let resolved = args.common.resolve(file)?;
    let input_dim = args.input_dim.or(file.input_dim).unwrap_or(784);
    let level = resolve_level(args.level.as_deref(), file, OptLevel::D)?;
    let hidden_sizes = parse_usize_list(&args.hidden_sizes, "hidden size")?;

    let mut csv = String::from("hidden_neurons,n_params,deploy_gas,upload_gas\n");
    for &h in &hidden_sizes {
        let model = crate::report::seeded_model(input_dim, h, 10, resolved.seed)?;
        let qm = infer::quantize_model(&model, resolved.precision)?;
        let artifact = codegen::generate_contract(&qm, level)?;
        let plan =
            codegen::plan_weight_upload(&qm, &resolved.gas, resolved.gas_limit, resolved.margin)?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            h,
            model.arch().n_params(),
            gas::estimate_deploy_gas(&artifact, &resolved.gas),
            gas::estimate_upload_gas(&plan, &resolved.gas)
        ));
    }
    write_out(&resolved.out, "complexity.csv", &csv)?;
    print!("{csv}");
    Ok(())
}
