//! End-to-end CLI behavior: report shapes, tie-break inference, config-file
//! precedence, and output-directory containment.

use std::path::Path;
use std::process::{Command, Output};

use nn2evm::mnist::{write_idx_images, write_idx_labels, ImageSet, LabelSet};
use nn2evm::model::{ArchSpec, Model};
use nn2evm::report::seeded_model;
use nn2evm::synth;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nn2evm")
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin()).args(args).current_dir(cwd).output().unwrap()
}

fn write_model(dir: &Path) -> std::path::PathBuf {
    let model = seeded_model(784, 4, 10, 42).unwrap();
    let path = dir.join("model.json");
    model.save_manifest(&path).unwrap();
    path
}

fn write_dataset(dir: &Path, n: usize, seed: u64) -> (std::path::PathBuf, std::path::PathBuf) {
    let (images, labels) = synth::generate(n, seed);
    let ip = dir.join("images.idx");
    let lp = dir.join("labels.idx");
    std::fs::write(&ip, write_idx_images(&images)).unwrap();
    std::fs::write(&lp, write_idx_labels(&labels)).unwrap();
    (ip, lp)
}

#[test]
fn sweep_precision_emits_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path());
    let (images, labels) = write_dataset(dir.path(), 40, 3);
    let out = run(
        &[
            "sweep-precision",
            "--model",
            model.to_str().unwrap(),
            "--images",
            images.to_str().unwrap(),
            "--labels",
            labels.to_str().unwrap(),
            "--precisions",
            "18,10,4,2,1,0",
            "--n",
            "40",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "precision,n_correct,n_total");
    assert_eq!(lines.len(), 7, "expected header plus six rows:\n{stdout}");
    assert!(lines[1].starts_with("18,"));
    assert!(lines[6].starts_with("0,"));
    assert!(dir.path().join("sweep.csv").exists());
}

#[test]
fn estimate_gas_emits_deployment_and_upload_rows() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path());
    let out = run(
        &[
            "estimate-gas",
            "--model",
            model.to_str().unwrap(),
            "--level",
            "D",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "phase,gas,eth,usd");
    assert!(lines[1].starts_with("Deployment,"), "{stdout}");
    assert!(lines[2].starts_with("Uploading Weights,"), "{stdout}");
    assert_eq!(lines.len(), 3);
}

#[test]
fn infer_breaks_ties_to_class_zero() {
    let dir = tempfile::tempdir().unwrap();
    // All-zero model: every logit is zero for any input.
    let arch = ArchSpec::new(784, vec![4, 10]).unwrap();
    let model = Model::new(
        arch,
        vec![vec![0.0; 784 * 4], vec![0.0; 40]],
        vec![vec![0.0; 4], vec![0.0; 10]],
    )
    .unwrap();
    let model_path = dir.path().join("model.json");
    model.save_manifest(&model_path).unwrap();

    // One all-zero image.
    let images = ImageSet::new(1, 28, 28, vec![0u8; 784]).unwrap();
    let images_path = dir.path().join("images.idx");
    std::fs::write(&images_path, write_idx_images(&images)).unwrap();
    let _ = LabelSet::new(vec![0]).unwrap();

    let out = run(
        &[
            "infer",
            "--model",
            model_path.to_str().unwrap(),
            "--images",
            images_path.to_str().unwrap(),
            "--index",
            "0",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().nth(1).unwrap(), "0,0,0");
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path());
    let config_path = dir.path().join("nn2evm.toml");
    std::fs::write(&config_path, "gas_limit = 1000000\nmargin = 0.5\n").unwrap();

    // Config value used when no flag is given.
    let out_dir = dir.path().join("a");
    let out = run(
        &[
            "plan-upload",
            "--config",
            config_path.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let plan = std::fs::read_to_string(out_dir.join("plan.json")).unwrap();
    assert!(plan.contains("\"gas_limit\": 1000000"), "{plan}");
    assert!(plan.contains("\"margin\": 0.5"), "{plan}");

    // Explicit flag wins over the config entry.
    let out_dir = dir.path().join("b");
    let out = run(
        &[
            "plan-upload",
            "--config",
            config_path.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
            "--gas-limit",
            "15000000",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let plan = std::fs::read_to_string(out_dir.join("plan.json")).unwrap();
    assert!(plan.contains("\"gas_limit\": 15000000"), "{plan}");

    // Unknown config keys are rejected.
    std::fs::write(&config_path, "gas_limit = 1\nbogus = 2\n").unwrap();
    let out = run(
        &[
            "plan-upload",
            "--config",
            config_path.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
            "--out",
            dir.path().join("c").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(!out.status.success());
}

#[test]
fn unknown_flags_rejected_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["plan-upload", "--bogus-flag", "1"], dir.path());
    assert_eq!(out.status.code(), Some(64));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("\"kind\":\"usage\""), "{stderr}");
}

#[test]
fn writes_stay_inside_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path());
    let before: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();

    let out_dir = dir.path().join("only-here");
    let out = run(
        &[
            "transpile",
            "--model",
            model.to_str().unwrap(),
            "--levels",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());

    let mut after: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    after.retain(|n| n != "only-here");
    let mut before = before;
    before.sort();
    after.sort();
    assert_eq!(before, after, "new entries outside --out");
    assert!(out_dir.join("contract_A.sol").exists());
    assert!(out_dir.join("layout_D.json").exists());
}
