//! Dual-mode forward pass: double-precision reference and a bit-exact
//! fixed-point simulation of the generated contract's arithmetic.
//!
//! The fixed path pins the contract's operation order: each dot product
//! starts from the bias and accumulates `fp_add(acc, fp_mul(w, x))` with the
//! input index ascending. Any reimplementation (including the emitted
//! contract) must reproduce it raw-for-raw.

use num::BigInt;

use crate::error::{Error, Result};
use crate::fixed::{scale, Fp, FpOp, FpOpKind};
use crate::mnist::{normalize_pixels, ImageSet, LabelSet};
use crate::model::{Activation, ArchSpec, Model};

/// A model with every parameter rounded to `precision` decimal digits and
/// stored as 18-decimal fixed point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedModel {
    arch: ArchSpec,
    precision: u32,
    weights: Vec<Vec<Fp>>,
    biases: Vec<Vec<Fp>>,
}

impl QuantizedModel {
    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Flat row-major fixed-point weights of layer `k`.
    pub fn weights(&self, k: usize) -> &[Fp] {
        &self.weights[k]
    }

    pub fn biases(&self, k: usize) -> &[Fp] {
        &self.biases[k]
    }

    /// The upload payload for layer `k`: weights row-major, then biases.
    pub fn layer_params(&self, k: usize) -> Vec<Fp> {
        let mut v = self.weights[k].clone();
        v.extend_from_slice(&self.biases[k]);
        v
    }

    /// Reinterprets the quantized parameters as a double-precision model.
    pub fn to_model(&self) -> Result<Model> {
        let to_f64 = |fp: &Fp| -> Result<f64> {
            fp.to_decimal()
                .parse()
                .map_err(|_| Error::NonFinite(format!("unrepresentable {fp}")))
        };
        let weights = self
            .weights
            .iter()
            .map(|layer| layer.iter().map(&to_f64).collect())
            .collect::<Result<_>>()?;
        let biases = self
            .biases
            .iter()
            .map(|layer| layer.iter().map(&to_f64).collect())
            .collect::<Result<_>>()?;
        Model::new(self.arch.clone(), weights, biases)
    }
}

/// Rounds every parameter half-away-from-zero to `d` decimal digits.
pub fn quantize_model(model: &Model, d: u32) -> Result<QuantizedModel> {
    let arch = model.arch().clone();
    let mut weights = Vec::with_capacity(arch.n_layers());
    let mut biases = Vec::with_capacity(arch.n_layers());
    for k in 0..arch.n_layers() {
        weights.push(model.weights(k).iter().map(|&w| Fp::quantize(w, d)).collect::<Result<_>>()?);
        biases.push(model.biases(k).iter().map(|&b| Fp::quantize(b, d)).collect::<Result<_>>()?);
    }
    Ok(QuantizedModel { arch, precision: d, weights, biases })
}

/// Double-precision reference forward pass.
pub fn forward_float(model: &Model, x: &[f64]) -> Result<Vec<f64>> {
    let arch = model.arch();
    if x.len() != arch.input_dim() {
        return Err(Error::Shape(format!(
            "input has {} entries, arch expects {}",
            x.len(),
            arch.input_dim()
        )));
    }
    let mut prev = x.to_vec();
    for k in 0..arch.n_layers() {
        let (out_dim, in_dim) = (arch.out_dim(k), arch.in_dim(k));
        let mut next = vec![0.0; out_dim];
        for o in 0..out_dim {
            let mut acc = model.biases(k)[o];
            let row = &model.weights(k)[o * in_dim..(o + 1) * in_dim];
            for (w, xv) in row.iter().zip(prev.iter()) {
                acc += w * xv;
            }
            next[o] = match arch.activation(k) {
                Activation::Relu => acc.max(0.0),
                Activation::Identity => acc,
            };
        }
        prev = next;
    }
    Ok(prev)
}

/// Quantizes raw pixels to fixed point: `byte/255`, truncated toward zero at
/// the 18th decimal.
pub fn quantize_input(pixels: &[u8]) -> Vec<Fp> {
    pixels
        .iter()
        .map(|&p| {
            let raw = BigInt::from(p) * scale() / BigInt::from(255u32);
            Fp::from_raw(raw).expect("pixel value in range")
        })
        .collect()
}

fn forward_fixed_inner(
    qm: &QuantizedModel,
    x: &[Fp],
    mut trace: Option<&mut Vec<FpOp>>,
) -> Result<Vec<Fp>> {
    let arch = &qm.arch;
    if x.len() != arch.input_dim() {
        return Err(Error::Shape(format!(
            "input has {} entries, arch expects {}",
            x.len(),
            arch.input_dim()
        )));
    }
    let mut prev = x.to_vec();
    for k in 0..arch.n_layers() {
        let (out_dim, in_dim) = (arch.out_dim(k), arch.in_dim(k));
        let mut next = Vec::with_capacity(out_dim);
        for o in 0..out_dim {
            let mut acc = qm.biases[k][o].clone();
            for j in 0..in_dim {
                let w = &qm.weights[k][o * in_dim + j];
                let prod = w.checked_mul(&prev[j])?;
                let sum = acc.checked_add(&prod)?;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(FpOp {
                        kind: FpOpKind::Mul,
                        lhs: w.raw().clone(),
                        rhs: prev[j].raw().clone(),
                        out: prod.raw().clone(),
                    });
                    t.push(FpOp {
                        kind: FpOpKind::Add,
                        lhs: acc.raw().clone(),
                        rhs: prod.raw().clone(),
                        out: sum.raw().clone(),
                    });
                }
                acc = sum;
            }
            next.push(match arch.activation(k) {
                Activation::Relu => acc.relu(),
                Activation::Identity => acc,
            });
        }
        prev = next;
    }
    Ok(prev)
}

/// Fixed-point forward pass, bit-identical to the generated contract.
pub fn forward_fixed(qm: &QuantizedModel, x: &[Fp]) -> Result<Vec<Fp>> {
    forward_fixed_inner(qm, x, None)
}

/// Like [`forward_fixed`] but also records every fp_mul/fp_add with raw
/// operands, in execution order.
pub fn forward_fixed_traced(qm: &QuantizedModel, x: &[Fp]) -> Result<(Vec<Fp>, Vec<FpOp>)> {
    let mut ops = Vec::new();
    let logits = forward_fixed_inner(qm, x, Some(&mut ops))?;
    Ok((logits, ops))
}

/// Index of the maximum logit; ties break to the lowest index.
pub fn argmax_float(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// Index of the maximum fixed-point logit; ties break to the lowest index.
pub fn argmax_fixed(logits: &[Fp]) -> usize {
    let mut best = 0;
    for (i, v) in logits.iter().enumerate().skip(1) {
        if v.raw() > logits[best].raw() {
            best = i;
        }
    }
    best
}

/// Accuracy over the first `n` images of a dataset in one inference mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracyReport {
    pub n_total: usize,
    pub n_correct: usize,
}

impl AccuracyReport {
    pub fn accuracy(&self) -> f64 {
        if self.n_total == 0 {
            0.0
        } else {
            self.n_correct as f64 / self.n_total as f64
        }
    }
}

/// One image where the float and fixed predictions differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    pub image_index: usize,
    pub label: u8,
    pub pred_float: usize,
    pub pred_fixed: usize,
}

/// Float and fixed accuracy side by side, plus the images on which the two
/// modes disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualReport {
    pub float: AccuracyReport,
    pub fixed: AccuracyReport,
    pub disagreements: Vec<Disagreement>,
}

impl DualReport {
    /// Two-row CSV mirroring accuracy-comparison tables.
    pub fn accuracy_csv(&self) -> String {
        let mut s = String::from("scenario,n_correct,n_total,accuracy\n");
        s.push_str(&format!(
            "float,{},{},{:.4}\n",
            self.float.n_correct,
            self.float.n_total,
            self.float.accuracy()
        ));
        s.push_str(&format!(
            "fixed,{},{},{:.4}\n",
            self.fixed.n_correct,
            self.fixed.n_total,
            self.fixed.accuracy()
        ));
        s
    }

    pub fn disagreements_csv(&self) -> String {
        let mut s = String::from("image_index,label,pred_float,pred_fixed\n");
        for d in &self.disagreements {
            s.push_str(&format!(
                "{},{},{},{}\n",
                d.image_index, d.label, d.pred_float, d.pred_fixed
            ));
        }
        s
    }
}

fn check_eval_args(arch: &ArchSpec, images: &ImageSet, labels: &LabelSet, n: usize) -> Result<()> {
    if n > images.count() || n > labels.count() {
        return Err(Error::Shape(format!(
            "requested {n} images, dataset has {}",
            images.count().min(labels.count())
        )));
    }
    if images.image_len() != arch.input_dim() {
        return Err(Error::Shape(format!(
            "images are {} pixels, arch expects {}",
            images.image_len(),
            arch.input_dim()
        )));
    }
    Ok(())
}

/// Float-mode accuracy over the first `n` images.
pub fn evaluate_float(model: &Model, images: &ImageSet, labels: &LabelSet, n: usize) -> Result<AccuracyReport> {
    check_eval_args(model.arch(), images, labels, n)?;
    let mut correct = 0;
    for i in 0..n {
        let x = normalize_pixels(images.image(i), model.arch().input_dim())?;
        let logits = forward_float(model, &x)?;
        if argmax_float(&logits) == labels.label(i) as usize {
            correct += 1;
        }
    }
    Ok(AccuracyReport { n_total: n, n_correct: correct })
}

/// Fixed-mode accuracy over the first `n` images.
pub fn evaluate_fixed(qm: &QuantizedModel, images: &ImageSet, labels: &LabelSet, n: usize) -> Result<AccuracyReport> {
    check_eval_args(qm.arch(), images, labels, n)?;
    let mut correct = 0;
    for i in 0..n {
        let x = quantize_input(images.image(i));
        let logits = forward_fixed(qm, &x)?;
        if argmax_fixed(&logits) == labels.label(i) as usize {
            correct += 1;
        }
    }
    Ok(AccuracyReport { n_total: n, n_correct: correct })
}

/// Evaluates both modes over the first `n` images and records every image on
/// which their predicted classes differ.
pub fn evaluate_dual(
    model: &Model,
    d: u32,
    images: &ImageSet,
    labels: &LabelSet,
    n: usize,
) -> Result<DualReport> {
    check_eval_args(model.arch(), images, labels, n)?;
    let qm = quantize_model(model, d)?;
    let mut float_correct = 0;
    let mut fixed_correct = 0;
    let mut disagreements = Vec::new();
    for i in 0..n {
        let xf = normalize_pixels(images.image(i), model.arch().input_dim())?;
        let pred_float = argmax_float(&forward_float(model, &xf)?);
        let xq = quantize_input(images.image(i));
        let pred_fixed = argmax_fixed(&forward_fixed(&qm, &xq)?);
        let label = labels.label(i);
        if pred_float == label as usize {
            float_correct += 1;
        }
        if pred_fixed == label as usize {
            fixed_correct += 1;
        }
        if pred_float != pred_fixed {
            disagreements.push(Disagreement { image_index: i, label, pred_float, pred_fixed });
        }
    }
    Ok(DualReport {
        float: AccuracyReport { n_total: n, n_correct: float_correct },
        fixed: AccuracyReport { n_total: n, n_correct: fixed_correct },
        disagreements,
    })
}

/// Correct fixed-mode predictions per quantization precision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub precision: u32,
    pub n_correct: usize,
    pub n_total: usize,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("precision,n_correct,n_total\n");
        for row in &self.rows {
            s.push_str(&format!("{},{},{}\n", row.precision, row.n_correct, row.n_total));
        }
        s
    }

    pub fn n_correct(&self, precision: u32) -> Option<usize> {
        self.rows.iter().find(|r| r.precision == precision).map(|r| r.n_correct)
    }
}

/// Quantizes the model at each precision and evaluates fixed-mode accuracy
/// over the first `n` images; internal arithmetic stays at 18 decimals.
pub fn precision_sweep(
    model: &Model,
    images: &ImageSet,
    labels: &LabelSet,
    precisions: &[u32],
    n: usize,
) -> Result<SweepReport> {
    let mut rows = Vec::with_capacity(precisions.len());
    for &d in precisions {
        let qm = quantize_model(model, d)?;
        let report = evaluate_fixed(&qm, images, labels, n)?;
        rows.push(SweepRow { precision: d, n_correct: report.n_correct, n_total: report.n_total });
    }
    Ok(SweepReport { rows })
}
