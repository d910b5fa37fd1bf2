//! Mini-batch SGD training of the MLP in double precision.
//!
//! Deterministic by construction: a single ChaCha stream seeds both the
//! uniform +/-1/sqrt(fan_in) initialization and the per-epoch Fisher-Yates
//! shuffle, and the loop runs single-threaded in sample order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mnist::{normalize_pixels, ImageSet, LabelSet};
use crate::model::{Activation, ArchSpec, Model};

#[derive(Debug, Clone)]
pub struct HyperParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams { epochs: 30, batch_size: 64, learning_rate: 0.1, seed: 42 }
    }
}

impl HyperParams {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config("learning_rate must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Working parameter set during training.
struct Params {
    arch: ArchSpec,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Params {
    fn init(arch: ArchSpec, rng: &mut ChaCha8Rng) -> Self {
        let mut weights = Vec::with_capacity(arch.n_layers());
        let mut biases = Vec::with_capacity(arch.n_layers());
        for k in 0..arch.n_layers() {
            let (out_dim, in_dim) = (arch.out_dim(k), arch.in_dim(k));
            let limit = 1.0 / (in_dim as f64).sqrt();
            weights.push((0..out_dim * in_dim).map(|_| rng.gen_range(-limit..limit)).collect());
            biases.push((0..out_dim).map(|_| rng.gen_range(-limit..limit)).collect());
        }
        Params { arch, weights, biases }
    }

    fn from_model(model: &Model) -> Self {
        let arch = model.arch().clone();
        Params {
            weights: (0..arch.n_layers()).map(|k| model.weights(k).to_vec()).collect(),
            biases: (0..arch.n_layers()).map(|k| model.biases(k).to_vec()).collect(),
            arch,
        }
    }

    fn zeros_like(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (
            self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        )
    }

    /// Forward pass keeping per-layer post-activation outputs.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut activations = Vec::with_capacity(self.arch.n_layers());
        let mut prev: &[f64] = x;
        for k in 0..self.arch.n_layers() {
            let (out_dim, in_dim) = (self.arch.out_dim(k), self.arch.in_dim(k));
            let mut z = vec![0.0; out_dim];
            for o in 0..out_dim {
                let row = &self.weights[k][o * in_dim..(o + 1) * in_dim];
                let mut acc = self.biases[k][o];
                for (w, xv) in row.iter().zip(prev.iter()) {
                    acc += w * xv;
                }
                z[o] = match self.arch.activation(k) {
                    Activation::Relu => acc.max(0.0),
                    Activation::Identity => acc,
                };
            }
            activations.push(z);
            prev = activations.last().unwrap();
        }
        activations
    }

    /// Softmax cross-entropy loss for one sample.
    fn loss(&self, x: &[f64], label: u8) -> f64 {
        let logits = self.forward(x).pop().unwrap();
        softmax_cross_entropy(&logits, label).0
    }

    /// Accumulates this sample's gradients; returns its loss.
    fn backward_accumulate(
        &self,
        x: &[f64],
        label: u8,
        grad_w: &mut [Vec<f64>],
        grad_b: &mut [Vec<f64>],
    ) -> f64 {
        let activations = self.forward(x);
        let n_layers = self.arch.n_layers();
        let (loss, mut delta) = softmax_cross_entropy(&activations[n_layers - 1], label);

        for k in (0..n_layers).rev() {
            let (out_dim, in_dim) = (self.arch.out_dim(k), self.arch.in_dim(k));
            let input: &[f64] = if k == 0 { x } else { &activations[k - 1] };
            for o in 0..out_dim {
                let d = delta[o];
                grad_b[k][o] += d;
                let row = &mut grad_w[k][o * in_dim..(o + 1) * in_dim];
                for (g, xv) in row.iter_mut().zip(input.iter()) {
                    *g += d * xv;
                }
            }
            if k > 0 {
                // d_prev = W^T delta, gated by ReLU (post-activation > 0).
                let mut prev_delta = vec![0.0; in_dim];
                for o in 0..out_dim {
                    let d = delta[o];
                    let row = &self.weights[k][o * in_dim..(o + 1) * in_dim];
                    for (pd, w) in prev_delta.iter_mut().zip(row.iter()) {
                        *pd += w * d;
                    }
                }
                for (pd, &a) in prev_delta.iter_mut().zip(activations[k - 1].iter()) {
                    if a <= 0.0 {
                        *pd = 0.0;
                    }
                }
                delta = prev_delta;
            }
        }
        loss
    }

    fn into_model(self) -> Result<Model> {
        Model::new(self.arch, self.weights, self.biases)
    }
}

/// Loss and output-layer gradient (softmax(logits) - onehot(label)).
fn softmax_cross_entropy(logits: &[f64], label: u8) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    let loss = -(grad[label as usize].max(f64::MIN_POSITIVE)).ln();
    grad[label as usize] -= 1.0;
    (loss, grad)
}

fn check_dataset(arch: &ArchSpec, images: &ImageSet, labels: &LabelSet) -> Result<()> {
    if images.count() == 0 {
        return Err(Error::Shape("empty training set".into()));
    }
    if images.count() != labels.count() {
        return Err(Error::Shape(format!(
            "{} images but {} labels",
            images.count(),
            labels.count()
        )));
    }
    if images.image_len() != arch.input_dim() {
        return Err(Error::Shape(format!(
            "images are {} pixels, arch expects {}",
            images.image_len(),
            arch.input_dim()
        )));
    }
    if let Some(&bad) = labels.labels().iter().find(|&&l| (l as usize) >= arch.n_classes()) {
        return Err(Error::Shape(format!(
            "label {bad} outside the {} output classes",
            arch.n_classes()
        )));
    }
    Ok(())
}

/// Trains and additionally reports the mean training loss per epoch.
pub fn train_mlp_with_stats(
    arch: &ArchSpec,
    images: &ImageSet,
    labels: &LabelSet,
    hp: &HyperParams,
) -> Result<(Model, Vec<f64>)> {
    hp.validate()?;
    check_dataset(arch, images, labels)?;

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut params = Params::init(arch.clone(), &mut rng);

    let n = images.count();
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|i| normalize_pixels(images.image(i), arch.input_dim()))
        .collect::<Result<_>>()?;

    let mut epoch_losses = Vec::with_capacity(hp.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    for _epoch in 0..hp.epochs {
        // Seeded Fisher-Yates permutation.
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }

        let mut epoch_loss = 0.0;
        let (mut grad_w, mut grad_b) = params.zeros_like();
        for chunk in order.chunks(hp.batch_size) {
            for block in grad_w.iter_mut().chain(grad_b.iter_mut()) {
                block.fill(0.0);
            }
            for &idx in chunk {
                epoch_loss +=
                    params.backward_accumulate(&inputs[idx], labels.label(idx), &mut grad_w, &mut grad_b);
            }
            let step = hp.learning_rate / chunk.len() as f64;
            for k in 0..params.arch.n_layers() {
                for (w, g) in params.weights[k].iter_mut().zip(grad_w[k].iter()) {
                    *w -= step * g;
                }
                for (b, g) in params.biases[k].iter_mut().zip(grad_b[k].iter()) {
                    *b -= step * g;
                }
            }
        }
        epoch_losses.push(epoch_loss / n as f64);
    }

    Ok((params.into_model()?, epoch_losses))
}

/// Trains an MLP with mini-batch SGD; deterministic given the seed.
pub fn train_mlp(
    arch: &ArchSpec,
    images: &ImageSet,
    labels: &LabelSet,
    hp: &HyperParams,
) -> Result<Model> {
    train_mlp_with_stats(arch, images, labels, hp).map(|(m, _)| m)
}

/// Compares analytic gradients with central finite differences (h = 1e-5)
/// on up to 20 parameters; returns the largest relative error.
pub fn numerical_gradient_check(model: &Model, input: &[f64], label: u8) -> Result<f64> {
    let arch = model.arch();
    if input.len() != arch.input_dim() {
        return Err(Error::Shape(format!(
            "input has {} entries, arch expects {}",
            input.len(),
            arch.input_dim()
        )));
    }
    let mut params = Params::from_model(model);
    let (mut grad_w, mut grad_b) = params.zeros_like();
    params.backward_accumulate(input, label, &mut grad_w, &mut grad_b);

    let h = 1e-5;
    let mut max_rel = 0.0f64;
    let mut probed = 0;
    'outer: for k in 0..arch.n_layers() {
        for idx in 0..params.weights[k].len() + params.biases[k].len() {
            if probed >= 20 {
                break 'outer;
            }
            probed += 1;
            let w_len = params.weights[k].len();
            let analytic = if idx < w_len { grad_w[k][idx] } else { grad_b[k][idx - w_len] };
            let original =
                if idx < w_len { params.weights[k][idx] } else { params.biases[k][idx - w_len] };
            let set = |p: &mut Params, v: f64| {
                if idx < w_len {
                    p.weights[k][idx] = v;
                } else {
                    p.biases[k][idx - w_len] = v;
                }
            };
            set(&mut params, original + h);
            let plus = params.loss(input, label);
            set(&mut params, original - h);
            let minus = params.loss(input, label);
            set(&mut params, original);
            let numeric = (plus - minus) / (2.0 * h);
            let denom = analytic.abs().max(numeric.abs());
            if denom > 1e-8 {
                max_rel = max_rel.max((analytic - numeric).abs() / denom);
            }
        }
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn tiny_dataset(n: usize, seed: u64) -> (ImageSet, LabelSet) {
        synth::generate(n, seed)
    }

    fn random_model(arch: &ArchSpec, seed: u64) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Params::init(arch.clone(), &mut rng);
        // Shift away from zero pre-activations so ReLU kinks stay clear of probes.
        for b in params.biases.iter_mut().flatten() {
            *b += 0.05;
        }
        params.into_model().unwrap()
    }

    #[test]
    fn zero_learning_rate_returns_initialization() {
        let arch = ArchSpec::new(784, vec![3, 10]).unwrap();
        let (images, labels) = tiny_dataset(32, 5);
        let hp0 = HyperParams { epochs: 2, learning_rate: 0.0, seed: 9, ..Default::default() };
        let trained = train_mlp(&arch, &images, &labels, &hp0).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let init = Params::init(arch, &mut rng).into_model().unwrap();
        assert_eq!(trained, init);
    }

    #[test]
    fn single_sample_step_reduces_loss() {
        let arch = ArchSpec::new(784, vec![4, 10]).unwrap();
        let (images, labels) = tiny_dataset(1, 11);
        let x = normalize_pixels(images.image(0), 784).unwrap();
        let label = labels.label(0);

        let hp = HyperParams { epochs: 1, batch_size: 1, learning_rate: 0.1, seed: 3 };
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let init = Params::init(arch.clone(), &mut rng);
        let loss_before = init.loss(&x, label);

        let trained = train_mlp(&arch, &images, &labels, &hp).unwrap();
        let loss_after = Params::from_model(&trained).loss(&x, label);
        assert!(
            loss_after < loss_before,
            "loss did not decrease: {loss_before} -> {loss_after}"
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let arch = ArchSpec::new(784, vec![3, 10]).unwrap();
        let (images, labels) = tiny_dataset(64, 21);
        let hp = HyperParams { epochs: 2, ..Default::default() };
        let a = train_mlp(&arch, &images, &labels, &hp).unwrap();
        let b = train_mlp(&arch, &images, &labels, &hp).unwrap();
        assert_eq!(a.to_manifest_json(), b.to_manifest_json());
    }

    #[test]
    fn gradient_check_small_random_model() {
        let arch = ArchSpec::new(4, vec![3, 2]).unwrap();
        let model = random_model(&arch, 17);
        let input = [0.3, -0.7, 0.9, 0.1];
        let err = numerical_gradient_check(&model, &input, 1).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn zero_model_bias_gradient_matches_softmax_closed_form() {
        let arch = ArchSpec::new(3, vec![2, 4]).unwrap();
        let model = Model::new(
            arch.clone(),
            vec![vec![0.0; 6], vec![0.0; 8]],
            vec![vec![0.0; 2], vec![0.0; 4]],
        )
        .unwrap();
        let params = Params::from_model(&model);
        let (mut gw, mut gb) = params.zeros_like();
        params.backward_accumulate(&[0.0, 0.0, 0.0], 2, &mut gw, &mut gb);

        // Uniform softmax over 4 classes: gradient 1/4 everywhere, minus 1 at the label.
        for (c, &g) in gb[1].iter().enumerate() {
            let expected = if c == 2 { 0.25 - 1.0 } else { 0.25 };
            assert!((g - expected).abs() < 1e-12, "class {c}: {g} vs {expected}");
        }
        // Output weights are zero, so nothing propagates to the hidden layer.
        assert!(gb[0].iter().all(|&g| g == 0.0));
        assert!(gw[0].iter().all(|&g| g == 0.0));
    }

    #[test]
    fn identical_logits_gradient_symmetric_under_permutation() {
        let (loss_a, grad_a) = softmax_cross_entropy(&[0.5, 0.5, 0.5], 0);
        let (loss_b, grad_b) = softmax_cross_entropy(&[0.5, 0.5, 0.5], 2);
        assert_eq!(loss_a, loss_b);
        // Swapping the labeled class permutes the gradient accordingly.
        assert_eq!(grad_a[0], grad_b[2]);
        assert_eq!(grad_a[1], grad_b[1]);
        assert_eq!(grad_a[2], grad_b[0]);
    }

    #[test]
    fn rejects_empty_and_mismatched_datasets() {
        let arch = ArchSpec::new(784, vec![2, 10]).unwrap();
        let empty = ImageSet::new(0, 28, 28, vec![]).unwrap();
        let no_labels = LabelSet::new(vec![]).unwrap();
        assert!(train_mlp(&arch, &empty, &no_labels, &HyperParams::default()).is_err());

        let (images, _) = tiny_dataset(4, 2);
        let labels = LabelSet::new(vec![1, 2]).unwrap();
        assert!(train_mlp(&arch, &images, &labels, &HyperParams::default()).is_err());

        // Labels exceeding the class count of a narrow head.
        let narrow = ArchSpec::new(784, vec![2, 3]).unwrap();
        let (images, labels) = tiny_dataset(8, 2);
        if labels.labels().iter().any(|&l| l >= 3) {
            assert!(train_mlp(&narrow, &images, &labels, &HyperParams::default()).is_err());
        }
    }
}
