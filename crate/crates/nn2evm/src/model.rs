//! In-memory MLP representation, architecture notation, and the JSON weight
//! manifest that carries trained parameters between tools.
//!
//! Weights are stored flat row-major per layer (row = output neuron), the
//! layout codegen and both inference modes consume.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_SCHEMA: &str = "nn2evm-model/1";

/// Per-layer activation. Hidden layers use ReLU, the output layer none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    #[serde(rename = "relu")]
    Relu,
    #[serde(rename = "none")]
    Identity,
}

/// Layer dimensions of an MLP: input width plus one entry per layer
/// (the last entry is the number of output classes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchSpec {
    input_dim: usize,
    layer_dims: Vec<usize>,
}

impl ArchSpec {
    pub fn new(input_dim: usize, layer_dims: Vec<usize>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Shape("input_dim must be >= 1".into()));
        }
        if layer_dims.is_empty() {
            return Err(Error::Shape("layer_dims must be non-empty".into()));
        }
        if let Some(dim) = layer_dims.iter().find(|&&d| d == 0) {
            return Err(Error::Shape(format!("layer dim {dim} must be >= 1")));
        }
        Ok(ArchSpec { input_dim, layer_dims })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn n_layers(&self) -> usize {
        self.layer_dims.len()
    }

    /// Number of output classes, the width of the last layer.
    pub fn n_classes(&self) -> usize {
        *self.layer_dims.last().expect("non-empty")
    }

    /// Input width of layer `k`.
    pub fn in_dim(&self, k: usize) -> usize {
        if k == 0 {
            self.input_dim
        } else {
            self.layer_dims[k - 1]
        }
    }

    /// Output width of layer `k`.
    pub fn out_dim(&self, k: usize) -> usize {
        self.layer_dims[k]
    }

    pub fn activation(&self, k: usize) -> Activation {
        if k + 1 == self.layer_dims.len() {
            Activation::Identity
        } else {
            Activation::Relu
        }
    }

    /// Total parameter count (weights plus biases) across all layers.
    pub fn n_params(&self) -> usize {
        (0..self.n_layers())
            .map(|k| self.out_dim(k) * self.in_dim(k) + self.out_dim(k))
            .sum()
    }

    /// Canonical `<count>L<dim>N...<dim>N` notation.
    pub fn notation(&self) -> String {
        let mut s = format!("{}L", self.layer_dims.len());
        for d in &self.layer_dims {
            s.push_str(&format!("{d}N"));
        }
        s
    }
}

/// Parses `<int>L(<int>N)+` notation; the count before `L` must equal the
/// number of `N` groups. `input_dim` is attached unchanged.
pub fn parse_arch_notation(notation: &str, input_dim: usize) -> Result<ArchSpec> {
    let bytes = notation.as_bytes();
    let mut pos = 0;

    let declared = scan_int(notation, &mut pos)?;
    if pos >= bytes.len() || bytes[pos] != b'L' {
        return Err(Error::NotationSyntax { offset: pos, msg: "expected 'L'".into() });
    }
    pos += 1;

    let mut dims = Vec::new();
    while pos < bytes.len() {
        let dim = scan_int(notation, &mut pos)?;
        if pos >= bytes.len() || bytes[pos] != b'N' {
            return Err(Error::NotationSyntax { offset: pos, msg: "expected 'N'".into() });
        }
        pos += 1;
        dims.push(dim);
    }
    if dims.is_empty() {
        return Err(Error::NotationSyntax { offset: pos, msg: "expected at least one layer group".into() });
    }
    if declared != dims.len() {
        return Err(Error::NotationStructure { declared, listed: dims.len() });
    }
    ArchSpec::new(input_dim, dims)
}

fn scan_int(s: &str, pos: &mut usize) -> Result<usize> {
    let bytes = s.as_bytes();
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return Err(Error::NotationSyntax { offset: start, msg: "expected integer".into() });
    }
    s[start..*pos]
        .parse()
        .map_err(|_| Error::NotationSyntax { offset: start, msg: "integer too large".into() })
}

/// A trained MLP: architecture plus double-precision parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    arch: ArchSpec,
    /// Per layer, flat row-major `out_dim x in_dim`.
    weights: Vec<Vec<f64>>,
    /// Per layer, length `out_dim`.
    biases: Vec<Vec<f64>>,
}

impl Model {
    pub fn new(arch: ArchSpec, weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>) -> Result<Self> {
        if weights.len() != arch.n_layers() || biases.len() != arch.n_layers() {
            return Err(Error::Shape(format!(
                "expected {} layers, got {} weight and {} bias blocks",
                arch.n_layers(),
                weights.len(),
                biases.len()
            )));
        }
        for k in 0..arch.n_layers() {
            let expect_w = arch.out_dim(k) * arch.in_dim(k);
            if weights[k].len() != expect_w {
                return Err(Error::Shape(format!(
                    "layer {k}: expected {expect_w} weights, got {}",
                    weights[k].len()
                )));
            }
            if biases[k].len() != arch.out_dim(k) {
                return Err(Error::Shape(format!(
                    "layer {k}: expected {} biases, got {}",
                    arch.out_dim(k),
                    biases[k].len()
                )));
            }
            for &v in weights[k].iter().chain(biases[k].iter()) {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("layer {k} parameter {v}")));
                }
            }
        }
        Ok(Model { arch, weights, biases })
    }

    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    /// Flat row-major weights of layer `k`.
    pub fn weights(&self, k: usize) -> &[f64] {
        &self.weights[k]
    }

    pub fn biases(&self, k: usize) -> &[f64] {
        &self.biases[k]
    }

    pub fn weight(&self, k: usize, out: usize, inp: usize) -> f64 {
        self.weights[k][out * self.arch.in_dim(k) + inp]
    }

    /// Serializes to the versioned JSON manifest. Parameters are written as
    /// shortest round-trip decimal strings, so load(save(m)) = m bit-exactly.
    pub fn to_manifest_json(&self) -> String {
        let doc = ManifestDoc {
            schema: MANIFEST_SCHEMA.to_string(),
            input_dim: self.arch.input_dim,
            layers: (0..self.arch.n_layers())
                .map(|k| {
                    let in_dim = self.arch.in_dim(k);
                    ManifestLayer {
                        out: self.arch.out_dim(k),
                        activation: self.arch.activation(k),
                        weights: self.weights[k]
                            .chunks(in_dim)
                            .map(|row| row.iter().map(|v| v.to_string()).collect())
                            .collect(),
                        biases: self.biases[k].iter().map(|v| v.to_string()).collect(),
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("manifest serialization")
    }

    pub fn from_manifest_json(text: &str) -> Result<Self> {
        let doc: ManifestDoc = serde_json::from_str(text)?;
        if doc.schema != MANIFEST_SCHEMA {
            return Err(Error::UnknownSchema(doc.schema));
        }
        let dims: Vec<usize> = doc.layers.iter().map(|l| l.out).collect();
        let arch = ArchSpec::new(doc.input_dim, dims)?;
        let mut weights = Vec::with_capacity(doc.layers.len());
        let mut biases = Vec::with_capacity(doc.layers.len());
        for (k, layer) in doc.layers.iter().enumerate() {
            if layer.activation != arch.activation(k) {
                return Err(Error::Shape(format!(
                    "layer {k}: activation {:?} does not match position (hidden=relu, output=none)",
                    layer.activation
                )));
            }
            if layer.weights.len() != layer.out {
                return Err(Error::Shape(format!(
                    "layer {k}: {} weight rows for {} output neurons",
                    layer.weights.len(),
                    layer.out
                )));
            }
            let in_dim = arch.in_dim(k);
            let mut flat = Vec::with_capacity(layer.out * in_dim);
            for (r, row) in layer.weights.iter().enumerate() {
                if row.len() != in_dim {
                    return Err(Error::Shape(format!(
                        "layer {k} row {r}: length {} != in_dim {in_dim}",
                        row.len()
                    )));
                }
                for s in row {
                    flat.push(parse_finite(s)?);
                }
            }
            let b: Vec<f64> = layer.biases.iter().map(|s| parse_finite(s)).collect::<Result<_>>()?;
            weights.push(flat);
            biases.push(b);
        }
        Model::new(arch, weights, biases)
    }

    pub fn save_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_manifest_json())?;
        Ok(())
    }

    pub fn load_manifest(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Model::from_manifest_json(&text)
    }
}

fn parse_finite(s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Shape(format!("unparseable parameter {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("parameter {s:?}")));
    }
    Ok(v)
}

#[derive(Serialize, Deserialize)]
struct ManifestDoc {
    schema: String,
    input_dim: usize,
    layers: Vec<ManifestLayer>,
}

#[derive(Serialize, Deserialize)]
struct ManifestLayer {
    out: usize,
    activation: Activation,
    weights: Vec<Vec<String>>,
    biases: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn notation_examples() {
        let a = parse_arch_notation("2L4N10N", 784).unwrap();
        assert_eq!(a.layer_dims(), &[4, 10]);
        assert_eq!(a.input_dim(), 784);

        let b = parse_arch_notation("1L10N", 784).unwrap();
        assert_eq!(b.layer_dims(), &[10]);

        match parse_arch_notation("3L4N10N", 784) {
            Err(Error::NotationStructure { declared: 3, listed: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn notation_syntax_errors_have_offsets() {
        match parse_arch_notation("2X4N10N", 784) {
            Err(Error::NotationSyntax { offset: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_arch_notation("2L4N10", 784) {
            Err(Error::NotationSyntax { offset: 6, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_arch_notation("", 784).is_err());
        assert!(parse_arch_notation("2L", 784).is_err());
        assert!(parse_arch_notation("2L4N10N ", 784).is_err());
    }

    #[test]
    fn notation_zero_dim_rejected() {
        assert!(parse_arch_notation("2L0N10N", 784).is_err());
    }

    fn toy_model() -> Model {
        let arch = ArchSpec::new(3, vec![2, 2]).unwrap();
        Model::new(
            arch,
            vec![vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6], vec![1.0, 2.0, 3.0, 4.0]],
            vec![vec![0.01, -0.02], vec![0.5, 0.25]],
        )
        .unwrap()
    }

    #[test]
    fn manifest_roundtrip_identity() {
        let m = toy_model();
        let json = m.to_manifest_json();
        let back = Model::from_manifest_json(&json).unwrap();
        assert_eq!(back, m);
        // Bit-exact: serializing again yields identical bytes.
        assert_eq!(back.to_manifest_json(), json);
    }

    #[test]
    fn manifest_shape_error() {
        let m = toy_model();
        let json = m.to_manifest_json();
        // Drop one weight from the first row.
        let bad = json.replacen("\"-0.2\",", "", 1);
        assert!(matches!(Model::from_manifest_json(&bad), Err(Error::Shape(_))));
    }

    #[test]
    fn manifest_rejects_nan_and_unknown_schema() {
        let m = toy_model();
        let json = m.to_manifest_json();
        let bad = json.replacen("\"0.1\"", "\"NaN\"", 1);
        assert!(matches!(Model::from_manifest_json(&bad), Err(Error::NonFinite(_))));

        let bad = json.replace(MANIFEST_SCHEMA, "nn2evm-model/999");
        assert!(matches!(Model::from_manifest_json(&bad), Err(Error::UnknownSchema(_))));
    }

    #[test]
    fn model_shape_validation() {
        let arch = ArchSpec::new(3, vec![2]).unwrap();
        // 5 weights instead of 6.
        assert!(matches!(
            Model::new(arch.clone(), vec![vec![0.0; 5]], vec![vec![0.0; 2]]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Model::new(arch, vec![vec![f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]], vec![vec![0.0; 2]]),
            Err(Error::NonFinite(_))
        ));
    }

    proptest! {
        #[test]
        fn parse_format_identity(dims in proptest::collection::vec(1usize..64, 1..5), input in 1usize..1000) {
            let arch = ArchSpec::new(input, dims).unwrap();
            let notation = arch.notation();
            let parsed = parse_arch_notation(&notation, input).unwrap();
            prop_assert_eq!(parsed, arch);
        }
    }
}
