//! Stacked-LSTM inference for the flip and continue-flipping-check models.
//!
//! Architecture: LSTM(S) -> LSTM(S) -> [dropout, identity at inference] ->
//! dense(fc_units) -> dense(out_units). The dense head reads the final hidden
//! state of the second LSTM.
//!
//! Gate order and names are explicit (`i`, `f`, `g`, `o`), biases are fully
//! resolved (no implicit forget bias) and kernels are `(out, in)` row-major.
//!
//! Model file (JSON, `format_version` 1):
//!
//! ```text
//! { "format_version": 1,
//!   "arch": { "model_kind": "flip", "input_dim": 2, "lstm1_units": 62, ... },
//!   "tensors": { "lstm1.W_i": [[..]], "lstm1.U_i": [[..]], "lstm1.b_i": [..], ...,
//!                "fc.W": [[..]], "fc.b": [..], "out.W": [[..]], "out.b": [..],
//!                "input.scale": [..], "input.offset": [..] } }
//! ```
//!
//! `input.scale` / `input.offset` are optional; when present each feature is
//! mapped to `x * scale + offset` before the first layer.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flip_engine::FeatureSequence;

pub const FORMAT_VERSION: u32 = 1;

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;

const GATES: [&str; 4] = ["i", "f", "g", "o"];

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read model file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error("unsupported format_version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("tensor `{tensor}` has shape {found:?}, expected {expected:?}")]
    ShapeMismatch { tensor: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("missing tensor `{0}`")]
    MissingTensor(String),
    #[error("unexpected tensor `{0}`")]
    UnknownTensor(String),
    #[error("architecture: {0}")]
    Arch(String),
    #[error("expected {expected_steps} x {expected_width} features, got {steps} x {width}")]
    InputShape { expected_steps: usize, expected_width: usize, steps: usize, width: usize },
    #[error("model kind is {found}, this operation needs {expected}")]
    WrongKind { expected: ModelKind, found: ModelKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Flip,
    Cfc,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Flip => "flip",
            ModelKind::Cfc => "cfc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Tanh,
    Relu,
    Selu,
    Sigmoid,
    Softmax,
}

pub fn sigmoid<T: Float>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

pub fn selu<T: Float>(x: T) -> T {
    let lambda = T::from(SELU_LAMBDA).unwrap();
    if x > T::zero() {
        lambda * x
    } else {
        lambda * T::from(SELU_ALPHA).unwrap() * x.exp_m1()
    }
}

impl ActivationKind {
    pub fn apply<T: Float>(self, v: &mut [T]) {
        match self {
            ActivationKind::Tanh => v.iter_mut().for_each(|x| *x = x.tanh()),
            ActivationKind::Relu => v.iter_mut().for_each(|x| *x = x.max(T::zero())),
            ActivationKind::Selu => v.iter_mut().for_each(|x| *x = selu(*x)),
            ActivationKind::Sigmoid => v.iter_mut().for_each(|x| *x = sigmoid(*x)),
            ActivationKind::Softmax => {
                let m = v.iter().copied().fold(T::neg_infinity(), T::max);
                let mut sum = T::zero();
                for x in v.iter_mut() {
                    *x = (*x - m).exp();
                    sum = sum + *x;
                }
                v.iter_mut().for_each(|x| *x = *x / sum);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchDescriptor {
    pub model_kind: ModelKind,
    pub input_dim: usize,
    pub lstm1_units: usize,
    pub lstm2_units: usize,
    pub fc_units: usize,
    pub out_units: usize,
    pub fc_activation: ActivationKind,
    pub out_activation: ActivationKind,
}

impl ArchDescriptor {
    /// Flip model for sequence length `s`: SELU head, sigmoid output.
    pub fn flip(s: usize, input_dim: usize) -> Self {
        ArchDescriptor {
            model_kind: ModelKind::Flip,
            input_dim,
            lstm1_units: s,
            lstm2_units: s,
            fc_units: 2 * s,
            out_units: s,
            fc_activation: ActivationKind::Selu,
            out_activation: ActivationKind::Sigmoid,
        }
    }

    /// Continue-flipping check for sequence length `s`: tanh head, sigmoid output.
    pub fn cfc(s: usize, input_dim: usize) -> Self {
        ArchDescriptor {
            model_kind: ModelKind::Cfc,
            input_dim,
            lstm1_units: s,
            lstm2_units: s,
            fc_units: s / 2,
            out_units: 2,
            fc_activation: ActivationKind::Tanh,
            out_activation: ActivationKind::Sigmoid,
        }
    }

    /// Sequence length `S` the model was built for.
    pub fn seq_len(&self) -> usize {
        self.lstm1_units
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let s = self.lstm1_units;
        let bad = |msg: String| Err(ModelError::Arch(msg));
        if s == 0 || self.input_dim == 0 {
            return bad("layer sizes must be positive".into());
        }
        if !self.input_dim.is_multiple_of(2) {
            return bad(format!("input_dim {} must be even (2j features)", self.input_dim));
        }
        if self.lstm2_units != s {
            return bad(format!("lstm2_units {} != lstm1_units {s}", self.lstm2_units));
        }
        let (fc, out) = match self.model_kind {
            ModelKind::Flip => (2 * s, s),
            ModelKind::Cfc => (s / 2, 2),
        };
        if self.fc_units != fc || self.out_units != out {
            return bad(format!(
                "{} model with S = {s} needs fc_units = {fc} and out_units = {out}, got {} and {}",
                self.model_kind, self.fc_units, self.out_units
            ));
        }
        if fc == 0 {
            return bad("fc layer would be empty".into());
        }
        Ok(())
    }
}

/// Row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Float> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Matrix { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols.max(1)).map(<[T]>::to_vec).collect()
    }

    /// `acc += self * x`.
    fn mul_acc(&self, x: &[T], acc: &mut [T]) {
        for (r, a) in acc.iter_mut().enumerate() {
            *a = self.row(r).iter().zip(x).fold(*a, |s, (&w, &v)| s + w * v);
        }
    }
}

/// One LSTM layer; index 0..4 of each array is gate i, f, g, o.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer<T> {
    pub input: [Matrix<T>; 4],
    pub recurrent: [Matrix<T>; 4],
    pub bias: [Vec<T>; 4],
}

impl<T: Float> LstmLayer<T> {
    pub fn zeros(units: usize, input_dim: usize) -> Self {
        LstmLayer {
            input: std::array::from_fn(|_| Matrix::zeros(units, input_dim)),
            recurrent: std::array::from_fn(|_| Matrix::zeros(units, units)),
            bias: std::array::from_fn(|_| vec![T::zero(); units]),
        }
    }

    pub fn units(&self) -> usize {
        self.bias[0].len()
    }

    pub fn input_dim(&self) -> usize {
        self.input[0].cols
    }

    /// Runs the layer over a sequence from zero state; returns every hidden state.
    pub fn run(&self, xs: &[Vec<T>]) -> Result<Vec<Vec<T>>, ModelError> {
        let n = self.units();
        let mut h = vec![T::zero(); n];
        let mut c = vec![T::zero(); n];
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            let (h2, c2) = lstm_cell_step(x, &h, &c, self)?;
            h = h2;
            c = c2;
            out.push(h.clone());
        }
        Ok(out)
    }
}

/// `i = s(W_i x + U_i h + b_i)`, `f = s(..)`, `g = tanh(..)`, `o = s(..)`,
/// `c' = f*c + i*g`, `h' = o*tanh(c')`.
pub fn lstm_cell_step<T: Float>(
    x: &[T],
    h: &[T],
    c: &[T],
    layer: &LstmLayer<T>,
) -> Result<(Vec<T>, Vec<T>), ModelError> {
    let n = layer.units();
    if x.len() != layer.input_dim() || h.len() != n || c.len() != n {
        return Err(ModelError::InputShape {
            expected_steps: n,
            expected_width: layer.input_dim(),
            steps: h.len().min(c.len()),
            width: x.len(),
        });
    }
    let mut pre: [Vec<T>; 4] = std::array::from_fn(|g| layer.bias[g].clone());
    for (g, acc) in pre.iter_mut().enumerate() {
        layer.input[g].mul_acc(x, acc);
        layer.recurrent[g].mul_acc(h, acc);
    }
    let mut h_new = vec![T::zero(); n];
    let mut c_new = vec![T::zero(); n];
    for k in 0..n {
        let i = sigmoid(pre[0][k]);
        let f = sigmoid(pre[1][k]);
        let g = pre[2][k].tanh();
        let o = sigmoid(pre[3][k]);
        c_new[k] = f * c[k] + i * g;
        h_new[k] = o * c_new[k].tanh();
    }
    Ok((h_new, c_new))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: ActivationKind,
}

impl<T: Float> Dense<T> {
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let mut y = self.bias.clone();
        self.weight.mul_acc(x, &mut y);
        self.activation.apply(&mut y);
        y
    }
}

/// A loaded model; immutable once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    arch: ArchDescriptor,
    pub lstm1: LstmLayer<f32>,
    pub lstm2: LstmLayer<f32>,
    pub fc: Dense<f32>,
    pub out: Dense<f32>,
    pub input_scale: Option<Vec<f32>>,
    pub input_offset: Option<Vec<f32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Tensor {
    Matrix(Vec<Vec<f32>>),
    Vector(Vec<f32>),
}

impl Tensor {
    fn shape(&self) -> Vec<usize> {
        match self {
            Tensor::Matrix(m) => vec![m.len(), m.first().map_or(0, Vec::len)],
            Tensor::Vector(v) => vec![v.len()],
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    arch: ArchDescriptor,
    tensors: BTreeMap<String, Tensor>,
}

struct TensorTable(BTreeMap<String, Tensor>);

impl TensorTable {
    fn take(&mut self, name: &str) -> Result<Tensor, ModelError> {
        self.0.remove(name).ok_or_else(|| ModelError::MissingTensor(name.to_string()))
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<Matrix<f32>, ModelError> {
        let t = self.take(name)?;
        let mismatch = |found| ModelError::ShapeMismatch { tensor: name.into(), expected: vec![rows, cols], found };
        match t {
            Tensor::Matrix(m) => {
                let found = Tensor::Matrix(m.clone()).shape();
                if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                    return Err(mismatch(found));
                }
                Ok(Matrix::from_rows(&m).expect("ragged rows rejected above"))
            }
            // An empty matrix may serialize as `[]`.
            Tensor::Vector(v) if v.is_empty() && rows == 0 => Ok(Matrix::zeros(0, cols)),
            other => Err(mismatch(other.shape())),
        }
    }

    fn vector(&mut self, name: &str, len: usize) -> Result<Vec<f32>, ModelError> {
        match self.take(name)? {
            Tensor::Vector(v) if v.len() == len => Ok(v),
            other => Err(ModelError::ShapeMismatch { tensor: name.into(), expected: vec![len], found: other.shape() }),
        }
    }

    fn lstm(&mut self, prefix: &str, units: usize, input_dim: usize) -> Result<LstmLayer<f32>, ModelError> {
        let mut layer = LstmLayer::zeros(units, input_dim);
        for (g, gate) in GATES.iter().enumerate() {
            layer.input[g] = self.matrix(&format!("{prefix}.W_{gate}"), units, input_dim)?;
            layer.recurrent[g] = self.matrix(&format!("{prefix}.U_{gate}"), units, units)?;
            layer.bias[g] = self.vector(&format!("{prefix}.b_{gate}"), units)?;
        }
        Ok(layer)
    }
}

impl ModelWeights {
    /// All-zero weights for `arch`.
    pub fn zeros(arch: ArchDescriptor) -> Result<Self, ModelError> {
        arch.validate()?;
        Ok(ModelWeights {
            arch,
            lstm1: LstmLayer::zeros(arch.lstm1_units, arch.input_dim),
            lstm2: LstmLayer::zeros(arch.lstm2_units, arch.lstm1_units),
            fc: Dense {
                weight: Matrix::zeros(arch.fc_units, arch.lstm2_units),
                bias: vec![0.0; arch.fc_units],
                activation: arch.fc_activation,
            },
            out: Dense {
                weight: Matrix::zeros(arch.out_units, arch.fc_units),
                bias: vec![0.0; arch.out_units],
                activation: arch.out_activation,
            },
            input_scale: None,
            input_offset: None,
        })
    }

    pub fn arch(&self) -> &ArchDescriptor {
        &self.arch
    }

    pub fn kind(&self) -> ModelKind {
        self.arch.model_kind
    }

    pub fn seq_len(&self) -> usize {
        self.arch.seq_len()
    }

    pub fn parameter_count(&self) -> usize {
        let a = &self.arch;
        let lstm = |u: usize, d: usize| 4 * (u * d + u * u + u);
        lstm(a.lstm1_units, a.input_dim)
            + lstm(a.lstm2_units, a.lstm1_units)
            + a.fc_units * (a.lstm2_units + 1)
            + a.out_units * (a.fc_units + 1)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
        if file.format_version != FORMAT_VERSION {
            return Err(ModelError::Version { found: file.format_version });
        }
        let arch = file.arch;
        arch.validate()?;
        let mut t = TensorTable(file.tensors);
        let lstm1 = t.lstm("lstm1", arch.lstm1_units, arch.input_dim)?;
        let lstm2 = t.lstm("lstm2", arch.lstm2_units, arch.lstm1_units)?;
        let fc = Dense {
            weight: t.matrix("fc.W", arch.fc_units, arch.lstm2_units)?,
            bias: t.vector("fc.b", arch.fc_units)?,
            activation: arch.fc_activation,
        };
        let out = Dense {
            weight: t.matrix("out.W", arch.out_units, arch.fc_units)?,
            bias: t.vector("out.b", arch.out_units)?,
            activation: arch.out_activation,
        };
        let input_scale = match t.0.contains_key("input.scale") {
            true => Some(t.vector("input.scale", arch.input_dim)?),
            false => None,
        };
        let input_offset = match t.0.contains_key("input.offset") {
            true => Some(t.vector("input.offset", arch.input_dim)?),
            false => None,
        };
        if let Some(name) = t.0.keys().next() {
            return Err(ModelError::UnknownTensor(name.clone()));
        }
        Ok(ModelWeights { arch, lstm1, lstm2, fc, out, input_scale, input_offset })
    }

    pub fn to_json(&self) -> String {
        let mut tensors = BTreeMap::new();
        for (prefix, layer) in [("lstm1", &self.lstm1), ("lstm2", &self.lstm2)] {
            for (g, gate) in GATES.iter().enumerate() {
                tensors.insert(format!("{prefix}.W_{gate}"), Tensor::Matrix(layer.input[g].to_rows()));
                tensors.insert(format!("{prefix}.U_{gate}"), Tensor::Matrix(layer.recurrent[g].to_rows()));
                tensors.insert(format!("{prefix}.b_{gate}"), Tensor::Vector(layer.bias[g].clone()));
            }
        }
        tensors.insert("fc.W".into(), Tensor::Matrix(self.fc.weight.to_rows()));
        tensors.insert("fc.b".into(), Tensor::Vector(self.fc.bias.clone()));
        tensors.insert("out.W".into(), Tensor::Matrix(self.out.weight.to_rows()));
        tensors.insert("out.b".into(), Tensor::Vector(self.out.bias.clone()));
        if let Some(s) = &self.input_scale {
            tensors.insert("input.scale".into(), Tensor::Vector(s.clone()));
        }
        if let Some(o) = &self.input_offset {
            tensors.insert("input.offset".into(), Tensor::Vector(o.clone()));
        }
        let file = ModelFile { format_version: FORMAT_VERSION, arch: self.arch, tensors };
        serde_json::to_string(&file).expect("model serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ModelError::Io { path: path.display().to_string(), source })
    }

    fn prepare_input(&self, features: &FeatureSequence) -> Result<Vec<Vec<f32>>, ModelError> {
        let (s, d) = (self.seq_len(), self.arch.input_dim);
        if features.steps() != s || features.width() != d {
            return Err(ModelError::InputShape {
                expected_steps: s,
                expected_width: d,
                steps: features.steps(),
                width: features.width(),
            });
        }
        Ok((0..s)
            .map(|k| {
                features
                    .step(k)
                    .iter()
                    .enumerate()
                    .map(|(c, &v)| {
                        let scale = self.input_scale.as_ref().map_or(1.0, |s| s[c]);
                        let offset = self.input_offset.as_ref().map_or(0.0, |o| o[c]);
                        v as f32 * scale + offset
                    })
                    .collect()
            })
            .collect())
    }

    /// Raw output-layer activations.
    pub fn forward(&self, features: &FeatureSequence) -> Result<Vec<f32>, ModelError> {
        let xs = self.prepare_input(features)?;
        let h1 = self.lstm1.run(&xs)?;
        let h2 = self.lstm2.run(&h1)?;
        let last = h2.last().expect("sequence length validated to be positive");
        Ok(self.out.forward(&self.fc.forward(last)))
    }
}

/// Reads and validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelWeights, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
    ModelWeights::from_json(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipScores {
    /// One score per step of `A \ B`.
    pub scores: Vec<f32>,
    /// Step ordinals by descending score, ties by ascending ordinal.
    pub ranking: Vec<usize>,
}

pub fn flip_model_forward(model: &ModelWeights, features: &FeatureSequence) -> Result<FlipScores, ModelError> {
    if model.kind() != ModelKind::Flip {
        return Err(ModelError::WrongKind { expected: ModelKind::Flip, found: model.kind() });
    }
    let scores = model.forward(features)?;
    let mut ranking: Vec<usize> = (0..scores.len()).collect();
    ranking.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(FlipScores { scores, ranking })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfcOutput {
    /// `[stop, continue]`.
    pub scores: [f32; 2],
    pub continue_flipping: bool,
}

pub fn cfc_model_forward(model: &ModelWeights, features: &FeatureSequence) -> Result<CfcOutput, ModelError> {
    if model.kind() != ModelKind::Cfc {
        return Err(ModelError::WrongKind { expected: ModelKind::Cfc, found: model.kind() });
    }
    let s = model.forward(features)?;
    let scores = [s[0], s[1]];
    Ok(CfcOutput { scores, continue_flipping: cfc_decision(scores) })
}

/// Argmax of `[stop, continue]`; a tie means stop.
pub fn cfc_decision(scores: [f32; 2]) -> bool {
    scores[1] > scores[0]
}
