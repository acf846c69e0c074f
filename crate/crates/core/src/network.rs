//! Feedforward networks with per-neuron Identity, ReLU or BiSU activations.
//!
//! Weights are stored as coordinate triplets sorted by `(row, col)` with no
//! explicit zeros, so the nonzero count that enters the size metric is just
//! the triplet count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("network has no layers")]
    Empty,
    #[error("layer {layer}: triplet ({row}, {col}) is out of bounds for a {rows}x{cols} matrix")]
    TripletOutOfBounds {
        layer: usize,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("layer {layer}: explicit zero weight at ({row}, {col})")]
    ExplicitZero { layer: usize, row: usize, col: usize },
    #[error("layer {layer}: duplicate entry at ({row}, {col})")]
    DuplicateEntry { layer: usize, row: usize, col: usize },
    #[error("layer {layer}: non-finite parameter")]
    NonFinite { layer: usize },
    #[error("layer {layer}: {what} has length {found}, expected {expected}")]
    LengthMismatch {
        layer: usize,
        what: &'static str,
        found: usize,
        expected: usize,
    },
    #[error("layer {layer} has {found} columns but the previous layer has {expected} outputs")]
    ChainMismatch { layer: usize, found: usize, expected: usize },
    #[error("the last layer must use the identity activation")]
    OutputActivation,
    #[error("input has length {found}, network expects {expected}")]
    InputDimension { found: usize, expected: usize },
    #[error("incompatible networks: {0}")]
    Incompatible(String),
    #[error("malformed network file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    #[serde(rename = "id")]
    Identity,
    #[serde(rename = "relu")]
    ReLU,
    #[serde(rename = "bisu")]
    BiSU,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::ReLU => x.max(0.0),
            Activation::BiSU => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// One affine map followed by per-neuron activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    triplets: Vec<(usize, usize, f64)>,
    bias: Vec<f64>,
    act: Vec<Activation>,
    row_start: Vec<usize>,
}

impl Layer {
    /// Strict constructor: rejects zeros, duplicates and out-of-range entries.
    pub fn new(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        bias: Vec<f64>,
        act: Vec<Activation>,
    ) -> Result<Self, NetError> {
        Self::check(0, rows, cols, &mut triplets, &bias, &act)?;
        Ok(Self::assemble(rows, cols, triplets, bias, act))
    }

    /// Lenient constructor for builders: sums duplicate entries and drops
    /// zeros (including cancellations).
    pub fn build(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        bias: Vec<f64>,
        act: Vec<Activation>,
    ) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, w) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) outside {rows}x{cols}");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += w,
                _ => merged.push((r, c, w)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        assert_eq!(bias.len(), rows);
        assert_eq!(act.len(), rows);
        Self::assemble(rows, cols, merged, bias, act)
    }

    /// Dense `rows x cols` matrix given row-major.
    pub fn dense(matrix: &[Vec<f64>], cols: usize, bias: Vec<f64>, act: Vec<Activation>) -> Self {
        let triplets = matrix
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &w)| (r, c, w)))
            .collect();
        Self::build(matrix.len(), cols, triplets, bias, act)
    }

    fn check(
        layer: usize,
        rows: usize,
        cols: usize,
        triplets: &mut [(usize, usize, f64)],
        bias: &[f64],
        act: &[Activation],
    ) -> Result<(), NetError> {
        if bias.len() != rows {
            return Err(NetError::LengthMismatch {
                layer,
                what: "bias",
                found: bias.len(),
                expected: rows,
            });
        }
        if act.len() != rows {
            return Err(NetError::LengthMismatch {
                layer,
                what: "activation list",
                found: act.len(),
                expected: rows,
            });
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(NetError::NonFinite { layer });
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (k, &(row, col, w)) in triplets.iter().enumerate() {
            if row >= rows || col >= cols {
                return Err(NetError::TripletOutOfBounds {
                    layer,
                    row,
                    col,
                    rows,
                    cols,
                });
            }
            if w == 0.0 {
                return Err(NetError::ExplicitZero { layer, row, col });
            }
            if !w.is_finite() {
                return Err(NetError::NonFinite { layer });
            }
            if k > 0 && triplets[k - 1].0 == row && triplets[k - 1].1 == col {
                return Err(NetError::DuplicateEntry { layer, row, col });
            }
        }
        Ok(())
    }

    fn assemble(rows: usize, cols: usize, triplets: Vec<(usize, usize, f64)>, bias: Vec<f64>, act: Vec<Activation>) -> Self {
        let mut row_start = vec![0; rows + 1];
        for &(r, _, _) in &triplets {
            row_start[r + 1] += 1;
        }
        for r in 0..rows {
            row_start[r + 1] += row_start[r];
        }
        Self {
            rows,
            cols,
            triplets,
            bias,
            act,
            row_start,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activations(&self) -> &[Activation] {
        &self.act
    }

    /// Triplets of row `r`.
    pub fn row(&self, r: usize) -> &[(usize, usize, f64)] {
        &self.triplets[self.row_start[r]..self.row_start[r + 1]]
    }

    /// Nonzeros of the weight matrix plus nonzeros of the bias.
    pub fn size(&self) -> usize {
        self.triplets.len() + self.bias.iter().filter(|b| **b != 0.0).count()
    }

    pub fn weight_nnz(&self) -> usize {
        self.triplets.len()
    }

    /// Applies the layer: `act(A x + b)`.
    pub fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.reserve(self.rows);
        for r in 0..self.rows {
            let mut acc = self.bias[r];
            for &(_, c, w) in self.row(r) {
                acc += w * x[c];
            }
            out.push(self.act[r].apply(acc));
        }
    }

    /// Same weights and bias, new activation list.
    pub fn with_activations(&self, act: Vec<Activation>) -> Self {
        assert_eq!(act.len(), self.rows);
        Self { act, ..self.clone() }
    }
}

/// Depth and size figures of a network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub depth: usize,
    pub size: usize,
    pub size_in: usize,
    pub size_out: usize,
    pub per_layer: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self, NetError> {
        let last = layers.last().ok_or(NetError::Empty)?;
        if last.act.iter().any(|a| *a != Activation::Identity) {
            return Err(NetError::OutputActivation);
        }
        let mut expected = input_dim;
        for (layer, l) in layers.iter().enumerate() {
            if l.cols != expected {
                return Err(NetError::ChainMismatch {
                    layer,
                    found: l.cols,
                    expected,
                });
            }
            expected = l.rows;
        }
        Ok(Self { input_dim, layers })
    }

    /// Single affine layer `x -> A x + b` with identity activation.
    pub fn affine(matrix: &[Vec<f64>], bias: Vec<f64>, input_dim: usize) -> Self {
        let act = vec![Activation::Identity; matrix.len()];
        Self::new(input_dim, vec![Layer::dense(matrix, input_dim, bias, act)]).expect("affine layer is well formed")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").rows
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn size(&self) -> usize {
        self.layers.iter().map(Layer::size).sum()
    }

    pub fn metrics(&self) -> Metrics {
        let per_layer: Vec<usize> = self.layers.iter().map(Layer::size).collect();
        Metrics {
            depth: self.layers.len(),
            size: per_layer.iter().sum(),
            size_in: per_layer[0],
            size_out: *per_layer.last().expect("nonempty"),
            per_layer,
        }
    }

    /// Number of neurons carrying the given activation.
    pub fn count_activation(&self, tag: Activation) -> usize {
        self.layers.iter().flat_map(|l| l.act.iter()).filter(|a| **a == tag).count()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        if x.len() != self.input_dim {
            return Err(NetError::InputDimension {
                found: x.len(),
                expected: self.input_dim,
            });
        }
        Ok(self.eval(x))
    }

    /// Evaluation without the input-length check.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut current = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        current
    }

    /// Evaluates many inputs in parallel; results are in input order.
    pub fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, NetError> {
        if let Some(bad) = xs.iter().find(|x| x.len() != self.input_dim) {
            return Err(NetError::InputDimension {
                found: bad.len(),
                expected: self.input_dim,
            });
        }
        Ok(xs.par_iter().map(|x| self.eval(x)).collect())
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    rows: l.rows,
                    cols: l.cols,
                    triplets: l.triplets.clone(),
                    bias: l.bias.clone(),
                    act: l.act.clone(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: NetworkFile) -> Result<Self, NetError> {
        let mut layers = Vec::with_capacity(file.layers.len());
        for (index, l) in file.layers.into_iter().enumerate() {
            let mut triplets = l.triplets;
            Layer::check(index, l.rows, l.cols, &mut triplets, &l.bias, &l.act)?;
            layers.push(Layer::assemble(l.rows, l.cols, triplets, l.bias, l.act));
        }
        Self::new(file.input_dim, layers)
    }

    /// JSON with shortest round-trip float formatting; parsing back yields
    /// bit-identical weights.
    pub fn serialize(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_file()).expect("network serialization cannot fail")
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self, NetError> {
        let file: NetworkFile = serde_json::from_slice(bytes).map_err(|e| NetError::Parse(e.to_string()))?;
        Self::from_file(file)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerFile {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub bias: Vec<f64>,
    pub act: Vec<Activation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub input_dim: usize,
    pub layers: Vec<LayerFile>,
}
