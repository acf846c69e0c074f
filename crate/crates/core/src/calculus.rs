//! Network combinators (parallelization, sum, sparse concatenation) and the
//! gadget networks built from them: identity, min/max, times-step,
//! indicator and piecewise-linear emulation.
//!
//! Size and depth guarantees are checked with `assert!` at build time, so a
//! combinator that silently exceeded its bound would panic rather than
//! produce an oversized network.

use thiserror::Error;

use crate::mesh::{barycentric_forms, AffineForm, MeshError, Point};
use crate::network::{Activation, Layer, NetError, Network};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("kappa = {given} is below the required bound {required}")]
    KappaTooSmall { given: f64, required: f64 },
    #[error("kappa must be positive and finite, got {0}")]
    InvalidKappa(f64),
    #[error("at least one piece is required")]
    NoPieces,
    #[error("piece {0} has inconsistent dimensions")]
    PieceShape(usize),
    #[error("the half-space system has no constraints")]
    EmptySystem,
}

/// Runs the network combinators on a slice, returning an error for an empty
/// slice or for mismatched shapes.
pub fn parallelize(nets: &[Network]) -> Result<Network, NetError> {
    let first = nets.first().ok_or(NetError::Empty)?;
    let input_dim = first.input_dim();
    let depth = first.depth();
    for (k, net) in nets.iter().enumerate() {
        if net.input_dim() != input_dim || net.depth() != depth {
            return Err(NetError::Incompatible(format!(
                "parallelization needs equal input dimension and depth; net {k} has ({}, {}), net 0 has ({input_dim}, {depth})",
                net.input_dim(),
                net.depth()
            )));
        }
    }
    let layers = (0..depth)
        .map(|l| {
            let parts: Vec<&Layer> = nets.iter().map(|n| &n.layers()[l]).collect();
            if l == 0 {
                stack_rows(&parts)
            } else {
                block_diagonal(&parts)
            }
        })
        .collect();
    let out = Network::new(input_dim, layers)?;
    assert_eq!(out.size(), nets.iter().map(Network::size).sum::<usize>());
    Ok(out)
}

/// Pointwise sum of the realizations.
pub fn sum(nets: &[Network]) -> Result<Network, NetError> {
    let first = nets.first().ok_or(NetError::Empty)?;
    let (input_dim, output_dim, depth) = (first.input_dim(), first.output_dim(), first.depth());
    for (k, net) in nets.iter().enumerate() {
        if net.input_dim() != input_dim || net.output_dim() != output_dim || net.depth() != depth {
            return Err(NetError::Incompatible(format!(
                "sum needs equal input dimension, output dimension and depth; net {k} differs from net 0"
            )));
        }
    }
    let mut layers: Vec<Layer> = Vec::with_capacity(depth);
    if depth == 1 {
        let mut triplets = Vec::new();
        let mut bias = vec![0.0; output_dim];
        for net in nets {
            let l = &net.layers()[0];
            triplets.extend_from_slice(l.triplets());
            bias.iter_mut().zip(l.bias()).for_each(|(b, x)| *b += x);
        }
        layers.push(Layer::build(output_dim, input_dim, triplets, bias, vec![Activation::Identity; output_dim]));
    } else {
        for l in 0..depth - 1 {
            let parts: Vec<&Layer> = nets.iter().map(|n| &n.layers()[l]).collect();
            layers.push(if l == 0 { stack_rows(&parts) } else { block_diagonal(&parts) });
        }
        let mut triplets = Vec::new();
        let mut bias = vec![0.0; output_dim];
        let mut offset = 0;
        for net in nets {
            let l = &net.layers()[depth - 1];
            triplets.extend(l.triplets().iter().map(|&(r, c, w)| (r, c + offset, w)));
            bias.iter_mut().zip(l.bias()).for_each(|(b, x)| *b += x);
            offset += l.cols();
        }
        layers.push(Layer::build(output_dim, offset, triplets, bias, vec![Activation::Identity; output_dim]));
    }
    let out = Network::new(input_dim, layers)?;
    assert!(out.size() <= nets.iter().map(Network::size).sum::<usize>());
    Ok(out)
}

/// Sparse concatenation `outer ⊙ inner`: the affine output of `inner` is
/// split into `ρ(y)` and `ρ(-y)` and recombined in the first layer of
/// `outer`, so the depth is `L(outer) + L(inner)`.
pub fn concat(outer: &Network, inner: &Network) -> Result<Network, NetError> {
    if outer.input_dim() != inner.output_dim() {
        return Err(NetError::Incompatible(format!(
            "concatenation: inner output dimension {} differs from outer input dimension {}",
            inner.output_dim(),
            outer.input_dim()
        )));
    }
    let inner_layers = inner.layers();
    let outer_layers = outer.layers();
    let mut layers: Vec<Layer> = inner_layers[..inner_layers.len() - 1].to_vec();

    let last = &inner_layers[inner_layers.len() - 1];
    let n = last.rows();
    let mut triplets = Vec::with_capacity(2 * last.weight_nnz());
    for &(r, c, w) in last.triplets() {
        triplets.push((r, c, w));
        triplets.push((r + n, c, -w));
    }
    let bias: Vec<f64> = last.bias().iter().copied().chain(last.bias().iter().map(|b| -b)).collect();
    layers.push(Layer::build(2 * n, last.cols(), triplets, bias, vec![Activation::ReLU; 2 * n]));

    let head = &outer_layers[0];
    let mut triplets = Vec::with_capacity(2 * head.weight_nnz());
    for &(r, c, w) in head.triplets() {
        triplets.push((r, c, w));
        triplets.push((r, c + n, -w));
    }
    layers.push(Layer::build(head.rows(), 2 * n, triplets, head.bias().to_vec(), head.activations().to_vec()));
    layers.extend_from_slice(&outer_layers[1..]);

    let out = Network::new(inner.input_dim(), layers)?;
    assert_eq!(out.depth(), outer.depth() + inner.depth());
    assert!(out.size() <= 2 * outer.size() + 2 * inner.size());
    Ok(out)
}

/// Composition that multiplies the affine output layer of `inner` into the
/// first layer of `outer`. Depth is `L(outer) + L(inner) - 1`; the size is
/// not controlled in general, so this is only used where the merged layers
/// stay sparse (min/max trees, output specializations).
pub fn compose(outer: &Network, inner: &Network) -> Result<Network, NetError> {
    if outer.input_dim() != inner.output_dim() {
        return Err(NetError::Incompatible(format!(
            "composition: inner output dimension {} differs from outer input dimension {}",
            inner.output_dim(),
            outer.input_dim()
        )));
    }
    let inner_layers = inner.layers();
    let last = &inner_layers[inner_layers.len() - 1];
    let head = &outer.layers()[0];
    let mut triplets = Vec::new();
    let mut bias = head.bias().to_vec();
    for &(r, k, w) in head.triplets() {
        for &(_, c, v) in last.row(k) {
            triplets.push((r, c, w * v));
        }
        bias[r] += w * last.bias()[k];
    }
    let merged = Layer::build(head.rows(), last.cols(), triplets, bias, head.activations().to_vec());
    let mut layers: Vec<Layer> = inner_layers[..inner_layers.len() - 1].to_vec();
    layers.push(merged);
    layers.extend_from_slice(&outer.layers()[1..]);
    Network::new(inner.input_dim(), layers)
}

/// Left-multiplies the output of `net` by `matrix` (rows × output_dim)
/// without adding a layer.
pub fn map_output(matrix: &[Vec<f64>], net: &Network) -> Network {
    let outer = Network::affine(matrix, vec![0.0; matrix.len()], net.output_dim());
    compose(&outer, net).expect("output map matches the network's output dimension")
}

/// ReLU network of depth `depth` realizing the identity on `R^dim`.
pub fn identity_net(dim: usize, depth: usize) -> Network {
    assert!(dim >= 1 && depth >= 1);
    let id = |n: usize, sign: f64, row_offset: usize, col_offset: usize| -> Vec<(usize, usize, f64)> {
        (0..n).map(|k| (k + row_offset, k + col_offset, sign)).collect()
    };
    let net = if depth == 1 {
        Network::new(
            dim,
            vec![Layer::build(dim, dim, id(dim, 1.0, 0, 0), vec![0.0; dim], vec![Activation::Identity; dim])],
        )
    } else {
        let mut layers = Vec::with_capacity(depth);
        let mut split = id(dim, 1.0, 0, 0);
        split.extend(id(dim, -1.0, dim, 0));
        layers.push(Layer::build(2 * dim, dim, split, vec![0.0; 2 * dim], vec![Activation::ReLU; 2 * dim]));
        for _ in 1..depth - 1 {
            layers.push(Layer::build(
                2 * dim,
                2 * dim,
                id(2 * dim, 1.0, 0, 0),
                vec![0.0; 2 * dim],
                vec![Activation::ReLU; 2 * dim],
            ));
        }
        let mut join = id(dim, 1.0, 0, 0);
        join.extend(id(dim, -1.0, 0, dim));
        layers.push(Layer::build(dim, 2 * dim, join, vec![0.0; dim], vec![Activation::Identity; dim]));
        Network::new(dim, layers)
    }
    .expect("identity net is well formed");
    assert_eq!(net.depth(), depth);
    assert!(net.size() <= 2 * dim * depth);
    net
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Reduction {
    Max,
    Min,
}

/// One level of a min/max reduction tree: pairs `(x_{2j}, x_{2j+1})` go
/// through the explicit 2-input gadget, an unpaired last value through a
/// `ρ(u) - ρ(-u)` channel.
fn reduction_level(inputs: usize, kind: Reduction) -> Network {
    let pairs = inputs / 2;
    let odd = inputs % 2 == 1;
    let hidden = 3 * pairs + if odd { 2 } else { 0 };
    let outputs = pairs + usize::from(odd);
    let (s, o) = match kind {
        Reduction::Max => (1.0, 1.0),
        Reduction::Min => (-1.0, -1.0),
    };
    let mut first = Vec::new();
    let mut second = Vec::new();
    for j in 0..pairs {
        let (a, b, r) = (2 * j, 2 * j + 1, 3 * j);
        // max: ρ(a - b) + ρ(b) - ρ(-b);  min: -ρ(b - a) + ρ(b) - ρ(-b).
        first.extend([(r, a, s), (r, b, -s), (r + 1, b, 1.0), (r + 2, b, -1.0)]);
        second.extend([(j, r, o), (j, r + 1, 1.0), (j, r + 2, -1.0)]);
    }
    if odd {
        let (a, r) = (inputs - 1, 3 * pairs);
        first.extend([(r, a, 1.0), (r + 1, a, -1.0)]);
        second.extend([(pairs, r, 1.0), (pairs, r + 1, -1.0)]);
    }
    Network::new(
        inputs,
        vec![
            Layer::build(hidden, inputs, first, vec![0.0; hidden], vec![Activation::ReLU; hidden]),
            Layer::build(outputs, hidden, second, vec![0.0; outputs], vec![Activation::Identity; outputs]),
        ],
    )
    .expect("reduction level is well formed")
}

fn reduction_net(dim: usize, kind: Reduction) -> Network {
    assert!(dim >= 1);
    if dim == 1 {
        return identity_net(1, 2);
    }
    let mut net = reduction_level(dim, kind);
    while net.output_dim() > 1 {
        let level = reduction_level(net.output_dim(), kind);
        net = compose(&level, &net).expect("levels chain");
    }
    assert_eq!(net.depth(), ceil_log2(dim) + 1);
    assert!(net.size() <= 18 * dim);
    net
}

/// Exact `max` of `dim` inputs; depth `1 + ⌈log2 dim⌉`.
pub fn max_net(dim: usize) -> Network {
    reduction_net(dim, Reduction::Max)
}

/// Exact `min` of `dim` inputs; depth `1 + ⌈log2 dim⌉`.
pub fn min_net(dim: usize) -> Network {
    reduction_net(dim, Reduction::Min)
}

/// Realizes `(x, y) -> x y` for `x ∈ [-κ, κ]^dim`, `y ∈ {0, 1}` with the
/// four-ramp gadget per component. Depth 2, size `12 dim`.
pub fn times_step_net(dim: usize, kappa: f64) -> Network {
    assert!(kappa > 0.0 && kappa.is_finite());
    let y = dim;
    let inv = 1.0 / kappa;
    let half = 0.5 * kappa;
    let mut first = Vec::with_capacity(8 * dim);
    let mut second = Vec::with_capacity(4 * dim);
    for k in 0..dim {
        let r = 4 * k;
        first.extend([
            (r, k, inv),
            (r, y, 1.0),
            (r + 1, k, -inv),
            (r + 1, y, -1.0),
            (r + 2, k, inv),
            (r + 2, y, -1.0),
            (r + 3, k, -inv),
            (r + 3, y, 1.0),
        ]);
        second.extend([(k, r, half), (k, r + 1, half), (k, r + 2, -half), (k, r + 3, -half)]);
    }
    let net = Network::new(
        dim + 1,
        vec![
            Layer::build(4 * dim, dim + 1, first, vec![0.0; 4 * dim], vec![Activation::ReLU; 4 * dim]),
            Layer::build(dim, 4 * dim, second, vec![0.0; dim], vec![Activation::Identity; dim]),
        ],
    )
    .expect("times-step net is well formed");
    assert_eq!(net.depth(), 2);
    assert_eq!(net.size(), 12 * dim);
    net
}

/// `{x : A_i x + b_i = 0 (i ≤ n), A_i x + b_i > 0 (i > n)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceSystem {
    pub equalities: Vec<AffineForm>,
    pub strict_inequalities: Vec<AffineForm>,
}

impl HalfspaceSystem {
    /// Open simplex as the positivity set of its barycentric forms.
    pub fn open_simplex(points: &[Point]) -> Result<Self, MeshError> {
        Ok(Self {
            equalities: Vec::new(),
            strict_inequalities: barycentric_forms(points)?,
        })
    }

    pub fn dim(&self) -> Option<usize> {
        self.equalities
            .first()
            .or(self.strict_inequalities.first())
            .map(|f| f.linear.len())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.equalities.iter().all(|f| f.eval(x) == 0.0) && self.strict_inequalities.iter().all(|f| f.eval(x) > 0.0)
    }
}

/// Three-layer BiSU network realizing the indicator of a half-space system
/// exactly on all of `R^d`.
pub fn indicator_net(sys: &HalfspaceSystem) -> Result<Network, CalculusError> {
    let d = sys.dim().ok_or(CalculusError::EmptySystem)?;
    let n = sys.equalities.len();
    let big_n = n + sys.strict_inequalities.len();
    let rows = big_n + n;
    let mut first = Vec::new();
    let mut bias = Vec::with_capacity(rows);
    let forms = sys
        .equalities
        .iter()
        .flat_map(|f| [f.clone(), f.negated()])
        .chain(sys.strict_inequalities.iter().cloned());
    for (r, form) in forms.enumerate() {
        if form.linear.len() != d {
            return Err(CalculusError::PieceShape(r));
        }
        first.extend(form.linear.iter().enumerate().map(|(c, &w)| (r, c, w)));
        bias.push(form.offset);
    }
    let second: Vec<_> = (0..rows).map(|c| (0, c, if c < 2 * n { -1.0 } else { 1.0 })).collect();
    let threshold = -((big_n - n) as f64 - 0.25);
    let net = Network::new(
        d,
        vec![
            Layer::build(rows, d, first, bias, vec![Activation::BiSU; rows]),
            Layer::build(1, rows, second, vec![threshold], vec![Activation::BiSU]),
            Layer::build(1, 1, vec![(0, 0, 1.0)], vec![0.0], vec![Activation::Identity]),
        ],
    )?;
    assert_eq!(net.depth(), 3);
    assert!(net.size() <= (d + 2) * rows + 2);
    Ok(net)
}

/// How the times-step scale is chosen for [`pwl_net`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    /// Maximum of `|A v + b|_∞` over all cell vertices.
    Auto,
    Given(f64),
}

/// An affine map `x -> A x + b` restricted to an open simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlPiece {
    /// `μ × d`, row-major.
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    /// The `d + 1` vertices of the cell.
    pub cell: Vec<Point>,
}

impl PwlPiece {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| row.iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>() + b)
            .collect()
    }

    fn nnz(&self) -> usize {
        self.matrix.iter().flatten().filter(|w| **w != 0.0).count() + self.offset.iter().filter(|b| **b != 0.0).count()
    }
}

/// Smallest admissible κ: the largest `|A v + b|_∞` over the cell vertices,
/// which bounds the affine pieces on their closed cells.
pub fn required_kappa(pieces: &[PwlPiece]) -> f64 {
    pieces
        .iter()
        .flat_map(|p| p.cell.iter().map(move |v| p.eval(v)))
        .flatten()
        .fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Size bound of [`pwl_net`] obtained from the concatenation, parallelization
/// and sum bounds applied to its building blocks.
pub fn pwl_size_bound(pieces: &[PwlPiece]) -> usize {
    pieces
        .iter()
        .map(|p| {
            let mu = p.offset.len();
            let d = p.cell.len() - 1;
            let indicator = (d + 2) * (d + 1) + 2;
            24 * mu + 16 * mu + 4 * p.nnz() + 2 * indicator
        })
        .sum()
}

/// Network realizing the piecewise-affine function that equals each piece
/// on its open cell and vanishes off the union of the closed cells. Depth 5.
pub fn pwl_net(pieces: &[PwlPiece], kappa: Kappa) -> Result<Network, CalculusError> {
    let first = pieces.first().ok_or(CalculusError::NoPieces)?;
    let mu = first.offset.len();
    let d = first.cell.len() - 1;
    for (k, p) in pieces.iter().enumerate() {
        let shape_ok = p.offset.len() == mu
            && p.matrix.len() == mu
            && p.matrix.iter().all(|row| row.len() == d)
            && p.cell.len() == d + 1
            && p.cell.iter().all(|v| v.len() == d);
        if !shape_ok {
            return Err(CalculusError::PieceShape(k));
        }
    }
    let required = required_kappa(pieces);
    let kappa = match kappa {
        Kappa::Auto => {
            if required > 0.0 {
                required
            } else {
                1.0
            }
        }
        Kappa::Given(k) => {
            if !(k > 0.0 && k.is_finite()) {
                return Err(CalculusError::InvalidKappa(k));
            }
            if k < required * (1.0 - 1e-12) {
                return Err(CalculusError::KappaTooSmall { given: k, required });
            }
            k
        }
    };
    let times = times_step_net(mu, kappa);
    let mut terms = Vec::with_capacity(pieces.len());
    for p in pieces {
        let affine = Network::affine(&p.matrix, p.offset.clone(), d);
        let value = concat(&identity_net(mu, 2), &affine)?;
        let indicator = indicator_net(&HalfspaceSystem::open_simplex(&p.cell)?)?;
        terms.push(concat(&times, &parallelize(&[value, indicator])?)?);
    }
    let net = sum(&terms)?;
    assert_eq!(net.depth(), 5);
    assert!(net.size() <= pwl_size_bound(pieces));
    Ok(net)
}

/// `⌈log2 n⌉` for `n ≥ 1`.
pub fn ceil_log2(n: usize) -> usize {
    assert!(n >= 1);
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

fn stack_rows(parts: &[&Layer]) -> Layer {
    let cols = parts[0].cols();
    let mut triplets = Vec::new();
    let mut bias = Vec::new();
    let mut act = Vec::new();
    let mut offset = 0;
    for l in parts {
        triplets.extend(l.triplets().iter().map(|&(r, c, w)| (r + offset, c, w)));
        bias.extend_from_slice(l.bias());
        act.extend_from_slice(l.activations());
        offset += l.rows();
    }
    Layer::build(offset, cols, triplets, bias, act)
}

fn block_diagonal(parts: &[&Layer]) -> Layer {
    let mut triplets = Vec::new();
    let mut bias = Vec::new();
    let mut act = Vec::new();
    let (mut row_offset, mut col_offset) = (0, 0);
    for l in parts {
        triplets.extend(l.triplets().iter().map(|&(r, c, w)| (r + row_offset, c + col_offset, w)));
        bias.extend_from_slice(l.bias());
        act.extend_from_slice(l.activations());
        row_offset += l.rows();
        col_offset += l.cols();
    }
    Layer::build(row_offset, col_offset, triplets, bias, act)
}
