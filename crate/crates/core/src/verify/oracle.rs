//! Reference finite element evaluation from barycentric coordinates and the
//! closed-form local bases. Uses only mesh topology and plain linear algebra.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::mesh::{Mesh, Point, SubsimplexIndex};
use crate::shapes::{dofs, SpaceKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("point {0:?} lies outside the mesh")]
    Outside(Point),
    #[error("point {0:?} lies on the skeleton")]
    OnSkeleton(Point),
    #[error("expected {expected} coefficients, got {found}")]
    CoefficientLength { expected: usize, found: usize },
    #[error("{0}")]
    Unsupported(String),
}

/// Barycentric coordinates tolerance for point location.
const LOCATE_TOL: f64 = 1e-12;

pub struct Oracle<'a> {
    mesh: &'a Mesh,
    kind: SpaceKind,
    dofs: Vec<SubsimplexIndex>,
    index: HashMap<Vec<usize>, usize>,
}

/// Barycentric coordinates of `x` in the simplex `points` by Cramer's rule.
pub fn cramer_barycentric(points: &[Point], x: &[f64]) -> Vec<f64> {
    let n = points.len();
    let build = |replace: Option<usize>| {
        DMatrix::from_fn(n, n, |r, c| {
            let col: &[f64] = if Some(c) == replace { x } else { &points[c] };
            if r + 1 == n {
                1.0
            } else {
                col[r]
            }
        })
    };
    let det = build(None).determinant();
    (0..n).map(|k| build(Some(k)).determinant() / det).collect()
}

/// Measure of a `k`-simplex embedded in `R^d` via its Gram determinant.
pub fn gram_measure(points: &[Point]) -> f64 {
    let k = points.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let d = points[0].len();
    let e = DMatrix::from_fn(d, k, |r, c| points[c + 1][r] - points[0][r]);
    let g = e.transpose() * e;
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    g.determinant().max(0.0).sqrt() / fact
}

impl<'a> Oracle<'a> {
    pub fn new(mesh: &'a Mesh, kind: SpaceKind) -> Result<Self, OracleError> {
        kind.check_dim(mesh.dim()).map_err(|e| OracleError::Unsupported(e.to_string()))?;
        let dofs = dofs(mesh, kind);
        let index = dofs.iter().enumerate().map(|(i, s)| (s.vertex_ids.clone(), i)).collect();
        Ok(Self { mesh, kind, dofs, index })
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn value_dim(&self) -> usize {
        self.kind.value_dim(self.mesh.dim())
    }

    /// The cell containing `x` (closed, up to a small tolerance) and its
    /// barycentric coordinates; prefers the cell where `x` is deepest.
    pub fn locate(&self, x: &[f64]) -> Option<(usize, Vec<f64>)> {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for c in 0..self.mesh.num_cells() {
            let lambda = cramer_barycentric(&self.mesh.cell_points(c), x);
            let m = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
            if m >= -LOCATE_TOL && best.as_ref().map_or(true, |b| m > b.2) {
                best = Some((c, lambda, m));
            }
        }
        best.map(|(c, l, _)| (c, l))
    }

    /// Nonzero local shape functions of `cell` at `x`: `(dof, value)` pairs.
    /// `x` may lie anywhere; the local closed forms are evaluated as given.
    pub fn local_basis(&self, cell: usize, x: &[f64]) -> Vec<(usize, Vec<f64>)> {
        let mesh = self.mesh;
        let d = mesh.dim();
        let ids = mesh.cell(cell);
        let pts = mesh.cell_points(cell);
        let lambda = cramer_barycentric(&pts, x);
        let dof = |key: Vec<usize>| self.index[&key];
        let face_of = |a: usize| {
            let mut f: Vec<usize> = ids.iter().enumerate().filter(|&(k, _)| k != a).map(|(_, &v)| v).collect();
            f.sort_unstable();
            f
        };
        match self.kind {
            SpaceKind::S1 | SpaceKind::S1ReluOnly => (0..=d).map(|k| (dof(vec![ids[k]]), vec![lambda[k]])).collect(),
            SpaceKind::S0 => vec![(dof(ids.to_vec()), vec![1.0])],
            SpaceKind::CR0 => (0..=d)
                .map(|a| (dof(face_of(a)), vec![1.0 - d as f64 * lambda[a]]))
                .collect(),
            SpaceKind::RT0 => (0..=d).map(|a| (dof(face_of(a)), self.rt0_local(cell, a, &pts, &lambda))).collect(),
            SpaceKind::N0 if d == 2 => (0..=d)
                .map(|a| {
                    let v = self.rt0_local(cell, a, &pts, &lambda);
                    (dof(face_of(a)), vec![-v[1], v[0]])
                })
                .collect(),
            SpaceKind::N0 => {
                let grads = barycentric_gradients(&pts, x, &lambda);
                let mut out = Vec::new();
                for i in 0..=d {
                    for j in 0..=d {
                        if ids[i] >= ids[j] {
                            continue;
                        }
                        let len = gram_measure(&[pts[i].clone(), pts[j].clone()]);
                        let v = (0..d)
                            .map(|r| len * (lambda[i] * grads[j][r] - lambda[j] * grads[i][r]))
                            .collect();
                        out.push((dof(vec![ids[i], ids[j]]), v));
                    }
                }
                out
            }
        }
    }

    fn rt0_local(&self, cell: usize, a: usize, pts: &[Point], lambda: &[f64]) -> Vec<f64> {
        let d = self.mesh.dim();
        let ids = self.mesh.cell(cell);
        let mut face: Vec<usize> = ids.iter().enumerate().filter(|&(k, _)| k != a).map(|(_, &v)| v).collect();
        face.sort_unstable();
        let f = self.mesh.face_index(&face).expect("face of a cell");
        let first = *self.mesh.face_cells(f).iter().min().expect("face has a cell");
        let sign = if cell == first { 1.0 } else { -1.0 };
        let face_pts: Vec<Point> = pts.iter().enumerate().filter(|&(k, _)| k != a).map(|(_, p)| p.clone()).collect();
        let scale = sign * gram_measure(&face_pts) / (d as f64 * gram_measure(pts));
        (0..d)
            .map(|r| {
                scale
                    * (0..=d)
                        .filter(|&k| k != a)
                        .map(|k| lambda[k] * (pts[k][r] - pts[a][r]))
                        .sum::<f64>()
            })
            .collect()
    }

    /// All shape functions at `x` evaluated on `cell`, dof-major.
    pub fn basis_in_cell(&self, cell: usize, x: &[f64]) -> Vec<f64> {
        let vd = self.value_dim();
        let mut out = vec![0.0; self.num_dofs() * vd];
        for (i, v) in self.local_basis(cell, x) {
            out[i * vd..(i + 1) * vd].copy_from_slice(&v);
        }
        out
    }

    /// `Σ v_i θ_i(x)` evaluated on `cell`.
    pub fn eval_in_cell(&self, coefficients: &[f64], cell: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.value_dim()];
        for (i, v) in self.local_basis(cell, x) {
            for (o, vk) in out.iter_mut().zip(v) {
                *o += coefficients[i] * vk;
            }
        }
        out
    }

    /// Finite element function at an interior point of some cell.
    pub fn eval(&self, coefficients: &[f64], x: &[f64]) -> Result<Vec<f64>, OracleError> {
        if coefficients.len() != self.num_dofs() {
            return Err(OracleError::CoefficientLength {
                expected: self.num_dofs(),
                found: coefficients.len(),
            });
        }
        let (cell, lambda) = self.locate(x).ok_or_else(|| OracleError::Outside(x.to_vec()))?;
        if lambda.iter().any(|&l| l <= LOCATE_TOL) {
            return Err(OracleError::OnSkeleton(x.to_vec()));
        }
        Ok(self.eval_in_cell(coefficients, cell, x))
    }
}

/// Gradients of the barycentric coordinates, by differencing the affine maps.
fn barycentric_gradients(pts: &[Point], x: &[f64], lambda: &[f64]) -> Vec<Vec<f64>> {
    let d = x.len();
    let mut grads = vec![vec![0.0; d]; d + 1];
    for r in 0..d {
        let mut y = x.to_vec();
        y[r] += 1.0;
        let shifted = cramer_barycentric(pts, &y);
        for k in 0..=d {
            grads[k][r] = shifted[k] - lambda[k];
        }
    }
    grads
}

/// Convenience wrapper for a single evaluation.
pub fn oracle_eval(mesh: &Mesh, kind: SpaceKind, coefficients: &[f64], x: &[f64]) -> Result<Vec<f64>, OracleError> {
    Oracle::new(mesh, kind)?.eval(coefficients, x)
}
