//! Verification harness: an independent oracle plus exactness, conformity,
//! de Rham, trace, size and convergence checks. Every check returns a
//! report instead of failing.

pub mod oracle;
pub mod quadrature;

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, ceil_log2, HalfspaceSystem};
use crate::generate::Domain;
use crate::mesh::{Mesh, MeshError, Point};
use crate::network::{Activation, NetError, Network};
use crate::shapes::{self, cell_order, dofs, ShapeError, SpaceKind};
use crate::spaces::{self, basis_net, face_charts, trace_net, BasisNet, SpaceError};

pub use oracle::{cramer_barycentric, gram_measure, oracle_eval, Oracle, OracleError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("a convergence study needs at least two levels, got {0}")]
    LevelsTooShort(usize),
    #[error("{0}")]
    Unsupported(String),
}

/// Where and how densely to sample inside elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub per_element_count: usize,
    /// Lower bound for every barycentric coordinate of a sample.
    pub barycentric_margin: f64,
    pub seed: u64,
}

impl SamplePlan {
    pub fn new(per_element_count: usize, barycentric_margin: f64, seed: u64) -> Self {
        Self {
            per_element_count,
            barycentric_margin,
            seed,
        }
    }

    pub fn with_seed(seed: u64) -> Self {
        Self::new(20, 1e-3, seed)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub kind: String,
    pub mesh: String,
    pub max_error: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Report {
    pub fn new(check: &str, kind: &str, mesh: &str, max_error: f64, threshold: f64) -> Self {
        Self {
            check: check.into(),
            kind: kind.into(),
            mesh: mesh.into(),
            max_error,
            threshold,
            pass: max_error.is_finite() && max_error <= threshold,
        }
    }
}

pub const EXACTNESS_TOL: f64 = 1e-9;
pub const JUMP_TOL: f64 = 1e-8;
pub const DERHAM_TOL: f64 = 1e-8;

/// Relative error `|a - b| / (1 + |b|)`, maximized over components.
pub fn relative_error(net: &[f64], oracle: &[f64]) -> f64 {
    net.iter()
        .zip(oracle)
        .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
        .fold(0.0, f64::max)
}

/// A random point of a simplex with all barycentric coordinates at least
/// `margin` (uniform for `margin = 0`).
pub fn sample_simplex(points: &[Point], margin: f64, rng: &mut impl Rng) -> Point {
    let n = points.len();
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    let scale = 1.0 - n as f64 * margin;
    let lambda: Vec<f64> = e.iter().map(|x| margin + scale * x / total).collect();
    combine(points, &lambda)
}

fn combine(points: &[Point], weights: &[f64]) -> Point {
    let d = points[0].len();
    (0..d).map(|r| points.iter().zip(weights).map(|(p, w)| w * p[r]).sum()).collect()
}

/// `per_element_count` interior samples per cell, tagged with their cell.
pub fn sample_cells(mesh: &Mesh, plan: &SamplePlan) -> Vec<(usize, Point)> {
    let mut rng = plan.rng();
    let mut out = Vec::with_capacity(mesh.num_cells() * plan.per_element_count);
    for c in 0..mesh.num_cells() {
        let pts = mesh.cell_points(c);
        for _ in 0..plan.per_element_count {
            out.push((c, sample_simplex(&pts, plan.barycentric_margin, &mut rng)));
        }
    }
    out
}

/// Vertices, face barycenters and `per_face` random points of every face,
/// each tagged with a cell whose closure contains it.
pub fn skeleton_points(mesh: &Mesh, per_face: usize, seed: u64) -> Vec<(usize, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    let mut out = Vec::new();
    for v in 0..mesh.num_vertices() {
        if let Some(&c) = mesh.vertex_cells(v).first() {
            out.push((c, mesh.vertex(v).to_vec()));
        }
    }
    for f in 0..mesh.faces().len() {
        let c = mesh.face_cells(f)[0];
        let pts = mesh.points_of(&mesh.faces()[f]);
        out.push((c, mesh.face_barycenter(f)));
        for _ in 0..per_face {
            out.push((c, sample_simplex(&pts, 0.0, &mut rng)));
        }
    }
    out
}

fn eval_all(net: &Network, points: &[Point]) -> Vec<Vec<f64>> {
    points.par_iter().map(|x| net.eval(x)).collect()
}

fn random_coefficients(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Every basis component against the oracle at interior samples; for
/// `s1-relu` also on the skeleton. Pass iff the relative error is at most
/// `1e-9`.
pub fn check_exactness(mesh: &Mesh, kind: SpaceKind, plan: &SamplePlan, label: &str) -> Result<Report, VerifyError> {
    let basis = basis_net(mesh, kind)?;
    check_exactness_of(mesh, &basis, plan, label)
}

/// [`check_exactness`] for a prebuilt basis net.
pub fn check_exactness_of(mesh: &Mesh, basis: &BasisNet, plan: &SamplePlan, label: &str) -> Result<Report, VerifyError> {
    let kind = basis.kind;
    let oracle = Oracle::new(mesh, kind)?;
    let mut samples = sample_cells(mesh, plan);
    let mut check = "exactness";
    if kind == SpaceKind::S1ReluOnly {
        samples.extend(skeleton_points(mesh, 10, plan.seed));
        check = "exactness-everywhere";
    }
    let err = samples
        .par_iter()
        .map(|(c, x)| relative_error(&basis.net.eval(x), &oracle.basis_in_cell(*c, x)))
        .reduce(|| 0.0, f64::max);
    Ok(Report::new(check, kind.name(), label, err, EXACTNESS_TOL))
}

/// Which part of a jump is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpComponent {
    /// All components.
    Full,
    /// Component along the face normal.
    Normal,
    /// Component orthogonal to the face normal.
    Tangential,
}

impl JumpComponent {
    pub fn natural(kind: SpaceKind) -> Self {
        match kind {
            SpaceKind::RT0 => JumpComponent::Normal,
            SpaceKind::N0 => JumpComponent::Tangential,
            _ => JumpComponent::Full,
        }
    }
}

/// Largest jump over the interior faces of `mesh` of the field computed by
/// `eval`, measured at face barycenters. One-sided limits come from probes
/// at `ε` and `2ε` along the normal (`ε = 1e-6 h_T`), extrapolated affinely.
pub fn max_face_jump(
    mesh: &Mesh,
    eval: &(dyn Fn(&[Point]) -> Vec<Vec<f64>> + Sync),
    component: JumpComponent,
    only: Option<&[usize]>,
) -> Result<f64, VerifyError> {
    let faces: Vec<usize> = match only {
        Some(list) => list.to_vec(),
        None => (0..mesh.faces().len()).filter(|&f| mesh.face_cells(f).len() == 2).collect(),
    };
    let mut probes = Vec::with_capacity(4 * faces.len());
    let mut normals = Vec::with_capacity(faces.len());
    for &f in &faces {
        let n = mesh.face_normal(f)?;
        let h = mesh.face_cells(f).iter().map(|&c| crate::mesh::diameter(&mesh.cell_points(c))).fold(f64::INFINITY, f64::min);
        let eps = 1e-6 * h;
        let x = mesh.face_barycenter(f);
        for s in [eps, 2.0 * eps, -eps, -2.0 * eps] {
            probes.push(x.iter().zip(&n).map(|(a, b)| a + s * b).collect());
        }
        normals.push(n);
    }
    let values = eval(&probes);
    let mut worst: f64 = 0.0;
    for (k, n) in normals.iter().enumerate() {
        let v = &values[4 * k..4 * k + 4];
        let plus: Vec<f64> = v[0].iter().zip(&v[1]).map(|(a, b)| 2.0 * a - b).collect();
        let minus: Vec<f64> = v[2].iter().zip(&v[3]).map(|(a, b)| 2.0 * a - b).collect();
        let jump: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| a - b).collect();
        let size = match component {
            JumpComponent::Full => jump.iter().map(|x| x * x).sum::<f64>().sqrt(),
            JumpComponent::Normal => dot(&jump, n).abs(),
            JumpComponent::Tangential => {
                let jn = dot(&jump, n);
                jump.iter().zip(n).map(|(j, m)| (j - jn * m).powi(2)).sum::<f64>().sqrt()
            }
        };
        worst = worst.max(size);
    }
    Ok(worst)
}

/// Jumps of the function net with the given coefficients.
pub fn conformity_with(
    mesh: &Mesh,
    basis: &Arc<BasisNet>,
    coefficients: &[f64],
    component: JumpComponent,
    only: Option<&[usize]>,
) -> Result<f64, VerifyError> {
    let f = basis.specialize(coefficients)?;
    max_face_jump(mesh, &|pts| eval_all(&f.net, pts), component, only)
}

/// Continuity of the natural trace component for 3 random coefficient
/// vectors: normal for rt0, tangential for n0, full value otherwise (for
/// cr0 this is the jump at the face barycenter).
pub fn check_conformity(mesh: &Mesh, kind: SpaceKind, seed: u64, label: &str) -> Result<Report, VerifyError> {
    let basis = Arc::new(basis_net(mesh, kind)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let c = random_coefficients(basis.num_dofs(), &mut rng);
        worst = worst.max(conformity_with(mesh, &basis, &c, JumpComponent::natural(kind), None)?);
    }
    Ok(Report::new("conformity", kind.name(), label, worst, JUMP_TOL))
}

/// Continuity checks that must fail: the jump of an s0 indicator across an
/// interior face, and the tangential jump of each rt0 shape function across
/// its own face.
pub fn conformity_negative_controls(mesh: &Mesh, label: &str) -> Result<Vec<Report>, VerifyError> {
    let interior: Vec<usize> = (0..mesh.faces().len()).filter(|&f| mesh.face_cells(f).len() == 2).collect();
    let f = *interior
        .first()
        .ok_or_else(|| VerifyError::Unsupported("mesh has no interior face".into()))?;
    let s0 = Arc::new(basis_net(mesh, SpaceKind::S0)?);
    let order = cell_order(mesh);
    let target = mesh.face_cells(f)[0];
    let mut c = vec![0.0; s0.num_dofs()];
    c[order.iter().position(|&k| k == target).expect("cell in order")] = 1.0;
    let s0_jump = conformity_with(mesh, &s0, &c, JumpComponent::Full, Some(&[f]))?;

    // Across a mirror-symmetric face pair the tangential jump vanishes at
    // the barycenter, so take the largest over all interior faces.
    let rt0 = Arc::new(basis_net(mesh, SpaceKind::RT0)?);
    let mut rt0_jump: f64 = 0.0;
    for &g in &interior {
        let mut c = vec![0.0; rt0.num_dofs()];
        c[g] = 1.0;
        rt0_jump = rt0_jump.max(conformity_with(mesh, &rt0, &c, JumpComponent::Tangential, Some(&[g]))?);
    }
    Ok(vec![
        Report::new("conformity-negative-control", "s0", label, s0_jump, JUMP_TOL),
        Report::new("conformity-negative-control-tangential", "rt0", label, rt0_jump, JUMP_TOL),
    ])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Affine fit of a net on one cell: Jacobian rows per output component,
/// plus the residual of the fit at an extra interior point.
#[derive(Debug, Clone)]
pub struct AffineFit {
    pub jacobian: Vec<Vec<f64>>,
    pub residual: f64,
}

impl AffineFit {
    fn gradient(&self) -> Vec<f64> {
        self.jacobian[0].clone()
    }

    fn divergence(&self) -> f64 {
        (0..self.jacobian.len()).map(|k| self.jacobian[k][k]).sum()
    }

    /// Curl in 3D; in 2D the scalar rotation `∂1 v2 - ∂2 v1`.
    fn curl(&self) -> Vec<f64> {
        let j = &self.jacobian;
        if j.len() == 2 {
            vec![j[1][0] - j[0][1]]
        } else {
            vec![j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]]
        }
    }
}

/// Fits the realization of `net` on every cell by an affine map, from
/// evaluations at the barycenter and at points halfway to the vertices.
pub fn fit_cells(mesh: &Mesh, net: &Network) -> Vec<AffineFit> {
    let d = mesh.dim();
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let pts = mesh.cell_points(c);
            let b = crate::mesh::barycenter(&pts);
            let xs: Vec<Point> = pts
                .iter()
                .map(|v| b.iter().zip(v).map(|(bi, vi)| bi + 0.5 * (vi - bi)).collect())
                .collect();
            let fb = net.eval(&b);
            let fx: Vec<Vec<f64>> = xs.iter().map(|x| net.eval(x)).collect();
            let m = fb.len();
            let dx = DMatrix::from_fn(d, d, |r, k| xs[k][r] - b[r]);
            let df = DMatrix::from_fn(m, d, |r, k| fx[k][r] - fb[r]);
            let inv = dx.try_inverse().expect("nondegenerate cell");
            let jac = df * inv;
            let jacobian: Vec<Vec<f64>> = (0..m).map(|r| (0..d).map(|k| jac[(r, k)]).collect()).collect();
            let predicted: Vec<f64> = (0..m)
                .map(|r| fb[r] + (0..d).map(|k| jacobian[r][k] * (xs[d][k] - b[k])).sum::<f64>())
                .collect();
            AffineFit {
                residual: relative_error(&predicted, &fx[d]),
                jacobian,
            }
        })
        .collect()
}

/// Normal of face `f` pointing away from the lowest-index adjacent cell.
fn oriented_normal(mesh: &Mesh, f: usize) -> Point {
    let face = &mesh.faces()[f];
    let pts = mesh.points_of(face);
    let c = *mesh.face_cells(f).iter().min().expect("face has a cell");
    let a = mesh.opposite_vertex(c, f);
    let d = mesh.dim();
    // Normal = the component of (x_f - a) orthogonal to the face.
    let basis = crate::mesh::gram_schmidt(&pts[1..].iter().map(|p| sub(p, &pts[0])).collect::<Vec<_>>());
    let mut n = sub(&pts[0], mesh.vertex(a));
    for t in &basis {
        let s = dot(&n, t);
        n.iter_mut().zip(t).for_each(|(x, y)| *x -= s * y);
    }
    let len = dot(&n, &n).sqrt();
    debug_assert_eq!(n.len(), d);
    n.iter().map(|x| x / len).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Tangent of the dof of a 2D or 3D N0 function: the unit edge vector from
/// the lower to the higher vertex in 3D, `R n_f` in 2D.
fn n0_tangents(mesh: &Mesh) -> Vec<Point> {
    if mesh.dim() == 2 {
        (0..mesh.faces().len())
            .map(|f| {
                let n = oriented_normal(mesh, f);
                vec![-n[1], n[0]]
            })
            .collect()
    } else {
        mesh.edges()
            .iter()
            .map(|e| {
                let t = sub(mesh.vertex(e[1]), mesh.vertex(e[0]));
                let len = dot(&t, &t).sqrt();
                t.iter().map(|x| x / len).collect()
            })
            .collect()
    }
}

/// Cells containing each N0 dof (edges in 3D, faces in 2D).
fn n0_dof_cells(mesh: &Mesh) -> Vec<Vec<usize>> {
    if mesh.dim() == 2 {
        return (0..mesh.faces().len()).map(|f| mesh.face_cells(f).to_vec()).collect();
    }
    let mut out = vec![Vec::new(); mesh.edges().len()];
    for c in 0..mesh.num_cells() {
        let ids = mesh.cell(c);
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                let mut e = [ids[i], ids[j]];
                e.sort_unstable();
                out[mesh.edge_index(&e).expect("edge of a cell")].push(c);
            }
        }
    }
    out
}

/// Dof coefficients `v_T · t_i` of a piecewise-constant field, taken from
/// the first cell of every dof; also returns the largest disagreement
/// between the cells sharing a dof.
fn project_constant(fields: &[Vec<f64>], directions: &[Point], dof_cells: &[Vec<usize>]) -> (Vec<f64>, f64) {
    let mut coeffs = Vec::with_capacity(directions.len());
    let mut mismatch: f64 = 0.0;
    for (t, cells) in directions.iter().zip(dof_cells) {
        let values: Vec<f64> = cells.iter().map(|&c| dot(&fields[c], t)).collect();
        for v in &values[1..] {
            mismatch = mismatch.max((v - values[0]).abs() / (1.0 + values[0].abs()));
        }
        coeffs.push(values[0]);
    }
    (coeffs, mismatch)
}

/// Largest relative deviation of `net` from the cellwise constant `fields`.
fn compare_constant(mesh: &Mesh, net: &Network, fields: &[Vec<f64>], seed: u64) -> f64 {
    let samples = sample_cells(mesh, &SamplePlan::new(5, 1e-3, seed));
    samples
        .par_iter()
        .map(|(c, x)| relative_error(&net.eval(x), &fields[*c]))
        .reduce(|| 0.0, f64::max)
}

fn max_residual(fits: &[AffineFit]) -> f64 {
    fits.iter().map(|f| f.residual).fold(0.0, f64::max)
}

/// The discrete de Rham identities on random coefficient vectors:
/// (a) grad S1 ⊂ N0, (b) curl N0 ⊂ RT0 (2D: curl S1 ⊂ RT0 and rot N0 ⊂ S0),
/// (c) div RT0 ⊂ S0, (d) curl grad = 0 and div curl = 0.
pub fn check_derham(mesh: &Mesh, vectors: usize, seed: u64, label: &str) -> Result<Vec<Report>, VerifyError> {
    let d = mesh.dim();
    if !(2..=3).contains(&d) {
        return Err(VerifyError::Unsupported(format!("de Rham checks need d = 2 or 3, got {d}")));
    }
    let s1 = Arc::new(basis_net(mesh, SpaceKind::S1)?);
    let n0 = Arc::new(basis_net(mesh, SpaceKind::N0)?);
    let rt0 = Arc::new(basis_net(mesh, SpaceKind::RT0)?);
    let s0 = Arc::new(basis_net(mesh, SpaceKind::S0)?);
    let tangents = n0_tangents(mesh);
    let n0_cells = n0_dof_cells(mesh);
    let normals: Vec<Point> = (0..mesh.faces().len()).map(|f| oriented_normal(mesh, f)).collect();
    let face_cells: Vec<Vec<usize>> = (0..mesh.faces().len()).map(|f| mesh.face_cells(f).to_vec()).collect();
    let order = cell_order(mesh);
    let s0_coeffs = |values: &[f64]| -> Vec<f64> { order.iter().map(|&c| values[c]).collect() };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ea, mut eb, mut eb2, mut ec, mut ed) = (0f64, 0f64, 0f64, 0f64, 0f64);
    for k in 0..vectors {
        let sub_seed = seed.wrapping_add(k as u64);
        // (a) gradients of S1 functions.
        let u = s1.specialize(&random_coefficients(s1.num_dofs(), &mut rng))?;
        let fits = fit_cells(mesh, &u.net);
        let grads: Vec<Vec<f64>> = fits.iter().map(AffineFit::gradient).collect();
        let (c, mismatch) = project_constant(&grads, &tangents, &n0_cells);
        let g = n0.specialize(&c)?;
        ea = ea.max(max_residual(&fits)).max(mismatch).max(compare_constant(mesh, &g.net, &grads, sub_seed));
        // (d) curl grad = 0, measured on the N0 net realizing the gradient.
        let gfits = fit_cells(mesh, &g.net);
        ed = ed.max(max_residual(&gfits));
        for f in &gfits {
            ed = ed.max(f.curl().iter().fold(0.0, |m, x| m.max(x.abs())));
        }

        // (b) curls: of N0 in 3D, of S1 in 2D; both land in RT0.
        let curls: Vec<Vec<f64>> = if d == 3 {
            let w = n0.specialize(&random_coefficients(n0.num_dofs(), &mut rng))?;
            let wfits = fit_cells(mesh, &w.net);
            eb = eb.max(max_residual(&wfits));
            wfits.iter().map(AffineFit::curl).collect()
        } else {
            let u2 = s1.specialize(&random_coefficients(s1.num_dofs(), &mut rng))?;
            let ufits = fit_cells(mesh, &u2.net);
            eb = eb.max(max_residual(&ufits));
            ufits.iter().map(|f| vec![f.jacobian[0][1], -f.jacobian[0][0]]).collect()
        };
        let (c, mismatch) = project_constant(&curls, &normals, &face_cells);
        let q = rt0.specialize(&c)?;
        eb = eb.max(mismatch).max(compare_constant(mesh, &q.net, &curls, sub_seed));
        let qfits = fit_cells(mesh, &q.net);
        ed = ed.max(max_residual(&qfits));
        for f in &qfits {
            ed = ed.max(f.divergence().abs());
        }
        if d == 2 {
            // rot N0 ⊂ S0.
            let w = n0.specialize(&random_coefficients(n0.num_dofs(), &mut rng))?;
            let wfits = fit_cells(mesh, &w.net);
            let rots: Vec<f64> = wfits.iter().map(|f| f.curl()[0]).collect();
            let r = s0.specialize(&s0_coeffs(&rots))?;
            let fields: Vec<Vec<f64>> = rots.iter().map(|x| vec![*x]).collect();
            eb2 = eb2.max(max_residual(&wfits)).max(compare_constant(mesh, &r.net, &fields, sub_seed));
        }

        // (c) divergences of RT0 functions.
        let v = rt0.specialize(&random_coefficients(rt0.num_dofs(), &mut rng))?;
        let vfits = fit_cells(mesh, &v.net);
        let divs: Vec<f64> = vfits.iter().map(AffineFit::divergence).collect();
        let p = s0.specialize(&s0_coeffs(&divs))?;
        let fields: Vec<Vec<f64>> = divs.iter().map(|x| vec![*x]).collect();
        ec = ec.max(max_residual(&vfits)).max(compare_constant(mesh, &p.net, &fields, sub_seed));
    }
    let mut reports = vec![Report::new("derham-a-grad-s1-in-n0", "s1", label, ea, DERHAM_TOL)];
    if d == 3 {
        reports.push(Report::new("derham-b-curl-n0-in-rt0", "n0", label, eb, DERHAM_TOL));
    } else {
        reports.push(Report::new("derham-b-curl-s1-in-rt0", "s1", label, eb, DERHAM_TOL));
        reports.push(Report::new("derham-b-rot-n0-in-s0", "n0", label, eb2, DERHAM_TOL));
    }
    reports.push(Report::new("derham-c-div-rt0-in-s0", "rt0", label, ec, DERHAM_TOL));
    reports.push(Report::new("derham-d-curl-grad-div-curl", "n0,rt0", label, ed, DERHAM_TOL));
    Ok(reports)
}

/// Trace nets on every chart of a 3D mesh against the 2D oracle on the
/// parameter mesh, and against the 3D oracle for lifted coefficients (s1,
/// s0: values; n0: tangential part). For rt0 also the normal jumps of the
/// pulled-back trace inside the parameter mesh.
pub fn check_traces(mesh: &Mesh, kind: SpaceKind, plan: &SamplePlan, label: &str) -> Result<Vec<Report>, VerifyError> {
    let charts = face_charts(mesh)?;
    let mut rng = plan.rng();
    let oracle3 = Oracle::new(mesh, kind)?;
    let coeffs3 = random_coefficients(oracle3.num_dofs(), &mut rng);
    let mut err: f64 = 0.0;
    let mut jump: f64 = 0.0;
    for chart in &charts {
        let param = chart.mesh();
        let oracle2 = Oracle::new(param, kind)?;
        let j = chart.jacobian();
        let push = |v: &[f64]| -> Vec<f64> {
            if v.len() == 2 {
                (0..3).map(|r| j[r][0] * v[0] + j[r][1] * v[1]).collect()
            } else {
                v.to_vec()
            }
        };
        let lifted = lift_coefficients(mesh, chart, kind, &coeffs3)?;
        let mut trials = vec![(random_coefficients(oracle2.num_dofs(), &mut rng), false)];
        if let Some(c) = lifted {
            trials.push((c, true));
        }
        for (c2, against_3d) in trials {
            let t = trace_net(chart, kind, &c2)?;
            for _ in 0..plan.per_element_count {
                let cell = rng.gen_range(0..param.num_cells());
                let xhat = sample_simplex(&param.cell_points(cell), plan.barycentric_margin, &mut rng);
                let got = t.net.eval(&xhat);
                let want = if against_3d {
                    let x = chart.map(&xhat);
                    let facet = chart.facets[cell];
                    let v = oracle3.eval_in_cell(&coeffs3, mesh.face_cells(facet)[0], &x);
                    if kind == SpaceKind::N0 {
                        // Tangential projection J Jᵀ v.
                        let w = [dot(&chart.frame[0], &v), dot(&chart.frame[1], &v)];
                        push(&w)
                    } else {
                        v
                    }
                } else {
                    push(&oracle2.eval_in_cell(&c2, cell, &xhat))
                };
                err = err.max(relative_error(&got, &want));
            }
            if kind == SpaceKind::RT0 {
                let jt = &j;
                let pulled = |pts: &[Point]| -> Vec<Vec<f64>> {
                    eval_all(&t.net, pts)
                        .into_iter()
                        .map(|v| (0..2).map(|k| (0..3).map(|r| jt[r][k] * v[r]).sum()).collect())
                        .collect()
                };
                jump = jump.max(max_face_jump(param, &pulled, JumpComponent::Normal, None)?);
            }
        }
    }
    let mut reports = vec![Report::new("trace", kind.name(), label, err, EXACTNESS_TOL)];
    if kind == SpaceKind::RT0 {
        reports.push(Report::new("trace-conformity", kind.name(), label, jump, JUMP_TOL));
    }
    Ok(reports)
}

/// Parameter-mesh coefficients of the restriction of a 3D function, for
/// the families whose traces live in the 2D family of the same name.
fn lift_coefficients(
    mesh: &Mesh,
    chart: &spaces::FaceChart,
    kind: SpaceKind,
    coeffs3: &[f64],
) -> Result<Option<Vec<f64>>, VerifyError> {
    let param = chart.mesh();
    let index3: HashMap<Vec<usize>, usize> =
        dofs(mesh, kind).into_iter().enumerate().map(|(i, s)| (s.vertex_ids, i)).collect();
    let global = |ids: &[usize]| -> Vec<usize> {
        let mut g: Vec<usize> = ids.iter().map(|&v| chart.vertex_map[v]).collect();
        g.sort_unstable();
        g
    };
    Ok(match kind {
        SpaceKind::S1 | SpaceKind::S1ReluOnly => Some(
            dofs(param, kind)
                .iter()
                .map(|s| coeffs3[index3[&global(&s.vertex_ids)]])
                .collect(),
        ),
        SpaceKind::S0 => {
            let order3 = cell_order(mesh);
            let pos3: HashMap<usize, usize> = order3.iter().enumerate().map(|(i, &c)| (c, i)).collect();
            Some(
                cell_order(param)
                    .iter()
                    .map(|&c2| coeffs3[pos3[&mesh.face_cells(chart.facets[c2])[0]]])
                    .collect(),
            )
        }
        SpaceKind::N0 => {
            let signs = chart.n0_sign_map(mesh)?;
            Some(
                dofs(param, kind)
                    .iter()
                    .zip(&signs)
                    .map(|(s, sign)| sign * coeffs3[index3[&global(&s.vertex_ids)]])
                    .collect(),
            )
        }
        _ => None,
    })
}

/// `0 ≤ θ̃_{p,j} ≤ θ_p` for every vertex `p` and auxiliary hat `j`, at
/// `per_element_count` samples per pair (half inside the patch, half
/// anywhere in the mesh).
pub fn check_domination(mesh: &Mesh, plan: &SamplePlan, label: &str) -> Result<Report, VerifyError> {
    let oracle = Oracle::new(mesh, SpaceKind::S1)?;
    let vertex_dof: HashMap<usize, usize> = dofs(mesh, SpaceKind::S1)
        .iter()
        .enumerate()
        .map(|(i, s)| (s.vertex_ids[0], i))
        .collect();
    let mut rng = plan.rng();
    let mut worst: f64 = 0.0;
    for p in 0..mesh.num_vertices() {
        let patch = mesh.vertex_cells(p);
        if patch.is_empty() {
            continue;
        }
        let aux = shapes::auxiliary_hat_nets(mesh, p)?;
        let mut e = vec![0.0; oracle.num_dofs()];
        e[vertex_dof[&p]] = 1.0;
        for net in &aux {
            for k in 0..plan.per_element_count {
                let cell = if k % 2 == 0 {
                    patch[rng.gen_range(0..patch.len())]
                } else {
                    rng.gen_range(0..mesh.num_cells())
                };
                let x = sample_simplex(&mesh.cell_points(cell), plan.barycentric_margin, &mut rng);
                let tilde = net.eval(&x)[0];
                let hat = oracle.eval_in_cell(&e, cell, &x)[0];
                worst = worst.max(-tilde).max(tilde - hat);
            }
        }
    }
    Ok(Report::new("domination", "s1-relu", label, worst, 1e-12))
}

/// Serialize, deserialize and re-evaluate; pass iff every output is
/// bitwise identical. `max_error` counts mismatching outputs.
pub fn check_roundtrip(net: &Network, points: &[Point], kind: &str, label: &str) -> Result<Report, VerifyError> {
    let copy = Network::deserialize(&net.serialize())?;
    let mismatches = points
        .iter()
        .filter(|x| {
            let (a, b) = (net.eval(x), copy.eval(x));
            a.len() != b.len() || a.iter().zip(&b).any(|(u, v)| u.to_bits() != v.to_bits())
        })
        .count();
    Ok(Report::new("roundtrip", kind, label, mismatches as f64, 0.0))
}

/// Random points in the bounding box of a mesh.
pub fn random_points(mesh: &Mesh, count: usize, seed: u64) -> Vec<Point> {
    let d = mesh.dim();
    let lo: Vec<f64> = (0..d).map(|k| mesh.vertices().iter().map(|v| v[k]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..d).map(|k| mesh.vertices().iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..d).map(|k| rng.gen_range(lo[k]..=hi[k])).collect())
        .collect()
}

/// Random points in `[-1, 1]^dim`.
pub fn random_points_in_box(dim: usize, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect()
}

/// One line of a size/depth audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub item: String,
    pub quantity: String,
    pub measured: usize,
    /// `"eq"` for exact values, `"le"` for upper bounds.
    pub relation: String,
    pub bound: usize,
    pub slack: i64,
    pub pass: bool,
}

impl AuditEntry {
    fn new(item: impl Into<String>, quantity: &str, measured: usize, relation: &str, bound: usize) -> Self {
        let pass = match relation {
            "eq" => measured == bound,
            _ => measured <= bound,
        };
        Self {
            item: item.into(),
            quantity: quantity.into(),
            measured,
            relation: relation.into(),
            bound,
            slack: bound as i64 - measured as i64,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub check: String,
    pub kind: String,
    pub mesh: String,
    pub entries: Vec<AuditEntry>,
    pub pass: bool,
}

/// Size constants calibrated on the generated meshes (largest observed
/// ratio plus headroom) and frozen: `M ≤ C d² s` for shape nets and basis nets,
/// with `s` the number of cells adjacent to the dof.
pub fn size_constant(kind: SpaceKind) -> usize {
    match kind {
        SpaceKind::S1 => 16,
        SpaceKind::S1ReluOnly => 24,
        SpaceKind::N0 => 24,
        SpaceKind::RT0 => 24,
        SpaceKind::S0 => 4,
        SpaceKind::CR0 => 16,
    }
}

/// Frozen constant for `M(rt0_star_net) ≤ C d³ s`.
pub const STAR_SIZE_CONSTANT: usize = 16;

/// Exact depths and size bounds of all shape nets of a family, its basis
/// net, and the gadgets they are built from.
pub fn audit_sizes(mesh: &Mesh, kind: SpaceKind, label: &str) -> Result<AuditReport, VerifyError> {
    let d = mesh.dim();
    kind.check_dim(d)?;
    let mut entries = Vec::new();
    let args = if kind == SpaceKind::S0 {
        cell_order(mesh)
    } else {
        shapes::dof_arguments(mesh, kind)
    };
    let dof_list = dofs(mesh, kind);
    let c = size_constant(kind);
    let mut total_support = 0;
    let mut max_support = 0;
    let mut max_shape_depth = 0;
    let shape_nets: Vec<_> = args
        .par_iter()
        .map(|&a| {
            if kind == SpaceKind::S0 {
                shapes::s0_net(mesh, a)
            } else {
                shapes::shape_net(mesh, kind, a)
            }
        })
        .collect::<Result<_, _>>()?;
    for ((shape, dof), &a) in shape_nets.iter().zip(&dof_list).zip(&args) {
        let s = mesh.adjacency(dof)?.len();
        total_support += s;
        max_support = max_support.max(s);
        max_shape_depth = max_shape_depth.max(shape.net.depth());
        let name = format!("{} shape {:?}", kind.name(), dof.vertex_ids);
        match kind {
            SpaceKind::S0 => entries.push(AuditEntry::new(&name, "depth", shape.net.depth(), "eq", 3)),
            SpaceKind::S1ReluOnly => {
                entries.push(AuditEntry::new(
                    &name,
                    "depth",
                    shape.net.depth(),
                    "le",
                    7 + ceil_log2(s) + ceil_log2(d + 1),
                ));
                entries.push(AuditEntry::new(&name, "bisu", shape.net.count_activation(Activation::BiSU), "eq", 0));
                if mesh.patch_is_convex(a)? {
                    let convex = shapes::cpwl_net_convex(mesh, a)?;
                    entries.push(AuditEntry::new(format!("{name} convex"), "depth", convex.net.depth(), "le", 5 + ceil_log2(s)));
                }
            }
            _ => entries.push(AuditEntry::new(&name, "depth", shape.net.depth(), "eq", 5)),
        }
        entries.push(AuditEntry::new(&name, "size", shape.net.size(), "le", c * d * d * s));
    }

    let basis = basis_net(mesh, kind)?;
    let name = format!("{} basis", kind.name());
    let depth = basis.net.depth();
    match kind {
        SpaceKind::S0 => entries.push(AuditEntry::new(&name, "depth", depth, "eq", 3)),
        SpaceKind::S1ReluOnly => {
            entries.push(AuditEntry::new(&name, "depth", depth, "eq", max_shape_depth + 1));
            entries.push(AuditEntry::new(&name, "depth", depth, "le", 8 + ceil_log2(max_support) + ceil_log2(d + 1)));
            entries.push(AuditEntry::new(&name, "bisu", basis.net.count_activation(Activation::BiSU), "eq", 0));
        }
        _ => entries.push(AuditEntry::new(&name, "depth", depth, "eq", 5)),
    }
    entries.push(AuditEntry::new(&name, "size", basis.net.size(), "le", c * d * d * total_support));
    if kind != SpaceKind::S1ReluOnly {
        let shapes_total: usize = shape_nets.iter().map(|s| s.net.size()).sum();
        entries.push(AuditEntry::new(format!("{name} = sum of shapes"), "size", basis.net.size(), "eq", shapes_total));
    }

    entries.extend(gadget_entries(mesh)?);
    let pass = entries.iter().all(|e| e.pass);
    Ok(AuditReport {
        check: "audit".into(),
        kind: kind.name().into(),
        mesh: label.into(),
        entries,
        pass,
    })
}

/// Gadget sizes and depths for the dimension of `mesh`.
fn gadget_entries(mesh: &Mesh) -> Result<Vec<AuditEntry>, VerifyError> {
    let d = mesh.dim();
    let mut out = Vec::new();
    let times = calculus::times_step_net(d, 1.0);
    out.push(AuditEntry::new(format!("times_step({d})"), "depth", times.depth(), "eq", 2));
    out.push(AuditEntry::new(format!("times_step({d})"), "size", times.size(), "eq", 12 * d));
    let min2 = calculus::min_net(2);
    out.push(AuditEntry::new("min(2)", "depth", min2.depth(), "eq", 2));
    out.push(AuditEntry::new("min(2)", "size", min2.size(), "eq", 7));
    for k in [3, 5, 8] {
        let m = calculus::max_net(k);
        out.push(AuditEntry::new(format!("max({k})"), "depth", m.depth(), "le", 2 + ceil_log2(k)));
    }
    let id = calculus::identity_net(d, 4);
    out.push(AuditEntry::new(format!("identity({d},4)"), "size", id.size(), "le", 2 * d * 4));
    let sys = HalfspaceSystem::open_simplex(&mesh.cell_points(0))?;
    let ind = calculus::indicator_net(&sys).map_err(ShapeError::from)?;
    out.push(AuditEntry::new("indicator(cell 0)", "depth", ind.depth(), "eq", 3));
    out.push(AuditEntry::new("indicator(cell 0)", "size", ind.size(), "le", (d + 2) * (d + 1) + 2));
    let f = (0..mesh.faces().len()).find(|&f| mesh.face_cells(f).len() == 2).unwrap_or(0);
    let s = mesh.face_cells(f).len();
    let star = shapes::rt0_star_net(mesh, f)?;
    out.push(AuditEntry::new(format!("rt0_star(face {f})"), "depth", star.net.depth(), "eq", 6));
    out.push(AuditEntry::new(format!("rt0_star(face {f})"), "size", star.net.size(), "le", STAR_SIZE_CONSTANT * d * d * d * s));
    let normal = shapes::rt0_normal_net(mesh, f)?;
    out.push(AuditEntry::new(format!("rt0_normal(face {f})"), "depth", normal.net.depth(), "eq", 5));
    if d >= 2 {
        let tangential = shapes::rt0_tangential_net(mesh, f, 1)?;
        out.push(AuditEntry::new(format!("rt0_tangential(face {f},1)"), "depth", tangential.net.depth(), "eq", 5));
    }
    Ok(out)
}

/// Smooth functions used by the convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// `Π sin(π x_k)` (scalar); for vector families a smooth field with
    /// nonzero divergence and curl.
    #[serde(rename = "smooth")]
    Smooth,
    /// A globally affine scalar, or a constant vector field.
    #[serde(rename = "linear")]
    Linear,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Smooth => "smooth",
            Target::Linear => "linear",
        }
    }

    /// Value and Jacobian (rows per component) at `x`.
    pub fn eval(self, kind: SpaceKind, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        use std::f64::consts::PI;
        let d = x.len();
        let vector = kind.value_dim(d) > 1;
        match (self, vector) {
            (Target::Smooth, false) => {
                let s: Vec<f64> = x.iter().map(|&t| (PI * t).sin()).collect();
                let c: Vec<f64> = x.iter().map(|&t| (PI * t).cos()).collect();
                let value: f64 = s.iter().product();
                let grad = (0..d)
                    .map(|k| PI * c[k] * (0..d).filter(|&m| m != k).map(|m| s[m]).product::<f64>())
                    .collect();
                (vec![value], vec![grad])
            }
            (Target::Smooth, true) if d == 2 => {
                let (sx, cx, sy, cy) = ((PI * x[0]).sin(), (PI * x[0]).cos(), (PI * x[1]).sin(), (PI * x[1]).cos());
                let value = vec![sx * cy, -0.5 * cx * sy + x[0] * x[0]];
                let jac = vec![
                    vec![PI * cx * cy, -PI * sx * sy],
                    vec![0.5 * PI * sx * sy + 2.0 * x[0], -0.5 * PI * cx * cy],
                ];
                (value, jac)
            }
            (Target::Smooth, true) => {
                let (a, b, c) = (x[0], x[1], x[2]);
                let value = vec![(PI * b).sin() + a * c, (PI * c).cos() + a * b, (PI * a).sin() + b * c];
                let jac = vec![
                    vec![c, PI * (PI * b).cos(), a],
                    vec![b, a, -PI * (PI * c).sin()],
                    vec![PI * (PI * a).cos(), c, b],
                ];
                (value, jac)
            }
            (Target::Linear, false) => {
                let w = [2.0, -3.0, 0.5];
                let value = 1.0 + (0..d).map(|k| w[k % 3] * x[k]).sum::<f64>();
                (vec![value], vec![(0..d).map(|k| w[k % 3]).collect()])
            }
            (Target::Linear, true) => {
                let w = [1.0, 2.0, -1.5];
                ((0..d).map(|k| w[k % 3]).collect(), vec![vec![0.0; d]; d])
            }
        }
    }
}

impl std::str::FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smooth" => Ok(Target::Smooth),
            "linear" => Ok(Target::Linear),
            _ => Err(format!("unknown target '{s}' (expected smooth or linear)")),
        }
    }
}

/// Errors and observed rates of a refinement study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub check: String,
    pub kind: String,
    pub domain: String,
    pub target: String,
    pub levels: Vec<usize>,
    pub h: Vec<f64>,
    pub l2: Vec<f64>,
    /// Broken seminorm: gradient for scalar continuous families, divergence
    /// for rt0, curl for n0, zero for s0.
    pub seminorm: Vec<f64>,
    /// The norm whose rate is assessed.
    pub norm: String,
    pub errors: Vec<f64>,
    pub rates: Vec<f64>,
}

impl ConvergenceReport {
    pub fn rates_within(&self, lo: f64, hi: f64) -> bool {
        self.rates.iter().all(|r| (lo..=hi).contains(r))
    }
}

/// Interpolant coefficients of a target in dof order.
pub fn interpolate(mesh: &Mesh, kind: SpaceKind, target: Target) -> Vec<f64> {
    let d = mesh.dim();
    let value = |x: &[f64]| target.eval(kind, x).0;
    match kind {
        SpaceKind::S1 | SpaceKind::S1ReluOnly => dofs(mesh, kind).iter().map(|s| value(mesh.vertex(s.vertex_ids[0]))[0]).collect(),
        SpaceKind::CR0 => (0..mesh.faces().len()).map(|f| value(&mesh.face_barycenter(f))[0]).collect(),
        SpaceKind::S0 => {
            let rule = quadrature::default_rule(d);
            cell_order(mesh)
                .iter()
                .map(|&c| {
                    let pts = mesh.cell_points(c);
                    rule.iter().map(|q| q.weight * value(&combine(&pts, &q.barycentric))[0]).sum()
                })
                .collect()
        }
        SpaceKind::RT0 => (0..mesh.faces().len())
            .map(|f| dot(&value(&mesh.face_barycenter(f)), &oriented_normal(mesh, f)))
            .collect(),
        SpaceKind::N0 => {
            let tangents = n0_tangents(mesh);
            let points: Vec<Point> = if d == 2 {
                (0..mesh.faces().len()).map(|f| mesh.face_barycenter(f)).collect()
            } else {
                mesh.edges().iter().map(|e| crate::mesh::barycenter(&mesh.points_of(e))).collect()
            };
            points.iter().zip(&tangents).map(|(x, t)| dot(&value(x), t)).collect()
        }
    }
}

/// Interpolates `target` on each level, builds the function net and
/// integrates the errors with the degree-5 simplex rule.
pub fn convergence_study(domain: Domain, kind: SpaceKind, target: Target, levels: &[usize]) -> Result<ConvergenceReport, VerifyError> {
    if levels.len() < 2 {
        return Err(VerifyError::LevelsTooShort(levels.len()));
    }
    let (mut h, mut l2, mut semi, mut errors) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &n in levels {
        let mesh = domain.generate(n);
        let coeffs = interpolate(&mesh, kind, target);
        let f = spaces::function_net(&mesh, kind, &coeffs)?;
        let (e_l2, e_semi) = integrate_errors(&mesh, kind, target, &f.net);
        h.push(mesh.mesh_size());
        l2.push(e_l2);
        semi.push(e_semi);
        errors.push(match kind {
            SpaceKind::S0 => e_l2,
            SpaceKind::RT0 | SpaceKind::N0 => (e_l2 * e_l2 + e_semi * e_semi).sqrt(),
            _ => e_semi,
        });
    }
    let rates = (1..errors.len())
        .map(|i| (errors[i - 1] / errors[i]).ln() / (h[i - 1] / h[i]).ln())
        .collect();
    let norm = match kind {
        SpaceKind::S0 => "l2",
        SpaceKind::RT0 => "hdiv",
        SpaceKind::N0 => "hcurl",
        _ => "h1-seminorm",
    };
    Ok(ConvergenceReport {
        check: "convergence".into(),
        kind: kind.name().into(),
        domain: domain.name().into(),
        target: target.name().into(),
        levels: levels.to_vec(),
        h,
        l2,
        seminorm: semi,
        norm: norm.into(),
        errors,
        rates,
    })
}

/// L² error and broken seminorm error of a function net on a mesh.
fn integrate_errors(mesh: &Mesh, kind: SpaceKind, target: Target, net: &Network) -> (f64, f64) {
    let d = mesh.dim();
    let rule = quadrature::default_rule(d);
    let fits = fit_cells(mesh, net);
    let (l2, semi) = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let pts = mesh.cell_points(c);
            let vol = gram_measure(&pts);
            let fit = &fits[c];
            let mut a = 0.0;
            let mut b = 0.0;
            for q in &rule {
                let x = combine(&pts, &q.barycentric);
                let (v, jac) = target.eval(kind, &x);
                let got = net.eval(&x);
                a += q.weight * v.iter().zip(&got).map(|(p, r)| (p - r).powi(2)).sum::<f64>();
                let exact = AffineFit { jacobian: jac, residual: 0.0 };
                b += q.weight
                    * match kind {
                        SpaceKind::S0 => 0.0,
                        SpaceKind::RT0 => (exact.divergence() - fit.divergence()).powi(2),
                        SpaceKind::N0 => exact.curl().iter().zip(fit.curl()).map(|(p, r)| (p - r).powi(2)).sum(),
                        _ => exact.gradient().iter().zip(fit.gradient()).map(|(p, r)| (p - r).powi(2)).sum(),
                    };
            }
            (a * vol, b * vol)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    // Negative weights can push a vanishing error slightly below zero.
    (l2.max(0.0).sqrt(), semi.max(0.0).sqrt())
}
