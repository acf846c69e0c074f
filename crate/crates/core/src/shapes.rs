//! Shape-function networks for every element family.
//!
//! The BiSU-based constructions (S1, RT0, N0, CR0) assemble one affine piece
//! per adjacent cell with [`pwl_net`]; they are exact off the mesh skeleton.
//! S0 is a single indicator net. The pure-ReLU CPwL nets realize the hat
//! function everywhere.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{
    self, concat, identity_net, indicator_net, max_net, min_net, parallelize, pwl_net, sum, times_step_net,
    CalculusError, HalfspaceSystem, Kappa, PwlPiece,
};
use crate::mesh::{
    affine_interpolant, barycentric_forms, dot, norm, sub, Mesh, MeshError, Point, SubsimplexIndex, SubsimplexKind,
};
use crate::network::{Activation, Layer, NetError, Network};

/// The finite element families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpaceKind {
    #[serde(rename = "s1")]
    S1,
    #[serde(rename = "s1-relu")]
    S1ReluOnly,
    #[serde(rename = "n0")]
    N0,
    #[serde(rename = "rt0")]
    RT0,
    #[serde(rename = "s0")]
    S0,
    #[serde(rename = "cr0")]
    CR0,
}

impl SpaceKind {
    pub const ALL: [SpaceKind; 6] = [
        SpaceKind::S1,
        SpaceKind::S1ReluOnly,
        SpaceKind::N0,
        SpaceKind::RT0,
        SpaceKind::S0,
        SpaceKind::CR0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::S1 => "s1",
            SpaceKind::S1ReluOnly => "s1-relu",
            SpaceKind::N0 => "n0",
            SpaceKind::RT0 => "rt0",
            SpaceKind::S0 => "s0",
            SpaceKind::CR0 => "cr0",
        }
    }

    /// Number of output components per degree of freedom.
    pub fn value_dim(self, dim: usize) -> usize {
        match self {
            SpaceKind::N0 | SpaceKind::RT0 => dim,
            _ => 1,
        }
    }

    /// Which subsimplices carry the degrees of freedom.
    pub fn dof_kind(self, dim: usize) -> SubsimplexKind {
        match self {
            SpaceKind::S1 | SpaceKind::S1ReluOnly => SubsimplexKind::Vertex,
            SpaceKind::N0 if dim == 3 => SubsimplexKind::Edge,
            SpaceKind::N0 | SpaceKind::RT0 | SpaceKind::CR0 => SubsimplexKind::Face,
            SpaceKind::S0 => SubsimplexKind::Cell,
        }
    }

    pub fn check_dim(self, dim: usize) -> Result<(), ShapeError> {
        match self {
            SpaceKind::N0 if !(2..=3).contains(&dim) => Err(ShapeError::Unsupported {
                kind: self,
                dim,
                reason: "the Nédélec space N0 is only defined for d = 2 and d = 3; it is excluded if d > 3",
            }),
            SpaceKind::CR0 if dim < 2 => Err(ShapeError::Unsupported {
                kind: self,
                dim,
                reason: "Crouzeix-Raviart shape functions need d >= 2",
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SpaceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown space '{s}' (expected one of s1, s1-relu, n0, rt0, s0, cr0)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    /// Exact off the mesh skeleton.
    AlmostEverywhere,
    /// Exact at every point of the domain.
    Everywhere,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("{kind} is not available for d = {dim}: {reason}")]
    Unsupported {
        kind: SpaceKind,
        dim: usize,
        reason: &'static str,
    },
    #[error("no {kind:?} with index {index}")]
    UnknownDof { kind: SubsimplexKind, index: usize },
    #[error("tangent index {j} out of range 1..={max}")]
    TangentIndex { j: usize, max: usize },
    #[error("the patch of vertex {0} is not convex")]
    NonConvexPatch(usize),
    #[error("edge {0:?} has a degenerate opposite-edge configuration in cell {1}")]
    DegenerateEdge(Vec<usize>, usize),
}

/// A network realizing one shape function.
#[derive(Debug, Clone)]
pub struct ShapeNet {
    pub net: Network,
    pub dof: SubsimplexIndex,
    pub kind: SpaceKind,
    pub exactness: Exactness,
}

fn face_dof(mesh: &Mesh, f: usize) -> Result<SubsimplexIndex, ShapeError> {
    let face = mesh.faces().get(f).ok_or(ShapeError::UnknownDof {
        kind: SubsimplexKind::Face,
        index: f,
    })?;
    Ok(SubsimplexIndex {
        kind: SubsimplexKind::Face,
        vertex_ids: face.clone(),
    })
}

fn check_vertex(mesh: &Mesh, p: usize) -> Result<SubsimplexIndex, ShapeError> {
    if p >= mesh.num_vertices() || mesh.vertex_cells(p).is_empty() {
        return Err(ShapeError::UnknownDof {
            kind: SubsimplexKind::Vertex,
            index: p,
        });
    }
    Ok(SubsimplexIndex {
        kind: SubsimplexKind::Vertex,
        vertex_ids: vec![p],
    })
}

fn scaled_identity(d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..d)
        .map(|r| (0..d).map(|c| if r == c { scale } else { 0.0 }).collect())
        .collect()
}

/// Indicator of cell `c`.
pub fn s0_net(mesh: &Mesh, c: usize) -> Result<ShapeNet, ShapeError> {
    if c >= mesh.num_cells() {
        return Err(ShapeError::UnknownDof {
            kind: SubsimplexKind::Cell,
            index: c,
        });
    }
    let geometry = mesh.cell_geometry(c)?;
    let net = indicator_net(&HalfspaceSystem {
        equalities: Vec::new(),
        strict_inequalities: geometry.barycentric,
    })?;
    Ok(ShapeNet {
        net,
        dof: SubsimplexIndex {
            kind: SubsimplexKind::Cell,
            vertex_ids: mesh.cell(c).to_vec(),
        },
        kind: SpaceKind::S0,
        exactness: Exactness::AlmostEverywhere,
    })
}

/// Per adjacent cell `T_i` of face `f`: the cell, its vertex opposite `f`,
/// and the scale `|f| / (d |T_i|)`.
struct FaceNeighbours {
    cells: Vec<usize>,
    opposite: Vec<Point>,
    scale: Vec<f64>,
}

fn face_neighbours(mesh: &Mesh, f: usize) -> Result<FaceNeighbours, ShapeError> {
    face_dof(mesh, f)?;
    let d = mesh.dim() as f64;
    let measure = mesh.face_measure(f);
    let cells = mesh.face_cells(f).to_vec();
    let mut opposite = Vec::with_capacity(cells.len());
    let mut scale = Vec::with_capacity(cells.len());
    for &c in &cells {
        let volume = mesh.cell_geometry(c)?.volume;
        opposite.push(mesh.vertex(mesh.opposite_vertex(c, f)).to_vec());
        scale.push(measure / (d * volume));
    }
    Ok(FaceNeighbours {
        cells,
        opposite,
        scale,
    })
}

/// Affine pieces `±(|f|/(d|T_i|)) (x - a_i)` of the RT0 shape function,
/// `+` on the lower-index cell.
fn rt0_pieces(mesh: &Mesh, f: usize) -> Result<Vec<PwlPiece>, ShapeError> {
    let d = mesh.dim();
    let nb = face_neighbours(mesh, f)?;
    Ok(nb
        .cells
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let s = if i == 0 { nb.scale[i] } else { -nb.scale[i] };
            PwlPiece {
                matrix: scaled_identity(d, s),
                offset: nb.opposite[i].iter().map(|a| -s * a).collect(),
                cell: mesh.cell_points(c),
            }
        })
        .collect())
}

/// Raviart-Thomas shape function of face `f`; depth 5.
pub fn rt0_net(mesh: &Mesh, f: usize) -> Result<ShapeNet, ShapeError> {
    let net = pwl_net(&rt0_pieces(mesh, f)?, Kappa::Auto)?;
    Ok(ShapeNet {
        net,
        dof: face_dof(mesh, f)?,
        kind: SpaceKind::RT0,
        exactness: Exactness::AlmostEverywhere,
    })
}

/// The normal flux `θ_f · n_f`, built so that it is also exact on the
/// relative interior of `f`: on each `T_i` the flux is the affine function
/// vanishing at `a_i` and equal to 1 on `f`, and the minimum of these
/// functions selects the right one on either side.
pub fn rt0_normal_net(mesh: &Mesh, f: usize) -> Result<ShapeNet, ShapeError> {
    let nb = face_neighbours(mesh, f)?;
    let d = mesh.dim();
    let face_points = mesh.points_of(&mesh.faces()[f]);
    let mut rows = Vec::with_capacity(nb.cells.len());
    let mut offsets = Vec::with_capacity(nb.cells.len());
    for a in &nb.opposite {
        let mut points = vec![a.clone()];
        points.extend(face_points.iter().cloned());
        let mut rhs = vec![1.0; d + 1];
        rhs[0] = 0.0;
        let form = affine_interpolant(&points, &rhs)?;
        rows.push(form.linear);
        offsets.push(form.offset);
    }
    let affine = Network::affine(&rows, offsets, d);
    let flux = concat(&min_net(nb.cells.len()), &affine)?;

    let mut indicators = Vec::with_capacity(nb.cells.len() + 1);
    for &c in &nb.cells {
        indicators.push(indicator_net(&HalfspaceSystem::open_simplex(&mesh.cell_points(c))?)?);
    }
    // Relative interior of f: λ_a = 0 and λ_p > 0 for the face vertices,
    // barycentric coordinates taken in the first adjacent cell.
    let first = nb.cells[0];
    let forms = mesh.cell_geometry(first)?.barycentric;
    let opposite = mesh.opposite_vertex(first, f);
    let mut face_system = HalfspaceSystem {
        equalities: Vec::new(),
        strict_inequalities: Vec::new(),
    };
    for (local, &v) in mesh.cell(first).iter().enumerate() {
        if v == opposite {
            face_system.equalities.push(forms[local].clone());
        } else {
            face_system.strict_inequalities.push(forms[local].clone());
        }
    }
    indicators.push(indicator_net(&face_system)?);
    let support = sum(&indicators)?;

    let net = concat(&times_step_net(1, 1.0), &parallelize(&[flux, support])?)?;
    assert_eq!(net.depth(), 5);
    Ok(ShapeNet {
        net,
        dof: face_dof(mesh, f)?,
        kind: SpaceKind::RT0,
        exactness: Exactness::AlmostEverywhere,
    })
}

/// The tangential component `θ_f · t_j`, `1 ≤ j ≤ d - 1`, with `t_j` from
/// [`Mesh::face_tangent_frame`].
pub fn rt0_tangential_net(mesh: &Mesh, f: usize, j: usize) -> Result<ShapeNet, ShapeError> {
    let d = mesh.dim();
    if j == 0 || j >= d {
        return Err(ShapeError::TangentIndex { j, max: d - 1 });
    }
    let nb = face_neighbours(mesh, f)?;
    let t = &mesh.face_tangent_frame(f)[j - 1];
    let pieces: Vec<PwlPiece> = nb
        .cells
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let s = if i == 0 { nb.scale[i] } else { -nb.scale[i] };
            PwlPiece {
                matrix: vec![t.iter().map(|x| s * x).collect()],
                offset: vec![-s * dot(&nb.opposite[i], t)],
                cell: mesh.cell_points(c),
            }
        })
        .collect();
    let net = pwl_net(&pieces, Kappa::Auto)?;
    Ok(ShapeNet {
        net,
        dof: face_dof(mesh, f)?,
        kind: SpaceKind::RT0,
        exactness: Exactness::AlmostEverywhere,
    })
}

/// RT0 shape function recombined from the normal and tangential parts:
/// `n_f (θ·n_f) + Σ_j t_j (θ·t_j)`; depth 6.
pub fn rt0_star_net(mesh: &Mesh, f: usize) -> Result<ShapeNet, ShapeError> {
    let d = mesh.dim();
    let lift = |v: &[f64]| -> Network {
        let column: Vec<Vec<f64>> = v.iter().map(|x| vec![*x]).collect();
        Network::affine(&column, vec![0.0; d], 1)
    };
    let normal = mesh.face_normal(f)?;
    let mut parts = vec![concat(&lift(&normal), &rt0_normal_net(mesh, f)?.net)?];
    for (j, t) in mesh.face_tangent_frame(f).iter().enumerate() {
        parts.push(concat(&lift(t), &rt0_tangential_net(mesh, f, j + 1)?.net)?);
    }
    let net = sum(&parts)?;
    assert_eq!(net.depth(), 6);
    Ok(ShapeNet {
        net,
        dof: face_dof(mesh, f)?,
        kind: SpaceKind::RT0,
        exactness: Exactness::AlmostEverywhere,
    })
}

/// Matrix of `x -> x × t`.
pub(crate) fn cross_matrix(t: &[f64]) -> [[f64; 3]; 3] {
    [[0.0, t[2], -t[1]], [-t[2], 0.0, t[0]], [t[1], -t[0], 0.0]]
}

pub(crate) fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Nédélec edge shape function in 3D; `e` indexes [`Mesh::edges`].
pub fn n0_net(mesh: &Mesh, e: usize) -> Result<ShapeNet, ShapeError> {
    if mesh.dim() != 3 {
        return Err(ShapeError::Unsupported {
            kind: SpaceKind::N0,
            dim: mesh.dim(),
            reason: "edge-based N0 nets are built in 3D; 2D uses the rotated RT0 construction",
        });
    }
    let edge = mesh
        .edges()
        .get(e)
        .ok_or(ShapeError::UnknownDof {
            kind: SubsimplexKind::Edge,
            index: e,
        })?
        .clone();
    let dof = SubsimplexIndex {
        kind: SubsimplexKind::Edge,
        vertex_ids: edge.clone(),
    };
    let (v0, v1) = (mesh.vertex(edge[0]), mesh.vertex(edge[1]));
    let t_e = mesh.edge_tangent(e);
    let m_e: Point = v0.iter().zip(v1).map(|(a, b)| 0.5 * (a + b)).collect();

    let mut pieces = Vec::new();
    for c in mesh.adjacency(&dof)? {
        let rest: Vec<usize> = mesh.cell(c).iter().copied().filter(|v| !edge.contains(v)).collect();
        let (w0, w1) = (mesh.vertex(rest[0]), mesh.vertex(rest[1]));
        let mut t = sub(w1, w0);
        let len = norm(&t);
        t.iter_mut().for_each(|x| *x /= len);
        let m: Point = w0.iter().zip(w1).map(|(a, b)| 0.5 * (a + b)).collect();
        let mut denom = dot(&t_e, &cross(&sub(&m_e, &m), &t));
        let scale = mesh.cell_geometry(c)?.diameter;
        if denom.abs() < 1e-14 * scale {
            return Err(ShapeError::DegenerateEdge(edge.clone(), c));
        }
        if denom < 0.0 {
            t.iter_mut().for_each(|x| *x = -*x);
            denom = -denom;
        }
        let matrix = cross_matrix(&t).iter().map(|row| row.iter().map(|x| x / denom).collect()).collect();
        let offset = cross(&m, &t).iter().map(|x| -x / denom).collect();
        pieces.push(PwlPiece {
            matrix,
            offset,
            cell: mesh.cell_points(c),
        });
    }
    let net = pwl_net(&pieces, Kappa::Auto)?;
    Ok(ShapeNet {
        net,
        dof,
        kind: SpaceKind::N0,
        exactness: Exactness::AlmostEverywhere,
    })
}

/// Rotation `(v1, v2) -> (-v2, v1)`.
pub const ROTATION_2D: [[f64; 2]; 2] = [[0.0, -1.0], [1.0, 0.0]];

/// Nédélec shape function of an edge (= face) in 2D: the RT0 net with its
/// output rotated by 90 degrees. The dof orientation is `t_f = R n_f`.
pub fn n0_net_2d(mesh: &Mesh, f: usize) -> Result<ShapeNet, ShapeError> {
    if mesh.dim() != 2 {
        return Err(ShapeError::Unsupported {
            kind: SpaceKind::N0,
            dim: mesh.dim(),
            reason: "the rotated RT0 construction is specific to d = 2",
        });
    }
    let rt = rt0_net(mesh, f)?;
    let rotation: Vec<Vec<f64>> = ROTATION_2D.iter().map(|r| r.to_vec()).collect();
    let net = calculus::map_output(&rotation, &rt.net);
    Ok(ShapeNet {
        net,
        dof: rt.dof,
        kind: SpaceKind::N0,
        exactness: Exactness::AlmostEverywhere,
    })
}

/// Hat function of vertex `p` with BiSU cell indicators; depth 5.
pub fn s1_net_bisu(mesh: &Mesh, p: usize) -> Result<ShapeNet, ShapeError> {
    let dof = check_vertex(mesh, p)?;
    let mut pieces = Vec::new();
    for &c in mesh.vertex_cells(p) {
        let points = mesh.cell_points(c);
        let local = mesh.cell(c).iter().position(|&v| v == p).expect("p in cell");
        // The affine function with value 1 at p and 0 at the other vertices.
        let mut rhs = vec![0.0; points.len()];
        rhs[local] = 1.0;
        let form = affine_interpolant(&points, &rhs)?;
        pieces.push(PwlPiece {
            matrix: vec![form.linear],
            offset: vec![form.offset],
            cell: points,
        });
    }
    let net = pwl_net(&pieces, Kappa::Given(1.0))?;
    Ok(ShapeNet {
        net,
        dof,
        kind: SpaceKind::S1,
        exactness: Exactness::AlmostEverywhere,
    })
}

/// Crouzeix-Raviart shape function of face `f`:
/// `d (1/d - (1 ∓ |f| (x - a_i)·n_f / (d |T_i|)))` on `T_i`.
pub fn cr0_net(mesh: &Mesh, f: usize) -> Result<ShapeNet, ShapeError> {
    let d = mesh.dim();
    SpaceKind::CR0.check_dim(d)?;
    let nb = face_neighbours(mesh, f)?;
    let n = mesh.face_normal(f)?;
    let df = d as f64;
    let pieces: Vec<PwlPiece> = nb
        .cells
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            // d * scale * sign * (x - a_i)·n + 1 - d
            let s = if i == 0 { nb.scale[i] } else { -nb.scale[i] };
            let coefficient = df * s;
            PwlPiece {
                matrix: vec![n.iter().map(|x| coefficient * x).collect()],
                offset: vec![1.0 - df - coefficient * dot(&nb.opposite[i], &n)],
                cell: mesh.cell_points(c),
            }
        })
        .collect();
    let net = pwl_net(&pieces, Kappa::Given(df - 1.0))?;
    Ok(ShapeNet {
        net,
        dof: face_dof(mesh, f)?,
        kind: SpaceKind::CR0,
        exactness: Exactness::AlmostEverywhere,
    })
}

/// `x -> max(0, min_i λ_i(x))` where `λ_i` is the barycentric coordinate of
/// `center` in the `i`-th simplex. Every simplex lists `center` first.
/// On a convex star-shaped subdivision around `center` this is the hat
/// function, everywhere.
pub fn convex_hat_net(simplices: &[Vec<Point>]) -> Result<Network, ShapeError> {
    let d = simplices[0][0].len();
    let mut rows = Vec::with_capacity(simplices.len());
    let mut offsets = Vec::with_capacity(simplices.len());
    for simplex in simplices {
        let form = barycentric_forms(simplex)?.swap_remove(0);
        rows.push(form.linear);
        offsets.push(form.offset);
    }
    let affine = Network::affine(&rows, offsets, d);
    let minimum = concat(&min_net(simplices.len()), &affine)?;
    let clip = Network::new(
        1,
        vec![
            Layer::build(1, 1, vec![(0, 0, 1.0)], vec![0.0], vec![Activation::ReLU]),
            Layer::build(1, 1, vec![(0, 0, 1.0)], vec![0.0], vec![Activation::Identity]),
        ],
    )?;
    let net = concat(&clip, &minimum)?;
    assert!(net.depth() <= 5 + calculus::ceil_log2(simplices.len()));
    Ok(net)
}

fn patch_simplices(mesh: &Mesh, p: usize) -> Vec<Vec<Point>> {
    mesh.vertex_cells(p)
        .iter()
        .map(|&c| {
            let mut simplex = vec![mesh.vertex(p).to_vec()];
            simplex.extend(mesh.cell(c).iter().filter(|&&v| v != p).map(|&v| mesh.vertex(v).to_vec()));
            simplex
        })
        .collect()
}

/// Pure-ReLU hat function for a vertex with a convex patch.
pub fn cpwl_net_convex(mesh: &Mesh, p: usize) -> Result<ShapeNet, ShapeError> {
    let dof = check_vertex(mesh, p)?;
    if !mesh.patch_is_convex(p)? {
        return Err(ShapeError::NonConvexPatch(p));
    }
    let net = convex_hat_net(&patch_simplices(mesh, p))?;
    Ok(ShapeNet {
        net,
        dof,
        kind: SpaceKind::S1ReluOnly,
        exactness: Exactness::Everywhere,
    })
}

/// The auxiliary hats `θ̃_{p,j}`, one per adjacent cell, each supported on
/// the enlarged simplex around that cell.
pub fn auxiliary_hat_nets(mesh: &Mesh, p: usize) -> Result<Vec<Network>, ShapeError> {
    check_vertex(mesh, p)?;
    let patch = mesh.build_patch(p)?;
    patch.sub_simplices.iter().map(|s| convex_hat_net(s)).collect()
}

/// Pure-ReLU hat function for any vertex: the maximum of the auxiliary
/// hats on the enlarged simplices.
pub fn cpwl_net(mesh: &Mesh, p: usize) -> Result<ShapeNet, ShapeError> {
    let dof = check_vertex(mesh, p)?;
    let parts = auxiliary_hat_nets(mesh, p)?;
    let s = parts.len();
    let net = concat(&max_net(s), &parallelize(&parts)?)?;
    let d = mesh.dim();
    assert!(net.depth() <= 7 + calculus::ceil_log2(s) + calculus::ceil_log2(d + 1));
    assert_eq!(net.count_activation(Activation::BiSU), 0);
    Ok(ShapeNet {
        net,
        dof,
        kind: SpaceKind::S1ReluOnly,
        exactness: Exactness::Everywhere,
    })
}

/// The shape net of dof number `index` (in [`dofs`] order) of a family.
pub fn shape_net(mesh: &Mesh, kind: SpaceKind, index: usize) -> Result<ShapeNet, ShapeError> {
    let d = mesh.dim();
    kind.check_dim(d)?;
    match kind {
        SpaceKind::S1 => s1_net_bisu(mesh, index),
        SpaceKind::S1ReluOnly => cpwl_net(mesh, index),
        SpaceKind::N0 if d == 3 => n0_net(mesh, index),
        SpaceKind::N0 => n0_net_2d(mesh, index),
        SpaceKind::RT0 => rt0_net(mesh, index),
        SpaceKind::CR0 => cr0_net(mesh, index),
        SpaceKind::S0 => s0_net(mesh, cell_order(mesh)[index]),
    }
}

/// Cells sorted by their vertex tuples.
pub fn cell_order(mesh: &Mesh) -> Vec<usize> {
    let mut order: Vec<usize> = (0..mesh.num_cells()).collect();
    order.sort_by(|&a, &b| mesh.cell(a).cmp(mesh.cell(b)));
    order
}

/// Degrees of freedom of a family, sorted by vertex tuple.
pub fn dofs(mesh: &Mesh, kind: SpaceKind) -> Vec<SubsimplexIndex> {
    let d = mesh.dim();
    match kind.dof_kind(d) {
        SubsimplexKind::Vertex => (0..mesh.num_vertices())
            .filter(|&v| !mesh.vertex_cells(v).is_empty())
            .map(|v| SubsimplexIndex {
                kind: SubsimplexKind::Vertex,
                vertex_ids: vec![v],
            })
            .collect(),
        SubsimplexKind::Edge => mesh.edge_subsimplices(),
        SubsimplexKind::Face => mesh.face_subsimplices(),
        SubsimplexKind::Cell => cell_order(mesh)
            .into_iter()
            .map(|c| SubsimplexIndex {
                kind: SubsimplexKind::Cell,
                vertex_ids: mesh.cell(c).to_vec(),
            })
            .collect(),
    }
}

/// Index argument for [`shape_net`] of each dof in [`dofs`] order.
pub fn dof_arguments(mesh: &Mesh, kind: SpaceKind) -> Vec<usize> {
    match kind.dof_kind(mesh.dim()) {
        SubsimplexKind::Vertex => (0..mesh.num_vertices()).filter(|&v| !mesh.vertex_cells(v).is_empty()).collect(),
        SubsimplexKind::Edge => (0..mesh.edges().len()).collect(),
        SubsimplexKind::Face => (0..mesh.faces().len()).collect(),
        SubsimplexKind::Cell => (0..mesh.num_cells()).collect(),
    }
}

/// Identity-net padding used to bring pure-ReLU hats to a common depth.
pub(crate) fn pad_to_depth(net: &Network, depth: usize) -> Result<Network, NetError> {
    assert!(depth > net.depth());
    concat(&identity_net(net.output_dim(), depth - net.depth()), net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    fn reference_triangle() -> Mesh {
        Mesh::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0, 1, 2]]).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn s0_indicator() {
        let mesh = generate::square_diag(1);
        let shape = s0_net(&mesh, 0).unwrap();
        assert_eq!(shape.net.depth(), 3);
        assert!(shape.net.size() <= 14);
        let inside = mesh.cell_barycenter(0);
        let other = mesh.cell_barycenter(1);
        assert_eq!(shape.net.evaluate(&inside).unwrap(), vec![1.0]);
        assert_eq!(shape.net.evaluate(&other).unwrap(), vec![0.0]);
    }

    #[test]
    fn rt0_on_reference_triangle() {
        let mesh = reference_triangle();
        let f = mesh.face_index(&[1, 2]).unwrap();
        let net = rt0_net(&mesh, f).unwrap().net;
        assert_eq!(net.depth(), 5);
        let s = 2f64.sqrt() / 4.0;
        assert!(close(&net.evaluate(&[0.25, 0.25]).unwrap(), &[s, s], 1e-15));
        assert_eq!(net.evaluate(&[2.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        // Normal flux at (0.5, 0.5) from the closed form: sqrt2 (0.5, 0.5) · (1, 1)/sqrt2 = 1.
        let normal = rt0_normal_net(&mesh, f).unwrap().net;
        assert!((normal.evaluate(&[0.5, 0.5]).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn n0_reference_tet() {
        let mesh = Mesh::new(
            3,
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap();
        let e = mesh.edge_index(&[0, 1]).unwrap();
        let net = n0_net(&mesh, e).unwrap().net;
        // Just inside the tet near the origin; the field is affine, so compare
        // with the value at the origin extrapolated from two interior points.
        let a = net.evaluate(&[1e-3, 1e-3, 1e-3]).unwrap();
        let b = net.evaluate(&[2e-3, 2e-3, 2e-3]).unwrap();
        let origin: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - y).collect();
        assert!(close(&origin, &[1.0, 0.0, 0.0], 1e-12), "{origin:?}");
        assert_eq!(net.evaluate(&[1.0, 1.0, 1.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn cr0_on_reference_triangle() {
        let mesh = reference_triangle();
        let f = mesh.face_index(&[1, 2]).unwrap();
        let net = cr0_net(&mesh, f).unwrap().net;
        let x = [0.2, 0.3];
        let y = net.evaluate(&x).unwrap()[0];
        assert!((y - (2.0 * (x[0] + x[1]) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn hat_on_criss_cross_center() {
        let mesh = generate::square_crisscross(1);
        let center = mesh.vertices().iter().position(|v| v == &vec![0.5, 0.5]).unwrap();
        let convex = cpwl_net_convex(&mesh, center).unwrap().net;
        let general = cpwl_net(&mesh, center).unwrap().net;
        for net in [&convex, &general] {
            assert!((net.evaluate(&[0.5, 0.5]).unwrap()[0] - 1.0).abs() < 1e-14);
            assert!(net.evaluate(&[0.0, 0.0]).unwrap()[0].abs() < 1e-14);
            assert!((net.evaluate(&[0.25, 0.25]).unwrap()[0] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn n0_rejected_in_4d() {
        let mesh = generate::hypercube_kuhn(4, 1);
        let err = shape_net(&mesh, SpaceKind::N0, 0).unwrap_err();
        assert!(err.to_string().contains("excluded if d > 3"));
    }
}
