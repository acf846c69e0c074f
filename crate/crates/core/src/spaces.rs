//! Whole-space networks: basis nets emulating every shape function of a
//! family in parallel, function nets for coefficient vectors, and boundary
//! trace nets on planar face charts.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, parallelize};
use crate::mesh::{dot, sub, Mesh, MeshError, Point, SubsimplexIndex};
use crate::network::{Activation, Layer, NetError, Network};
use crate::shapes::{self, dof_arguments, dofs, pad_to_depth, ShapeError, SpaceKind};

/// All shape functions of a family in one network; output component
/// `i * value_dim + k` is component `k` of the `i`-th shape function.
#[derive(Debug, Clone)]
pub struct BasisNet {
    pub kind: SpaceKind,
    pub dim: usize,
    pub value_dim: usize,
    pub net: Network,
    pub dof_order: Vec<SubsimplexIndex>,
}

/// A finite element function `Σ v_i θ_i`, sharing its hidden layers with the
/// basis net it was specialized from.
#[derive(Debug, Clone)]
pub struct FunctionNet {
    pub kind: SpaceKind,
    pub coefficients: Vec<f64>,
    pub net: Network,
    pub basis: Arc<BasisNet>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpaceError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("expected {expected} coefficients, got {found}")]
    CoefficientLength { expected: usize, found: usize },
    #[error("function nets belong to different spaces")]
    SpaceMismatch,
    #[error("{0}")]
    Unsupported(String),
}

/// Builds the basis net of a family.
pub fn basis_net(mesh: &Mesh, kind: SpaceKind) -> Result<BasisNet, SpaceError> {
    let d = mesh.dim();
    kind.check_dim(d)?;
    let arguments = if kind == SpaceKind::S0 {
        shapes::cell_order(mesh)
    } else {
        dof_arguments(mesh, kind)
    };
    let mut nets: Vec<Network> = arguments
        .par_iter()
        .map(|&arg| {
            if kind == SpaceKind::S0 {
                shapes::s0_net(mesh, arg).map(|s| s.net)
            } else {
                shapes::shape_net(mesh, kind, arg).map(|s| s.net)
            }
        })
        .collect::<Result<_, _>>()?;
    if nets.is_empty() {
        return Err(SpaceError::Unsupported("the mesh has no degrees of freedom".into()));
    }
    if kind == SpaceKind::S1ReluOnly {
        let deepest = nets.iter().map(Network::depth).max().expect("nonempty");
        nets = nets
            .iter()
            .map(|n| pad_to_depth(n, deepest + 1))
            .collect::<Result<_, _>>()?;
    }
    let net = parallelize(&nets)?;
    Ok(BasisNet {
        kind,
        dim: d,
        value_dim: kind.value_dim(d),
        net,
        dof_order: dofs(mesh, kind),
    })
}

impl BasisNet {
    pub fn num_dofs(&self) -> usize {
        self.dof_order.len()
    }

    /// Replaces the output layer by the coefficient-weighted combination of
    /// its blocks; hidden layers are copied unchanged.
    pub fn specialize(self: &Arc<Self>, coefficients: &[f64]) -> Result<FunctionNet, SpaceError> {
        if coefficients.len() != self.num_dofs() {
            return Err(SpaceError::CoefficientLength {
                expected: self.num_dofs(),
                found: coefficients.len(),
            });
        }
        let layers = self.net.layers();
        let last = &layers[layers.len() - 1];
        let vd = self.value_dim;
        let mut triplets = Vec::with_capacity(last.weight_nnz());
        let mut bias = vec![0.0; vd];
        for (i, &v) in coefficients.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for k in 0..vd {
                let row = i * vd + k;
                triplets.extend(last.row(row).iter().map(|&(_, c, w)| (k, c, v * w)));
                bias[k] += v * last.bias()[row];
            }
        }
        let mut new_layers = layers[..layers.len() - 1].to_vec();
        new_layers.push(Layer::build(vd, last.cols(), triplets, bias, vec![Activation::Identity; vd]));
        Ok(FunctionNet {
            kind: self.kind,
            coefficients: coefficients.to_vec(),
            net: Network::new(self.net.input_dim(), new_layers)?,
            basis: Arc::clone(self),
        })
    }
}

/// Function net for a coefficient vector in dof order.
pub fn function_net(mesh: &Mesh, kind: SpaceKind, coefficients: &[f64]) -> Result<FunctionNet, SpaceError> {
    Arc::new(basis_net(mesh, kind)?).specialize(coefficients)
}

/// `f1 ⊕ λ f2`, computed in coefficient space.
pub fn net_linear_combine(f1: &FunctionNet, lambda: f64, f2: &FunctionNet) -> Result<FunctionNet, SpaceError> {
    if !Arc::ptr_eq(&f1.basis, &f2.basis) && (f1.kind != f2.kind || f1.basis.net != f2.basis.net) {
        return Err(SpaceError::SpaceMismatch);
    }
    let combined: Vec<f64> = f1
        .coefficients
        .iter()
        .zip(&f2.coefficients)
        .map(|(v, w)| v + lambda * w)
        .collect();
    f1.basis.specialize(&combined)
}

/// Affine parametrization `x̂ -> origin + J x̂` of a planar boundary face of a
/// 3D mesh, with the triangulation of its parameter domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaceChart {
    pub id: usize,
    /// Outward unit normal of the plane.
    pub normal: Point,
    /// `normal · x` on the plane.
    pub offset: f64,
    pub origin: Point,
    /// Orthonormal tangent frame; `t1 × t2 = normal`.
    pub frame: [Point; 2],
    /// Indices into [`Mesh::faces`] of the boundary facets on this plane.
    pub facets: Vec<usize>,
    /// Parameter-mesh vertex `k` is mesh vertex `vertex_map[k]`.
    pub vertex_map: Vec<usize>,
    /// Whether all facets of the group share the plane within tolerance.
    pub planar: bool,
    #[serde(skip)]
    pub parameter_mesh: Option<Mesh>,
}

impl FaceChart {
    /// The 3×2 Jacobian `[t1 t2]`.
    pub fn jacobian(&self) -> Vec<Vec<f64>> {
        (0..3).map(|r| vec![self.frame[0][r], self.frame[1][r]]).collect()
    }

    pub fn map(&self, xhat: &[f64]) -> Point {
        (0..3)
            .map(|r| self.origin[r] + self.frame[0][r] * xhat[0] + self.frame[1][r] * xhat[1])
            .collect()
    }

    pub fn pullback(&self, x: &[f64]) -> Point {
        let rel = sub(x, &self.origin);
        vec![dot(&self.frame[0], &rel), dot(&self.frame[1], &rel)]
    }

    pub fn mesh(&self) -> &Mesh {
        self.parameter_mesh.as_ref().expect("chart built by face_charts")
    }

    /// Sign relating each parameter-mesh N0 dof (tangent `R n̂`) to the 3D
    /// edge dof of the same edge (tangent from lower to higher vertex index).
    pub fn n0_sign_map(&self, mesh: &Mesh) -> Result<Vec<f64>, MeshError> {
        let param = self.mesh();
        let mut signs = Vec::with_capacity(param.faces().len());
        for f in 0..param.faces().len() {
            let n = param.face_normal(f)?;
            let t2 = [-n[1], n[0]];
            let t3: Vec<f64> = (0..3).map(|r| self.frame[0][r] * t2[0] + self.frame[1][r] * t2[1]).collect();
            let edge = &param.faces()[f];
            let (a, b) = (self.vertex_map[edge[0]], self.vertex_map[edge[1]]);
            let (lo, hi) = (a.min(b), a.max(b));
            let along = sub(mesh.vertex(hi), mesh.vertex(lo));
            signs.push(if dot(&t3, &along) > 0.0 { 1.0 } else { -1.0 });
        }
        Ok(signs)
    }
}

const PLANE_TOL: f64 = 1e-9;

/// Groups the boundary facets of a 3D mesh by plane and builds a chart for
/// each group.
pub fn face_charts(mesh: &Mesh) -> Result<Vec<FaceChart>, SpaceError> {
    if mesh.dim() != 3 {
        return Err(SpaceError::Unsupported("face charts need a 3D mesh".into()));
    }
    let mut groups: Vec<(Point, f64, Vec<usize>)> = Vec::new();
    for f in mesh.boundary_face_indices() {
        let n = mesh.face_normal(f)?;
        let offset = dot(&n, mesh.vertex(mesh.faces()[f][0]));
        let found = groups.iter_mut().find(|(gn, go, _)| {
            gn.iter().zip(&n).all(|(a, b)| (a - b).abs() <= PLANE_TOL) && (go - offset).abs() <= PLANE_TOL
        });
        match found {
            Some(group) => group.2.push(f),
            None => groups.push((n, offset, vec![f])),
        }
    }

    let mut charts = Vec::with_capacity(groups.len());
    for (id, (normal, offset, facets)) in groups.into_iter().enumerate() {
        let mut vertex_map: Vec<usize> = facets.iter().flat_map(|&f| mesh.faces()[f].iter().copied()).collect();
        vertex_map.sort_unstable();
        vertex_map.dedup();
        let origin = mesh.vertex(vertex_map[0]).to_vec();
        let mut frame = mesh.face_tangent_frame(facets[0]);
        let c = crate::shapes::cross(&frame[0], &frame[1]);
        if dot(&c, &normal) < 0.0 {
            frame[1].iter_mut().for_each(|x| *x = -*x);
        }
        let frame = [frame[0].clone(), frame[1].clone()];
        let planar = vertex_map
            .iter()
            .all(|&v| (dot(&normal, mesh.vertex(v)) - offset).abs() <= PLANE_TOL);
        let mut chart = FaceChart {
            id,
            normal,
            offset,
            origin,
            frame,
            facets: facets.clone(),
            vertex_map: vertex_map.clone(),
            planar,
            parameter_mesh: None,
        };
        let vertices: Vec<Point> = vertex_map.iter().map(|&v| chart.pullback(mesh.vertex(v))).collect();
        let cells: Vec<Vec<usize>> = facets
            .iter()
            .map(|&f| {
                mesh.faces()[f]
                    .iter()
                    .map(|v| vertex_map.binary_search(v).expect("facet vertex in map"))
                    .collect()
            })
            .collect();
        chart.parameter_mesh = Some(Mesh::new(2, vertices, cells)?);
        charts.push(chart);
    }
    Ok(charts)
}

/// Trace net on a chart: the 2D function net on the parameter mesh, with
/// the output of vector families pushed forward by `J` (no extra layer).
pub fn trace_net(chart: &FaceChart, kind: SpaceKind, coefficients: &[f64]) -> Result<FunctionNet, SpaceError> {
    if kind == SpaceKind::CR0 {
        return Err(SpaceError::Unsupported("trace nets are provided for s1, s1-relu, s0, rt0 and n0".into()));
    }
    let mut f = function_net(chart.mesh(), kind, coefficients)?;
    if matches!(kind, SpaceKind::RT0 | SpaceKind::N0) {
        f.net = calculus::map_output(&chart.jacobian(), &f.net);
    }
    Ok(f)
}
