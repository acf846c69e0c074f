//! Simplicial meshes: topology, per-cell geometry, regularity checks and
//! vertex patches.
//!
//! A [`Mesh`] stores vertex coordinates and cells as sorted vertex-index
//! tuples. Faces (codimension-one subsimplices) and edges are extracted once
//! at construction and kept sorted, so indices into [`Mesh::faces`] and
//! [`Mesh::edges`] are stable and deterministic.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point in `R^d`.
pub type Point = Vec<f64>;

/// Relative volume below which a simplex counts as degenerate.
const DEGENERACY_TOL: f64 = 1e-12;
/// Relative tolerance of the convex-patch test.
const CONVEXITY_TOL: f64 = 1e-12;
/// Slack used when deciding whether two closed cells intersect in more than
/// their shared subsimplex.
const REGULARITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh dimension must be at least 1")]
    ZeroDimension,
    #[error("vertex {index} has {found} coordinates, expected {expected}")]
    VertexDimension {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("vertex {0} has a non-finite coordinate")]
    NonFiniteVertex(usize),
    #[error("cell {index} has {found} vertices, expected {expected}")]
    CellArity {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("cell {cell} references vertex {vertex}, but the mesh has {count} vertices")]
    VertexOutOfRange {
        cell: usize,
        vertex: usize,
        count: usize,
    },
    #[error("cell {0} is degenerate")]
    DegenerateCell(usize),
    #[error("subsimplex {0:?} does not belong to the mesh")]
    UnknownSubsimplex(Vec<usize>),
    #[error("{0} is not a vertex of the mesh")]
    UnknownVertex(usize),
    #[error("the points do not span a nondegenerate simplex")]
    DegenerateSimplex,
    #[error("mesh is not regular: {0}")]
    Irregular(String),
    #[error("malformed mesh file: {0}")]
    Parse(String),
}

/// Which family of subsimplices an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsimplexKind {
    Vertex,
    Edge,
    Face,
    Cell,
}

impl SubsimplexKind {
    /// Number of vertices of a subsimplex of this kind in a `dim`-dimensional mesh.
    pub fn arity(self, dim: usize) -> usize {
        match self {
            SubsimplexKind::Vertex => 1,
            SubsimplexKind::Edge => 2,
            SubsimplexKind::Face => dim,
            SubsimplexKind::Cell => dim + 1,
        }
    }
}

/// A vertex, edge, face or cell identified by its sorted vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsimplexIndex {
    pub kind: SubsimplexKind,
    pub vertex_ids: Vec<usize>,
}

impl SubsimplexIndex {
    /// Builds an index, sorting the vertex ids. Fails on repeated ids or a
    /// tuple length that does not match `kind`.
    pub fn new(kind: SubsimplexKind, mut vertex_ids: Vec<usize>, dim: usize) -> Result<Self, MeshError> {
        vertex_ids.sort_unstable();
        let distinct = vertex_ids.windows(2).all(|w| w[0] != w[1]);
        if !distinct || vertex_ids.len() != kind.arity(dim) {
            return Err(MeshError::UnknownSubsimplex(vertex_ids));
        }
        Ok(Self { kind, vertex_ids })
    }
}

impl fmt::Display for SubsimplexIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.vertex_ids.iter().map(|v| v.to_string()).collect();
        write!(f, "{:?}({})", self.kind, ids.join(","))
    }
}

/// An affine form `x -> linear . x + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub linear: Vec<f64>,
    pub offset: f64,
}

impl AffineForm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.linear, x) + self.offset
    }

    pub fn negated(&self) -> Self {
        Self {
            linear: self.linear.iter().map(|v| -v).collect(),
            offset: -self.offset,
        }
    }
}

/// Geometric data of one cell.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub volume: f64,
    pub diameter: f64,
    pub inradius: f64,
    /// Barycentric coordinate of vertex `i` (in sorted cell order) as an
    /// affine form; equals 1 at that vertex and 0 at the others.
    pub barycentric: Vec<AffineForm>,
}

impl CellGeometry {
    pub fn shape_regularity(&self) -> f64 {
        self.diameter / self.inradius
    }
}

/// A detected violation of the mesh invariants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    /// Zero (or numerically zero) volume, including repeated vertex indices.
    DegenerateCell { cell: usize },
    /// The closures of the two cells intersect in more than the closed hull
    /// of their shared vertices: a hanging node or overlapping interiors.
    IrregularPair { first: usize, second: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DegenerateCell { cell } => write!(f, "degenerate cell {cell}"),
            Violation::IrregularPair { first, second } => {
                write!(f, "cells {first} and {second} meet in a hanging node or overlap")
            }
        }
    }
}

/// On-disk mesh layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshFile {
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub cells: Vec<Vec<usize>>,
}

/// A simplicial mesh of a polytope in `R^d`.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    vertex_cells: Vec<Vec<usize>>,
    faces: Vec<Vec<usize>>,
    face_cells: Vec<Vec<usize>>,
    edges: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds a mesh, sorting each cell tuple. Only structural problems are
    /// rejected here; geometric invariants are reported by [`Mesh::validate`].
    pub fn new(dim: usize, vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        if dim == 0 {
            return Err(MeshError::ZeroDimension);
        }
        for (index, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(MeshError::VertexDimension {
                    index,
                    found: v.len(),
                    expected: dim,
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(MeshError::NonFiniteVertex(index));
            }
        }
        let mut sorted_cells = Vec::with_capacity(cells.len());
        for (index, mut cell) in cells.into_iter().enumerate() {
            if cell.len() != dim + 1 {
                return Err(MeshError::CellArity {
                    index,
                    found: cell.len(),
                    expected: dim + 1,
                });
            }
            if let Some(&vertex) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshError::VertexOutOfRange {
                    cell: index,
                    vertex,
                    count: vertices.len(),
                });
            }
            cell.sort_unstable();
            sorted_cells.push(cell);
        }

        let mut vertex_cells = vec![Vec::new(); vertices.len()];
        let mut face_map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        let mut edge_set: BTreeMap<Vec<usize>, ()> = BTreeMap::new();
        for (c, cell) in sorted_cells.iter().enumerate() {
            for &v in cell {
                if vertex_cells[v].last() != Some(&c) {
                    vertex_cells[v].push(c);
                }
            }
            for skip in 0..cell.len() {
                let face: Vec<usize> = cell
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &v)| v)
                    .collect();
                let entry = face_map.entry(face).or_default();
                if entry.last() != Some(&c) {
                    entry.push(c);
                }
            }
            for a in 0..cell.len() {
                for b in a + 1..cell.len() {
                    edge_set.insert(vec![cell[a], cell[b]], ());
                }
            }
        }
        let (faces, face_cells) = face_map.into_iter().unzip();
        let edges = edge_set.into_keys().collect();

        Ok(Self {
            dim,
            vertices,
            cells: sorted_cells,
            vertex_cells,
            faces,
            face_cells,
            edges,
        })
    }

    /// Builds a mesh and rejects it unless [`Mesh::validate`] finds nothing.
    pub fn new_validated(dim: usize, vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        let mesh = Self::new(dim, vertices, cells)?;
        let violations = mesh.validate();
        if let Some(first) = violations.first() {
            return Err(MeshError::Irregular(format!(
                "{first} ({} violation(s) in total)",
                violations.len()
            )));
        }
        Ok(mesh)
    }

    pub fn from_json(text: &str) -> Result<Self, MeshError> {
        let file: MeshFile = serde_json::from_str(text).map_err(|e| MeshError::Parse(e.to_string()))?;
        Self::new(file.dim, file.vertices, file.cells)
    }

    pub fn to_file(&self) -> MeshFile {
        MeshFile {
            dim: self.dim,
            vertices: self.vertices.clone(),
            cells: self.cells.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("mesh serialization cannot fail")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.vertices[v]
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// All faces (sorted `d`-tuples), deduplicated and sorted.
    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    /// All edges (sorted pairs), deduplicated and sorted.
    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    /// Cells adjacent to face `f`, ascending.
    pub fn face_cells(&self, f: usize) -> &[usize] {
        &self.face_cells[f]
    }

    /// Cells containing vertex `v`, ascending.
    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    pub fn face_index(&self, face: &[usize]) -> Option<usize> {
        self.faces.binary_search_by(|f| f.as_slice().cmp(face)).ok()
    }

    pub fn edge_index(&self, edge: &[usize]) -> Option<usize> {
        self.edges.binary_search_by(|e| e.as_slice().cmp(edge)).ok()
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_cells[f].len() == 1
    }

    pub fn face_subsimplices(&self) -> Vec<SubsimplexIndex> {
        self.faces
            .iter()
            .map(|f| SubsimplexIndex {
                kind: SubsimplexKind::Face,
                vertex_ids: f.clone(),
            })
            .collect()
    }

    pub fn edge_subsimplices(&self) -> Vec<SubsimplexIndex> {
        self.edges
            .iter()
            .map(|e| SubsimplexIndex {
                kind: SubsimplexKind::Edge,
                vertex_ids: e.clone(),
            })
            .collect()
    }

    /// Faces with exactly one adjacent cell.
    pub fn boundary_faces(&self) -> Vec<SubsimplexIndex> {
        self.faces
            .iter()
            .zip(&self.face_cells)
            .filter(|(_, cells)| cells.len() == 1)
            .map(|(f, _)| SubsimplexIndex {
                kind: SubsimplexKind::Face,
                vertex_ids: f.clone(),
            })
            .collect()
    }

    /// Indices of boundary faces into [`Mesh::faces`].
    pub fn boundary_face_indices(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| self.is_boundary_face(f)).collect()
    }

    /// Cells whose vertex set contains `s`; the length of the result is the
    /// valence `s(.)` of the subsimplex.
    pub fn adjacency(&self, s: &SubsimplexIndex) -> Result<Vec<usize>, MeshError> {
        let unknown = || MeshError::UnknownSubsimplex(s.vertex_ids.clone());
        if s.vertex_ids.len() != s.kind.arity(self.dim) {
            return Err(unknown());
        }
        let first = *s.vertex_ids.first().ok_or_else(unknown)?;
        if s.vertex_ids.iter().any(|&v| v >= self.vertices.len()) {
            return Err(unknown());
        }
        let cells: Vec<usize> = self.vertex_cells[first]
            .iter()
            .copied()
            .filter(|&c| s.vertex_ids.iter().all(|v| self.cells[c].binary_search(v).is_ok()))
            .collect();
        if cells.is_empty() {
            return Err(unknown());
        }
        Ok(cells)
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cells[c].iter().map(|&v| self.vertices[v].clone()).collect()
    }

    pub fn points_of(&self, ids: &[usize]) -> Vec<Point> {
        ids.iter().map(|&v| self.vertices[v].clone()).collect()
    }

    /// Volume, diameter, inradius and barycentric forms of cell `c`.
    pub fn cell_geometry(&self, c: usize) -> Result<CellGeometry, MeshError> {
        let points = self.cell_points(c);
        let volume = simplex_measure(&points);
        let diameter = diameter(&points);
        if is_degenerate(volume, diameter, self.dim) {
            return Err(MeshError::DegenerateCell(c));
        }
        let barycentric = barycentric_forms(&points).map_err(|_| MeshError::DegenerateCell(c))?;
        let surface: f64 = (0..points.len())
            .map(|skip| {
                let facet: Vec<Point> = points
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, p)| p.clone())
                    .collect();
                simplex_measure(&facet)
            })
            .sum();
        Ok(CellGeometry {
            volume,
            diameter,
            inradius: self.dim as f64 * volume / surface,
            barycentric,
        })
    }

    /// Largest `h_T / r_T` over all cells.
    pub fn shape_regularity(&self) -> Result<f64, MeshError> {
        let mut worst: f64 = 0.0;
        for c in 0..self.cells.len() {
            worst = worst.max(self.cell_geometry(c)?.shape_regularity());
        }
        Ok(worst)
    }

    /// Largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.cells.len())
            .map(|c| diameter(&self.cell_points(c)))
            .fold(0.0, f64::max)
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.cells.len()).map(|c| simplex_measure(&self.cell_points(c))).sum()
    }

    /// The vertex of cell `c` that is not on face `f`.
    pub fn opposite_vertex(&self, c: usize, f: usize) -> usize {
        let face = &self.faces[f];
        *self.cells[c]
            .iter()
            .find(|v| face.binary_search(v).is_err())
            .expect("face is not contained in the cell")
    }

    /// Unit normal of face `f`. Interior faces: points from the lower-index
    /// adjacent cell towards the higher one. Boundary faces: outward.
    pub fn face_normal(&self, f: usize) -> Result<Point, MeshError> {
        let c = self.face_cells[f][0];
        let a = self.opposite_vertex(c, f);
        let local = self.cells[c].iter().position(|&v| v == a).expect("opposite vertex in cell");
        let geom = self.cell_geometry(c)?;
        let grad = &geom.barycentric[local].linear;
        let norm = norm(grad);
        Ok(grad.iter().map(|g| -g / norm).collect())
    }

    /// Unit tangent of edge `e`, from its lower vertex index to its higher.
    pub fn edge_tangent(&self, e: usize) -> Point {
        let edge = &self.edges[e];
        let t = sub(&self.vertices[edge[1]], &self.vertices[edge[0]]);
        let len = norm(&t);
        t.iter().map(|x| x / len).collect()
    }

    /// Orthonormal tangent frame of face `f` (Gram-Schmidt on the edge
    /// vectors from its first vertex, in vertex-index order).
    pub fn face_tangent_frame(&self, f: usize) -> Point2dFrame {
        let face = &self.faces[f];
        let origin = &self.vertices[face[0]];
        let raw: Vec<Point> = face[1..].iter().map(|&v| sub(&self.vertices[v], origin)).collect();
        gram_schmidt(&raw)
    }

    pub fn face_measure(&self, f: usize) -> f64 {
        simplex_measure(&self.points_of(&self.faces[f]))
    }

    pub fn face_barycenter(&self, f: usize) -> Point {
        barycenter(&self.points_of(&self.faces[f]))
    }

    pub fn cell_barycenter(&self, c: usize) -> Point {
        barycenter(&self.cell_points(c))
    }

    /// Lists every violated invariant: degenerate cells and pairs of cells
    /// whose closed intersection is not the closed hull of their shared
    /// vertices.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut forms: Vec<Option<Vec<AffineForm>>> = Vec::with_capacity(self.cells.len());
        for c in 0..self.cells.len() {
            match self.cell_geometry(c) {
                Ok(g) => forms.push(Some(g.barycentric)),
                Err(_) => {
                    violations.push(Violation::DegenerateCell { cell: c });
                    forms.push(None);
                }
            }
        }

        // Sweep over cells sorted by the lower x-extent of their bounding boxes.
        let boxes: Vec<(Point, Point)> = (0..self.cells.len()).map(|c| bounding_box(&self.cell_points(c))).collect();
        let scale = self.bounding_scale();
        let slack = 1e-12 * scale;
        let mut order: Vec<usize> = (0..self.cells.len()).collect();
        order.sort_by(|&a, &b| boxes[a].0[0].total_cmp(&boxes[b].0[0]));
        for (k, &a) in order.iter().enumerate() {
            let Some(forms_a) = &forms[a] else { continue };
            for &b in &order[k + 1..] {
                if boxes[b].0[0] > boxes[a].1[0] + slack {
                    break;
                }
                let Some(forms_b) = &forms[b] else { continue };
                let overlap = (0..self.dim).all(|i| boxes[b].0[i] <= boxes[a].1[i] + slack && boxes[a].0[i] <= boxes[b].1[i] + slack);
                if !overlap {
                    continue;
                }
                if !self.pair_is_regular(a, forms_a, b, forms_b) {
                    let (first, second) = (a.min(b), a.max(b));
                    violations.push(Violation::IrregularPair { first, second });
                }
            }
        }
        violations.sort_by_key(|v| match v {
            Violation::DegenerateCell { cell } => (*cell, 0),
            Violation::IrregularPair { first, second } => (*first, *second + 1),
        });
        violations
    }

    /// Maximizes the total barycentric weight (w.r.t. `a`) of the vertices of
    /// `a` not shared with `b` over the closed intersection of both cells.
    /// The pair is regular iff the maximum is zero. The feasible set is a
    /// bounded polytope, so the maximum sits at a vertex where `d` of the
    /// `2(d+1)` barycentric constraints are active; all of them are tried.
    fn pair_is_regular(&self, a: usize, forms_a: &[AffineForm], b: usize, forms_b: &[AffineForm]) -> bool {
        let d = self.dim;
        let cell_a = &self.cells[a];
        let cell_b = &self.cells[b];
        let nonshared: Vec<usize> = (0..=d).filter(|&k| cell_b.binary_search(&cell_a[k]).is_err()).collect();
        if nonshared.is_empty() {
            // Same vertex set twice: the interiors coincide.
            return false;
        }
        let constraints: Vec<&AffineForm> = forms_a.iter().chain(forms_b.iter()).collect();
        let mut best = f64::NEG_INFINITY;
        for active in combinations(constraints.len(), d) {
            let matrix = DMatrix::from_fn(d, d, |r, col| constraints[active[r]].linear[col]);
            let rhs = DVector::from_fn(d, |r, _| -constraints[active[r]].offset);
            let Some(x) = matrix.lu().solve(&rhs) else { continue };
            let x: Vec<f64> = x.iter().copied().collect();
            if x.iter().any(|v| !v.is_finite()) {
                continue;
            }
            if constraints.iter().any(|form| form.eval(&x) < -REGULARITY_TOL) {
                continue;
            }
            let objective: f64 = nonshared.iter().map(|&k| forms_a[k].eval(&x)).sum();
            best = best.max(objective);
        }
        best <= REGULARITY_TOL
    }

    fn bounding_scale(&self) -> f64 {
        if self.vertices.is_empty() {
            return 1.0;
        }
        let (lo, hi) = bounding_box(&self.vertices);
        lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
    }

    /// Builds the star-point subdivision of the patch around vertex `p`.
    pub fn build_patch(&self, p: usize) -> Result<Patch, MeshError> {
        if p >= self.vertices.len() || self.vertex_cells[p].is_empty() {
            return Err(MeshError::UnknownVertex(p));
        }
        let center = self.vertices[p].clone();
        let cells = self.vertex_cells[p].clone();

        // Distance from p to the hyperplane through the other vertices of
        // each adjacent cell: 1 / |grad lambda_p|.
        let mut center_forms = Vec::with_capacity(cells.len());
        for &c in &cells {
            let geom = self.cell_geometry(c)?;
            let local = self.cells[c].iter().position(|&v| v == p).expect("p in adjacent cell");
            center_forms.push(geom.barycentric[local].clone());
        }
        let epsilon = center_forms
            .iter()
            .map(|form| 1.0 / norm(&form.linear))
            .fold(f64::INFINITY, f64::min);
        assert!(epsilon > 0.0 && epsilon.is_finite(), "vertex {p} has a zero-distance opposite hyperplane");

        let mut star_points = Vec::with_capacity(cells.len());
        let mut enlarged = Vec::with_capacity(cells.len());
        let mut sub_simplices = Vec::with_capacity(cells.len());
        for &c in &cells {
            let others: Vec<Point> = self.cells[c]
                .iter()
                .filter(|&&v| v != p)
                .map(|&v| self.vertices[v].clone())
                .collect();
            let mut direction = vec![0.0; self.dim];
            for a in &others {
                for (dir, (pc, ac)) in direction.iter_mut().zip(center.iter().zip(a)) {
                    *dir += pc - ac;
                }
            }
            let scale = 0.5 * epsilon / norm(&direction);
            let q: Point = center.iter().zip(&direction).map(|(pc, dc)| pc + scale * dc).collect();
            for form in &center_forms {
                assert!(form.eval(&q) > 0.0, "star point left the star region of vertex {p}");
            }

            let mut tilde = Vec::with_capacity(self.dim + 1);
            let mut cell_simplex = vec![center.clone()];
            cell_simplex.extend(others.iter().cloned());
            tilde.push(cell_simplex);
            for skip in 0..others.len() {
                let mut simplex = vec![center.clone(), q.clone()];
                simplex.extend(others.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, a)| a.clone()));
                tilde.push(simplex);
            }
            let mut hull = vec![q.clone()];
            hull.extend(others.iter().cloned());

            star_points.push(q);
            enlarged.push(hull);
            sub_simplices.push(tilde);
        }

        Ok(Patch {
            center: p,
            cells,
            star_points,
            enlarged,
            sub_simplices,
        })
    }

    /// Whether the patch around `p` is convex: every patch vertex lies on the
    /// inner side of every boundary facet of the patch.
    pub fn patch_is_convex(&self, p: usize) -> Result<bool, MeshError> {
        if p >= self.vertices.len() || self.vertex_cells[p].is_empty() {
            return Err(MeshError::UnknownVertex(p));
        }
        let cells = &self.vertex_cells[p];
        let mut facet_count: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
        for &c in cells {
            for skip in 0..self.cells[c].len() {
                let facet: Vec<usize> = self.cells[c]
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &v)| v)
                    .collect();
                let entry = facet_count.entry(facet).or_insert((0, c));
                entry.0 += 1;
            }
        }
        let mut patch_vertices: Vec<usize> = cells.iter().flat_map(|&c| self.cells[c].iter().copied()).collect();
        patch_vertices.sort_unstable();
        patch_vertices.dedup();
        let scale = diameter(&self.points_of(&patch_vertices));

        for (facet, (count, c)) in facet_count {
            if count != 1 {
                continue;
            }
            let geom = self.cell_geometry(c)?;
            let inner = self.cells[c].iter().position(|v| facet.binary_search(v).is_err()).expect("facet of cell");
            let form = &geom.barycentric[inner];
            let gradient = norm(&form.linear);
            for &v in &patch_vertices {
                // Signed distance to the facet's hyperplane, positive inside.
                let distance = form.eval(&self.vertices[v]) / gradient;
                if distance < -CONVEXITY_TOL * scale {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Orthonormal vectors produced by Gram-Schmidt.
pub type Point2dFrame = Vec<Point>;

/// The star-point subdivision of a vertex patch.
#[derive(Debug, Clone)]
pub struct Patch {
    /// The vertex `p`.
    pub center: usize,
    /// Cells adjacent to `p`, ascending.
    pub cells: Vec<usize>,
    /// Per adjacent cell `T_j`, the point `q_j = p + delta_j * sum_i (p - a_i)`.
    pub star_points: Vec<Point>,
    /// Per adjacent cell, the vertices `q_j, a_1, .., a_d` of the enlarged
    /// simplex around `T_j`.
    pub enlarged: Vec<Vec<Point>>,
    /// Per adjacent cell, the `d + 1` simplices subdividing the enlarged
    /// simplex. Entry 0 is `T_j` itself; every simplex lists `p` first.
    pub sub_simplices: Vec<Vec<Vec<Point>>>,
}

pub(crate) fn is_degenerate(volume: f64, diameter: f64, dim: usize) -> bool {
    !(diameter > 0.0) || !(volume > DEGENERACY_TOL * diameter.powi(dim as i32))
}

/// `k`-dimensional measure of the simplex spanned by `k + 1` points.
pub fn simplex_measure(points: &[Point]) -> f64 {
    let k = points.len().saturating_sub(1);
    if k == 0 {
        return 1.0;
    }
    let edges: Vec<Point> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&edges[i], &edges[j]));
    let det = gram.determinant().max(0.0);
    det.sqrt() / factorial(k)
}

/// Barycentric coordinates of a nondegenerate `d`-simplex in `R^d` as affine
/// forms, by inverting the homogeneous vertex matrix with partial pivoting.
pub fn barycentric_forms(points: &[Point]) -> Result<Vec<AffineForm>, MeshError> {
    let d = points.len() - 1;
    if points.iter().any(|p| p.len() != d) {
        return Err(MeshError::DegenerateSimplex);
    }
    if is_degenerate(simplex_measure(points), diameter(points), d) {
        return Err(MeshError::DegenerateSimplex);
    }
    let m = DMatrix::from_fn(d + 1, d + 1, |r, c| if r < d { points[c][r] } else { 1.0 });
    let inverse = m.lu().try_inverse().ok_or(MeshError::DegenerateSimplex)?;
    Ok((0..=d)
        .map(|i| AffineForm {
            linear: (0..d).map(|j| inverse[(i, j)]).collect(),
            offset: inverse[(i, d)],
        })
        .collect())
}

/// Solves `(A, b) [p_0 .. p_d; 1 .. 1] = rhs` for the affine form `(A, b)`
/// whose values at the simplex vertices are `rhs`.
pub fn affine_interpolant(points: &[Point], rhs: &[f64]) -> Result<AffineForm, MeshError> {
    let d = points.len() - 1;
    let m = DMatrix::from_fn(d + 1, d + 1, |r, c| if r < d { points[c][r] } else { 1.0 });
    if is_degenerate(simplex_measure(points), diameter(points), d) {
        return Err(MeshError::DegenerateSimplex);
    }
    let solution = m
        .transpose()
        .lu()
        .solve(&DVector::from_column_slice(rhs))
        .ok_or(MeshError::DegenerateSimplex)?;
    Ok(AffineForm {
        linear: solution.iter().take(d).copied().collect(),
        offset: solution[d],
    })
}

pub fn diameter(points: &[Point]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max(norm(&sub(p, q)));
        }
    }
    best
}

pub fn barycenter(points: &[Point]) -> Point {
    let n = points.len() as f64;
    let mut out = vec![0.0; points[0].len()];
    for p in points {
        for (o, x) in out.iter_mut().zip(p) {
            *o += x;
        }
    }
    out.iter_mut().for_each(|o| *o /= n);
    out
}

pub fn gram_schmidt(vectors: &[Point]) -> Vec<Point> {
    let mut basis: Vec<Point> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let proj = dot(&w, b);
            w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= proj * bi);
        }
        let len = norm(&w);
        basis.push(w.iter().map(|x| x / len).collect());
    }
    basis
}

fn bounding_box(points: &[Point]) -> (Point, Point) {
    let dim = points[0].len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in points {
        for i in 0..dim {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn recurse(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            if n - i < k - current.len() {
                break;
            }
            current.push(i);
            recurse(i + 1, n, k, current, out);
            current.pop();
        }
    }
    recurse(0, n, k, &mut current, &mut out);
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
