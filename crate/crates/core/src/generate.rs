//! Structured mesh generators for the test geometries.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::mesh::{Mesh, Point};

/// The named domains the generators support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Unit square, each grid square split into 4 triangles through its center.
    SquareCrisscross,
    /// Unit square, each grid square split along its `/` diagonal.
    SquareDiag,
    /// `(-1,1)^2` minus the closed lower-right quadrant.
    LShape,
    /// Unit cube, Kuhn subdivision into 6 tetrahedra per grid cube.
    CubeKuhn,
    /// `(-1,1)^3` minus the upper octant `[0,1]^3`.
    Fichera,
}

impl Domain {
    pub const ALL: [Domain; 5] = [
        Domain::SquareCrisscross,
        Domain::SquareDiag,
        Domain::LShape,
        Domain::CubeKuhn,
        Domain::Fichera,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Domain::SquareCrisscross => "square-crisscross",
            Domain::SquareDiag => "square-diag",
            Domain::LShape => "lshape",
            Domain::CubeKuhn => "cube-kuhn",
            Domain::Fichera => "fichera",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Domain::SquareCrisscross | Domain::SquareDiag | Domain::LShape => 2,
            Domain::CubeKuhn | Domain::Fichera => 3,
        }
    }

    /// Measure of the domain.
    pub fn volume(self) -> f64 {
        match self {
            Domain::SquareCrisscross | Domain::SquareDiag | Domain::CubeKuhn => 1.0,
            Domain::LShape => 3.0,
            Domain::Fichera => 7.0,
        }
    }

    pub fn generate(self, n: usize) -> Mesh {
        match self {
            Domain::SquareCrisscross => square_crisscross(n),
            Domain::SquareDiag => square_diag(n),
            Domain::LShape => lshape(n),
            Domain::CubeKuhn => cube_kuhn(n),
            Domain::Fichera => fichera(n),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown domain '{s}'"))
    }
}

/// Collects vertices keyed by integer lattice coordinates and numbers them
/// in lexicographic order.
struct VertexPool {
    keys: BTreeMap<Vec<i64>, Point>,
}

impl VertexPool {
    fn new() -> Self {
        Self { keys: BTreeMap::new() }
    }

    fn add(&mut self, key: Vec<i64>, point: Point) -> Vec<i64> {
        self.keys.entry(key.clone()).or_insert(point);
        key
    }

    fn finish(self, dim: usize, cells: Vec<Vec<Vec<i64>>>) -> Mesh {
        let index: BTreeMap<&Vec<i64>, usize> = self.keys.keys().enumerate().map(|(i, k)| (k, i)).collect();
        let cells = cells
            .iter()
            .map(|cell| cell.iter().map(|k| index[k]).collect())
            .collect();
        let vertices = self.keys.into_values().collect();
        Mesh::new(dim, vertices, cells).expect("generated mesh is well formed")
    }
}

/// Kuhn subdivision of the grid cubes of `[lo, lo + n*h]^dim` (spacing
/// `h`) whose centers satisfy `keep`. Every cube gets the `dim!` simplices
/// `x0, x0 + e_{π1}, x0 + e_{π1} + e_{π2}, ...`, which is conforming
/// across neighbouring cubes.
pub fn kuhn_grid(dim: usize, lo: f64, h: f64, n: usize, keep: impl Fn(&[f64]) -> bool) -> Mesh {
    let mut pool = VertexPool::new();
    let mut cells = Vec::new();
    let perms = permutations(dim);
    let point = |key: &[i64]| -> Point { key.iter().map(|&k| lo + h * k as f64).collect() };
    for corner in lattice(dim, n) {
        let center: Point = corner.iter().map(|&k| lo + h * (k as f64 + 0.5)).collect();
        if !keep(&center) {
            continue;
        }
        for perm in &perms {
            let mut key = corner.clone();
            let mut cell = vec![pool.add(key.clone(), point(&key))];
            for &axis in perm {
                key[axis] += 1;
                cell.push(pool.add(key.clone(), point(&key)));
            }
            cells.push(cell);
        }
    }
    pool.finish(dim, cells)
}

pub fn square_diag(n: usize) -> Mesh {
    assert!(n >= 1);
    kuhn_grid(2, 0.0, 1.0 / n as f64, n, |_| true)
}

pub fn cube_kuhn(n: usize) -> Mesh {
    assert!(n >= 1);
    kuhn_grid(3, 0.0, 1.0 / n as f64, n, |_| true)
}

/// Unit hypercube in `dim` dimensions, Kuhn-subdivided.
pub fn hypercube_kuhn(dim: usize, n: usize) -> Mesh {
    assert!(n >= 1);
    kuhn_grid(dim, 0.0, 1.0 / n as f64, n, |_| true)
}

pub fn fichera(n: usize) -> Mesh {
    assert!(n >= 1);
    kuhn_grid(3, -1.0, 1.0 / n as f64, 2 * n, |c| !c.iter().all(|&x| x > 0.0))
}

pub fn square_crisscross(n: usize) -> Mesh {
    assert!(n >= 1);
    let h = 1.0 / n as f64;
    let mut pool = VertexPool::new();
    let mut cells = Vec::new();
    // Grid vertices use even lattice keys, square centers odd ones.
    let at = |i: i64, j: i64| vec![i as f64 * h * 0.5, j as f64 * h * 0.5];
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            let corners = [(2 * i, 2 * j), (2 * i + 2, 2 * j), (2 * i + 2, 2 * j + 2), (2 * i, 2 * j + 2)];
            let c = pool.add(vec![2 * i + 1, 2 * j + 1], at(2 * i + 1, 2 * j + 1));
            for k in 0..4 {
                let (a, b) = (corners[k], corners[(k + 1) % 4]);
                let va = pool.add(vec![a.0, a.1], at(a.0, a.1));
                let vb = pool.add(vec![b.0, b.1], at(b.0, b.1));
                cells.push(vec![va, vb, c.clone()]);
            }
        }
    }
    pool.finish(2, cells)
}

/// L-shape with diagonals pointing towards the re-entrant corner: `/` in
/// squares with `x y > 0`, `\` elsewhere. With `n = 1` the origin is shared
/// by 6 triangles and its patch is not convex.
pub fn lshape(n: usize) -> Mesh {
    assert!(n >= 1);
    let h = 1.0 / n as f64;
    let mut pool = VertexPool::new();
    let mut cells = Vec::new();
    let at = |i: i64, j: i64| vec![-1.0 + i as f64 * h, -1.0 + j as f64 * h];
    for i in 0..2 * n as i64 {
        for j in 0..2 * n as i64 {
            let (cx, cy) = (-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h);
            if cx > 0.0 && cy < 0.0 {
                continue;
            }
            let mut v = |a: i64, b: i64| pool.add(vec![a, b], at(a, b));
            let (p00, p10, p11, p01) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
            if cx * cy > 0.0 {
                cells.push(vec![p00.clone(), p10, p11.clone()]);
                cells.push(vec![p00, p11, p01]);
            } else {
                cells.push(vec![p00, p10.clone(), p01.clone()]);
                cells.push(vec![p10, p11, p01]);
            }
        }
    }
    pool.finish(2, cells)
}

/// The L-shape of [`lshape`] extruded over `z ∈ [0, 1]`, Kuhn-subdivided.
/// Its boundary consists of 8 planar faces.
pub fn lshape_prism(n: usize) -> Mesh {
    assert!(n >= 1);
    let h = 1.0 / n as f64;
    let mut pool = VertexPool::new();
    let mut cells = Vec::new();
    let perms = permutations(3);
    let point = |key: &[i64]| -> Point { vec![-1.0 + h * key[0] as f64, -1.0 + h * key[1] as f64, h * key[2] as f64] };
    for corner in lattice(3, 2 * n) {
        if corner[2] >= n as i64 {
            continue;
        }
        let (cx, cy) = (-1.0 + (corner[0] as f64 + 0.5) * h, -1.0 + (corner[1] as f64 + 0.5) * h);
        if cx > 0.0 && cy < 0.0 {
            continue;
        }
        for perm in &perms {
            let mut key = corner.clone();
            let mut cell = vec![pool.add(key.clone(), point(&key))];
            for &axis in perm {
                key[axis] += 1;
                cell.push(pool.add(key.clone(), point(&key)));
            }
            cells.push(cell);
        }
    }
    pool.finish(3, cells)
}

fn lattice(dim: usize, n: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..n as i64).map(move |k| {
                    let mut p = prefix.clone();
                    p.push(k);
                    p
                })
            })
            .collect();
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}
