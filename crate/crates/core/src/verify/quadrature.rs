//! Grundmann-Möller quadrature on simplices.

/// A quadrature point: weight relative to the simplex volume (weights sum
/// to 1) and barycentric coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadPoint {
    pub weight: f64,
    pub barycentric: Vec<f64>,
}

/// Grundmann-Möller rule of degree `2s + 1` on a `d`-simplex. All points
/// are interior.
pub fn grundmann_moeller(d: usize, s: usize) -> Vec<QuadPoint> {
    let factorial = |n: usize| -> f64 { (1..=n).map(|k| k as f64).product() };
    let mut points = Vec::new();
    for i in 0..=s {
        let denom = (d + 2 * s + 1 - 2 * i) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let weight = sign * 2f64.powi(-(2 * s as i32)) * denom.powi(2 * s as i32 + 1)
            / (factorial(i) * factorial(d + 2 * s + 1 - i))
            * factorial(d);
        for beta in compositions(s - i, d + 1) {
            points.push(QuadPoint {
                weight,
                barycentric: beta.iter().map(|&b| (2 * b + 1) as f64 / denom).collect(),
            });
        }
    }
    points
}

/// The rule used by the convergence study: degree 5.
pub fn default_rule(d: usize) -> Vec<QuadPoint> {
    grundmann_moeller(d, 2)
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
