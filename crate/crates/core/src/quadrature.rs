//! Gauss–Legendre rules on the unit interval and collapsed (Duffy) tensor
//! rules on the reference triangle.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[0, 1]`; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Newton iteration on P_n from the Chebyshev-like initial guess;
        // roots come out descending on [-1, 1].
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature on a reference simplex in barycentric coordinates.
///
/// Weights are fractions of the simplex measure (they sum to one), so the
/// physical weight of a point is `weight * cell.measure`.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    /// Gauss–Legendre rule on an interval, barycentric `(1 - s, s, 0)`.
    pub fn interval(n: usize) -> Self {
        let gl = GaussLegendre::new(n);
        let points = gl.nodes.iter().map(|&s| [1.0 - s, s, 0.0]).collect();
        Self {
            points,
            weights: gl.weights,
        }
    }

    /// Collapsed tensor-product Gauss–Legendre rule with `n x n` points on a
    /// triangle. Exact for total degree `2n - 2`.
    pub fn triangle(n: usize) -> Self {
        let gl = GaussLegendre::new(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (xi, wx) in gl.iter() {
            for (eta, wy) in gl.iter() {
                let x = xi * (1.0 - eta);
                let y = eta;
                points.push([1.0 - x - y, x, y]);
                // reference area is 1/2
                weights.push(2.0 * wx * wy * (1.0 - eta));
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Number of points per axis in space and in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadOrder {
    pub space_1d: usize,
    pub space_2d: usize,
    pub time: usize,
}

impl Default for QuadOrder {
    fn default() -> Self {
        Self {
            space_1d: 4,
            space_2d: 3,
            time: 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_monomials_exactly() {
        for n in 1..=6 {
            let gl = GaussLegendre::new(n);
            for p in 0..(2 * n) {
                let q: f64 = gl.iter().map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = 1.0 / (p as f64 + 1.0);
                assert!((q - exact).abs() < 1e-14, "n={n} p={p}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn three_point_nodes_match_table() {
        let gl = GaussLegendre::new(3);
        let r = (0.6f64).sqrt() / 2.0;
        assert!((gl.nodes[0] - (0.5 - r)).abs() < 1e-15);
        assert!((gl.nodes[1] - 0.5).abs() < 1e-15);
        assert!((gl.weights[1] - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_rule_exact_to_degree_2n_minus_2() {
        // int_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!
        fn fact(k: u32) -> f64 {
            (1..=k).map(|i| i as f64).product()
        }
        for n in 2..=4 {
            let rule = SimplexRule::triangle(n);
            for a in 0..=(2 * n - 2) {
                for b in 0..=(2 * n - 2 - a) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * 0.5 * p[1].powi(a as i32) * p[2].powi(b as i32))
                        .sum();
                    let exact = fact(a as u32) * fact(b as u32) / fact((a + b + 2) as u32);
                    assert!((q - exact).abs() < 1e-14, "n={n} a={a} b={b}");
                }
            }
        }
    }
}
