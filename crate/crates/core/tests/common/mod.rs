//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// `C_F = λ_min^{-1/2}` of the three-point Dirichlet Laplacian on `(0, l)`
/// with `n` interior points, from a dense symmetric eigensolver.
pub fn fd_friedrichs_1d(l: f64, n: usize) -> f64 {
    let h = l / (n + 1) as f64;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 2.0 / (h * h);
        if i + 1 < n {
            a[(i, i + 1)] = -1.0 / (h * h);
            a[(i + 1, i)] = -1.0 / (h * h);
        }
    }
    let eig = SymmetricEigen::new(a);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    1.0 / lmin.sqrt()
}

/// Five-point Dirichlet Laplacian on an `lx × ly` box with `n × n`
/// interior points, applied matrix-free.
struct Laplace2d {
    n: usize,
    cx: f64,
    cy: f64,
}

impl Laplace2d {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                let mut v = 2.0 * (self.cx + self.cy) * x[k];
                if i > 0 {
                    v -= self.cx * x[k - 1];
                }
                if i + 1 < n {
                    v -= self.cx * x[k + 1];
                }
                if j > 0 {
                    v -= self.cy * x[k - n];
                }
                if j + 1 < n {
                    v -= self.cy * x[k + n];
                }
                out[k] = v;
            }
        }
    }

    fn cg(&self, b: &[f64], tol: f64) -> Vec<f64> {
        let m = b.len();
        let mut x = vec![0.0; m];
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; m];
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let b_norm = rr.sqrt();
        for _ in 0..10 * m {
            if rr.sqrt() <= tol * b_norm {
                break;
            }
            self.apply(&p, &mut ap);
            let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..m {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..m {
                p[i] = r[i] + beta * p[i];
            }
        }
        x
    }
}

/// `C_F` of the five-point Laplacian by inverse power iteration with CG.
pub fn fd_friedrichs_2d(lx: f64, ly: f64, n: usize) -> f64 {
    let hx = lx / (n + 1) as f64;
    let hy = ly / (n + 1) as f64;
    let op = Laplace2d {
        n,
        cx: 1.0 / (hx * hx),
        cy: 1.0 / (hy * hy),
    };
    // a generic start vector with a nonzero ground-state component
    let mut x: Vec<f64> = (0..n * n).map(|k| 1.0 + 0.1 * ((k * 7919) % 13) as f64).collect();
    let mut lambda = 0.0;
    let mut ax = vec![0.0; n * n];
    for _ in 0..60 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        op.apply(&x, &mut ax);
        let next: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        if (next - lambda).abs() < 1e-13 * next {
            lambda = next;
            break;
        }
        lambda = next;
        x = op.cg(&x, 1e-12);
    }
    1.0 / lambda.sqrt()
}

/// Least-squares slope of `log y` against `log x`.
pub fn fitted_order(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
