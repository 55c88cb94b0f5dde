//! Banded matrices and an unpivoted banded LU.
//!
//! Every system assembled here has a positive-definite symmetric part
//! (mass + stiffness + skew-dominated convection, or an SPD flux operator),
//! so elimination without pivoting is stable and keeps the band.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major; row `i` holds columns `i - kl ..= i + ku`.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku || i >= self.n || j >= self.n {
            None
        } else {
            Some(i * self.width() + (j + self.kl - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` at `(i, j)`; panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).unwrap_or_else(|| panic!("({i}, {j}) outside band"));
        self.data[s] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).unwrap_or_else(|| panic!("({i}, {j}) outside band"));
        self.data[s] = v;
    }

    /// Replaces row and column `i` by the identity (homogeneous Dirichlet).
    pub fn pin(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl.max(self.ku));
        let hi = (i + self.kl.max(self.ku) + 1).min(self.n);
        for j in lo..hi {
            if let Some(s) = self.slot(i, j) {
                self.data[s] = 0.0;
            }
            if let Some(s) = self.slot(j, i) {
                self.data[s] = 0.0;
            }
        }
        self.set(i, i, 1.0);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place Doolittle elimination within the band.
    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width());
        for k in 0..n {
            let pivot = self.data[k * w + kl];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem { row: k, slab: None });
            }
            let hi = (k + kl + 1).min(n);
            let cols = (k + ku + 1).min(n);
            for i in k + 1..hi {
                let sik = i * w + (k + kl - i);
                let l = self.data[sik] / pivot;
                self.data[sik] = l;
                if l == 0.0 {
                    continue;
                }
                let row_i = i * w + kl - i;
                let row_k = k * w + kl - k;
                for j in k + 1..cols {
                    self.data[row_i + j] -= l * self.data[row_k + j];
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
}

impl BandLu {
    pub fn size(&self) -> usize {
        self.m.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku, w) = (self.m.n, self.m.kl, self.m.ku, self.m.width());
        let d = &self.m.data;
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let base = i * w + kl - i;
            let mut s = b[i];
            for j in lo..i {
                s -= d[base + j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + ku + 1).min(n);
            let base = i * w + kl - i;
            let mut s = b[i];
            for j in i + 1..hi {
                s -= d[base + j] * b[j];
            }
            b[i] = s / d[base + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        let n = 6;
        let mut a = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            a.add(i, i, 4.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -2.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
        let b = a.matvec(&x);
        let lu = a.factor().unwrap();
        let y = lu.solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn pin_and_singular() {
        let mut a = BandMatrix::zeros(3, 1, 2);
        for i in 0..3 {
            a.add(i, i, 2.0);
        }
        a.add(0, 2, 5.0);
        a.pin(2);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.get(2, 2), 1.0);
        let mut s = BandMatrix::zeros(2, 1, 1);
        s.add(0, 1, 1.0);
        assert!(matches!(s.factor(), Err(Error::SingularSystem { row: 0, .. })));
    }
}
