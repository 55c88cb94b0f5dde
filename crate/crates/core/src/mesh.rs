//! Uniform tensor grids in space (P1 intervals in 1-d, right triangles in
//! 2-d) and time partitions.

use crate::error::{Error, Result};
use crate::problem::Domain;
use crate::quadrature::{QuadOrder, SimplexRule};

/// Simplex cell with constant shape-function gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Only the first `dim + 1` entries are meaningful.
    pub nodes: [usize; 3],
    pub grads: [[f64; 2]; 3],
    pub verts: [[f64; 2]; 3],
    pub measure: f64,
}

impl Cell {
    pub fn centroid(&self, dim: usize) -> [f64; 2] {
        let nv = dim + 1;
        let mut c = [0.0; 2];
        for v in &self.verts[..nv] {
            c[0] += v[0] / nv as f64;
            c[1] += v[1] / nv as f64;
        }
        c
    }
}

/// Uniform grid on a box. Each square of a 2-d grid is split along its
/// `(0,0)-(1,1)` diagonal, so nested grids give nested P1 spaces.
#[derive(Debug, Clone)]
pub struct SpaceMesh {
    domain: Domain,
    n: [usize; 2],
    h: [f64; 2],
    cells: Vec<Cell>,
    boundary: Vec<bool>,
}

impl SpaceMesh {
    pub fn new(domain: Domain, nodes_per_axis: &[usize]) -> Result<Self> {
        let dim = domain.dim();
        if nodes_per_axis.len() != dim {
            return Err(Error::SizeMismatch {
                what: "nodes per axis",
                expected: dim,
                found: nodes_per_axis.len(),
            });
        }
        if nodes_per_axis.iter().any(|&n| n < 2) {
            return Err(Error::InvalidDomain("need at least 2 nodes per axis".into()));
        }
        let mut n = [1usize; 2];
        let mut h = [0.0; 2];
        for i in 0..dim {
            n[i] = nodes_per_axis[i];
            h[i] = domain.extents()[i] / (n[i] - 1) as f64;
        }
        let mut mesh = Self {
            domain,
            n,
            h,
            cells: Vec::new(),
            boundary: Vec::new(),
        };
        mesh.build();
        Ok(mesh)
    }

    fn build(&mut self) {
        let dim = self.dim();
        let count = self.node_count();
        self.boundary = (0..count)
            .map(|k| {
                let (i, j) = (k % self.n[0], k / self.n[0]);
                i == 0 || i == self.n[0] - 1 || (dim == 2 && (j == 0 || j == self.n[1] - 1))
            })
            .collect();
        if dim == 1 {
            for i in 0..self.n[0] - 1 {
                let verts = [self.coord(i), self.coord(i + 1), [0.0; 2]];
                let h = self.h[0];
                self.cells.push(Cell {
                    nodes: [i, i + 1, usize::MAX],
                    grads: [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0; 2]],
                    verts,
                    measure: h,
                });
            }
        } else {
            let nx = self.n[0];
            for j in 0..self.n[1] - 1 {
                for i in 0..nx - 1 {
                    let n00 = i + nx * j;
                    let (n10, n01, n11) = (n00 + 1, n00 + nx, n00 + nx + 1);
                    self.cells.push(self.triangle([n00, n10, n11]));
                    self.cells.push(self.triangle([n00, n11, n01]));
                }
            }
        }
    }

    fn triangle(&self, nodes: [usize; 3]) -> Cell {
        let p = nodes.map(|n| self.coord(n));
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let mut grads = [[0.0; 2]; 3];
        for k in 0..3 {
            let a = p[(k + 1) % 3];
            let b = p[(k + 2) % 3];
            grads[k] = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
        }
        Cell {
            nodes,
            grads,
            verts: p,
            measure: 0.5 * det.abs(),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn nodes_per_axis(&self) -> Vec<usize> {
        self.n[..self.dim()].to_vec()
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h[..self.dim()]
    }

    /// Largest spacing over the axes.
    pub fn h_max(&self) -> f64 {
        self.spacing().iter().cloned().fold(0.0, f64::max)
    }

    pub fn node_count(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn verts_per_cell(&self) -> usize {
        self.dim() + 1
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        i + self.n[0] * j
    }

    pub fn coord(&self, node: usize) -> [f64; 2] {
        let (i, j) = (node % self.n[0], node / self.n[0]);
        let o = self.domain.origin();
        let mut x = [o[0] + i as f64 * self.h[0], 0.0];
        if self.dim() == 2 {
            x[1] = o[1] + j as f64 * self.h[1];
        }
        x
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&n| self.boundary[n])
    }

    /// Cell containing `x` and the barycentric weights of its vertices.
    /// Points outside the box are clamped onto it.
    pub fn locate(&self, x: &[f64]) -> (usize, [f64; 3]) {
        let o = self.domain.origin();
        let local = |axis: usize| -> (usize, f64) {
            let cells = self.n[axis] - 1;
            let r = ((x[axis] - o[axis]) / self.h[axis]).clamp(0.0, cells as f64);
            let i = (r.floor() as usize).min(cells - 1);
            (i, r - i as f64)
        };
        let (i, xi) = local(0);
        if self.dim() == 1 {
            return (i, [1.0 - xi, xi, 0.0]);
        }
        let (j, eta) = local(1);
        let base = 2 * (i + (self.n[0] - 1) * j);
        if xi >= eta {
            (base, [1.0 - xi, xi - eta, eta])
        } else {
            (base + 1, [1.0 - eta, xi, eta - xi])
        }
    }

    /// Value of the P1 function with nodal `values` at `x`.
    pub fn evaluate(&self, values: &[f64], x: &[f64]) -> f64 {
        let (c, b) = self.locate(x);
        let cell = &self.cells[c];
        (0..self.verts_per_cell()).map(|k| b[k] * values[cell.nodes[k]]).sum()
    }

    /// Constant gradient of a P1 function on every cell.
    pub fn cell_gradients(&self, values: &[f64]) -> Vec<[f64; 2]> {
        let nv = self.verts_per_cell();
        self.cells
            .iter()
            .map(|c| {
                let mut g = [0.0; 2];
                for k in 0..nv {
                    let v = values[c.nodes[k]];
                    g[0] += v * c.grads[k][0];
                    g[1] += v * c.grads[k][1];
                }
                g
            })
            .collect()
    }

    pub fn quad_table(&self, order: QuadOrder) -> QuadTable {
        let rule = if self.dim() == 1 {
            SimplexRule::interval(order.space_1d)
        } else {
            SimplexRule::triangle(order.space_2d)
        };
        let per_cell = rule.len();
        let mut points = Vec::with_capacity(per_cell * self.cell_count());
        for cell in &self.cells {
            for (b, w) in rule.points.iter().zip(&rule.weights) {
                let mut x = [0.0; 2];
                for k in 0..self.verts_per_cell() {
                    x[0] += b[k] * cell.verts[k][0];
                    x[1] += b[k] * cell.verts[k][1];
                }
                points.push(QuadPoint {
                    x,
                    bary: *b,
                    w: w * cell.measure,
                });
            }
        }
        QuadTable { per_cell, points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub x: [f64; 2],
    pub bary: [f64; 3],
    /// Physical weight (includes the cell measure).
    pub w: f64,
}

/// Quadrature points of every cell, stored cell by cell.
#[derive(Debug, Clone)]
pub struct QuadTable {
    per_cell: usize,
    points: Vec<QuadPoint>,
}

impl QuadTable {
    pub fn cell(&self, c: usize) -> &[QuadPoint] {
        &self.points[c * self.per_cell..(c + 1) * self.per_cell]
    }

    pub fn points(&self) -> &[QuadPoint] {
        &self.points
    }

    pub fn per_cell(&self) -> usize {
        self.per_cell
    }
}

/// Time levels `0 = t_0 < t_1 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    times: Vec<f64>,
}

impl TimePartition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidPartition("need at least two levels".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidPartition(format!("t_0 = {} != 0", times[0])));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidPartition(format!(
                    "levels not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { times })
    }

    pub fn uniform(horizon: f64, slabs: usize) -> Result<Self> {
        if slabs == 0 || !(horizon > 0.0) {
            return Err(Error::InvalidPartition(format!(
                "uniform partition needs slabs >= 1 and T > 0 (got {slabs}, {horizon})"
            )));
        }
        let mut times: Vec<f64> = (0..=slabs).map(|k| horizon * k as f64 / slabs as f64).collect();
        times[slabs] = horizon;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, level: usize) -> f64 {
        self.times[level]
    }

    pub fn level_count(&self) -> usize {
        self.times.len()
    }

    pub fn slab_count(&self) -> usize {
        self.times.len() - 1
    }

    pub fn slab_len(&self, k: usize) -> f64 {
        self.times[k + 1] - self.times[k]
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    pub fn max_slab_len(&self) -> f64 {
        (0..self.slab_count()).map(|k| self.slab_len(k)).fold(0.0, f64::max)
    }

    /// Level index whose time is within `tol` of `t`.
    pub fn level_at(&self, t: f64, tol: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    /// Slab containing `t`; the right end of the horizon maps to the last slab.
    pub fn slab_of(&self, t: f64) -> usize {
        match self.times.binary_search_by(|s| s.partial_cmp(&t).expect("finite")) {
            Ok(k) => k.min(self.slab_count() - 1),
            Err(k) => k.saturating_sub(1).min(self.slab_count() - 1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_mask_marks_faces() {
        let m = SpaceMesh::new(Domain::unit(2), &[4, 3]).unwrap();
        let marked: Vec<usize> = m.boundary_nodes().collect();
        // 12 nodes, only (1,1) and (2,1) are interior
        assert_eq!(marked.len(), 10);
        assert!(!m.is_boundary(m.node_index(1, 1)));
        assert!(!m.is_boundary(m.node_index(2, 1)));
        let m1 = SpaceMesh::new(Domain::unit(1), &[5]).unwrap();
        assert_eq!(m1.boundary_nodes().collect::<Vec<_>>(), vec![0, 4]);
    }

    #[test]
    fn cell_measures_sum_to_volume() {
        let d = Domain::new(vec![2.0, 0.5], vec![-1.0, 0.0]).unwrap();
        let m = SpaceMesh::new(d, &[5, 7]).unwrap();
        let total: f64 = m.cells().iter().map(|c| c.measure).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let q: f64 = m.quad_table(QuadOrder::default()).points().iter().map(|p| p.w).sum();
        assert!((q - 1.0).abs() < 1e-14);
    }

    #[test]
    fn p1_gradients_reproduce_linear_functions() {
        let d = Domain::new(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let m = SpaceMesh::new(d, &[4, 6]).unwrap();
        let vals: Vec<f64> = (0..m.node_count())
            .map(|n| {
                let x = m.coord(n);
                3.0 * x[0] - 2.0 * x[1] + 1.0
            })
            .collect();
        for g in m.cell_gradients(&vals) {
            assert!((g[0] - 3.0).abs() < 1e-12 && (g[1] + 2.0).abs() < 1e-12);
        }
        for x in [[0.13, 1.7], [0.9, 0.05], [0.5, 1.0]] {
            assert!((m.evaluate(&vals, &x) - (3.0 * x[0] - 2.0 * x[1] + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn partitions() {
        assert!(TimePartition::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(TimePartition::new(vec![0.1, 1.0]).is_err());
        assert!(TimePartition::uniform(1.0, 0).is_err());
        let p = TimePartition::uniform(2.0, 4).unwrap();
        assert_eq!(p.horizon(), 2.0);
        assert_eq!(p.slab_of(0.0), 0);
        assert_eq!(p.slab_of(0.6), 1);
        assert_eq!(p.slab_of(2.0), 3);
        assert_eq!(p.level_at(1.0, 1e-12), Some(2));
    }
}
