use crate::error::{Error, Result};
use crate::mesh::{SpaceMesh, TimePartition};
use crate::quadrature::GaussLegendre;

/// Componentwise P1 vector field, linear in time on every slab.
///
/// Nodal vectors are interleaved (`values[dim * node + comp]`). Each slab
/// stores its own start and end arrays, so a flux may be discontinuous
/// across levels; continuous fluxes simply repeat the shared level.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField {
    partition: TimePartition,
    dim: usize,
    node_count: usize,
    starts: Vec<Vec<f64>>,
    ends: Vec<Vec<f64>>,
}

impl FluxField {
    pub fn from_slabs(
        partition: TimePartition,
        dim: usize,
        node_count: usize,
        starts: Vec<Vec<f64>>,
        ends: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let slabs = partition.slab_count();
        for (what, arrs) in [("flux slab starts", &starts), ("flux slab ends", &ends)] {
            if arrs.len() != slabs {
                return Err(Error::SizeMismatch {
                    what,
                    expected: slabs,
                    found: arrs.len(),
                });
            }
            if let Some(a) = arrs.iter().find(|a| a.len() != dim * node_count) {
                return Err(Error::SizeMismatch {
                    what: "flux nodal values",
                    expected: dim * node_count,
                    found: a.len(),
                });
            }
        }
        Ok(Self {
            partition,
            dim,
            node_count,
            starts,
            ends,
        })
    }

    /// Time-continuous flux from one array per level.
    pub fn from_levels(
        partition: TimePartition,
        dim: usize,
        node_count: usize,
        levels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if levels.len() != partition.level_count() {
            return Err(Error::SizeMismatch {
                what: "flux levels",
                expected: partition.level_count(),
                found: levels.len(),
            });
        }
        let starts = levels[..levels.len() - 1].to_vec();
        let ends = levels[1..].to_vec();
        Self::from_slabs(partition, dim, node_count, starts, ends)
    }

    pub fn zeros(partition: TimePartition, dim: usize, node_count: usize) -> Self {
        let slabs = partition.slab_count();
        let z = vec![vec![0.0; dim * node_count]; slabs];
        Self {
            partition,
            dim,
            node_count,
            starts: z.clone(),
            ends: z,
        }
    }

    /// Nodal interpolant of a closed-form vector field `g(x, t)`.
    pub fn interpolate(
        mesh: &SpaceMesh,
        partition: &TimePartition,
        g: impl Fn(&[f64], f64) -> [f64; 2],
    ) -> Self {
        let dim = mesh.dim();
        let levels = partition
            .times()
            .iter()
            .map(|&t| {
                let mut vals = vec![0.0; dim * mesh.node_count()];
                for n in 0..mesh.node_count() {
                    let x = mesh.coord(n);
                    let v = g(&x[..dim], t);
                    vals[dim * n..dim * n + dim].copy_from_slice(&v[..dim]);
                }
                vals
            })
            .collect();
        Self::from_levels(partition.clone(), dim, mesh.node_count(), levels).expect("consistent layout")
    }

    pub fn partition(&self) -> &TimePartition {
        &self.partition
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn slab_start(&self, k: usize) -> &[f64] {
        &self.starts[k]
    }

    pub fn slab_end(&self, k: usize) -> &[f64] {
        &self.ends[k]
    }

    pub fn is_time_continuous(&self) -> bool {
        (1..self.starts.len()).all(|k| self.starts[k] == self.ends[k - 1])
    }

    pub fn scaled(&self, s: f64) -> Self {
        let sc = |a: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            a.iter().map(|v| v.iter().map(|x| s * x).collect()).collect()
        };
        Self {
            partition: self.partition.clone(),
            dim: self.dim,
            node_count: self.node_count,
            starts: sc(&self.starts),
            ends: sc(&self.ends),
        }
    }

    /// Value of the flux at physical point `x` inside cell `cell` with
    /// barycentric weights `bary`, on slab `k` at local time `s`.
    pub fn eval_in_cell(&self, mesh: &SpaceMesh, cell: usize, bary: &[f64; 3], k: usize, s: f64) -> [f64; 2] {
        let c = &mesh.cells()[cell];
        let mut y = [0.0; 2];
        for v in 0..self.dim + 1 {
            let n = c.nodes[v];
            for comp in 0..self.dim {
                let i = self.dim * n + comp;
                y[comp] += bary[v] * ((1.0 - s) * self.starts[k][i] + s * self.ends[k][i]);
            }
        }
        y
    }

    pub fn check_mesh(&self, mesh: &SpaceMesh) -> Result<()> {
        if mesh.node_count() != self.node_count || mesh.dim() != self.dim {
            return Err(Error::SizeMismatch {
                what: "flux mesh nodes",
                expected: mesh.node_count(),
                found: self.node_count,
            });
        }
        Ok(())
    }
}

/// Cellwise constant divergence of one P1 vector snapshot.
pub fn cell_divergence(values: &[f64], mesh: &SpaceMesh) -> Vec<f64> {
    let dim = mesh.dim();
    mesh.cells()
        .iter()
        .map(|c| {
            let mut d = 0.0;
            for v in 0..dim + 1 {
                let n = c.nodes[v];
                for comp in 0..dim {
                    d += values[dim * n + comp] * c.grads[v][comp];
                }
            }
            d
        })
        .collect()
}

/// Divergence on every cell at every time quadrature point:
/// `result[slab][point][cell]`.
pub fn flux_divergence(y: &FluxField, mesh: &SpaceMesh, time_rule: &GaussLegendre) -> Result<Vec<Vec<Vec<f64>>>> {
    y.check_mesh(mesh)?;
    Ok((0..y.partition.slab_count())
        .map(|k| {
            let d0 = cell_divergence(y.slab_start(k), mesh);
            let d1 = cell_divergence(y.slab_end(k), mesh);
            time_rule
                .nodes
                .iter()
                .map(|&s| d0.iter().zip(&d1).map(|(a, b)| (1.0 - s) * a + s * b).collect())
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Domain;

    #[test]
    fn divergence_of_simple_fields() {
        let m = SpaceMesh::new(Domain::unit(1), &[9]).unwrap();
        let p = TimePartition::uniform(1.0, 2).unwrap();
        let y = FluxField::interpolate(&m, &p, |x, _| [x[0], 0.0]);
        let d = flux_divergence(&y, &m, &GaussLegendre::new(2)).unwrap();
        assert!(d.iter().flatten().flatten().all(|v| (v - 1.0).abs() < 1e-12));
        let c = FluxField::interpolate(&m, &p, |_, _| [3.0, 0.0]);
        let d = flux_divergence(&c, &m, &GaussLegendre::new(2)).unwrap();
        assert!(d.iter().flatten().flatten().all(|v| v.abs() < 1e-12));

        let m2 = SpaceMesh::new(Domain::unit(2), &[5, 4]).unwrap();
        let y = FluxField::interpolate(&m2, &p, |x, t| [2.0 * x[0] + x[1], -x[1] * t]);
        let d = flux_divergence(&y, &m2, &GaussLegendre::new(3)).unwrap();
        let g = GaussLegendre::new(3);
        for (k, slab) in d.iter().enumerate() {
            for (q, cells) in slab.iter().enumerate() {
                let t = p.time(k) + g.nodes[q] * p.slab_len(k);
                assert!(cells.iter().all(|v| (v - (2.0 - t)).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn layout_checks() {
        let p = TimePartition::uniform(1.0, 2).unwrap();
        assert!(FluxField::from_levels(p.clone(), 1, 3, vec![vec![0.0; 3]; 2]).is_err());
        assert!(FluxField::from_levels(p.clone(), 2, 3, vec![vec![0.0; 3]; 3]).is_err());
        let y = FluxField::from_levels(p, 1, 3, vec![vec![1.0; 3]; 3]).unwrap();
        assert!(y.is_time_continuous());
    }
}
