use crate::closed_form::ScalarFunction;
use crate::error::{Error, Result};
use crate::mesh::{SpaceMesh, TimePartition};
use crate::quadrature::GaussLegendre;

/// Nodal values at one time level; jump levels carry both one-sided limits.
#[derive(Debug, Clone, PartialEq)]
pub enum Level {
    Single(Vec<f64>),
    Jump { left: Vec<f64>, right: Vec<f64> },
}

impl Level {
    /// Limit from below, `v(t_k - 0)`.
    pub fn left(&self) -> &[f64] {
        match self {
            Level::Single(v) => v,
            Level::Jump { left, .. } => left,
        }
    }

    /// Limit from above, `v(t_k + 0)`.
    pub fn right(&self) -> &[f64] {
        match self {
            Level::Single(v) => v,
            Level::Jump { right, .. } => right,
        }
    }

    pub fn is_jump(&self) -> bool {
        matches!(self, Level::Jump { .. })
    }

    fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Level {
        match self {
            Level::Single(v) => Level::Single(f(v)),
            Level::Jump { left, right } => Level::Jump {
                left: f(left),
                right: f(right),
            },
        }
    }
}

/// P1-in-space, piecewise-linear-in-time scalar field, possibly with jumps
/// at interior levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    partition: TimePartition,
    node_count: usize,
    levels: Vec<Level>,
}

impl SpaceTimeField {
    pub fn new(partition: TimePartition, node_count: usize, levels: Vec<Level>) -> Result<Self> {
        if levels.len() != partition.level_count() {
            return Err(Error::SizeMismatch {
                what: "levels",
                expected: partition.level_count(),
                found: levels.len(),
            });
        }
        for lvl in &levels {
            for arr in [lvl.left(), lvl.right()] {
                if arr.len() != node_count {
                    return Err(Error::SizeMismatch {
                        what: "nodal values",
                        expected: node_count,
                        found: arr.len(),
                    });
                }
            }
        }
        let last = levels.len() - 1;
        if levels[0].is_jump() || levels[last].is_jump() {
            return Err(Error::InvalidJump("jumps only at interior levels".into()));
        }
        Ok(Self {
            partition,
            node_count,
            levels,
        })
    }

    pub fn zeros(partition: TimePartition, node_count: usize) -> Self {
        let levels = vec![Level::Single(vec![0.0; node_count]); partition.level_count()];
        Self {
            partition,
            node_count,
            levels,
        }
    }

    pub fn partition(&self) -> &TimePartition {
        &self.partition
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &Level {
        &self.levels[k]
    }

    pub fn slab_count(&self) -> usize {
        self.partition.slab_count()
    }

    /// Values at the start of slab `k`, `v(t_k + 0)`.
    pub fn slab_start(&self, k: usize) -> &[f64] {
        self.levels[k].right()
    }

    /// Values at the end of slab `k`, `v(t_{k+1} - 0)`.
    pub fn slab_end(&self, k: usize) -> &[f64] {
        self.levels[k + 1].left()
    }

    pub fn initial(&self) -> &[f64] {
        self.levels[0].right()
    }

    pub fn terminal(&self) -> &[f64] {
        self.levels[self.levels.len() - 1].left()
    }

    pub fn has_jumps(&self) -> bool {
        self.levels.iter().any(Level::is_jump)
    }

    pub fn jump_levels(&self) -> Vec<usize> {
        (0..self.levels.len()).filter(|&k| self.levels[k].is_jump()).collect()
    }

    /// Nodal values on slab `k` at local time `s ∈ [0, 1]`.
    pub fn slab_values(&self, k: usize, s: f64) -> Vec<f64> {
        self.slab_start(k)
            .iter()
            .zip(self.slab_end(k))
            .map(|(a, b)| (1.0 - s) * a + s * b)
            .collect()
    }

    /// Checks the H¹₀ invariant: zero boundary values on every level side.
    pub fn check_boundary(&self, mesh: &SpaceMesh, tol: f64) -> Result<()> {
        self.check_mesh(mesh)?;
        for (k, lvl) in self.levels.iter().enumerate() {
            for arr in [lvl.left(), lvl.right()] {
                if let Some(n) = mesh.boundary_nodes().find(|&n| arr[n].abs() > tol) {
                    return Err(Error::BoundaryTrace(format!(
                        "value {:e} at boundary node {n}, level {k}",
                        arr[n]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn check_mesh(&self, mesh: &SpaceMesh) -> Result<()> {
        if mesh.node_count() != self.node_count {
            return Err(Error::SizeMismatch {
                what: "mesh nodes",
                expected: mesh.node_count(),
                found: self.node_count,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v.iter().map(|x| s * x).collect())
    }

    pub fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        Self {
            partition: self.partition.clone(),
            node_count: self.node_count,
            levels: self.levels.iter().map(|l| l.map(&f)).collect(),
        }
    }

    /// Pointwise difference `self - other` on a shared partition.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.partition != other.partition || self.node_count != other.node_count {
            return Err(Error::SizeMismatch {
                what: "field layout",
                expected: self.node_count,
                found: other.node_count,
            });
        }
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| {
                if a.is_jump() || b.is_jump() {
                    Level::Jump {
                        left: sub(a.left(), b.left()),
                        right: sub(a.right(), b.right()),
                    }
                } else {
                    Level::Single(sub(a.left(), b.left()))
                }
            })
            .collect();
        Ok(Self {
            partition: self.partition.clone(),
            node_count: self.node_count,
            levels,
        })
    }

    pub fn into_levels(self) -> (TimePartition, Vec<Level>) {
        (self.partition, self.levels)
    }
}

/// Cell gradients on every slab at every time quadrature point:
/// `result[slab][point][cell]`.
pub fn gradient(
    field: &SpaceTimeField,
    mesh: &SpaceMesh,
    time_rule: &GaussLegendre,
) -> Result<Vec<Vec<Vec<[f64; 2]>>>> {
    field.check_mesh(mesh)?;
    Ok((0..field.slab_count())
        .map(|k| {
            let g0 = mesh.cell_gradients(field.slab_start(k));
            let g1 = mesh.cell_gradients(field.slab_end(k));
            time_rule
                .nodes
                .iter()
                .map(|&s| {
                    g0.iter()
                        .zip(&g1)
                        .map(|(a, b)| {
                            [(1.0 - s) * a[0] + s * b[0], (1.0 - s) * a[1] + s * b[1]]
                        })
                        .collect()
                })
                .collect()
        })
        .collect())
}

/// Nodal rate `(v(t_{k+1} - 0) - v(t_k + 0)) / Δt_k` on every slab; jumps
/// never enter.
pub fn time_derivative(field: &SpaceTimeField) -> Vec<Vec<f64>> {
    (0..field.slab_count())
        .map(|k| {
            let dt = field.partition().slab_len(k);
            field
                .slab_start(k)
                .iter()
                .zip(field.slab_end(k))
                .map(|(a, b)| (b - a) / dt)
                .collect()
        })
        .collect()
}

/// Nodal interpolant at every level. With `require_h10` a closed form that
/// does not vanish on the boundary is rejected; accepted boundary values
/// are set to exactly zero.
pub fn interpolate_field(
    closed_form: &dyn ScalarFunction,
    mesh: &SpaceMesh,
    partition: &TimePartition,
    require_h10: bool,
) -> Result<SpaceTimeField> {
    let dim = mesh.dim();
    let coords: Vec<[f64; 2]> = (0..mesh.node_count()).map(|n| mesh.coord(n)).collect();
    let mut levels = Vec::with_capacity(partition.level_count());
    for &t in partition.times() {
        let mut vals: Vec<f64> = coords.iter().map(|x| closed_form.value(&x[..dim], t)).collect();
        let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if require_h10 {
            for n in mesh.boundary_nodes() {
                if vals[n].abs() > 1e-12 * scale {
                    return Err(Error::BoundaryTrace(format!(
                        "closed form is {:e} at boundary node {n} (t = {t})",
                        vals[n]
                    )));
                }
                vals[n] = 0.0;
            }
        }
        levels.push(Level::Single(vals));
    }
    SpaceTimeField::new(partition.clone(), mesh.node_count(), levels)
}

/// Nodal interpolant of a function of space on the mesh, boundary forced to zero.
pub fn interpolate_h10(f: &dyn ScalarFunction, mesh: &SpaceMesh, t: f64) -> Vec<f64> {
    let dim = mesh.dim();
    (0..mesh.node_count())
        .map(|n| {
            if mesh.is_boundary(n) {
                0.0
            } else {
                f.value(&mesh.coord(n)[..dim], t)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{Constant, FnScalar, SineDecay};
    use crate::problem::Domain;
    use std::f64::consts::PI;

    fn mesh1(n: usize) -> SpaceMesh {
        SpaceMesh::new(Domain::unit(1), &[n]).unwrap()
    }

    #[test]
    fn gradient_of_linear_and_zero() {
        let m = mesh1(11);
        let p = TimePartition::uniform(1.0, 3).unwrap();
        let lin = FnScalar::new("x", |x: &[f64], _t| x[0]);
        let v = interpolate_field(&lin, &m, &p, false).unwrap();
        let g = gradient(&v, &m, &GaussLegendre::new(3)).unwrap();
        assert!(g.iter().flatten().flatten().all(|g| (g[0] - 1.0).abs() < 1e-12));
        let z = SpaceTimeField::zeros(p, m.node_count());
        let g = gradient(&z, &m, &GaussLegendre::new(3)).unwrap();
        assert!(g.iter().flatten().flatten().all(|g| g[0] == 0.0));
    }

    #[test]
    fn gradient_of_sine_is_second_order_at_midpoints() {
        let mut errs = vec![];
        for n in [51, 101] {
            let m = mesh1(n);
            let p = TimePartition::uniform(1.0, 1).unwrap();
            let v = interpolate_field(&SineDecay::bump(m.domain()), &m, &p, true).unwrap();
            let g = gradient(&v, &m, &GaussLegendre::new(1)).unwrap();
            let err = m
                .cells()
                .iter()
                .zip(&g[0][0])
                .map(|(c, g)| (g[0] - PI * (PI * c.centroid(1)[0]).cos()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        // halving h divides the error by ~4
        assert!(errs[1] < 1e-3 && errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn time_derivative_cases() {
        let m = mesh1(21);
        let p = TimePartition::uniform(1.0, 10).unwrap();
        let c = interpolate_field(&SineDecay::bump(m.domain()), &m, &p, true).unwrap();
        assert!(time_derivative(&c).iter().flatten().all(|r| r.abs() < 1e-14));

        let lin = FnScalar::new("t sin", |x: &[f64], t| t * (PI * x[0]).sin());
        let v = interpolate_field(&lin, &m, &p, true).unwrap();
        let bump = interpolate_h10(&SineDecay::bump(m.domain()), &m, 0.0);
        for rates in time_derivative(&v) {
            for (r, b) in rates.iter().zip(&bump) {
                assert!((r - b).abs() < 1e-12);
            }
        }

        // a jump marker with identical sides changes nothing
        let (part, mut levels) = v.clone().into_levels();
        let same = levels[4].left().to_vec();
        levels[4] = Level::Jump {
            left: same.clone(),
            right: same,
        };
        let marked = SpaceTimeField::new(part, m.node_count(), levels).unwrap();
        assert_eq!(time_derivative(&marked), time_derivative(&v));
    }

    #[test]
    fn interpolation_examples() {
        let m = mesh1(5);
        let p = TimePartition::uniform(1.0, 2).unwrap();
        let u = SineDecay::new(m.domain(), 1.0);
        let v = interpolate_field(&u, &m, &p, true).unwrap();
        for (k, &t) in p.times().iter().enumerate() {
            for n in 1..4 {
                let x = m.coord(n)[0];
                assert!((v.level(k).left()[n] - (PI * x).sin() * (-t).exp()).abs() < 1e-15);
            }
        }
        let z = interpolate_field(&Constant(0.0), &m, &p, true).unwrap();
        assert_eq!(z, SpaceTimeField::zeros(p.clone(), 5));
        let poly = FnScalar::new("x(1-x)t", |x: &[f64], t| x[0] * (1.0 - x[0]) * t);
        let v = interpolate_field(&poly, &m, &p, true).unwrap();
        assert_eq!(v.terminal()[2], 0.25);
        assert!(matches!(
            interpolate_field(&Constant(1.0), &m, &p, true),
            Err(Error::BoundaryTrace(_))
        ));
    }

    #[test]
    fn construction_rejects_bad_layouts() {
        let p = TimePartition::uniform(1.0, 2).unwrap();
        assert!(SpaceTimeField::new(p.clone(), 3, vec![Level::Single(vec![0.0; 3]); 2]).is_err());
        assert!(SpaceTimeField::new(p.clone(), 3, vec![Level::Single(vec![0.0; 2]); 3]).is_err());
        let edge_jump = vec![
            Level::Jump {
                left: vec![0.0; 3],
                right: vec![0.0; 3],
            },
            Level::Single(vec![0.0; 3]),
            Level::Single(vec![0.0; 3]),
        ];
        assert!(SpaceTimeField::new(p, 3, edge_jump).is_err());
    }
}
