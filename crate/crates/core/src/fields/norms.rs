use serde::{Deserialize, Serialize};

use crate::closed_form::ExactSolution;
use crate::error::Result;
use crate::fields::SpaceTimeField;
use crate::mesh::SpaceMesh;
use crate::problem::{ConvectionClass, ConvectionField};
use crate::quadrature::{GaussLegendre, QuadOrder};

/// Every error measure used by the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBundle {
    pub grad_qt: f64,
    pub delta_qt: f64,
    pub slice_t: f64,
    pub slice_0: f64,
    pub combined: f64,
    pub combined_delta: f64,
    pub combined_delta_hat: f64,
}

/// Selector for one entry of a [`NormBundle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    GradQt,
    DeltaQt,
    SliceT,
    Slice0,
    Combined,
    CombinedDelta,
    CombinedDeltaHat,
}

impl NormBundle {
    /// Builds the bundle from the squared primitive norms.
    pub fn from_squares(grad_sq: f64, delta_sq: f64, slice_t_sq: f64, slice_0_sq: f64) -> Self {
        Self {
            grad_qt: grad_sq.sqrt(),
            delta_qt: delta_sq.sqrt(),
            slice_t: slice_t_sq.sqrt(),
            slice_0: slice_0_sq.sqrt(),
            combined: (grad_sq + 0.5 * slice_t_sq).sqrt(),
            combined_delta: (grad_sq + delta_sq + slice_t_sq).sqrt(),
            combined_delta_hat: (grad_sq + delta_sq + 0.5 * slice_t_sq).sqrt(),
        }
    }

    pub fn zero() -> Self {
        Self::from_squares(0.0, 0.0, 0.0, 0.0)
    }

    pub fn get(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::GradQt => self.grad_qt,
            NormKind::DeltaQt => self.delta_qt,
            NormKind::SliceT => self.slice_t,
            NormKind::Slice0 => self.slice_0,
            NormKind::Combined => self.combined,
            NormKind::CombinedDelta => self.combined_delta,
            NormKind::CombinedDeltaHat => self.combined_delta_hat,
        }
    }
}

/// Norms of a discrete error field `e`.
pub fn norms(e: &SpaceTimeField, mesh: &SpaceMesh, class: &ConvectionClass) -> Result<NormBundle> {
    integrate(None, e, mesh, class, QuadOrder::default())
}

/// Norms of `u - v` with the closed-form `u` and `∇u` sampled inside the
/// quadrature. Jump-marked `v` is integrated slab by slab.
pub fn error_norms(
    exact: &dyn ExactSolution,
    v: &SpaceTimeField,
    mesh: &SpaceMesh,
    class: &ConvectionClass,
    order: QuadOrder,
) -> Result<NormBundle> {
    integrate(Some(exact), v, mesh, class, order)
}

/// Integrates `u - v`, with `u = 0` when absent.
fn integrate(
    exact: Option<&dyn ExactSolution>,
    v: &SpaceTimeField,
    mesh: &SpaceMesh,
    class: &ConvectionClass,
    order: QuadOrder,
) -> Result<NormBundle> {
    v.check_mesh(mesh)?;
    let dim = mesh.dim();
    let nv = dim + 1;
    let table = mesh.quad_table(order);
    let time = GaussLegendre::new(order.time);
    let part = v.partition();

    let slice = |vals: &[f64], t: f64| -> f64 {
        let mut acc = 0.0;
        for (c, cell) in mesh.cells().iter().enumerate() {
            for q in table.cell(c) {
                let vh: f64 = (0..nv).map(|k| q.bary[k] * vals[cell.nodes[k]]).sum();
                let u = exact.map_or(0.0, |u| u.value(&q.x[..dim], t));
                acc += q.w * (u - vh) * (u - vh);
            }
        }
        acc
    };

    let mut grad_sq = 0.0;
    let mut delta_sq = 0.0;
    for k in 0..v.slab_count() {
        let dt = part.slab_len(k);
        let g0 = mesh.cell_gradients(v.slab_start(k));
        let g1 = mesh.cell_gradients(v.slab_end(k));
        for (s, wt) in time.iter() {
            let t = part.time(k) + s * dt;
            let vals = v.slab_values(k, s);
            let (mut gs, mut ds) = (0.0, 0.0);
            for (c, cell) in mesh.cells().iter().enumerate() {
                let gv = [(1.0 - s) * g0[c][0] + s * g1[c][0], (1.0 - s) * g0[c][1] + s * g1[c][1]];
                for q in table.cell(c) {
                    let x = &q.x[..dim];
                    let (u, gu) = match exact {
                        Some(u) => (u.value(x, t), u.gradient(x, t)),
                        None => (0.0, [0.0; 2]),
                    };
                    let vh: f64 = (0..nv).map(|j| q.bary[j] * vals[cell.nodes[j]]).sum();
                    let ge = [gu[0] - gv[0], gu[1] - gv[1]];
                    gs += q.w * (ge[0] * ge[0] + ge[1] * ge[1]);
                    let d2 = class.delta_sq_at(x);
                    if d2 != 0.0 {
                        ds += q.w * d2 * (u - vh) * (u - vh);
                    }
                }
            }
            grad_sq += wt * dt * gs;
            delta_sq += wt * dt * ds;
        }
    }
    let slice_t_sq = slice(v.terminal(), part.horizon());
    let slice_0_sq = slice(v.initial(), 0.0);
    Ok(NormBundle::from_squares(grad_sq, delta_sq, slice_t_sq, slice_0_sq))
}

/// `‖u(·,t) - w‖_Ω` for nodal values `w` and the closed-form `u`.
pub fn slice_error(exact: &dyn ExactSolution, values: &[f64], mesh: &SpaceMesh, t: f64, order: QuadOrder) -> f64 {
    let dim = mesh.dim();
    let table = mesh.quad_table(order);
    let mut acc = 0.0;
    for (c, cell) in mesh.cells().iter().enumerate() {
        for q in table.cell(c) {
            let wh: f64 = (0..dim + 1).map(|k| q.bary[k] * values[cell.nodes[k]]).sum();
            let d = exact.value(&q.x[..dim], t) - wh;
            acc += q.w * d * d;
        }
    }
    acc.sqrt()
}

/// `(∫(a·∇w) w + ½∫w² div a, ∫|a·∇w||w|)` for a P1 function `w`. The
/// first entry vanishes when `w = 0` on the boundary; the second is its
/// natural scale.
pub fn convection_identity(values: &[f64], mesh: &SpaceMesh, convection: &ConvectionField, order: QuadOrder) -> (f64, f64) {
    let dim = mesh.dim();
    let table = mesh.quad_table(order);
    let grads = mesh.cell_gradients(values);
    let div = convection.divergence();
    let (mut defect, mut scale) = (0.0, 0.0);
    for (c, cell) in mesh.cells().iter().enumerate() {
        for q in table.cell(c) {
            let a = convection.eval(&q.x[..dim]);
            let w: f64 = (0..dim + 1).map(|k| q.bary[k] * values[cell.nodes[k]]).sum();
            let adw = a[0] * grads[c][0] + a[1] * grads[c][1];
            defect += q.w * (adw * w + 0.5 * w * w * div);
            scale += q.w * (adw * w).abs();
        }
    }
    (defect, scale)
}

/// `‖w‖_Ω` of a P1 function, exact via the element mass matrix.
pub fn l2_norm(values: &[f64], mesh: &SpaceMesh) -> f64 {
    l2_inner(values, values, mesh).max(0.0).sqrt()
}

/// `(a, b)_Ω` of two P1 functions, exact via the element mass matrix.
pub fn l2_inner(a: &[f64], b: &[f64], mesh: &SpaceMesh) -> f64 {
    let nv = mesh.verts_per_cell();
    let denom = (nv * (nv + 1)) as f64;
    let mut acc = 0.0;
    for cell in mesh.cells() {
        let mut s = 0.0;
        for i in 0..nv {
            for j in 0..nv {
                let m = if i == j { 2.0 } else { 1.0 };
                s += m * a[cell.nodes[i]] * b[cell.nodes[j]];
            }
        }
        acc += cell.measure * s / denom;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{FnScalar, SineDecay};
    use crate::fields::interpolate_field;
    use crate::mesh::TimePartition;
    use crate::problem::Domain;
    use std::f64::consts::PI;

    #[test]
    fn zero_error_has_zero_norms() {
        let m = SpaceMesh::new(Domain::unit(2), &[5, 5]).unwrap();
        let p = TimePartition::uniform(1.0, 3).unwrap();
        let z = SpaceTimeField::zeros(p, m.node_count());
        let n = norms(&z, &m, &ConvectionClass::StrictNegative { delta_sq: 0.5 }).unwrap();
        assert_eq!(n, NormBundle::zero());
    }

    #[test]
    fn closed_form_sine_norms() {
        // e = sin(pi x), constant in time, measured with u = e and v = 0
        let m = SpaceMesh::new(Domain::unit(1), &[41]).unwrap();
        let p = TimePartition::uniform(1.0, 4).unwrap();
        let u = SineDecay::bump(m.domain());
        let z = SpaceTimeField::zeros(p, m.node_count());
        let order = QuadOrder {
            space_1d: 8,
            ..QuadOrder::default()
        };
        let n = error_norms(&u, &z, &m, &ConvectionClass::DivZero, order).unwrap();
        assert!((n.grad_qt.powi(2) - PI * PI / 2.0).abs() < 1e-10);
        assert!((n.slice_t.powi(2) - 0.5).abs() < 1e-10);
        assert!((n.combined.powi(2) - (PI * PI / 2.0 + 0.25)).abs() < 1e-10);
        let n = error_norms(&u, &z, &m, &ConvectionClass::StrictNegative { delta_sq: 0.5 }, order).unwrap();
        assert!((n.delta_qt.powi(2) - 0.25).abs() < 1e-10);
        assert!((n.combined_delta.powi(2) - (PI * PI / 2.0 + 0.75)).abs() < 1e-10);
    }

    #[test]
    fn discrete_quadratic_in_space_is_exact() {
        // P1 field v = t * hat, with hat the P1 interpolant of x(1-x); norms
        // of a discrete field are polynomial integrals
        let m = SpaceMesh::new(Domain::unit(1), &[3]).unwrap();
        let p = TimePartition::uniform(1.0, 1).unwrap();
        let f = FnScalar::new("t hat", |x: &[f64], t| t * x[0] * (1.0 - x[0]));
        let v = interpolate_field(&f, &m, &p, true).unwrap();
        let n = norms(&v, &m, &ConvectionClass::StrictNegative { delta_sq: 2.0 }).unwrap();
        // hat has peak 1/4 at 1/2: ‖∇hat‖² = 2 * (1/4)^2 / (1/2) = 1/4, ∫t² = 1/3
        assert!((n.grad_qt.powi(2) - 1.0 / 12.0).abs() < 1e-14);
        // ‖hat‖² = (1/4)^2 / 3 = 1/48
        assert!((n.slice_t.powi(2) - 1.0 / 48.0).abs() < 1e-14);
        assert!((n.delta_qt.powi(2) - 2.0 / 144.0).abs() < 1e-14);
        assert_eq!(n.slice_0, 0.0);
    }

    #[test]
    fn mass_matrix_norm_matches_quadrature() {
        let m = SpaceMesh::new(Domain::unit(2), &[6, 4]).unwrap();
        let vals: Vec<f64> = (0..m.node_count()).map(|n| ((n * 7) % 5) as f64 - 2.0).collect();
        let table = m.quad_table(QuadOrder::default());
        let mut q = 0.0;
        for (c, cell) in m.cells().iter().enumerate() {
            for p in table.cell(c) {
                let v: f64 = (0..3).map(|k| p.bary[k] * vals[cell.nodes[k]]).sum();
                q += p.w * v * v;
            }
        }
        assert!((l2_norm(&vals, &m).powi(2) - q).abs() < 1e-12 * q);
    }
}
