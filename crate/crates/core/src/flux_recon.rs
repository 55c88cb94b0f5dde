//! Auxiliary fluxes `y`: gradient averaging, and direct minimization of a
//! quadratic surrogate of the majorant.
//!
//! On slab `k` a flux is `y = (1 - s) Y0 + s Y1` with P1 snapshots `Y0`,
//! `Y1`. The surrogate
//!
//! `Q_k(y) = w_gap ‖y - ∇v‖² + Σ_c W_c ‖r‖²_c`
//!
//! has Hessian `2 Δt (T ⊗ S)` with `T = [[1/3, 1/6], [1/6, 1/3]]` and
//! `S = w_gap M + Dᵀ diag(W_c |c|) D` (vector mass matrix and cellwise
//! divergence). Rotating to the eigenvectors of `T` leaves two solves with
//! one factorization of `S`.

use crate::error::{Error, Result};
use crate::fields::{FluxField, SpaceTimeField};
use crate::linalg::{BandLu, BandMatrix};
use crate::majorant::{BoundInputs, ResidualMoments};
use crate::mesh::SpaceMesh;

/// Volume-weighted average of the cell gradients around every node, taken
/// separately at the start and end of each slab (so jump levels use the
/// matching one-sided value).
pub fn flux_average(v: &SpaceTimeField, mesh: &SpaceMesh) -> Result<FluxField> {
    v.check_mesh(mesh)?;
    let slabs = v.slab_count();
    let mut starts = Vec::with_capacity(slabs);
    let mut ends = Vec::with_capacity(slabs);
    for k in 0..slabs {
        starts.push(average_gradient(v.slab_start(k), mesh));
        ends.push(average_gradient(v.slab_end(k), mesh));
    }
    FluxField::from_slabs(v.partition().clone(), mesh.dim(), mesh.node_count(), starts, ends)
}

fn average_gradient(values: &[f64], mesh: &SpaceMesh) -> Vec<f64> {
    let dim = mesh.dim();
    let grads = mesh.cell_gradients(values);
    let mut acc = vec![0.0; dim * mesh.node_count()];
    let mut vol = vec![0.0; mesh.node_count()];
    for (c, cell) in mesh.cells().iter().enumerate() {
        for &n in &cell.nodes[..dim + 1] {
            vol[n] += cell.measure;
            for comp in 0..dim {
                acc[dim * n + comp] += cell.measure * grads[c][comp];
            }
        }
    }
    for n in 0..mesh.node_count() {
        for comp in 0..dim {
            acc[dim * n + comp] /= vol[n];
        }
    }
    acc
}

/// Weights of the surrogate: `gap[k]` on `‖y - ∇v‖²` and `residual[k][c]`
/// on `‖r‖²` over cell `c` of slab `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxWeights {
    pub gap: Vec<f64>,
    pub residual: Vec<Vec<f64>>,
}

impl FluxWeights {
    pub fn uniform(slabs: usize, cells: usize, gap: f64, residual: f64) -> Self {
        Self {
            gap: vec![gap; slabs],
            residual: vec![vec![residual; cells]; slabs],
        }
    }

    pub fn with_gap_ratio(&self, ratio: f64) -> Self {
        Self {
            gap: self.gap.iter().map(|g| g * ratio).collect(),
            residual: self.residual.clone(),
        }
    }

    fn check(&self, slabs: usize, cells: usize) -> Result<()> {
        let ok = self.gap.len() == slabs
            && self.residual.len() == slabs
            && self.residual.iter().all(|r| r.len() == cells)
            && self.gap.iter().all(|&g| g > 0.0 && g.is_finite())
            && self.residual.iter().flatten().all(|&w| w >= 0.0 && w.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(
                "flux weights need one positive gap weight per slab and nonnegative cell weights".into(),
            ))
        }
    }
}

/// Which majorant the weights approximate.
#[derive(Debug, Clone, PartialEq)]
pub enum FluxTarget {
    /// `‖y - ∇v‖ + C_F ‖r‖`: base weights `(1, C_F²)`, the gap weight
    /// playing the role of the Young parameter.
    Sum,
    /// A bound that is already a weighted sum of squares.
    Quadratic(FluxWeights),
}

/// Ratios `10^k, k = -2..2` applied to the gap weight.
pub const DEFAULT_RATIOS: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// `Q(y)` summed over slabs.
pub fn flux_objective(moments: &ResidualMoments, mesh: &SpaceMesh, weights: &FluxWeights, y: &FluxField) -> Result<f64> {
    let inp = BoundInputs::from_moments(moments, y, mesh)?;
    weights.check(inp.slab_count(), mesh.cell_count())?;
    Ok((0..inp.slab_count())
        .map(|k| {
            weights.gap[k] * inp.gap2[k]
                + inp.cell_r2[k].iter().zip(&weights.residual[k]).map(|(r, w)| r * w).sum::<f64>()
        })
        .sum())
}

/// Gradient of `Q` with respect to `(Y0, Y1)` of every slab, concatenated.
pub fn flux_gradient(
    moments: &ResidualMoments,
    mesh: &SpaceMesh,
    weights: &FluxWeights,
    y: &FluxField,
) -> Result<Vec<Vec<f64>>> {
    weights.check(moments.slab_count(), mesh.cell_count())?;
    y.check_mesh(mesh)?;
    let mut out = Vec::with_capacity(moments.slab_count());
    for k in 0..moments.slab_count() {
        let sys = SlabSystem::new(moments, mesh, weights, k);
        let s = sys.matrix();
        let dt = moments.slab_len[k];
        let (sy0, sy1) = (s.matvec(y.slab_start(k)), s.matvec(y.slab_end(k)));
        let rhs = sys.rhs();
        let mut g = Vec::with_capacity(2 * sy0.len());
        for a in 0..2 {
            for i in 0..sy0.len() {
                let ty = if a == 0 {
                    sy0[i] / 3.0 + sy1[i] / 6.0
                } else {
                    sy0[i] / 6.0 + sy1[i] / 3.0
                };
                g.push(2.0 * (dt * ty - rhs[a][i]));
            }
        }
        out.push(g);
    }
    Ok(out)
}

struct SlabSystem<'a> {
    moments: &'a ResidualMoments,
    mesh: &'a SpaceMesh,
    gap: f64,
    cell_w: &'a [f64],
    k: usize,
}

impl<'a> SlabSystem<'a> {
    fn new(moments: &'a ResidualMoments, mesh: &'a SpaceMesh, weights: &'a FluxWeights, k: usize) -> Self {
        Self {
            moments,
            mesh,
            gap: weights.gap[k],
            cell_w: &weights.residual[k],
            k,
        }
    }

    fn bandwidth(mesh: &SpaceMesh) -> usize {
        let dim = mesh.dim();
        let per_axis = mesh.nodes_per_axis();
        let node_band = if dim == 1 { 1 } else { per_axis[0] + 1 };
        dim * node_band + dim - 1
    }

    /// `S = w_gap M + Dᵀ diag(W_c |c|) D`.
    fn matrix(&self) -> BandMatrix {
        let mesh = self.mesh;
        let dim = mesh.dim();
        let nv = dim + 1;
        let bw = Self::bandwidth(mesh);
        let mut s = BandMatrix::zeros(dim * mesh.node_count(), bw, bw);
        let denom = (nv * (nv + 1)) as f64;
        for (c, cell) in mesh.cells().iter().enumerate() {
            let wd = self.cell_w[c] * cell.measure;
            for i in 0..nv {
                for j in 0..nv {
                    let mass = self.gap * cell.measure * if i == j { 2.0 } else { 1.0 } / denom;
                    for ci in 0..dim {
                        let row = dim * cell.nodes[i] + ci;
                        for cj in 0..dim {
                            let col = dim * cell.nodes[j] + cj;
                            let mut v = wd * cell.grads[i][ci] * cell.grads[j][cj];
                            if ci == cj {
                                v += mass;
                            }
                            if v != 0.0 {
                                s.add(row, col, v);
                            }
                        }
                    }
                }
            }
        }
        s
    }

    /// `rhs_a = w_gap Δt Σ_b T_ab L_b - Dᵀ(W ∘ m_a)`.
    fn rhs(&self) -> [Vec<f64>; 2] {
        let mesh = self.mesh;
        let dim = mesh.dim();
        let nv = dim + 1;
        let dt = self.moments.slab_len[self.k];
        let [g0, g1] = &self.moments.grads[self.k];
        let m = &self.moments.m[self.k];
        let n = dim * mesh.node_count();
        let mut out = [vec![0.0; n], vec![0.0; n]];
        for (c, cell) in mesh.cells().iter().enumerate() {
            let share = cell.measure / nv as f64;
            for i in 0..nv {
                for comp in 0..dim {
                    let row = dim * cell.nodes[i] + comp;
                    let (l0, l1) = (share * g0[c][comp], share * g1[c][comp]);
                    let dcoef = cell.grads[i][comp] * self.cell_w[c];
                    out[0][row] += self.gap * dt * (l0 / 3.0 + l1 / 6.0) - dcoef * m[c][0];
                    out[1][row] += self.gap * dt * (l0 / 6.0 + l1 / 3.0) - dcoef * m[c][1];
                }
            }
        }
        out
    }

    fn solve(&self, lu: &BandLu) -> (Vec<f64>, Vec<f64>) {
        let dt = self.moments.slab_len[self.k];
        let [r0, r1] = self.rhs();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut zp: Vec<f64> = r0.iter().zip(&r1).map(|(a, b)| h * (a + b)).collect();
        let mut zm: Vec<f64> = r0.iter().zip(&r1).map(|(a, b)| h * (a - b)).collect();
        lu.solve_in_place(&mut zp);
        lu.solve_in_place(&mut zm);
        // eigenvalues of T: 1/2 on (1, 1), 1/6 on (1, -1)
        let (sp, sm) = (2.0 / dt, 6.0 / dt);
        let y0 = zp.iter().zip(&zm).map(|(p, q)| h * (sp * p + sm * q)).collect();
        let y1 = zp.iter().zip(&zm).map(|(p, q)| h * (sp * p - sm * q)).collect();
        (y0, y1)
    }
}

/// The exact minimizer of `Q` for fixed weights.
pub fn flux_minimize_weighted(moments: &ResidualMoments, mesh: &SpaceMesh, weights: &FluxWeights) -> Result<FluxField> {
    let slabs = moments.slab_count();
    weights.check(slabs, mesh.cell_count())?;
    let mut starts = Vec::with_capacity(slabs);
    let mut ends = Vec::with_capacity(slabs);
    let mut cached: Option<(usize, BandLu)> = None;
    for k in 0..slabs {
        let sys = SlabSystem::new(moments, mesh, weights, k);
        // S only depends on the slab weights; reuse the factorization
        let reuse = matches!(&cached, Some((j, _)) if weights.gap[*j] == weights.gap[k] && weights.residual[*j] == weights.residual[k]);
        if !reuse {
            let lu = sys.matrix().factor().map_err(|e| match e {
                Error::SingularSystem { row, .. } => Error::SingularSystem { row, slab: Some(k) },
                other => other,
            })?;
            cached = Some((k, lu));
        }
        let (_, lu) = cached.as_ref().expect("factored above");
        let (y0, y1) = sys.solve(lu);
        starts.push(y0);
        ends.push(y1);
    }
    let part = crate::mesh::TimePartition::new(
        std::iter::once(0.0)
            .chain(moments.slab_len.iter().scan(0.0, |t, dt| {
                *t += dt;
                Some(*t)
            }))
            .collect(),
    )?;
    FluxField::from_slabs(part, mesh.dim(), mesh.node_count(), starts, ends)
}

/// Selected flux with the inputs and score of the targeted bound.
#[derive(Debug, Clone)]
pub struct FluxChoice {
    pub flux: FluxField,
    pub inputs: BoundInputs,
    pub score: f64,
    /// Gap-weight ratio of the winning minimizer; `None` for the average.
    pub ratio: Option<f64>,
}

/// Minimizes the targeted bound over the averaged flux and the surrogate
/// minimizers for every ratio in `ratios`, then (for [`FluxTarget::Sum`])
/// twice more with the ratio `C_F ‖r‖ / ‖y - ∇v‖` of the best flux so far.
/// `score` evaluates the targeted bound; the result never scores above
/// the average.
pub fn flux_minimize(
    moments: &ResidualMoments,
    mesh: &SpaceMesh,
    average: &FluxField,
    target: &FluxTarget,
    ratios: &[f64],
    score: &dyn Fn(&BoundInputs) -> Result<f64>,
) -> Result<FluxChoice> {
    let inputs = BoundInputs::from_moments(moments, average, mesh)?;
    let mut best = FluxChoice {
        score: score(&inputs)?,
        flux: average.clone(),
        inputs,
        ratio: None,
    };
    let base = match target {
        FluxTarget::Sum => FluxWeights::uniform(
            moments.slab_count(),
            mesh.cell_count(),
            1.0,
            moments.cf * moments.cf,
        ),
        FluxTarget::Quadratic(w) => w.clone(),
    };
    let try_ratio = |ratio: f64, best: &mut FluxChoice| -> Result<()> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Ok(());
        }
        let y = flux_minimize_weighted(moments, mesh, &base.with_gap_ratio(ratio))?;
        let inputs = BoundInputs::from_moments(moments, &y, mesh)?;
        let s = score(&inputs)?;
        if s < best.score {
            *best = FluxChoice {
                flux: y,
                inputs,
                score: s,
                ratio: Some(ratio),
            };
        }
        Ok(())
    };
    for &r in ratios {
        try_ratio(r, &mut best)?;
    }
    if matches!(target, FluxTarget::Sum) {
        for _ in 0..2 {
            let n = best.inputs.slab_count();
            let gap = best.inputs.gap2_total(n).sqrt();
            let res = moments.cf * best.inputs.r2(n).sqrt();
            if gap > 0.0 && res > 0.0 {
                try_ratio(res / gap, &mut best)?;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::Constant;
    use crate::fields::interpolate_field;
    use crate::majorant::majorant_div0;
    use crate::mesh::TimePartition;
    use crate::problem::{ConvectionField, Domain, ProblemSpec};
    use crate::quadrature::QuadOrder;
    use crate::solver::{manufactured, solve, SolveConfig};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn average_of_sine_is_second_order() {
        let mut errs = Vec::new();
        for n in [21, 41] {
            let mesh = SpaceMesh::new(Domain::unit(1), &[n]).unwrap();
            let part = TimePartition::uniform(1.0, 1).unwrap();
            let f = crate::closed_form::FnScalar::new("sin", |x: &[f64], _t: f64| (PI * x[0]).sin());
            let v = interpolate_field(&f, &mesh, &part, false).unwrap();
            let y = flux_average(&v, &mesh).unwrap();
            let err = (1..n - 1)
                .map(|i| (y.slab_start(0)[i] - PI * (PI * mesh.coord(i)[0]).cos()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 1.9, "rate {rate}");
    }

    #[test]
    fn average_of_linear_and_zero() {
        let mesh = SpaceMesh::new(Domain::unit(2), &[5, 4]).unwrap();
        let part = TimePartition::uniform(1.0, 2).unwrap();
        let lin = crate::closed_form::FnScalar::new("lin", |x: &[f64], _t: f64| 2.0 * x[0] - x[1]);
        let v = interpolate_field(&lin, &mesh, &part, false).unwrap();
        let y = flux_average(&v, &mesh).unwrap();
        for n in 0..mesh.node_count() {
            assert!((y.slab_end(1)[2 * n] - 2.0).abs() < 1e-12);
            assert!((y.slab_end(1)[2 * n + 1] + 1.0).abs() < 1e-12);
        }
        let z = flux_average(&SpaceTimeField::zeros(part, mesh.node_count()), &mesh).unwrap();
        assert!(z.slab_start(0).iter().all(|&x| x == 0.0));
    }

    fn sep_setup() -> (ProblemSpec, SpaceMesh, SpaceTimeField, ResidualMoments) {
        let (spec, _) = manufactured("sep_2d").unwrap();
        let approx = solve(&spec, &SolveConfig::new(vec![7, 6], 3)).unwrap();
        let m = ResidualMoments::compute(&approx.field, &spec, &approx.mesh, QuadOrder::default()).unwrap();
        (spec, approx.mesh, approx.field, m)
    }

    #[test]
    fn minimizer_zeroes_the_gradient() {
        let (_, mesh, _, m) = sep_setup();
        let w = FluxWeights::uniform(3, mesh.cell_count(), 0.7, m.cf * m.cf);
        let y = flux_minimize_weighted(&m, &mesh, &w).unwrap();
        let g = flux_gradient(&m, &mesh, &w, &y).unwrap();
        let q = flux_objective(&m, &mesh, &w, &y).unwrap();
        let norm: f64 = g.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm < 1e-10 * q.max(1.0), "{norm}");
    }

    #[test]
    fn minimize_never_loses_to_average() {
        let (_, mesh, v, m) = sep_setup();
        let avg = flux_average(&v, &mesh).unwrap();
        let score = |inp: &BoundInputs| Ok(majorant_div0(inp)?.value);
        let best = flux_minimize(&m, &mesh, &avg, &FluxTarget::Sum, &DEFAULT_RATIOS, &score).unwrap();
        let base = majorant_div0(&BoundInputs::from_moments(&m, &avg, &mesh).unwrap()).unwrap().value;
        assert!(best.score <= base);
        assert!(best.ratio.is_some());
    }

    #[test]
    fn zero_data_gives_zero_flux() {
        let spec = ProblemSpec::homogeneous(Domain::unit(1), 1.0, ConvectionField::Constant(vec![1.0]))
            .with_source(Arc::new(Constant(0.0)));
        let mesh = SpaceMesh::new(Domain::unit(1), &[6]).unwrap();
        let v = SpaceTimeField::zeros(TimePartition::uniform(1.0, 2).unwrap(), 6);
        let m = ResidualMoments::compute(&v, &spec, &mesh, QuadOrder::default()).unwrap();
        let y = flux_minimize_weighted(&m, &mesh, &FluxWeights::uniform(2, 5, 1.0, 1.0)).unwrap();
        assert!(y.slab_start(0).iter().chain(y.slab_end(1)).all(|&x| x.abs() < 1e-15));
    }
}
