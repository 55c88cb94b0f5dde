//! Implicit Euler P1 solver and the manufactured-solution catalog.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::closed_form::{
    ExactSolution, InitialTrace, ManufacturedSource, SharedSolution, SineDecay,
};
use crate::error::{Error, Result};
use crate::fields::{error_norms, interpolate_h10, Level, NormBundle, SpaceTimeField};
use crate::linalg::{BandLu, BandMatrix};
use crate::mesh::{QuadTable, SpaceMesh, TimePartition};
use crate::problem::{ConvectionClass, ConvectionField, Domain, ProblemSpec};
use crate::quadrature::QuadOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvectionDisc {
    #[default]
    Centered,
    /// Artificial diffusion `|a_i| h_i / 2` per axis with a lumped mass;
    /// monotone in 1-d.
    Upwind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Nodes per axis, boundary included.
    pub nodes: Vec<usize>,
    pub steps: usize,
    pub convection: ConvectionDisc,
    pub order: QuadOrder,
}

impl SolveConfig {
    pub fn new(nodes: Vec<usize>, steps: usize) -> Self {
        Self {
            nodes,
            steps,
            convection: ConvectionDisc::Centered,
            order: QuadOrder::default(),
        }
    }

    pub fn with_convection(mut self, disc: ConvectionDisc) -> Self {
        self.convection = disc;
        self
    }

    pub fn mesh(&self, domain: &Domain) -> Result<SpaceMesh> {
        SpaceMesh::new(domain.clone(), &self.nodes)
    }

    pub fn partition(&self, horizon: f64) -> Result<TimePartition> {
        if self.steps == 0 {
            return Err(Error::InvalidPartition("step count must be at least 1".into()));
        }
        TimePartition::uniform(horizon, self.steps)
    }
}

/// A discrete field with the mesh it is defined on.
#[derive(Debug, Clone)]
pub struct Approximation {
    pub mesh: SpaceMesh,
    pub field: SpaceTimeField,
}

/// Factored implicit Euler step on one mesh for one step size.
struct Stepper {
    dt: f64,
    table: QuadTable,
    mass: BandMatrix,
    lu: BandLu,
}

fn bandwidth(mesh: &SpaceMesh) -> usize {
    if mesh.dim() == 1 {
        1
    } else {
        mesh.nodes_per_axis()[0] + 1
    }
}

impl Stepper {
    fn new(spec: &ProblemSpec, mesh: &SpaceMesh, dt: f64, disc: ConvectionDisc, order: QuadOrder) -> Result<Self> {
        let n = mesh.node_count();
        let bw = bandwidth(mesh);
        let nv = mesh.verts_per_cell();
        let dim = mesh.dim();
        let table = mesh.quad_table(order);
        let mut mass = BandMatrix::zeros(n, bw, bw);
        let mut sys = BandMatrix::zeros(n, bw, bw);
        let lumped = disc == ConvectionDisc::Upwind;
        for (c, cell) in mesh.cells().iter().enumerate() {
            let ctr = cell.centroid(dim);
            let a_ctr = spec.convection.eval(&ctr[..dim]);
            let mut diff = [1.0, 1.0];
            if lumped {
                for (i, h) in mesh.spacing().iter().enumerate() {
                    diff[i] += 0.5 * a_ctr[i].abs() * h;
                }
            }
            for i in 0..nv {
                let gi = cell.grads[i];
                for j in 0..nv {
                    let gj = cell.grads[j];
                    let m = if lumped {
                        if i == j {
                            cell.measure / nv as f64
                        } else {
                            0.0
                        }
                    } else {
                        cell.measure * if i == j { 2.0 } else { 1.0 } / (nv * (nv + 1)) as f64
                    };
                    let k = cell.measure * (diff[0] * gi[0] * gj[0] + diff[1] * gi[1] * gj[1]);
                    let conv: f64 = table
                        .cell(c)
                        .iter()
                        .map(|q| {
                            let a = spec.convection.eval(&q.x[..dim]);
                            q.w * (a[0] * gj[0] + a[1] * gj[1]) * q.bary[i]
                        })
                        .sum();
                    let (ni, nj) = (cell.nodes[i], cell.nodes[j]);
                    mass.add(ni, nj, m);
                    sys.add(ni, nj, m / dt + k + conv);
                }
            }
        }
        for b in mesh.boundary_nodes() {
            sys.pin(b);
        }
        let lu = sys.factor()?;
        Ok(Self { dt, table, mass, lu })
    }

    fn step(&self, spec: &ProblemSpec, mesh: &SpaceMesh, prev: &[f64], t_next: f64) -> Vec<f64> {
        let dim = mesh.dim();
        let mut rhs: Vec<f64> = self.mass.matvec(prev).iter().map(|v| v / self.dt).collect();
        for (c, cell) in mesh.cells().iter().enumerate() {
            for q in self.table.cell(c) {
                let f = spec.source.value(&q.x[..dim], t_next);
                for i in 0..dim + 1 {
                    rhs[cell.nodes[i]] += q.w * f * q.bary[i];
                }
            }
        }
        for b in mesh.boundary_nodes() {
            rhs[b] = 0.0;
        }
        self.lu.solve_in_place(&mut rhs);
        rhs
    }
}

/// Implicit Euler on a uniform grid; the initial level is the interpolated
/// `φ` with zero boundary values.
pub fn solve(spec: &ProblemSpec, cfg: &SolveConfig) -> Result<Approximation> {
    let mesh = cfg.mesh(&spec.domain)?;
    let part = cfg.partition(spec.horizon)?;
    spec.classify()?;
    let field = {
        let stepper = Stepper::new(spec, &mesh, part.slab_len(0), cfg.convection, cfg.order)?;
        let mut levels = Vec::with_capacity(part.level_count());
        let mut cur = interpolate_h10(spec.initial.as_ref(), &mesh, 0.0);
        levels.push(Level::Single(cur.clone()));
        for k in 1..part.level_count() {
            cur = stepper.step(spec, &mesh, &cur, part.time(k));
            levels.push(Level::Single(cur.clone()));
        }
        SpaceTimeField::new(part, mesh.node_count(), levels)?
    };
    Ok(Approximation { mesh, field })
}

/// Nodal values at `T` only; memory stays independent of the step count.
pub fn solve_terminal(spec: &ProblemSpec, cfg: &SolveConfig) -> Result<(SpaceMesh, Vec<f64>)> {
    let mesh = cfg.mesh(&spec.domain)?;
    let part = cfg.partition(spec.horizon)?;
    spec.classify()?;
    let stepper = Stepper::new(spec, &mesh, part.slab_len(0), cfg.convection, cfg.order)?;
    let mut cur = interpolate_h10(spec.initial.as_ref(), &mesh, 0.0);
    for k in 1..part.level_count() {
        cur = stepper.step(spec, &mesh, &cur, part.time(k));
    }
    Ok((mesh, cur))
}

/// How the solution is altered at an interior level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum JumpKind {
    /// Continue on a coarser nested grid, restarting from the nodal
    /// interpolant of the left limit.
    RestartInterp { nodes: Vec<usize> },
    /// Add `kappa` times the sine bump to the left limit.
    Inject { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    pub t: f64,
    #[serde(flatten)]
    pub kind: JumpKind,
}

/// Whether every node of `coarse` is a node of `fine` (nested grids).
fn nested(coarse: &SpaceMesh, fine: &SpaceMesh) -> bool {
    coarse
        .nodes_per_axis()
        .iter()
        .zip(fine.nodes_per_axis())
        .all(|(c, f)| (f - 1) % (c - 1) == 0)
}

/// Implicit Euler with jumps at interior levels. The result lives on the
/// grid of `cfg`; restarts on nested coarser grids are prolonged onto it
/// exactly.
pub fn solve_with_jumps(spec: &ProblemSpec, cfg: &SolveConfig, jumps: &[JumpSpec]) -> Result<Approximation> {
    let fine = cfg.mesh(&spec.domain)?;
    let part = cfg.partition(spec.horizon)?;
    spec.classify()?;
    let tol = 1e-9 * part.max_slab_len();
    let mut at_level: Vec<Option<&JumpKind>> = vec![None; part.level_count()];
    for j in jumps {
        let k = part
            .level_at(j.t, tol)
            .ok_or_else(|| Error::InvalidJump(format!("t = {} is not a time level", j.t)))?;
        if k == 0 || k + 1 == part.level_count() {
            return Err(Error::InvalidJump(format!("t = {} is not interior", j.t)));
        }
        if at_level[k].is_some() {
            return Err(Error::InvalidJump(format!("two jumps at t = {}", j.t)));
        }
        at_level[k] = Some(&j.kind);
    }

    let dt = part.slab_len(0);
    let mut work = fine.clone();
    let mut work_vals = interpolate_h10(spec.initial.as_ref(), &fine, 0.0);
    let mut levels = vec![Level::Single(work_vals.clone())];
    let mut stepper = Stepper::new(spec, &fine, dt, cfg.convection, cfg.order)?;
    for k in 1..part.level_count() {
        work_vals = stepper.step(spec, &work, &work_vals, part.time(k));
        let left = prolong(&work, &work_vals, &fine);
        match at_level[k] {
            None => levels.push(Level::Single(left)),
            Some(JumpKind::Inject { kappa }) => {
                let bump = interpolate_h10(&SineDecay::bump(&spec.domain), &work, 0.0);
                for (v, b) in work_vals.iter_mut().zip(&bump) {
                    *v += kappa * b;
                }
                let right = prolong(&work, &work_vals, &fine);
                levels.push(Level::Jump { left, right });
            }
            Some(JumpKind::RestartInterp { nodes }) => {
                let coarse = SpaceMesh::new(spec.domain.clone(), nodes)?;
                if !nested(&coarse, &fine) {
                    return Err(Error::InvalidJump(format!(
                        "restart grid {:?} is not nested in {:?}",
                        nodes,
                        fine.nodes_per_axis()
                    )));
                }
                work_vals = sample(&fine, &left, &coarse);
                let right = prolong(&coarse, &work_vals, &fine);
                stepper = Stepper::new(spec, &coarse, dt, cfg.convection, cfg.order)?;
                work = coarse;
                levels.push(Level::Jump { left, right });
            }
        }
    }
    let field = SpaceTimeField::new(part, fine.node_count(), levels)?;
    Ok(Approximation { mesh: fine, field })
}

/// Values of a P1 function on `from` at the nodes of `to`.
fn sample(from: &SpaceMesh, vals: &[f64], to: &SpaceMesh) -> Vec<f64> {
    let dim = to.dim();
    (0..to.node_count())
        .map(|n| if to.is_boundary(n) { 0.0 } else { from.evaluate(vals, &to.coord(n)[..dim]) })
        .collect()
}

fn prolong(from: &SpaceMesh, vals: &[f64], to: &SpaceMesh) -> Vec<f64> {
    if from.nodes_per_axis() == to.nodes_per_axis() {
        vals.to_vec()
    } else {
        sample(from, vals, to)
    }
}

/// A closed-form solution with the data it induces.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub exact: SharedSolution,
}

impl ManufacturedCase {
    pub fn exact(&self) -> &dyn ExactSolution {
        self.exact.as_ref()
    }
}

pub const CATALOG: [&str; 3] = ["sin_decay_1d", "sin_decay_1d_neg", "sep_2d"];

/// Catalog entries: `u = Π sin(π x_i) e^{-t}` with `T = 1` and
/// * `sin_decay_1d`: `(0,1)`, `a = 1`;
/// * `sin_decay_1d_neg`: `(0,1)`, `a(x) = -x`;
/// * `sep_2d`: `(0,1)²`, `a = (1, 0.5)`.
pub fn manufactured(name: &str) -> Result<(ProblemSpec, ManufacturedCase)> {
    let (dim, conv) = match name {
        "sin_decay_1d" => (1, ConvectionField::Constant(vec![1.0])),
        "sin_decay_1d_neg" => (1, ConvectionField::Linear(vec![vec![-1.0]])),
        "sep_2d" => (2, ConvectionField::Constant(vec![1.0, 0.5])),
        _ => return Err(Error::UnknownCatalogEntry(name.to_string())),
    };
    Ok(manufactured_on(name, Domain::unit(dim), conv))
}

/// A sine-decay manufactured case on an arbitrary box and convection.
pub fn manufactured_on(name: &str, domain: Domain, convection: ConvectionField) -> (ProblemSpec, ManufacturedCase) {
    let exact: SharedSolution = Arc::new(SineDecay::new(&domain, 1.0));
    let spec = ProblemSpec::homogeneous(domain, 1.0, convection.clone())
        .with_source(Arc::new(ManufacturedSource::new(exact.clone(), convection)))
        .with_initial(Arc::new(InitialTrace(exact.clone())));
    (
        spec,
        ManufacturedCase {
            name: name.to_string(),
            exact,
        },
    )
}

/// Norms of `u - v` with the closed-form `u`.
pub fn true_error(
    v: &SpaceTimeField,
    case: &ManufacturedCase,
    mesh: &SpaceMesh,
    class: &ConvectionClass,
) -> Result<NormBundle> {
    error_norms(case.exact(), v, mesh, class, QuadOrder::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::Constant;
    use crate::fields::l2_norm;
    use std::f64::consts::PI;

    #[test]
    fn zero_data_gives_zero_solution() {
        let spec = ProblemSpec::homogeneous(Domain::unit(2), 1.0, ConvectionField::Constant(vec![1.0, 2.0]));
        let sol = solve(&spec, &SolveConfig::new(vec![6, 5], 4)).unwrap();
        assert!(sol.field.levels().iter().all(|l| l.left().iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn catalog_sources_match_hand_formulas() {
        let (spec, case) = manufactured("sin_decay_1d_neg").unwrap();
        for &(x, t) in &[(0.3f64, 0.2f64), (0.71, 0.9)] {
            let f: f64 = (PI * PI - 1.0) * (PI * x).sin() * (-t).exp()
                - x * PI * (PI * x).cos() * (-t).exp();
            assert!((spec.source.value(&[x], t) - f).abs() < 1e-13);
            assert_eq!(spec.initial.value(&[x], 5.0), case.exact.value(&[x], 0.0));
        }
        assert!(matches!(manufactured("nope"), Err(Error::UnknownCatalogEntry(_))));
        let (s2, _) = manufactured("sep_2d").unwrap();
        assert!(s2.classify().unwrap().is_div_zero());
    }

    #[test]
    fn true_error_of_zero_field() {
        let (spec, case) = manufactured("sin_decay_1d").unwrap();
        let mesh = SpaceMesh::new(spec.domain.clone(), &[81]).unwrap();
        let part = TimePartition::uniform(1.0, 20).unwrap();
        let z = SpaceTimeField::zeros(part, mesh.node_count());
        let n = true_error(&z, &case, &mesh, &ConvectionClass::DivZero).unwrap();
        let expected = PI * PI / 2.0 * (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((n.grad_qt.powi(2) - expected).abs() < 1e-8 * expected);
    }

    #[test]
    fn solution_is_deterministic_and_stable() {
        let spec = ProblemSpec::homogeneous(Domain::unit(1), 1.0, ConvectionField::Constant(vec![3.0]))
            .with_initial(Arc::new(SineDecay::bump(&Domain::unit(1))));
        let cfg = SolveConfig::new(vec![31], 25);
        let a = solve(&spec, &cfg).unwrap();
        let b = solve(&spec, &cfg).unwrap();
        assert_eq!(a.field, b.field);
        let norms: Vec<f64> = a.field.levels().iter().map(|l| l2_norm(l.left(), &a.mesh)).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
    }

    #[test]
    fn upwind_keeps_nonnegative_solutions() {
        let spec = ProblemSpec::homogeneous(Domain::unit(1), 0.5, ConvectionField::Constant(vec![-40.0]))
            .with_source(Arc::new(Constant(1.0)))
            .with_initial(Arc::new(SineDecay::bump(&Domain::unit(1))));
        let cfg = SolveConfig::new(vec![21], 10).with_convection(ConvectionDisc::Upwind);
        let sol = solve(&spec, &cfg).unwrap();
        assert!(sol.field.levels().iter().flat_map(|l| l.left()).all(|v| *v >= -1e-12));
    }

    #[test]
    fn restart_and_injection_jumps() {
        let (spec, _) = manufactured("sin_decay_1d").unwrap();
        let cfg = SolveConfig::new(vec![41], 10);
        let plain = solve(&spec, &cfg).unwrap();
        let zero = solve_with_jumps(&spec, &cfg, &[JumpSpec { t: 0.5, kind: JumpKind::Inject { kappa: 0.0 } }]).unwrap();
        assert_eq!(zero.field.level(5).left(), plain.field.level(5).left());
        assert_eq!(zero.field.terminal(), plain.field.terminal());

        let rs = solve_with_jumps(
            &spec,
            &cfg,
            &[JumpSpec {
                t: 0.5,
                kind: JumpKind::RestartInterp { nodes: vec![11] },
            }],
        )
        .unwrap();
        let lvl = rs.field.level(5);
        assert!(lvl.is_jump());
        assert_eq!(lvl.left(), plain.field.level(5).left());
        // right limit is P1 on the coarse grid: agrees with left at coarse nodes
        for n in (0..41).step_by(4) {
            assert!((lvl.right()[n] - lvl.left()[n]).abs() < 1e-15);
        }
        assert!(lvl.left().iter().zip(lvl.right()).any(|(a, b)| (a - b).abs() > 1e-6));

        let bad = solve_with_jumps(&spec, &cfg, &[JumpSpec { t: 0.55, kind: JumpKind::Inject { kappa: 1.0 } }]);
        assert!(bad.is_err());
        let bad = solve_with_jumps(
            &spec,
            &cfg,
            &[JumpSpec {
                t: 0.5,
                kind: JumpKind::RestartInterp { nodes: vec![12] },
            }],
        );
        assert!(bad.is_err());
    }
}
