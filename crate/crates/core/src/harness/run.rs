use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::config::{CaseKind, CertifySection, DataSpec, FluxStrategy, JumpMethod, RunConfig};
use super::{AtStage, HarnessError, HarnessResult, Stage};
use crate::closed_form::{Constant, SharedFunction};
use crate::fields::{read_field, write_field, NormBundle, SpaceTimeField, TabulatedField};
use crate::flux_recon::{flux_average, flux_minimize, FluxChoice, FluxTarget, FluxWeights, DEFAULT_RATIOS};
use crate::majorant::{
    default_greeks, optimize_greeks, BoundInputs, BoundKind, CertifiedBound, Extraction, GreekParams, GreeksMode,
    ResidualMoments,
};
use crate::mesh::SpaceMesh;
use crate::nonconforming::{bound_method1, bound_method2_from_inputs, project_conforming, JumpRecord};
use crate::problem::{validate_problem, ConvectionClass, Domain, ProblemSpec};
use crate::quadrature::QuadOrder;
use crate::solver::{manufactured, manufactured_on, solve_with_jumps, Approximation, ManufacturedCase, SolveConfig};

#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub case: Option<ManufacturedCase>,
}

fn load_data(cfg: &RunConfig, data: &Option<DataSpec>) -> HarnessResult<SharedFunction> {
    Ok(match data {
        None => Arc::new(Constant(0.0)),
        Some(DataSpec::Constant(c)) => Arc::new(Constant(*c)),
        Some(DataSpec::File(p)) => {
            let file = read_field(&cfg.resolve(p)).at(Stage::Problem)?;
            Arc::new(TabulatedField::from_file(file).at(Stage::Problem)?)
        }
    })
}

pub fn build_problem(cfg: &RunConfig) -> HarnessResult<Problem> {
    let p = &cfg.problem;
    let bad = |m: String| HarnessError::new(Stage::Problem, m);
    let domain_from = |dim: usize| -> HarnessResult<Option<Domain>> {
        match (&p.extents, &p.origin) {
            (None, None) => Ok(None),
            (ext, origin) => {
                let ext = ext.clone().unwrap_or_else(|| vec![1.0; dim]);
                let origin = origin.clone().unwrap_or_else(|| vec![0.0; ext.len()]);
                Ok(Some(Domain::new(ext, origin).at(Stage::Problem)?))
            }
        }
    };
    let (mut spec, case) = if let Some(name) = &p.manufactured {
        if p.source.is_some() || p.initial.is_some() {
            return Err(bad(format!("`source` and `initial` are induced by the manufactured case `{name}`")));
        }
        let (base, _) = manufactured(name).at(Stage::Problem)?;
        let domain = domain_from(base.domain.dim())?.unwrap_or(base.domain.clone());
        let conv = p.convection.clone().unwrap_or(base.convection.clone());
        let (spec, case) = manufactured_on(name, domain, conv);
        (spec, Some(case))
    } else {
        let dim = p.dim.or(p.extents.as_ref().map(Vec::len)).unwrap_or(1);
        let domain = domain_from(dim)?.unwrap_or_else(|| Domain::unit(dim));
        let conv = p
            .convection
            .clone()
            .ok_or_else(|| bad("`convection` is required without a manufactured case".into()))?;
        let spec = ProblemSpec::homogeneous(domain, 1.0, conv)
            .with_source(load_data(cfg, &p.source)?)
            .with_initial(load_data(cfg, &p.initial)?);
        (spec, None)
    };
    if let Some(t) = p.horizon {
        spec.horizon = t;
    }
    if let Some(d) = p.dim {
        if d != spec.domain.dim() {
            return Err(bad(format!("dim = {d} but the box has dimension {}", spec.domain.dim())));
        }
    }
    let report = validate_problem(&spec);
    if let Some(v) = report.violations.first() {
        return Err(bad(format!("{} ({} violation(s))", v.message, report.violations.len())));
    }
    Ok(Problem { spec, case })
}

fn solve_config(cfg: &RunConfig, dim: usize) -> SolveConfig {
    let mut nodes = vec![cfg.solve.nx];
    if dim == 2 {
        nodes.push(cfg.solve.ny.unwrap_or(cfg.solve.nx));
    }
    SolveConfig::new(nodes, cfg.solve.nt).with_convection(cfg.solve.convection_disc)
}

/// The approximation `v`: a loaded field file, or an implicit Euler solve
/// with the configured jumps.
pub fn approximation(cfg: &RunConfig, problem: &Problem) -> HarnessResult<Approximation> {
    let spec = &problem.spec;
    if let Some(path) = &cfg.solve.load {
        let file = read_field(&cfg.resolve(path)).at(Stage::Load)?;
        if file.mesh.domain() != &spec.domain {
            return Err(HarnessError::new(Stage::Load, "field file box differs from the problem box"));
        }
        let horizon = file.field.partition().horizon();
        if (horizon - spec.horizon).abs() > 1e-12 * spec.horizon {
            return Err(HarnessError::new(
                Stage::Load,
                format!("field ends at t = {horizon}, problem at T = {}", spec.horizon),
            ));
        }
        file.field.check_boundary(&file.mesh, 1e-12).at(Stage::Load)?;
        return Ok(Approximation {
            mesh: file.mesh,
            field: file.field,
        });
    }
    let sc = solve_config(cfg, spec.domain.dim());
    solve_with_jumps(spec, &sc, &cfg.certify.jumps).at(Stage::Solve)
}

pub fn solve_to_file(cfg: &RunConfig, out: &Path) -> HarnessResult<()> {
    let problem = build_problem(cfg)?;
    let approx = approximation(cfg, &problem)?;
    write_field(out, &approx.mesh, &approx.field).at(Stage::Output)
}

/// Quadratic surrogate weights of a δ bound with the given parameters:
/// `1/(2β)` on the gap and `λ²/(4αδ²) + C_F²(1 - λ)²/(2γ)` per cell.
pub fn flux_weights(params: &GreekParams, delta_sq: f64, cf: f64) -> FluxWeights {
    let slabs = params.slab_count();
    FluxWeights {
        gap: params.beta.iter().map(|b| 0.5 / b).collect(),
        residual: (0..slabs)
            .map(|k| {
                let (a, g) = (params.alpha[k], params.gamma[k]);
                params.lambda[k]
                    .iter()
                    .map(|&l| {
                        let free = if g > 0.0 { cf * cf * (1.0 - l) * (1.0 - l) / (2.0 * g) } else { 0.0 };
                        l * l / (4.0 * a * delta_sq) + free
                    })
                    .collect()
            })
            .collect(),
    }
}

/// Flux for `v` under the configured strategy, scored by the configured
/// bound (jump penalties included).
pub fn select_flux(
    v: &SpaceTimeField,
    mesh: &SpaceMesh,
    moments: &ResidualMoments,
    cert: &CertifySection,
) -> HarnessResult<FluxChoice> {
    let average = flux_average(v, mesh).at(Stage::Flux)?;
    let score = |inp: &BoundInputs| {
        bound_method2_from_inputs(v, mesh, inp, cert.extraction, cert.greeks, cert.lambda).map(|(b, _)| b.value)
    };
    if cert.flux == FluxStrategy::Avg {
        let inputs = BoundInputs::from_moments(moments, &average, mesh).at(Stage::Flux)?;
        let s = score(&inputs).at(Stage::Bound)?;
        return Ok(FluxChoice {
            flux: average,
            inputs,
            score: s,
            ratio: None,
        });
    }
    let ratios = cert.flux_weight_grid.clone().unwrap_or_else(|| DEFAULT_RATIOS.to_vec());
    let cells = mesh.cell_count();
    let slabs = moments.slab_count();
    let cf = moments.cf;
    let quadratic_target = |params: &GreekParams| {
        FluxTarget::Quadratic(flux_weights(params, moments.class.delta_sq(), cf))
    };
    let target = match (moments.class, cert.extraction) {
        (_, Extraction::Combined) => FluxTarget::Sum,
        (ConvectionClass::DivZero, _) => FluxTarget::Quadratic(FluxWeights::uniform(slabs, cells, 1.0, cf * cf)),
        _ => {
            let inp = BoundInputs::from_moments(moments, &average, mesh).at(Stage::Flux)?;
            quadratic_target(&default_greeks(&inp, cert.extraction, cert.lambda).at(Stage::Flux)?)
        }
    };
    let mut best = flux_minimize(moments, mesh, &average, &target, &ratios, &score).at(Stage::Flux)?;
    if cert.greeks == GreeksMode::Optimize && !moments.class.is_div_zero() && cert.extraction != Extraction::Combined {
        let params = optimize_greeks(&best.inputs, cert.extraction, cert.lambda).at(Stage::Flux)?;
        let again = flux_minimize(moments, mesh, &average, &quadratic_target(&params), &[1.0], &score).at(Stage::Flux)?;
        if again.score < best.score {
            best = again;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxInfo {
    pub strategy: FluxStrategy,
    /// Gap-weight ratio of the selected minimizer; absent for the average.
    pub ratio: Option<f64>,
    /// The bound with the averaged flux, for comparison.
    pub average_score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certification {
    pub bound: CertifiedBound,
    /// Both jump bounds, when `v` has jumps.
    pub method1: Option<CertifiedBound>,
    pub method2: Option<CertifiedBound>,
    pub jumps: Vec<JumpRecord>,
    pub flux: FluxInfo,
    pub true_error: Option<NormBundle>,
    /// True error in the measure the bound certifies.
    pub certified_error: Option<f64>,
    pub efficiency_index: Option<f64>,
    /// `value ≥ certified_error (1 - 1e-9)`.
    pub guarantee_holds: Option<bool>,
}

/// The true error in the measure `bound` certifies. The general δ bound
/// certifies `c₁‖∇e‖² + c₂‖δe‖² + ½‖e(·,T)‖²` with its slab-minimal
/// coefficients.
pub fn measured_error(bound: &CertifiedBound, errors: &NormBundle) -> f64 {
    match (bound.norm, bound.coefficients) {
        (Some(norm), _) => errors.get(norm),
        (None, Some([c1, c2, c3])) => {
            c1 * errors.grad_qt.powi(2) + c2 * errors.delta_qt.powi(2) + c3 * errors.slice_t.powi(2)
        }
        (None, None) => f64::NAN,
    }
}

fn check_case(cert: &CertifySection, class: ConvectionClass) -> HarnessResult<()> {
    match (cert.case, class) {
        (Some(CaseKind::Delta), ConvectionClass::DivZero) => Err(HarnessError::core(
            Stage::Problem,
            crate::Error::ClassMismatch("case = delta but div a = 0".into()),
        )),
        (Some(CaseKind::Div0), ConvectionClass::StrictNegative { .. }) => Err(HarnessError::core(
            Stage::Problem,
            crate::Error::ClassMismatch("case = div0 but div a < 0".into()),
        )),
        _ => Ok(()),
    }
}

/// Flux, bound(s) and true error for a given approximation.
pub fn certify_approximation(
    cert: &CertifySection,
    problem: &Problem,
    approx: &Approximation,
    order: QuadOrder,
) -> HarnessResult<Certification> {
    let spec = &problem.spec;
    let class = spec.classify().at(Stage::Problem)?;
    check_case(cert, class)?;
    let (mesh, v) = (&approx.mesh, &approx.field);
    let jumpy = v.has_jumps();
    // the projection bound reconstructs its flux from P v̂
    let projected;
    let flux_field = if jumpy && cert.method == JumpMethod::Projection {
        projected = project_conforming(v);
        &projected
    } else {
        v
    };
    let moments = ResidualMoments::compute(flux_field, spec, mesh, order).at(Stage::Bound)?;
    let choice = select_flux(flux_field, mesh, &moments, cert)?;
    let average_score = {
        let avg = flux_average(flux_field, mesh).at(Stage::Flux)?;
        let inp = BoundInputs::from_moments(&moments, &avg, mesh).at(Stage::Flux)?;
        bound_method2_from_inputs(flux_field, mesh, &inp, cert.extraction, cert.greeks, cert.lambda)
            .at(Stage::Bound)?
            .0
            .value
    };

    let (mut method1, mut method2, mut jumps) = (None, None, Vec::new());
    let bound = if jumpy {
        let full = ResidualMoments::compute(v, spec, mesh, order).at(Stage::Bound)?;
        let inputs = BoundInputs::from_moments(&full, &choice.flux, mesh).at(Stage::Bound)?;
        let (b2, pen) = bound_method2_from_inputs(v, mesh, &inputs, cert.extraction, cert.greeks, cert.lambda)
            .at(Stage::Bound)?;
        jumps = pen.records;
        let b1 = if cert.extraction == Extraction::General {
            None
        } else {
            Some(
                bound_method1(v, &choice.flux, spec, mesh, order, cert.extraction, cert.greeks, cert.lambda)
                    .at(Stage::Bound)?,
            )
        };
        method1 = b1.clone();
        method2 = Some(b2.clone());
        match cert.method {
            JumpMethod::Penalty => b2,
            JumpMethod::Projection => b1.ok_or_else(|| {
                HarnessError::new(Stage::Bound, "the projection bound needs a norm extraction")
            })?,
        }
    } else {
        bound_method2_from_inputs(v, mesh, &choice.inputs, cert.extraction, cert.greeks, cert.lambda)
            .at(Stage::Bound)?
            .0
    };

    let true_error = match &problem.case {
        Some(case) => Some(crate::solver::true_error(v, case, mesh, &class).at(Stage::TrueError)?),
        None => None,
    };
    let certified_error = true_error.as_ref().map(|e| measured_error(&bound, e));
    let efficiency_index = certified_error.filter(|e| *e > 0.0).map(|e| bound.value / e);
    let guarantee_holds = certified_error.map(|e| bound.value >= e * (1.0 - 1e-9));
    Ok(Certification {
        bound,
        method1,
        method2,
        jumps,
        flux: FluxInfo {
            strategy: cert.flux,
            ratio: choice.ratio,
            average_score,
        },
        true_error,
        certified_error,
        efficiency_index,
        guarantee_holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub dim: usize,
    pub nodes: Vec<usize>,
    pub cells: usize,
    pub h_max: f64,
    pub slabs: usize,
    pub dt_max: f64,
}

impl MeshInfo {
    pub fn of(mesh: &SpaceMesh, v: &SpaceTimeField) -> Self {
        Self {
            dim: mesh.dim(),
            nodes: mesh.nodes_per_axis(),
            cells: mesh.cell_count(),
            h_max: mesh.h_max(),
            slabs: v.slab_count(),
            dt_max: v.partition().max_slab_len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub mesh: MeshInfo,
    pub class: ConvectionClass,
    pub friedrichs: f64,
    pub bound_kind: BoundKind,
    #[serde(flatten)]
    pub certification: Certification,
    pub wall_time_s: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> HarnessResult<()> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| HarnessError::new(Stage::Output, format!("{}: {e}", path.display())))
    }
}

/// Solve (or load) `v`, reconstruct the flux, bound the error and compare
/// with the true error when the problem is manufactured.
pub fn certify(cfg: &RunConfig) -> HarnessResult<Report> {
    let start = Instant::now();
    let problem = build_problem(cfg)?;
    let class = problem.spec.classify().at(Stage::Problem)?;
    check_case(&cfg.certify, class)?;
    let approx = approximation(cfg, &problem)?;
    let certification = certify_approximation(&cfg.certify, &problem, &approx, QuadOrder::default())?;
    Ok(Report {
        tool: "majorant",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        mesh: MeshInfo::of(&approx.mesh, &approx.field),
        class,
        friedrichs: problem.spec.friedrichs().at(Stage::Problem)?,
        bound_kind: certification.bound.kind,
        certification,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
