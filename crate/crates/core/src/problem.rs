//! The continuous problem `u_t - Δu + a·∇u = f` on a box with homogeneous
//! Dirichlet data, its convection classification and global constants.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::closed_form::{Constant, SharedFunction};
use crate::error::{Error, Result};
use crate::mesh::{SpaceMesh, TimePartition};
use crate::quadrature::{GaussLegendre, QuadOrder};

/// Axis-aligned box in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    extents: Vec<f64>,
    origin: Vec<f64>,
}

impl Domain {
    pub fn new(extents: Vec<f64>, origin: Vec<f64>) -> Result<Self> {
        let dim = extents.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidDomain(format!("dim must be 1 or 2, got {dim}")));
        }
        if origin.len() != dim {
            return Err(Error::InvalidDomain(format!(
                "origin has {} entries for a {dim}-d domain",
                origin.len()
            )));
        }
        for (i, &l) in extents.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidDomain(format!("extent on axis {i} is {l}")));
            }
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidDomain("non-finite origin".into()));
        }
        Ok(Self { extents, origin })
    }

    /// `(0, 1)^dim`.
    pub fn unit(dim: usize) -> Self {
        Self::new(vec![1.0; dim], vec![0.0; dim]).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    /// Uniform dilation about the origin.
    pub fn dilated(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.extents.iter().map(|l| l * factor).collect(),
            self.origin.clone(),
        )
    }
}

/// Convection field catalog: constant vectors and linear maps `a(x) = A x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "coeffs", rename_all = "lowercase")]
pub enum ConvectionField {
    Constant(Vec<f64>),
    /// Row-major matrix `A`, one row per output component.
    Linear(Vec<Vec<f64>>),
}

impl ConvectionField {
    pub fn dim(&self) -> usize {
        match self {
            ConvectionField::Constant(c) => c.len(),
            ConvectionField::Linear(a) => a.len(),
        }
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        let ok = match self {
            ConvectionField::Constant(c) => c.len() == dim,
            ConvectionField::Linear(a) => a.len() == dim && a.iter().all(|r| r.len() == dim),
        };
        let finite = match self {
            ConvectionField::Constant(c) => c.iter().all(|v| v.is_finite()),
            ConvectionField::Linear(a) => a.iter().flatten().all(|v| v.is_finite()),
        };
        if !ok {
            return Err(Error::MalformedConvection(format!(
                "coefficients do not match dimension {dim}"
            )));
        }
        if !finite {
            return Err(Error::MalformedConvection("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        match self {
            ConvectionField::Constant(c) => {
                for (o, v) in out.iter_mut().zip(c) {
                    *o = *v;
                }
            }
            ConvectionField::Linear(a) => {
                for (i, row) in a.iter().enumerate() {
                    out[i] = row.iter().zip(x).map(|(r, xi)| r * xi).sum();
                }
            }
        }
        out
    }

    /// Exact divergence; constant for both catalog kinds.
    pub fn divergence(&self) -> f64 {
        match self {
            ConvectionField::Constant(_) => 0.0,
            ConvectionField::Linear(a) => a.iter().enumerate().map(|(i, r)| r[i]).sum(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            ConvectionField::Constant(c) => {
                ConvectionField::Constant(c.iter().map(|v| v * s).collect())
            }
            ConvectionField::Linear(a) => ConvectionField::Linear(
                a.iter().map(|r| r.iter().map(|v| v * s).collect()).collect(),
            ),
        }
    }
}

/// Sign class of `div a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum ConvectionClass {
    DivZero,
    /// `delta_sq = -div a / 2 > 0`, constant over the box for the catalog.
    StrictNegative { delta_sq: f64 },
}

impl ConvectionClass {
    pub fn delta_sq_at(&self, _x: &[f64]) -> f64 {
        match self {
            ConvectionClass::DivZero => 0.0,
            ConvectionClass::StrictNegative { delta_sq } => *delta_sq,
        }
    }

    pub fn delta_sq(&self) -> f64 {
        self.delta_sq_at(&[])
    }

    pub fn is_div_zero(&self) -> bool {
        matches!(self, ConvectionClass::DivZero)
    }
}

pub fn classify_convection(convection: &ConvectionField, domain: &Domain) -> Result<ConvectionClass> {
    convection.check(domain.dim())?;
    let div = convection.divergence();
    if div > 0.0 {
        Err(Error::PositiveDivergence(div))
    } else if div == 0.0 {
        Ok(ConvectionClass::DivZero)
    } else {
        Ok(ConvectionClass::StrictNegative { delta_sq: -0.5 * div })
    }
}

/// `C_F` for `‖w‖ ≤ C_F ‖∇w‖` on `H¹₀` of the box: the reciprocal square root
/// of the first Dirichlet Laplacian eigenvalue `π² Σ 1/L_i²`.
pub fn friedrichs_constant(domain: &Domain) -> Result<f64> {
    if !(1..=2).contains(&domain.dim()) || domain.extents().iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidDomain("invalid extents".into()));
    }
    let lambda: f64 = domain.extents().iter().map(|l| PI * PI / (l * l)).sum();
    Ok(1.0 / lambda.sqrt())
}

/// Data of the evolutionary convection–diffusion problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub horizon: f64,
    pub convection: ConvectionField,
    pub source: SharedFunction,
    pub initial: SharedFunction,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("domain", &self.domain)
            .field("horizon", &self.horizon)
            .field("convection", &self.convection)
            .field("source", &self.source)
            .field("initial", &self.initial)
            .finish()
    }
}

impl ProblemSpec {
    /// Zero data on the given box.
    pub fn homogeneous(domain: Domain, horizon: f64, convection: ConvectionField) -> Self {
        Self {
            domain,
            horizon,
            convection,
            source: Arc::new(Constant(0.0)),
            initial: Arc::new(Constant(0.0)),
        }
    }

    pub fn with_source(mut self, source: SharedFunction) -> Self {
        self.source = source;
        self
    }

    pub fn with_initial(mut self, initial: SharedFunction) -> Self {
        self.initial = initial;
        self
    }

    pub fn classify(&self) -> Result<ConvectionClass> {
        classify_convection(&self.convection, &self.domain)
    }

    pub fn friedrichs(&self) -> Result<f64> {
        friedrichs_constant(&self.domain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    InvalidDomain,
    NonpositiveHorizon,
    MalformedConvection,
    PositiveDivergence,
    NonzeroBoundaryTrace,
    NonfiniteSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
    /// Node coordinate or axis the violation was found at, when meaningful.
    pub location: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, message: impl Into<String>, location: Option<String>) {
        self.violations.push(Violation {
            kind,
            message: message.into(),
            location,
        });
    }
}

const SAMPLE_NODES: usize = 33;
const SAMPLE_SLABS: usize = 16;

/// Checks every invariant of the problem data on a sampling grid; never
/// aborts, all findings are collected.
pub fn validate_problem(spec: &ProblemSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let dom = &spec.domain;
    for (i, &l) in dom.extents().iter().enumerate() {
        if !(l > 0.0) {
            report.push(
                ViolationKind::InvalidDomain,
                format!("nonpositive extent {l}"),
                Some(format!("axis {i}")),
            );
        }
    }
    if !(spec.horizon > 0.0) || !spec.horizon.is_finite() {
        report.push(
            ViolationKind::NonpositiveHorizon,
            format!("nonpositive horizon T = {}", spec.horizon),
            None,
        );
    }
    match classify_convection(&spec.convection, dom) {
        Ok(_) => {}
        Err(Error::PositiveDivergence(d)) => report.push(
            ViolationKind::PositiveDivergence,
            format!("positive divergence {d}"),
            None,
        ),
        Err(e) => report.push(ViolationKind::MalformedConvection, e.to_string(), None),
    }
    if !report.is_valid() && report.has(ViolationKind::InvalidDomain) {
        return report;
    }

    let nodes = vec![SAMPLE_NODES; dom.dim()];
    let mesh = match SpaceMesh::new(dom.clone(), &nodes) {
        Ok(m) => m,
        Err(e) => {
            report.push(ViolationKind::InvalidDomain, e.to_string(), None);
            return report;
        }
    };
    let mut scale = 0.0f64;
    for n in 0..mesh.node_count() {
        scale = scale.max(spec.initial.value(&mesh.coord(n), 0.0).abs());
    }
    let tol = 1e-12 * scale.max(1.0);
    for n in mesh.boundary_nodes() {
        let x = mesh.coord(n);
        let phi = spec.initial.value(&x[..dom.dim()], 0.0);
        if phi.abs() > tol {
            report.push(
                ViolationKind::NonzeroBoundaryTrace,
                format!("nonzero boundary trace: phi = {phi:e}"),
                Some(format!("node {n} at {:?}", &x[..dom.dim()])),
            );
            break;
        }
    }

    if spec.horizon > 0.0 && spec.horizon.is_finite() {
        let part = TimePartition::uniform(spec.horizon, SAMPLE_SLABS).expect("positive horizon");
        let tq = GaussLegendre::new(QuadOrder::default().time);
        let table = mesh.quad_table(QuadOrder::default());
        let mut sq = 0.0;
        for k in 0..part.slab_count() {
            let (t0, dt) = (part.time(k), part.slab_len(k));
            for (s, wt) in tq.iter() {
                let t = t0 + s * dt;
                for p in table.points() {
                    let f = spec.source.value(&p.x[..dom.dim()], t);
                    sq += wt * dt * p.w * f * f;
                }
            }
        }
        if !sq.is_finite() {
            report.push(
                ViolationKind::NonfiniteSource,
                "source has non-finite L2(Q_T) norm",
                None,
            );
        }
    }
    report
}
