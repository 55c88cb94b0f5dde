//! Closed-form scalar functions used as data (`f`, `phi`) and as exact
//! solutions for manufactured cases.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::problem::{ConvectionField, Domain};

/// A scalar function on the space-time cylinder. Functions of space alone
/// ignore `t`.
pub trait ScalarFunction: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64], t: f64) -> f64;
}

/// Closed-form function with the derivatives needed to build a consistent
/// source term and to evaluate true errors without interpolation.
pub trait ExactSolution: ScalarFunction {
    fn gradient(&self, x: &[f64], t: f64) -> [f64; 2];
    fn time_derivative(&self, x: &[f64], t: f64) -> f64;
    fn laplacian(&self, x: &[f64], t: f64) -> f64;
}

pub type SharedFunction = Arc<dyn ScalarFunction>;
pub type SharedSolution = Arc<dyn ExactSolution>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl ScalarFunction for Constant {
    fn value(&self, _x: &[f64], _t: f64) -> f64 {
        self.0
    }
}

impl ExactSolution for Constant {
    fn gradient(&self, _x: &[f64], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn time_derivative(&self, _x: &[f64], _t: f64) -> f64 {
        0.0
    }
    fn laplacian(&self, _x: &[f64], _t: f64) -> f64 {
        0.0
    }
}

/// `prod_i sin(pi (x_i - o_i) / L_i) * exp(-rate * t)`; vanishes on the box
/// faces. With `rate = 0` this is the time-independent sine bump.
#[derive(Debug, Clone, PartialEq)]
pub struct SineDecay {
    origin: [f64; 2],
    wave: [f64; 2],
    dim: usize,
    rate: f64,
    amplitude: f64,
}

impl SineDecay {
    pub fn new(domain: &Domain, rate: f64) -> Self {
        let mut origin = [0.0; 2];
        let mut wave = [0.0; 2];
        for i in 0..domain.dim() {
            origin[i] = domain.origin()[i];
            wave[i] = PI / domain.extents()[i];
        }
        Self {
            origin,
            wave,
            dim: domain.dim(),
            rate,
            amplitude: 1.0,
        }
    }

    pub fn bump(domain: &Domain) -> Self {
        Self::new(domain, 0.0)
    }

    pub fn scaled(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    fn factors(&self, x: &[f64]) -> ([f64; 2], [f64; 2]) {
        let mut s = [1.0; 2];
        let mut c = [0.0; 2];
        for i in 0..self.dim {
            let arg = self.wave[i] * (x[i] - self.origin[i]);
            s[i] = arg.sin();
            c[i] = arg.cos();
        }
        (s, c)
    }

    fn time_factor(&self, t: f64) -> f64 {
        self.amplitude * (-self.rate * t).exp()
    }
}

impl ScalarFunction for SineDecay {
    fn value(&self, x: &[f64], t: f64) -> f64 {
        let (s, _) = self.factors(x);
        s[0] * s[1] * self.time_factor(t)
    }
}

impl ExactSolution for SineDecay {
    fn gradient(&self, x: &[f64], t: f64) -> [f64; 2] {
        let (s, c) = self.factors(x);
        let e = self.time_factor(t);
        let mut g = [0.0; 2];
        g[0] = self.wave[0] * c[0] * s[1] * e;
        if self.dim == 2 {
            g[1] = self.wave[1] * s[0] * c[1] * e;
        }
        g
    }

    fn time_derivative(&self, x: &[f64], t: f64) -> f64 {
        -self.rate * self.value(x, t)
    }

    fn laplacian(&self, x: &[f64], t: f64) -> f64 {
        let k2: f64 = self.wave[..self.dim].iter().map(|w| w * w).sum();
        -k2 * self.value(x, t)
    }
}

/// Source `f = u_t - Δu + a·∇u` induced by an exact solution.
#[derive(Debug, Clone)]
pub struct ManufacturedSource {
    solution: SharedSolution,
    convection: ConvectionField,
}

impl ManufacturedSource {
    pub fn new(solution: SharedSolution, convection: ConvectionField) -> Self {
        Self {
            solution,
            convection,
        }
    }
}

impl ScalarFunction for ManufacturedSource {
    fn value(&self, x: &[f64], t: f64) -> f64 {
        let a = self.convection.eval(x);
        let g = self.solution.gradient(x, t);
        self.solution.time_derivative(x, t) - self.solution.laplacian(x, t)
            + a[0] * g[0]
            + a[1] * g[1]
    }
}

/// `s * inner`, used for scaling studies.
#[derive(Debug, Clone)]
pub struct Scaled {
    pub factor: f64,
    pub inner: SharedFunction,
}

impl ScalarFunction for Scaled {
    fn value(&self, x: &[f64], t: f64) -> f64 {
        self.factor * self.inner.value(x, t)
    }
}

/// Exact solution evaluated at `t = 0`, i.e. its initial datum.
#[derive(Debug, Clone)]
pub struct InitialTrace(pub SharedSolution);

impl ScalarFunction for InitialTrace {
    fn value(&self, x: &[f64], _t: f64) -> f64 {
        self.0.value(x, 0.0)
    }
}

/// Ad-hoc closure wrapper, mostly for tests and one-off data.
pub struct FnScalar<F> {
    name: &'static str,
    f: F,
}

impl<F> FnScalar<F>
where
    F: Fn(&[f64], f64) -> f64 + Send + Sync,
{
    pub fn new(name: &'static str, f: F) -> Self {
        Self { name, f }
    }
}

impl<F> fmt::Debug for FnScalar<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnScalar({})", self.name)
    }
}

impl<F> ScalarFunction for FnScalar<F>
where
    F: Fn(&[f64], f64) -> f64 + Send + Sync,
{
    fn value(&self, x: &[f64], t: f64) -> f64 {
        (self.f)(x, t)
    }
}
