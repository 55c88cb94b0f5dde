//! Run configuration, read from TOML.
//!
//! ```toml
//! [problem]
//! manufactured = "sin_decay_1d"   # or give dim/extents/convection/source/initial
//! T = 1.0
//!
//! [solve]
//! nx = 41
//! nt = 40
//! convection_disc = "centered"
//!
//! [certify]
//! case = "div0"
//! extraction = "combined"
//! flux = "min"
//! jumps = [{ t = 0.5, kind = "restart-interp", nodes = [21] }]
//!
//! [study]
//! levels = 3
//! factor = 2
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::majorant::{Extraction, GreeksMode, LambdaMode};
use crate::problem::ConvectionField;
use crate::solver::{ConvectionDisc, JumpSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub certify: CertifySection,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Problem data. With `manufactured` set, source and initial data are
/// induced by the catalog solution and the other keys override its box,
/// horizon and convection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub manufactured: Option<String>,
    pub dim: Option<usize>,
    pub extents: Option<Vec<f64>>,
    pub origin: Option<Vec<f64>>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub convection: Option<ConvectionField>,
    pub source: Option<DataSpec>,
    pub initial: Option<DataSpec>,
}

/// A constant, or the path of a field file used as tabulated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSpec {
    Constant(f64),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    #[serde(default = "default_nodes")]
    pub nx: usize,
    /// Defaults to `nx` in 2-d.
    pub ny: Option<usize>,
    #[serde(default = "default_steps")]
    pub nt: usize,
    #[serde(default)]
    pub convection_disc: ConvectionDisc,
    /// Certify this field file instead of solving.
    pub load: Option<PathBuf>,
}

fn default_nodes() -> usize {
    41
}

fn default_steps() -> usize {
    40
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            nx: default_nodes(),
            ny: None,
            nt: default_steps(),
            convection_disc: ConvectionDisc::default(),
            load: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Div0,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxStrategy {
    Avg,
    #[default]
    Min,
}

/// Bound used for approximations with jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpMethod {
    /// Jump penalties.
    #[default]
    Penalty,
    /// Conforming projection plus its distance.
    Projection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    /// Expected convection class; inferred from `a` when absent.
    pub case: Option<CaseKind>,
    #[serde(default)]
    pub extraction: Extraction,
    #[serde(default)]
    pub flux: FluxStrategy,
    pub flux_weight_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub greeks: GreeksMode,
    #[serde(default)]
    pub lambda: LambdaMode,
    #[serde(default)]
    pub method: JumpMethod,
    #[serde(default)]
    pub jumps: Vec<JumpSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_factor")]
    pub factor: usize,
}

fn default_levels() -> usize {
    3
}

fn default_factor() -> usize {
    2
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            levels: default_levels(),
            factor: default_factor(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub report: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub field: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> std::result::Result<Self, String> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    /// A manufactured-case config with default sections.
    pub fn manufactured(name: &str, nx: usize, nt: usize) -> Self {
        Self {
            problem: ProblemSection {
                manufactured: Some(name.to_string()),
                ..ProblemSection::default()
            },
            solve: SolveSection {
                nx,
                nt,
                ..SolveSection::default()
            },
            certify: CertifySection::default(),
            study: StudySection::default(),
            output: OutputSection::default(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}
