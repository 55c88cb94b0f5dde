use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use super::run::{approximation, build_problem, certify_approximation};
use super::{HarnessError, HarnessResult, Stage};
use crate::quadrature::QuadOrder;
use crate::solver::JumpKind;

/// One refinement level. Columns, in order: `level, nodes, h, dt,
/// true_error, bound, efficiency_index, flux_gap, residual_free,
/// residual_delta, ic_mismatch, jump_penalty, nonconformity`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub level: usize,
    /// Nodes per axis, `x`-separated.
    pub nodes: String,
    pub h: f64,
    pub dt: f64,
    pub true_error: Option<f64>,
    pub bound: f64,
    pub efficiency_index: Option<f64>,
    pub flux_gap: f64,
    pub residual_free: f64,
    pub residual_delta: f64,
    pub ic_mismatch: f64,
    pub jump_penalty: f64,
    pub nonconformity: f64,
}

fn refine(n: usize, factor: usize, times: u32) -> usize {
    (n - 1) * factor.pow(times) + 1
}

/// Certifies `levels` uniform refinements of `cfg`, each multiplying the
/// cell count per axis and the step count by the study factor.
pub fn study_rows(cfg: &RunConfig, levels: usize) -> HarnessResult<Vec<StudyRow>> {
    if levels < 2 {
        return Err(HarnessError::new(Stage::Config, format!("a study needs at least 2 levels, got {levels}")));
    }
    let factor = cfg.study.factor;
    if factor < 2 {
        return Err(HarnessError::new(Stage::Config, "study factor must be at least 2"));
    }
    if cfg.solve.load.is_some() {
        return Err(HarnessError::new(Stage::Config, "a study solves at every level; drop `solve.load`"));
    }
    let problem = build_problem(cfg)?;
    let mut rows = Vec::with_capacity(levels);
    for l in 0..levels as u32 {
        let mut c = cfg.clone();
        c.solve.nx = refine(cfg.solve.nx, factor, l);
        c.solve.ny = cfg.solve.ny.map(|n| refine(n, factor, l));
        c.solve.nt = cfg.solve.nt * factor.pow(l);
        for j in &mut c.certify.jumps {
            if let JumpKind::RestartInterp { nodes } = &mut j.kind {
                for n in nodes.iter_mut() {
                    *n = refine(*n, factor, l);
                }
            }
        }
        let approx = approximation(&c, &problem)?;
        let cert = certify_approximation(&c.certify, &problem, &approx, QuadOrder::default())?;
        let comp = cert.bound.components;
        let nodes: Vec<String> = approx.mesh.nodes_per_axis().iter().map(|n| n.to_string()).collect();
        rows.push(StudyRow {
            level: l as usize,
            nodes: nodes.join("x"),
            h: approx.mesh.h_max(),
            dt: approx.field.partition().max_slab_len(),
            true_error: cert.certified_error,
            bound: cert.bound.value,
            efficiency_index: cert.efficiency_index,
            flux_gap: comp.flux_gap,
            residual_free: comp.residual_free,
            residual_delta: comp.residual_delta,
            ic_mismatch: comp.ic_mismatch,
            jump_penalty: comp.jump_penalty,
            nonconformity: comp.nonconformity,
        });
    }
    Ok(rows)
}

pub fn write_study(rows: &[StudyRow], path: &Path) -> HarnessResult<()> {
    let out = |e: String| HarnessError::new(Stage::Output, format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(|e| out(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| out(e.to_string()))?;
    }
    w.flush().map_err(|e| out(e.to_string()))
}

/// Runs the study and writes the table.
pub fn study(cfg: &RunConfig, levels: usize, out: &Path) -> HarnessResult<Vec<StudyRow>> {
    let rows = study_rows(cfg, levels)?;
    write_study(&rows, out)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_level_is_rejected() {
        let cfg = RunConfig::manufactured("sin_decay_1d", 11, 4);
        assert_eq!(study_rows(&cfg, 1).unwrap_err().stage, Stage::Config);
    }

    #[test]
    fn study_decreases() {
        let cfg = RunConfig::manufactured("sin_decay_1d", 6, 4);
        let rows = study_rows(&cfg, 3).unwrap();
        assert_eq!(rows[2].nodes, "21");
        for w in rows.windows(2) {
            assert!(w[1].bound < w[0].bound);
            assert!(w[1].true_error < w[0].true_error);
        }
    }
}
