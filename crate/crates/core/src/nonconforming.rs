//! Bounds for approximations with jumps in time.
//!
//! Method 1 projects onto a conforming field and pays the distance.
//! Method 2 keeps the jumps: slabs never difference across them, and each
//! jump adds `‖J‖ B_τ + ‖J‖²/2` where `J = v⁺ - v⁻` and `B_τ` bounds
//! `‖ê(·, τ)‖` on `(0, τ)`. Jumps are handled in increasing time, so `B_τ`
//! already includes the penalties of earlier jumps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{l2_norm, norms, FluxField, Level, SpaceTimeField};
use crate::majorant::{
    certify_conforming, default_greeks, majorant_delta, terminal_div0, BoundInputs, CertifiedBound, Extraction,
    GreeksMode, LambdaMode,
};
use crate::mesh::{SpaceMesh, TimePartition};
use crate::problem::ProblemSpec;
use crate::quadrature::QuadOrder;

/// Midpoint projection: every jump level becomes `(v⁻ + v⁺)/2`.
pub fn project_conforming(vhat: &SpaceTimeField) -> SpaceTimeField {
    let levels = vhat
        .levels()
        .iter()
        .map(|l| match l {
            Level::Single(v) => Level::Single(v.clone()),
            Level::Jump { left, right } => {
                Level::Single(left.iter().zip(right).map(|(a, b)| 0.5 * (a + b)).collect())
            }
        })
        .collect();
    SpaceTimeField::new(vhat.partition().clone(), vhat.node_count(), levels).expect("same layout")
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpRecord {
    pub tau: f64,
    pub level: usize,
    /// `‖v⁺ - v⁻‖_Ω`.
    pub jump_norm: f64,
    /// Terminal bound of `‖ê(·, τ)‖` on `(0, τ)`.
    pub left_bound: CertifiedBound,
    /// `‖J‖ B_τ + ‖J‖²/2`.
    pub penalty: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpPenalty {
    pub records: Vec<JumpRecord>,
    /// Sum of the per-jump penalties.
    pub total: f64,
    /// `total + ‖ê(·,0)‖²/2`, the quantity entering the combined bounds.
    pub with_initial: f64,
}

/// Accumulated penalty for the jumps of `vhat`, given the slab inputs of
/// `(vhat, y)`. In the δ case the left bounds use α = β = γ = 1 and λ
/// from `lambda`.
pub fn jump_penalty(
    vhat: &SpaceTimeField,
    mesh: &SpaceMesh,
    inputs: &BoundInputs,
    lambda: LambdaMode,
) -> Result<JumpPenalty> {
    let part = vhat.partition();
    let mut total = 0.0;
    let mut records = Vec::new();
    for level in vhat.jump_levels() {
        if level == 0 || level + 1 >= part.level_count() {
            return Err(Error::InvalidJump(format!(
                "jump at t = {} is not interior",
                part.time(level)
            )));
        }
        let (left, right) = match vhat.level(level) {
            Level::Jump { left, right } => (left, right),
            Level::Single(_) => unreachable!("listed as a jump"),
        };
        let diff: Vec<f64> = right.iter().zip(left).map(|(a, b)| a - b).collect();
        let jump_norm = l2_norm(&diff, mesh);
        let before = inputs.truncated(level).with_penalty(total);
        let left_bound = if before.class.is_div_zero() {
            terminal_div0(&before)?
        } else {
            let params = default_greeks(&before, Extraction::Terminal, lambda)?;
            majorant_delta(&before, &params, Extraction::Terminal)?
        };
        let penalty = jump_norm * left_bound.value + 0.5 * jump_norm * jump_norm;
        total += penalty;
        records.push(JumpRecord {
            tau: part.time(level),
            level,
            jump_norm,
            left_bound,
            penalty,
        });
    }
    Ok(JumpPenalty {
        records,
        total,
        with_initial: total + 0.5 * inputs.ic * inputs.ic,
    })
}

/// Method 2 from precomputed inputs of `(vhat, y)`.
pub fn bound_method2_from_inputs(
    vhat: &SpaceTimeField,
    mesh: &SpaceMesh,
    inputs: &BoundInputs,
    extraction: Extraction,
    greeks: GreeksMode,
    lambda: LambdaMode,
) -> Result<(CertifiedBound, JumpPenalty)> {
    let pen = jump_penalty(vhat, mesh, inputs, lambda)?;
    let inp = inputs.clone().with_penalty(pen.total);
    let bound = certify_conforming(&inp, extraction, greeks, lambda)?;
    Ok((bound, pen))
}

/// Jump-penalty bound. With no jumps it is the conforming bound.
#[allow(clippy::too_many_arguments)]
pub fn bound_method2(
    vhat: &SpaceTimeField,
    y: &FluxField,
    spec: &ProblemSpec,
    mesh: &SpaceMesh,
    order: QuadOrder,
    extraction: Extraction,
    greeks: GreeksMode,
    lambda: LambdaMode,
) -> Result<(CertifiedBound, JumpPenalty)> {
    let inputs = BoundInputs::compute(vhat, y, spec, mesh, order)?;
    bound_method2_from_inputs(vhat, mesh, &inputs, extraction, greeks, lambda)
}

/// Projection bound `|||v̂ - P v̂||| + bound(P v̂, y)`, the norm matching
/// the bound's. The first addend is reported as `nonconformity`.
#[allow(clippy::too_many_arguments)]
pub fn bound_method1(
    vhat: &SpaceTimeField,
    y: &FluxField,
    spec: &ProblemSpec,
    mesh: &SpaceMesh,
    order: QuadOrder,
    extraction: Extraction,
    greeks: GreeksMode,
    lambda: LambdaMode,
) -> Result<CertifiedBound> {
    let projected = project_conforming(vhat);
    let inputs = BoundInputs::compute(&projected, y, spec, mesh, order)?;
    let mut bound = certify_conforming(&inputs, extraction, greeks, lambda)?;
    let norm = bound
        .norm
        .ok_or_else(|| Error::InvalidParams("projection bound needs a norm extraction".into()))?;
    let diff = vhat.difference(&projected)?;
    let gap = norms(&diff, mesh, &inputs.class)?.get(norm);
    bound.components.nonconformity = gap;
    bound.value += gap;
    Ok(bound)
}

/// Conforming `v^ε`: equal to `v̂` outside `(τ - ε, τ)` and ramping
/// linearly from `v̂(τ - ε)` to `v⁺` inside, for every jump `τ`. A level is
/// inserted at `τ - ε` unless `ε` equals the slab length.
pub fn epsilon_regularize(vhat: &SpaceTimeField, eps: f64) -> Result<SpaceTimeField> {
    let part = vhat.partition();
    let mut times = Vec::with_capacity(part.level_count() + vhat.jump_levels().len());
    let mut levels = Vec::with_capacity(times.capacity());
    for (i, lvl) in vhat.levels().iter().enumerate() {
        match lvl {
            Level::Single(v) => {
                times.push(part.time(i));
                levels.push(Level::Single(v.clone()));
            }
            Level::Jump { left, right } => {
                let len = part.slab_len(i - 1);
                if !(eps > 0.0 && eps <= len) {
                    return Err(Error::InvalidParams(format!(
                        "eps = {eps} must lie in (0, {len}] at t = {}",
                        part.time(i)
                    )));
                }
                if eps < len {
                    let s = 1.0 - eps / len;
                    let start = vhat.slab_start(i - 1);
                    let mid = start.iter().zip(left).map(|(a, b)| (1.0 - s) * a + s * b).collect();
                    times.push(part.time(i) - eps);
                    levels.push(Level::Single(mid));
                }
                times.push(part.time(i));
                levels.push(Level::Single(right.clone()));
            }
        }
    }
    SpaceTimeField::new(TimePartition::new(times)?, vhat.node_count(), levels)
}
