//! Synthesis of the multiplicative controls: admissibility of an
//! (initial, target) pair, the log-ratio exponent, static and two-phase
//! schedules, the equilibrium hold coefficient and the reaction-cancelling term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, SupportMask};
use crate::pde::{
    midpoint_states, Cancellation, ControlPiece, ControlSchedule, NonlinearitySpec, Trajectory,
};

/// Default node-level zero threshold: `1e-8 · ‖y₀‖_∞`.
pub fn default_zero_threshold(y0: &Field) -> f64 {
    let scale = y0.linf_norm();
    if scale > 0.0 {
        1e-8 * scale
    } else {
        f64::MIN_POSITIVE
    }
}

/// Default bound on `‖a‖_∞` accepted by synthesis.
pub const DEFAULT_EXPONENT_BOUND: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub passed: bool,
    pub violations: Vec<usize>,
}

impl ConditionReport {
    fn from_violations(violations: Vec<usize>) -> Self {
        Self {
            passed: violations.is_empty(),
            violations,
        }
    }
}

/// Nodewise evaluation of the hypotheses under which the log-ratio control exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub passed: bool,
    /// `{y₀ ≠ y^d} ⊆ O`
    pub support: ConditionReport,
    /// `y₀ · y^d ≥ 0` on `O`
    pub sign: ConditionReport,
    /// `y₀ = 0 ⟺ y^d = 0` on `O`
    pub zero_sets: ConditionReport,
    /// `|ln(y^d/y₀)| ≤ a_max` where defined
    pub bounded: ConditionReport,
    pub zero_threshold: f64,
    pub exponent_bound: f64,
}

impl AdmissibilityReport {
    pub fn summary(&self) -> String {
        if self.passed {
            return "all conditions hold".into();
        }
        let mut parts = Vec::new();
        for (name, c) in [
            ("support", &self.support),
            ("sign", &self.sign),
            ("zero-set", &self.zero_sets),
            ("bound", &self.bounded),
        ] {
            if !c.passed {
                parts.push(format!(
                    "{name} condition fails at {} node(s)",
                    c.violations.len()
                ));
            }
        }
        parts.join("; ")
    }
}

pub fn check_admissibility(
    y0: &Field,
    yd: &Field,
    mask: &SupportMask,
    zero_threshold: f64,
    exponent_bound: f64,
) -> Result<AdmissibilityReport> {
    y0.grid().ensure_same(yd.grid())?;
    y0.grid().ensure_same(mask.grid())?;
    if !(zero_threshold > 0.0) {
        return Err(Error::Domain(format!(
            "zero threshold must be positive, got {zero_threshold}"
        )));
    }
    if !(exponent_bound > 0.0) {
        return Err(Error::Domain(format!(
            "exponent bound must be positive, got {exponent_bound}"
        )));
    }
    let is_zero = |v: f64| v.abs() < zero_threshold;
    let (mut support, mut sign, mut zero_sets, mut bounded) = (vec![], vec![], vec![], vec![]);
    for (i, (&u, &w)) in y0.values().iter().zip(yd.values()).enumerate() {
        if !mask.contains(i) {
            if (u - w).abs() >= zero_threshold {
                support.push(i);
            }
            continue;
        }
        match (is_zero(u), is_zero(w)) {
            (true, true) => {}
            (true, false) | (false, true) => zero_sets.push(i),
            (false, false) => {
                if u * w < 0.0 {
                    sign.push(i);
                } else if (w / u).ln().abs() > exponent_bound {
                    bounded.push(i);
                }
            }
        }
    }
    let support = ConditionReport::from_violations(support);
    let sign = ConditionReport::from_violations(sign);
    let zero_sets = ConditionReport::from_violations(zero_sets);
    let bounded = ConditionReport::from_violations(bounded);
    Ok(AdmissibilityReport {
        passed: support.passed && sign.passed && zero_sets.passed && bounded.passed,
        support,
        sign,
        zero_sets,
        bounded,
        zero_threshold,
        exponent_bound,
    })
}

/// `a = ln(y^d / y₀)` on `O ∩ {|y₀| ≥ δ}`, zero elsewhere.
pub fn log_ratio(
    y0: &Field,
    yd: &Field,
    mask: &SupportMask,
    zero_threshold: f64,
    exponent_bound: f64,
) -> Result<Field> {
    let report = check_admissibility(y0, yd, mask, zero_threshold, exponent_bound)?;
    if !report.passed {
        return Err(Error::Synthesis(Box::new(report)));
    }
    let values = y0
        .values()
        .iter()
        .zip(yd.values())
        .enumerate()
        .map(|(i, (&u, &w))| {
            if mask.contains(i) && u.abs() >= zero_threshold {
                (w / u).ln()
            } else {
                0.0
            }
        })
        .collect();
    Field::new(*y0.grid(), values)
}

/// The static control `v_T = a / T` on `[0, T]`.
pub fn static_control(exponent: &Field, horizon: f64) -> Result<ControlSchedule> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!(
            "steering time must be positive, got {horizon}"
        )));
    }
    ControlSchedule::constant(exponent.scaled(1.0 / horizon), horizon)
}

/// Coefficient `g` making the target an equilibrium of `y_t = Δ_h y + g y`.
#[derive(Debug, Clone)]
pub struct HoldControl {
    pub g: Field,
    /// `‖Δ_h y^d + g y^d‖` restricted to `{|y^d| ≥ δ}`.
    pub support_residual: f64,
    /// `‖Δ_h y^d + g y^d‖` over the whole grid.
    pub full_residual: f64,
}

pub fn hold_control(yd: &Field, zero_threshold: f64) -> Result<HoldControl> {
    if !(zero_threshold > 0.0) {
        return Err(Error::Domain(format!(
            "zero threshold must be positive, got {zero_threshold}"
        )));
    }
    let grid = *yd.grid();
    let lap = grid.laplacian(yd)?;
    let g = lap.zip_with(yd, |l, y| {
        if y.abs() >= zero_threshold {
            -l / y
        } else {
            0.0
        }
    })?;
    let residual = lap.add(&g.mul(yd)?)?;
    let on_support =
        residual.zip_with(yd, |r, y| if y.abs() >= zero_threshold { r } else { 0.0 })?;
    Ok(HoldControl {
        support_residual: on_support.l2_norm(),
        full_residual: residual.l2_norm(),
        g,
    })
}

/// `q₁ 1_{[0,T₁)} + g 1_{[T₁,T]}`
pub fn two_phase_control(
    q1: &Field,
    g: &Field,
    switch_time: f64,
    horizon: f64,
) -> Result<ControlSchedule> {
    if !(switch_time > 0.0 && switch_time < horizon) {
        return Err(Error::Domain(format!(
            "switch time must lie in (0, {horizon}), got {switch_time}"
        )));
    }
    ControlSchedule::new(vec![
        ControlPiece {
            start: 0.0,
            end: switch_time,
            field: q1.clone(),
        },
        ControlPiece {
            start: switch_time,
            end: horizon,
            field: g.clone(),
        },
    ])
}

/// Adds `−f(t, φ)/φ · 1_{|φ| > δ_E}` to `q`, sampled along the reference run `φ`
/// (which must have been produced under `q` with `f = 0`).
pub fn cancellation_control(
    q: &ControlSchedule,
    reference: &Trajectory,
    nonlinearity: &NonlinearitySpec,
    threshold: f64,
) -> Result<ControlSchedule> {
    let bound = nonlinearity.growth().ok_or_else(|| {
        Error::Contract(format!(
            "nonlinearity '{}' declares no linear-growth constant",
            nonlinearity.name()
        ))
    })?;
    if q.cancellation().is_some() {
        return Err(Error::Contract(
            "schedule already carries a cancellation term".into(),
        ));
    }
    if !(threshold >= 0.0) {
        return Err(Error::Domain(format!(
            "cancellation threshold must be >= 0, got {threshold}"
        )));
    }
    q.grid().ensure_same(reference.grid())?;
    if nonlinearity.is_zero() {
        return Ok(q.clone());
    }
    let dt = reference.dt();
    let mids = midpoint_states(reference, q)?;
    let terms = mids
        .iter()
        .zip(reference.times())
        .map(|(mid, &t)| {
            let f = nonlinearity.evaluate(t + 0.5 * dt, mid);
            let term = f.zip_with(mid, |fv, p| if p.abs() > threshold { -fv / p } else { 0.0 })?;
            if term.linf_norm() > bound * (1.0 + 1e-12) {
                return Err(Error::Contract(format!(
                    "cancellation term {} exceeds declared growth constant {bound} at t = {t}",
                    term.linf_norm()
                )));
            }
            Ok(term)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(q.clone().with_cancellation(Cancellation {
        start: reference.start_time(),
        dt,
        terms,
        threshold,
        bound,
        nonlinearity: nonlinearity.name().to_string(),
    }))
}
