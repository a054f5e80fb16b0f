//! Delta-family bounds for unobserved confounding.
//!
//! The unit shift `delta` is how far the estimate moves when the confounders
//! are dropped. Bounds at multiplier `m` widen the targeted estimate by
//! `m * delta` on each side and reuse its standard error.

use std::fmt::Write as _;

use serde::Serialize;

use crate::dataset::{Dataset, format_value};
use crate::estimation::{EstimationError, TargetedResult, TmleConfig, tmle_estimate};
use crate::identification::EstimandSpec;

pub const DEFAULT_MULTIPLIERS: [f64; 6] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub m: f64,
    pub lo: f64,
    pub hi: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "m", rename_all = "kebab-case")]
pub enum Crossing {
    /// Zero already lies inside the unshifted interval.
    NonSignificantAtBaseline,
    /// Smallest multiplier whose shifted interval reaches zero.
    At(f64),
    /// `delta` is zero, so no multiplier moves the interval.
    Never,
}

impl std::fmt::Display for Crossing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Crossing::NonSignificantAtBaseline => write!(f, "non-significant at baseline"),
            Crossing::At(m) => write!(f, "{m:.3}"),
            Crossing::Never => write!(f, "none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCurve {
    pub contrast: String,
    pub psi: f64,
    pub se: f64,
    pub psi_unadjusted: f64,
    pub delta: f64,
    pub rows: Vec<SensitivityRow>,
    pub crossing: Crossing,
    /// First grid multiplier whose interval contains zero.
    pub grid_crossing: Option<f64>,
}

/// Builds the curve for one contrast from the two point estimates.
pub fn curve(contrast: &str, psi: f64, se: f64, psi_unadjusted: f64, multipliers: &[f64]) -> SensitivityCurve {
    let delta = (psi - psi_unadjusted).abs();
    let rows: Vec<SensitivityRow> = multipliers
        .iter()
        .map(|&m| {
            let (lo, hi) = (psi - m * delta, psi + m * delta);
            SensitivityRow { m, lo, hi, ci_lo: lo - Z95 * se, ci_hi: hi + Z95 * se }
        })
        .collect();
    let margin = psi.abs() - Z95 * se;
    let crossing = if margin <= 0.0 {
        Crossing::NonSignificantAtBaseline
    } else if delta == 0.0 {
        Crossing::Never
    } else {
        Crossing::At(margin / delta)
    };
    let grid_crossing = rows.iter().find(|r| r.ci_lo <= 0.0 && r.ci_hi >= 0.0).map(|r| r.m);
    SensitivityCurve { contrast: contrast.into(), psi, se, psi_unadjusted, delta, rows, crossing, grid_crossing }
}

/// Pairs contrasts of the adjusted and unadjusted runs by label.
pub fn curves_from_results(
    adjusted: &TargetedResult,
    unadjusted: &TargetedResult,
    multipliers: &[f64],
) -> Vec<SensitivityCurve> {
    adjusted
        .contrasts
        .iter()
        .filter_map(|c| {
            let u = unadjusted.contrasts.iter().find(|u| u.label == c.label)?;
            Some(curve(&c.label, c.psi_targeted, c.se, u.psi_targeted, multipliers))
        })
        .collect()
}

/// The estimand with confounders removed; precision variables stay unless
/// `drop_precision` is set.
pub fn unadjusted_spec(spec: &EstimandSpec, drop_precision: bool) -> EstimandSpec {
    let mut s = spec.clone();
    s.confounders.clear();
    if drop_precision {
        s.precision.clear();
    }
    s
}

/// Runs the adjusted and unadjusted analyses and returns both results with
/// the curves.
pub fn sensitivity_curve(
    ds: &Dataset,
    spec: &EstimandSpec,
    cfg: &TmleConfig,
    multipliers: &[f64],
    drop_precision: bool,
    seed: u64,
) -> Result<(TargetedResult, TargetedResult, Vec<SensitivityCurve>), EstimationError> {
    let adjusted = tmle_estimate(ds, spec, cfg, seed)?;
    let unadjusted = tmle_estimate(ds, &unadjusted_spec(spec, drop_precision), cfg, seed)?;
    let curves = curves_from_results(&adjusted, &unadjusted, multipliers);
    Ok((adjusted, unadjusted, curves))
}

pub fn curves_csv(curves: &[SensitivityCurve]) -> String {
    let mut out = String::from("contrast,m,lo,hi,ci_lo,ci_hi\n");
    for c in curves {
        for r in &c.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.contrast,
                format_value(r.m),
                format_value(r.lo),
                format_value(r.hi),
                format_value(r.ci_lo),
                format_value(r.ci_hi)
            );
        }
    }
    out
}

/// One row per (contrast, m, series) for plotting.
pub fn curves_long_csv(curves: &[SensitivityCurve]) -> String {
    let mut out = String::from("contrast,m,series,value\n");
    for c in curves {
        for r in &c.rows {
            for (series, v) in [("lo", r.lo), ("hi", r.hi), ("ci_lo", r.ci_lo), ("ci_hi", r.ci_hi)] {
                let _ = writeln!(out, "{},{},{series},{}", c.contrast, format_value(r.m), format_value(v));
            }
        }
    }
    out
}
