//! Drift between two reports of the same scenario.

use serde::Serialize;

use crate::error::LabError;
use crate::report::Report;

/// Largest relative drift tolerated at equal seeds.
pub const DRIFT_LIMIT: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftSummary {
    pub scenario: String,
    /// Drift of `Ĉ_K` at the scenario depth; `None` means infinite.
    pub c_hat_drift: Option<f64>,
    /// Largest drift over all per-depth `Ĉ_k`.
    pub per_depth_drift: Option<f64>,
    pub certificate_drift: Option<f64>,
    pub ladder_drift: Option<f64>,
    pub max_drift: Option<f64>,
    pub verdicts_agree: bool,
}

impl DriftSummary {
    pub fn within_limit(&self) -> bool {
        self.verdicts_agree && self.max_drift.is_some_and(|d| d <= DRIFT_LIMIT)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if !(a.is_finite() && b.is_finite()) {
        return f64::INFINITY;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

fn seq_drift(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn compare_reports(r1: &Report, r2: &Report) -> Result<DriftSummary, LabError> {
    if r1.scenario.name != r2.scenario.name {
        return Err(LabError::Mismatch(format!("`{}` vs `{}`", r1.scenario.name, r2.scenario.name)));
    }
    if r1.scenario.map != r2.scenario.map {
        return Err(LabError::Mismatch("map coefficients differ".into()));
    }
    let k = r1.scenario.tree.depth;
    let c_hat = match (r1.c_hat.get(k), r2.c_hat.get(k)) {
        (Some(a), Some(b)) => rel(*a, *b),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    let per_depth = seq_drift(&r1.c_hat, &r2.c_hat);
    let values = |r: &Report| -> Vec<f64> {
        r.probes.iter().flat_map(|p| [p.lower, p.upper.unwrap_or(f64::INFINITY)]).collect()
    };
    let certs = seq_drift(&values(r1), &values(r2));
    let ladder_values = |r: &Report| -> Vec<f64> { r.ladders.iter().flat_map(|l| l.points.iter().map(|p| p[1])).collect() };
    let ladders = seq_drift(&ladder_values(r1), &ladder_values(r2));
    Ok(DriftSummary {
        scenario: r1.scenario.name.clone(),
        c_hat_drift: finite(c_hat),
        per_depth_drift: finite(per_depth),
        certificate_drift: finite(certs),
        ladder_drift: finite(ladders),
        max_drift: finite(c_hat.max(per_depth).max(certs).max(ladders)),
        verdicts_agree: r1.verdict == r2.verdict,
    })
}
