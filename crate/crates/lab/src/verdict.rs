//! The verdict rule.
//!
//! UNBOUNDED_EVIDENCE needs a probe whose certified lower bound (closed form,
//! projection or punctured disk, valid on the basin itself) exceeds the
//! largest threshold. BOUNDED_EVIDENCE needs a stabilized `Ĉ_K`. Heuristic
//! runs stay INCONCLUSIVE unless the heuristic was accepted explicitly.

use crate::report::{certified_kind, ProbeRecord, Verdict};

/// Relative change of `Ĉ` allowed between the two compared depths.
pub const STABILIZATION_TOL: f64 = 0.1;

/// `|Ĉ_{K+e} − Ĉ_K| / Ĉ_K`.
pub fn stabilization(c_hat: &[f64], depth: usize, extra: usize) -> Option<f64> {
    let (a, b) = (*c_hat.get(depth)?, *c_hat.get(depth + extra)?);
    (a.is_finite() && b.is_finite() && a > 0.0).then(|| (b - a).abs() / a)
}

/// Highest certified lower bound over the probes, with its label.
pub fn best_certified(probes: &[ProbeRecord]) -> Option<(f64, &str)> {
    probes
        .iter()
        .filter(|p| p.certified && certified_kind(&p.certificate) && p.lower.is_finite())
        .map(|p| (p.lower, p.label.as_str()))
        .fold(None, |best, x| match best {
            Some((b, _)) if b >= x.0 => best,
            _ => Some(x),
        })
}

pub fn decide(
    probes: &[ProbeRecord],
    thresholds: &[f64],
    stabilized: Option<f64>,
    heuristic: bool,
    accept_heuristic: bool,
) -> (Verdict, String) {
    if heuristic && !accept_heuristic {
        return (
            Verdict::Inconclusive,
            "membership is heuristic (parabolic); pass --accept-heuristic-parabolic to evaluate it".into(),
        );
    }
    let top = thresholds.last().copied().unwrap_or(f64::INFINITY);
    if let Some((best, label)) = best_certified(probes) {
        if best > top {
            return (
                Verdict::UnboundedEvidence,
                format!("certified lower bound {best:.6} at probe {label} exceeds C = {top}"),
            );
        }
    }
    if let Some(rel) = stabilized {
        if rel <= STABILIZATION_TOL {
            return (Verdict::BoundedEvidence, format!("shadowing estimate stabilized (relative change {rel:.4})"));
        }
        return (Verdict::Inconclusive, format!("shadowing estimate not stabilized (relative change {rel:.4})"));
    }
    let reason = match best_certified(probes) {
        Some((best, _)) => {
            let passed: Vec<String> = thresholds.iter().filter(|&&t| best > t).map(|t| t.to_string()).collect();
            format!(
                "best certified lower bound {best:.6} stays below C = {top} (exceeds: [{}])",
                passed.join(", ")
            )
        }
        None => "no certified lower bound on the basin itself".into(),
    };
    (Verdict::Inconclusive, reason)
}
