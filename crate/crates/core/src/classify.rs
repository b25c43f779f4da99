//! Threshold reports for initial data and verdicts for finished runs.

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsSample;
use crate::error::{InlsError, Result};
use crate::evolve::HaltStatus;
use crate::field::{energy_from_parts, gradient_sq_integral, weighted_potential_integral, FieldState, SingularWeight};
use crate::groundstate::{trapping_bound, VariationalConstants};
use crate::model::{ModelParams, Sign};

/// Cutoffs used to turn a finite-horizon series into a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictThresholds {
    /// Scattering needs max/min kinetic below this.
    pub kinetic_ratio: f64,
    /// Scattering needs the last snorm window increment this many times
    /// below the peak increment.
    pub snorm_decay: f64,
    /// Scattering needs the last proxy increment below this fraction of the
    /// initial Ḣ¹ norm.
    pub proxy_tail: f64,
    /// Grow-up needs monotone kinetic growth by at least this factor.
    pub growup_factor: f64,
    /// Relative distance to E_W or c inside which data counts as
    /// threshold-boundary.
    pub boundary_tol: f64,
    /// Fewer checkpoints than this leave the run undetermined.
    pub min_samples: usize,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self {
            kinetic_ratio: 10.0,
            snorm_decay: 10.0,
            proxy_tail: 0.05,
            growup_factor: 4.0,
            boundary_tol: 1e-2,
            min_samples: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub e0: f64,
    /// ‖∇u₀‖².
    pub k0: f64,
    pub c: f64,
    pub e_w: f64,
    /// E0 < E_W and K0 < c, away from the boundary.
    pub subthreshold: bool,
    /// E0 < E_W and K0 ≥ c, away from the boundary.
    pub superthreshold: bool,
    /// E0 or K0 within `boundary_tol` of E_W or c.
    pub boundary: bool,
    /// Root of F(y) = E0 when 0 ≤ E0 ≤ E_W.
    pub y_star: Option<f64>,
    /// 1 − √(K0/c).
    pub delta_margin: f64,
}

/// Classifies `u0` against the ground-state thresholds. Defocusing data
/// carries no threshold, so both flags stay false.
pub fn threshold_report(
    u0: &FieldState,
    weight: &SingularWeight,
    consts: &VariationalConstants,
    params: &ModelParams,
    boundary_tol: f64,
) -> Result<ThresholdReport> {
    let k0 = gradient_sq_integral(u0);
    let p0 = weighted_potential_integral(u0, weight, params.alpha())?;
    let e0 = energy_from_parts(k0, p0, params);
    threshold_report_from(e0, k0, consts, params, boundary_tol)
}

pub fn threshold_report_from(
    e0: f64,
    k0: f64,
    consts: &VariationalConstants,
    params: &ModelParams,
    boundary_tol: f64,
) -> Result<ThresholdReport> {
    let (c, e_w) = (consts.c, consts.e_w);
    let focusing = params.sign() == Sign::Focusing;
    let boundary = focusing && ((e0 - e_w).abs() <= boundary_tol * e_w || (k0 - c).abs() <= boundary_tol * c);
    let below = focusing && !boundary && e0 < e_w;
    let y_star = if focusing && (0.0..=e_w).contains(&e0) {
        Some(trapping_bound(e0, consts, params.alpha())?)
    } else {
        None
    };
    Ok(ThresholdReport {
        e0,
        k0,
        c,
        e_w,
        subthreshold: below && k0 < c,
        superthreshold: below && k0 >= c,
        boundary,
        y_star,
        delta_margin: 1.0 - (k0 / c).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorResult {
    pub pass: bool,
    /// Absolute tolerance added to the bound.
    pub tolerance: f64,
    /// Signed slack at each checkpoint; negative entries are violations.
    pub margins: Vec<f64>,
}

fn energy_drift(samples: &[DiagnosticsSample]) -> f64 {
    let e0 = samples.first().map(|s| s.energy).unwrap_or(0.0);
    samples.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max)
}

fn check_series(samples: &[DiagnosticsSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(InlsError::InsufficientData("empty diagnostics series".into()));
    }
    if samples
        .iter()
        .any(|s| s.kinetic.is_nan() || s.energy.is_nan() || s.t.is_nan())
    {
        return Err(InlsError::InsufficientData("missing diagnostics columns".into()));
    }
    Ok(())
}

/// Kinetic stays below y* + tol, tol = 10× the observed energy drift + 1% of y*.
pub fn trapping_monitor(samples: &[DiagnosticsSample], report: &ThresholdReport) -> Result<MonitorResult> {
    let y = match (report.subthreshold, report.y_star) {
        (true, Some(y)) => y,
        _ => {
            return Err(InlsError::Precondition(
                "trapping monitor needs subthreshold data".into(),
            ))
        }
    };
    check_series(samples)?;
    let tolerance = 10.0 * energy_drift(samples) + 0.01 * y;
    let margins: Vec<f64> = samples.iter().map(|s| y + tolerance - s.kinetic).collect();
    Ok(MonitorResult {
        pass: margins.iter().all(|&m| m >= 0.0),
        tolerance,
        margins,
    })
}

/// Kinetic stays above c(1 − tol), tol = 10× the observed energy drift / c + 1%.
pub fn blowup_monitor(samples: &[DiagnosticsSample], report: &ThresholdReport) -> Result<MonitorResult> {
    if !(report.superthreshold || report.boundary) {
        return Err(InlsError::Precondition(
            "blow-up monitor needs superthreshold or threshold-boundary data".into(),
        ));
    }
    check_series(samples)?;
    let rel = 10.0 * energy_drift(samples) / report.c + 0.01;
    let floor = report.c * (1.0 - rel);
    let margins: Vec<f64> = samples.iter().map(|s| s.kinetic - floor).collect();
    Ok(MonitorResult {
        pass: margins.iter().all(|&m| m >= 0.0),
        tolerance: report.c * rel,
        margins,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum RunVerdict {
    /// `snorm_final` is absent when the scattering exponent is undefined (N ≤ 2).
    Scattering {
        snorm_final: Option<f64>,
        proxy_tail: Option<f64>,
    },
    BlowUp {
        t_estimate: f64,
    },
    /// `fitted_rate` is absent with too few checkpoints for a fit.
    GrowUp {
        fitted_rate: Option<f64>,
    },
    Undetermined {
        reason: String,
    },
}

impl RunVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            RunVerdict::Scattering { .. } => "Scattering",
            RunVerdict::BlowUp { .. } => "BlowUp",
            RunVerdict::GrowUp { .. } => "GrowUp",
            RunVerdict::Undetermined { .. } => "Undetermined",
        }
    }
}

/// Verdict from the diagnostics series and how the run ended.
pub fn classify_run(
    samples: &[DiagnosticsSample],
    status: &HaltStatus,
    t_end: f64,
    th: &VerdictThresholds,
) -> Result<RunVerdict> {
    check_series(samples)?;
    let last = samples.last().expect("non-empty");
    match status {
        s if s.is_blowup() => return Ok(RunVerdict::BlowUp { t_estimate: last.t }),
        HaltStatus::NumericalFailure => {
            return Ok(RunVerdict::Undetermined {
                reason: "numerical failure".into(),
            })
        }
        HaltStatus::ProbeHalt { reason } => {
            return Ok(RunVerdict::Undetermined {
                reason: format!("halted by probe: {reason}"),
            })
        }
        _ => {}
    }
    if samples.len() < th.min_samples {
        return Ok(RunVerdict::Undetermined {
            reason: format!("only {} checkpoints", samples.len()),
        });
    }
    let span = (samples[0].t - t_end).abs();
    if (last.t - t_end).abs() > 1e-9 * span.max(1.0) {
        return Ok(RunVerdict::Undetermined {
            reason: format!("run stopped at t = {} before t_end = {t_end}", last.t),
        });
    }

    let kinetic: Vec<f64> = samples.iter().map(|s| s.kinetic).collect();
    let k_max = kinetic.iter().cloned().fold(0.0, f64::max);
    let k_min = kinetic.iter().cloned().fold(f64::INFINITY, f64::min);
    let bounded = k_max == 0.0 || k_max < th.kinetic_ratio * k_min;

    let increments: Vec<f64> = samples.windows(2).map(|w| w[1].snorm_cum - w[0].snorm_cum).collect();
    let peak = increments.iter().cloned().fold(0.0, f64::max);
    let final_inc = *increments.last().unwrap_or(&0.0);
    let decayed = peak == 0.0 || final_inc * th.snorm_decay <= peak;
    let decayed = decayed || last.snorm_cum.is_nan();

    let proxy_tail = samples.iter().rev().find_map(|s| s.proxy);
    let norm0 = kinetic[0].sqrt();
    let proxy_ok = proxy_tail.is_none_or(|p| p <= th.proxy_tail * norm0);

    if bounded && decayed && proxy_ok {
        return Ok(RunVerdict::Scattering {
            snorm_final: (!last.snorm_cum.is_nan()).then_some(last.snorm_cum),
            proxy_tail,
        });
    }

    let monotone = kinetic.windows(2).all(|w| w[1] >= w[0]);
    if monotone && kinetic[0] > 0.0 && *kinetic.last().unwrap() >= th.growup_factor * kinetic[0] {
        let (t, sup) = running_sup_norm(samples);
        let fitted_rate = fit_slope(&t, &sup);
        return Ok(RunVerdict::GrowUp { fitted_rate });
    }

    let mut reasons = Vec::new();
    if !bounded {
        reasons.push(format!("kinetic max/min = {:.3}", k_max / k_min));
    }
    if !decayed {
        reasons.push(format!("snorm increments decayed only {:.3}x", peak / final_inc));
    }
    if !proxy_ok {
        reasons.push(format!(
            "proxy tail {:.3e} vs initial norm {:.3e}",
            proxy_tail.unwrap_or(0.0),
            norm0
        ));
    }
    Ok(RunVerdict::Undetermined {
        reason: reasons.join("; "),
    })
}

/// (T, sup_{t ≤ T} ‖∇u(t)‖) at checkpoints with T > t0.
pub fn running_sup_norm(samples: &[DiagnosticsSample]) -> (Vec<f64>, Vec<f64>) {
    let t0 = samples.first().map(|s| s.t).unwrap_or(0.0);
    let mut best = 0.0f64;
    let mut out = (Vec::new(), Vec::new());
    for s in samples {
        best = best.max(s.kinetic.sqrt());
        if s.t != t0 {
            out.0.push((s.t - t0).abs());
            out.1.push(best);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub fitted: f64,
    /// 2/(Nα − 4).
    pub predicted: f64,
}

pub fn predicted_rate(dimension: u32, alpha: f64) -> Result<f64> {
    let d = dimension as f64 * alpha - 4.0;
    if d.abs() < 1e-12 {
        return Err(InlsError::RateUndefined);
    }
    Ok(2.0 / d)
}

// least-squares slope of log y against log x
fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return None;
    }
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of log sup‖∇u‖ against log T, alongside the predicted 2/(Nα − 4).
pub fn growup_rate_fit(t: &[f64], sup: &[f64], dimension: u32, alpha: f64) -> Result<RateFit> {
    let predicted = predicted_rate(dimension, alpha)?;
    if t.len() < 10 || t.len() != sup.len() {
        return Err(InlsError::InsufficientData(format!(
            "rate fit needs at least 10 paired samples, got {} and {}",
            t.len(),
            sup.len()
        )));
    }
    if t.iter().chain(sup).any(|&v| !(v > 0.0)) {
        return Err(InlsError::Domain("rate fit needs positive samples".into()));
    }
    let fitted = fit_slope(t, sup).ok_or_else(|| InlsError::InsufficientData("all T values coincide".into()))?;
    Ok(RateFit { fitted, predicted })
}
