//! Steady-state mean and mean-square behaviour.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    assumption_warnings, AssumptionWarning, BetaSet, DeltaSet, Scenario, SignalModel, SystemProfile,
};
use crate::algorithms::{l0_attractor, AlgoParams, Variant};
use crate::error::{Error, Result};
use crate::theory::constants::mu_max;

/// Relative agreement demanded between the two steady-state MSD forms.
pub const FORM_TOLERANCE: f64 = 1e-9;

/// LMS steady-state MSD, or its value after `n` iterations from zero
/// weights when `n` is given.
pub fn lms_theory(
    len: usize,
    mu: f64,
    px: f64,
    pv: f64,
    energy: f64,
    n: Option<u64>,
) -> Result<f64> {
    let mm = mu_max(len, px);
    if !(mu > 0.0 && mu < mm) {
        return Err(Error::Stability { mu, mu_max: mm });
    }
    let delta_l = 2.0 - (len as f64 + 2.0) * mu * px;
    let d_inf = mu * pv * len as f64 / delta_l;
    Ok(match n {
        None => d_inf,
        Some(n) => {
            let rate = 1.0 - mu * px * delta_l;
            d_inf + (energy - d_inf) * powu(rate, n)
        }
    })
}

pub(crate) fn powu(x: f64, n: u64) -> f64 {
    if n <= i32::MAX as u64 {
        x.powi(n as i32)
    } else {
        x.powf(n as f64)
    }
}

/// Steady-state mean misalignment: `kappa g(s_k) / (mu Px)` on small
/// coefficients, zero elsewhere.
pub fn steady_bias(s: &[f64], params: &AlgoParams, px: f64) -> Vec<f64> {
    if params.variant != Variant::L0Lms {
        return vec![0.0; s.len()];
    }
    let ratio = 2.0 * params.alpha * params.alpha * params.kappa / (params.mu * px);
    if ratio >= 0.1 {
        log::warn!("2 alpha^2 kappa / (mu Px) = {ratio:.3}; steady bias formula loses accuracy");
    }
    let range = 1.0 / params.alpha;
    s.iter()
        .map(|&v| {
            if v != 0.0 && v.abs() < range {
                params.kappa * l0_attractor(v, params.alpha) / (params.mu * px)
            } else {
                0.0
            }
        })
        .collect()
}

/// RMS deviation `omega` of a zero-coefficient tap in steady state: the
/// non-negative root of
/// `2 mu Px D0 DL w^2 + 8 alpha kappa D0 DQ w / sqrt(2 pi) - 2 mu^2 Px Pv D0 - 4 alpha^2 kappa^2 DQ - kappa^2 D0' G = 0`.
pub fn solve_omega(sc: &Scenario, kappa: f64) -> Result<f64> {
    sc.check()?;
    let d = sc.deltas();
    let m = sc.mu * sc.px;
    let a = 2.0 * m * d.delta_0 * d.delta_l;
    let b = 8.0 * sc.alpha * kappa * d.delta_0 * d.delta_q / (2.0 * PI).sqrt();
    let c = -2.0 * sc.mu * m * sc.pv * d.delta_0
        - 4.0 * sc.alpha * sc.alpha * kappa * kappa * d.delta_q
        - kappa * kappa * d.delta_0_prime * sc.strengths.g;
    let disc = b * b - 4.0 * a * c;
    if !(a > 0.0 && c <= 0.0 && disc >= 0.0) {
        return Err(Error::Internal(format!(
            "omega quadratic has no admissible root (a={a}, b={b}, c={c})"
        )));
    }
    // (-b + sqrt(disc)) / 2a written without cancellation
    let omega = -2.0 * c / (b + disc.sqrt());
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Internal(format!(
            "omega root {omega} is not positive"
        )));
    }
    Ok(omega)
}

/// Steady-state MSD assembled from the per-category balance equations,
/// given `omega`.
pub fn omega_form_msd(sc: &Scenario, kappa: f64, omega: f64) -> f64 {
    let d = sc.deltas();
    let m = sc.mu * sc.px;
    2.0 * sc.zeros() * d.delta_0 * omega * omega / d.delta_q
        + sc.support as f64 * sc.mu * sc.pv / d.delta_q
        + kappa * kappa * d.delta_0_prime * sc.strengths.g / (m * m * d.delta_q)
}

/// `D_LMS + beta1 kappa^2 - beta2 kappa sqrt(kappa^2 + beta3)`, with the
/// last two terms combined as
/// `kappa ((beta1^2 - beta2^2) kappa^2 - beta2^2 beta3) / (beta1 kappa + beta2 sqrt(kappa^2 + beta3))`.
pub(crate) fn beta_form_msd(d_lms: f64, b: &BetaSet, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return d_lms;
    }
    let r = (kappa * kappa + b.beta3).sqrt();
    let den = b.beta1 * kappa + b.beta2 * r;
    if den == 0.0 {
        return d_lms;
    }
    let num = b.gap * (b.beta1 + b.beta2) * kappa * kappa - b.beta2 * b.beta2 * b.beta3;
    d_lms + kappa * num / den
}

/// Optimal `kappa`, the minimum MSD it reaches, and the largest `kappa`
/// for which l0-LMS still beats LMS in steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaOptimum {
    pub kappa_opt: f64,
    pub d_min: f64,
    pub kappa_outperform_bound: f64,
}

pub fn optimal_kappa(b: &BetaSet, d: &DeltaSet, len: usize, mu: f64, pv: f64) -> KappaOptimum {
    let d_lms = mu * pv * len as f64 / d.delta_l;
    if b.beta2 <= 0.0 || b.gap <= 0.0 {
        // nothing to gain: the additional term is non-negative for every kappa
        return KappaOptimum {
            kappa_opt: 0.0,
            d_min: d_lms,
            kappa_outperform_bound: 0.0,
        };
    }
    let diff = b.gap;
    let sum = b.beta1 + b.beta2;
    let r = (sum / diff).powf(0.25);
    let kappa_opt = 0.5 * b.beta3.sqrt() * (r - 1.0 / r);
    let root = (diff * sum).sqrt();
    // beta3 (sqrt(b1^2 - b2^2) - b1) / 2 without cancellation
    let d_min = d_lms - 0.5 * b.beta3 * b.beta2 * b.beta2 / (b.beta1 + root);
    let kappa_outperform_bound = b.beta2 * (b.beta3 / (diff * sum)).sqrt();
    KappaOptimum {
        kappa_opt,
        d_min,
        kappa_outperform_bound,
    }
}

/// Steady-state summary for one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateReport {
    pub kappa: f64,
    pub omega: f64,
    /// MSD from the beta form.
    pub d_inf: f64,
    /// MSD from the omega form, kept for cross-checking.
    pub d_inf_omega_form: f64,
    /// Per-tap steady mean misalignment; empty for expected-strength profiles.
    pub bias: Vec<f64>,
    pub kappa_opt: f64,
    pub d_min: f64,
    pub kappa_outperform_bound: f64,
    pub d_lms: f64,
    pub betas: BetaSet,
    pub deltas: DeltaSet,
    pub warnings: Vec<AssumptionWarning>,
}

/// Steady-state MSD of l0-LMS. The beta form and the omega form are both
/// evaluated; a relative gap above [`FORM_TOLERANCE`] is reported as an
/// error.
pub fn l0_steady_msd(
    profile: &SystemProfile,
    params: &AlgoParams,
    signal: &SignalModel,
) -> Result<SteadyStateReport> {
    if params.variant != Variant::L0Lms && params.variant != Variant::Lms {
        return Err(Error::Precondition(format!(
            "l0 steady-state theory does not cover {}",
            params.variant
        )));
    }
    let kappa = if params.variant == Variant::Lms {
        0.0
    } else {
        params.kappa
    };
    if kappa.is_nan() || kappa < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kappa must be >= 0, got {kappa}"
        )));
    }
    let sc = Scenario::new(profile, params, signal)?;
    let d = sc.deltas();
    let b = sc.betas()?;
    let d_lms = sc.lms_msd();
    let omega = solve_omega(&sc, kappa)?;
    let d_inf = beta_form_msd(d_lms, &b, kappa);
    let d_inf_omega_form = omega_form_msd(&sc, kappa, omega);
    let rel = (d_inf - d_inf_omega_form).abs() / d_inf_omega_form.abs();
    if rel.is_nan() || rel > FORM_TOLERANCE {
        return Err(Error::InconsistentForms {
            what: "steady-state MSD (beta form vs omega form)",
            a: d_inf,
            b: d_inf_omega_form,
            rel,
        });
    }
    let opt = optimal_kappa(&b, &d, sc.len, sc.mu, sc.pv);
    let bias = match &profile.coefficients {
        Some(s) => steady_bias(s, &AlgoParams { kappa, ..*params }, signal.px),
        None => Vec::new(),
    };
    Ok(SteadyStateReport {
        kappa,
        omega,
        d_inf,
        d_inf_omega_form,
        bias,
        kappa_opt: opt.kappa_opt,
        d_min: opt.d_min,
        kappa_outperform_bound: opt.kappa_outperform_bound,
        d_lms,
        betas: b,
        deltas: d,
        warnings: assumption_warnings(&AlgoParams { kappa, ..*params }, signal),
    })
}

/// Which approximation of the minimum MSD to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApproxMode {
    /// Sparse system with small step size (`Q << L`, `(Q+2) mu Px << 2`).
    Sparse,
    /// All coefficients zero.
    Q0,
}

/// Returns the sparse-regime warning when `Q/L` or `(Q+2) mu Px / 2`
/// exceeds 0.1.
pub fn sparse_regime_warning(sc: &Scenario) -> Option<AssumptionWarning> {
    let support_ratio = sc.support as f64 / sc.len as f64;
    let step_ratio = (sc.support as f64 + 2.0) * sc.mu * sc.px / 2.0;
    if support_ratio > 0.1 || step_ratio > 0.1 {
        Some(AssumptionWarning::NotSparse {
            support_ratio,
            step_ratio,
        })
    } else {
        None
    }
}

/// Simplified minimum steady-state MSD.
pub fn approx_min_msd(mode: ApproxMode, sc: &Scenario) -> Result<f64> {
    sc.check()?;
    let d = sc.deltas();
    let d_lms = sc.lms_msd();
    match mode {
        ApproxMode::Sparse => {
            if let Some(w) = sparse_regime_warning(sc) {
                log::warn!("{w}");
            }
            let e = sc.etas();
            let l = sc.len as f64;
            let a2 = sc.alpha * sc.alpha;
            let root = (e.eta5 * e.eta5 + 32.0 * a2 * l * sc.strengths.g / PI).sqrt();
            Ok(d_lms * (1.0 - e.eta6 / (e.eta5 + e.eta6 + root)))
        }
        ApproxMode::Q0 => {
            if sc.support != 0 {
                return Err(Error::Precondition(format!(
                    "Q0 approximation needs Q = 0, got Q = {}",
                    sc.support
                )));
            }
            let m = sc.mu * sc.px;
            let d0sq = d.delta_0 * d.delta_0;
            Ok(d_lms
                - 2.0 * sc.mu * sc.pv * sc.len as f64 * d0sq
                    / (2.0 * d.delta_l * d0sq + PI * m * d.delta_l * d.delta_l))
        }
    }
}
