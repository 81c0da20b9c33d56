//! Constants shared by the steady-state and transient results.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::algorithms::l0_attractor;
use crate::error::{Error, Result};
use crate::quadrature::truncated_normal_even_expectation;

/// The four step-size constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSet {
    /// `2 - (L+2) mu Px`
    pub delta_l: f64,
    /// `2 - (Q+2) mu Px`
    pub delta_q: f64,
    /// `1 - mu Px`
    pub delta_0: f64,
    /// `2 - mu Px`
    pub delta_0_prime: f64,
}

pub fn deltas(len: usize, support: usize, mu: f64, px: f64) -> DeltaSet {
    let m = mu * px;
    DeltaSet {
        delta_l: 2.0 - (len as f64 + 2.0) * m,
        delta_q: 2.0 - (support as f64 + 2.0) * m,
        delta_0: 1.0 - m,
        delta_0_prime: 2.0 - m,
    }
}

/// Largest stable step size `2 / ((L+2) Px)`.
pub fn mu_max(len: usize, px: f64) -> f64 {
    2.0 / ((len as f64 + 2.0) * px)
}

/// Partition of tap indices by coefficient magnitude relative to `1/alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TapClassification {
    /// `|s_k| >= 1/alpha`
    pub large: Vec<usize>,
    /// `0 < |s_k| < 1/alpha`
    pub small: Vec<usize>,
    /// `s_k = 0`
    pub zero: Vec<usize>,
}

pub fn classify(s: &[f64], alpha: f64) -> TapClassification {
    let range = 1.0 / alpha;
    let mut out = TapClassification::default();
    for (k, &v) in s.iter().enumerate() {
        if v == 0.0 {
            out.zero.push(k);
        } else if v.abs() >= range {
            out.large.push(k);
        } else {
            out.small.push(k);
        }
    }
    out
}

/// Attracting strengths of the small coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AttractionStrengths {
    /// `G = sum g(s_k)^2` over small coefficients.
    pub g: f64,
    /// `G' = sum s_k g(s_k)` over small coefficients, never positive.
    pub g_prime: f64,
}

pub fn strengths_exact(s: &[f64], alpha: f64) -> AttractionStrengths {
    let range = 1.0 / alpha;
    s.iter().filter(|v| **v != 0.0 && v.abs() < range).fold(
        AttractionStrengths::default(),
        |acc, &v| {
            let g = l0_attractor(v, alpha);
            AttractionStrengths {
                g: acc.g + g * g,
                g_prime: acc.g_prime + v * g,
            }
        },
    )
}

/// Expected strengths when the `Q` non-zero coefficients are i.i.d.
/// `N(0, sigma_s^2)`.
pub fn strengths_expected(support: usize, sigma_s: f64, alpha: f64) -> AttractionStrengths {
    if support == 0 {
        return AttractionStrengths::default();
    }
    let q = support as f64;
    let range = 1.0 / alpha;
    let g_sq = truncated_normal_even_expectation(
        |t| {
            let g = 2.0 * alpha * alpha * t.abs() - 2.0 * alpha;
            g * g
        },
        range,
        sigma_s,
    );
    let cross = truncated_normal_even_expectation(
        |t| 2.0 * alpha * alpha * t * t - 2.0 * alpha * t.abs(),
        range,
        sigma_s,
    );
    AttractionStrengths {
        g: q * g_sq,
        g_prime: q * cross,
    }
}

/// Constants of the steady-state MSD and the optimal `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSet {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    /// `beta1 - beta2`, evaluated without cancellation.
    pub gap: f64,
}

pub fn betas(sc: &Scenario) -> Result<BetaSet> {
    let d = sc.deltas();
    let m = sc.mu * sc.px;
    let a2 = sc.alpha * sc.alpha;
    let zeros = sc.zeros();
    let g = sc.strengths.g;

    let beta0 = m * d.delta_0_prime * d.delta_l * g
        + 4.0 * a2 * d.delta_q * (m * d.delta_l + d.delta_0 * d.delta_q / PI);
    let beta1 = (d.delta_0_prime * g
        + 4.0 * zeros * a2 * (m + 2.0 * d.delta_0 * d.delta_q / (PI * d.delta_l)))
        / (m * m * d.delta_l);
    let beta2 =
        4.0 * sc.alpha * zeros / (m * m * d.delta_l * d.delta_l) * (d.delta_0 * beta0 / PI).sqrt();
    if beta0 <= 0.0 {
        return Err(Error::DegenerateParameter(format!(
            "beta0 = {beta0} leaves beta3 undefined"
        )));
    }
    let beta3 = 2.0 * sc.mu * m * m * sc.pv * d.delta_0 * d.delta_l / beta0;
    // beta1 - beta2 = eta1 ((sqrt(eta2) - sqrt(eta3))^2 + eta4)
    let e = etas(sc);
    let root_gap = e.eta2.sqrt() - e.eta3.sqrt();
    let gap = e.eta1 * (root_gap * root_gap + e.eta4);
    Ok(BetaSet {
        beta0,
        beta1,
        beta2,
        beta3,
        gap,
    })
}

/// Constants used by the sparsity and step-size monotonicity results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaSet {
    pub eta0: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub eta4: f64,
    pub eta5: f64,
    pub eta6: f64,
}

/// `eta0`..`eta6`. `eta5` is `4 alpha^2 mu Px L + 2 G`, the form that makes
/// the sparse approximation of the minimum MSD follow from `beta1`, `beta2`.
pub fn etas(sc: &Scenario) -> EtaSet {
    let d = sc.deltas();
    let m = sc.mu * sc.px;
    let a2 = sc.alpha * sc.alpha;
    let l = sc.len as f64;
    let zeros = sc.zeros();
    let g = sc.strengths.g;
    let beta0 = m * d.delta_0_prime * d.delta_l * g
        + 4.0 * a2 * d.delta_q * (m * d.delta_l + d.delta_0 * d.delta_q / PI);
    EtaSet {
        eta0: 16.0 * sc.pv * a2 * d.delta_0 * d.delta_0
            / (PI * sc.mu * sc.px * sc.px * d.delta_l.powi(3)),
        eta1: 1.0 / (m * m * d.delta_l),
        eta2: zeros * beta0 / (d.delta_l * d.delta_q),
        eta3: 4.0 * a2 * zeros * d.delta_0 * d.delta_q / (PI * d.delta_l),
        eta4: g * d.delta_0_prime * d.delta_l / d.delta_q,
        eta5: 4.0 * a2 * m * l + 2.0 * g,
        eta6: 16.0 * a2 * l / (PI * d.delta_l),
    }
}
