//! ZA-LMS as the small-`alpha` limit of l0-LMS.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{optimal_kappa, AttractionStrengths, Scenario};
use crate::error::{Error, Result};

/// Attraction range used to evaluate the `alpha -> 0` limit numerically.
pub fn za_limit_alpha() -> f64 {
    1e-5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZASteadyReport {
    pub rho: f64,
    /// Closed-form steady-state MSD.
    pub d_inf_za: f64,
    /// The same MSD through the quadratic in `y`.
    pub d_inf_quadratic: f64,
    /// Discriminant of the `omega` quadratic in the ZA limit.
    pub gamma: f64,
    /// Positive root of the quadratic in `y`.
    pub y: f64,
    /// Optimal `rho`, as `2 alpha kappa_opt` at vanishing `alpha`.
    pub rho_opt: f64,
}

/// Steady-state MSD of ZA-LMS with attraction weight `rho`.
pub fn za_steady_msd(
    len: usize,
    support: usize,
    mu: f64,
    rho: f64,
    px: f64,
    pv: f64,
) -> Result<ZASteadyReport> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rho must be >= 0, got {rho}"
        )));
    }
    let alpha = za_limit_alpha();
    let q = support as f64;
    let limit = Scenario {
        len,
        support,
        mu,
        alpha,
        px,
        pv,
        strengths: AttractionStrengths {
            g: 4.0 * alpha * alpha * q,
            g_prime: 0.0,
        },
        energy: q,
    };
    limit.check()?;
    let d = limit.deltas();
    let l = len as f64;
    let zeros = (len - support) as f64;
    let m = mu * px;
    let d0 = d.delta_0;

    let gamma = 8.0 * rho * rho * d.delta_q * d.delta_q * d0 * d0 / PI
        + 16.0 * m * d.delta_l * d0 * d0 * (rho * rho * (q + 1.0) + mu * m * pv);
    if gamma < 0.0 {
        return Err(Error::ParameterRange(format!(
            "rho = {rho} makes the discriminant negative ({gamma})"
        )));
    }
    let dl2 = d.delta_l * d.delta_l;
    let d_inf_za = -zeros * rho * gamma.sqrt() / ((2.0 * PI).sqrt() * m * m * dl2)
        + 2.0 * rho * rho * zeros * d0 * d.delta_q / (PI * m * m * dl2)
        + (rho * rho * (m * l + 2.0 * q * d0) + l * mu * m * m * pv) / (m * m * d.delta_l);

    // quadratic in y
    let qa = d.delta_l;
    let qb = zeros * rho * (2.0 * d0 / PI).sqrt();
    let qc = -((l - 2.0 * q) / (2.0 * PI) + q + 1.0) * d0 * rho * rho / m
        - d0 * d0 * rho * rho / (PI * m * m)
        - mu * pv * d0;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 || qc > 0.0 {
        return Err(Error::Internal(format!(
            "quadratic in y has no positive root (b={qb}, c={qc})"
        )));
    }
    let y = -2.0 * qc / (qb + disc.sqrt());
    let d_inf_quadratic =
        2.0 / m * (y * y - (PI * m + d0) / (2.0 * PI * m * m) * rho * rho) - pv / px;

    let b = limit.betas()?;
    let opt = optimal_kappa(&b, &d, len, mu, pv);
    let rho_opt = 2.0 * alpha * opt.kappa_opt;

    Ok(ZASteadyReport {
        rho,
        d_inf_za,
        d_inf_quadratic,
        gamma,
        y,
        rho_opt,
    })
}
