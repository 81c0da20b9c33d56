//! Transient (learning-curve) model.
//!
//! The MSD `D_n` and the zero-tap deviation sum `Omega_n` obey the coupled
//! first-order recursion
//!
//! ```text
//! [D_{n+1}; Omega_{n+1}] = A [D_n; Omega_n] + b_n,   [D_0; Omega_0] = [||s||^2; 0]
//! ```
//!
//! with `b_n = [b00 + b01 * Delta_0^n; b1]`. Its solution is the sum of
//! three geometric modes on top of the steady-state MSD:
//! `D_n = c1 l1^n + c2 l2^n + c3 l3^n + D_inf`, `l3 = Delta_0`.
//!
//! `lambda1` is the eigenvalue of `A` that continues the LMS mode
//! `1 - mu Px Delta_L` (the larger one) and `lambda2` the other, so that
//! `c2 = c3 = 0` when `kappa = 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::steady::{l0_steady_msd, powu, solve_omega};
use super::{Scenario, SignalModel, SystemProfile, TapClassification};
use crate::algorithms::{l0_attractor, AlgoParams, Variant};
use crate::error::{Error, Result};

/// Eigenvalues closer than this are treated as confluent.
pub const SPECTRUM_GAP: f64 = 1e-12;
/// Largest acceptable condition number of the initial-value system.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceModel {
    pub a00: f64,
    pub a01: f64,
    pub a10: f64,
    pub a11: f64,
    pub b00_hat: f64,
    pub b01_hat: f64,
    pub b1_hat: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub d_inf: f64,
    /// Initial MSD `||s||^2`.
    pub d0: f64,
    pub omega: f64,
    /// Condition number of the system that fixes `c1`, `c2`.
    pub condition: f64,
}

impl ConvergenceModel {
    /// Closed-form MSD after `n` iterations.
    pub fn msd(&self, n: u64) -> f64 {
        self.c1 * powu(self.lambda1, n)
            + self.c2 * powu(self.lambda2, n)
            + self.c3 * powu(self.lambda3, n)
            + self.d_inf
    }

    /// Learning curve for `n = 0..len`.
    pub fn curve(&self, len: usize) -> Vec<f64> {
        (0..len as u64).map(|n| self.msd(n)).collect()
    }

    /// `(lambda_min, lambda_max)` of `A`.
    pub fn eigen_range(&self) -> (f64, f64) {
        (
            self.lambda1.min(self.lambda2),
            self.lambda1.max(self.lambda2),
        )
    }
}

struct Pieces {
    sc: Scenario,
    kappa: f64,
    omega: f64,
    a: [[f64; 2]; 2],
    b00: f64,
    b01: f64,
    b1: f64,
}

fn pieces(profile: &SystemProfile, params: &AlgoParams, signal: &SignalModel) -> Result<Pieces> {
    let sc = Scenario::new(profile, params, signal)?;
    let kappa = match params.variant {
        Variant::L0Lms => params.kappa,
        Variant::Lms => 0.0,
        other => {
            return Err(Error::Precondition(format!(
                "transient theory does not cover {other}"
            )))
        }
    };
    let omega = solve_omega(&sc, kappa)?;
    let d = sc.deltas();
    let m = sc.mu * sc.px;
    let alpha = sc.alpha;
    let zeros = sc.zeros();
    let g = sc.strengths.g;
    let gp = sc.strengths.g_prime;
    let drive = (8.0 / PI).sqrt() * alpha * kappa / omega * d.delta_0;
    let a = [
        [1.0 - m * d.delta_l, -drive],
        [zeros * m * m, 1.0 - 2.0 * m * d.delta_0 - drive],
    ];
    let zero_tap =
        4.0 * alpha * alpha * kappa * kappa - (8.0 / PI).sqrt() * alpha * kappa * omega * d.delta_0;
    let b00 = sc.len as f64 * sc.mu * m * sc.pv
        + zeros * zero_tap
        + kappa * kappa * d.delta_0_prime * g / m;
    let b01 = -2.0 * kappa * d.delta_0 * (kappa * g / m + gp);
    let b1 = zeros * (sc.mu * m * sc.pv + zero_tap);
    Ok(Pieces {
        sc,
        kappa,
        omega,
        a,
        b00,
        b01,
        b1,
    })
}

/// Builds the transient model and its closed-form coefficients.
pub fn convergence_model(
    profile: &SystemProfile,
    params: &AlgoParams,
    signal: &SignalModel,
) -> Result<ConvergenceModel> {
    let p = pieces(profile, params, signal)?;
    let [[a00, a01], [a10, a11]] = p.a;
    let d = p.sc.deltas();
    let m = p.sc.mu * p.sc.px;

    let tr = a00 + a11;
    let disc = ((a00 - a11) * (a00 - a11) + 4.0 * a01 * a10).max(0.0);
    let lambda1 = 0.5 * (tr + disc.sqrt());
    let lambda2 = 0.5 * (tr - disc.sqrt());
    let lambda3 = d.delta_0;
    if (lambda1 - lambda2).abs() < SPECTRUM_GAP {
        return Err(Error::DegenerateSpectrum(format!(
            "lambda1 = lambda2 = {lambda1}"
        )));
    }
    for (name, l) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if (l - lambda3).abs() < SPECTRUM_GAP {
            return Err(Error::DegenerateSpectrum(format!("{name} = lambda3 = {l}")));
        }
    }

    let steady = l0_steady_msd(profile, params, signal)?;
    let d_inf = steady.d_inf;

    // fixed point of the recursion must agree with the steady-state theory
    let i_minus_det = (1.0 - a00) * (1.0 - a11) - a01 * a10;
    let fixed = ((1.0 - a11) * p.b00 + a01 * p.b1) / i_minus_det;
    if (fixed - d_inf).abs() > 1e-8 * d_inf.abs() {
        return Err(Error::Internal(format!(
            "recursion fixed point {fixed} disagrees with steady-state MSD {d_inf}"
        )));
    }

    let det_l3 = (lambda3 - a00) * (lambda3 - a11) - a01 * a10;
    let c3 = -2.0
        * p.kappa
        * d.delta_0
        * (m - 2.0 * m * m + (8.0 / PI).sqrt() * p.sc.alpha * p.kappa / p.omega * d.delta_0)
        / (m * det_l3)
        * (p.kappa * p.sc.strengths.g + m * p.sc.strengths.g_prime);

    let d0 = p.sc.energy;
    let d1 = a00 * d0 + p.b00 + p.b01;
    // [1 1; l1 l2] [c1; c2] = [r0; r1]
    let r0 = d0 - d_inf - c3;
    let r1 = d1 - d_inf - c3 * lambda3;
    let gap = lambda2 - lambda1;
    let c1 = (lambda2 * r0 - r1) / gap;
    let c2 = (r1 - lambda1 * r0) / gap;
    // 1-norm condition number of [1 1; l1 l2]
    let norm = 1.0 + lambda1.abs().max(lambda2.abs());
    let inv_norm = (lambda1.abs() + lambda2.abs()).max(2.0) / gap.abs();
    let condition = norm * inv_norm;
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned(condition));
    }

    Ok(ConvergenceModel {
        a00,
        a01,
        a10,
        a11,
        b00_hat: p.b00,
        b01_hat: p.b01,
        b1_hat: p.b1,
        lambda1,
        lambda2,
        lambda3,
        c1,
        c2,
        c3,
        d_inf,
        d0,
        omega: p.omega,
        condition,
    })
}

/// Iterates the coupled recursion from `(||s||^2, 0)` and returns
/// `(D_n, Omega_n)` for `n = 0..=n_max`.
pub fn moment_recursion(
    profile: &SystemProfile,
    params: &AlgoParams,
    signal: &SignalModel,
    n_max: usize,
) -> Result<Vec<(f64, f64)>> {
    let p = pieces(profile, params, signal)?;
    let d = p.sc.deltas();
    let m = p.sc.mu * p.sc.px;
    let g = p.sc.strengths.g;
    let gp = p.sc.strengths.g_prime;
    let kappa = p.kappa;
    let static_part = p.b00 - kappa * kappa * d.delta_0_prime * g / m;

    let mut out = Vec::with_capacity(n_max + 1);
    let (mut dn, mut om) = (p.sc.energy, 0.0);
    let mut decay = d.delta_0; // Delta_0^{n+1}
    out.push((dn, om));
    for _ in 0..n_max {
        let b0 = static_part + kappa * kappa * (d.delta_0_prime - 2.0 * decay) * g / m
            - 2.0 * kappa * decay * gp;
        let next_d = p.a[0][0] * dn + p.a[0][1] * om + b0;
        let next_o = p.a[1][0] * dn + p.a[1][1] * om + p.b1;
        dn = next_d;
        om = next_o;
        decay *= d.delta_0;
        out.push((dn, om));
    }
    Ok(out)
}

/// Mean misalignment of a small-coefficient tap after `n` iterations from
/// zero weights.
pub fn sc_mean_curve(s_k: f64, n: u64, mu: f64, kappa: f64, alpha: f64, px: f64) -> f64 {
    let m = mu * px;
    let kg = kappa * l0_attractor(s_k, alpha);
    kg / m - (m * s_k + kg) / m * powu(1.0 - m, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelerationReport {
    /// `mu_max / 2 < mu < mu_max`
    pub sufficient_mu: bool,
    /// No small coefficients.
    pub sufficient_cs_empty: bool,
    /// Slowest active l0-LMS mode decays faster than the LMS mode.
    pub actual_faster: bool,
    pub l0_rate: f64,
    pub lms_rate: f64,
}

/// Compares the asymptotic convergence rate with LMS.
pub fn acceleration_check(
    model: &ConvergenceModel,
    params: &AlgoParams,
    signal: &SignalModel,
    classification: &TapClassification,
) -> AccelerationReport {
    let len = classification.large.len() + classification.small.len() + classification.zero.len();
    let mm = super::mu_max(len, signal.px);
    let d = super::deltas(len, 0, params.mu, signal.px);
    let lms_rate = 1.0 - params.mu * signal.px * d.delta_l;
    let scale = model.c1.abs().max(model.c2.abs()).max(model.c3.abs());
    let active = |c: f64| c.abs() > 1e-12 * scale;
    let l0_rate = [
        (model.c1, model.lambda1),
        (model.c2, model.lambda2),
        (model.c3, model.lambda3),
    ]
    .iter()
    .filter(|(c, _)| active(*c))
    .map(|(_, l)| l.abs())
    .fold(0.0, f64::max);
    AccelerationReport {
        sufficient_mu: params.mu > 0.5 * mm && params.mu < mm,
        sufficient_cs_empty: classification.small.is_empty(),
        actual_faster: l0_rate < lms_rate,
        l0_rate,
        lms_rate,
    }
}
