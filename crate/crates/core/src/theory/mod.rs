//! Closed-form mean-square theory of l0-LMS.
//!
//! The theory is organised around a [`Scenario`]: filter length `L`,
//! support size `Q`, step size, attraction range, signal powers and the
//! attracting strengths of the unknown system. The attraction weight
//! `kappa` is kept separate because most results are studied as functions
//! of it.

mod constants;
mod steady;
mod transient;
mod za;

pub use constants::{
    betas, classify, deltas, etas, mu_max, strengths_exact, strengths_expected,
    AttractionStrengths, BetaSet, DeltaSet, EtaSet, TapClassification,
};
pub use steady::{
    approx_min_msd, l0_steady_msd, lms_theory, omega_form_msd, optimal_kappa, solve_omega,
    steady_bias, ApproxMode, KappaOptimum, SteadyStateReport,
};
pub use transient::{
    acceleration_check, convergence_model, moment_recursion, sc_mean_curve, AccelerationReport,
    ConvergenceModel,
};
pub use za::{za_limit_alpha, za_steady_msd, ZASteadyReport};

use serde::{Deserialize, Serialize};

use crate::algorithms::{AlgoParams, SparseSystem};
use crate::error::{Error, Result};

/// How an SNR in dB is turned into a noise power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SnrConvention {
    /// `Pv = Px * ||s||^2 * 10^(-SNR/10)`, with `||s||^2` replaced by its
    /// expectation `Q sigma_s^2` for random systems.
    #[default]
    #[serde(rename = "OUTPUT_REFERRED")]
    OutputReferred,
    /// `Pv = Px * 10^(-SNR/10)`.
    #[serde(rename = "INPUT_REFERRED")]
    InputReferred,
}

impl SnrConvention {
    pub fn noise_power(self, px: f64, snr_db: f64, signal_energy: f64) -> f64 {
        let ratio = 10f64.powf(-snr_db / 10.0);
        match self {
            SnrConvention::OutputReferred => px * signal_energy * ratio,
            SnrConvention::InputReferred => px * ratio,
        }
    }
}

/// Input and noise powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    pub px: f64,
    pub pv: f64,
    pub snr_db: Option<f64>,
    pub snr_convention: SnrConvention,
}

impl SignalModel {
    pub fn new(px: f64, pv: f64) -> Result<Self> {
        let m = Self {
            px,
            pv,
            snr_db: None,
            snr_convention: SnrConvention::OutputReferred,
        };
        m.validate(None)?;
        Ok(m)
    }

    /// Derives `Pv` from an SNR. `signal_energy` is `||s||^2` (or its
    /// expectation) and only matters for the output-referred convention.
    pub fn from_snr(
        px: f64,
        snr_db: f64,
        convention: SnrConvention,
        signal_energy: f64,
    ) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "snr_db must be finite, got {snr_db}"
            )));
        }
        let m = Self {
            px,
            pv: convention.noise_power(px, snr_db, signal_energy),
            snr_db: Some(snr_db),
            snr_convention: convention,
        };
        m.validate(Some(signal_energy))?;
        Ok(m)
    }

    /// Checks positivity and, when an SNR is recorded and the signal
    /// energy is known, that the stored `Pv` matches it.
    pub fn validate(&self, signal_energy: Option<f64>) -> Result<()> {
        if !(self.px.is_finite() && self.px > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Px must be > 0, got {}",
                self.px
            )));
        }
        if !(self.pv.is_finite() && self.pv > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Pv must be > 0, got {}",
                self.pv
            )));
        }
        if let (Some(snr), Some(energy)) = (self.snr_db, signal_energy) {
            let expected = self.snr_convention.noise_power(self.px, snr, energy);
            if (expected - self.pv).abs() > 1e-12 * expected.abs() {
                return Err(Error::InvalidParameter(format!(
                    "Pv {} does not match SNR {} dB ({:?} gives {})",
                    self.pv, snr, self.snr_convention, expected
                )));
            }
        }
        Ok(())
    }
}

/// What the closed forms need to know about the unknown system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemProfile {
    /// Filter length `L`.
    pub len: usize,
    /// Number of non-zero coefficients `Q`.
    pub support: usize,
    /// `||s||^2`, the initial MSD from zero weights.
    pub energy: f64,
    /// Attraction range the strengths were evaluated for.
    pub alpha: f64,
    pub strengths: AttractionStrengths,
    /// Present when the profile comes from a concrete system.
    pub coefficients: Option<Vec<f64>>,
}

impl SystemProfile {
    /// Profile of a concrete system.
    pub fn exact(system: &SparseSystem, alpha: f64) -> Self {
        Self {
            len: system.len(),
            support: system.support(),
            energy: system.energy(),
            alpha,
            strengths: strengths_exact(&system.s, alpha),
            coefficients: Some(system.s.clone()),
        }
    }

    /// Profile of a random system whose `Q` non-zero entries are
    /// `N(0, sigma_s^2)`; strengths and energy are expectations.
    pub fn expected(len: usize, support: usize, sigma_s: f64, alpha: f64) -> Result<Self> {
        if support > len {
            return Err(Error::Precondition(format!(
                "Q = {support} exceeds L = {len}"
            )));
        }
        if !(sigma_s > 0.0 && alpha > 0.0) {
            return Err(Error::InvalidParameter(
                "sigma_s and alpha must be positive".into(),
            ));
        }
        Ok(Self {
            len,
            support,
            energy: support as f64 * sigma_s * sigma_s,
            alpha,
            strengths: strengths_expected(support, sigma_s, alpha),
            coefficients: None,
        })
    }

    /// Profile with caller-supplied strengths.
    pub fn with_strengths(
        len: usize,
        support: usize,
        energy: f64,
        alpha: f64,
        strengths: AttractionStrengths,
    ) -> Result<Self> {
        if support > len {
            return Err(Error::Precondition(format!(
                "Q = {support} exceeds L = {len}"
            )));
        }
        Ok(Self {
            len,
            support,
            energy,
            alpha,
            strengths,
            coefficients: None,
        })
    }
}

/// Everything the closed forms need apart from `kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub len: usize,
    pub support: usize,
    pub mu: f64,
    pub alpha: f64,
    pub px: f64,
    pub pv: f64,
    pub strengths: AttractionStrengths,
    pub energy: f64,
}

impl Scenario {
    pub fn new(profile: &SystemProfile, params: &AlgoParams, signal: &SignalModel) -> Result<Self> {
        if (profile.alpha - params.alpha).abs() > 1e-12 * profile.alpha.abs() {
            return Err(Error::Precondition(format!(
                "profile strengths were evaluated for alpha = {}, parameters use alpha = {}",
                profile.alpha, params.alpha
            )));
        }
        let sc = Self {
            len: profile.len,
            support: profile.support,
            mu: params.mu,
            alpha: params.alpha,
            px: signal.px,
            pv: signal.pv,
            strengths: profile.strengths,
            energy: profile.energy,
        };
        sc.check()?;
        Ok(sc)
    }

    /// Validates dimensions and the stability condition `0 < mu < mu_max`.
    pub fn check(&self) -> Result<()> {
        if self.len == 0 {
            return Err(Error::Precondition("L must be >= 1".into()));
        }
        if self.support > self.len {
            return Err(Error::Precondition(format!(
                "Q = {} exceeds L = {}",
                self.support, self.len
            )));
        }
        if !(self.px > 0.0 && self.pv > 0.0 && self.alpha > 0.0) {
            return Err(Error::InvalidParameter(
                "Px, Pv and alpha must be positive".into(),
            ));
        }
        let mm = mu_max(self.len, self.px);
        if !(self.mu > 0.0 && self.mu < mm) {
            return Err(Error::Stability {
                mu: self.mu,
                mu_max: mm,
            });
        }
        Ok(())
    }

    pub fn deltas(&self) -> DeltaSet {
        deltas(self.len, self.support, self.mu, self.px)
    }

    pub fn betas(&self) -> Result<BetaSet> {
        betas(self)
    }

    pub fn etas(&self) -> EtaSet {
        etas(self)
    }

    /// LMS steady-state MSD `mu Pv L / Delta_L`.
    pub fn lms_msd(&self) -> f64 {
        self.mu * self.pv * self.len as f64 / self.deltas().delta_l
    }

    /// Number of zero taps `L - Q` as a float.
    pub(crate) fn zeros(&self) -> f64 {
        (self.len - self.support) as f64
    }
}

/// Conditions under which the analysis is known to lose accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AssumptionWarning {
    /// `2 alpha^2 kappa / (mu Px)` is not small.
    LargeKappa { ratio: f64 },
    /// SNR below 30 dB.
    LowSnr { snr_db: f64 },
    /// Sparse-system approximation used outside `Q << L`, `(Q+2) mu Px << 2`.
    NotSparse { support_ratio: f64, step_ratio: f64 },
}

impl std::fmt::Display for AssumptionWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AssumptionWarning::LargeKappa { ratio } => {
                write!(f, "2 alpha^2 kappa / (mu Px) = {ratio:.3} is not small")
            }
            AssumptionWarning::LowSnr { snr_db } => {
                write!(f, "SNR {snr_db} dB is below 30 dB; expected theory/simulation gap")
            }
            AssumptionWarning::NotSparse {
                support_ratio,
                step_ratio,
            } => write!(
                f,
                "sparse approximation outside its regime (Q/L = {support_ratio:.3}, (Q+2) mu Px / 2 = {step_ratio:.3})"
            ),
        }
    }
}

const GUARD_RATIO: f64 = 0.1;
const LOW_SNR_DB: f64 = 30.0;

/// Guardrail checks on the small-kappa and high-SNR assumptions. Each
/// warning is also logged.
pub fn assumption_warnings(params: &AlgoParams, signal: &SignalModel) -> Vec<AssumptionWarning> {
    let mut out = Vec::new();
    let ratio = 2.0 * params.alpha * params.alpha * params.kappa / (params.mu * signal.px);
    if params.variant == crate::algorithms::Variant::L0Lms && ratio >= GUARD_RATIO {
        out.push(AssumptionWarning::LargeKappa { ratio });
    }
    if let Some(snr) = signal.snr_db {
        if snr < LOW_SNR_DB {
            out.push(AssumptionWarning::LowSnr { snr_db: snr });
        }
    }
    for w in &out {
        log::warn!("{w}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_referred_snr_gives_table_noise_power() {
        let m = SignalModel::from_snr(1.0, 40.0, SnrConvention::OutputReferred, 100.0).unwrap();
        assert!((m.pv - 0.01).abs() < 1e-15);
        let m = SignalModel::from_snr(1.0, 40.0, SnrConvention::InputReferred, 100.0).unwrap();
        assert!((m.pv - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn inconsistent_noise_power_is_rejected() {
        let mut m = SignalModel::from_snr(1.0, 20.0, SnrConvention::OutputReferred, 10.0).unwrap();
        m.pv *= 1.5;
        assert!(m.validate(Some(10.0)).is_err());
        assert!(SignalModel::new(1.0, 0.0).is_err());
        assert!(SignalModel::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn scenario_enforces_stability_and_alpha() {
        let prof = SystemProfile::expected(100, 10, 1.0, 10.0).unwrap();
        let sig = SignalModel::new(1.0, 0.01).unwrap();
        let bad = AlgoParams::l0(2.0 / 102.0, 1e-7, 10.0);
        assert!(matches!(
            Scenario::new(&prof, &bad, &sig),
            Err(Error::Stability { .. })
        ));
        let other_alpha = AlgoParams::l0(1e-3, 1e-7, 5.0);
        assert!(matches!(
            Scenario::new(&prof, &other_alpha, &sig),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn guardrails_fire() {
        let sig = SignalModel::from_snr(1.0, 20.0, SnrConvention::OutputReferred, 100.0).unwrap();
        let p = AlgoParams::l0(8e-4, 1e-6, 10.0);
        let w = assumption_warnings(&p, &sig);
        assert_eq!(w.len(), 2);
        let p = AlgoParams::l0(8e-4, 1e-8, 10.0);
        let sig = SignalModel::from_snr(1.0, 40.0, SnrConvention::OutputReferred, 100.0).unwrap();
        assert!(assumption_warnings(&p, &sig).is_empty());
    }
}
