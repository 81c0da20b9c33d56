//! Seeded Monte Carlo harness.
//!
//! Every random draw comes from a ChaCha8 stream (`rand_chacha` 0.9) keyed by
//! the run seed, with the stream id encoding `(trial_index, role)`. Trials
//! run in parallel and are averaged in trial order, so results are
//! bit-identical for any thread count.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{AlgoParams, FilterState, SparseSystem, Variant};
use crate::error::{Error, Result};
use crate::theory::{
    deltas, l0_steady_msd, za_steady_msd, SignalModel, SnrConvention, SystemProfile,
};

/// Least-squares slope bound on log-MSD per iteration for a converged series.
pub const SLOPE_LIMIT: f64 = 1e-5;

/// `||w||^2` above `DIVERGENCE_FACTOR * max(1, ||s||^2)` counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    System = 0,
    Input = 1,
    Noise = 2,
}

/// The generator for `(seed, trial, role)`.
pub fn stream(seed: u64, trial: u64, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 2) | role as u64);
    rng
}

/// Sparse system with `support` standard-normal taps at uniformly chosen
/// positions.
pub fn gen_system(len: usize, support: usize, seed: u64) -> Result<SparseSystem> {
    gen_system_for_trial(len, support, seed, 0)
}

pub fn gen_system_for_trial(
    len: usize,
    support: usize,
    seed: u64,
    trial: u64,
) -> Result<SparseSystem> {
    if support > len {
        return Err(Error::Precondition(format!(
            "support Q = {support} exceeds length L = {len}"
        )));
    }
    let mut rng = stream(seed, trial, Role::System);
    let mut s = vec![0.0; len];
    for k in sample(&mut rng, len, support) {
        // a draw of exactly zero would shrink the support
        let mut v: f64 = rng.sample(StandardNormal);
        while v == 0.0 {
            v = rng.sample(StandardNormal);
        }
        s[k] = v;
    }
    Ok(SparseSystem::new(s))
}

/// How the regressor vector is formed from the input stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Regressor {
    /// Sliding window over one input sequence.
    #[default]
    #[serde(rename = "TAPPED_DELAY_LINE")]
    TappedDelayLine,
    /// Fresh i.i.d. samples for every tap at every iteration.
    #[serde(rename = "INDEPENDENT")]
    Independent,
}

/// Everything a single trial needs besides the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub params: AlgoParams,
    pub px: f64,
    /// Noise power; zero is allowed here.
    pub pv: f64,
    pub iterations: usize,
    pub seed: u64,
    #[serde(default)]
    pub regressor: Regressor,
}

impl TrialConfig {
    /// Tapped-delay-line configuration.
    pub fn new(params: AlgoParams, px: f64, pv: f64, iterations: usize, seed: u64) -> Self {
        Self {
            params,
            px,
            pv,
            iterations,
            seed,
            regressor: Regressor::TappedDelayLine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.px.is_finite() && self.px > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Px must be > 0, got {}",
                self.px
            )));
        }
        if !(self.pv.is_finite() && self.pv >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Pv must be >= 0, got {}",
                self.pv
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Squared deviation of one trial, `msd[n] = ||w_n - s||^2` for
/// `n = 0..=iterations`, truncated at divergence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub msd: Vec<f64>,
    /// Iteration at which divergence was detected.
    pub diverged_at: Option<usize>,
    /// Per-tap average of `w_n` over the requested tail, when asked for.
    pub mean_weights: Option<Vec<f64>>,
}

pub fn run_trial(system: &SparseSystem, cfg: &TrialConfig, trial: u64) -> Result<TrialRun> {
    run_trial_inner(system, cfg, trial, None)
}

/// Like [`run_trial`], also averaging the weights over iterations
/// `average_from..=iterations`.
pub fn run_trial_averaged(
    system: &SparseSystem,
    cfg: &TrialConfig,
    trial: u64,
    average_from: usize,
) -> Result<TrialRun> {
    if average_from > cfg.iterations {
        return Err(Error::InvalidParameter(format!(
            "average_from {average_from} is past the last iteration {}",
            cfg.iterations
        )));
    }
    run_trial_inner(system, cfg, trial, Some(average_from))
}

fn run_trial_inner(
    system: &SparseSystem,
    cfg: &TrialConfig,
    trial: u64,
    average_from: Option<usize>,
) -> Result<TrialRun> {
    cfg.validate()?;
    let len = system.len();
    if len == 0 {
        return Err(Error::InvalidParameter("empty system".into()));
    }
    let s = &system.s;
    let taps: Vec<(usize, f64)> = s
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, v)| (k, *v))
        .collect();
    let iterations = cfg.iterations;

    // Input samples stored newest-first so each regressor is a contiguous
    // slice: regressor at time n is buf[last - n..last - n + len].
    let sx = cfg.px.sqrt();
    let mut rng = stream(cfg.seed, trial, Role::Input);
    let mut buf = match cfg.regressor {
        Regressor::TappedDelayLine => vec![0.0; iterations + len - 1],
        Regressor::Independent => vec![0.0; len],
    };
    if cfg.regressor == Regressor::TappedDelayLine {
        for slot in buf.iter_mut().rev() {
            let z: f64 = rng.sample(StandardNormal);
            *slot = sx * z;
        }
    }
    let last = iterations - 1;
    let sv = cfg.pv.sqrt();
    let mut noise = stream(cfg.seed, trial, Role::Noise);

    let limit = DIVERGENCE_FACTOR * system.energy().max(1.0);
    let mut state = FilterState::new(len);
    let mut msd = Vec::with_capacity(iterations + 1);
    msd.push(system.energy());
    let mut sum_w = average_from.map(|_| vec![0.0; len]);
    let mut count = 0usize;
    if let (Some(0), Some(acc)) = (average_from, sum_w.as_mut()) {
        acc.iter_mut().zip(&state.w).for_each(|(a, w)| *a += w);
        count += 1;
    }
    let mut diverged_at = None;

    for n in 0..iterations {
        let x: &[f64] = match cfg.regressor {
            Regressor::TappedDelayLine => &buf[last - n..last - n + len],
            Regressor::Independent => {
                for v in buf.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = sx * z;
                }
                &buf
            }
        };
        let z: f64 = noise.sample(StandardNormal);
        let d = taps.iter().map(|&(k, v)| x[k] * v).sum::<f64>() + sv * z;
        state.update(x, d, &cfg.params)?;

        let mut dev = 0.0;
        let mut norm = 0.0;
        for (w, t) in state.w.iter().zip(s) {
            let h = w - t;
            dev += h * h;
            norm += w * w;
        }
        if !(norm.is_finite() && dev.is_finite()) || norm > limit {
            diverged_at = Some(n + 1);
            break;
        }
        msd.push(dev);
        if let (Some(from), Some(acc)) = (average_from, sum_w.as_mut()) {
            if n + 1 >= from {
                acc.iter_mut().zip(&state.w).for_each(|(a, w)| *a += w);
                count += 1;
            }
        }
    }

    let mean_weights = match (diverged_at, sum_w) {
        (None, Some(acc)) => Some(acc.into_iter().map(|a| a / count as f64).collect()),
        _ => None,
    };
    Ok(TrialRun {
        msd,
        diverged_at,
        mean_weights,
    })
}

/// Source of the unknown system for each trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SystemSource {
    /// The same system for every trial.
    Fixed(SparseSystem),
    /// A fresh draw per trial from the trial's system stream, scaled by
    /// `sigma_s`.
    PerTrial {
        len: usize,
        support: usize,
        sigma_s: f64,
    },
}

impl SystemSource {
    pub fn system(&self, seed: u64, trial: u64) -> Result<SparseSystem> {
        match self {
            SystemSource::Fixed(s) => Ok(s.clone()),
            SystemSource::PerTrial {
                len,
                support,
                sigma_s,
            } => {
                let mut sys = gen_system_for_trial(*len, *support, seed, trial)?;
                if *sigma_s != 1.0 {
                    sys.s.iter_mut().for_each(|v| *v *= sigma_s);
                }
                Ok(sys)
            }
        }
    }
}

/// Trial-averaged learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Mean squared deviation at `n = 0..`.
    pub msd: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Mean of the final `steady_window` entries, without the slope test.
    pub steady_estimate: f64,
    pub steady_window: usize,
    /// 95% half-width of `steady_estimate` across trials; NaN for one trial.
    pub steady_ci: f64,
    /// Least-squares slope of log-MSD over the steady window.
    pub steady_slope: f64,
    pub diverged: bool,
    pub diverged_trials: usize,
}

impl Trajectory {
    /// Steady-state estimate with the convergence check.
    pub fn converged_steady(&self) -> Result<f64> {
        estimate_steady(&self.msd, self.steady_window)
    }
}

/// Runs `trials` trials and averages them in trial order. The steady window
/// is clipped to the series length when divergence shortened it.
pub fn simulate(
    source: &SystemSource,
    cfg: &TrialConfig,
    trials: usize,
    steady_window: usize,
) -> Result<Trajectory> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if steady_window == 0 {
        return Err(Error::InvalidParameter("steady_window must be >= 1".into()));
    }
    cfg.validate()?;
    let runs = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let sys = source.system(cfg.seed, t)?;
            run_trial(&sys, cfg, t)
        })
        .collect::<Result<Vec<_>>>()?;

    let diverged: Vec<usize> = runs.iter().filter_map(|r| r.diverged_at).collect();
    if diverged.len() == trials {
        return Err(Error::Diverged {
            trials,
            first_iteration: diverged.iter().copied().min().unwrap_or(0),
        });
    }
    let n = runs.iter().map(|r| r.msd.len()).min().unwrap_or(0);
    let mut msd = vec![0.0; n];
    for r in &runs {
        for (m, v) in msd.iter_mut().zip(&r.msd) {
            *m += v;
        }
    }
    let inv = 1.0 / trials as f64;
    msd.iter_mut().for_each(|m| *m *= inv);

    let window = steady_window.min(n);
    let per_trial: Vec<f64> = runs.iter().map(|r| mean(&r.msd[n - window..n])).collect();
    let steady_ci = if trials > 1 {
        let m = mean(&per_trial);
        let var = per_trial.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (trials - 1) as f64;
        1.96 * (var / trials as f64).sqrt()
    } else {
        f64::NAN
    };
    let tail = &msd[n - window..];
    Ok(Trajectory {
        steady_estimate: mean(tail),
        steady_slope: log_slope(tail),
        msd,
        trials,
        seed: cfg.seed,
        steady_window: window,
        steady_ci,
        diverged: !diverged.is_empty(),
        diverged_trials: diverged.len(),
    })
}

/// Per-trial time-averaged weights over `average_from..=iterations`, paired
/// with the system of that trial. Diverged trials are an error.
pub fn averaged_weights(
    source: &SystemSource,
    cfg: &TrialConfig,
    trials: usize,
    average_from: usize,
) -> Result<Vec<(SparseSystem, Vec<f64>)>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let sys = source.system(cfg.seed, t)?;
            let run = run_trial_averaged(&sys, cfg, t, average_from)?;
            match (run.diverged_at, run.mean_weights) {
                (None, Some(w)) => Ok((sys, w)),
                (at, _) => Err(Error::Diverged {
                    trials: 1,
                    first_iteration: at.unwrap_or(0),
                }),
            }
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Least-squares slope of `ln(v)` against the index.
pub fn log_slope(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 || v.iter().all(|&x| x == v[0]) {
        return 0.0;
    }
    let floor = f64::MIN_POSITIVE;
    let xm = (n - 1) as f64 / 2.0;
    let ym = v.iter().map(|&y| y.max(floor).ln()).sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in v.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y.max(floor).ln() - ym);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Mean of the final `window` values after checking that the log-MSD slope
/// over that window is below [`SLOPE_LIMIT`].
pub fn estimate_steady(msd: &[f64], window: usize) -> Result<f64> {
    if window == 0 || window > msd.len() {
        return Err(Error::InvalidParameter(format!(
            "window {window} must be in 1..={}",
            msd.len()
        )));
    }
    let tail = &msd[msd.len() - window..];
    if tail.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NonFinite("msd series"));
    }
    let slope = log_slope(tail);
    if slope.is_nan() || slope.abs() >= SLOPE_LIMIT {
        return Err(Error::NotConverged { slope, window });
    }
    Ok(mean(tail))
}

/// `ceil(10 / (mu Px Delta_L))`.
pub fn default_iterations(len: usize, mu: f64, px: f64) -> Result<usize> {
    let d = deltas(len, 0, mu, px);
    let tau = 1.0 / (mu * px * d.delta_l);
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Stability {
            mu,
            mu_max: crate::theory::mu_max(len, px),
        });
    }
    Ok((10.0 * tau).ceil() as usize)
}

/// Final 10% of the run, at least one sample.
pub fn default_window(iterations: usize) -> usize {
    (iterations / 10).max(1)
}

/// A scalar or an ordered list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    One(f64),
    Many(Vec<f64>),
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::One(v) => vec![*v],
            Sweep::Many(v) => v.clone(),
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        let v = self.values();
        if v.is_empty() {
            return Err(Error::InvalidParameter(format!("{name} sweep is empty")));
        }
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} contains {bad}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KappaKeyword {
    #[serde(rename = "OPTIMAL")]
    Optimal,
}

/// Attraction weight: fixed, swept, or the theoretical optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KappaSetting {
    Named(KappaKeyword),
    Value(f64),
    Sweep(Vec<f64>),
}

/// A Monte Carlo experiment over a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(rename = "L")]
    pub len: usize,
    #[serde(rename = "Q")]
    pub support: usize,
    pub mu: Sweep,
    pub alpha: Sweep,
    pub kappa: KappaSetting,
    pub snr_db: f64,
    pub trials: usize,
    /// Defaults to [`default_iterations`] for each step size.
    #[serde(default)]
    pub iterations: Option<usize>,
    pub seed: u64,
    #[serde(alias = "variant")]
    pub variants: Vec<Variant>,
    #[serde(default = "unit")]
    pub px: f64,
    /// Standard deviation of the non-zero taps.
    #[serde(default = "unit")]
    pub sigma_s: f64,
    #[serde(default)]
    pub snr_convention: SnrConvention,
    /// ZA/RZA weight; defaults to the ZA optimum from theory.
    #[serde(default)]
    pub rho: Option<f64>,
    /// RZA shrinkage; defaults to the point's `alpha`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Use the seed's trial-0 system for all trials.
    #[serde(default)]
    pub fixed_system: bool,
    /// Defaults to [`default_window`].
    #[serde(default)]
    pub steady_window: Option<usize>,
    #[serde(default)]
    pub regressor: Regressor,
}

fn unit() -> f64 {
    1.0
}

/// One concrete parameter point of an [`ExperimentSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedPoint {
    pub params: AlgoParams,
    pub signal: SignalModel,
    pub iterations: usize,
    pub steady_window: usize,
    /// Theoretical optimum for this `(mu, alpha)`, for l0-LMS points.
    pub kappa_opt: Option<f64>,
    pub regressor: Regressor,
}

impl ResolvedPoint {
    pub fn trial_config(&self, seed: u64) -> TrialConfig {
        TrialConfig {
            params: self.params,
            px: self.signal.px,
            pv: self.signal.pv,
            iterations: self.iterations,
            seed,
            regressor: self.regressor,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.iterations == Some(0) {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        if self.steady_window == Some(0) {
            return Err(Error::InvalidParameter("steady_window must be >= 1".into()));
        }
        if self.len == 0 {
            return Err(Error::InvalidParameter("L must be >= 1".into()));
        }
        if self.support > self.len {
            return Err(Error::Precondition(format!(
                "support Q = {} exceeds length L = {}",
                self.support, self.len
            )));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidParameter("no variants given".into()));
        }
        if !(self.sigma_s.is_finite() && self.sigma_s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_s must be > 0, got {}",
                self.sigma_s
            )));
        }
        self.mu.check("mu")?;
        self.alpha.check("alpha")?;
        if let KappaSetting::Sweep(v) = &self.kappa {
            Sweep::Many(v.clone()).check("kappa")?;
        }
        self.signal()?;
        Ok(())
    }

    /// Noise power from the SNR, using the expected energy `Q sigma_s^2`.
    pub fn signal(&self) -> Result<SignalModel> {
        let energy = self.support as f64 * self.sigma_s * self.sigma_s;
        SignalModel::from_snr(self.px, self.snr_db, self.snr_convention, energy)
    }

    pub fn source(&self) -> Result<SystemSource> {
        if self.fixed_system {
            let mut sys = gen_system(self.len, self.support, self.seed)?;
            if self.sigma_s != 1.0 {
                sys.s.iter_mut().for_each(|v| *v *= self.sigma_s);
            }
            Ok(SystemSource::Fixed(sys))
        } else {
            Ok(SystemSource::PerTrial {
                len: self.len,
                support: self.support,
                sigma_s: self.sigma_s,
            })
        }
    }

    /// Expands the grid. Variants that ignore `alpha` or `kappa` appear
    /// once per value they depend on.
    pub fn points(&self) -> Result<Vec<ResolvedPoint>> {
        self.validate()?;
        let signal = self.signal()?;
        let mut out = Vec::new();
        for mu in self.mu.values() {
            let iterations = match self.iterations {
                Some(n) => n,
                None => default_iterations(self.len, mu, self.px)?,
            };
            let steady_window = self
                .steady_window
                .unwrap_or_else(|| default_window(iterations))
                .min(iterations + 1);
            let point = |params: AlgoParams, kappa_opt| ResolvedPoint {
                params,
                signal,
                iterations,
                steady_window,
                kappa_opt,
                regressor: self.regressor,
            };
            let rho = match self.rho {
                Some(r) => r,
                None if self
                    .variants
                    .iter()
                    .any(|v| matches!(v, Variant::ZaLms | Variant::RzaLms)) =>
                {
                    za_steady_msd(self.len, self.support, mu, 0.0, self.px, signal.pv)?.rho_opt
                }
                None => 0.0,
            };
            for (ai, alpha) in self.alpha.values().into_iter().enumerate() {
                let kappa_opt = if self.variants.contains(&Variant::L0Lms) {
                    let base = AlgoParams::l0(mu, 0.0, alpha);
                    SystemProfile::expected(self.len, self.support, self.sigma_s, alpha)
                        .and_then(|profile| l0_steady_msd(&profile, &base, &signal))
                        .map(|r| Some(r.kappa_opt))
                } else {
                    Ok(None)
                };
                let (kappas, kappa_opt) = match &self.kappa {
                    KappaSetting::Named(KappaKeyword::Optimal) => {
                        let k = kappa_opt?;
                        (vec![k.unwrap_or(0.0)], k)
                    }
                    KappaSetting::Value(k) => (vec![*k], kappa_opt.ok().flatten()),
                    KappaSetting::Sweep(v) => (v.clone(), kappa_opt.ok().flatten()),
                };
                for variant in &self.variants {
                    match variant {
                        Variant::Lms if ai == 0 => out.push(point(AlgoParams::lms(mu), None)),
                        Variant::ZaLms if ai == 0 => out.push(point(AlgoParams::za(mu, rho), None)),
                        Variant::RzaLms => {
                            let eps = self.epsilon.unwrap_or(alpha);
                            out.push(point(AlgoParams::rza(mu, rho, eps), None))
                        }
                        Variant::L0Lms => {
                            for &k in &kappas {
                                out.push(point(AlgoParams::l0(mu, k, alpha), kappa_opt));
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        for p in &out {
            p.params.validate()?;
        }
        Ok(out)
    }
}

/// Outcome of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: ResolvedPoint,
    pub trajectory: Result<Trajectory>,
}

/// Runs every grid point of `spec`. Per-point divergence is reported in the
/// point's result rather than aborting the run.
pub fn monte_carlo(spec: &ExperimentSpec) -> Result<Vec<PointResult>> {
    let source = spec.source()?;
    spec.points()?
        .into_iter()
        .map(|point| {
            let cfg = point.trial_config(spec.seed);
            let trajectory = simulate(&source, &cfg, spec.trials, point.steady_window);
            match trajectory {
                Err(e @ Error::Diverged { .. }) => Ok(PointResult {
                    point,
                    trajectory: Err(e),
                }),
                other => Ok(PointResult {
                    point,
                    trajectory: Ok(other?),
                }),
            }
        })
        .collect()
}
