//! The five reference experiments.
//!
//! All share `L = 1000`, `Q = 100`, `alpha = 10`, unit input power, unit
//! variance coefficients and 100 trials unless noted:
//!
//! | preset | varies | fixed | output |
//! |---|---|---|---|
//! | exp1 | kappa, 1e-9..3e-6 (40 dB) and 1e-8..3e-5 (20 dB) | mu = 8e-4 | steady sweep with kappa_opt marked |
//! | exp2 | alpha, 5.6e-4..56 | mu = 8e-4, kappa = kappa_opt | steady sweep with ZA-LMS and RZA-LMS columns |
//! | exp3 | Q, 50..1000 | mu = 8e-4, kappa = kappa_opt | steady sweep with LMS columns |
//! | exp4 | kappa in {0.1, 1, 10} kappa_opt, 40 and 20 dB | mu = 4e-4 | learning curves |
//! | exp5 | mu in {2e-4, 4e-4} | kappa = kappa_opt | learning curves |

use sparse_lms::algorithms::Variant;
use sparse_lms::simulation::{ExperimentSpec, KappaKeyword, KappaSetting, Regressor, Sweep};
use sparse_lms::theory::SnrConvention;

use crate::error::{CliError, Result};
use crate::run::{PointOutput, Session};
use crate::table::{num, opt, Table, SWEEP_VALUES};

pub const PRESETS: [&str; 5] = ["exp1", "exp2", "exp3", "exp4", "exp5"];
pub const DEFAULT_SEED: u64 = 1;

const LEN: usize = 1000;
const SUPPORT: usize = 100;
const MU: f64 = 8e-4;
const ALPHA: f64 = 10.0;
const TRIALS: usize = 100;
const STEADY_ITERATIONS: usize = 30_000;
const EXP4_MU: f64 = 4e-4;
const EXP4_ITERATIONS: usize = 25_000;
const EXP5_ITERATIONS: usize = 40_000;

const KAPPA_POINTS: usize = 13;
const ALPHA_RANGE: (f64, f64) = (5.6e-4, 56.0);
const ALPHA_POINTS: usize = 11;
const Q_GRID: [usize; 11] = [50, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000];
const EXP4_MULTIPLES: [f64; 3] = [0.1, 1.0, 10.0];
const EXP5_MU: [f64; 2] = [2e-4, 4e-4];

pub fn check(name: &str) -> Result<()> {
    if PRESETS.contains(&name) {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "unknown preset '{name}' (expected one of {})",
            PRESETS.join(", ")
        )))
    }
}

pub fn run(name: &str, s: &mut Session) -> Result<()> {
    check(name)?;
    match name {
        "exp1" => exp1(s),
        "exp2" => exp2(s),
        "exp3" => exp3(s),
        "exp4" => exp4(s),
        _ => exp5(s),
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).ln();
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => lo * (r * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn spec(
    support: usize,
    mu: Sweep,
    alpha: Sweep,
    kappa: KappaSetting,
    snr_db: f64,
    variants: Vec<Variant>,
    iterations: usize,
) -> ExperimentSpec {
    ExperimentSpec {
        len: LEN,
        support,
        mu,
        alpha,
        kappa,
        snr_db,
        trials: TRIALS,
        iterations: Some(iterations),
        seed: DEFAULT_SEED,
        variants,
        px: 1.0,
        sigma_s: 1.0,
        snr_convention: SnrConvention::OutputReferred,
        rho: None,
        epsilon: None,
        fixed_system: false,
        steady_window: None,
        regressor: Regressor::TappedDelayLine,
    }
}

const OPTIMAL: KappaSetting = KappaSetting::Named(KappaKeyword::Optimal);

fn of(outs: &[PointOutput], v: Variant) -> Vec<&PointOutput> {
    outs.iter().filter(|o| o.variant() == v).collect()
}

fn sweep_header(param: &str, extra: &[&str]) -> Vec<String> {
    let mut h = vec![param.to_string()];
    h.extend(SWEEP_VALUES.iter().map(|c| c.to_string()));
    h.extend(extra.iter().map(|c| c.to_string()));
    h
}

/// Steady MSD against kappa. The table grid is stretched by the ratio of
/// the scaled to the full-size optimum so a scaled run covers the same
/// range around kappa_opt.
fn exp1(s: &mut Session) -> Result<()> {
    for (snr, lo, hi) in [(40.0, 1e-9, 3e-6), (20.0, 1e-8, 3e-5)] {
        let base = spec(
            SUPPORT,
            Sweep::One(MU),
            Sweep::One(ALPHA),
            OPTIMAL,
            snr,
            vec![Variant::L0Lms],
            STEADY_ITERATIONS,
        );
        let full = Session::kappa_opt(&s.prepare_at(base.clone(), 1.0)?)?;
        let kopt = Session::kappa_opt(&s.prepare(base)?)?;
        let mut grid: Vec<f64> = logspace(lo, hi, KAPPA_POINTS)
            .into_iter()
            .map(|k| k * (kopt / full))
            .collect();
        grid.push(kopt);
        grid.sort_by(f64::total_cmp);
        grid.dedup();

        let sp = s.prepare(spec(
            SUPPORT,
            Sweep::One(MU),
            Sweep::One(ALPHA),
            KappaSetting::Sweep(grid),
            snr,
            vec![Variant::Lms, Variant::L0Lms],
            STEADY_ITERATIONS,
        ))?;
        let outs = s.evaluate(sp, false)?;
        let lms = of(&outs, Variant::Lms)[0].steady_cells();
        let mut t = Table::new(&sweep_header(
            "kappa",
            &["kappa_opt_marker", "lms_theory", "lms_sim", "lms_sim_ci"],
        ));
        for o in of(&outs, Variant::L0Lms) {
            let k = o.point.params.kappa;
            let mut row = vec![num(k)];
            row.extend(o.steady_cells());
            row.push(if k == kopt { "1" } else { "0" }.to_string());
            row.extend(lms.iter().cloned());
            t.push(row);
        }
        s.write(snr, "kappa_sweep", &t)?;
    }
    Ok(())
}

/// Steady MSD against alpha at kappa_opt; RZA-LMS uses epsilon = alpha.
fn exp2(s: &mut Session) -> Result<()> {
    let snr = 40.0;
    let alphas = logspace(ALPHA_RANGE.0, ALPHA_RANGE.1, ALPHA_POINTS);
    let sp = s.prepare(spec(
        SUPPORT,
        Sweep::One(MU),
        Sweep::Many(alphas),
        OPTIMAL,
        snr,
        vec![
            Variant::Lms,
            Variant::ZaLms,
            Variant::RzaLms,
            Variant::L0Lms,
        ],
        STEADY_ITERATIONS,
    ))?;
    let outs = s.evaluate(sp, false)?;
    let lms = of(&outs, Variant::Lms)[0].steady_cells();
    let za = of(&outs, Variant::ZaLms)[0].steady_cells();
    let rza = of(&outs, Variant::RzaLms);
    let mut t = Table::new(&sweep_header(
        "alpha",
        &[
            "kappa",
            "za_theory",
            "za_sim",
            "za_sim_ci",
            "rza_sim",
            "rza_sim_ci",
            "lms_theory",
            "lms_sim",
            "lms_sim_ci",
        ],
    ));
    for (o, r) in of(&outs, Variant::L0Lms).into_iter().zip(rza) {
        let mut row = vec![num(o.point.params.alpha)];
        row.extend(o.steady_cells());
        row.push(num(o.point.params.kappa));
        row.extend(za.iter().cloned());
        row.extend([opt(r.steady_sim()), opt(r.steady_ci())]);
        row.extend(lms.iter().cloned());
        t.push(row);
    }
    s.write(snr, "alpha_sweep", &t)
}

/// Steady MSD against the support size at kappa_opt.
fn exp3(s: &mut Session) -> Result<()> {
    let snr = 40.0;
    let mut t = Table::new(&sweep_header(
        "Q",
        &["kappa", "lms_theory", "lms_sim", "lms_sim_ci"],
    ));
    let mut seen = Vec::new();
    for q in Q_GRID {
        let sp = s.prepare(spec(
            q,
            Sweep::One(MU),
            Sweep::One(ALPHA),
            OPTIMAL,
            snr,
            vec![Variant::Lms, Variant::L0Lms],
            STEADY_ITERATIONS,
        ))?;
        if seen.contains(&sp.support) {
            continue;
        }
        seen.push(sp.support);
        let support = sp.support;
        let outs = s.evaluate(sp, false)?;
        let o = of(&outs, Variant::L0Lms)[0];
        let mut row = vec![num(support as f64)];
        row.extend(o.steady_cells());
        row.push(num(o.point.params.kappa));
        row.extend(of(&outs, Variant::Lms)[0].steady_cells());
        t.push(row);
    }
    s.write(snr, "q_sweep", &t)
}

/// Learning curves for multiples of kappa_opt, plus LMS.
fn exp4(s: &mut Session) -> Result<()> {
    for snr in [40.0, 20.0] {
        let base = spec(
            SUPPORT,
            Sweep::One(EXP4_MU),
            Sweep::One(ALPHA),
            OPTIMAL,
            snr,
            vec![Variant::L0Lms],
            EXP4_ITERATIONS,
        );
        let kopt = Session::kappa_opt(&s.prepare(base)?)?;
        let sp = s.prepare(spec(
            SUPPORT,
            Sweep::One(EXP4_MU),
            Sweep::One(ALPHA),
            KappaSetting::Sweep(EXP4_MULTIPLES.iter().map(|m| m * kopt).collect()),
            snr,
            vec![Variant::Lms, Variant::L0Lms],
            EXP4_ITERATIONS,
        ))?;
        let outs = s.evaluate(sp, true)?;
        if let Some(c) = of(&outs, Variant::Lms)[0].curve() {
            s.write(snr, "curve_lms", &c)?;
        }
        for (m, o) in EXP4_MULTIPLES.iter().zip(of(&outs, Variant::L0Lms)) {
            if let Some(c) = o.curve() {
                s.write(snr, &format!("curve_l0lms_kappa{m}x"), &c)?;
            }
        }
    }
    Ok(())
}

/// Learning curves for two step sizes, l0-LMS at kappa_opt and LMS.
fn exp5(s: &mut Session) -> Result<()> {
    let snr = 40.0;
    let sp = s.prepare(spec(
        SUPPORT,
        Sweep::Many(EXP5_MU.to_vec()),
        Sweep::One(ALPHA),
        OPTIMAL,
        snr,
        vec![Variant::Lms, Variant::L0Lms],
        EXP5_ITERATIONS,
    ))?;
    let outs = s.evaluate(sp, true)?;
    for o in &outs {
        let tag = match o.variant() {
            Variant::L0Lms => "l0lms",
            _ => "lms",
        };
        if let Some(c) = o.curve() {
            s.write(snr, &format!("curve_{tag}_mu{:e}", o.point.params.mu), &c)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logspace_hits_endpoints() {
        let v = logspace(5.6e-4, 56.0, 11);
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 5.6e-4);
        assert_eq!(v[10], 56.0);
        assert!((v[2] / 5.6e-3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_preset_is_rejected() {
        let e = check("exp9").unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains("unknown preset"));
        for p in PRESETS {
            check(p).unwrap();
        }
    }
}
