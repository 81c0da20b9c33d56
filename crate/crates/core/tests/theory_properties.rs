use proptest::prelude::*;
use sparse_lms::algorithms::AlgoParams;
use sparse_lms::theory::{
    convergence_model, l0_steady_msd, lms_theory, mu_max, SignalModel, SnrConvention, SystemProfile,
};
use sparse_lms::Error;

#[derive(Debug, Clone, Copy)]
struct Point {
    len: usize,
    support: usize,
    mu: f64,
    alpha: f64,
    snr_db: f64,
}

fn point() -> impl Strategy<Value = Point> {
    (
        20usize..1500,
        0.02f64..0.5,
        0.05f64..0.9,
        1.0f64..50.0,
        20.0f64..50.0,
    )
        .prop_map(|(len, q_frac, mu_frac, alpha, snr_db)| {
            let support = ((len as f64 * q_frac) as usize).max(1);
            Point {
                len,
                support,
                mu: mu_frac * mu_max(len, 1.0),
                alpha,
                snr_db,
            }
        })
}

fn setup(p: &Point) -> (SystemProfile, SignalModel) {
    let profile = SystemProfile::expected(p.len, p.support, 1.0, p.alpha).unwrap();
    let signal = SignalModel::from_snr(
        1.0,
        p.snr_db,
        SnrConvention::OutputReferred,
        p.support as f64,
    )
    .unwrap();
    (profile, signal)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn zero_kappa_is_lms(p in point()) {
        let (profile, signal) = setup(&p);
        let r = l0_steady_msd(&profile, &AlgoParams::l0(p.mu, 0.0, p.alpha), &signal).unwrap();
        let lms = lms_theory(p.len, p.mu, 1.0, signal.pv, p.support as f64, None).unwrap();
        prop_assert!((r.d_inf - lms).abs() <= 1e-12 * lms);
        prop_assert!(r.d_min <= lms * (1.0 + 1e-12));
    }

    #[test]
    fn kappa_opt_is_a_minimum(p in point(), f in 0.5f64..2.0) {
        let (profile, signal) = setup(&p);
        let at = |k: f64| {
            l0_steady_msd(&profile, &AlgoParams::l0(p.mu, k, p.alpha), &signal).unwrap()
        };
        let base = at(0.0);
        let best = at(base.kappa_opt);
        prop_assert!((best.d_inf - base.d_min).abs() <= 1e-9 * base.d_min);
        prop_assert!(best.d_inf <= at(f * base.kappa_opt).d_inf * (1.0 + 1e-12));
        prop_assert!(best.d_inf > 0.0);
    }

    #[test]
    fn learning_curve_runs_from_energy_to_steady_state(p in point(), f in 0.0f64..3.0) {
        let (profile, signal) = setup(&p);
        let kopt = l0_steady_msd(&profile, &AlgoParams::l0(p.mu, 0.0, p.alpha), &signal)
            .unwrap()
            .kappa_opt;
        let params = AlgoParams::l0(p.mu, f * kopt, p.alpha);
        let m = match convergence_model(&profile, &params, &signal) {
            Ok(m) => m,
            Err(Error::DegenerateSpectrum(_) | Error::IllConditioned(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!((m.msd(0) - p.support as f64).abs() <= 1e-9 * p.support as f64);
        let (lo, hi) = m.eigen_range();
        prop_assert!(lo > -1.0 && hi < 1.0);
        let n = (50.0 / (1.0 - hi.abs().max(lo.abs()))) as u64;
        prop_assert!((m.msd(n) - m.d_inf).abs() <= 1e-6 * m.d_inf);
    }
}

#[test]
fn output_and_input_referred_conventions_differ_by_signal_energy() {
    let a = SignalModel::from_snr(1.0, 40.0, SnrConvention::OutputReferred, 100.0).unwrap();
    let b = SignalModel::from_snr(1.0, 40.0, SnrConvention::InputReferred, 100.0).unwrap();
    assert!((a.pv / b.pv - 100.0).abs() < 1e-12);
}
