//! One-iteration kernels for LMS and its zero-point-attraction variants.
//!
//! All variants share the stochastic-gradient recursion
//!
//! ```text
//! e_n     = d_n - x_n^T w_n
//! w_{n+1} = w_n + mu * e_n * x_n + weight * attractor(w_n)
//! ```
//!
//! where the attractor is applied element-wise and the weight is `kappa`
//! for l0-LMS, `rho` for ZA-LMS / RZA-LMS and absent for plain LMS.
//! Regressors are ordered most-recent-first: `x_n = [x_n, x_{n-1}, ...]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Algorithm family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "LMS")]
    Lms,
    #[serde(rename = "L0LMS")]
    L0Lms,
    #[serde(rename = "ZALMS")]
    ZaLms,
    #[serde(rename = "RZALMS")]
    RzaLms,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Lms => "LMS",
            Variant::L0Lms => "L0LMS",
            Variant::ZaLms => "ZALMS",
            Variant::RzaLms => "RZALMS",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Algorithm variant plus its controls. Fields that the selected variant
/// does not use are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    pub variant: Variant,
    /// Step size.
    pub mu: f64,
    /// l0 attraction weight.
    pub kappa: f64,
    /// Reciprocal of the l0 attraction range.
    pub alpha: f64,
    /// ZA / RZA attraction weight.
    pub rho: f64,
    /// RZA shrink shape.
    pub epsilon: f64,
}

impl AlgoParams {
    pub fn lms(mu: f64) -> Self {
        Self {
            variant: Variant::Lms,
            mu,
            kappa: 0.0,
            alpha: 1.0,
            rho: 0.0,
            epsilon: 1.0,
        }
    }

    pub fn l0(mu: f64, kappa: f64, alpha: f64) -> Self {
        Self {
            variant: Variant::L0Lms,
            kappa,
            alpha,
            ..Self::lms(mu)
        }
    }

    pub fn za(mu: f64, rho: f64) -> Self {
        Self {
            variant: Variant::ZaLms,
            rho,
            ..Self::lms(mu)
        }
    }

    pub fn rza(mu: f64, rho: f64, epsilon: f64) -> Self {
        Self {
            variant: Variant::RzaLms,
            rho,
            epsilon,
            ..Self::lms(mu)
        }
    }

    /// Checks the invariants relevant to the selected variant.
    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mu must be > 0, got {}",
                self.mu
            )));
        }
        match self.variant {
            Variant::Lms => {}
            Variant::L0Lms => {
                if !(self.kappa.is_finite() && self.kappa >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "kappa must be >= 0, got {}",
                        self.kappa
                    )));
                }
                if !(self.alpha.is_finite() && self.alpha > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha must be > 0, got {}",
                        self.alpha
                    )));
                }
            }
            Variant::ZaLms | Variant::RzaLms => {
                if !(self.rho.is_finite() && self.rho >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "rho must be >= 0, got {}",
                        self.rho
                    )));
                }
                if self.variant == Variant::RzaLms
                    && !(self.epsilon.is_finite() && self.epsilon > 0.0)
                {
                    return Err(Error::InvalidParameter(format!(
                        "epsilon must be > 0, got {}",
                        self.epsilon
                    )));
                }
            }
        }
        Ok(())
    }

    /// Weight multiplying the attractor in the update, zero for plain LMS.
    pub fn attraction_weight(&self) -> f64 {
        match self.variant {
            Variant::Lms => 0.0,
            Variant::L0Lms => self.kappa,
            Variant::ZaLms | Variant::RzaLms => self.rho,
        }
    }
}

/// Adaptive tap-weights and iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub w: Vec<f64>,
    pub n: u64,
}

impl FilterState {
    /// All-zero initial weights.
    pub fn new(len: usize) -> Self {
        Self {
            w: vec![0.0; len],
            n: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// In-place version of [`step`]: checks dimensions only and returns
    /// the a-priori error. Used by the Monte Carlo harness.
    pub fn update(&mut self, x: &[f64], d: f64, params: &AlgoParams) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::Dimension {
                expected: self.w.len(),
                got: x.len(),
            });
        }
        let e = d - dot(x, &self.w);
        let mu_e = params.mu * e;
        let weight = params.attraction_weight();
        if weight == 0.0 {
            for (wk, &xk) in self.w.iter_mut().zip(x) {
                *wk += mu_e * xk;
            }
        } else {
            match params.variant {
                Variant::L0Lms => {
                    let alpha = params.alpha;
                    for (wk, &xk) in self.w.iter_mut().zip(x) {
                        let g = l0_attractor(*wk, alpha);
                        *wk = *wk + mu_e * xk + weight * g;
                    }
                }
                Variant::ZaLms => {
                    for (wk, &xk) in self.w.iter_mut().zip(x) {
                        let g = za_attractor(*wk);
                        *wk = *wk + mu_e * xk + weight * g;
                    }
                }
                Variant::RzaLms => {
                    let eps = params.epsilon;
                    for (wk, &xk) in self.w.iter_mut().zip(x) {
                        let g = rza_attractor(*wk, eps);
                        *wk = *wk + mu_e * xk + weight * g;
                    }
                }
                Variant::Lms => unreachable!("plain LMS has zero attraction weight"),
            }
        }
        self.n += 1;
        Ok(e)
    }
}

/// Unknown impulse response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSystem {
    pub s: Vec<f64>,
}

impl SparseSystem {
    pub fn new(s: Vec<f64>) -> Self {
        Self { s }
    }

    /// Filter length `L`.
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Number of non-zero coefficients `Q`.
    pub fn support(&self) -> usize {
        self.s.iter().filter(|&&v| v != 0.0).count()
    }

    /// Squared norm `||s||^2`.
    pub fn energy(&self) -> f64 {
        self.s.iter().map(|v| v * v).sum()
    }

    /// Squared deviation `||w - s||^2`.
    pub fn deviation(&self, w: &[f64]) -> f64 {
        self.s
            .iter()
            .zip(w)
            .map(|(s, w)| {
                let h = w - s;
                h * h
            })
            .sum()
    }
}

/// Sign with `sgn(0) = 0`.
#[inline]
pub fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// l0 zero-point attractor: `2 alpha^2 t - 2 alpha sgn(t)` inside `|t| <= 1/alpha`,
/// zero outside.
#[inline]
pub fn l0_attractor(t: f64, alpha: f64) -> f64 {
    if t.abs() <= 1.0 / alpha {
        2.0 * alpha * alpha * t - 2.0 * alpha * sgn(t)
    } else {
        0.0
    }
}

/// l1 (ZA-LMS) attractor `-sgn(t)`.
#[inline]
pub fn za_attractor(t: f64) -> f64 {
    -sgn(t)
}

/// Reweighted l1 (RZA-LMS) attractor `-sgn(t) / (1 + epsilon |t|)`.
#[inline]
pub fn rza_attractor(t: f64, epsilon: f64) -> f64 {
    -sgn(t) / (1.0 + epsilon * t.abs())
}

/// Evaluates the attractor of `variant` at `t`.
pub fn attractor(variant: Variant, t: f64, params: &AlgoParams) -> Result<f64> {
    match variant {
        Variant::Lms => Err(Error::NoAttractor),
        Variant::L0Lms => Ok(l0_attractor(t, params.alpha)),
        Variant::ZaLms => Ok(za_attractor(t)),
        Variant::RzaLms => Ok(rza_attractor(t, params.epsilon)),
    }
}

/// Left-to-right dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Noisy system output `x^T s + v`.
pub fn synth_output(s: &[f64], x: &[f64], v: f64) -> Result<f64> {
    if s.len() != x.len() {
        return Err(Error::Dimension {
            expected: s.len(),
            got: x.len(),
        });
    }
    Ok(dot(x, s) + v)
}

/// Pure single-iteration update. Returns the new state and the a-priori error.
pub fn step(
    state: &FilterState,
    x: &[f64],
    d: f64,
    params: &AlgoParams,
) -> Result<(FilterState, f64)> {
    if x.len() != state.w.len() {
        return Err(Error::Dimension {
            expected: state.w.len(),
            got: x.len(),
        });
    }
    if !d.is_finite() {
        return Err(Error::NonFinite("desired output"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regressor"));
    }
    if state.w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("tap-weights"));
    }
    params.validate()?;
    let mut next = state.clone();
    let e = next.update(x, d, params)?;
    Ok((next, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l0(alpha: f64) -> AlgoParams {
        AlgoParams::l0(1e-3, 1e-4, alpha)
    }

    #[test]
    fn attractor_examples() {
        let p = l0(10.0);
        assert_eq!(attractor(Variant::L0Lms, 0.0, &p).unwrap(), 0.0);
        let g = attractor(Variant::L0Lms, 0.05, &p).unwrap();
        assert!((g - (-10.0)).abs() < 1e-12);
        assert_eq!(attractor(Variant::L0Lms, 0.2, &p).unwrap(), 0.0);
        assert_eq!(attractor(Variant::ZaLms, -3.7, &p).unwrap(), 1.0);
        let rza = AlgoParams::rza(1e-3, 1e-4, 10.0);
        assert_eq!(attractor(Variant::RzaLms, 0.1, &rza).unwrap(), -0.5);
        assert_eq!(attractor(Variant::Lms, 0.1, &p), Err(Error::NoAttractor));
    }

    #[test]
    fn l0_attractor_vanishes_at_range_boundary() {
        assert_eq!(l0_attractor(0.5, 2.0), 0.0);
        assert_eq!(l0_attractor(-0.5, 2.0), 0.0);
    }

    #[test]
    fn synth_output_examples() {
        assert_eq!(
            synth_output(&[0.0; 3], &[1.0, -2.0, 3.0], 0.3).unwrap(),
            0.3
        );
        assert_eq!(synth_output(&[1.0, 0.0], &[2.0, 5.0], 0.0).unwrap(), 2.0);
        let y = synth_output(&[1.0, -1.0], &[0.5, 0.5], 0.1).unwrap();
        assert!((y - 0.1).abs() < 1e-15);
        assert!(matches!(
            synth_output(&[1.0], &[1.0, 2.0], 0.0),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn step_examples() {
        let st = FilterState::new(3);
        let (next, e) = step(&st, &[0.0; 3], 1.0, &AlgoParams::lms(0.01)).unwrap();
        assert_eq!(e, 1.0);
        assert_eq!(next.w, vec![0.0; 3]);
        assert_eq!(next.n, 1);

        let st = FilterState {
            w: vec![0.05],
            n: 0,
        };
        let (next, e) = step(&st, &[0.0], 0.0, &AlgoParams::l0(1e-3, 1e-4, 10.0)).unwrap();
        assert_eq!(e, 0.0);
        assert!((next.w[0] - 0.049).abs() < 1e-15);
    }

    #[test]
    fn step_rejects_bad_input() {
        let st = FilterState::new(2);
        let p = AlgoParams::lms(0.01);
        assert!(matches!(
            step(&st, &[1.0], 0.0, &p),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            step(&st, &[1.0, f64::NAN], 0.0, &p),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            step(&st, &[1.0, 1.0], f64::INFINITY, &p),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn params_validation() {
        assert!(AlgoParams::lms(0.0).validate().is_err());
        assert!(AlgoParams::l0(1e-3, 1e-6, 0.0).validate().is_err());
        assert!(AlgoParams::l0(1e-3, -1e-6, 1.0).validate().is_err());
        assert!(AlgoParams::rza(1e-3, 1e-6, 0.0).validate().is_err());
        // alpha is irrelevant for ZA-LMS
        let mut p = AlgoParams::za(1e-3, 1e-6);
        p.alpha = -1.0;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn l0_step_approaches_za_for_vanishing_alpha() {
        let w = vec![0.3, -0.02, 0.0, 1.5, -0.7];
        let x = vec![0.1, -0.4, 0.9, 0.2, -1.1];
        let d = 0.25;
        let rho = 1e-4;
        let st = FilterState { w, n: 0 };
        let (za, _) = step(&st, &x, d, &AlgoParams::za(1e-2, rho)).unwrap();
        let mut prev = f64::INFINITY;
        for alpha in [1e-2, 1e-3, 1e-4, 1e-5] {
            let kappa = rho / (2.0 * alpha);
            let (l0, _) = step(&st, &x, d, &AlgoParams::l0(1e-2, kappa, alpha)).unwrap();
            let gap =
                l0.w.iter()
                    .zip(&za.w)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-8);
    }

    fn variant_strategy() -> impl Strategy<Value = Variant> {
        prop_oneof![
            Just(Variant::L0Lms),
            Just(Variant::ZaLms),
            Just(Variant::RzaLms)
        ]
    }

    proptest! {
        #[test]
        fn attractors_are_odd_and_finite(
            v in variant_strategy(),
            t in -50.0f64..50.0,
            alpha in 1e-3f64..1e3,
            eps in 1e-3f64..1e3,
        ) {
            let mut p = AlgoParams::rza(1e-3, 1e-4, eps);
            p.alpha = alpha;
            let a = attractor(v, t, &p).unwrap();
            let b = attractor(v, -t, &p).unwrap();
            prop_assert!(a.is_finite());
            prop_assert_eq!(a, -b);
        }

        #[test]
        fn l0_attractor_pulls_towards_origin(t in -2.0f64..2.0, alpha in 0.1f64..100.0) {
            let g = l0_attractor(t, alpha);
            if t.abs() <= 1.0 / alpha {
                prop_assert!(g * t <= 0.0);
            } else {
                prop_assert_eq!(g, 0.0);
            }
        }

        #[test]
        fn zero_weight_steps_match_lms_bitwise(
            w in prop::collection::vec(-2.0f64..2.0, 1..16),
            seed in any::<u64>(),
            d in -3.0f64..3.0,
            mu in 1e-4f64..0.1,
        ) {
            let x: Vec<f64> = (0..w.len())
                .map(|k| ((seed.wrapping_mul(k as u64 + 1) % 1000) as f64) / 500.0 - 1.0)
                .collect();
            let st = FilterState { w, n: 3 };
            let (lms, e0) = step(&st, &x, d, &AlgoParams::lms(mu)).unwrap();
            for p in [
                AlgoParams::l0(mu, 0.0, 10.0),
                AlgoParams::za(mu, 0.0),
                AlgoParams::rza(mu, 0.0, 10.0),
            ] {
                let (other, e1) = step(&st, &x, d, &p).unwrap();
                prop_assert_eq!(e0.to_bits(), e1.to_bits());
                for (a, b) in lms.w.iter().zip(&other.w) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }
}
