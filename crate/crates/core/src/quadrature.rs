//! Gauss–Legendre quadrature and truncated Gaussian expectations.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes per panel.
pub const GL_ORDER: usize = 64;

/// Gaussian tails beyond this many standard deviations are dropped.
const TAIL_SIGMAS: f64 = 14.0;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the three-term Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn default_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]` with `panels`
/// equal panels of [`GL_ORDER`] nodes each.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = default_rule();
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let s: f64 = nodes
            .iter()
            .zip(weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum();
        total += s * half;
    }
    total
}

/// Zero-mean Gaussian density with standard deviation `sigma`.
pub fn normal_pdf(t: f64, sigma: f64) -> f64 {
    let z = t / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// `E[f(S) 1{|S| < bound}]` for `S ~ N(0, sigma^2)` and an even integrand `f`.
///
/// The integral is folded onto `[0, bound]` so the kink of `|t|`-type
/// integrands at the origin sits on a panel edge.
pub fn truncated_normal_even_expectation<F: Fn(f64) -> f64>(f: F, bound: f64, sigma: f64) -> f64 {
    let upper = bound.min(TAIL_SIGMAS * sigma);
    if upper <= 0.0 {
        return 0.0;
    }
    let panels = (upper / sigma).ceil().max(1.0) as usize;
    2.0 * integrate(|t| f(t) * normal_pdf(t, sigma), 0.0, upper, panels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 14 monomial: integral over [-1,1] is 2/15
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn default_rule_is_symmetric_and_normalised() {
        let (x, w) = default_rule();
        assert_eq!(x.len(), GL_ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        for i in 0..GL_ORDER {
            assert!((x[i] + x[GL_ORDER - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn total_gaussian_mass_and_variance() {
        let mass = truncated_normal_even_expectation(|_| 1.0, f64::INFINITY, 2.0);
        assert!((mass - 1.0).abs() < 1e-13);
        let var = truncated_normal_even_expectation(|t| t * t, f64::INFINITY, 2.0);
        assert!((var - 4.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_abs_moment_matches_closed_form() {
        // E[|S| 1{|S|<b}] = sqrt(2/pi) sigma (1 - exp(-b^2 / 2 sigma^2))
        let (b, s) = (0.7, 1.3);
        let v = truncated_normal_even_expectation(|t| t.abs(), b, s);
        let exact = (2.0 / PI).sqrt() * s * (1.0 - (-b * b / (2.0 * s * s)).exp());
        assert!((v - exact).abs() < 1e-14);
    }
}
