//! Derived values checked against independent oracles: numerical
//! integration for the normal and chi-squared tails, exact rational
//! arithmetic for sample moments.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use compvar::dist::{fit_normal, fit_student_t, DistKind, Window};
use compvar::sims::generate_gaussian;
use compvar::{
    check_loss, chi2_1_survival, christoffersen, inv_normal_cdf, kupiec, ViolationLedger,
};

fn pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Composite Simpson on [a, b] with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Phi(x) = 1/2 + integral of the density over [0, x].
fn cdf_oracle(x: f64) -> f64 {
    0.5 + simpson(pdf, 0.0, x, 20_000)
}

fn inv_oracle(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf_oracle(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// P(chi2_1 > x) = 2 P(Z > sqrt x), tail integrated out to 40.
fn chi2_oracle(x: f64) -> f64 {
    2.0 * simpson(pdf, x.sqrt(), 40.0, 200_000)
}

#[test]
fn inverse_normal_matches_quadrature() {
    let oracle = inv_oracle(0.975);
    assert!((oracle - 1.959_964_0).abs() < 1e-7, "oracle {oracle}");
    let q = inv_normal_cdf(0.975).unwrap();
    assert!((q - oracle).abs() < 1e-8, "{q} vs {oracle}");

    let q05 = inv_normal_cdf(0.05).unwrap();
    assert!((q05 - inv_oracle(0.05)).abs() < 1e-8);
    assert!((q05 + 1.644_853_6).abs() < 1e-6);
}

#[test]
fn chi2_survival_matches_quadrature() {
    for x in [0.5, 3.841459, 10.2587] {
        let got = chi2_1_survival(x).unwrap();
        let want = chi2_oracle(x);
        assert!((got - want).abs() < 1e-10, "x={x}: {got} vs {want}");
    }
    assert!((chi2_1_survival(3.841459).unwrap() - 0.05).abs() < 1e-6);
    assert!((chi2_1_survival(10.2587).unwrap() - 0.00136).abs() < 5e-6);
}

#[test]
fn kupiec_all_quiet_ledger() {
    let want = 200.0 * (1.0f64 / 0.95).ln();
    let r = kupiec(&ViolationLedger::new(100, 0, 0, 0), 0.05).unwrap();
    assert!((r.statistic - want).abs() < 1e-12);
    assert!((r.p_value - chi2_oracle(want)).abs() < 1e-10);
    assert!((r.p_value - 0.00136).abs() < 1e-5);
}

#[test]
fn christoffersen_alternating_ledger() {
    let r = christoffersen(&ViolationLedger::new(0, 4, 3, 0)).unwrap();
    let want = -2.0 * (3.0 * (3.0f64 / 7.0).ln() + 4.0 * (4.0f64 / 7.0).ln());
    assert!((r.statistic - want).abs() < 1e-12);
    assert!((r.statistic - 9.5606).abs() < 2e-4);
    assert!((r.p_value - chi2_oracle(want)).abs() < 1e-10);
    assert!((r.p_value - 0.00199).abs() < 1e-5);
}

fn exact_moments(x: &[f64]) -> (f64, f64) {
    let n = BigRational::from_integer(x.len().into());
    let vals: Vec<BigRational> = x
        .iter()
        .map(|&v| BigRational::from_float(v).unwrap())
        .collect();
    let mean = vals.iter().fold(BigRational::zero(), |a, v| a + v) / &n;
    let var = vals
        .iter()
        .map(|v| (v - &mean) * (v - &mean))
        .fold(BigRational::zero(), |a, v| a + v)
        / &n;
    (mean.to_f64().unwrap(), var.to_f64().unwrap())
}

#[test]
fn seeded_fits_match_exact_moments() {
    let series = generate_gaussian(200, 0.0, 0.01, 42).unwrap();
    let x = series.values();
    let (mean, var) = exact_moments(x);

    let est = fit_normal(Window::new(x).unwrap()).unwrap();
    assert!((est.location() - mean).abs() < 1e-15);
    assert!((est.scale() - var.sqrt()).abs() < 1e-14);
    // Within three standard errors of the generating parameters.
    assert!(est.location().abs() < 3.0 * 0.1 / 200f64.sqrt());
    assert!((est.scale() - 0.1).abs() < 3.0 * 0.1 / 400f64.sqrt());

    let t = fit_student_t(Window::new(x).unwrap(), 5.0).unwrap();
    assert_eq!(t.kind(), DistKind::t(5.0));
    assert!((t.scale() - var.sqrt() * 0.6f64.sqrt()).abs() < 1e-14);
}

#[test]
fn generator_moments_within_standard_error() {
    let series = generate_gaussian(10_200, 0.0, 0.01, 42).unwrap();
    let (mean, var) = exact_moments(series.values());
    assert!(mean.abs() < 4.0 * 0.1 / 10_200f64.sqrt(), "{mean}");
    assert!((var - 0.01).abs() < 0.001, "{var}");
}

#[test]
fn check_loss_brute_force_on_one_to_hundred() {
    let sample: Vec<f64> = (1..=100).map(f64::from).collect();
    let losses: Vec<f64> = sample
        .iter()
        .map(|&xi| check_loss(&sample, xi, 0.05).unwrap())
        .collect();
    let best = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    let argmins: Vec<f64> = sample
        .iter()
        .zip(&losses)
        .filter(|(_, &l)| l == best)
        .map(|(&x, _)| x)
        .collect();
    // Flat between the 5th and 6th order statistics; 5 is the type-1 choice.
    assert!(argmins.contains(&5.0), "{argmins:?}");
    let est = compvar::dist::fit_empirical(Window::new(&sample).unwrap()).unwrap();
    assert_eq!(est.quantile(0.05).unwrap(), 5.0);
}
