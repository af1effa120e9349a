use proptest::prelude::*;

use compvar::dist::{fit_normal, DistKind, Window};
use compvar::engine::{rolling_quantiles, run_backtest, sweep_kappa, BacktestConfig};
use compvar::sims::generate_gaussian;
use compvar::{inv_normal_cdf, theorem1_band, ReturnSeries};

fn series(len: usize, seed: u64) -> ReturnSeries {
    generate_gaussian(len, 0.0, 0.01, seed).unwrap()
}

#[test]
fn kappa_zero_is_classical_rolling_normal_var() {
    let s = series(400, 3);
    let cfg = BacktestConfig::new(0.05, 0.0, 100, DistKind::Normal);
    let r = run_backtest(&s, &cfg).unwrap();
    let z = inv_normal_cdf(0.05).unwrap();
    for (i, &v) in r.var_adj.iter().enumerate() {
        let est = fit_normal(Window::new(&s.values()[i..i + 100]).unwrap()).unwrap();
        assert_eq!(v, -(est.location() + est.scale() * z));
        assert_eq!(v, r.var_raw[i]);
    }
}

#[test]
fn kappa_zero_path_is_prior_weighted_hit_rate() {
    let s = series(600, 4);
    let (alpha, w) = (0.05, 200);
    let r = run_backtest(&s, &BacktestConfig::new(alpha, 0.0, w, DistKind::Empirical)).unwrap();
    let q = rolling_quantiles(&s, w, DistKind::Empirical, alpha).unwrap();
    let mut hits = 0.0;
    for (i, &x) in s.values()[w..].iter().enumerate() {
        if x <= q[i] {
            hits += 1.0;
        }
        let want = (hits + alpha * w as f64) / ((i + 1 + w) as f64);
        assert!((r.alpha_hat_weighted_path[i] - want).abs() < 1e-15);
    }
}

#[test]
fn singleton_sweep_equals_run_backtest() {
    let s = series(500, 5);
    let cfg = BacktestConfig::new(0.01, 0.0, 200, DistKind::Normal);
    let swept = sweep_kappa(&s, &cfg, &[3.0]).unwrap();
    assert_eq!(swept.len(), 1);
    assert_eq!(swept[0], run_backtest(&s, &cfg.with_kappa(3.0)).unwrap());
}

#[test]
fn sweep_preserves_order_and_repeats() {
    let s = series(500, 6);
    let cfg = BacktestConfig::new(0.05, 0.0, 200, DistKind::t(5.0));
    let kappas = [5.0, 0.0, 2.0, 1.0];
    let a = sweep_kappa(&s, &cfg, &kappas).unwrap();
    let b = sweep_kappa(&s, &cfg, &kappas).unwrap();
    assert_eq!(a, b);
    for (r, &k) in a.iter().zip(&kappas) {
        assert_eq!(r.kappa, Some(k));
    }
}

#[test]
fn band_holds_at_scale() {
    let (t, w, alpha) = (10_200, 200, 0.01);
    let s = series(t, 11);
    let cfg = BacktestConfig::new(alpha, 0.0, w, DistKind::Normal);
    for r in sweep_kappa(&s, &cfg, &[20.0, 50.0, 200.0]).unwrap() {
        let k = r.kappa.unwrap();
        let band = theorem1_band(s.bound(), k, (t - w) as u64).unwrap();
        let slack = alpha * w as f64 / t as f64;
        let dev = (r.alpha_hat_weighted() - alpha).abs();
        assert!(dev <= band + slack, "kappa {k}: {dev} > {band} + {slack}");
    }
}

#[test]
fn ledger_identity() {
    let s = series(700, 8);
    let r = run_backtest(&s, &BacktestConfig::new(0.05, 2.0, 200, DistKind::Normal)).unwrap();
    let l = r.ledger;
    assert_eq!(l.total() as usize, r.steps() - 1);
    assert_eq!(r.alpha_hat_raw * (l.m0() + l.m1()) as f64, l.m1() as f64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn causality_under_mutation(
        seed in any::<u64>(),
        w in 10usize..60,
        extra in 5usize..120,
        kappa in prop_oneof![Just(0.0), 0.5f64..100.0],
        pick in 0.0f64..1.0,
        bump in -1.0f64..1.0,
        dist in prop_oneof![Just(DistKind::Normal), Just(DistKind::Empirical), Just(DistKind::t(4.0))],
    ) {
        let s = series(w + extra, seed);
        let cfg = BacktestConfig::new(0.05, kappa, w, dist);
        let base = run_backtest(&s, &cfg).unwrap();
        let at = w + ((extra as f64 * pick) as usize).min(extra - 1);
        let mut v = s.values().to_vec();
        v[at] += bump;
        let moved = run_backtest(&ReturnSeries::new(v).unwrap(), &cfg).unwrap();
        let upto = at - w;
        for i in 0..=upto {
            prop_assert_eq!(base.var_adj[i].to_bits(), moved.var_adj[i].to_bits());
        }
    }

    #[test]
    fn hits_match_adjusted_var(seed in any::<u64>(), kappa in 0.0f64..50.0) {
        let s = series(320, seed);
        let r = run_backtest(&s, &BacktestConfig::new(0.05, kappa, 200, DistKind::Normal)).unwrap();
        for (i, &h) in r.hits.iter().enumerate() {
            prop_assert_eq!(h, s.values()[200 + i] <= -r.var_adj[i]);
        }
    }
}
