//! Rolling-window backtest of the compensated VaR.
//!
//! For every step `s` after the first `window` observations the engine fits
//! the chosen distribution to the preceding `window` returns, takes its
//! `alpha`-quantile, shifts it by the compensator penalty and records whether
//! `X_s` fell at or below the shifted quantile. The warm-up block is never
//! tested.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtest::{christoffersen, kupiec, TestResult, ViolationLedger};
use crate::compensator::{kappa_bound, Compensator, CompensatorConfig};
use crate::dist::{empirical_quantile_sorted, fit, DistKind, Window};
use crate::error::{Error, Result};
use crate::series::ReturnSeries;

/// Penalty gain, either fixed or a function of the running denominator `n`
/// (the number of observations behind `alpha_hat`, prior weight included).
#[derive(Clone)]
pub enum KappaSchedule {
    Constant(f64),
    PerStep(Arc<dyn Fn(u64) -> f64 + Send + Sync>),
}

impl KappaSchedule {
    pub fn at(&self, n: u64) -> f64 {
        match self {
            KappaSchedule::Constant(k) => *k,
            KappaSchedule::PerStep(f) => f(n),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            KappaSchedule::Constant(k) => Some(*k),
            KappaSchedule::PerStep(_) => None,
        }
    }
}

impl fmt::Debug for KappaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaSchedule::Constant(k) => f.debug_tuple("Constant").field(k).finish(),
            KappaSchedule::PerStep(_) => f.write_str("PerStep(..)"),
        }
    }
}

impl From<f64> for KappaSchedule {
    fn from(k: f64) -> Self {
        KappaSchedule::Constant(k)
    }
}

#[derive(Debug, Clone)]
pub struct BacktestConfig {
    pub alpha: f64,
    pub kappa: KappaSchedule,
    pub window: usize,
    pub dist: DistKind,
    /// Bound `L` used only for the kappa admissibility warning. Defaults to
    /// the realized `max |X|` of the series.
    pub bound: Option<f64>,
}

impl BacktestConfig {
    pub fn new(alpha: f64, kappa: f64, window: usize, dist: DistKind) -> Self {
        BacktestConfig {
            alpha,
            kappa: KappaSchedule::Constant(kappa),
            window,
            dist,
            bound: None,
        }
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        BacktestConfig {
            kappa: KappaSchedule::Constant(kappa),
            ..self.clone()
        }
    }

    fn validate(&self, series: &ReturnSeries) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        if let KappaSchedule::Constant(k) = self.kappa {
            check_kappa(k)?;
        }
        let min_window = if self.dist == DistKind::Empirical {
            1
        } else {
            2
        };
        if self.window < min_window {
            return Err(Error::WindowTooShort {
                len: self.window,
                min: min_window,
            });
        }
        if series.len() < self.window + 2 {
            return Err(Error::SeriesTooShort {
                len: series.len(),
                window: self.window,
                needed: self.window + 1,
            });
        }
        if let Some(b) = self.bound {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "bound L must be positive, got {b}"
                )));
            }
        }
        Ok(())
    }
}

fn check_kappa(k: f64) -> Result<()> {
    if k >= 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidKappa(k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub alpha: f64,
    /// `None` for per-step schedules.
    pub kappa: Option<f64>,
    pub window: usize,
    pub dist: DistKind,
    pub bound: f64,
    /// Adjusted VaR per tested step; positive values are loss magnitudes.
    pub var_adj: Vec<f64>,
    /// Unadjusted VaR `-q_hat` per tested step.
    pub var_raw: Vec<f64>,
    pub hits: Vec<bool>,
    /// Prior-weighted running violation rate after each step.
    pub alpha_hat_weighted_path: Vec<f64>,
    /// `M1 / (M0 + M1)` from the transition ledger.
    pub alpha_hat_raw: f64,
    pub ledger: ViolationLedger,
    pub kupiec: TestResult,
    pub christoffersen: TestResult,
    pub mean_var_x100: f64,
}

impl BacktestReport {
    pub fn steps(&self) -> usize {
        self.var_adj.len()
    }

    pub fn alpha_hat_weighted(&self) -> f64 {
        *self.alpha_hat_weighted_path.last().unwrap_or(&self.alpha)
    }
}

/// Unadjusted quantile estimates `q_hat_s` for `s = window..len`, each fitted
/// on the `window` values before `s`.
pub fn rolling_quantiles(
    series: &ReturnSeries,
    window: usize,
    dist: DistKind,
    alpha: f64,
) -> Result<Vec<f64>> {
    let x = series.values();
    if window == 0 || window >= x.len() {
        return Err(Error::WindowExceedsSample {
            window,
            total: x.len(),
        });
    }
    match dist {
        DistKind::Empirical => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::AlphaOutOfRange(alpha));
            }
            // Sliding sorted buffer; holds exactly the sorted window at each step.
            let mut sorted = x[..window].to_vec();
            sorted.sort_by(f64::total_cmp);
            let mut out = Vec::with_capacity(x.len() - window);
            for s in window..x.len() {
                out.push(empirical_quantile_sorted(&sorted, alpha));
                let leaving = x[s - window];
                let pos = sorted
                    .binary_search_by(|v| v.total_cmp(&leaving))
                    .expect("value leaving the window is in the buffer");
                sorted.remove(pos);
                let at = sorted.partition_point(|v| v.total_cmp(&x[s]).is_lt());
                sorted.insert(at, x[s]);
            }
            Ok(out)
        }
        _ => (window..x.len())
            .map(|s| fit(dist, Window::new(&x[s - window..s])?)?.quantile(alpha))
            .collect(),
    }
}

pub fn run_backtest(series: &ReturnSeries, cfg: &BacktestConfig) -> Result<BacktestReport> {
    cfg.validate(series)?;
    let q_hats = rolling_quantiles(series, cfg.window, cfg.dist, cfg.alpha)?;
    compensate(series, cfg, &q_hats)
}

/// One report per kappa, each from a fresh compensator. The rolling fits are
/// shared; the compensated runs execute in parallel.
pub fn sweep_kappa(
    series: &ReturnSeries,
    cfg: &BacktestConfig,
    kappas: &[f64],
) -> Result<Vec<BacktestReport>> {
    for &k in kappas {
        check_kappa(k)?;
    }
    cfg.validate(series)?;
    let q_hats = rolling_quantiles(series, cfg.window, cfg.dist, cfg.alpha)?;
    kappas
        .par_iter()
        .map(|&k| compensate(series, &cfg.with_kappa(k), &q_hats))
        .collect()
}

fn compensate(
    series: &ReturnSeries,
    cfg: &BacktestConfig,
    q_hats: &[f64],
) -> Result<BacktestReport> {
    let x = series.values();
    let total = x.len();
    let bound = cfg.bound.unwrap_or(series.bound());
    if let (Some(k), true) = (cfg.kappa.constant(), bound > 0.0) {
        let limit = kappa_bound(bound, total, cfg.window)?;
        if k >= limit {
            log::warn!("kappa {k} is not below the admissibility bound 2L(T-W) = {limit}");
        }
    }

    let base = CompensatorConfig::new(
        cfg.alpha,
        cfg.kappa.constant().unwrap_or(0.0),
        cfg.window as u64,
    )?;
    let mut comp = Compensator::new(base)?;
    let steps = total - cfg.window;
    let mut var_adj = Vec::with_capacity(steps);
    let mut var_raw = Vec::with_capacity(steps);
    let mut hits = Vec::with_capacity(steps);
    let mut path = Vec::with_capacity(steps);
    for (&q_hat, &x_s) in q_hats.iter().zip(&x[cfg.window..]) {
        let kappa = cfg.kappa.at(comp.state().denominator(comp.config()));
        check_kappa(kappa)?;
        let step = comp.step_with_kappa(q_hat, x_s, kappa);
        var_adj.push(-step.q_adj);
        var_raw.push(-q_hat);
        hits.push(step.hit);
        path.push(step.alpha_hat);
    }

    let ledger = ViolationLedger::from_hits(&hits)?;
    let kupiec = kupiec(&ledger, cfg.alpha)?;
    let christoffersen = christoffersen(&ledger)?;
    let mean_var_x100 = 100.0 * var_adj.iter().sum::<f64>() / steps as f64;
    Ok(BacktestReport {
        alpha: cfg.alpha,
        kappa: cfg.kappa.constant(),
        window: cfg.window,
        dist: cfg.dist,
        bound,
        var_adj,
        var_raw,
        hits,
        alpha_hat_weighted_path: path,
        alpha_hat_raw: ledger.alpha_hat_raw(),
        ledger,
        kupiec,
        christoffersen,
        mean_var_x100,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::fit_empirical;

    fn wavy(n: usize) -> ReturnSeries {
        ReturnSeries::new(
            (0..n)
                .map(|i| 0.01 * ((i as f64 * 0.7).sin() + 0.3 * (i as f64 * 2.3).cos()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empirical_sliding_buffer_matches_refit() {
        let s = wavy(300);
        let q = rolling_quantiles(&s, 50, DistKind::Empirical, 0.05).unwrap();
        for (i, &qi) in q.iter().enumerate() {
            let w = &s.values()[i..i + 50];
            let est = fit_empirical(Window::new(w).unwrap()).unwrap();
            assert_eq!(qi, est.quantile(0.05).unwrap());
        }
    }

    #[test]
    fn too_short_series() {
        let s = wavy(21);
        let cfg = BacktestConfig::new(0.05, 1.0, 20, DistKind::Normal);
        assert!(matches!(
            run_backtest(&s, &cfg),
            Err(Error::SeriesTooShort { len: 21, .. })
        ));
        assert!(run_backtest(&wavy(22), &cfg).is_ok());
    }

    #[test]
    fn degenerate_window_propagates() {
        let mut v = vec![0.0; 30];
        v.extend((0..10).map(|i| i as f64 * 0.01));
        let s = ReturnSeries::new(v).unwrap();
        let cfg = BacktestConfig::new(0.05, 1.0, 20, DistKind::Normal);
        assert!(matches!(
            run_backtest(&s, &cfg),
            Err(Error::ZeroVariance { .. })
        ));
        let emp = BacktestConfig::new(0.05, 1.0, 20, DistKind::Empirical);
        assert!(run_backtest(&s, &emp).is_ok());
    }

    #[test]
    fn rejects_negative_kappa() {
        let s = wavy(100);
        let cfg = BacktestConfig::new(0.05, -1.0, 20, DistKind::Normal);
        assert!(matches!(
            run_backtest(&s, &cfg),
            Err(Error::InvalidKappa(_))
        ));
        let ok = BacktestConfig::new(0.05, 0.0, 20, DistKind::Normal);
        assert!(matches!(
            sweep_kappa(&s, &ok, &[0.0, -2.0]),
            Err(Error::InvalidKappa(_))
        ));
    }

    #[test]
    fn schedule_is_used_per_step() {
        let s = wavy(200);
        let constant = BacktestConfig::new(0.05, 3.0, 40, DistKind::Normal);
        let mut scheduled = constant.clone();
        scheduled.kappa = KappaSchedule::PerStep(Arc::new(|_| 3.0));
        let a = run_backtest(&s, &constant).unwrap();
        let b = run_backtest(&s, &scheduled).unwrap();
        assert_eq!(a.var_adj, b.var_adj);
        assert_eq!(b.kappa, None);

        let mut growing = constant.clone();
        growing.kappa = KappaSchedule::PerStep(Arc::new(|n| (n as f64).sqrt()));
        let c = run_backtest(&s, &growing).unwrap();
        assert_eq!(c.steps(), 160);
    }

    #[test]
    fn report_shapes() {
        let s = wavy(260);
        let r = run_backtest(&s, &BacktestConfig::new(0.05, 2.0, 60, DistKind::t(5.0))).unwrap();
        assert_eq!(r.var_adj.len(), 200);
        assert_eq!(r.hits.len(), 200);
        assert_eq!(r.alpha_hat_weighted_path.len(), 200);
        for (i, &h) in r.hits.iter().enumerate() {
            assert_eq!(h, s.values()[60 + i] <= -r.var_adj[i]);
        }
        let mean = r.var_adj.iter().sum::<f64>() / 200.0;
        assert_eq!(r.mean_var_x100, 100.0 * mean);
        assert_eq!(r.ledger.total(), 199);
    }
}
