//! Compensatory quantile model for rolling-window VaR.
//!
//! Any rolling distribution estimate (normal, empirical or Student-t) yields a
//! raw `alpha`-quantile `q_hat`. The compensator shifts it by
//! `kappa * (alpha_hat - alpha)`, where `alpha_hat` is the running violation
//! rate, so that persistent over- or under-coverage is pushed back toward
//! `alpha`. Backtests report the Kupiec and Christoffersen p-values.
//!
//! ```
//! use compvar::{run_backtest, BacktestConfig, DistKind, sims::generate_gaussian};
//!
//! let series = generate_gaussian(1_200, 0.0, 0.01, 7).unwrap();
//! let cfg = BacktestConfig::new(0.05, 5.0, 200, DistKind::Normal);
//! let report = run_backtest(&series, &cfg).unwrap();
//! assert_eq!(report.steps(), 1_000);
//! ```

pub mod backtest;
pub mod cli;
pub mod compensator;
pub mod dist;
pub mod engine;
pub mod error;
pub mod io;
pub mod series;
pub mod sims;
pub mod special;

pub use backtest::{check_loss, christoffersen, kupiec, TestResult, ViolationLedger};
pub use compensator::{
    adjusted_quantile, kappa_bound, theorem1_band, Compensator, CompensatorConfig, CompensatorState,
};
pub use dist::{
    fit, fit_empirical, fit_normal, fit_student_t, quantile, DistKind, DistributionEstimate, Window,
};
pub use engine::{run_backtest, sweep_kappa, BacktestConfig, BacktestReport, KappaSchedule};
pub use error::{Error, Result};
pub use series::{log_returns, ReturnSeries};
pub use special::{chi2_1_survival, inv_normal_cdf, normal_cdf};
