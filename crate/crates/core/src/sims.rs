//! Seeded synthetic data and the convergence experiments.
//!
//! # Random numbers
//!
//! Gaussian draws come from ChaCha20 (`rand_chacha`, seeded with
//! `seed_from_u64`) through the Box-Muller transform. Uniforms use the top 53
//! bits of each 64-bit output; `ln`, `sin` and `cos` come from `libm`, so a
//! seed produces the same series on every platform. Replication `r` of an
//! ensemble reads ChaCha stream `r` of the same seed.

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compensator::{
    adjusted_quantile, theorem1_band, Compensator, CompensatorConfig, CompensatorState,
};
use crate::dist::DistKind;
use crate::engine::{rolling_quantiles, sweep_kappa, BacktestConfig, BacktestReport};
use crate::error::{Error, Result};
use crate::series::ReturnSeries;

/// Standard normal draws from a seeded ChaCha20 stream.
pub struct GaussianSource {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        GaussianSource { rng, spare: None }
    }

    fn unit_open_closed(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn unit_closed_open(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.unit_open_closed();
        let u2 = self.unit_closed_open();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }
}

/// `n` i.i.d. draws of `N(mean, variance)`.
pub fn generate_gaussian(n: usize, mean: f64, variance: f64, seed: u64) -> Result<ReturnSeries> {
    generate_gaussian_stream(n, mean, variance, seed, 0)
}

pub fn generate_gaussian_stream(
    n: usize,
    mean: f64,
    variance: f64,
    seed: u64,
    stream: u64,
) -> Result<ReturnSeries> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "variance must be positive, got {variance}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one draw".into()));
    }
    let sd = variance.sqrt();
    let mut src = GaussianSource::new(seed, stream);
    ReturnSeries::new((0..n).map(|_| mean + sd * src.next_standard()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_total: usize,
    pub window: usize,
    pub alpha: f64,
    pub kappas: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
    pub replications: usize,
    pub dist: DistKind,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_total: 10_200,
            window: 200,
            alpha: 0.01,
            kappas: vec![0.0, 20.0, 50.0, 200.0],
            mean: 0.0,
            variance: 0.01,
            seed: 42,
            replications: 1,
            dist: DistKind::Normal,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_total <= self.window + 1 {
            return Err(Error::SeriesTooShort {
                len: self.n_total,
                window: self.window,
                needed: self.window + 1,
            });
        }
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "variance must be positive, got {}",
                self.variance
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        if let Some(&k) = self.kappas.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
            return Err(Error::InvalidKappa(k));
        }
        Ok(())
    }

    fn backtest_config(&self) -> BacktestConfig {
        BacktestConfig::new(self.alpha, 0.0, self.window, self.dist)
    }
}

/// One kappa's run of the convergence experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kappa: f64,
    pub report: BacktestReport,
    /// `2L/kappa + 1/n` after each step, with the realized `L = max |X|`;
    /// `None` when `kappa = 0`.
    pub band: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn alpha_hat_path(&self) -> &[f64] {
        &self.report.alpha_hat_weighted_path
    }

    pub fn terminal_deviation(&self) -> f64 {
        (self.report.alpha_hat_weighted() - self.report.alpha).abs()
    }
}

/// Path of `2L/kappa + 1/n` for `steps` steps after `warmup` prior observations.
pub fn band_path(bound: f64, kappa: f64, warmup: usize, steps: usize) -> Result<Vec<f64>> {
    (1..=steps)
        .map(|i| theorem1_band(bound, kappa, (warmup + i) as u64))
        .collect()
}

/// Backtests one generated Gaussian series for every kappa in the config.
pub fn convergence_experiment(cfg: &SimConfig) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    let series = generate_gaussian(cfg.n_total, cfg.mean, cfg.variance, cfg.seed)?;
    let reports = sweep_kappa(&series, &cfg.backtest_config(), &cfg.kappas)?;
    reports
        .into_iter()
        .zip(&cfg.kappas)
        .map(|(report, &kappa)| {
            let band = if kappa > 0.0 {
                Some(band_path(
                    series.bound(),
                    kappa,
                    cfg.window,
                    report.steps(),
                )?)
            } else {
                None
            };
            Ok(Trajectory {
                kappa,
                report,
                band,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialConfig {
    pub kappa: f64,
    pub bound: f64,
    pub steps: usize,
    pub seed: u64,
    pub alpha: f64,
    /// The constant quantile estimate fed to the compensator; `|c| <= bound`.
    pub estimate: f64,
    pub warmup: u64,
    /// Standard deviation of the Gaussian noise before clipping to `[-L, L]`.
    pub noise_sd: f64,
}

impl AdversarialConfig {
    pub fn new(kappa: f64, bound: f64, steps: usize, seed: u64) -> Self {
        AdversarialConfig {
            kappa,
            bound,
            steps,
            seed,
            alpha: 0.05,
            estimate: bound,
            warmup: 1,
            noise_sd: bound / 2.0,
        }
    }

    pub fn with_estimate(self, estimate: f64) -> Self {
        AdversarialConfig { estimate, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandOutcome {
    pub passed: bool,
    /// First step (1-based) at which `|alpha_hat - alpha|` is inside the band.
    pub reentry_step: Option<usize>,
    /// Smallest `band - |alpha_hat - alpha|` after re-entry; negative on failure.
    pub worst_margin: f64,
    pub violations: usize,
    /// Fraction of steps that were hits.
    pub hit_rate: f64,
}

/// Feeds the compensator a fixed, deliberately wrong quantile estimate against
/// clipped Gaussian noise and checks the convergence band after re-entry.
pub fn adversarial_band_test(cfg: &AdversarialConfig) -> Result<BandOutcome> {
    if !(cfg.bound > 0.0 && cfg.bound.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "bound must be positive, got {}",
            cfg.bound
        )));
    }
    if cfg.estimate.abs() > cfg.bound {
        return Err(Error::InvalidConfig(format!(
            "estimate {} lies outside [-{b}, {b}]",
            cfg.estimate,
            b = cfg.bound
        )));
    }
    if cfg.kappa == 0.0 {
        return Err(Error::ZeroKappa);
    }
    let mut comp = Compensator::new(CompensatorConfig::new(cfg.alpha, cfg.kappa, cfg.warmup)?)?;
    let mut noise = GaussianSource::new(cfg.seed, 0);
    let mut reentry_step = None;
    let mut worst_margin = f64::INFINITY;
    let mut violations = 0;
    let mut hits = 0usize;
    for i in 1..=cfg.steps {
        let x = (cfg.noise_sd * noise.next_standard()).clamp(-cfg.bound, cfg.bound);
        let step = comp.step(cfg.estimate, x);
        hits += usize::from(step.hit);
        let n = comp.state().denominator(comp.config());
        let band = theorem1_band(cfg.bound, cfg.kappa, n)?;
        let margin = band - (step.alpha_hat - cfg.alpha).abs();
        if reentry_step.is_none() && margin >= 0.0 {
            reentry_step = Some(i);
        }
        if reentry_step.is_some() {
            worst_margin = worst_margin.min(margin);
            if margin < 0.0 {
                violations += 1;
            }
        }
    }
    Ok(BandOutcome {
        passed: reentry_step.is_some() && violations == 0,
        reentry_step,
        worst_margin,
        violations,
        hit_rate: hits as f64 / cfg.steps.max(1) as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub kappa: f64,
    pub replications: usize,
    /// Cross-replication mean of the running violation rate after each step.
    pub mean_alpha_tilde_path: Vec<f64>,
    /// Cross-replication sample variance after each step.
    pub variance_path: Vec<f64>,
    /// `2 L_a / kappa + 1/n` with `L_a` the running max `|q_hat|`; `None` when `kappa = 0`.
    pub band: Option<Vec<f64>>,
    /// Final `L_a`.
    pub quantile_bound: f64,
}

impl EnsembleResult {
    pub fn terminal_mean(&self) -> f64 {
        *self.mean_alpha_tilde_path.last().expect("nonempty path")
    }

    /// Monte-Carlo standard error of the terminal mean.
    pub fn terminal_std_error(&self) -> f64 {
        (self.variance_path.last().expect("nonempty path") / self.replications as f64).sqrt()
    }
}

/// Lockstep ensemble where every replication is penalized by the
/// cross-replication mean of the running violation rate, a Monte-Carlo
/// stand-in for its expectation.
pub fn ensemble_experiment(cfg: &SimConfig, kappa: f64) -> Result<EnsembleResult> {
    cfg.validate()?;
    if cfg.replications < 2 {
        return Err(Error::TooFewReplications(cfg.replications));
    }
    let series: Vec<ReturnSeries> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| generate_gaussian_stream(cfg.n_total, cfg.mean, cfg.variance, cfg.seed, r))
        .collect::<Result<_>>()?;
    lockstep_ensemble(&series, cfg.window, cfg.dist, cfg.alpha, kappa)
}

/// Runs the mean-penalized compensator over pre-built replication series.
pub fn lockstep_ensemble(
    series: &[ReturnSeries],
    window: usize,
    dist: DistKind,
    alpha: f64,
    kappa: f64,
) -> Result<EnsembleResult> {
    if series.is_empty() {
        return Err(Error::TooFewReplications(0));
    }
    let comp_cfg = CompensatorConfig::new(alpha, kappa, window as u64)?;
    let q_hats: Vec<Vec<f64>> = series
        .par_iter()
        .map(|s| rolling_quantiles(s, window, dist, alpha))
        .collect::<Result<_>>()?;
    let steps = q_hats[0].len();
    if q_hats.iter().any(|q| q.len() != steps) {
        return Err(Error::InvalidConfig("replications differ in length".into()));
    }

    let r = series.len() as f64;
    let mut states = vec![CompensatorState::initial(&comp_cfg); series.len()];
    let mut mean_path = Vec::with_capacity(steps);
    let mut variance_path = Vec::with_capacity(steps);
    let mut band = (kappa > 0.0).then(|| Vec::with_capacity(steps));
    let mut quantile_bound = 0.0f64;

    // `i` indexes every replication in lockstep.
    #[allow(clippy::needless_range_loop)]
    for i in 0..steps {
        let mean_before = states.iter().map(|s| s.alpha_hat).sum::<f64>() / r;
        let shared = CompensatorState {
            alpha_hat: mean_before,
            ..states[0]
        };
        for (k, state) in states.iter_mut().enumerate() {
            let q_hat = q_hats[k][i];
            quantile_bound = quantile_bound.max(q_hat.abs());
            let q_adj = adjusted_quantile(q_hat, &shared, &comp_cfg);
            let x = series[k].values()[window + i];
            *state = state.observe(&comp_cfg, x, q_adj).1;
        }
        let mean = states.iter().map(|s| s.alpha_hat).sum::<f64>() / r;
        let var = if series.len() > 1 {
            states
                .iter()
                .map(|s| (s.alpha_hat - mean).powi(2))
                .sum::<f64>()
                / (r - 1.0)
        } else {
            0.0
        };
        mean_path.push(mean);
        variance_path.push(var);
        if let Some(b) = band.as_mut() {
            let n = states[0].denominator(&comp_cfg);
            b.push(theorem1_band(quantile_bound, kappa, n)?);
        }
    }

    Ok(EnsembleResult {
        kappa,
        replications: series.len(),
        mean_alpha_tilde_path: mean_path,
        variance_path,
        band,
        quantile_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_backtest;

    #[test]
    fn same_seed_same_series() {
        let a = generate_gaussian(500, 0.0, 0.01, 7).unwrap();
        let b = generate_gaussian(500, 0.0, 0.01, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_gaussian(500, 0.0, 0.01, 8).unwrap();
        assert_ne!(a, c);
        let d = generate_gaussian_stream(500, 0.0, 0.01, 7, 1).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn variance_must_be_positive() {
        assert!(generate_gaussian(10, 0.0, 0.0, 1).is_err());
        assert!(generate_gaussian(10, 0.0, -1.0, 1).is_err());
    }

    #[test]
    fn single_replication_matches_realized_compensator() {
        let s = generate_gaussian(600, 0.0, 0.01, 3).unwrap();
        let ens =
            lockstep_ensemble(std::slice::from_ref(&s), 100, DistKind::Normal, 0.05, 4.0).unwrap();
        let rep = run_backtest(&s, &BacktestConfig::new(0.05, 4.0, 100, DistKind::Normal)).unwrap();
        assert_eq!(ens.mean_alpha_tilde_path, rep.alpha_hat_weighted_path);
        assert!(ens.variance_path.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ensemble_needs_two_replications() {
        let cfg = SimConfig {
            n_total: 400,
            replications: 1,
            ..SimConfig::default()
        };
        assert!(matches!(
            ensemble_experiment(&cfg, 10.0),
            Err(Error::TooFewReplications(1))
        ));
    }

    #[test]
    fn adversarial_rejects_out_of_bound_estimate() {
        let cfg = AdversarialConfig::new(20.0, 0.1, 100, 1).with_estimate(0.2);
        assert!(adversarial_band_test(&cfg).is_err());
        let cfg = AdversarialConfig::new(0.0, 0.1, 100, 1);
        assert!(matches!(adversarial_band_test(&cfg), Err(Error::ZeroKappa)));
    }

    #[test]
    fn band_path_strictly_decreasing() {
        let b = band_path(0.3, 50.0, 200, 1000).unwrap();
        assert!(b.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn sim_config_validation() {
        let mut cfg = SimConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.n_total = 200;
        assert!(cfg.validate().is_err());
        let cfg = SimConfig {
            kappas: vec![1.0, -3.0],
            ..SimConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidKappa(_))));
    }
}
