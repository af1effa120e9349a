//! Violation-rate feedback for quantile estimates.
//!
//! The running violation rate starts at the target level `alpha` with a
//! prior weight of `warmup` observations and is updated after each step:
//!
//! ```text
//! alpha_hat = (hits + alpha * warmup) / (steps + warmup)
//! q_adj     = q_hat - kappa * (alpha_hat - alpha)
//! hit       = x <= q_adj
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensatorConfig {
    pub alpha: f64,
    pub kappa: f64,
    /// Prior weight of the initial `alpha_hat = alpha`; the window size in a backtest.
    pub warmup: u64,
}

impl CompensatorConfig {
    pub fn new(alpha: f64, kappa: f64, warmup: u64) -> Result<Self> {
        let cfg = CompensatorConfig {
            alpha,
            kappa,
            warmup,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidKappa(self.kappa));
        }
        if self.warmup == 0 {
            return Err(Error::InvalidConfig(
                "warmup weight must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn with_kappa(self, kappa: f64) -> Self {
        CompensatorConfig { kappa, ..self }
    }
}

/// Running hit count and the derived violation rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensatorState {
    pub hit_count: u64,
    pub steps_seen: u64,
    pub alpha_hat: f64,
}

impl CompensatorState {
    pub fn initial(cfg: &CompensatorConfig) -> Self {
        CompensatorState {
            hit_count: 0,
            steps_seen: 0,
            alpha_hat: cfg.alpha,
        }
    }

    /// Number of observations behind `alpha_hat`, prior weight included.
    pub fn denominator(&self, cfg: &CompensatorConfig) -> u64 {
        self.steps_seen + cfg.warmup
    }

    /// Records whether `x` fell at or below `q_adj` and returns the new state.
    pub fn observe(&self, cfg: &CompensatorConfig, x: f64, q_adj: f64) -> (bool, Self) {
        let hit = x <= q_adj;
        let hit_count = self.hit_count + u64::from(hit);
        let steps_seen = self.steps_seen + 1;
        let alpha_hat = weighted_rate(hit_count, steps_seen, cfg);
        (
            hit,
            CompensatorState {
                hit_count,
                steps_seen,
                alpha_hat,
            },
        )
    }
}

fn weighted_rate(hit_count: u64, steps_seen: u64, cfg: &CompensatorConfig) -> f64 {
    (hit_count as f64 + cfg.alpha * cfg.warmup as f64) / (steps_seen + cfg.warmup) as f64
}

/// `q_hat - kappa * (alpha_hat - alpha)`. The adjusted VaR is its negation.
pub fn adjusted_quantile(q_hat: f64, state: &CompensatorState, cfg: &CompensatorConfig) -> f64 {
    q_hat - cfg.kappa * (state.alpha_hat - cfg.alpha)
}

/// Exclusive upper bound `2 L (T - W)` for admissible `kappa`.
pub fn kappa_bound(bound: f64, total: usize, window: usize) -> Result<f64> {
    if window >= total {
        return Err(Error::WindowExceedsSample { window, total });
    }
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "bound L must be positive, got {bound}"
        )));
    }
    Ok(2.0 * bound * (total - window) as f64)
}

/// Convergence envelope `2 L / kappa + 1 / n` around `alpha` for the running
/// violation rate of a bounded series.
pub fn theorem1_band(bound: f64, kappa: f64, n: u64) -> Result<f64> {
    if kappa == 0.0 {
        return Err(Error::ZeroKappa);
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidKappa(kappa));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("band needs n >= 1".into()));
    }
    Ok(2.0 * bound / kappa + 1.0 / n as f64)
}

/// A config and its state bundled together for step-by-step use.
#[derive(Debug, Clone, Copy)]
pub struct Compensator {
    cfg: CompensatorConfig,
    state: CompensatorState,
}

/// Result of one compensated step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub q_adj: f64,
    pub hit: bool,
    pub alpha_hat: f64,
}

impl Compensator {
    pub fn new(cfg: CompensatorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Compensator {
            cfg,
            state: CompensatorState::initial(&cfg),
        })
    }

    pub fn config(&self) -> &CompensatorConfig {
        &self.cfg
    }

    pub fn state(&self) -> &CompensatorState {
        &self.state
    }

    /// Adjusts `q_hat` with the gain `kappa`, then observes `x`.
    pub fn step_with_kappa(&mut self, q_hat: f64, x: f64, kappa: f64) -> Step {
        let cfg = self.cfg.with_kappa(kappa);
        let q_adj = adjusted_quantile(q_hat, &self.state, &cfg);
        let (hit, next) = self.state.observe(&cfg, x, q_adj);
        self.state = next;
        Step {
            q_adj,
            hit,
            alpha_hat: next.alpha_hat,
        }
    }

    pub fn step(&mut self, q_hat: f64, x: f64) -> Step {
        self.step_with_kappa(q_hat, x, self.cfg.kappa)
    }
}
