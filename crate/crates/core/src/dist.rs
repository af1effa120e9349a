//! Per-window distribution fits and their quantiles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{inv_normal_cdf, inv_student_t_cdf};

/// Default degrees of freedom for the Student-t fit.
pub const DEFAULT_DOF: f64 = 5.0;

/// A validated window of trailing returns.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a>(&'a [f64]);

impl<'a> Window<'a> {
    pub fn new(values: &'a [f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::WindowTooShort { len: 0, min: 1 });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Window(values))
    }

    pub fn values(&self) -> &'a [f64] {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn require_len(&self, min: usize) -> Result<()> {
        if self.len() < min {
            return Err(Error::WindowTooShort {
                len: self.len(),
                min,
            });
        }
        Ok(())
    }

    /// True when every value equals the first. The rounded mean of such a
    /// window can differ from the value, leaving a tiny nonzero variance.
    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&v| v == self.0[0])
    }

    /// Sample mean and maximum-likelihood variance (divide by `len`).
    pub fn mean_and_variance(&self) -> (f64, f64) {
        let n = self.len() as f64;
        let mean = self.0.iter().sum::<f64>() / n;
        let ss: f64 = self.0.iter().map(|x| (x - mean) * (x - mean)).sum();
        (mean, ss / n)
    }
}

/// Family of the per-window distribution estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DistKind {
    Normal,
    Empirical,
    StudentT { dof: f64 },
}

impl DistKind {
    /// Student-t with the given degrees of freedom.
    pub fn t(dof: f64) -> Self {
        DistKind::StudentT { dof }
    }
}

impl fmt::Display for DistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistKind::Normal => f.write_str("normal"),
            DistKind::Empirical => f.write_str("empirical"),
            DistKind::StudentT { dof } => write!(f, "t:{dof}"),
        }
    }
}

impl FromStr for DistKind {
    type Err = Error;

    /// Accepts `normal`, `empirical`, `t` (default dof) or `t:<dof>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal" => Ok(DistKind::Normal),
            "empirical" => Ok(DistKind::Empirical),
            "t" => Ok(DistKind::StudentT { dof: DEFAULT_DOF }),
            other => {
                let dof = other
                    .strip_prefix("t:")
                    .and_then(|d| d.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "unknown distribution `{other}` (expected normal, empirical or t:<dof>)"
                        ))
                    })?;
                if !(dof > 2.0 && dof.is_finite()) {
                    return Err(Error::InvalidDof(dof));
                }
                Ok(DistKind::StudentT { dof })
            }
        }
    }
}

impl TryFrom<String> for DistKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DistKind> for String {
    fn from(kind: DistKind) -> String {
        kind.to_string()
    }
}

/// A fitted window model with a quantile function.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionEstimate {
    kind: DistKind,
    location: f64,
    scale: f64,
    sorted_values: Vec<f64>,
}

impl DistributionEstimate {
    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Degrees of freedom for the Student-t kind.
    pub fn dof(&self) -> Option<f64> {
        match self.kind {
            DistKind::StudentT { dof } => Some(dof),
            _ => None,
        }
    }

    /// The stored window, ascending. Empty unless the kind is empirical.
    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    /// Builds an empirical estimate from values that are already sorted.
    pub(crate) fn empirical_from_sorted(sorted: &[f64]) -> Self {
        let window = Window(sorted);
        let (mean, var) = window.mean_and_variance();
        DistributionEstimate {
            kind: DistKind::Empirical,
            location: mean,
            scale: var.sqrt(),
            sorted_values: sorted.to_vec(),
        }
    }

    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        Ok(match self.kind {
            DistKind::Normal => self.location + self.scale * inv_normal_cdf(alpha)?,
            DistKind::StudentT { dof } => {
                self.location + self.scale * inv_student_t_cdf(alpha, dof)?
            }
            DistKind::Empirical => empirical_quantile_sorted(&self.sorted_values, alpha),
        })
    }
}

pub fn fit_normal(window: Window<'_>) -> Result<DistributionEstimate> {
    window.require_len(2)?;
    let (mean, var) = window.mean_and_variance();
    if var == 0.0 || window.is_constant() {
        return Err(Error::ZeroVariance { len: window.len() });
    }
    Ok(DistributionEstimate {
        kind: DistKind::Normal,
        location: mean,
        scale: var.sqrt(),
        sorted_values: Vec::new(),
    })
}

pub fn fit_empirical(window: Window<'_>) -> Result<DistributionEstimate> {
    let mut sorted = window.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(DistributionEstimate::empirical_from_sorted(&sorted))
}

/// Student-t fit with fixed `dof` and a scale chosen so the fitted variance
/// equals the sample variance: `scale = sd * sqrt((dof - 2) / dof)`.
pub fn fit_student_t(window: Window<'_>, dof: f64) -> Result<DistributionEstimate> {
    if !(dof > 2.0 && dof.is_finite()) {
        return Err(Error::InvalidDof(dof));
    }
    window.require_len(2)?;
    let (mean, var) = window.mean_and_variance();
    if var == 0.0 || window.is_constant() {
        return Err(Error::ZeroVariance { len: window.len() });
    }
    Ok(DistributionEstimate {
        kind: DistKind::StudentT { dof },
        location: mean,
        scale: var.sqrt() * ((dof - 2.0) / dof).sqrt(),
        sorted_values: Vec::new(),
    })
}

pub fn fit(kind: DistKind, window: Window<'_>) -> Result<DistributionEstimate> {
    match kind {
        DistKind::Normal => fit_normal(window),
        DistKind::Empirical => fit_empirical(window),
        DistKind::StudentT { dof } => fit_student_t(window, dof),
    }
}

pub fn quantile(est: &DistributionEstimate, alpha: f64) -> Result<f64> {
    est.quantile(alpha)
}

/// Rank (1-based) of the left-continuous inverse: `ceil(alpha * n)`, clamped
/// to `1..=n`. Products within a few ulps of an integer are snapped to it, so
/// `0.07 * 100` selects the 7th value rather than the 8th.
pub fn empirical_rank(alpha: f64, n: usize) -> usize {
    let t = alpha * n as f64;
    let nearest = t.round();
    let k = if (t - nearest).abs() <= 4.0 * f64::EPSILON * t.max(1.0) {
        nearest
    } else {
        t.ceil()
    };
    (k as usize).clamp(1, n)
}

pub(crate) fn empirical_quantile_sorted(sorted: &[f64], alpha: f64) -> f64 {
    sorted[empirical_rank(alpha, sorted.len()) - 1]
}
