//! Violation transition counts, the unconditional-coverage (Kupiec) and
//! independence (Christoffersen) likelihood-ratio tests, and the check loss.
//!
//! Both statistics are evaluated in the G-test form `2 * sum m * ln(m / e)`,
//! where `e` is the count expected under the null. Terms with `m = 0` are
//! dropped (`0 * ln 0 = 0`), and an exact match between observed and expected
//! counts produces a statistic of exactly zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::chi2_1_survival;

/// Counts of consecutive (previous, next) hit pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ViolationLedger {
    pub m00: u64,
    pub m01: u64,
    pub m10: u64,
    pub m11: u64,
}

impl ViolationLedger {
    pub fn new(m00: u64, m01: u64, m10: u64, m11: u64) -> Self {
        ViolationLedger { m00, m01, m10, m11 }
    }

    pub fn from_hits(hits: &[bool]) -> Result<Self> {
        if hits.len() < 2 {
            return Err(Error::TooShort(hits.len()));
        }
        let mut ledger = ViolationLedger::default();
        for pair in hits.windows(2) {
            match (pair[0], pair[1]) {
                (false, false) => ledger.m00 += 1,
                (false, true) => ledger.m01 += 1,
                (true, false) => ledger.m10 += 1,
                (true, true) => ledger.m11 += 1,
            }
        }
        Ok(ledger)
    }

    /// Pairs whose first element is not a hit.
    pub fn m0(&self) -> u64 {
        self.m00 + self.m01
    }

    /// Pairs whose first element is a hit.
    pub fn m1(&self) -> u64 {
        self.m10 + self.m11
    }

    pub fn total(&self) -> u64 {
        self.m00 + self.m01 + self.m10 + self.m11
    }

    /// Raw hit rate `M1 / (M0 + M1)`; 0 for an empty ledger.
    pub fn alpha_hat_raw(&self) -> f64 {
        ratio(self.m1(), self.total())
    }

    pub fn pi01(&self) -> f64 {
        ratio(self.m01, self.m0())
    }

    pub fn pi11(&self) -> f64 {
        ratio(self.m11, self.m1())
    }

    pub fn pi(&self) -> f64 {
        ratio(self.m01 + self.m11, self.total())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// A likelihood-ratio statistic and its asymptotic chi-squared(1) p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestResult {
    fn from_statistic(statistic: f64) -> Result<Self> {
        // Cancellation can leave tiny negatives; the statistic is a likelihood ratio.
        let statistic = if statistic <= 0.0 { 0.0 } else { statistic };
        Ok(TestResult {
            statistic,
            p_value: chi2_1_survival(statistic)?,
        })
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// `m * ln(m / expected)` with `0 * ln 0 = 0`.
fn g_term(observed: f64, expected: f64) -> f64 {
    if observed == 0.0 {
        0.0
    } else {
        observed * (observed / expected).ln()
    }
}

/// Unconditional coverage: is the raw hit rate `M1 / (M0 + M1)` equal to `alpha`?
pub fn kupiec(ledger: &ViolationLedger, alpha: f64) -> Result<TestResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let n = ledger.total();
    if n == 0 {
        return Err(Error::EmptyLedger);
    }
    let n = n as f64;
    let expected_hits = n * alpha;
    let expected_misses = n - expected_hits;
    let stat = 2.0
        * (g_term(ledger.m1() as f64, expected_hits) + g_term(ledger.m0() as f64, expected_misses));
    TestResult::from_statistic(stat)
}

/// First-order Markov independence of the hit sequence.
pub fn christoffersen(ledger: &ViolationLedger) -> Result<TestResult> {
    let n = ledger.total();
    if n == 0 {
        return Err(Error::EmptyLedger);
    }
    let rows = [ledger.m0(), ledger.m1()];
    let cols = [ledger.m00 + ledger.m10, ledger.m01 + ledger.m11];
    let cells = [[ledger.m00, ledger.m01], [ledger.m10, ledger.m11]];
    let mut sum = 0.0;
    for (a, row) in cells.iter().enumerate() {
        for (b, &m) in row.iter().enumerate() {
            if m == 0 {
                continue;
            }
            // m * n / (row * col), with the integer products formed exactly.
            let num = u128::from(m) * u128::from(n);
            let den = u128::from(rows[a]) * u128::from(cols[b]);
            sum += m as f64 * (num as f64 / den as f64).ln();
        }
    }
    TestResult::from_statistic(2.0 * sum)
}

/// Pinball (check) loss of `xi` as an `alpha`-quantile of `sample`.
pub fn check_loss(sample: &[f64], xi: f64, alpha: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok(sample
        .iter()
        .map(|&x| {
            if x < xi {
                (alpha - 1.0) * (x - xi)
            } else {
                alpha * (x - xi)
            }
        })
        .sum())
}
