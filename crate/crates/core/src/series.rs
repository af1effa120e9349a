use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered log returns, optionally labelled with the date each return ends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    values: Vec<f64>,
    dates: Option<Vec<String>>,
    bound: f64,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(ReturnSeries {
            values,
            dates: None,
            bound,
        })
    }

    pub fn with_dates(mut self, dates: Vec<String>) -> Result<Self> {
        if dates.len() != self.values.len() {
            return Err(Error::InvalidConfig(format!(
                "{} dates for {} returns",
                dates.len(),
                self.values.len()
            )));
        }
        self.dates = Some(dates);
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dates(&self) -> Option<&[String]> {
        self.dates.as_deref()
    }

    pub fn date(&self, index: usize) -> Option<&str> {
        self.dates
            .as_ref()
            .and_then(|d| d.get(index))
            .map(String::as_str)
    }

    /// Realized `max |X|` over the whole series.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `X_s = ln(P_{s+1} / P_s)`.
pub fn log_returns(prices: &[f64]) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::SeriesTooShort {
            len: prices.len(),
            window: 0,
            needed: 1,
        });
    }
    if let Some((index, &value)) = prices
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.is_finite() && **p > 0.0))
    {
        return Err(Error::NonPositivePrice { index, value });
    }
    ReturnSeries::new(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}
