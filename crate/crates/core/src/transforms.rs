//! Stationarizing transforms for level series.
//!
//! Factors are converted to arithmetic returns `(x[t+1] - x[t]) / x[t]`
//! whenever no level used as a denominator is zero, and to first differences
//! otherwise. Waterfront counts always use first differences so the factor is
//! comparable across cities. Price is never routed through this fallback; it
//! goes through the AR-ARCH innovation path instead.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{CityPanel, Factor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    ArithmeticReturn,
    FirstDifference,
    Innovation,
}

impl TransformKind {
    /// Short tag used in plan tables.
    pub fn tag(self) -> &'static str {
        match self {
            TransformKind::ArithmeticReturn => "rtn",
            TransformKind::FirstDifference => "fd",
            TransformKind::Innovation => "innov",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A stationarized series. `start_year` is the calendar year of `values[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedSeries {
    pub values: Vec<f64>,
    pub kind: TransformKind,
    pub source: String,
    pub start_year: i32,
}

impl TransformedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn years(&self) -> Vec<i32> {
        (0..self.values.len() as i32)
            .map(|i| self.start_year + i)
            .collect()
    }
}

fn require_len(levels: &[f64], needed: usize) -> Result<()> {
    if levels.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: levels.len(),
        });
    }
    Ok(())
}

/// Arithmetic returns of `levels`, whose first element belongs to `first_year`.
///
/// A zero denominator yields [`Error::DivisionByZero`] with the year of the
/// zero level, which is the signal to fall back to first differences.
pub fn arithmetic_return(levels: &[f64], first_year: i32) -> Result<TransformedSeries> {
    require_len(levels, 2)?;
    let mut values = Vec::with_capacity(levels.len() - 1);
    for (i, pair) in levels.windows(2).enumerate() {
        if pair[0] == 0.0 {
            return Err(Error::DivisionByZero {
                year: first_year + i as i32,
            });
        }
        values.push((pair[1] - pair[0]) / pair[0]);
    }
    Ok(TransformedSeries {
        values,
        kind: TransformKind::ArithmeticReturn,
        source: String::new(),
        start_year: first_year + 1,
    })
}

pub fn first_difference(levels: &[f64], first_year: i32) -> Result<TransformedSeries> {
    difference(levels, 1, first_year)
}

/// `order`-th difference. Orders above one are available but never chosen
/// automatically by [`plan_transforms`].
pub fn difference(levels: &[f64], order: usize, first_year: i32) -> Result<TransformedSeries> {
    if order == 0 {
        return Err(Error::Precondition("difference order must be >= 1".into()));
    }
    require_len(levels, order + 1)?;
    let mut values = levels.to_vec();
    for _ in 0..order {
        values = values.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(TransformedSeries {
        values,
        kind: TransformKind::FirstDifference,
        source: String::new(),
        start_year: first_year + order as i32,
    })
}

/// Inverse of [`arithmetic_return`]: levels starting at `x0`.
pub fn levels_from_returns(x0: f64, returns: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(returns.len() + 1);
    out.push(x0);
    let mut x = x0;
    for r in returns {
        x *= 1.0 + r;
        out.push(x);
    }
    out
}

/// Inverse of [`first_difference`]: levels starting at `x0`.
pub fn levels_from_differences(x0: f64, diffs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(diffs.len() + 1);
    out.push(x0);
    let mut x = x0;
    for d in diffs {
        x += d;
        out.push(x);
    }
    out
}

/// Per-factor transform choice for one city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformPlan {
    pub entries: Vec<(Factor, TransformKind)>,
}

impl TransformPlan {
    pub fn kind(&self, factor: Factor) -> Option<TransformKind> {
        self.entries
            .iter()
            .find(|(f, _)| *f == factor)
            .map(|(_, k)| *k)
    }
}

pub fn plan_transforms(panel: &CityPanel) -> TransformPlan {
    let entries = Factor::ALL
        .into_iter()
        .map(|factor| {
            let kind = if factor == Factor::Waterfront {
                TransformKind::FirstDifference
            } else {
                let levels = panel.factor_levels(factor);
                // the last level is never a denominator
                if levels[..levels.len() - 1].contains(&0.0) {
                    TransformKind::FirstDifference
                } else {
                    TransformKind::ArithmeticReturn
                }
            };
            (factor, kind)
        })
        .collect();
    TransformPlan { entries }
}

/// Transformed factor series in [`Factor::ALL`] order.
pub fn apply_plan(panel: &CityPanel, plan: &TransformPlan) -> Result<Vec<(Factor, TransformedSeries)>> {
    plan.entries
        .iter()
        .map(|&(factor, kind)| {
            let levels = panel.factor_levels(factor);
            let series = match kind {
                TransformKind::ArithmeticReturn => arithmetic_return(&levels, panel.first_year())?,
                TransformKind::FirstDifference => first_difference(&levels, panel.first_year())?,
                TransformKind::Innovation => {
                    return Err(Error::Precondition(format!(
                        "innovation transform is not defined for factor {factor}"
                    )))
                }
            };
            Ok((factor, series.with_source(factor.column())))
        })
        .collect()
}

/// Arithmetic returns of the average price.
pub fn price_returns(panel: &CityPanel) -> Result<TransformedSeries> {
    Ok(arithmetic_return(&panel.prices(), panel.first_year())?.with_source("av_price"))
}
