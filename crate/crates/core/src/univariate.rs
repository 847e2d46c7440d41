//! Univariate location and scale functionals on finite samples.
//!
//! `median` follows the averaged-middle convention
//! `(x_(⌊(n+1)/2⌋) + x_(⌊(n+2)/2⌋)) / 2`, which makes it unique. `quantile` is the
//! left-continuous inverse of the empirical CDF, so it always returns a sample value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_nonempty(vals: &[f64]) -> Result<()> {
    if vals.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "sample contains non-finite values".into(),
        ));
    }
    Ok(())
}

/// k-th smallest value (0-based), partially reordering `buf`.
pub(crate) fn select(buf: &mut [f64], k: usize) -> f64 {
    let (_, v, _) = buf.select_nth_unstable_by(k, f64::total_cmp);
    *v
}

/// Median of a scratch buffer; reorders it.
pub(crate) fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let lo = n.div_ceil(2) - 1;
    let hi = (n + 2) / 2 - 1;
    let a = select(buf, lo);
    if lo == hi {
        a
    } else {
        // after selecting `lo`, everything right of it is >= a
        let b = buf[hi..]
            .iter()
            .copied()
            .min_by(f64::total_cmp)
            .unwrap_or(a);
        (a + b) / 2.0
    }
}

/// Sample median (average of the two middle order statistics for even n).
pub fn median(vals: &[f64]) -> Result<f64> {
    check_nonempty(vals)?;
    let mut buf = vals.to_vec();
    Ok(median_in_place(&mut buf))
}

/// Median absolute deviation from the median, with no consistency constant.
pub fn mad(vals: &[f64]) -> Result<f64> {
    let m = median(vals)?;
    let mut dev: Vec<f64> = vals.iter().map(|v| (v - m).abs()).collect();
    Ok(median_in_place(&mut dev))
}

/// 1-based rank of the `q`-quantile in a sample of size `n`: the smallest k with k/n >= q.
pub(crate) fn quantile_rank(n: usize, q: f64) -> usize {
    let mut k = (q * n as f64).ceil() as usize;
    // guard against ceil rounding up an exact k/n
    if k > 1 && ((k - 1) as f64) / (n as f64) >= q {
        k -= 1;
    }
    k.clamp(1, n)
}

/// `inf { z : #{vals_i <= z} / n >= q }` for `q` in (0, 1).
pub fn quantile(vals: &[f64], q: f64) -> Result<f64> {
    check_nonempty(vals)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile level {q} not in (0, 1)"
        )));
    }
    let mut buf = vals.to_vec();
    let k = quantile_rank(buf.len(), q);
    Ok(select(&mut buf, k - 1))
}

pub fn mean(vals: &[f64]) -> Result<f64> {
    check_nonempty(vals)?;
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Location functional `T` applied to projected residual ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocationEstimator {
    #[default]
    Median,
    Mean,
    Quantile {
        q: f64,
    },
}

impl LocationEstimator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LocationEstimator::Quantile { q } if !(q > 0.0 && q < 1.0) => Err(
                Error::InvalidArgument(format!("quantile level {q} not in (0, 1)")),
            ),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, vals: &[f64]) -> Result<f64> {
        match *self {
            LocationEstimator::Median => median(vals),
            LocationEstimator::Mean => mean(vals),
            LocationEstimator::Quantile { q } => quantile(vals, q),
        }
    }

    /// Same as [`evaluate`](Self::evaluate) but reuses `buf` as scratch space.
    pub(crate) fn evaluate_in_place(&self, buf: &mut [f64]) -> f64 {
        match *self {
            LocationEstimator::Median => median_in_place(buf),
            LocationEstimator::Mean => buf.iter().sum::<f64>() / buf.len() as f64,
            LocationEstimator::Quantile { q } => {
                let k = quantile_rank(buf.len(), q);
                select(buf, k - 1)
            }
        }
    }

    /// Order-statistic estimators pick fixed ranks, so their sup over directions
    /// can be found by enumerating where the ordering changes.
    pub fn is_order_statistic(&self) -> bool {
        !matches!(self, LocationEstimator::Mean)
    }

    /// 0-based ranks averaged by this estimator on a sample of size `n`.
    pub(crate) fn ranks(&self, n: usize) -> (usize, usize) {
        match *self {
            LocationEstimator::Median => (n.div_ceil(2) - 1, (n + 2) / 2 - 1),
            LocationEstimator::Quantile { q } => {
                let k = quantile_rank(n, q) - 1;
                (k, k)
            }
            LocationEstimator::Mean => unreachable!("mean is not an order statistic"),
        }
    }
}

impl std::fmt::Display for LocationEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LocationEstimator::Median => write!(f, "median"),
            LocationEstimator::Mean => write!(f, "mean"),
            LocationEstimator::Quantile { q } => write!(f, "quantile:{q}"),
        }
    }
}

impl std::str::FromStr for LocationEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let est = match s {
            "median" => LocationEstimator::Median,
            "mean" => LocationEstimator::Mean,
            other => match other.strip_prefix("quantile:") {
                Some(q) => LocationEstimator::Quantile {
                    q: q.parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad quantile level {q:?}")))?,
                },
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown location estimator {other:?} (median, mean, quantile:<q>)"
                    )))
                }
            },
        };
        est.validate()?;
        Ok(est)
    }
}

/// Scale functional `S` used to normalise unfitness. Only MAD is offered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScaleEstimator {
    #[default]
    Mad,
}

impl ScaleEstimator {
    pub fn evaluate(&self, vals: &[f64]) -> Result<f64> {
        match self {
            ScaleEstimator::Mad => mad(vals),
        }
    }
}
