//! Regression depth of Rousseeuw and Hubert: the smallest number of observations a
//! fit must pass when it is tilted to vertical, and the set of deepest fits.
//!
//! For simple regression the tilt count is evaluated at pivot abscissae `u` between
//! consecutive distinct carriers (plus one sentinel on each side):
//!
//! ```text
//! min_u min( #{r ≥ 0, x < u} + #{r ≤ 0, x > u},  #{r ≤ 0, x < u} + #{r ≥ 0, x > u} )
//! ```
//!
//! Residuals within the zero tolerance touch the line and count on both sides.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{sort_dedup, Coefficients, Dataset, DepthValue, MedianSet, Notion, DEDUP_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdResult {
    pub depth: DepthValue,
    /// Pivot abscissa attaining the minimum (p = 2 only).
    pub critical_pivot: Option<f64>,
}

#[derive(Clone, Copy)]
enum Side {
    Pos,
    Neg,
    Zero,
}

fn side(r: f64, tol: f64) -> Side {
    if r.abs() <= tol {
        Side::Zero
    } else if r > 0.0 {
        Side::Pos
    } else {
        Side::Neg
    }
}

/// Regression depth with the dataset's default zero tolerance.
pub fn rd_depth(d: &Dataset, b: &Coefficients) -> Result<RdResult> {
    rd_depth_with_tol(d, b, d.zero_tolerance())
}

pub fn rd_depth_with_tol(d: &Dataset, b: &Coefficients, tol_zero: f64) -> Result<RdResult> {
    d.check_coefficients(b)?;
    let n = d.n();
    match d.p() {
        1 => {
            let beta = b.intercept();
            let (mut le, mut ge) = (0, 0);
            for &y in d.ys() {
                match side(y - beta, tol_zero) {
                    Side::Pos => ge += 1,
                    Side::Neg => le += 1,
                    Side::Zero => {
                        le += 1;
                        ge += 1;
                    }
                }
            }
            Ok(RdResult {
                depth: DepthValue::count(Notion::Rd, le.min(ge), n),
                critical_pivot: None,
            })
        }
        2 => {
            let xs = d.xs();
            let sides: Vec<Side> = (0..n)
                .map(|i| side(d.ys()[i] - b.fitted(d, i), tol_zero))
                .collect();
            let (k, u) = tilt_count(&xs, &sides);
            Ok(RdResult {
                depth: DepthValue::count(Notion::Rd, k, n),
                critical_pivot: Some(u),
            })
        }
        p => Err(Error::UnsupportedDimension(p)),
    }
}

/// Minimum tilt count over all pivots, and the pivot attaining it.
fn tilt_count(xs: &[f64], sides: &[Side]) -> (usize, f64) {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));

    let (mut tp, mut tn, mut tz) = (0usize, 0usize, 0usize);
    for s in sides {
        match s {
            Side::Pos => tp += 1,
            Side::Neg => tn += 1,
            Side::Zero => tz += 1,
        }
    }

    let count = |lp: usize, ln: usize, lz: usize| {
        let (rp, rn, rz) = (tp - lp, tn - ln, tz - lz);
        let up = (lp + lz) + (rn + rz);
        let down = (ln + lz) + (rp + rz);
        up.min(down)
    };

    let xmin = xs[order[0]];
    let xmax = xs[order[n - 1]];
    let mut best = (count(0, 0, 0), xmin - 1.0);
    let (mut lp, mut ln, mut lz) = (0, 0, 0);
    let mut k = 0;
    while k < n {
        let x = xs[order[k]];
        while k < n && xs[order[k]] == x {
            match sides[order[k]] {
                Side::Pos => lp += 1,
                Side::Neg => ln += 1,
                Side::Zero => lz += 1,
            }
            k += 1;
        }
        let u = if k < n {
            0.5 * (x + xs[order[k]])
        } else {
            xmax + 1.0
        };
        let c = count(lp, ln, lz);
        if c < best.0 {
            best = (c, u);
        }
    }
    best
}

/// Deepest fits by exhaustive search over lines through two observations
/// (p = 2), or the interval of sample medians (p = 1).
pub fn rd_median(d: &Dataset) -> Result<MedianSet> {
    match d.p() {
        1 => Ok(location_median_set(d, Notion::Rd, |b| {
            rd_depth(d, b).map(|r| r.depth)
        })?),
        2 => {
            let tol = d.zero_tolerance();
            pair_line_maximizers(d, Notion::Rd, |b| {
                rd_depth_with_tol(d, b, tol).map(|r| r.depth)
            })
        }
        p => Err(Error::UnsupportedDimension(p)),
    }
}

/// Lines through every pair of observations with distinct carriers.
pub(crate) fn pair_lines(d: &Dataset) -> Result<Vec<Coefficients>> {
    let xs = d.xs();
    let ys = d.ys();
    let n = d.n();
    let lines: Vec<Coefficients> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let xs = &xs;
            ((i + 1)..n).filter_map(move |j| {
                let dx = xs[j] - xs[i];
                (dx != 0.0).then(|| {
                    let slope = (ys[j] - ys[i]) / dx;
                    Coefficients::from_vec_unchecked(vec![ys[i] - slope * xs[i], slope])
                })
            })
        })
        .collect();
    if lines.is_empty() {
        return Err(Error::DegenerateDesign(
            "all carriers are identical; every candidate line is vertical".into(),
        ));
    }
    Ok(lines)
}

/// Shared maximiser search over two-point lines for count-based depths.
pub(crate) fn pair_line_maximizers<F>(d: &Dataset, notion: Notion, depth: F) -> Result<MedianSet>
where
    F: Fn(&Coefficients) -> Result<DepthValue> + Sync,
{
    let lines = pair_lines(d)?;
    let scored: Vec<(usize, Coefficients)> = lines
        .into_par_iter()
        .map(|b| depth(&b).map(|v| (v.numerator.unwrap_or(0), b)))
        .collect::<Result<_>>()?;
    let kmax = scored.iter().map(|(k, _)| *k).max().unwrap_or(0);
    let best: Vec<Coefficients> = scored
        .into_iter()
        .filter(|(k, _)| *k == kmax)
        .map(|(_, b)| b)
        .collect();
    finish_median_set(best, DepthValue::count(notion, kmax, d.n()), &depth)
}

pub(crate) fn finish_median_set<F>(
    maximizers: Vec<Coefficients>,
    max_depth: DepthValue,
    depth: &F,
) -> Result<MedianSet>
where
    F: Fn(&Coefficients) -> Result<DepthValue>,
{
    let maximizers = sort_dedup(maximizers, DEDUP_TOL);
    let average = Coefficients::average(&maximizers).expect("at least one maximiser");
    let average_depth = depth(&average)?;
    Ok(MedianSet {
        unique: maximizers.len() == 1,
        maximizers,
        max_depth,
        average,
        average_depth,
    })
}

/// p = 1: the maximisers of `min(#{y ≤ b}, #{y ≥ b})` form a closed interval with
/// sample-value endpoints; report those endpoints and their midpoint.
pub(crate) fn location_median_set<F>(d: &Dataset, notion: Notion, depth: F) -> Result<MedianSet>
where
    F: Fn(&Coefficients) -> Result<DepthValue>,
{
    let mut vals = d.ys().to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let mut best: Option<(usize, f64, f64)> = None;
    for &v in &vals {
        let k = depth(&Coefficients::from_vec_unchecked(vec![v]))?
            .numerator
            .unwrap_or(0);
        best = match best {
            Some((bk, lo, _)) if k == bk => Some((bk, lo, v)),
            Some((bk, _, _)) if k < bk => best,
            _ => Some((k, v, v)),
        };
    }
    let (k, lo, hi) = best.expect("nonempty dataset");
    let mut maximizers = vec![Coefficients::from_vec_unchecked(vec![lo])];
    if hi > lo {
        maximizers.push(Coefficients::from_vec_unchecked(vec![hi]));
    }
    finish_median_set(maximizers, DepthValue::count(notion, k, d.n()), &depth)
}
