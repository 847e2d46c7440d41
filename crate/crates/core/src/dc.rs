//! Carrizosa depth. For p ≥ 2 it reduces to the fraction of observations lying on
//! the fitted hyperplane; for p = 1 it is `min(P(y ≤ β), P(y ≥ β))`.

use crate::data::{Coefficients, Dataset, DepthValue, MedianSet, Notion};
use crate::error::{Error, Result};
use crate::rd::{location_median_set, pair_line_maximizers};

/// `#{i : |y_i − x_iᵀb| ≤ tol_zero} / n`. Requires p ≥ 2.
pub fn dc_depth(d: &Dataset, b: &Coefficients, tol_zero: f64) -> Result<DepthValue> {
    d.check_coefficients(b)?;
    if d.p() < 2 {
        return Err(Error::UnsupportedDimension(d.p()));
    }
    if !(tol_zero >= 0.0) {
        return Err(Error::InvalidArgument(
            "tol_zero must be nonnegative".into(),
        ));
    }
    let k = (0..d.n())
        .filter(|&i| (d.ys()[i] - b.fitted(d, i)).abs() <= tol_zero)
        .count();
    Ok(DepthValue::count(Notion::Dc, k, d.n()))
}

/// Univariate Carrizosa depth `min(#{y_i ≤ b}, #{y_i ≥ b}) / n`.
pub fn dc_depth_1d(ys: &[f64], b: f64) -> Result<DepthValue> {
    if ys.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let le = ys.iter().filter(|&&y| y <= b).count();
    let ge = ys.iter().filter(|&&y| y >= b).count();
    Ok(DepthValue::count(Notion::Dc, le.min(ge), ys.len()))
}

/// Maximisers of the Carrizosa depth: the best-covered two-point lines for p = 2,
/// the median interval for p = 1.
pub fn dc_maximizers(d: &Dataset) -> Result<MedianSet> {
    match d.p() {
        1 => location_median_set(d, Notion::Dc, |b| dc_depth_1d(d.ys(), b.intercept())),
        2 => {
            let tol = d.zero_tolerance();
            pair_line_maximizers(d, Notion::Dc, |b| dc_depth(d, b, tol))
        }
        p => Err(Error::UnsupportedDimension(p)),
    }
}
