//! Depth functionals for linear regression.
//!
//! Three notions are provided for a fit `β` of `y ≈ (1, x)ᵀβ`:
//!
//! * [`rd`]: regression depth, the fewest observations a fit must pass through
//!   while tilting to vertical;
//! * [`prd`]: projection regression depth, `1 / (1 + UF)` with `UF` the worst
//!   robustly standardised residual ratio over projection directions;
//! * [`dc`]: Carrizosa depth, which degenerates to "fraction of points on the fit".
//!
//! Each has a median (deepest fit) with a uniqueness diagnostic. [`fit`] holds
//! the least-squares baseline and residual tables for comparing fits.

pub mod data;
pub mod dc;
pub mod error;
pub mod fit;
mod optim;
pub mod prd;
pub mod rd;
pub mod univariate;

pub use data::{
    check_a0, residuals, transform, A0Report, Coefficients, Dataset, DepthValue, Direction,
    MedianSet, Notion, Transform,
};
pub use dc::{dc_depth, dc_depth_1d, dc_maximizers};
pub use error::{Error, Result};
pub use fit::{ls_fit, r_squared, residual_table, ResidualTable};
pub use prd::{
    prd, prd_median, uf, uf_v, uf_with, DirectionSearch, PrdMedianResult, PrdOptions,
    UnfitnessResult,
};
pub use rd::{rd_depth, rd_median, RdResult};
pub use univariate::{mad, median, quantile, LocationEstimator, ScaleEstimator};
