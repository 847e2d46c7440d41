//! Datasets, candidate fits, and the transforms under which depth is invariant.
//!
//! A [`Dataset`] stores the carriers `x_{i1}, …, x_{i(p-1)}` and the responses
//! `y_i`; the leading `1` of each design row is implicit and never stored.
//! `p = 1` is the pure location model.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Row-major `n × (p-1)` carrier matrix.
    carriers: Vec<f64>,
    ys: Vec<f64>,
    p: usize,
}

impl Dataset {
    /// Builds a dataset from carrier rows (each of length `p - 1`) and responses.
    pub fn new(rows: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if rows.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: ys.len(),
                got: rows.len(),
            });
        }
        let q = rows.first().map_or(0, Vec::len);
        let mut carriers = Vec::with_capacity(rows.len() * q);
        for row in &rows {
            if row.len() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    got: row.len(),
                });
            }
            carriers.extend_from_slice(row);
        }
        Self::from_parts(carriers, ys, q + 1)
    }

    /// Simple regression `y = β₀ + β₁ x` (p = 2).
    pub fn simple(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: ys.len(),
                got: xs.len(),
            });
        }
        Self::from_parts(xs.to_vec(), ys.to_vec(), 2)
    }

    /// Location model (p = 1): no carriers.
    pub fn location(ys: &[f64]) -> Result<Self> {
        Self::from_parts(Vec::new(), ys.to_vec(), 1)
    }

    fn from_parts(carriers: Vec<f64>, ys: Vec<f64>, p: usize) -> Result<Self> {
        if ys.is_empty() {
            return Err(Error::InvalidArgument("dataset has no observations".into()));
        }
        if p == 0 || carriers.len() != ys.len() * (p - 1) {
            return Err(Error::InvalidArgument("inconsistent carrier matrix".into()));
        }
        if carriers.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "dataset contains non-finite values".into(),
            ));
        }
        Ok(Self { carriers, ys, p })
    }

    pub fn n(&self) -> usize {
        self.ys.len()
    }

    /// Dimension of β, intercept included.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Carriers of observation `i` (without the intercept entry).
    pub fn carriers(&self, i: usize) -> &[f64] {
        let q = self.p - 1;
        &self.carriers[i * q..(i + 1) * q]
    }

    /// The first carrier column; the x-axis for p = 2.
    pub fn xs(&self) -> Vec<f64> {
        if self.p < 2 {
            return Vec::new();
        }
        (0..self.n()).map(|i| self.carriers(i)[0]).collect()
    }

    /// `x_iᵀ v` with the implicit leading 1.
    pub fn project(&self, i: usize, v: &[f64]) -> f64 {
        v[0] + self
            .carriers(i)
            .iter()
            .zip(&v[1..])
            .map(|(x, c)| x * c)
            .sum::<f64>()
    }

    /// Euclidean norm of the full design row `(1, x_i)`.
    pub fn design_norm(&self, i: usize) -> f64 {
        (1.0 + self.carriers(i).iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    /// `n × p` design matrix with the intercept column.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.p, |i, j| {
            if j == 0 {
                1.0
            } else {
                self.carriers(i)[j - 1]
            }
        })
    }

    pub fn check_coefficients(&self, b: &Coefficients) -> Result<()> {
        if b.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: b.len(),
            });
        }
        Ok(())
    }

    /// Default tolerance for treating a residual as an exact zero.
    pub fn zero_tolerance(&self) -> f64 {
        let ymax = self.ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        1e-9 * (1.0 + ymax)
    }

    /// Reads the CSV layout `x1,…,x{p-1},y` (header required).
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::InvalidArgument(format!("csv header: {e}")))?
            .clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols.last() != Some(&"y") {
            return Err(Error::InvalidArgument(
                "csv header must end with a `y` column".into(),
            ));
        }
        for (j, c) in cols[..cols.len() - 1].iter().enumerate() {
            if *c != format!("x{}", j + 1) {
                return Err(Error::InvalidArgument(format!(
                    "unexpected csv column {c:?}, expected x{}",
                    j + 1
                )));
            }
        }
        let q = cols.len() - 1;
        let mut carriers = Vec::new();
        let mut ys = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec =
                rec.map_err(|e| Error::InvalidArgument(format!("csv row {}: {e}", line + 1)))?;
            if rec.len() != q + 1 {
                return Err(Error::InvalidArgument(format!(
                    "csv row {} has {} fields, expected {}",
                    line + 1,
                    rec.len(),
                    q + 1
                )));
            }
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::InvalidArgument(format!("csv row {}: bad number {field:?}", line + 1))
                })?;
                if j < q {
                    carriers.push(v);
                } else {
                    ys.push(v);
                }
            }
        }
        Self::from_parts(carriers, ys, q + 1)
    }

    pub fn to_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header: Vec<String> = (1..self.p).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.n() {
            for x in self.carriers(i) {
                write!(out, "{x},")?;
            }
            writeln!(out, "{}", self.ys[i])?;
        }
        Ok(())
    }
}

/// Candidate coefficient vector β, intercept first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coefficients(Vec<f64>);

impl Coefficients {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidArgument("empty coefficient vector".into()));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self(beta))
    }

    pub(crate) fn from_vec_unchecked(beta: Vec<f64>) -> Self {
        Self(beta)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn intercept(&self) -> f64 {
        self.0[0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Fitted value `x_iᵀβ` for observation `i` of `d`.
    pub fn fitted(&self, d: &Dataset, i: usize) -> f64 {
        d.project(i, &self.0)
    }

    /// Coordinatewise mean; `None` for an empty list.
    pub fn average(list: &[Coefficients]) -> Option<Coefficients> {
        let first = list.first()?;
        let mut acc = vec![0.0; first.len()];
        for b in list {
            for (a, v) in acc.iter_mut().zip(&b.0) {
                *a += v;
            }
        }
        let k = list.len() as f64;
        Some(Self(acc.into_iter().map(|a| a / k).collect()))
    }

    /// Equal within `tol` relative to the larger max-abs coordinate.
    pub fn approx_eq(&self, other: &Coefficients, tol: f64) -> bool {
        let scale = self
            .0
            .iter()
            .chain(&other.0)
            .fold(1.0f64, |m, v| m.max(v.abs()));
        self.len() == other.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| (a - b).abs() <= tol * scale)
    }
}

impl From<Coefficients> for Vec<f64> {
    fn from(b: Coefficients) -> Self {
        b.0
    }
}

/// Unit projection direction. For p = 2 it also carries its angle: in [0, π)
/// normally, in [0, 2π) when the location estimator is not odd (quantiles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub v: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

impl Direction {
    /// Normalises `v`; antipodal vectors describe the same direction.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument(
                "direction must be a nonzero finite vector".into(),
            ));
        }
        let v: Vec<f64> = v.into_iter().map(|c| c / norm).collect();
        let angle = (v.len() == 2).then(|| {
            let a = v[1].atan2(v[0]);
            a.rem_euclid(std::f64::consts::PI)
        });
        Ok(Self { v, angle })
    }

    /// `(cos θ, sin θ)` with θ reduced to [0, π).
    pub fn from_angle(theta: f64) -> Self {
        let t = theta.rem_euclid(std::f64::consts::PI);
        Self {
            v: vec![t.cos(), t.sin()],
            angle: Some(t),
        }
    }

    pub fn sign(positive: bool) -> Self {
        Self {
            v: vec![if positive { 1.0 } else { -1.0 }],
            angle: None,
        }
    }

    pub fn is_unit(&self) -> bool {
        (self.v.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs() <= 1e-12
    }
}

/// Which depth functional a value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Notion {
    Rd,
    Prd,
    Dc,
}

impl std::fmt::Display for Notion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Notion::Rd => "rd",
            Notion::Prd => "prd",
            Notion::Dc => "dc",
        })
    }
}

impl std::str::FromStr for Notion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rd" => Ok(Notion::Rd),
            "prd" => Ok(Notion::Prd),
            "dc" => Ok(Notion::Dc),
            other => Err(Error::InvalidArgument(format!(
                "unknown depth notion {other:?}"
            ))),
        }
    }
}

/// A depth score. Count-based notions keep the exact fraction `k / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthValue {
    pub notion: Notion,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numerator: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator: Option<usize>,
}

impl DepthValue {
    pub fn count(notion: Notion, k: usize, n: usize) -> Self {
        Self {
            notion,
            value: k as f64 / n as f64,
            numerator: Some(k),
            denominator: Some(n),
        }
    }

    pub fn real(notion: Notion, value: f64) -> Self {
        Self {
            notion,
            value,
            numerator: None,
            denominator: None,
        }
    }

    /// Exact comparison for counts, float comparison otherwise.
    pub fn same_as(&self, other: &DepthValue) -> bool {
        match (self.numerator, other.numerator) {
            (Some(a), Some(b)) => a == b && self.denominator == other.denominator,
            _ => self.value == other.value,
        }
    }
}

/// All maximisers of a depth, with the averaging diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianSet {
    pub maximizers: Vec<Coefficients>,
    pub max_depth: DepthValue,
    pub average: Coefficients,
    pub average_depth: DepthValue,
    pub unique: bool,
}

/// Relative tolerance under which two maximisers are the same fit.
pub const DEDUP_TOL: f64 = 1e-9;

/// Sorts candidates by (intercept, slope, …) descending and drops near-duplicates.
///
/// Descending intercept order puts the line `(-6.065, 2.5)` first on the star data,
/// which is the representative the residual table uses.
pub(crate) fn sort_dedup(mut list: Vec<Coefficients>, tol: f64) -> Vec<Coefficients> {
    list.sort_by(|a, b| {
        b.as_slice()
            .iter()
            .zip(a.as_slice())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<Coefficients> = Vec::with_capacity(list.len());
    for b in list {
        if !out.iter().any(|kept| kept.approx_eq(&b, tol)) {
            out.push(b);
        }
    }
    out
}

/// `r_i = y_i − x_iᵀb`, in dataset order.
pub fn residuals(d: &Dataset, b: &Coefficients) -> Result<Vec<f64>> {
    d.check_coefficients(b)?;
    Ok((0..d.n()).map(|i| d.ys[i] - b.fitted(d, i)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A0Report {
    pub holds: bool,
    pub witness: Option<Direction>,
}

/// Relative singular-value cut-off for the numerical rank decision.
pub const RANK_TOL: f64 = 1e-10;

/// Smallest singular value of the design (relative to the largest) and its right
/// singular vector. Pads with zero rows when n < p.
pub(crate) fn design_null_direction(d: &Dataset) -> (f64, Vec<f64>) {
    let mut x = d.design_matrix();
    if x.nrows() < x.ncols() {
        let p = x.ncols();
        x = x.resize_vertically(p, 0.0);
    }
    let svd = x.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let (imin, smin) = svd.singular_values.argmin();
    let rel = if smax > 0.0 { smin / smax } else { 0.0 };
    (rel, v_t.row(imin).iter().copied().collect())
}

/// Sample analogue of "no direction annihilates the design": true iff the
/// `n × p` design has full column rank.
pub fn check_a0(d: &Dataset) -> Result<A0Report> {
    if d.p() < 2 {
        return Err(Error::UnsupportedDimension(d.p()));
    }
    let (rel, v) = design_null_direction(d);
    if rel > RANK_TOL {
        Ok(A0Report {
            holds: true,
            witness: None,
        })
    } else {
        Ok(A0Report {
            holds: false,
            witness: Some(Direction::new(v)?),
        })
    }
}

/// Transforms under which the depth notions are invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    /// `y_i ← y_i + x_iᵀb`
    RegressionShift(Coefficients),
    /// `y_i ← s·y_i`
    ResponseScale(f64),
    /// `x_i ← Aᵀx_i`; `A` is `p × p` with first column `e₁` so the intercept stays 1.
    CarrierAffine(DMatrix<f64>),
}

impl Transform {
    /// Carrier map from a row-major `p × p` matrix, validated up front.
    pub fn carrier_affine(p: usize, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != p * p {
            return Err(Error::DimensionMismatch {
                expected: p * p,
                got: row_major.len(),
            });
        }
        let t = Transform::CarrierAffine(DMatrix::from_row_slice(p, p, row_major));
        t.validate(p)?;
        Ok(t)
    }

    fn validate(&self, p: usize) -> Result<()> {
        match self {
            Transform::RegressionShift(b) => {
                if b.len() != p {
                    return Err(Error::DimensionMismatch {
                        expected: p,
                        got: b.len(),
                    });
                }
            }
            Transform::ResponseScale(s) => {
                if *s == 0.0 || !s.is_finite() {
                    return Err(Error::InvalidArgument(
                        "response scale must be nonzero".into(),
                    ));
                }
            }
            Transform::CarrierAffine(a) => {
                if a.nrows() != p || a.ncols() != p {
                    return Err(Error::DimensionMismatch {
                        expected: p,
                        got: a.nrows().max(a.ncols()),
                    });
                }
                if a[(0, 0)] != 1.0 || (1..p).any(|i| a[(i, 0)] != 0.0) {
                    return Err(Error::InvalidArgument(
                        "affine map must keep the intercept (first column e1)".into(),
                    ));
                }
                if a.determinant().abs() < 1e-12 {
                    return Err(Error::InvalidArgument("affine map is singular".into()));
                }
            }
        }
        Ok(())
    }

    /// Image of `b` under the equivariance map matching this transform.
    pub fn map_coefficients(&self, b: &Coefficients) -> Result<Coefficients> {
        self.validate(b.len())?;
        let out = match self {
            Transform::RegressionShift(w) => b.0.iter().zip(&w.0).map(|(x, y)| x + y).collect(),
            Transform::ResponseScale(s) => b.0.iter().map(|x| s * x).collect(),
            Transform::CarrierAffine(a) => {
                let lu = a.clone().lu();
                let sol = lu
                    .solve(&DVector::from_column_slice(&b.0))
                    .ok_or_else(|| Error::InvalidArgument("affine map is singular".into()))?;
                sol.iter().copied().collect()
            }
        };
        Ok(Coefficients(out))
    }
}

/// Applies `t` to every observation.
pub fn transform(d: &Dataset, t: &Transform) -> Result<Dataset> {
    t.validate(d.p())?;
    let mut out = d.clone();
    match t {
        Transform::RegressionShift(b) => {
            for i in 0..d.n() {
                out.ys[i] = d.ys[i] + b.fitted(d, i);
            }
        }
        Transform::ResponseScale(s) => {
            for y in &mut out.ys {
                *y *= s;
            }
        }
        Transform::CarrierAffine(a) => {
            let q = d.p() - 1;
            for i in 0..d.n() {
                let row = d.carriers(i);
                for j in 1..d.p() {
                    // (Aᵀx)_j = Σ_k A[k, j] x_k with x_0 = 1
                    let v = a[(0, j)] + (1..d.p()).map(|k| a[(k, j)] * row[k - 1]).sum::<f64>();
                    out.carriers[i * q + j - 1] = v;
                }
            }
        }
    }
    Ok(out)
}
