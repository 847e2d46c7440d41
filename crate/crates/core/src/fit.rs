//! Least-squares baseline and residual analysis for comparing fits.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::{design_null_direction, residuals, Coefficients, Dataset, RANK_TOL};
use crate::error::{Error, Result};
use crate::univariate::mean;

/// Ordinary least squares via SVD; refuses rank-deficient designs.
pub fn ls_fit(d: &Dataset) -> Result<Coefficients> {
    let (rel, _) = design_null_direction(d);
    if d.n() < d.p() || rel <= RANK_TOL {
        return Err(Error::DegenerateDesign(
            "design matrix is not of full column rank".into(),
        ));
    }
    let x = d.design_matrix();
    let y = DVector::from_column_slice(d.ys());
    let svd = x.svd(true, true);
    let beta = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::DegenerateDesign(e.to_string()))?;
    Coefficients::new(beta.iter().copied().collect())
}

/// `1 − Σ r_i² / Σ (y_i − ȳ)²`.
pub fn r_squared(d: &Dataset, b: &Coefficients) -> Result<f64> {
    if d.n() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two observations".into(),
        ));
    }
    let r = residuals(d, b)?;
    let ybar = mean(d.ys())?;
    let sst: f64 = d.ys().iter().map(|y| (y - ybar).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sse: f64 = r.iter().map(|v| v * v).sum();
    Ok(1.0 - sse / sst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    /// 1-based observation id.
    pub i: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Fitted values and residuals of several named fits, one row per observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualTable {
    pub names: Vec<String>,
    pub rows: Vec<ResidualRow>,
}

pub fn residual_table(d: &Dataset, fits: &[(String, Coefficients)]) -> Result<ResidualTable> {
    let cols = fits
        .iter()
        .map(|(_, b)| residuals(d, b))
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..d.n())
        .map(|i| {
            let res: Vec<f64> = cols.iter().map(|c| c[i]).collect();
            ResidualRow {
                i: i + 1,
                x: d.carriers(i).to_vec(),
                y: d.ys()[i],
                fitted: fits.iter().map(|(_, b)| b.fitted(d, i)).collect(),
                residuals: res,
            }
        })
        .collect();
    Ok(ResidualTable {
        names: fits.iter().map(|(n, _)| n.clone()).collect(),
        rows,
    })
}

impl ResidualTable {
    /// CSV with columns `i,x1,…,y,yhat_<name>…,r_<name>…`; numbers go through `fmt`.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        fmt: impl Fn(f64) -> String,
    ) -> std::io::Result<()> {
        let q = self.rows.first().map_or(0, |r| r.x.len());
        let mut header = vec!["i".to_string()];
        header.extend((1..=q).map(|j| format!("x{j}")));
        header.push("y".into());
        header.extend(self.names.iter().map(|n| format!("yhat_{n}")));
        header.extend(self.names.iter().map(|n| format!("r_{n}")));
        writeln!(out, "{}", header.join(","))?;
        for row in &self.rows {
            let mut fields = vec![row.i.to_string()];
            fields.extend(row.x.iter().map(|v| fmt(*v)));
            fields.push(fmt(row.y));
            fields.extend(row.fitted.iter().map(|v| fmt(*v)));
            fields.extend(row.residuals.iter().map(|v| fmt(*v)));
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}
