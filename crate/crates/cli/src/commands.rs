//! The subcommands, as functions from parsed arguments to JSON or CSV.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use depth_regress::prd::PrdOptions;
use depth_regress::rd::rd_depth_with_tol;
use depth_regress::{
    dc_depth, dc_depth_1d, dc_maximizers, ls_fit, prd_median, rd_median, residual_table, uf_with,
    Coefficients, Dataset, DepthValue, DirectionSearch, Error, LocationEstimator, MedianSet,
    Notion, ResidualTable,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::format::{fmt_g, num, nums};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Depth(Error),
    Io(std::io::Error),
}

impl CliError {
    /// 2: bad input, 3: the data do not admit the computation, 4: optimizer failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Depth(Error::OptimizerFailed { .. }) => 4,
            CliError::Depth(e) if e.is_input_error() => 2,
            CliError::Depth(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => f.write_str(m),
            CliError::Depth(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Depth(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn load_csv(path: &Path) -> CliResult<Dataset> {
    let file = File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    Ok(Dataset::from_csv(BufReader::new(file))?)
}

/// Settings that only matter for projection depth.
#[derive(Debug, Clone, Default)]
pub struct PrdSettings {
    pub location: LocationEstimator,
    pub options: PrdOptions,
}

fn count_fields(obj: &mut Map<String, Value>, key: &str, v: &DepthValue) {
    obj.insert(key.into(), num(v.value));
    if let Some(k) = v.numerator {
        obj.insert(format!("{key}_k"), json!(k));
    }
}

pub fn depth(
    d: &Dataset,
    notion: Notion,
    beta: &[f64],
    tol: Option<f64>,
    prd: &PrdSettings,
) -> CliResult<Value> {
    let b = Coefficients::new(beta.to_vec())?;
    d.check_coefficients(&b)?;
    if let Some(t) = tol {
        if !(t >= 0.0) {
            return Err(CliError::Input("--tol must be nonnegative".into()));
        }
    }
    let tol = tol.unwrap_or_else(|| d.zero_tolerance());
    let mut out = Map::new();
    out.insert("notion".into(), json!(notion.to_string()));
    out.insert("beta".into(), nums(beta));
    match notion {
        Notion::Rd | Notion::Dc => {
            let v = match notion {
                Notion::Rd => rd_depth_with_tol(d, &b, tol)?.depth,
                _ if d.p() == 1 => dc_depth_1d(d.ys(), beta[0])?,
                _ => dc_depth(d, &b, tol)?,
            };
            out.insert("depth".into(), num(v.value));
            out.insert("k".into(), json!(v.numerator));
            out.insert("n".into(), json!(v.denominator));
        }
        Notion::Prd => {
            let u = uf_with(d, &b, prd.location, prd.options.search)?;
            out.insert("depth".into(), num(1.0 / (1.0 + u.uf)));
            out.insert("uf".into(), num(u.uf));
            out.insert("scale".into(), num(u.scale));
            out.insert("worst_direction".into(), nums(&u.worst_direction.v));
        }
    }
    Ok(Value::Object(out))
}

fn median_set_json(set: &MedianSet, notion: Notion) -> Map<String, Value> {
    let mut out = Map::new();
    out.insert("notion".into(), json!(notion.to_string()));
    out.insert(
        "maximizers".into(),
        Value::Array(set.maximizers.iter().map(|b| nums(b.as_slice())).collect()),
    );
    count_fields(&mut out, "max_depth", &set.max_depth);
    out.insert("average".into(), nums(set.average.as_slice()));
    count_fields(&mut out, "average_depth", &set.average_depth);
    out.insert("unique".into(), json!(set.unique));
    out
}

pub fn median(d: &Dataset, notion: Notion, prd: &PrdSettings) -> CliResult<Value> {
    let out = match notion {
        Notion::Rd => median_set_json(&rd_median(d)?, notion),
        Notion::Dc => median_set_json(&dc_maximizers(d)?, notion),
        Notion::Prd => {
            let r = prd_median(d, prd.location, &prd.options)?;
            let mut out = median_set_json(&r.median_set(d, prd.location)?, notion);
            out.insert("beta".into(), nums(r.beta.as_slice()));
            out.insert("prd".into(), num(r.prd));
            out.insert("uf".into(), num(r.uf));
            out.insert("worst_direction".into(), nums(&r.worst_direction.v));
            out.insert("certificate".into(), num(r.certificate));
            out.insert("certified".into(), json!(r.certified));
            out.insert("starts".into(), json!(r.starts.len()));
            out
        }
    };
    Ok(Value::Object(out))
}

/// A square grid of `steps × steps` coefficient pairs on `[lo, hi]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.steps < 2 || !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(CliError::Input(
                "grid needs steps >= 2 and finite lo < hi".into(),
            ));
        }
        Ok(())
    }

    /// Grid coordinate `k`, computed so the end points and a centred 0 are exact.
    pub fn coord(&self, k: usize) -> f64 {
        let s = (self.steps - 1) as f64;
        (self.lo * (s - k as f64) + self.hi * k as f64) / s
    }
}

/// `(beta1, beta2, depth)` rows, beta1 outer and ascending.
pub fn gridmap(
    d: &Dataset,
    notion: Notion,
    grid: GridSpec,
    prd: &PrdSettings,
) -> CliResult<Vec<[f64; 3]>> {
    grid.validate()?;
    if d.p() != 2 {
        return Err(CliError::Depth(Error::UnsupportedDimension(d.p())));
    }
    let tol = d.zero_tolerance();
    let cells: Vec<(f64, f64)> = (0..grid.steps)
        .flat_map(|i| (0..grid.steps).map(move |j| (grid.coord(i), grid.coord(j))))
        .collect();
    cells
        .par_iter()
        .map(|&(b1, b2)| {
            let b = Coefficients::new(vec![b1, b2])?;
            let v = match notion {
                Notion::Rd => rd_depth_with_tol(d, &b, tol)?.depth.value,
                Notion::Dc => dc_depth(d, &b, tol)?.value,
                Notion::Prd => 1.0 / (1.0 + uf_with(d, &b, prd.location, prd.options.search)?.uf),
            };
            Ok([b1, b2, v])
        })
        .collect()
}

pub fn write_gridmap<W: Write>(rows: &[[f64; 3]], mut out: W) -> std::io::Result<()> {
    writeln!(out, "beta1,beta2,depth")?;
    for r in rows {
        writeln!(out, "{},{},{}", fmt_g(r[0]), fmt_g(r[1]), fmt_g(r[2]))?;
    }
    out.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ls,
    Rd,
    Prd,
}

impl std::str::FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "ls" => Ok(Method::Ls),
            "rd" => Ok(Method::Rd),
            "prd" => Ok(Method::Prd),
            other => Err(CliError::Input(format!(
                "unknown method {other:?} (ls, rd, prd)"
            ))),
        }
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ls => "ls",
            Method::Rd => "rd",
            Method::Prd => "prd",
        }
    }
}

/// Fits each method; RD is represented by its first deepest line (largest intercept).
pub fn fits(
    d: &Dataset,
    methods: &[Method],
    prd: &PrdSettings,
) -> CliResult<Vec<(String, Coefficients)>> {
    methods
        .iter()
        .map(|&m| {
            let b = match m {
                Method::Ls => ls_fit(d)?,
                Method::Rd => rd_median(d)?.maximizers.swap_remove(0),
                Method::Prd => prd_median(d, prd.location, &prd.options)?.beta,
            };
            Ok((m.name().to_string(), b))
        })
        .collect()
}

pub fn residuals(d: &Dataset, methods: &[Method], prd: &PrdSettings) -> CliResult<ResidualTable> {
    if methods.is_empty() {
        return Err(CliError::Input("no methods selected".into()));
    }
    Ok(residual_table(d, &fits(d, methods, prd)?)?)
}

/// JSON form of an optimizer failure, written next to the error message.
pub fn trace_json(e: &Error) -> Option<Value> {
    match e {
        Error::OptimizerFailed { evaluations, trace } => Some(json!({
            "evaluations": evaluations,
            "trace": trace
                .iter()
                .map(|(x, f)| json!({ "x": nums(x), "uf": num(*f) }))
                .collect::<Vec<_>>(),
        })),
        _ => None,
    }
}

pub fn parse_search(s: &str, angles: usize) -> CliResult<DirectionSearch> {
    match s {
        "auto" => Ok(DirectionSearch::Auto),
        "exact" => Ok(DirectionSearch::Exact),
        "grid" => Ok(DirectionSearch::Grid { angles, tol: 1e-10 }),
        other => Err(CliError::Input(format!(
            "unknown search {other:?} (auto, exact, grid)"
        ))),
    }
}
