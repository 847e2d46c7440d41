//! Built-in datasets.

use depth_regress::{Dataset, Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const STARS_CSV: &str = include_str!("../assets/stars.csv");

/// Default seed for the generated samples.
pub const SEED: u64 = 20190;

/// CYG OB1 Hertzsprung–Russell data: log effective temperature vs log light intensity, n = 47.
pub fn stars() -> Dataset {
    Dataset::from_csv(STARS_CSV.as_bytes()).expect("embedded stars table parses")
}

/// A = (−1, 0), B = (0, 1), C = (1, 0).
pub fn abc() -> Dataset {
    Dataset::simple(&[-1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).expect("valid")
}

/// `m` points on y = x and `m` on y = −x, carriers ±1, …, ±m/2 on each line.
pub fn two_lines(m: usize) -> Result<Dataset> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(
            "two_lines needs an even m ≥ 2".into(),
        ));
    }
    let half = (m / 2) as i32;
    let mut xs = Vec::with_capacity(2 * m);
    let mut ys = Vec::with_capacity(2 * m);
    for sign in [1.0, -1.0] {
        for c in (1..=half).flat_map(|c| [c, -c]) {
            xs.push(f64::from(c));
            ys.push(sign * f64::from(c));
        }
    }
    Dataset::simple(&xs, &ys)
}

/// 30 independent standard normal (x, y) pairs.
pub fn normal30(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..30).map(|_| (draw(), draw())).unzip();
    Dataset::simple(&xs, &ys).expect("valid")
}

/// 15 normal pairs and their mirror images under y ↦ −y; β = (0, 0) is the centre.
pub fn symmetric30(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let half: Vec<(f64, f64)> = (0..15).map(|_| (draw(), draw())).collect();
    let xs: Vec<f64> = half.iter().chain(&half).map(|p| p.0).collect();
    let ys: Vec<f64> = half
        .iter()
        .map(|p| p.1)
        .chain(half.iter().map(|p| -p.1))
        .collect();
    Dataset::simple(&xs, &ys).expect("valid")
}

pub const NAMES: &[&str] = &["stars", "abc", "two_lines", "normal30", "symmetric30"];

pub fn load(name: &str, m: usize, seed: u64) -> Result<Dataset> {
    match name {
        "stars" => Ok(stars()),
        "abc" => Ok(abc()),
        "two_lines" => two_lines(m),
        "normal30" => Ok(normal30(seed)),
        "symmetric30" => Ok(symmetric30(seed)),
        other => Err(Error::InvalidArgument(format!(
            "unknown fixture {other:?} (one of {})",
            NAMES.join(", ")
        ))),
    }
}
