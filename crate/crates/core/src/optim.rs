//! Derivative-free search routines used by the projection depth median.

/// Outcome of a Nelder–Mead run.
#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best vertex after each iteration.
    pub trace: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NelderMead {
    /// Stop once every vertex lies within this distance of the best one.
    pub xtol: f64,
    pub max_evaluations: usize,
    /// Restarts from the best vertex until a restart stops improving.
    pub max_restarts: usize,
    pub trace_limit: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            xtol: 1e-8,
            max_evaluations: 100_000,
            max_restarts: 25,
            trace_limit: 2_000,
        }
    }
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
/// Iterations per vertex without a new best before a forced shrink.
const STALL_ITERATIONS: usize = 50;
/// Iterations per vertex before a run hands back to a fresh simplex.
const RUN_ITERATIONS: usize = 200;

enum Stop {
    Converged,
    Budget,
    /// The simplex collapsed onto a ridge and is crawling; rebuild it.
    Iterations,
}

impl NelderMead {
    /// Minimises `f` starting at `x0`; the initial simplex is `x0 + steps[j] e_j`.
    pub fn minimize<F>(&self, f: F, x0: &[f64], steps: &[f64]) -> Minimum
    where
        F: Fn(&[f64]) -> f64,
    {
        let evaluations = std::cell::Cell::new(0usize);
        let mut trace = Vec::new();
        let mut eval = |x: &[f64]| {
            evaluations.set(evaluations.get() + 1);
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut best_x = x0.to_vec();
        let mut best_f = eval(&best_x);
        let mut converged = false;
        for _ in 0..=self.max_restarts {
            let budget_left = self.max_evaluations.saturating_sub(evaluations.get());
            let (x, fx, stop) =
                self.run(&mut eval, &best_x, best_f, steps, budget_left, &mut trace);
            let improved = fx < best_f;
            if fx <= best_f {
                best_x = x;
                best_f = fx;
            }
            converged = matches!(stop, Stop::Converged);
            match stop {
                Stop::Converged if improved => {}
                Stop::Iterations => {}
                _ => break,
            }
        }
        Minimum {
            x: best_x,
            f: best_f,
            evaluations: evaluations.get(),
            converged,
            trace,
        }
    }

    fn run<E>(
        &self,
        eval: &mut E,
        x0: &[f64],
        f0: f64,
        steps: &[f64],
        budget: usize,
        trace: &mut Vec<(Vec<f64>, f64)>,
    ) -> (Vec<f64>, f64, Stop)
    where
        E: FnMut(&[f64]) -> f64,
    {
        let dim = x0.len();
        let mut used = 0usize;
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        simplex.push((x0.to_vec(), f0));
        for j in 0..dim {
            let mut x = x0.to_vec();
            x[j] += steps[j];
            let fx = eval(&x);
            used += 1;
            simplex.push((x, fx));
        }

        let stall_limit = STALL_ITERATIONS * (dim + 1);
        let mut since_best = 0usize;
        let mut best_seen = f64::INFINITY;
        for _ in 0..RUN_ITERATIONS * (dim + 1) {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if simplex[0].1 < best_seen {
                best_seen = simplex[0].1;
                since_best = 0;
            } else {
                since_best += 1;
            }
            if trace.len() < self.trace_limit {
                trace.push(simplex[0].clone());
            }
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| dist(x, &simplex[0].0))
                .fold(0.0, f64::max);
            if diameter < self.xtol {
                let (x, fx) = simplex.swap_remove(0);
                return (x, fx, Stop::Converged);
            }
            if used >= budget {
                let (x, fx) = simplex.swap_remove(0);
                return (x, fx, Stop::Budget);
            }

            // on non-smooth objectives the simplex can slide without ever shrinking
            if since_best >= stall_limit {
                used += shrink(eval, &mut simplex);
                since_best = 0;
                continue;
            }

            let worst = dim;
            let centroid: Vec<f64> = (0..dim)
                .map(|k| simplex[..worst].iter().map(|(x, _)| x[k]).sum::<f64>() / dim as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[worst].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(REFLECT);
            let fr = eval(&xr);
            used += 1;
            if fr < simplex[0].1 {
                let xe = along(EXPAND);
                let fe = eval(&xe);
                used += 1;
                simplex[worst] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[worst - 1].1 {
                simplex[worst] = (xr, fr);
                continue;
            }
            // outside contraction if the reflection helped at all, inside otherwise
            let xc = along(if fr < simplex[worst].1 {
                CONTRACT
            } else {
                -CONTRACT
            });
            let fc = eval(&xc);
            used += 1;
            if fc < simplex[worst].1.min(fr) {
                simplex[worst] = (xc, fc);
                continue;
            }
            used += shrink(eval, &mut simplex);
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, fx) = simplex.swap_remove(0);
        (x, fx, Stop::Iterations)
    }
}

/// Pulls every vertex halfway towards the best one; returns evaluations used.
fn shrink<E: FnMut(&[f64]) -> f64>(eval: &mut E, simplex: &mut [(Vec<f64>, f64)]) -> usize {
    let best = simplex[0].0.clone();
    for vertex in simplex.iter_mut().skip(1) {
        let x: Vec<f64> = best
            .iter()
            .zip(&vertex.0)
            .map(|(b, v)| b + SHRINK * (v - b))
            .collect();
        let fx = eval(&x);
        *vertex = (x, fx);
    }
    simplex.len() - 1
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`, down to width `tol`.
pub(crate) fn golden_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let tol = tol.max(4.0 * f64::EPSILON * lo.abs().max(hi.abs()));
    for _ in 0..500 {
        if hi - lo <= tol {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
