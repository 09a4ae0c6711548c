//! Deterministic multi-start coordinate ascent over products of probability
//! simplexes.
//!
//! Every rate maximization in this crate is a search over stochastic vectors
//! (an input pmf, the rows of a conditional). The searcher here is
//! deliberately simple: a set of reproducible starting points, then greedy
//! pairwise mass transfers with a halving step size. Constraints (input cost
//! budgets) are handled by rejecting infeasible moves, never by projecting,
//! so every visited point is exactly feasible.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Knobs for the multi-start search. The defaults are sized so that the
/// bundled examples reproduce their reference values in seconds.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Number of low-discrepancy starting points (structured starts supplied
    /// by each rate expression are always run in addition).
    pub restarts: usize,
    /// Offsets the low-discrepancy sequence; same seed, same answer.
    pub seed: u64,
    /// The step size halves from 1/2 down to this floor.
    pub step_floor: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 200,
            seed: 0,
            step_floor: 1e-4,
        }
    }
}

impl SearchConfig {
    /// A lighter search for sweeps, where the optimum moves smoothly along
    /// the axis and fewer restarts suffice per point.
    pub fn light() -> Self {
        SearchConfig {
            restarts: 50,
            ..SearchConfig::default()
        }
    }
}

/// What the search did: total objective evaluations and the best value after
/// each restart that improved on everything before it (paired with the
/// cumulative evaluation count at that moment).
#[derive(Debug, Clone, Default)]
pub struct OptimizerTrace {
    pub evaluations: u64,
    pub restarts_run: usize,
    pub best_history: Vec<(u64, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Optimum {
    pub point: Vec<Vec<f64>>,
    pub value: f64,
    pub trace: OptimizerTrace,
}

/// Maximizes `objective` over points `(q_1, ..., q_m)` where block `q_b` is a
/// pmf of length `block_sizes[b]`, restricted to `feasible`. Starting points
/// that violate `feasible` are skipped; if none survive, the search reports
/// the feasible set as empty.
///
/// Runs restarts in parallel, then reduces sequentially in restart order, so
/// the result is independent of thread count.
pub(crate) fn maximize_over_simplexes<F, G>(
    block_sizes: &[usize],
    structured_starts: &[Vec<Vec<f64>>],
    cfg: &SearchConfig,
    feasible: G,
    objective: F,
) -> Result<Optimum>
where
    F: Fn(&[Vec<f64>]) -> f64 + Sync,
    G: Fn(&[Vec<f64>]) -> bool + Sync,
{
    let total = structured_starts.len() + cfg.restarts;
    if total == 0 {
        return Err(Error::invalid("search needs at least one starting point"));
    }
    let results: Vec<Option<(Vec<Vec<f64>>, f64, u64)>> = (0..total)
        .into_par_iter()
        .map(|r| {
            let start = if r < structured_starts.len() {
                structured_starts[r].clone()
            } else {
                let idx = 1 + cfg.seed.wrapping_add((r - structured_starts.len()) as u64);
                halton_start(block_sizes, idx)
            };
            if !feasible(&start) {
                return None;
            }
            Some(ascend(start, &feasible, &objective, cfg.step_floor))
        })
        .collect();

    let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
    let mut trace = OptimizerTrace::default();
    for result in results {
        let Some((point, value, evals)) = result else {
            continue;
        };
        trace.restarts_run += 1;
        trace.evaluations += evals;
        if best.as_ref().map_or(true, |(_, b)| value > *b) {
            trace.best_history.push((trace.evaluations, value));
            best = Some((point, value));
        }
    }
    match best {
        Some((point, value)) => Ok(Optimum { point, value, trace }),
        None => Err(Error::Infeasible(
            "no feasible starting point; the constraint set appears empty".to_string(),
        )),
    }
}

/// Greedy coordinate ascent: for each ordered pair of coordinates within each
/// block, try moving `step` of mass and keep the move if the objective
/// improves. The step halves once a full scan yields no improvement.
fn ascend<F, G>(
    mut point: Vec<Vec<f64>>,
    feasible: &G,
    objective: &F,
    step_floor: f64,
) -> (Vec<Vec<f64>>, f64, u64)
where
    F: Fn(&[Vec<f64>]) -> f64 + Sync,
    G: Fn(&[Vec<f64>]) -> bool + Sync,
{
    // Generous safety cap; typical runs use a few thousand evaluations.
    const EVAL_CAP: u64 = 2_000_000;
    let mut evals: u64 = 1;
    let mut best = objective(&point);
    let mut step = 0.5;
    while step >= step_floor {
        loop {
            let mut improved = false;
            for b in 0..point.len() {
                let k = point[b].len();
                if k < 2 {
                    continue;
                }
                for i in 0..k {
                    for j in 0..k {
                        if i == j || point[b][i] <= 0.0 {
                            continue;
                        }
                        let saved = point[b].clone();
                        let t = step.min(point[b][i]);
                        point[b][i] -= t;
                        point[b][j] += t;
                        // Exact renormalization keeps transfer dust from
                        // accumulating over thousands of accepted moves.
                        let sum: f64 = point[b].iter().sum();
                        for q in point[b].iter_mut() {
                            *q /= sum;
                        }
                        let mut accept = false;
                        if feasible(&point) {
                            let v = objective(&point);
                            evals += 1;
                            if v > best + 1e-12 {
                                best = v;
                                accept = true;
                                improved = true;
                            }
                            if evals >= EVAL_CAP {
                                if !accept {
                                    point[b] = saved;
                                }
                                return (point, best, evals);
                            }
                        }
                        if !accept {
                            point[b] = saved;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        step *= 0.5;
    }
    (point, best, evals)
}

/// Radical-inverse (van der Corput) value of `index` in the given base.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut fraction = 1.0;
    let mut result = 0.0;
    while index > 0 {
        fraction /= base as f64;
        result += fraction * (index % base) as f64;
        index /= base;
    }
    result
}

/// Point `index` of the Halton sequence over all coordinates, mapped onto
/// each simplex by normalizing unit-exponential transforms (which makes the
/// blocks uniform over their simplexes).
pub(crate) fn halton_start(block_sizes: &[usize], index: u64) -> Vec<Vec<f64>> {
    let dims: usize = block_sizes.iter().sum();
    let primes = first_primes(dims);
    let mut start = Vec::with_capacity(block_sizes.len());
    let mut d = 0;
    for &k in block_sizes {
        let mut block = Vec::with_capacity(k);
        for _ in 0..k {
            let u = radical_inverse(index, primes[d]);
            block.push(-(1.0 - u).ln());
            d += 1;
        }
        let sum: f64 = block.iter().sum();
        if sum > 0.0 {
            for q in block.iter_mut() {
                *q /= sum;
            }
        } else {
            block = vec![1.0 / k as f64; k];
        }
        start.push(block);
    }
    start
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(n);
    let mut candidate = 2u64;
    while primes.len() < n {
        if primes.iter().all(|p| candidate % p != 0) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// A pmf putting all mass on one symbol.
pub(crate) fn point_mass(len: usize, at: usize) -> Vec<f64> {
    let mut q = vec![0.0; len];
    q[at] = 1.0;
    q
}

/// The uniform pmf.
pub(crate) fn uniform(len: usize) -> Vec<f64> {
    vec![1.0 / len as f64; len]
}
