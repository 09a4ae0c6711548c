//! Rates for the additive Gaussian relay channel `Y = X + X_R + S + Z` with
//! `S ~ N(0, P_S)` known strictly causally at the relay and `Z ~ N(0, N0)`:
//! closed forms, the general lower bound under a jointly Gaussian input
//! parameterization, the matching cut-set bound, and sweep generation for
//! rate-versus-conferencing and rate-versus-SNR curves.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prob::clamp_information;
use crate::result::{argmin, Certificate, Objective, RateResult};

pub use crate::opt::OptimizerTrace;

/// `0.5 * log2(1 + x)`, defined for `x >= 0` (infinity maps to infinity).
pub fn shannon_c(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid(format!(
            "shannon_c needs a nonnegative argument, got {x}"
        )));
    }
    Ok(c_nonneg(x))
}

fn c_nonneg(x: f64) -> f64 {
    0.5 * (1.0 + x).log2()
}

/// Channel description: powers, state and noise variances, conferencing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    p: f64,
    p_r: f64,
    p_s: f64,
    n0: f64,
    c_sr: f64,
    c_rs: f64,
}

impl GaussianSpec {
    pub fn new(p: f64, p_r: f64, p_s: f64, n0: f64, c_sr: f64, c_rs: f64) -> Result<Self> {
        for (name, v) in [
            ("P", p),
            ("P_R", p_r),
            ("P_S", p_s),
            ("N0", n0),
            ("c_sr", c_sr),
            ("c_rs", c_rs),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "{name} = {v} must be finite and nonnegative"
                )));
            }
        }
        if p_s + n0 <= 0.0 {
            return Err(Error::invalid(
                "P_S + N0 must be positive (a noiseless, stateless channel has no finite rates)",
            ));
        }
        Ok(GaussianSpec {
            p,
            p_r,
            p_s,
            n0,
            c_sr,
            c_rs,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn p_r(&self) -> f64 {
        self.p_r
    }
    pub fn p_s(&self) -> f64 {
        self.p_s
    }
    pub fn n0(&self) -> f64 {
        self.n0
    }
    pub fn c_sr(&self) -> f64 {
        self.c_sr
    }
    pub fn c_rs(&self) -> f64 {
        self.c_rs
    }

    pub fn with_conferencing(&self, c_sr: f64, c_rs: f64) -> Result<Self> {
        GaussianSpec::new(self.p, self.p_r, self.p_s, self.n0, c_sr, c_rs)
    }

    pub fn with_noise(&self, n0: f64) -> Result<Self> {
        GaussianSpec::new(self.p, self.p_r, self.p_s, n0, self.c_sr, self.c_rs)
    }
}

/// Input parameterization: both senders put a fraction of their power on a
/// shared coordination codeword, and the relay describes the state it saw as
/// `V = S + Q` with `Q ~ N(0, p_q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub alpha: f64,
    pub beta: f64,
    pub p_q: f64,
}

impl GaussianParams {
    pub fn new(alpha: f64, beta: f64, p_q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha = {alpha} must lie in [0, 1]")));
        }
        if !(0.0..=1.0).contains(&beta) || !beta.is_finite() {
            return Err(Error::invalid(format!("beta = {beta} must lie in [0, 1]")));
        }
        if !(p_q > 0.0) || !p_q.is_finite() {
            return Err(Error::invalid(format!(
                "p_q = {p_q} must be positive (a noiseless state description is singular)"
            )));
        }
        Ok(GaussianParams { alpha, beta, p_q })
    }
}

// Row/column order of the joint covariance.
const G_U: usize = 0;
const G_X: usize = 1;
const G_XR: usize = 2;
const G_S: usize = 3;
const G_V: usize = 4;
const G_Y: usize = 5;

/// Joint covariance of `(U, X, X_R, S, V, Y)` under one parameter choice.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    matrix: DMatrix<f64>,
}

impl CovarianceModel {
    /// Wraps a 6x6 symmetric matrix, checking symmetry and positive
    /// semidefiniteness (eigenvalues above -1e-10).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != 6 || matrix.ncols() != 6 {
            return Err(Error::invalid("covariance must be 6x6"));
        }
        for i in 0..6 {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-9 {
                    return Err(Error::invalid(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let eigenvalues = matrix.clone().symmetric_eigen().eigenvalues;
        let min_eig = eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        let max_eig = eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        // The tolerance scales with the largest eigenvalue: the solver's own
        // roundoff grows with the matrix norm, so an absolute cutoff would
        // reject valid covariances with large variances.
        if min_eig < -1e-10 * max_eig.max(1.0) {
            return Err(Error::invalid(format!(
                "covariance has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(CovarianceModel { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Builds the joint covariance for `X = sqrt(alpha P) U + X'`,
/// `X_R = sqrt(beta P_R) U + X_R'`, `V = S + Q`, `Y = X + X_R + S + Z` with
/// `U, X', X_R', S, Q, Z` independent zero-mean Gaussians. `X` and `X_R` are
/// conditionally independent given `U` by construction.
pub fn build_covariance(spec: &GaussianSpec, params: &GaussianParams) -> CovarianceModel {
    let (p, p_r, p_s, n0) = (spec.p, spec.p_r, spec.p_s, spec.n0);
    let (a, b, p_q) = (params.alpha, params.beta, params.p_q);
    let cux = (a * p).sqrt();
    let cuxr = (b * p_r).sqrt();
    let cxxr = (a * b * p * p_r).sqrt();
    let var_y = p + p_r + 2.0 * cxxr + p_s + n0;

    let mut m = DMatrix::zeros(6, 6);
    let mut set = |i: usize, j: usize, v: f64| {
        m[(i, j)] = v;
        m[(j, i)] = v;
    };
    set(G_U, G_U, 1.0);
    set(G_U, G_X, cux);
    set(G_U, G_XR, cuxr);
    set(G_U, G_Y, cux + cuxr);
    set(G_X, G_X, p);
    set(G_X, G_XR, cxxr);
    set(G_X, G_Y, p + cxxr);
    set(G_XR, G_XR, p_r);
    set(G_XR, G_Y, p_r + cxxr);
    set(G_S, G_S, p_s);
    set(G_S, G_V, p_s);
    set(G_S, G_Y, p_s);
    set(G_V, G_V, p_s + p_q);
    set(G_V, G_Y, p_s);
    set(G_Y, G_Y, var_y);
    CovarianceModel::new(m).expect("covariance is PSD by construction")
}

/// Variance of the `target` coordinate after conditioning on the `given`
/// coordinates: the Schur complement `s_tt - s_tc C^-1 s_ct`. Uses Cholesky
/// when the conditioning block is positive definite, otherwise an eigenvalue
/// pseudo-inverse, so degenerate conditioners (zero-variance coordinates)
/// are handled.
fn conditional_variance(m: &DMatrix<f64>, target: usize, given: &[usize]) -> f64 {
    let stt = m[(target, target)];
    if given.is_empty() {
        return stt.max(0.0);
    }
    let k = given.len();
    let a = DMatrix::from_fn(k, k, |i, j| m[(given[i], given[j])]);
    let b = DVector::from_fn(k, |i, _| m[(given[i], target)]);
    let x = match a.clone().cholesky() {
        Some(chol) => chol.solve(&b),
        None => {
            let eig = a.symmetric_eigen();
            let cutoff = eig
                .eigenvalues
                .iter()
                .fold(0.0f64, |acc, &v| acc.max(v.abs()))
                * 1e-12;
            let vt_b = eig.eigenvectors.transpose() * &b;
            let scaled = DVector::from_fn(k, |i, _| {
                let lam = eig.eigenvalues[i];
                if cutoff > 0.0 && lam.abs() > cutoff {
                    vt_b[i] / lam
                } else {
                    0.0
                }
            });
            &eig.eigenvectors * scaled
        }
    };
    (stt - b.dot(&x)).max(0.0)
}

/// Mutual information `I(others; target | given)` as half the log-ratio of
/// the target's conditional variances — the determinant-ratio form with the
/// single `target` coordinate isolated on one side.
fn pair_information(
    m: &DMatrix<f64>,
    target: usize,
    others: &[usize],
    given: &[usize],
    label: &str,
) -> Result<f64> {
    let numerator = conditional_variance(m, target, given);
    let mut full: Vec<usize> = given.to_vec();
    full.extend_from_slice(others);
    let denominator = conditional_variance(m, target, &full);
    if numerator < 1e-300 {
        // The target is already determined by the conditioning set; nothing
        // further can be learned.
        return Ok(0.0);
    }
    if denominator < 1e-300 {
        return Err(Error::NumericDegeneracy {
            term: label.to_string(),
            detail: format!("conditional variance {denominator:.3e} is below 1e-300"),
        });
    }
    Ok(clamp_information(0.5 * (numerator / denominator).log2()))
}

/// The three lower-bound terms and their clamped min at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTerms {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    /// `max(0, min(t1, t2, t3))`.
    pub rate: f64,
}

/// Evaluates the general lower bound under the jointly Gaussian
/// parameterization. The subtracted state-description cost satisfies
/// `I(V;S|XR,U) = 0.5 log2(1 + P_S/p_q)` exactly, which the generic
/// conditional-variance route reproduces.
pub fn gaussian_inner_bound(spec: &GaussianSpec, params: &GaussianParams) -> Result<GaussianTerms> {
    let cov = build_covariance(spec, params);
    let m = cov.matrix();
    let i1 = pair_information(m, G_Y, &[G_X], &[G_XR, G_V, G_U], "I(X;Y|XR,V,U)")?;
    let i2 = pair_information(m, G_Y, &[G_X, G_XR, G_V], &[], "I(X,XR,V;Y)")?;
    let i_vs = pair_information(m, G_S, &[G_V], &[G_XR, G_U], "I(V;S|XR,U)")?;
    let i3 = pair_information(m, G_Y, &[G_X, G_XR, G_V], &[G_U], "I(X,XR,V;Y|U)")?;
    let t1 = i1 + spec.c_sr;
    let t2 = i2 - i_vs;
    let t3 = i3 + spec.c_sr + spec.c_rs - i_vs;
    Ok(GaussianTerms {
        t1,
        t2,
        t3,
        rate: t1.min(t2).min(t3).max(0.0),
    })
}

/// Grid over `(alpha, beta, log10 p_q)` searched by
/// [`maximize_gaussian_inner_bound`], with optional golden-section
/// refinement around the best grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Linear grid on alpha including both endpoints.
    pub alpha_points: usize,
    /// Linear grid on beta including both endpoints.
    pub beta_points: usize,
    /// Logarithmic grid on p_q: `10^t` for t evenly spaced over
    /// `[pq_log_min, pq_log_max]`.
    pub pq_log_min: f64,
    pub pq_log_max: f64,
    pub pq_points: usize,
    /// One golden-section pass per coordinate after the grid scan.
    pub refine: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            alpha_points: 51,
            beta_points: 51,
            pq_log_min: -4.0,
            pq_log_max: 4.0,
            pq_points: 17,
            refine: true,
        }
    }
}

impl GridConfig {
    /// Coarser grid for sweeps, where many nearby points are evaluated.
    pub fn light() -> Self {
        GridConfig {
            alpha_points: 26,
            beta_points: 26,
            pq_points: 9,
            ..GridConfig::default()
        }
    }
}

/// Golden-section maximization on `[lo, hi]`; returns the best point seen.
fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut best = (a, f(a)?);
    for candidate in [b, 0.5 * (a + b)] {
        let v = f(candidate)?;
        if v > best.1 {
            best = (candidate, v);
        }
    }
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..60 {
        if fc > best.1 {
            best = (c, fc);
        }
        if fd > best.1 {
            best = (d, fd);
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d)?;
        }
    }
    Ok(best)
}

/// Maximizes the Gaussian lower bound over the parameter grid. Grid strips
/// run in parallel and are reduced in index order, so the result does not
/// depend on the thread count. Every reported rate is achievable; the
/// certificate reproduces it through [`gaussian_inner_bound`].
pub fn maximize_gaussian_inner_bound(
    spec: &GaussianSpec,
    grid: &GridConfig,
) -> Result<RateResult> {
    if grid.alpha_points < 2 || grid.beta_points < 2 || grid.pq_points < 1 {
        return Err(Error::invalid(
            "grid needs at least 2 alpha points, 2 beta points and 1 p_q point",
        ));
    }
    if !(grid.pq_log_min.is_finite() && grid.pq_log_max.is_finite())
        || grid.pq_log_min > grid.pq_log_max
    {
        return Err(Error::invalid("p_q grid bounds must be finite and ordered"));
    }
    let (na, nb, np) = (grid.alpha_points, grid.beta_points, grid.pq_points);
    let alphas: Vec<f64> = (0..na).map(|i| i as f64 / (na - 1) as f64).collect();
    let betas: Vec<f64> = (0..nb).map(|i| i as f64 / (nb - 1) as f64).collect();
    let pq_step = if np > 1 {
        (grid.pq_log_max - grid.pq_log_min) / (np - 1) as f64
    } else {
        0.0
    };
    let pqs: Vec<f64> = (0..np)
        .map(|j| 10f64.powf(grid.pq_log_min + j as f64 * pq_step))
        .collect();

    let strips: Vec<(f64, GaussianParams)> = alphas
        .par_iter()
        .map(|&alpha| -> Result<(f64, GaussianParams)> {
            let mut best: Option<(f64, GaussianParams)> = None;
            for &beta in &betas {
                for &p_q in &pqs {
                    let params = GaussianParams { alpha, beta, p_q };
                    let rate = gaussian_inner_bound(spec, &params)?.rate;
                    if best.as_ref().map_or(true, |(b, _)| rate > *b) {
                        best = Some((rate, params));
                    }
                }
            }
            Ok(best.expect("grid is non-empty"))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best = strips[0];
    for &strip in &strips[1..] {
        if strip.0 > best.0 {
            best = strip;
        }
    }
    let grid_evals = (na * nb * np) as u64;
    let mut trace = OptimizerTrace {
        evaluations: grid_evals,
        restarts_run: na,
        best_history: vec![(grid_evals, best.0)],
    };

    if grid.refine {
        let mut refine_evals = 0u64;
        let alpha_step = 1.0 / (na - 1) as f64;
        let beta_step = 1.0 / (nb - 1) as f64;

        // Coordinate refinement is local, and the reachable optimum depends
        // on the starting basin, so refine from the few best lattice strips
        // rather than the single argmax. The stable sort keeps ties in
        // ascending-alpha order, which keeps results thread-count
        // independent.
        let mut seeds = strips.clone();
        seeds.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("rates are finite"));
        seeds.truncate(3);

        for &(value, params) in &seeds {
            let mut current = (value, params);
            for _round in 0..10 {
                let before = current.0;
                {
                    let (mut evals, base) = (0u64, current.1);
                    let (x, v) = golden_max(
                        |alpha| {
                            evals += 1;
                            Ok(gaussian_inner_bound(spec, &GaussianParams { alpha, ..base })?.rate)
                        },
                        (base.alpha - alpha_step).max(0.0),
                        (base.alpha + alpha_step).min(1.0),
                    )?;
                    refine_evals += evals;
                    if v > current.0 {
                        current = (v, GaussianParams { alpha: x, ..base });
                    }
                }
                {
                    let (mut evals, base) = (0u64, current.1);
                    let (x, v) = golden_max(
                        |beta| {
                            evals += 1;
                            Ok(gaussian_inner_bound(spec, &GaussianParams { beta, ..base })?.rate)
                        },
                        (base.beta - beta_step).max(0.0),
                        (base.beta + beta_step).min(1.0),
                    )?;
                    refine_evals += evals;
                    if v > current.0 {
                        current = (v, GaussianParams { beta: x, ..base });
                    }
                }
                if np > 1 {
                    let (mut evals, base) = (0u64, current.1);
                    let log_base = base.p_q.log10();
                    let (x, v) = golden_max(
                        |t| {
                            evals += 1;
                            Ok(gaussian_inner_bound(
                                spec,
                                &GaussianParams {
                                    p_q: 10f64.powf(t),
                                    ..base
                                },
                            )?
                            .rate)
                        },
                        (log_base - pq_step).max(grid.pq_log_min),
                        (log_base + pq_step).min(grid.pq_log_max),
                    )?;
                    refine_evals += evals;
                    if v > current.0 {
                        current = (
                            v,
                            GaussianParams {
                                p_q: 10f64.powf(x),
                                ..base
                            },
                        );
                    }
                }
                if current.0 - before <= 1e-10 {
                    break;
                }
            }
            if current.0 > best.0 {
                best = current;
            }
        }
        trace.evaluations += refine_evals;
        trace.best_history.push((trace.evaluations, best.0));
    }

    let terms = gaussian_inner_bound(spec, &best.1)?;
    Ok(RateResult {
        rate: best.0.max(0.0),
        objective: Objective::GaussianInner,
        certificate: Certificate::Gaussian(best.1),
        binding_term: argmin(&[terms.t1, terms.t2, terms.t3]),
        trace,
        warnings: Vec::new(),
    })
}

/// Maximum of `min(increasing(t), decreasing(t))` on `[lo, hi]`: the min is
/// unimodal with its peak at the crossing (or at a boundary when the curves
/// do not cross), so a bisection on the sign of their difference is exact.
fn max_min_crossing(
    increasing: impl Fn(f64) -> f64,
    decreasing: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let value_at = |t: f64| increasing(t).min(decreasing(t));
    let gap = |t: f64| decreasing(t) - increasing(t);
    let mut best = value_at(lo).max(value_at(hi));
    if gap(lo) > 0.0 && gap(hi) < 0.0 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if gap(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            if b - a <= f64::EPSILON * (hi - lo) {
                break;
            }
        }
        best = best.max(value_at(a)).max(value_at(b));
    }
    best
}

/// Best rate when the relay never learns anything useful about the state:
/// `max over alpha in [0,1] of min( C((1-alpha) P / (N0 + P_S)) + c_sr,
/// C((P + P_R + 2 sqrt(alpha P P_R)) / (N0 + P_S)) )`. The first term falls
/// and the second rises in alpha, so the crossing (or a boundary) is exact.
pub fn no_si_rate(spec: &GaussianSpec) -> f64 {
    let den = spec.n0 + spec.p_s;
    let direct = |alpha: f64| c_nonneg((1.0 - alpha) * spec.p / den) + spec.c_sr;
    let coherent =
        |alpha: f64| c_nonneg((spec.p + spec.p_r + 2.0 * (alpha * spec.p * spec.p_r).sqrt()) / den);
    max_min_crossing(coherent, direct, 0.0, 1.0)
}

/// Fully coherent transmission reference: `C((P + P_R + 2 sqrt(P P_R)) /
/// (P_S + N0))`. At `N0 = 0` this is the capacity under sufficient
/// conferencing; with noise it is plotted as the coherent reference line.
pub fn full_coop_bound(spec: &GaussianSpec) -> f64 {
    c_nonneg((spec.p + spec.p_r + 2.0 * (spec.p * spec.p_r).sqrt()) / (spec.p_s + spec.n0))
}

/// No-conferencing capacity `C((P + P_R) / P_S)`, exact for a noiseless
/// channel with no conferencing; see [`no_coop_capacity_warnings`] for the
/// caveats outside that regime.
pub fn no_coop_capacity(spec: &GaussianSpec) -> f64 {
    c_nonneg((spec.p + spec.p_r) / spec.p_s)
}

/// Why [`no_coop_capacity`] is only a reference value for this channel, if
/// it is: the formula assumes a noiseless channel and no conferencing.
pub fn no_coop_capacity_warnings(spec: &GaussianSpec) -> Vec<String> {
    let mut warnings = Vec::new();
    if spec.n0 != 0.0 {
        warnings.push(format!(
            "the no-cooperation capacity formula assumes N0 = 0; channel has N0 = {}",
            spec.n0
        ));
    }
    if spec.c_sr != 0.0 || spec.c_rs != 0.0 {
        warnings.push(format!(
            "the no-cooperation capacity formula assumes c_sr = c_rs = 0; channel has \
             c_sr = {}, c_rs = {}",
            spec.c_sr, spec.c_rs
        ));
    }
    warnings
}

/// Cut-set upper bound: `max over rho in [0,1] of min(
/// C((P + P_R + 2 rho sqrt(P P_R)) / (N0 + P_S)),
/// C((1 - rho^2) P / N0) + c_sr )`. At `N0 = 0` the source cut is infinite
/// and the bound equals [`full_coop_bound`] exactly. Negative correlation
/// only shrinks the first term while leaving the second no larger than at
/// `-rho`, so restricting to `[0, 1]` loses nothing.
pub fn gaussian_cutset_bound(spec: &GaussianSpec) -> f64 {
    if spec.n0 == 0.0 {
        return full_coop_bound(spec);
    }
    let den = spec.n0 + spec.p_s;
    let sum_cut =
        |rho: f64| c_nonneg((spec.p + spec.p_r + 2.0 * rho * (spec.p * spec.p_r).sqrt()) / den);
    let source_cut = |rho: f64| c_nonneg((1.0 - rho * rho) * spec.p / spec.n0) + spec.c_sr;
    max_min_crossing(sum_cut, source_cut, 0.0, 1.0)
}

// ---------------------------------------------------------------------------
// Sweeps.
// ---------------------------------------------------------------------------

/// Which channel parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    CSr,
    CRs,
    /// SNR in dB; maps to `N0 = 10^(-gamma/10)`.
    GammaDb,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::CSr => "c_sr",
            SweepAxis::CRs => "c_rs",
            SweepAxis::GammaDb => "gamma_db",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c_sr" => Ok(SweepAxis::CSr),
            "c_rs" => Ok(SweepAxis::CRs),
            "gamma_db" => Ok(SweepAxis::GammaDb),
            other => Err(Error::invalid(format!(
                "unknown sweep axis '{other}' (expected c_sr, c_rs or gamma_db)"
            ))),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which rate curve a sweep column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// Maximized Gaussian lower bound.
    Inner,
    /// Relay ignores the state.
    NoSi,
    /// Cut-set upper bound.
    Cutset,
    /// Coherent-sum reference line.
    FullCoop,
    /// No-conferencing capacity formula.
    NoCoop,
}

impl CurveKind {
    pub const ALL: [CurveKind; 5] = [
        CurveKind::Inner,
        CurveKind::NoSi,
        CurveKind::Cutset,
        CurveKind::FullCoop,
        CurveKind::NoCoop,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CurveKind::Inner => "inner",
            CurveKind::NoSi => "no_si",
            CurveKind::Cutset => "cutset",
            CurveKind::FullCoop => "full_coop",
            CurveKind::NoCoop => "no_coop",
        }
    }
}

impl std::str::FromStr for CurveKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner" => Ok(CurveKind::Inner),
            "no_si" => Ok(CurveKind::NoSi),
            "cutset" => Ok(CurveKind::Cutset),
            "full_coop" => Ok(CurveKind::FullCoop),
            "no_coop" => Ok(CurveKind::NoCoop),
            other => Err(Error::invalid(format!(
                "unknown curve '{other}' (expected inner, no_si, cutset, full_coop or no_coop)"
            ))),
        }
    }
}

impl std::fmt::Display for CurveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row per axis value, one column per requested curve, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub curves: Vec<CurveKind>,
    pub rows: Vec<Vec<f64>>,
}

/// Applies `value` on `axis` to a copy of the template channel.
pub fn spec_at(template: &GaussianSpec, axis: SweepAxis, value: f64) -> Result<GaussianSpec> {
    match axis {
        SweepAxis::CSr => template.with_conferencing(value, template.c_rs),
        SweepAxis::CRs => template.with_conferencing(template.c_sr, value),
        SweepAxis::GammaDb => template.with_noise(10f64.powf(-value / 10.0)),
    }
}

/// Evaluates the requested curves at every axis value. Points run in
/// parallel; rows are collected in input order.
pub fn sweep(
    template: &GaussianSpec,
    axis: SweepAxis,
    values: &[f64],
    curves: &[CurveKind],
    grid: &GridConfig,
) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one axis value"));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("sweep value {bad} is not finite")));
    }
    if curves.is_empty() {
        return Err(Error::invalid("sweep needs at least one curve"));
    }
    let rows: Vec<Vec<f64>> = values
        .par_iter()
        .map(|&value| -> Result<Vec<f64>> {
            let spec = spec_at(template, axis, value)?;
            curves
                .iter()
                .map(|curve| -> Result<f64> {
                    Ok(match curve {
                        CurveKind::Inner => maximize_gaussian_inner_bound(&spec, grid)?.rate,
                        CurveKind::NoSi => no_si_rate(&spec),
                        CurveKind::Cutset => gaussian_cutset_bound(&spec),
                        CurveKind::FullCoop => full_coop_bound(&spec),
                        CurveKind::NoCoop => no_coop_capacity(&spec),
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        axis,
        values: values.to_vec(),
        curves: curves.to_vec(),
        rows,
    })
}

/// Re-evaluates a Gaussian certificate; matches `result.rate` within 1e-9
/// for any result produced by [`maximize_gaussian_inner_bound`].
pub fn reevaluate(spec: &GaussianSpec, result: &RateResult) -> Result<f64> {
    match (&result.objective, &result.certificate) {
        (Objective::GaussianInner, Certificate::Gaussian(params)) => {
            Ok(gaussian_inner_bound(spec, params)?.rate)
        }
        _ => Err(Error::invalid(
            "certificate does not match the result's objective (discrete results are \
             re-evaluated by the discrete module)",
        )),
    }
}
