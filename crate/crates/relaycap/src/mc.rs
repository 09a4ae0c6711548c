//! Monte Carlo cross-check of the analytic information measures: i.i.d.
//! sampling from a joint pmf and plug-in (maximum-likelihood) estimates of
//! the conditional mutual informations, with the first-order bias bound
//! reported alongside. Serves as an implementation-independent oracle for
//! the exact entropy machinery.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{
    assemble_joint, DmChannelSpec, InnerDistribution, VAR_S, VAR_U, VAR_V, VAR_X, VAR_XR, VAR_Y,
};
use crate::error::{Error, Result};
use crate::prob::{clamp_information, JointPmf, MarginalPlan};

/// Rows are drawn in fixed-size chunks, each from its own counter stream of
/// the generator, so the batch is identical however the chunks are scheduled.
const SAMPLE_CHUNK: usize = 65536;

/// I.i.d. draws from a joint pmf, one symbol column per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    n: usize,
    seed: u64,
    names: Vec<String>,
    cards: Vec<usize>,
    columns: Vec<Vec<u8>>,
}

impl SampleBatch {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn names(&self) -> Vec<&str> {
        self.names.iter().map(String::as_str).collect()
    }

    pub fn column(&self, name: &str) -> Option<&[u8]> {
        let idx = self.names.iter().position(|n| n == name)?;
        Some(&self.columns[idx])
    }

    fn group_axes(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|name| {
                self.names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::invalid(format!("variable '{name}' not in batch")))
            })
            .collect()
    }
}

/// Draws `n` i.i.d. rows from `pmf` by inverse-CDF over the flattened tensor,
/// using the seedable, platform-stable ChaCha8 generator. Chunks run in
/// parallel on independent generator streams; the result depends only on
/// `(pmf, n, seed)`.
pub fn sample_joint(pmf: &JointPmf, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let shape: Vec<usize> = pmf.variables().iter().map(|v| v.cardinality()).collect();
    if let Some(big) = shape.iter().find(|&&c| c > 256) {
        return Err(Error::invalid(format!(
            "alphabet size {big} exceeds the sampler's symbol range (256)"
        )));
    }

    let flat: Vec<f64> = pmf.probs().iter().copied().collect();
    let mut cdf = Vec::with_capacity(flat.len());
    let mut acc = 0.0;
    for p in &flat {
        acc += p;
        cdf.push(acc);
    }
    if let Some(last) = cdf.last_mut() {
        // Guard against rounding dust so every draw in [0, 1) lands inside.
        *last = last.max(1.0);
    }

    let chunks = (n + SAMPLE_CHUNK - 1) / SAMPLE_CHUNK;
    let cells: Vec<Vec<u32>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let rows = SAMPLE_CHUNK.min(n - chunk * SAMPLE_CHUNK);
            (0..rows)
                .map(|_| {
                    let u: f64 = rng.gen();
                    let idx = cdf.partition_point(|&c| c <= u);
                    idx.min(cdf.len() - 1) as u32
                })
                .collect()
        })
        .collect();

    let mut strides = vec![1usize; shape.len()];
    for axis in (0..shape.len().saturating_sub(1)).rev() {
        strides[axis] = strides[axis + 1] * shape[axis + 1];
    }
    let mut columns: Vec<Vec<u8>> = shape.iter().map(|_| Vec::with_capacity(n)).collect();
    for chunk in cells {
        for cell in chunk {
            let cell = cell as usize;
            for (axis, column) in columns.iter_mut().enumerate() {
                column.push(((cell / strides[axis]) % shape[axis]) as u8);
            }
        }
    }
    Ok(SampleBatch {
        n,
        seed,
        names: pmf
            .variables()
            .iter()
            .map(|v| v.name().to_string())
            .collect(),
        cards: shape,
        columns,
    })
}

/// A plug-in conditional mutual information with its accuracy diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalCmi {
    /// Plug-in estimate in bits (CMI of the empirical joint type).
    pub value: f64,
    /// First-order bias bound `(|A|-1)(|B|-1)|C| / (2 n ln 2)`.
    pub bias_bound: f64,
    /// `sqrt(Var[pointwise log-ratio] / n)`: a standard-error proxy for the
    /// estimate.
    pub std_proxy: f64,
}

/// Plug-in estimate of `I(A;B|C)` from a sample batch.
pub fn empirical_cmi(batch: &SampleBatch, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    Ok(empirical_cmi_detailed(batch, a, b, c)?.value)
}

/// [`empirical_cmi`] plus the bias bound and standard-error proxy.
pub fn empirical_cmi_detailed(
    batch: &SampleBatch,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<EmpiricalCmi> {
    let ga = batch.group_axes(a)?;
    let gb = batch.group_axes(b)?;
    let gc = batch.group_axes(c)?;
    {
        let mut all: Vec<usize> = ga.iter().chain(&gb).chain(&gc).copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid(
                "variable groups of a conditional mutual information must be disjoint",
            ));
        }
    }
    let ordered: Vec<usize> = ga.iter().chain(&gb).chain(&gc).copied().collect();
    let shape: Vec<usize> = ordered.iter().map(|&ax| batch.cards[ax]).collect();
    let total: usize = shape.iter().product();
    if total > 16_000_000 {
        return Err(Error::invalid(format!(
            "empirical joint over {total} cells is too large to tabulate"
        )));
    }

    // Count the empirical type over the (A, B, C) product alphabet.
    let mut counts = vec![0u64; total];
    let columns: Vec<&[u8]> = ordered.iter().map(|&ax| batch.columns[ax].as_slice()).collect();
    for row in 0..batch.n {
        let mut cell = 0usize;
        for (col, &card) in columns.iter().zip(&shape) {
            cell = cell * card + col[row] as usize;
        }
        counts[cell] += 1;
    }
    let n = batch.n as f64;
    let p_abc: Vec<f64> = counts.iter().map(|&k| k as f64 / n).collect();

    let (na, nb) = (a.len(), b.len());
    let axes: Vec<usize> = (0..shape.len()).collect();
    let plan_ac = MarginalPlan::new(
        &shape,
        &axes[..na]
            .iter()
            .chain(&axes[na + nb..])
            .copied()
            .collect::<Vec<_>>(),
    );
    let plan_bc = MarginalPlan::new(&shape, &axes[na..]);
    let plan_c = MarginalPlan::new(&shape, &axes[na + nb..]);
    let p_ac = plan_ac.accumulate(&p_abc);
    let p_bc = plan_bc.accumulate(&p_abc);
    let p_c = plan_c.accumulate(&p_abc);

    let mut pointwise: Vec<(f64, f64)> = Vec::new();
    let mut value = 0.0;
    for (cell, &p) in p_abc.iter().enumerate() {
        if p > 0.0 {
            let ratio = (p * p_c[plan_c.bucket(cell)])
                / (p_ac[plan_ac.bucket(cell)] * p_bc[plan_bc.bucket(cell)]);
            let f = ratio.log2();
            value += p * f;
            pointwise.push((p, f));
        }
    }
    let value = clamp_information(value);
    let variance: f64 = pointwise
        .iter()
        .map(|&(p, f)| p * (f - value) * (f - value))
        .sum();

    let card = |axes: &[usize]| -> f64 {
        axes.iter()
            .map(|&ax| batch.cards[ax] as f64)
            .product::<f64>()
    };
    let bias_bound = (card(&ga) - 1.0) * (card(&gb) - 1.0) * card(&gc) / (2.0 * n * f64::ln(2.0));
    Ok(EmpiricalCmi {
        value,
        bias_bound,
        std_proxy: (variance / n).sqrt(),
    })
}

/// One information term's analytic-versus-empirical comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct TermCheck {
    pub label: String,
    pub analytic: f64,
    pub empirical: f64,
    pub delta: f64,
    pub bias_bound: f64,
    pub std_proxy: f64,
    pub pass: bool,
}

/// Outcome of [`validate_spec`]: per-term deltas against the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub n: usize,
    pub seed: u64,
    pub tol: f64,
    pub terms: Vec<TermCheck>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "plug-in validation: n = {}, seed = {}, tolerance = {:.6}",
            self.n, self.seed, self.tol
        )?;
        writeln!(
            f,
            "{:<22} {:>10} {:>10} {:>10} {:>10} {:>10}  status",
            "term", "analytic", "empirical", "delta", "bias", "std_proxy"
        )?;
        for t in &self.terms {
            writeln!(
                f,
                "{:<22} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}  {}",
                t.label,
                t.analytic,
                t.empirical,
                t.delta,
                t.bias_bound,
                t.std_proxy,
                if t.pass { "pass" } else { "FAIL" }
            )?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        write!(f, "overall: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

/// The four information quantities entering the lower-bound terms, as
/// (label, A, B, C) groups over the assembled joint.
fn term_specs() -> [(&'static str, Vec<&'static str>, Vec<&'static str>, Vec<&'static str>); 4] {
    [
        (
            "I(X;Y|XR,V,U)",
            vec![VAR_X],
            vec![VAR_Y],
            vec![VAR_XR, VAR_V, VAR_U],
        ),
        ("I(X,XR,V;Y)", vec![VAR_X, VAR_XR, VAR_V], vec![VAR_Y], vec![]),
        ("I(V;S|XR,U)", vec![VAR_V], vec![VAR_S], vec![VAR_XR, VAR_U]),
        (
            "I(X,XR,V;Y|U)",
            vec![VAR_X, VAR_XR, VAR_V],
            vec![VAR_Y],
            vec![VAR_U],
        ),
    ]
}

/// Samples the joint induced by `(spec, inner)` once and compares each
/// lower-bound information term's plug-in estimate against its analytic
/// value. A term passes when `|empirical - analytic| <= tol`; the report
/// warns when the bias bound alone exceeds the tolerance (sample size too
/// small for the requested accuracy). Identical inputs give byte-identical
/// reports.
pub fn validate_spec(
    spec: &DmChannelSpec,
    inner: &InnerDistribution,
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<ValidationReport> {
    if !(tol >= 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let joint = assemble_joint(spec, inner)?;
    let batch = sample_joint(&joint, n, seed)?;
    let mut terms = Vec::new();
    let mut warnings = Vec::new();
    for (label, a, b, c) in term_specs() {
        let analytic = joint.conditional_mutual_information(&a, &b, &c)?;
        let est = empirical_cmi_detailed(&batch, &a, &b, &c)?;
        let delta = (est.value - analytic).abs();
        if est.bias_bound > tol {
            warnings.push(format!(
                "n = {n} is too small for tolerance {tol}: plug-in bias bound {:.6} \
                 exceeds it for {label}",
                est.bias_bound
            ));
        }
        terms.push(TermCheck {
            label: label.to_string(),
            analytic,
            empirical: est.value,
            delta,
            bias_bound: est.bias_bound,
            std_proxy: est.std_proxy,
            pass: delta <= tol,
        });
    }
    let passed = terms.iter().all(|t| t.pass);
    Ok(ValidationReport {
        n,
        seed,
        tol,
        terms,
        warnings,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Variable;
    use ndarray::{Array2, Array4};

    fn pmf(names: &[(&str, usize)], flat: Vec<f64>) -> JointPmf {
        let vars = names
            .iter()
            .map(|(n, c)| Variable::new(*n, *c).unwrap())
            .collect();
        JointPmf::from_flat(vars, flat).unwrap()
    }

    #[test]
    fn point_mass_gives_constant_rows_and_seeds_reproduce() {
        let p = pmf(&[("A", 2), ("B", 3)], vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let batch = sample_joint(&p, 1000, 3).unwrap();
        assert!(batch.column("A").unwrap().iter().all(|&v| v == 1));
        assert!(batch.column("B").unwrap().iter().all(|&v| v == 1));
        let again = sample_joint(&p, 1000, 3).unwrap();
        assert_eq!(batch, again);
        let other_seed = sample_joint(&p, 1000, 4).unwrap();
        assert_eq!(batch.column("A"), other_seed.column("A"));
    }

    #[test]
    fn batch_is_independent_of_thread_count() {
        let p = pmf(&[("A", 2), ("B", 2)], vec![0.4, 0.1, 0.2, 0.3]);
        // Crosses several chunk boundaries.
        let n = 3 * SAMPLE_CHUNK + 17;
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| sample_joint(&p, n, 11).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn marginal_frequency_matches_design() {
        let p = pmf(&[("A", 2)], vec![0.9, 0.1]);
        let batch = sample_joint(&p, 1_000_000, 0).unwrap();
        let ones = batch.column("A").unwrap().iter().filter(|&&v| v == 1).count();
        let freq = ones as f64 / 1e6;
        // 3 sigma for Bern(0.1) at n = 1e6 is 9e-4.
        assert!((freq - 0.1).abs() < 1e-3, "freq = {freq}");
    }

    #[test]
    fn independent_variables_estimate_near_zero() {
        let p = pmf(
            &[("A", 2), ("B", 3)],
            vec![0.3 * 0.2, 0.3 * 0.5, 0.3 * 0.3, 0.7 * 0.2, 0.7 * 0.5, 0.7 * 0.3],
        );
        let batch = sample_joint(&p, 1_000_000, 5).unwrap();
        let est = empirical_cmi(&batch, &["A"], &["B"], &[]).unwrap();
        assert!((0.0..=0.005).contains(&est), "estimate = {est}");
    }

    #[test]
    fn copy_channel_estimate_near_one_bit() {
        let p = pmf(&[("A", 2), ("B", 2)], vec![0.5, 0.0, 0.0, 0.5]);
        let batch = sample_joint(&p, 200_000, 9).unwrap();
        let est = empirical_cmi(&batch, &["A"], &["B"], &[]).unwrap();
        assert!((est - 1.0).abs() < 0.01, "estimate = {est}");
    }

    #[test]
    fn conditional_estimate_tracks_analytic_value() {
        // A uniform, C uniform, B = A xor C: I(A;B|C) = 1, I(A;B) = 0.
        let mut flat = vec![0.0; 8]; // order (A, B, C)
        for a in 0..2 {
            for c in 0..2 {
                flat[a * 4 + (a ^ c) * 2 + c] = 0.25;
            }
        }
        let p = pmf(&[("A", 2), ("B", 2), ("C", 2)], flat);
        let batch = sample_joint(&p, 200_000, 21).unwrap();
        let cond = empirical_cmi(&batch, &["A"], &["B"], &["C"]).unwrap();
        let marg = empirical_cmi(&batch, &["A"], &["B"], &[]).unwrap();
        assert!((cond - 1.0).abs() < 0.01, "cond = {cond}");
        assert!(marg < 0.005, "marg = {marg}");
    }

    #[test]
    fn detailed_estimate_reports_diagnostics() {
        let p = pmf(&[("A", 2), ("B", 2)], vec![0.4, 0.1, 0.2, 0.3]);
        let batch = sample_joint(&p, 65_536, 2).unwrap();
        let est = empirical_cmi_detailed(&batch, &["A"], &["B"], &[]).unwrap();
        // (2-1)(2-1)*1 / (2 * 65536 * ln 2).
        let expected_bias = 1.0 / (2.0 * 65536.0 * f64::ln(2.0));
        assert!((est.bias_bound - expected_bias).abs() < 1e-15);
        assert!(est.std_proxy > 0.0 && est.std_proxy < 0.01);
        assert!(est.value >= 0.0);
    }

    #[test]
    fn estimator_rejects_bad_groups() {
        let p = pmf(&[("A", 2), ("B", 2)], vec![0.4, 0.1, 0.2, 0.3]);
        let batch = sample_joint(&p, 100, 0).unwrap();
        assert!(empirical_cmi(&batch, &["A"], &["A"], &[]).is_err());
        assert!(empirical_cmi(&batch, &["A"], &["Z"], &[]).is_err());
        assert!(sample_joint(&p, 0, 0).is_err());
    }

    fn xor_setup() -> (DmChannelSpec, InnerDistribution) {
        let mut k = Array4::zeros((2, 2, 2, 2));
        for s in 0..2 {
            for x in 0..2 {
                for xr in 0..2 {
                    k[[s, x, xr, x ^ xr ^ s]] = 1.0;
                }
            }
        }
        let spec = DmChannelSpec::new(vec![0.9, 0.1], k, 0.0, 0.0).unwrap();
        let px = Array2::from_shape_vec((1, 2), vec![0.85, 0.15]).unwrap();
        let pxr = Array2::from_shape_vec((1, 2), vec![0.85, 0.15]).unwrap();
        let mut pv = Array4::zeros((2, 2, 1, 2));
        for s in 0..2 {
            for xr in 0..2 {
                pv[[s, xr, 0, s]] = 1.0;
            }
        }
        let inner = InnerDistribution::new(vec![1.0], px, pxr, pv).unwrap();
        (spec, inner)
    }

    #[test]
    fn validation_report_passes_at_achievable_tolerance() {
        let (spec, inner) = xor_setup();
        let report = validate_spec(&spec, &inner, 400_000, 7, 0.01).unwrap();
        assert!(report.passed, "{report}");
        assert!(report.warnings.is_empty());
        assert_eq!(report.terms.len(), 4);
        let text = report.to_string();
        assert!(text.contains("overall: PASS"));

        // Byte-identical reports for identical inputs.
        let again = validate_spec(&spec, &inner, 400_000, 7, 0.01).unwrap();
        assert_eq!(text, again.to_string());
    }

    #[test]
    fn zero_tolerance_fails_and_tiny_samples_warn() {
        let (spec, inner) = xor_setup();
        let strict = validate_spec(&spec, &inner, 100_000, 3, 0.0).unwrap();
        assert!(!strict.passed);
        assert!(strict.to_string().contains("overall: FAIL"));

        let tiny = validate_spec(&spec, &inner, 10, 3, 0.001).unwrap();
        assert!(!tiny.warnings.is_empty());
        assert!(tiny.to_string().contains("warning:"));
    }
}
