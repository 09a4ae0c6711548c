//! Rate expressions for the discrete memoryless relay channel with state:
//! the general lower bound over factored inputs, the cut-set upper bound,
//! and the closed-form capacity expressions that hold under structural
//! conditions on the kernel, each exposed as a seeded deterministic
//! maximization returning a re-evaluable certificate.

use ndarray::{Array2, Array3, Array4};

use crate::channel::{check_dims, DmChannelSpec, InnerDistribution};
use crate::error::{Error, Result};
use crate::opt::{maximize_over_simplexes, point_mass, uniform, SearchConfig};
use crate::prob::{clamp_information, MarginalPlan};
use crate::result::{argmin, Certificate, Objective, RateResult};

pub use crate::opt::OptimizerTrace;

/// Default coordination-alphabet size for the general lower bound.
pub fn default_card_u() -> usize {
    2
}

/// Default state-description alphabet size: one symbol more than the state.
pub fn default_card_v(spec: &DmChannelSpec) -> usize {
    spec.card_s() + 1
}

// ---------------------------------------------------------------------------
// Entropy plumbing shared by the evaluators.
// ---------------------------------------------------------------------------

struct EntropySet {
    plans: Vec<MarginalPlan>,
}

impl EntropySet {
    fn new(shape: &[usize], subsets: &[&[usize]]) -> Self {
        EntropySet {
            plans: subsets
                .iter()
                .map(|axes| MarginalPlan::new(shape, axes))
                .collect(),
        }
    }

    fn eval(&self, flat: &[f64]) -> Vec<f64> {
        self.plans.iter().map(|p| p.entropy(flat)).collect()
    }
}

fn entropy_of(pmf: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in pmf {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h
}

/// Validates a joint input pmf `q[x][x_r]` against the channel alphabets and
/// returns it flattened and scaled to exact unit mass.
fn clean_joint_input(spec: &DmChannelSpec, q: &Array2<f64>) -> Result<Vec<f64>> {
    if q.dim() != (spec.card_x(), spec.card_xr()) {
        return Err(Error::invalid(format!(
            "joint input pmf has shape {:?}, channel needs ({}, {})",
            q.dim(),
            spec.card_x(),
            spec.card_xr()
        )));
    }
    let mut sum = 0.0;
    for &p in q.iter() {
        if !(p >= 0.0) {
            return Err(Error::invalid("joint input pmf has a negative entry"));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > crate::prob::ROW_SUM_TOL {
        return Err(Error::invalid(format!(
            "joint input pmf sums to {sum}, not 1"
        )));
    }
    Ok(q.iter().map(|&p| p / sum).collect())
}

// ---------------------------------------------------------------------------
// Evaluator for the three-term lower bound over (U, V, S, X, XR, Y).
// ---------------------------------------------------------------------------

/// Term values of the general lower bound at one input distribution.
pub type InnerTerms = (f64, f64, f64);

const IN_XVXRU: usize = 0;
const IN_YVXRU: usize = 1;
const IN_XYVXRU: usize = 2;
const IN_VXRU: usize = 3;
const IN_XXRV: usize = 4;
const IN_Y: usize = 5;
const IN_XXRVY: usize = 6;
const IN_SXRU: usize = 7;
const IN_VSXRU: usize = 8;
const IN_XRU: usize = 9;
const IN_YU: usize = 10;
const IN_U: usize = 11;

struct InnerEvaluator {
    dims: [usize; 6], // (U, V, S, X, XR, Y)
    state_pmf: Vec<f64>,
    kernel: Vec<f64>, // flat [s][x][xr][y]
    entropies: EntropySet,
    c_sr: f64,
    c_rs: f64,
}

impl InnerEvaluator {
    fn new(spec: &DmChannelSpec, card_u: usize, card_v: usize) -> Self {
        let dims = [
            card_u,
            card_v,
            spec.card_s(),
            spec.card_x(),
            spec.card_xr(),
            spec.card_y(),
        ];
        // Axes: U=0, V=1, S=2, X=3, XR=4, Y=5.
        let subsets: [&[usize]; 12] = [
            &[0, 1, 3, 4],    // (X, V, XR, U)
            &[0, 1, 4, 5],    // (Y, V, XR, U)
            &[0, 1, 3, 4, 5], // (X, Y, V, XR, U)
            &[0, 1, 4],       // (V, XR, U)
            &[1, 3, 4],       // (X, XR, V)
            &[5],             // (Y)
            &[1, 3, 4, 5],    // (X, XR, V, Y)
            &[0, 2, 4],       // (S, XR, U)
            &[0, 1, 2, 4],    // (V, S, XR, U)
            &[0, 4],          // (XR, U)
            &[0, 5],          // (Y, U)
            &[0],             // (U)
        ];
        InnerEvaluator {
            dims,
            state_pmf: spec.state_pmf().to_vec(),
            kernel: spec.kernel_flat().to_vec(),
            entropies: EntropySet::new(&dims, &subsets),
            c_sr: spec.c_sr(),
            c_rs: spec.c_rs(),
        }
    }

    fn block_sizes(&self) -> Vec<usize> {
        let [cu, cv, cs, cx, cxr, _] = self.dims;
        let mut sizes = vec![cu];
        sizes.extend(std::iter::repeat(cx).take(cu));
        sizes.extend(std::iter::repeat(cxr).take(cu));
        sizes.extend(std::iter::repeat(cv).take(cs * cxr * cu));
        sizes
    }

    /// Block index of the state-description row for `(s, xr, u)`.
    fn v_block(&self, s: usize, xr: usize, u: usize) -> usize {
        let [cu, _, _, _, cxr, _] = self.dims;
        1 + 2 * cu + (s * cxr + xr) * cu + u
    }

    fn assemble(&self, blocks: &[Vec<f64>]) -> Vec<f64> {
        let [cu, cv, cs, cx, cxr, cy] = self.dims;
        let mut flat = Vec::with_capacity(cu * cv * cs * cx * cxr * cy);
        for u in 0..cu {
            let fu = blocks[0][u];
            for v in 0..cv {
                for s in 0..cs {
                    let fs = fu * self.state_pmf[s];
                    for x in 0..cx {
                        let fx = fs * blocks[1 + u][x];
                        for xr in 0..cxr {
                            let fxr =
                                fx * blocks[1 + cu + u][xr] * blocks[self.v_block(s, xr, u)][v];
                            let krow = &self.kernel[((s * cx + x) * cxr + xr) * cy..][..cy];
                            for &ky in krow {
                                flat.push(fxr * ky);
                            }
                        }
                    }
                }
            }
        }
        flat
    }

    fn terms(&self, blocks: &[Vec<f64>]) -> InnerTerms {
        let flat = self.assemble(blocks);
        let h = self.entropies.eval(&flat);
        let i_x_y = clamp_information(h[IN_XVXRU] + h[IN_YVXRU] - h[IN_XYVXRU] - h[IN_VXRU]);
        let i_all_y = clamp_information(h[IN_XXRV] + h[IN_Y] - h[IN_XXRVY]);
        let i_v_s = clamp_information(h[IN_VXRU] + h[IN_SXRU] - h[IN_VSXRU] - h[IN_XRU]);
        let i_all_y_u = clamp_information(h[IN_XVXRU] + h[IN_YU] - h[IN_XYVXRU] - h[IN_U]);
        (
            i_x_y + self.c_sr,
            i_all_y - i_v_s,
            i_all_y_u + self.c_sr + self.c_rs - i_v_s,
        )
    }

    fn inner_to_blocks(&self, inner: &InnerDistribution) -> Vec<Vec<f64>> {
        let [cu, cv, cs, cx, cxr, _] = self.dims;
        let mut blocks = Vec::with_capacity(1 + 2 * cu + cs * cxr * cu);
        blocks.push(inner.p_u().to_vec());
        for u in 0..cu {
            blocks.push((0..cx).map(|x| inner.p_x_given_u()[[u, x]]).collect());
        }
        for u in 0..cu {
            blocks.push((0..cxr).map(|xr| inner.p_xr_given_u()[[u, xr]]).collect());
        }
        for s in 0..cs {
            for xr in 0..cxr {
                for u in 0..cu {
                    blocks.push((0..cv).map(|v| inner.p_v()[[s, xr, u, v]]).collect());
                }
            }
        }
        blocks
    }

    fn blocks_to_inner(&self, blocks: &[Vec<f64>]) -> Result<InnerDistribution> {
        let [cu, cv, cs, cx, cxr, _] = self.dims;
        let p_u = blocks[0].clone();
        let mut px = Array2::zeros((cu, cx));
        let mut pxr = Array2::zeros((cu, cxr));
        for u in 0..cu {
            for x in 0..cx {
                px[[u, x]] = blocks[1 + u][x];
            }
            for xr in 0..cxr {
                pxr[[u, xr]] = blocks[1 + cu + u][xr];
            }
        }
        let mut pv = Array4::zeros((cs, cxr, cu, cv));
        for s in 0..cs {
            for xr in 0..cxr {
                for u in 0..cu {
                    let row = &blocks[self.v_block(s, xr, u)];
                    for v in 0..cv {
                        pv[[s, xr, u, v]] = row[v];
                    }
                }
            }
        }
        InnerDistribution::new(p_u, px, pxr, pv)
    }
}

/// Evaluates the three bracketed terms of the general lower bound at one
/// factored input distribution. The second and third terms may be negative;
/// the maximization (not this function) clamps the final rate at zero.
pub fn inner_bound_terms(spec: &DmChannelSpec, inner: &InnerDistribution) -> Result<InnerTerms> {
    check_dims(spec, inner)?;
    let evaluator = InnerEvaluator::new(spec, inner.card_u(), inner.card_v());
    let blocks = evaluator.inner_to_blocks(inner);
    Ok(evaluator.terms(&blocks))
}

/// The min of [`inner_bound_terms`]; the achievable rate certified by `inner`
/// once clamped at zero.
pub fn inner_bound_rate(spec: &DmChannelSpec, inner: &InnerDistribution) -> Result<f64> {
    let (t1, t2, t3) = inner_bound_terms(spec, inner)?;
    Ok(t1.min(t2).min(t3))
}

// ---------------------------------------------------------------------------
// Structured starting points.
// ---------------------------------------------------------------------------

/// Point mass on the cheapest symbol (smallest index on ties); the feasible
/// set is non-empty exactly when this point satisfies the budget.
fn cheapest_point(card: usize, cost: Option<&crate::channel::CostConstraint>) -> Vec<f64> {
    match cost {
        None => point_mass(card, 0),
        Some(c) => {
            let mut best = 0;
            for i in 1..card {
                if c.costs[i] < c.costs[best] {
                    best = i;
                }
            }
            point_mass(card, best)
        }
    }
}

/// Uniform pmf blended toward the cheapest symbol just enough to meet the
/// budget; sits exactly on the budget boundary when uniform is infeasible.
fn budget_blend(card: usize, cost: Option<&crate::channel::CostConstraint>) -> Vec<f64> {
    let unif = uniform(card);
    let Some(c) = cost else {
        return unif;
    };
    let e_unif = c.expected_cost(&unif);
    if e_unif <= c.budget {
        return unif;
    }
    let cheapest = cheapest_point(card, cost);
    let e_min = c.expected_cost(&cheapest);
    if e_unif <= e_min {
        return cheapest;
    }
    let lambda = ((e_unif - c.budget) / (e_unif - e_min)).clamp(0.0, 1.0);
    unif.iter()
        .zip(&cheapest)
        .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
        .collect()
}

/// Greedy northwest-corner coupling: a joint pmf with the given marginals and
/// strong positive association between the two indices.
fn nw_coupling(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (na, nb) = (a.len(), b.len());
    let mut q = vec![0.0; na * nb];
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0], b[0]);
    loop {
        let m = ra.min(rb);
        q[i * nb + j] += m;
        ra -= m;
        rb -= m;
        if ra <= 1e-15 {
            i += 1;
            if i == na {
                break;
            }
            ra = a[i];
        }
        if rb <= 1e-15 {
            j += 1;
            if j == nb {
                break;
            }
            rb = b[j];
        }
    }
    // Any residual dust lands on the last cell so the mass is exact.
    let sum: f64 = q.iter().sum();
    q[na * nb - 1] += 1.0 - sum;
    q
}

/// Coupling with strong negative association (pairs `a` with reversed `b`).
fn anti_coupling(a: &[f64], b: &[f64]) -> Vec<f64> {
    let nb = b.len();
    let rev: Vec<f64> = b.iter().rev().copied().collect();
    let nw = nw_coupling(a, &rev);
    let mut q = vec![0.0; a.len() * nb];
    for i in 0..a.len() {
        for j in 0..nb {
            q[i * nb + j] = nw[i * nb + (nb - 1 - j)];
        }
    }
    q
}

fn outer_product(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut q = Vec::with_capacity(a.len() * b.len());
    for &pa in a {
        for &pb in b {
            q.push(pa * pb);
        }
    }
    q
}

/// Starting points for searches over a single joint input pmf block.
fn joint_input_starts(spec: &DmChannelSpec) -> Vec<Vec<Vec<f64>>> {
    let (cx, cxr) = (spec.card_x(), spec.card_xr());
    let blend_x = budget_blend(cx, spec.cost_x());
    let blend_xr = budget_blend(cxr, spec.cost_xr());
    let cheap = outer_product(
        &cheapest_point(cx, spec.cost_x()),
        &cheapest_point(cxr, spec.cost_xr()),
    );
    vec![
        vec![cheap],
        vec![uniform(cx * cxr)],
        vec![outer_product(&blend_x, &blend_xr)],
        vec![nw_coupling(&blend_x, &blend_xr)],
        vec![anti_coupling(&blend_x, &blend_xr)],
    ]
}

/// Cost feasibility of a joint input pmf via its marginals.
fn joint_input_feasible(spec: &DmChannelSpec, q: &[f64]) -> bool {
    let (cx, cxr) = (spec.card_x(), spec.card_xr());
    if let Some(c) = spec.cost_x() {
        let mut mx = vec![0.0; cx];
        for x in 0..cx {
            for xr in 0..cxr {
                mx[x] += q[x * cxr + xr];
            }
        }
        if !c.is_satisfied(&mx) {
            return false;
        }
    }
    if let Some(c) = spec.cost_xr() {
        let mut mxr = vec![0.0; cxr];
        for x in 0..cx {
            for xr in 0..cxr {
                mxr[xr] += q[x * cxr + xr];
            }
        }
        if !c.is_satisfied(&mxr) {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// General lower-bound maximization.
// ---------------------------------------------------------------------------

/// Maximizes the min of the three lower-bound terms over factored input
/// distributions with the given auxiliary alphabet sizes. Any returned value
/// is an achievable rate; the certificate reproduces it via
/// [`inner_bound_terms`].
pub fn maximize_inner_bound(
    spec: &DmChannelSpec,
    card_u: usize,
    card_v: usize,
    search: &SearchConfig,
) -> Result<RateResult> {
    if card_u == 0 || card_v == 0 {
        return Err(Error::invalid("auxiliary cardinalities must be >= 1"));
    }
    let evaluator = InnerEvaluator::new(spec, card_u, card_v);
    let sizes = evaluator.block_sizes();
    let [cu, cv, cs, cx, cxr, _] = evaluator.dims;

    let cheap_x = cheapest_point(cx, spec.cost_x());
    let cheap_xr = cheapest_point(cxr, spec.cost_xr());
    let blend_x = budget_blend(cx, spec.cost_x());
    let blend_xr = budget_blend(cxr, spec.cost_xr());
    // Rows describing the state exactly (v = s) when the alphabet allows it.
    let identity_v: Vec<Vec<f64>> = (0..cs)
        .map(|s| {
            if cv >= cs {
                point_mass(cv, s)
            } else {
                uniform(cv)
            }
        })
        .collect();

    let make = |p_u: Vec<f64>, px: &[f64], pxr: &[f64], v_rows: Option<&[Vec<f64>]>| {
        let mut blocks = Vec::with_capacity(sizes.len());
        blocks.push(p_u);
        for _ in 0..cu {
            blocks.push(px.to_vec());
        }
        for _ in 0..cu {
            blocks.push(pxr.to_vec());
        }
        for s in 0..cs {
            for _xr in 0..cxr {
                for _u in 0..cu {
                    blocks.push(match v_rows {
                        Some(rows) => rows[s].clone(),
                        None => uniform(cv),
                    });
                }
            }
        }
        blocks
    };
    let starts = vec![
        // All-degenerate baseline: rate exactly 0, feasible whenever anything is.
        make(point_mass(cu, 0), &cheap_x, &cheap_xr, None)
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                if i >= 1 + 2 * cu {
                    point_mass(cv, 0)
                } else {
                    b
                }
            })
            .collect(),
        make(uniform(cu), &uniform(cx), &uniform(cxr), None),
        make(uniform(cu), &blend_x, &blend_xr, Some(&identity_v)),
        make(uniform(cu), &blend_x, &blend_xr, None),
        make(uniform(cu), &uniform(cx), &uniform(cxr), Some(&identity_v)),
    ];

    let feasible = |blocks: &[Vec<f64>]| -> bool {
        if let Some(c) = spec.cost_x() {
            let mut mx = vec![0.0; cx];
            for u in 0..cu {
                for x in 0..cx {
                    mx[x] += blocks[0][u] * blocks[1 + u][x];
                }
            }
            if !c.is_satisfied(&mx) {
                return false;
            }
        }
        if let Some(c) = spec.cost_xr() {
            let mut mxr = vec![0.0; cxr];
            for u in 0..cu {
                for xr in 0..cxr {
                    mxr[xr] += blocks[0][u] * blocks[1 + cu + u][xr];
                }
            }
            if !c.is_satisfied(&mxr) {
                return false;
            }
        }
        true
    };
    let objective = |blocks: &[Vec<f64>]| -> f64 {
        let (t1, t2, t3) = evaluator.terms(blocks);
        t1.min(t2).min(t3)
    };

    let opt = maximize_over_simplexes(&sizes, &starts, search, feasible, objective)?;
    let terms = evaluator.terms(&opt.point);
    let inner = evaluator.blocks_to_inner(&opt.point)?;
    Ok(RateResult {
        rate: opt.value.max(0.0),
        objective: Objective::InnerBound,
        certificate: Certificate::Inner(inner),
        binding_term: argmin(&[terms.0, terms.1, terms.2]),
        trace: opt.trace,
        warnings: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Joint-input evaluator over (S, X, XR, Y) and the expressions built on it.
// ---------------------------------------------------------------------------

const JQ_XXR: usize = 0;
const JQ_Y: usize = 1;
const JQ_XXRY: usize = 2;
const JQ_XXRS: usize = 3;
const JQ_YXRS: usize = 4;
const JQ_ALL: usize = 5;
const JQ_XRS: usize = 6;
const JQ_XR: usize = 7;
const JQ_XRY: usize = 8;

struct JointInputEvaluator {
    dims: [usize; 4], // (S, X, XR, Y)
    state_pmf: Vec<f64>,
    kernel: Vec<f64>,
    entropies: EntropySet,
}

impl JointInputEvaluator {
    fn new(spec: &DmChannelSpec) -> Self {
        let dims = [spec.card_s(), spec.card_x(), spec.card_xr(), spec.card_y()];
        // Axes: S=0, X=1, XR=2, Y=3.
        let subsets: [&[usize]; 9] = [
            &[1, 2],
            &[3],
            &[1, 2, 3],
            &[0, 1, 2],
            &[0, 2, 3],
            &[0, 1, 2, 3],
            &[0, 2],
            &[2],
            &[2, 3],
        ];
        JointInputEvaluator {
            dims,
            state_pmf: spec.state_pmf().to_vec(),
            kernel: spec.kernel_flat().to_vec(),
            entropies: EntropySet::new(&dims, &subsets),
        }
    }

    /// Entropies of the tracked subsets under `p(s) q(x, x_r) p(y|s,x,x_r)`.
    fn entropies(&self, q: &[f64]) -> Vec<f64> {
        let [cs, cx, cxr, cy] = self.dims;
        let mut flat = Vec::with_capacity(cs * cx * cxr * cy);
        for s in 0..cs {
            let fs = self.state_pmf[s];
            for x in 0..cx {
                for xr in 0..cxr {
                    let f = fs * q[x * cxr + xr];
                    let krow = &self.kernel[((s * cx + x) * cxr + xr) * cy..][..cy];
                    for &ky in krow {
                        flat.push(f * ky);
                    }
                }
            }
        }
        self.entropies.eval(&flat)
    }

    fn i_inputs_output(h: &[f64]) -> f64 {
        clamp_information(h[JQ_XXR] + h[JQ_Y] - h[JQ_XXRY])
    }

    fn i_source_output_given_relay_state(h: &[f64]) -> f64 {
        clamp_information(h[JQ_XXRS] + h[JQ_YXRS] - h[JQ_ALL] - h[JQ_XRS])
    }

    fn h_output_given_relay_state(h: &[f64]) -> f64 {
        h[JQ_YXRS] - h[JQ_XRS]
    }

    fn i_relay_output(h: &[f64]) -> f64 {
        clamp_information(h[JQ_XR] + h[JQ_Y] - h[JQ_XRY])
    }
}

/// The two cut-set terms `(I(X,XR;Y), I(X;Y|XR,S) + c_sr)` at a joint input.
pub fn cutset_terms(spec: &DmChannelSpec, p_x_xr: &Array2<f64>) -> Result<(f64, f64)> {
    let q = clean_joint_input(spec, p_x_xr)?;
    let h = JointInputEvaluator::new(spec).entropies(&q);
    Ok((
        JointInputEvaluator::i_inputs_output(&h),
        JointInputEvaluator::i_source_output_given_relay_state(&h) + spec.c_sr(),
    ))
}

/// `(H(Y|XR,S), I(X,XR;Y))` at a joint input pmf — the two terms of the
/// structural capacity expressions.
pub fn joint_capacity_terms(spec: &DmChannelSpec, p_x_xr: &Array2<f64>) -> Result<(f64, f64)> {
    let q = clean_joint_input(spec, p_x_xr)?;
    let h = JointInputEvaluator::new(spec).entropies(&q);
    Ok((
        JointInputEvaluator::h_output_given_relay_state(&h),
        JointInputEvaluator::i_inputs_output(&h),
    ))
}

/// Same terms as [`joint_capacity_terms`] at a product input `p(x) p(x_r)`.
pub fn product_capacity_terms(
    spec: &DmChannelSpec,
    p_x: &[f64],
    p_xr: &[f64],
) -> Result<(f64, f64)> {
    let q = Array2::from_shape_vec(
        (spec.card_x(), spec.card_xr()),
        outer_product(p_x, p_xr),
    )
    .map_err(|e| Error::invalid(e.to_string()))?;
    joint_capacity_terms(spec, &q)
}

/// `I(X,XR;Y)` at a joint input pmf.
pub fn message_coop_rate_at(spec: &DmChannelSpec, p_x_xr: &Array2<f64>) -> Result<f64> {
    let q = clean_joint_input(spec, p_x_xr)?;
    let h = JointInputEvaluator::new(spec).entropies(&q);
    Ok(JointInputEvaluator::i_inputs_output(&h))
}

/// `I(XR;Y)` at a joint input pmf — the relay-to-source conferencing demand
/// of the state-cooperation expressions.
pub fn relay_output_information(spec: &DmChannelSpec, p_x_xr: &Array2<f64>) -> Result<f64> {
    let q = clean_joint_input(spec, p_x_xr)?;
    let h = JointInputEvaluator::new(spec).entropies(&q);
    Ok(JointInputEvaluator::i_relay_output(&h))
}

fn point_to_joint_array(spec: &DmChannelSpec, q: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((spec.card_x(), spec.card_xr()), q.to_vec())
        .expect("shape fixed by construction")
}

/// Shared driver for single-joint-pmf maximizations.
fn maximize_joint_input<F>(
    spec: &DmChannelSpec,
    search: &SearchConfig,
    extra_starts: Vec<Vec<Vec<f64>>>,
    objective_of: F,
) -> Result<(Vec<f64>, f64, OptimizerTrace)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut starts = joint_input_starts(spec);
    starts.extend(extra_starts);
    let sizes = [spec.card_x() * spec.card_xr()];
    let feasible = |blocks: &[Vec<f64>]| joint_input_feasible(spec, &blocks[0]);
    let objective = |blocks: &[Vec<f64>]| objective_of(&blocks[0]);
    let opt = maximize_over_simplexes(&sizes, &starts, search, feasible, objective)?;
    Ok((opt.point.into_iter().next().unwrap(), opt.value, opt.trace))
}

/// Maximizes the cut-set upper bound `min(I(X,XR;Y), I(X;Y|XR,S) + c_sr)`
/// over (cost-feasible) joint input pmfs.
pub fn cutset_bound(spec: &DmChannelSpec, search: &SearchConfig) -> Result<RateResult> {
    let evaluator = JointInputEvaluator::new(spec);
    let c_sr = spec.c_sr();
    let (q, value, trace) = maximize_joint_input(spec, search, Vec::new(), |q| {
        let h = evaluator.entropies(q);
        JointInputEvaluator::i_inputs_output(&h)
            .min(JointInputEvaluator::i_source_output_given_relay_state(&h) + c_sr)
    })?;
    let h = evaluator.entropies(&q);
    let terms = [
        JointInputEvaluator::i_inputs_output(&h),
        JointInputEvaluator::i_source_output_given_relay_state(&h) + c_sr,
    ];
    Ok(RateResult {
        rate: value.max(0.0),
        objective: Objective::Cutset,
        certificate: Certificate::JointInput {
            p_x_xr: point_to_joint_array(spec, &q),
        },
        binding_term: argmin(&terms),
        trace,
        warnings: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Structural conditions and the capacity expressions relying on them.
// ---------------------------------------------------------------------------

/// Structural properties of the kernel under which the capacity expressions
/// below are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralConditions {
    /// Every kernel row is a point mass (within 1e-9): the output is a
    /// deterministic function of `(s, x, x_r)`.
    pub deterministic_output: bool,
    /// A row `(s, x, x_r)` violating determinism, if any.
    pub nondeterministic_row: Option<(usize, usize, usize)>,
    /// For every `(x, x_r, y)` at most one supported state can produce `y`:
    /// the state is recoverable from inputs and output.
    pub state_identifiable: bool,
    /// A witness `(x, x_r, y, s_a, s_b)` of two states explaining the same
    /// output, if any.
    pub ambiguous_states: Option<(usize, usize, usize, usize, usize)>,
}

impl StructuralConditions {
    pub fn both(&self) -> bool {
        self.deterministic_output && self.state_identifiable
    }
}

/// Checks the two structural conditions with entrywise tolerance 1e-9. They
/// are quantified over all input distributions, so the tests are on the
/// kernel itself, not on any sampled distribution.
pub fn structural_conditions(spec: &DmChannelSpec) -> StructuralConditions {
    const TOL: f64 = 1e-9;
    let kernel = spec.kernel();
    let (cs, cx, cxr, cy) = kernel.dim();

    let mut nondeterministic_row = None;
    'det: for s in 0..cs {
        for x in 0..cx {
            for xr in 0..cxr {
                let row_max = (0..cy)
                    .map(|y| kernel[[s, x, xr, y]])
                    .fold(f64::NEG_INFINITY, f64::max);
                if row_max < 1.0 - TOL {
                    nondeterministic_row = Some((s, x, xr));
                    break 'det;
                }
            }
        }
    }

    let mut ambiguous_states = None;
    'amb: for x in 0..cx {
        for xr in 0..cxr {
            for y in 0..cy {
                let mut seen: Option<usize> = None;
                for s in 0..cs {
                    if spec.state_pmf()[s] > 0.0 && kernel[[s, x, xr, y]] > TOL {
                        if let Some(prev) = seen {
                            ambiguous_states = Some((x, xr, y, prev, s));
                            break 'amb;
                        }
                        seen = Some(s);
                    }
                }
            }
        }
    }

    StructuralConditions {
        deterministic_output: nondeterministic_row.is_none(),
        nondeterministic_row,
        state_identifiable: ambiguous_states.is_none(),
        ambiguous_states,
    }
}

fn require_structural(spec: &DmChannelSpec) -> Result<()> {
    let cond = structural_conditions(spec);
    if let Some((s, x, xr)) = cond.nondeterministic_row {
        return Err(Error::precondition(format!(
            "deterministic-output condition fails: kernel row (s={s}, x={x}, x_r={xr}) \
             is not a point mass"
        )));
    }
    if let Some((x, xr, y, sa, sb)) = cond.ambiguous_states {
        return Err(Error::precondition(format!(
            "state-identifiability condition fails: states s={sa} and s={sb} both \
             produce output y={y} under inputs (x={x}, x_r={xr})"
        )));
    }
    Ok(())
}

/// Capacity without any conferencing, valid under both structural conditions:
/// `max min(H(Y|XR,S), I(X,XR;Y))` over product inputs `p(x) p(x_r)`.
pub fn capacity_no_cooperation(spec: &DmChannelSpec, search: &SearchConfig) -> Result<RateResult> {
    require_structural(spec)?;
    let mut warnings = Vec::new();
    if spec.c_sr() != 0.0 || spec.c_rs() != 0.0 {
        warnings.push(format!(
            "no-cooperation capacity assumes c_sr = c_rs = 0; channel has c_sr = {}, c_rs = {} \
             (value reported is the no-conferencing capacity, not this channel's)",
            spec.c_sr(),
            spec.c_rs()
        ));
    }
    let evaluator = JointInputEvaluator::new(spec);
    let (cx, cxr) = (spec.card_x(), spec.card_xr());

    let candidates_x = [
        uniform(cx),
        budget_blend(cx, spec.cost_x()),
        cheapest_point(cx, spec.cost_x()),
    ];
    let candidates_xr = [
        uniform(cxr),
        budget_blend(cxr, spec.cost_xr()),
        cheapest_point(cxr, spec.cost_xr()),
    ];
    let mut starts = Vec::new();
    for a in &candidates_x {
        for b in &candidates_xr {
            starts.push(vec![a.clone(), b.clone()]);
        }
    }

    let feasible = |blocks: &[Vec<f64>]| -> bool {
        spec.cost_x().map_or(true, |c| c.is_satisfied(&blocks[0]))
            && spec.cost_xr().map_or(true, |c| c.is_satisfied(&blocks[1]))
    };
    let objective = |blocks: &[Vec<f64>]| -> f64 {
        let q = outer_product(&blocks[0], &blocks[1]);
        let h = evaluator.entropies(&q);
        JointInputEvaluator::h_output_given_relay_state(&h)
            .min(JointInputEvaluator::i_inputs_output(&h))
    };
    let opt = maximize_over_simplexes(&[cx, cxr], &starts, search, feasible, objective)?;
    let q = outer_product(&opt.point[0], &opt.point[1]);
    let h = evaluator.entropies(&q);
    let terms = [
        JointInputEvaluator::h_output_given_relay_state(&h),
        JointInputEvaluator::i_inputs_output(&h),
    ];
    Ok(RateResult {
        rate: opt.value.max(0.0),
        objective: Objective::ProductCapacity,
        certificate: Certificate::ProductInput {
            p_x: opt.point[0].clone(),
            p_xr: opt.point[1].clone(),
        },
        binding_term: argmin(&terms),
        trace: opt.trace,
        warnings,
    })
}

/// `max I(X,XR;Y)` over joint inputs, with the conferencing demand that makes
/// it the capacity: the channel achieves this rate when `c_sr` is at least
/// the returned threshold (full message cooperation), for any `c_rs`.
pub fn capacity_full_message_cooperation(
    spec: &DmChannelSpec,
    search: &SearchConfig,
) -> Result<(RateResult, f64)> {
    let evaluator = JointInputEvaluator::new(spec);
    let (q, value, trace) = maximize_joint_input(spec, search, Vec::new(), |q| {
        JointInputEvaluator::i_inputs_output(&evaluator.entropies(q))
    })?;
    let required_c_sr = value.max(0.0);
    let mut warnings = Vec::new();
    if spec.c_sr() + 1e-9 < required_c_sr {
        warnings.push(format!(
            "rate is the capacity only when c_sr >= {:.6}; channel has c_sr = {}",
            required_c_sr,
            spec.c_sr()
        ));
    }
    let result = RateResult {
        rate: value.max(0.0),
        objective: Objective::MessageCoop,
        certificate: Certificate::JointInput {
            p_x_xr: point_to_joint_array(spec, &q),
        },
        binding_term: 0,
        trace,
        warnings,
    };
    Ok((result, required_c_sr))
}

// ---------------------------------------------------------------------------
// State cooperation: achievable rate and structural capacity.
// ---------------------------------------------------------------------------

const SC_VXXR: usize = 0;
const SC_VXRY: usize = 1;
const SC_VXXRY: usize = 2;
const SC_VXR: usize = 3;
const SC_Y: usize = 4;
const SC_SXR: usize = 5;
const SC_VSXR: usize = 6;
const SC_XR: usize = 7;

struct StateCoopEvaluator {
    dims: [usize; 5], // (V, S, X, XR, Y)
    state_pmf: Vec<f64>,
    kernel: Vec<f64>,
    entropies: EntropySet,
}

impl StateCoopEvaluator {
    fn new(spec: &DmChannelSpec, card_v: usize) -> Self {
        let dims = [
            card_v,
            spec.card_s(),
            spec.card_x(),
            spec.card_xr(),
            spec.card_y(),
        ];
        // Axes: V=0, S=1, X=2, XR=3, Y=4.
        let subsets: [&[usize]; 8] = [
            &[0, 2, 3],    // (V, X, XR)
            &[0, 3, 4],    // (V, XR, Y)
            &[0, 2, 3, 4], // (V, X, XR, Y)
            &[0, 3],       // (V, XR)
            &[4],          // (Y)
            &[1, 3],       // (S, XR)
            &[0, 1, 3],    // (V, S, XR)
            &[3],          // (XR)
        ];
        StateCoopEvaluator {
            dims,
            state_pmf: spec.state_pmf().to_vec(),
            kernel: spec.kernel_flat().to_vec(),
            entropies: EntropySet::new(&dims, &subsets),
        }
    }

    /// `q` is the flat joint input `[x][x_r]`; `pv` holds rows `p(v|s,x_r)`
    /// indexed `(s * card_xr + x_r)`.
    fn terms(&self, q: &[f64], pv: &[Vec<f64>]) -> (f64, f64) {
        let [cv, cs, cx, cxr, cy] = self.dims;
        let mut flat = Vec::with_capacity(cv * cs * cx * cxr * cy);
        for v in 0..cv {
            for s in 0..cs {
                let fs = self.state_pmf[s];
                for x in 0..cx {
                    for xr in 0..cxr {
                        let f = fs * q[x * cxr + xr] * pv[s * cxr + xr][v];
                        let krow = &self.kernel[((s * cx + x) * cxr + xr) * cy..][..cy];
                        for &ky in krow {
                            flat.push(f * ky);
                        }
                    }
                }
            }
        }
        let h = self.entropies.eval(&flat);
        let t1 = clamp_information(h[SC_VXXR] + h[SC_VXRY] - h[SC_VXXRY] - h[SC_VXR]);
        let i_all = clamp_information(h[SC_VXXR] + h[SC_Y] - h[SC_VXXRY]);
        let i_v_s = clamp_information(h[SC_VXR] + h[SC_SXR] - h[SC_VSXR] - h[SC_XR]);
        (t1, i_all - i_v_s)
    }
}

/// The two terms `(I(X;Y|XR,V), I(X,XR,V;Y) - I(V;S|XR))` of the
/// state-cooperation-only rate at a joint input and state description.
pub fn state_coop_only_terms(
    spec: &DmChannelSpec,
    p_x_xr: &Array2<f64>,
    p_v_given_s_xr: &Array3<f64>,
) -> Result<(f64, f64)> {
    let q = clean_joint_input(spec, p_x_xr)?;
    let (vs, vxr, cv) = p_v_given_s_xr.dim();
    if vs != spec.card_s() || vxr != spec.card_xr() || cv == 0 {
        return Err(Error::invalid(format!(
            "state description has shape ({vs}, {vxr}, {cv}); channel needs ({}, {}, >=1)",
            spec.card_s(),
            spec.card_xr()
        )));
    }
    let mut rows = Vec::with_capacity(vs * vxr);
    for s in 0..vs {
        for xr in 0..vxr {
            let row: Vec<f64> = (0..cv).map(|v| p_v_given_s_xr[[s, xr, v]]).collect();
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > crate::prob::ROW_SUM_TOL {
                return Err(Error::invalid(format!(
                    "state-description row (s={s}, x_r={xr}) is not a pmf"
                )));
            }
            rows.push(row.into_iter().map(|p| p / sum).collect());
        }
    }
    Ok(StateCoopEvaluator::new(spec, cv).terms(&q, &rows))
}

/// Achievable rate with state cooperation only (no source-to-relay link):
/// `max min(I(X;Y|XR,V), I(X,XR,V;Y) - I(V;S|XR))` over joint inputs and
/// state descriptions, plus the relay-to-source conferencing demand
/// `max I(XR;Y)` that makes the rate valid.
pub fn rate_state_cooperation_only(
    spec: &DmChannelSpec,
    card_v: usize,
    search: &SearchConfig,
) -> Result<(RateResult, f64)> {
    if spec.c_sr() != 0.0 {
        return Err(Error::precondition(format!(
            "state-cooperation-only rate requires c_sr = 0; channel has c_sr = {}",
            spec.c_sr()
        )));
    }
    if card_v == 0 {
        return Err(Error::invalid("card_v must be >= 1"));
    }
    let evaluator = StateCoopEvaluator::new(spec, card_v);
    let (cs, cx, cxr) = (spec.card_s(), spec.card_x(), spec.card_xr());
    let n_rows = cs * cxr;
    let mut sizes = vec![cx * cxr];
    sizes.extend(std::iter::repeat(card_v).take(n_rows));

    let identity_rows: Vec<Vec<f64>> = (0..n_rows)
        .map(|row| {
            let s = row / cxr;
            if card_v >= cs {
                point_mass(card_v, s)
            } else {
                uniform(card_v)
            }
        })
        .collect();
    let uniform_rows: Vec<Vec<f64>> = vec![uniform(card_v); n_rows];
    let degenerate_rows: Vec<Vec<f64>> = vec![point_mass(card_v, 0); n_rows];
    let mut starts = Vec::new();
    for q_start in joint_input_starts(spec) {
        for rows in [&identity_rows, &uniform_rows, &degenerate_rows] {
            let mut blocks = q_start.clone();
            blocks.extend(rows.iter().cloned());
            starts.push(blocks);
        }
    }

    let feasible = |blocks: &[Vec<f64>]| joint_input_feasible(spec, &blocks[0]);
    let objective = |blocks: &[Vec<f64>]| -> f64 {
        let (t1, t2) = evaluator.terms(&blocks[0], &blocks[1..]);
        t1.min(t2)
    };
    let opt = maximize_over_simplexes(&sizes, &starts, search, feasible, objective)?;
    let (t1, t2) = evaluator.terms(&opt.point[0], &opt.point[1..]);

    let q_array = point_to_joint_array(spec, &opt.point[0]);
    let mut pv = Array3::zeros((cs, cxr, card_v));
    for s in 0..cs {
        for xr in 0..cxr {
            for v in 0..card_v {
                pv[[s, xr, v]] = opt.point[1 + s * cxr + xr][v];
            }
        }
    }

    // The conferencing demand: how much relay-to-source capacity the scheme
    // needs. I(XR;Y) depends only on the joint input, so search that alone.
    let relay_eval = JointInputEvaluator::new(spec);
    let (_, required_c_rs, demand_trace) = maximize_joint_input(spec, search, Vec::new(), |q| {
        JointInputEvaluator::i_relay_output(&relay_eval.entropies(q))
    })?;

    let mut trace = opt.trace;
    trace.evaluations += demand_trace.evaluations;
    trace.restarts_run += demand_trace.restarts_run;

    let result = RateResult {
        rate: opt.value.max(0.0),
        objective: Objective::StateCoopOnly,
        certificate: Certificate::StateCoop {
            p_x_xr: q_array,
            p_v_given_s_xr: pv,
        },
        binding_term: argmin(&[t1, t2]),
        trace,
        warnings: if spec.c_rs() + 1e-9 < required_c_rs.max(0.0) {
            vec![format!(
                "rate is guaranteed achievable only when c_rs >= {:.6}; channel has c_rs = {}",
                required_c_rs.max(0.0),
                spec.c_rs()
            )]
        } else {
            Vec::new()
        },
    };
    Ok((result, required_c_rs.max(0.0)))
}

/// Capacity with state cooperation only, valid under both structural
/// conditions and sufficient relay-to-source conferencing:
/// `max min(H(Y|XR,S), I(X,XR;Y))` over joint input pmfs.
pub fn capacity_state_cooperation(
    spec: &DmChannelSpec,
    search: &SearchConfig,
) -> Result<RateResult> {
    require_structural(spec)?;
    if spec.c_sr() != 0.0 {
        return Err(Error::precondition(format!(
            "state-cooperation capacity requires c_sr = 0; channel has c_sr = {}",
            spec.c_sr()
        )));
    }
    // Joint inputs strictly contain product inputs; seeding with the
    // no-cooperation optimum makes the containment hold numerically too.
    let product_opt = capacity_no_cooperation(spec, search)?;
    let extra = match &product_opt.certificate {
        Certificate::ProductInput { p_x, p_xr } => vec![vec![outer_product(p_x, p_xr)]],
        _ => Vec::new(),
    };
    let evaluator = JointInputEvaluator::new(spec);
    let (q, value, trace) = maximize_joint_input(spec, search, extra, |q| {
        let h = evaluator.entropies(q);
        JointInputEvaluator::h_output_given_relay_state(&h)
            .min(JointInputEvaluator::i_inputs_output(&h))
    })?;
    let h = evaluator.entropies(&q);
    let terms = [
        JointInputEvaluator::h_output_given_relay_state(&h),
        JointInputEvaluator::i_inputs_output(&h),
    ];
    Ok(RateResult {
        rate: value.max(0.0),
        objective: Objective::StateCoopCapacity,
        certificate: Certificate::JointInput {
            p_x_xr: point_to_joint_array(spec, &q),
        },
        binding_term: argmin(&terms),
        trace,
        warnings: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Baseline: relay pinned to a constant symbol, state ignored.
// ---------------------------------------------------------------------------

/// `I(X;Y|XR = x_r)` for a source pmf and a fixed relay symbol, through the
/// state-averaged channel `W(y|x) = sum_s p(s) p(y|s,x,x_r)`.
pub fn source_relay_mi(spec: &DmChannelSpec, p_x: &[f64], relay_symbol: usize) -> Result<f64> {
    if p_x.len() != spec.card_x() {
        return Err(Error::invalid(format!(
            "source pmf has {} entries for alphabet of size {}",
            p_x.len(),
            spec.card_x()
        )));
    }
    if relay_symbol >= spec.card_xr() {
        return Err(Error::invalid(format!(
            "relay symbol {relay_symbol} outside alphabet of size {}",
            spec.card_xr()
        )));
    }
    let sum: f64 = p_x.iter().sum();
    if p_x.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > crate::prob::ROW_SUM_TOL {
        return Err(Error::invalid("source pmf is not a pmf"));
    }
    let w = averaged_channel(spec, relay_symbol);
    Ok(mi_through_channel(
        &p_x.iter().map(|p| p / sum).collect::<Vec<_>>(),
        &w,
        spec.card_y(),
    ))
}

fn averaged_channel(spec: &DmChannelSpec, xr: usize) -> Vec<f64> {
    let (cs, cx, _, cy) = spec.kernel().dim();
    let mut w = vec![0.0; cx * cy];
    for x in 0..cx {
        for y in 0..cy {
            let mut p = 0.0;
            for s in 0..cs {
                p += spec.state_pmf()[s] * spec.kernel()[[s, x, xr, y]];
            }
            w[x * cy + y] = p;
        }
    }
    w
}

fn mi_through_channel(p_x: &[f64], w: &[f64], cy: usize) -> f64 {
    let mut p_y = vec![0.0; cy];
    let mut h_y_given_x = 0.0;
    for (x, &px) in p_x.iter().enumerate() {
        let row = &w[x * cy..][..cy];
        for (y, &wy) in row.iter().enumerate() {
            p_y[y] += px * wy;
        }
        h_y_given_x += px * entropy_of(row);
    }
    clamp_information(entropy_of(&p_y) - h_y_given_x)
}

/// Baseline where the relay ignores the state: `max I(X;Y|XR = x_r)` over
/// cost-feasible source pmfs and (cost-feasible) fixed relay symbols.
pub fn no_state_info_baseline(spec: &DmChannelSpec, search: &SearchConfig) -> Result<RateResult> {
    let cx = spec.card_x();
    let symbols: Vec<usize> = (0..spec.card_xr())
        .filter(|&xr| {
            spec.cost_xr()
                .map_or(true, |c| c.costs[xr] <= c.budget + 1e-9)
        })
        .collect();
    if symbols.is_empty() {
        return Err(Error::Infeasible(
            "no relay symbol satisfies the relay cost budget".to_string(),
        ));
    }
    let starts = vec![
        vec![uniform(cx)],
        vec![budget_blend(cx, spec.cost_x())],
        vec![cheapest_point(cx, spec.cost_x())],
    ];
    let feasible =
        |blocks: &[Vec<f64>]| spec.cost_x().map_or(true, |c| c.is_satisfied(&blocks[0]));

    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let mut trace = OptimizerTrace::default();
    for &xr in &symbols {
        let w = averaged_channel(spec, xr);
        let objective = |blocks: &[Vec<f64>]| mi_through_channel(&blocks[0], &w, spec.card_y());
        let opt = maximize_over_simplexes(&[cx], &starts, search, feasible, objective)?;
        trace.evaluations += opt.trace.evaluations;
        trace.restarts_run += opt.trace.restarts_run;
        if best.as_ref().map_or(true, |(v, _, _)| opt.value > *v) {
            trace.best_history = opt.trace.best_history.clone();
            best = Some((opt.value, opt.point.into_iter().next().unwrap(), xr));
        }
    }
    let (value, p_x, relay_symbol) = best.expect("at least one symbol");
    Ok(RateResult {
        rate: value.max(0.0),
        objective: Objective::NoStateInfo,
        certificate: Certificate::SourceInput { p_x, relay_symbol },
        binding_term: 0,
        trace,
        warnings: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Certificate re-evaluation.
// ---------------------------------------------------------------------------

/// Recomputes the objective of `result` at its certificate; matches
/// `result.rate` within 1e-9 for any result produced by this module.
pub fn reevaluate(spec: &DmChannelSpec, result: &RateResult) -> Result<f64> {
    let value = match (&result.objective, &result.certificate) {
        (Objective::InnerBound, Certificate::Inner(inner)) => {
            let (t1, t2, t3) = inner_bound_terms(spec, inner)?;
            t1.min(t2).min(t3)
        }
        (Objective::Cutset, Certificate::JointInput { p_x_xr }) => {
            let (t1, t2) = cutset_terms(spec, p_x_xr)?;
            t1.min(t2)
        }
        (Objective::ProductCapacity, Certificate::ProductInput { p_x, p_xr }) => {
            let (t1, t2) = product_capacity_terms(spec, p_x, p_xr)?;
            t1.min(t2)
        }
        (Objective::MessageCoop, Certificate::JointInput { p_x_xr }) => {
            message_coop_rate_at(spec, p_x_xr)?
        }
        (Objective::StateCoopOnly, Certificate::StateCoop { p_x_xr, p_v_given_s_xr }) => {
            let (t1, t2) = state_coop_only_terms(spec, p_x_xr, p_v_given_s_xr)?;
            t1.min(t2)
        }
        (Objective::StateCoopCapacity, Certificate::JointInput { p_x_xr }) => {
            let (t1, t2) = joint_capacity_terms(spec, p_x_xr)?;
            t1.min(t2)
        }
        (Objective::NoStateInfo, Certificate::SourceInput { p_x, relay_symbol }) => {
            source_relay_mi(spec, p_x, *relay_symbol)?
        }
        _ => {
            return Err(Error::invalid(
                "certificate does not match the result's objective (Gaussian results \
                 are re-evaluated by the Gaussian module)",
            ))
        }
    };
    Ok(value.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{DmChannelSpec, InnerDistribution};
    use crate::prob::{binary_convolve, binary_entropy};
    use approx::assert_abs_diff_eq;
    use ndarray::Array4;

    fn xor_kernel() -> Array4<f64> {
        let mut k = Array4::zeros((2, 2, 2, 2));
        for s in 0..2 {
            for x in 0..2 {
                for xr in 0..2 {
                    k[[s, x, xr, x ^ xr ^ s]] = 1.0;
                }
            }
        }
        k
    }

    fn xor_channel(p_s: f64, c_sr: f64, c_rs: f64) -> DmChannelSpec {
        DmChannelSpec::new(vec![1.0 - p_s, p_s], xor_kernel(), c_sr, c_rs).unwrap()
    }

    /// Inner distribution with |U| = 1 and V = S (perfect state description).
    fn v_equals_s_inner(p: f64, p_r: f64) -> InnerDistribution {
        let px = Array2::from_shape_vec((1, 2), vec![1.0 - p, p]).unwrap();
        let pxr = Array2::from_shape_vec((1, 2), vec![1.0 - p_r, p_r]).unwrap();
        let mut pv = Array4::zeros((2, 2, 1, 2));
        for s in 0..2 {
            for xr in 0..2 {
                pv[[s, xr, 0, s]] = 1.0;
            }
        }
        InnerDistribution::new(vec![1.0], px, pxr, pv).unwrap()
    }

    #[test]
    fn degenerate_terms_collapse_to_two_expressions() {
        let spec = xor_channel(0.1, 0.3, 0.7);
        let inner = InnerDistribution::from_product_inputs(&[0.85, 0.15], &[0.85, 0.15], 2).unwrap();
        let (t1, t2, t3) = inner_bound_terms(&spec, &inner).unwrap();
        // Degenerate V, U: t1 = I(X;Y|XR) + c_sr, t2 = I(X,XR;Y),
        // t3 = I(X,XR;Y) + c_sr + c_rs.
        let hb = |p: f64| binary_entropy(p).unwrap();
        let i_x_y_given_xr = hb(binary_convolve(0.15, 0.1).unwrap()) - hb(0.1);
        let i_xxr_y = hb(binary_convolve(0.255, 0.1).unwrap()) - hb(0.1);
        assert_abs_diff_eq!(t1, i_x_y_given_xr + 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(t2, i_xxr_y, epsilon = 1e-12);
        assert_abs_diff_eq!(t3, i_xxr_y + 1.0, epsilon = 1e-12);
    }

    #[test]
    fn state_description_terms_match_hand_values() {
        // V = S, |U| = 1, boundary inputs on the additive binary channel.
        let spec = xor_channel(0.1, 0.0, 0.0);
        let inner = v_equals_s_inner(0.15, 0.15);
        let (t1, t2, t3) = inner_bound_terms(&spec, &inner).unwrap();
        let hb = |p: f64| binary_entropy(p).unwrap();
        assert_abs_diff_eq!(t1, hb(0.15), epsilon = 1e-12);
        assert_abs_diff_eq!(t2, 0.417130053875240934, epsilon = 1e-12);
        assert_abs_diff_eq!(t3, t2, epsilon = 1e-12);
        assert_abs_diff_eq!(
            inner_bound_rate(&spec, &inner).unwrap(),
            0.417130053875240934,
            epsilon = 1e-12
        );
    }

    #[test]
    fn independent_description_has_zero_subtrahend() {
        // V drawn independently of S: t2 must equal I(X,XR,V;Y) exactly, so
        // compare against the same term computed through the generic pmf path.
        let spec = xor_channel(0.2, 0.0, 0.0);
        let px = Array2::from_shape_vec((1, 2), vec![0.7, 0.3]).unwrap();
        let pxr = Array2::from_shape_vec((1, 2), vec![0.6, 0.4]).unwrap();
        let mut pv = Array4::zeros((2, 2, 1, 2));
        for s in 0..2 {
            for xr in 0..2 {
                pv[[s, xr, 0, 0]] = 0.35;
                pv[[s, xr, 0, 1]] = 0.65;
            }
        }
        let inner = InnerDistribution::new(vec![1.0], px, pxr, pv).unwrap();
        let (_, t2, _) = inner_bound_terms(&spec, &inner).unwrap();
        let joint = crate::channel::assemble_joint(&spec, &inner).unwrap();
        let i_all = joint
            .mutual_information(&["X", "XR", "V"], &["Y"])
            .unwrap();
        assert_abs_diff_eq!(t2, i_all, epsilon = 1e-12);
    }

    #[test]
    fn evaluator_terms_agree_with_generic_pmf_path() {
        // The optimizer's fused evaluator and the public pmf machinery must
        // produce identical term values on a non-degenerate distribution.
        let spec = xor_channel(0.25, 0.4, 0.6);
        let p_u = vec![0.3, 0.7];
        let px = Array2::from_shape_vec((2, 2), vec![0.8, 0.2, 0.55, 0.45]).unwrap();
        let pxr = Array2::from_shape_vec((2, 2), vec![0.9, 0.1, 0.35, 0.65]).unwrap();
        let mut pv = Array4::zeros((2, 2, 2, 3));
        for s in 0..2 {
            for xr in 0..2 {
                for u in 0..2 {
                    let a = 0.1 + 0.25 * s as f64 + 0.15 * xr as f64;
                    let b = 0.3 + 0.2 * u as f64;
                    pv[[s, xr, u, 0]] = a;
                    pv[[s, xr, u, 1]] = b;
                    pv[[s, xr, u, 2]] = 1.0 - a - b;
                }
            }
        }
        let inner = InnerDistribution::new(p_u, px, pxr, pv).unwrap();
        let (t1, t2, t3) = inner_bound_terms(&spec, &inner).unwrap();

        let joint = crate::channel::assemble_joint(&spec, &inner).unwrap();
        let cmi = |a: &[&str], b: &[&str], c: &[&str]| {
            joint.conditional_mutual_information(a, b, c).unwrap()
        };
        let i1 = cmi(&["X"], &["Y"], &["XR", "V", "U"]);
        let i2 = cmi(&["X", "XR", "V"], &["Y"], &[]);
        let isub = cmi(&["V"], &["S"], &["XR", "U"]);
        let i3 = cmi(&["X", "XR", "V"], &["Y"], &["U"]);
        assert_abs_diff_eq!(t1, i1 + 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(t2, i2 - isub, epsilon = 1e-12);
        assert_abs_diff_eq!(t3, i3 + 0.4 + 0.6 - isub, epsilon = 1e-12);
    }

    #[test]
    fn structural_conditions_on_reference_channels() {
        // Additive binary channel: deterministic and state-identifiable.
        let cond = structural_conditions(&xor_channel(0.1, 0.0, 0.0));
        assert!(cond.deterministic_output && cond.state_identifiable);

        // Noisy rows: determinism fails with a witness.
        let mut k = xor_kernel();
        k[[0, 0, 0, 0]] = 0.7;
        k[[0, 0, 0, 1]] = 0.3;
        let noisy = DmChannelSpec::new(vec![0.9, 0.1], k, 0.0, 0.0).unwrap();
        let cond = structural_conditions(&noisy);
        assert!(!cond.deterministic_output);
        assert_eq!(cond.nondeterministic_row, Some((0, 0, 0)));

        // Output ignores the state: deterministic but not identifiable.
        let mut k = Array4::zeros((2, 2, 2, 2));
        for s in 0..2 {
            for x in 0..2 {
                for xr in 0..2 {
                    k[[s, x, xr, x ^ xr]] = 1.0;
                }
            }
        }
        let blind = DmChannelSpec::new(vec![0.9, 0.1], k.clone(), 0.0, 0.0).unwrap();
        let cond = structural_conditions(&blind);
        assert!(cond.deterministic_output);
        assert!(!cond.state_identifiable);

        // A state symbol with zero probability cannot create ambiguity.
        let degenerate_state = DmChannelSpec::new(vec![1.0, 0.0], k, 0.0, 0.0).unwrap();
        assert!(structural_conditions(&degenerate_state).state_identifiable);
    }

    #[test]
    fn useless_channel_rates_are_zero() {
        // Output independent of everything.
        let mut k = Array4::zeros((2, 2, 2, 2));
        for s in 0..2 {
            for x in 0..2 {
                for xr in 0..2 {
                    k[[s, x, xr, 0]] = 0.5;
                    k[[s, x, xr, 1]] = 0.5;
                }
            }
        }
        let spec = DmChannelSpec::new(vec![0.9, 0.1], k, 0.0, 0.0).unwrap();
        let cfg = SearchConfig {
            restarts: 4,
            ..Default::default()
        };
        let r = maximize_inner_bound(&spec, 1, 1, &cfg).unwrap();
        assert!(r.rate.abs() < 1e-9);
        let (m, required) = capacity_full_message_cooperation(&spec, &cfg).unwrap();
        assert!(m.rate.abs() < 1e-9 && required.abs() < 1e-9);
        let b = no_state_info_baseline(&spec, &cfg).unwrap();
        assert!(b.rate.abs() < 1e-9);
    }

    #[test]
    fn noiseless_bit_pipe_cutset_is_one_bit() {
        // Y = X regardless of state and relay.
        let mut k = Array4::zeros((2, 2, 2, 2));
        for s in 0..2 {
            for x in 0..2 {
                for xr in 0..2 {
                    k[[s, x, xr, x]] = 1.0;
                }
            }
        }
        let spec = DmChannelSpec::new(vec![0.9, 0.1], k, 0.0, 0.0).unwrap();
        let cfg = SearchConfig {
            restarts: 16,
            ..Default::default()
        };
        let r = cutset_bound(&spec, &cfg).unwrap();
        assert_abs_diff_eq!(r.rate, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn preconditions_are_enforced() {
        let mut k = xor_kernel();
        k[[0, 0, 0, 0]] = 0.7;
        k[[0, 0, 0, 1]] = 0.3;
        let noisy = DmChannelSpec::new(vec![0.9, 0.1], k, 0.0, 0.0).unwrap();
        let cfg = SearchConfig::default();
        let err = capacity_no_cooperation(&noisy, &cfg).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(err.to_string().contains("deterministic-output"));

        let conferencing = xor_channel(0.1, 0.5, 0.0);
        let err = rate_state_cooperation_only(&conferencing, 2, &cfg).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let err = capacity_state_cooperation(&conferencing, &cfg).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn certificates_reproduce_rates() {
        let spec = xor_channel(0.1, 0.0, 0.0);
        let cfg = SearchConfig {
            restarts: 12,
            ..Default::default()
        };
        let results = vec![
            maximize_inner_bound(&spec, 1, 2, &cfg).unwrap(),
            cutset_bound(&spec, &cfg).unwrap(),
            capacity_no_cooperation(&spec, &cfg).unwrap(),
            capacity_full_message_cooperation(&spec, &cfg).unwrap().0,
            rate_state_cooperation_only(&spec, 2, &cfg).unwrap().0,
            capacity_state_cooperation(&spec, &cfg).unwrap(),
            no_state_info_baseline(&spec, &cfg).unwrap(),
        ];
        for r in results {
            let again = reevaluate(&spec, &r).unwrap();
            assert!(
                (again - r.rate).abs() < 1e-9,
                "{:?}: {} vs {}",
                r.objective,
                r.rate,
                again
            );
        }
    }
}
