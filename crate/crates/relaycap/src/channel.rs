//! Discrete memoryless relay channels with state, plus the factored input
//! distributions whose joint law the rate expressions are evaluated on.
//!
//! A channel is `p(y | s, x, x_r)` together with an i.i.d. state pmf `p(s)`
//! and the capacities of the two conferencing links between source and relay
//! (`c_sr` source->relay, `c_rs` relay->source, in bits per channel use).
//! Input distributions factor as
//! `p(u) p(x|u) p(x_r|u) p(v|s, x_r, u)` over auxiliaries `U` (coordination)
//! and `V` (state description).

use ndarray::{Array2, Array4};

use crate::error::{Error, Result};
use crate::prob::{JointPmf, Variable, ROW_SUM_TOL};

pub const VAR_U: &str = "U";
pub const VAR_V: &str = "V";
pub const VAR_S: &str = "S";
pub const VAR_X: &str = "X";
pub const VAR_XR: &str = "XR";
pub const VAR_Y: &str = "Y";

/// Order of axes in every joint assembled by [`assemble_joint`].
pub const JOINT_ORDER: [&str; 6] = [VAR_U, VAR_V, VAR_S, VAR_X, VAR_XR, VAR_Y];

/// Validates that `row` is a pmf up to [`ROW_SUM_TOL`] and returns it scaled
/// to unit mass. Accepted rows are cleaned so that downstream products meet
/// the much tighter joint-pmf mass tolerance.
fn clean_row(row: &[f64], what: impl Fn() -> String) -> Result<Vec<f64>> {
    let mut sum = 0.0;
    for &p in row {
        if !(p >= 0.0) {
            return Err(Error::invalid(format!(
                "{} has negative or NaN entry {p}",
                what()
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::invalid(format!(
            "{} sums to {sum}, deviating from 1 by more than {ROW_SUM_TOL:e}",
            what()
        )));
    }
    Ok(row.iter().map(|&p| p / sum).collect())
}

/// Per-symbol input cost with an average budget, `E[cost(X)] <= budget`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostConstraint {
    pub costs: Vec<f64>,
    pub budget: f64,
}

impl CostConstraint {
    pub fn new(costs: Vec<f64>, budget: f64) -> Result<Self> {
        if costs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::invalid("cost entries must be finite and >= 0"));
        }
        if !budget.is_finite() || budget < 0.0 {
            return Err(Error::invalid("cost budget must be finite and >= 0"));
        }
        Ok(CostConstraint { costs, budget })
    }

    /// Average cost of a pmf over the constrained alphabet.
    pub fn expected_cost(&self, pmf: &[f64]) -> f64 {
        self.costs.iter().zip(pmf).map(|(c, p)| c * p).sum()
    }

    /// Budget check with a small slack so boundary optima are not rejected
    /// for rounding reasons.
    pub fn is_satisfied(&self, pmf: &[f64]) -> bool {
        self.expected_cost(pmf) <= self.budget + 1e-9
    }

    /// Cheapest symbol, used to decide whether the budget is attainable at all.
    pub fn min_cost(&self) -> f64 {
        self.costs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A discrete memoryless state-dependent relay channel.
///
/// The kernel axis order is `[s][x][x_r][y]`; each row `p(. | s, x, x_r)` must
/// be a pmf within [`ROW_SUM_TOL`]. Rows and the state pmf are stored cleaned
/// (scaled to exact unit mass) after validation.
#[derive(Debug, Clone)]
pub struct DmChannelSpec {
    state_pmf: Vec<f64>,
    kernel: Array4<f64>,
    c_sr: f64,
    c_rs: f64,
    cost_x: Option<CostConstraint>,
    cost_xr: Option<CostConstraint>,
}

impl DmChannelSpec {
    pub fn new(state_pmf: Vec<f64>, kernel: Array4<f64>, c_sr: f64, c_rs: f64) -> Result<Self> {
        if state_pmf.is_empty() {
            return Err(Error::invalid("state pmf must be non-empty"));
        }
        let (ks, kx, kxr, ky) = kernel.dim();
        if ks != state_pmf.len() {
            return Err(Error::invalid(format!(
                "kernel has {ks} state slices but the state pmf has {} entries",
                state_pmf.len()
            )));
        }
        if kx == 0 || kxr == 0 || ky == 0 {
            return Err(Error::invalid("kernel alphabets must be non-empty"));
        }
        for (label, c) in [("c_sr", c_sr), ("c_rs", c_rs)] {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::invalid(format!(
                    "conferencing capacity {label} = {c} must be finite and >= 0"
                )));
            }
        }
        let state_pmf = clean_row(&state_pmf, || "state pmf".to_string())?;
        let mut cleaned = kernel.clone();
        for s in 0..ks {
            for x in 0..kx {
                for xr in 0..kxr {
                    let row: Vec<f64> = (0..ky).map(|y| kernel[[s, x, xr, y]]).collect();
                    let row = clean_row(&row, || {
                        format!("kernel row (s={s}, x={x}, x_r={xr})")
                    })?;
                    for (y, p) in row.into_iter().enumerate() {
                        cleaned[[s, x, xr, y]] = p;
                    }
                }
            }
        }
        Ok(DmChannelSpec {
            state_pmf,
            kernel: cleaned,
            c_sr,
            c_rs,
            cost_x: None,
            cost_xr: None,
        })
    }

    /// Attaches an average-cost constraint to the source input.
    pub fn with_input_cost(mut self, cost: CostConstraint) -> Result<Self> {
        if cost.costs.len() != self.card_x() {
            return Err(Error::invalid(format!(
                "input cost vector has {} entries for alphabet of size {}",
                cost.costs.len(),
                self.card_x()
            )));
        }
        self.cost_x = Some(cost);
        Ok(self)
    }

    /// Attaches an average-cost constraint to the relay input.
    pub fn with_relay_cost(mut self, cost: CostConstraint) -> Result<Self> {
        if cost.costs.len() != self.card_xr() {
            return Err(Error::invalid(format!(
                "relay cost vector has {} entries for alphabet of size {}",
                cost.costs.len(),
                self.card_xr()
            )));
        }
        self.cost_xr = Some(cost);
        Ok(self)
    }

    /// Same channel with different conferencing capacities; used by sweeps.
    pub fn with_conferencing(&self, c_sr: f64, c_rs: f64) -> Result<Self> {
        for (label, c) in [("c_sr", c_sr), ("c_rs", c_rs)] {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::invalid(format!(
                    "conferencing capacity {label} = {c} must be finite and >= 0"
                )));
            }
        }
        let mut spec = self.clone();
        spec.c_sr = c_sr;
        spec.c_rs = c_rs;
        Ok(spec)
    }

    pub fn card_s(&self) -> usize {
        self.state_pmf.len()
    }
    pub fn card_x(&self) -> usize {
        self.kernel.dim().1
    }
    pub fn card_xr(&self) -> usize {
        self.kernel.dim().2
    }
    pub fn card_y(&self) -> usize {
        self.kernel.dim().3
    }
    pub fn state_pmf(&self) -> &[f64] {
        &self.state_pmf
    }
    pub fn kernel(&self) -> &Array4<f64> {
        &self.kernel
    }
    pub fn c_sr(&self) -> f64 {
        self.c_sr
    }
    pub fn c_rs(&self) -> f64 {
        self.c_rs
    }
    pub fn cost_x(&self) -> Option<&CostConstraint> {
        self.cost_x.as_ref()
    }
    pub fn cost_xr(&self) -> Option<&CostConstraint> {
        self.cost_xr.as_ref()
    }

    /// Kernel as a flat row-major `[s][x][x_r][y]` buffer.
    pub(crate) fn kernel_flat(&self) -> &[f64] {
        self.kernel.as_slice().expect("standard layout")
    }
}

/// A factored input distribution `p(u) p(x|u) p(x_r|u) p(v|s, x_r, u)`.
///
/// Axis orders: `p_x_given_u[u][x]`, `p_xr_given_u[u][x_r]`, and
/// `p_v[s][x_r][u][v]`. Rows are validated within [`ROW_SUM_TOL`] and stored
/// cleaned, like the channel itself.
#[derive(Debug, Clone)]
pub struct InnerDistribution {
    p_u: Vec<f64>,
    p_x_given_u: Array2<f64>,
    p_xr_given_u: Array2<f64>,
    p_v: Array4<f64>,
}

impl InnerDistribution {
    pub fn new(
        p_u: Vec<f64>,
        p_x_given_u: Array2<f64>,
        p_xr_given_u: Array2<f64>,
        p_v: Array4<f64>,
    ) -> Result<Self> {
        let card_u = p_u.len();
        if card_u == 0 {
            return Err(Error::invalid("p(u) must be non-empty"));
        }
        if p_x_given_u.dim().0 != card_u || p_xr_given_u.dim().0 != card_u {
            return Err(Error::invalid(
                "conditional input rows must match the coordination alphabet size",
            ));
        }
        let (vs, vxr, vu, vv) = p_v.dim();
        if vu != card_u {
            return Err(Error::invalid(format!(
                "p(v|s,x_r,u) has {vu} coordination slices, expected {card_u}"
            )));
        }
        if vv == 0 {
            return Err(Error::invalid("state-description alphabet must be non-empty"));
        }
        let p_u = clean_row(&p_u, || "p(u)".to_string())?;
        let mut px = p_x_given_u.clone();
        for u in 0..card_u {
            let row = clean_row(p_x_given_u.row(u).as_slice().unwrap(), || {
                format!("p(x|u={u})")
            })?;
            for (x, p) in row.into_iter().enumerate() {
                px[[u, x]] = p;
            }
        }
        let mut pxr = p_xr_given_u.clone();
        for u in 0..card_u {
            let row = clean_row(p_xr_given_u.row(u).as_slice().unwrap(), || {
                format!("p(x_r|u={u})")
            })?;
            for (xr, p) in row.into_iter().enumerate() {
                pxr[[u, xr]] = p;
            }
        }
        let mut pv = p_v.clone();
        for s in 0..vs {
            for xr in 0..vxr {
                for u in 0..vu {
                    let row: Vec<f64> = (0..vv).map(|v| p_v[[s, xr, u, v]]).collect();
                    let row = clean_row(&row, || {
                        format!("p(v|s={s}, x_r={xr}, u={u})")
                    })?;
                    for (v, p) in row.into_iter().enumerate() {
                        pv[[s, xr, u, v]] = p;
                    }
                }
            }
        }
        Ok(InnerDistribution {
            p_u,
            p_x_given_u: px,
            p_xr_given_u: pxr,
            p_v: pv,
        })
    }

    /// Degenerate auxiliaries (`|U| = |V| = 1`) around independent inputs;
    /// the simplest valid operating point.
    pub fn from_product_inputs(p_x: &[f64], p_xr: &[f64], card_s: usize) -> Result<Self> {
        let px = Array2::from_shape_vec((1, p_x.len()), p_x.to_vec())
            .map_err(|e| Error::invalid(e.to_string()))?;
        let pxr = Array2::from_shape_vec((1, p_xr.len()), p_xr.to_vec())
            .map_err(|e| Error::invalid(e.to_string()))?;
        let pv = Array4::from_elem((card_s, p_xr.len(), 1, 1), 1.0);
        InnerDistribution::new(vec![1.0], px, pxr, pv)
    }

    pub fn card_u(&self) -> usize {
        self.p_u.len()
    }
    pub fn card_v(&self) -> usize {
        self.p_v.dim().3
    }
    pub fn p_u(&self) -> &[f64] {
        &self.p_u
    }
    pub fn p_x_given_u(&self) -> &Array2<f64> {
        &self.p_x_given_u
    }
    pub fn p_xr_given_u(&self) -> &Array2<f64> {
        &self.p_xr_given_u
    }
    pub fn p_v(&self) -> &Array4<f64> {
        &self.p_v
    }

    /// Marginal pmf of the source input.
    pub fn marginal_x(&self) -> Vec<f64> {
        let (card_u, card_x) = self.p_x_given_u.dim();
        let mut m = vec![0.0; card_x];
        for u in 0..card_u {
            for x in 0..card_x {
                m[x] += self.p_u[u] * self.p_x_given_u[[u, x]];
            }
        }
        m
    }

    /// Marginal pmf of the relay input.
    pub fn marginal_xr(&self) -> Vec<f64> {
        let (card_u, card_xr) = self.p_xr_given_u.dim();
        let mut m = vec![0.0; card_xr];
        for u in 0..card_u {
            for xr in 0..card_xr {
                m[xr] += self.p_u[u] * self.p_xr_given_u[[u, xr]];
            }
        }
        m
    }
}

/// Assembles the full joint law over `(U, V, S, X, XR, Y)`:
/// `p(u) p(v|s,x_r,u) p(s) p(x|u) p(x_r|u) p(y|s,x,x_r)`.
pub fn assemble_joint(spec: &DmChannelSpec, inner: &InnerDistribution) -> Result<JointPmf> {
    let dims = check_dims(spec, inner)?;
    let flat = assemble_flat(spec, inner, &dims);
    let vars = joint_variables(&dims)?;
    JointPmf::from_flat(vars, flat)
}

/// Cardinalities in joint order `(U, V, S, X, XR, Y)`.
pub(crate) fn check_dims(spec: &DmChannelSpec, inner: &InnerDistribution) -> Result<[usize; 6]> {
    let (vs, vxr, _, _) = inner.p_v().dim();
    if vs != spec.card_s() || vxr != spec.card_xr() {
        return Err(Error::invalid(format!(
            "p(v|s,x_r,u) is shaped for {vs} states and {vxr} relay symbols, \
             but the channel has {} and {}",
            spec.card_s(),
            spec.card_xr()
        )));
    }
    if inner.p_x_given_u().dim().1 != spec.card_x() {
        return Err(Error::invalid(format!(
            "p(x|u) covers {} source symbols, channel has {}",
            inner.p_x_given_u().dim().1,
            spec.card_x()
        )));
    }
    if inner.p_xr_given_u().dim().1 != spec.card_xr() {
        return Err(Error::invalid(format!(
            "p(x_r|u) covers {} relay symbols, channel has {}",
            inner.p_xr_given_u().dim().1,
            spec.card_xr()
        )));
    }
    Ok([
        inner.card_u(),
        inner.card_v(),
        spec.card_s(),
        spec.card_x(),
        spec.card_xr(),
        spec.card_y(),
    ])
}

pub(crate) fn joint_variables(dims: &[usize; 6]) -> Result<Vec<Variable>> {
    JOINT_ORDER
        .iter()
        .zip(dims)
        .map(|(name, &card)| Variable::new(*name, card))
        .collect()
}

/// Flat row-major joint over `(U, V, S, X, XR, Y)`; factors are already
/// cleaned, so the product sums to one up to accumulation dust.
pub(crate) fn assemble_flat(
    spec: &DmChannelSpec,
    inner: &InnerDistribution,
    dims: &[usize; 6],
) -> Vec<f64> {
    let [cu, cv, cs, cx, cxr, cy] = *dims;
    let kernel = spec.kernel_flat();
    let ps = spec.state_pmf();
    let mut flat = Vec::with_capacity(cu * cv * cs * cx * cxr * cy);
    for u in 0..cu {
        let fu = inner.p_u()[u];
        for v in 0..cv {
            for s in 0..cs {
                let fs = fu * ps[s];
                for x in 0..cx {
                    let fx = fs * inner.p_x_given_u()[[u, x]];
                    for xr in 0..cxr {
                        let fxr =
                            fx * inner.p_xr_given_u()[[u, xr]] * inner.p_v()[[s, xr, u, v]];
                        let krow = &kernel[((s * cx + x) * cxr + xr) * cy..][..cy];
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

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array4;

    /// Kernel of the noiseless binary adder `Y = X xor XR xor S`.
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

    fn xor_channel() -> DmChannelSpec {
        DmChannelSpec::new(vec![0.9, 0.1], xor_kernel(), 0.0, 0.0).unwrap()
    }

    #[test]
    fn rejects_bad_kernel_rows_with_indices() {
        let mut k = xor_kernel();
        k[[1, 0, 1, 0]] = 0.6; // row now sums to 1.6
        let err = DmChannelSpec::new(vec![0.9, 0.1], k, 0.0, 0.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(s=1, x=0, x_r=1)"), "got: {msg}");
    }

    #[test]
    fn rejects_negative_conferencing_and_bad_state_pmf() {
        assert!(DmChannelSpec::new(vec![0.9, 0.1], xor_kernel(), -0.5, 0.0).is_err());
        assert!(DmChannelSpec::new(vec![0.7, 0.1], xor_kernel(), 0.0, 0.0).is_err());
    }

    #[test]
    fn cleans_row_dust_to_joint_tolerance() {
        let mut k = xor_kernel();
        k[[0, 0, 0, 0]] = 1.0 + 5e-10; // inside the row tolerance
        let spec = DmChannelSpec::new(vec![0.9, 0.1], k, 0.0, 0.0).unwrap();
        let inner =
            InnerDistribution::from_product_inputs(&[0.85, 0.15], &[0.85, 0.15], 2).unwrap();
        // Must satisfy the strict joint mass invariant after cleaning.
        assemble_joint(&spec, &inner).unwrap();
        assert_abs_diff_eq!(spec.kernel()[[0, 0, 0, 0]], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn assembled_joint_has_designed_marginals() {
        let spec = xor_channel();
        let inner =
            InnerDistribution::from_product_inputs(&[0.85, 0.15], &[0.8, 0.2], 2).unwrap();
        let joint = assemble_joint(&spec, &inner).unwrap();

        let my = joint.marginal(&[VAR_Y]).unwrap();
        // P(Y=1) = P(X xor XR xor S = 1) for independent Bernoullis
        // 0.15, 0.2, 0.1: chain of binary convolutions.
        let p1 = crate::prob::binary_convolve(
            crate::prob::binary_convolve(0.15, 0.2).unwrap(),
            0.1,
        )
        .unwrap();
        assert_abs_diff_eq!(my.probs().as_slice().unwrap()[1], p1, epsilon = 1e-12);

        // The factorization makes X and XR independent given U, and here
        // |U| = 1, so they are independent outright.
        assert_abs_diff_eq!(
            joint.mutual_information(&[VAR_X], &[VAR_XR]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        // V is degenerate: no information about anything.
        assert_abs_diff_eq!(
            joint.mutual_information(&[VAR_V], &[VAR_S]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn joint_respects_conditional_independence_structure() {
        // Non-degenerate auxiliaries: check I(X; XR | U) = 0 and
        // I(V; X | S, XR, U) = 0 hold by construction.
        let spec = xor_channel();
        let p_u = vec![0.4, 0.6];
        let p_x = Array2::from_shape_vec((2, 2), vec![0.9, 0.1, 0.6, 0.4]).unwrap();
        let p_xr = Array2::from_shape_vec((2, 2), vec![0.7, 0.3, 0.5, 0.5]).unwrap();
        let mut p_v = Array4::zeros((2, 2, 2, 3));
        for s in 0..2 {
            for xr in 0..2 {
                for u in 0..2 {
                    // Some arbitrary but valid rows that vary with (s, xr, u).
                    let a = 0.2 + 0.3 * s as f64 + 0.1 * xr as f64;
                    let b = 0.15 + 0.2 * u as f64;
                    p_v[[s, xr, u, 0]] = a;
                    p_v[[s, xr, u, 1]] = b;
                    p_v[[s, xr, u, 2]] = 1.0 - a - b;
                }
            }
        }
        let inner = InnerDistribution::new(p_u, p_x, p_xr, p_v).unwrap();
        let joint = assemble_joint(&spec, &inner).unwrap();
        assert_abs_diff_eq!(
            joint
                .conditional_mutual_information(&[VAR_X], &[VAR_XR], &[VAR_U])
                .unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            joint
                .conditional_mutual_information(&[VAR_V], &[VAR_X], &[VAR_S, VAR_XR, VAR_U])
                .unwrap(),
            0.0,
            epsilon = 1e-12
        );
        // The state itself never depends on the inputs.
        assert_abs_diff_eq!(
            joint
                .mutual_information(&[VAR_S], &[VAR_X, VAR_XR, VAR_U])
                .unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn cost_constraints_validate_and_evaluate() {
        let cost = CostConstraint::new(vec![0.0, 1.0], 0.15).unwrap();
        assert_abs_diff_eq!(cost.expected_cost(&[0.85, 0.15]), 0.15, epsilon = 1e-15);
        assert!(cost.is_satisfied(&[0.85, 0.15]));
        assert!(!cost.is_satisfied(&[0.5, 0.5]));
        assert_eq!(cost.min_cost(), 0.0);
        assert!(CostConstraint::new(vec![0.0, -1.0], 0.5).is_err());
        assert!(CostConstraint::new(vec![0.0, 1.0], -0.1).is_err());

        let spec = xor_channel()
            .with_input_cost(cost.clone())
            .unwrap()
            .with_relay_cost(cost)
            .unwrap();
        assert!(spec.cost_x().is_some());
        // Mismatched length is rejected.
        let bad = CostConstraint::new(vec![0.0, 1.0, 2.0], 0.15).unwrap();
        assert!(xor_channel().with_input_cost(bad).is_err());
    }

    #[test]
    fn inner_distribution_rejects_inconsistent_shapes() {
        let p_x = Array2::from_shape_vec((1, 2), vec![0.5, 0.5]).unwrap();
        let p_xr = Array2::from_shape_vec((2, 2), vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let p_v = Array4::from_elem((2, 2, 1, 1), 1.0);
        assert!(InnerDistribution::new(vec![1.0], p_x, p_xr, p_v).is_err());
    }
}
