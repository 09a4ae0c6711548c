//! Dense joint distributions over named finite variables, with the entropy
//! and mutual-information machinery the rate expressions are built from.
//!
//! All information quantities are in bits (base-2 logarithms) and follow the
//! convention `0 * log 0 = 0`.

use ndarray::ArrayD;

use crate::error::{Error, Result};

/// Entries of a joint pmf must sum to one within this tolerance.
pub const JOINT_SUM_TOL: f64 = 1e-12;

/// Stochastic rows handed in by callers may deviate from unit mass by this
/// much before they are rejected.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Mutual informations are mathematically nonnegative; values above this far
/// below zero indicate a real bug rather than rounding dust.
const CMI_CLAMP: f64 = 1e-10;

/// A named finite random variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    name: String,
    cardinality: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, cardinality: usize) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::invalid("variable name must be non-empty"));
        }
        if cardinality == 0 {
            return Err(Error::invalid(format!(
                "variable {name} must have cardinality >= 1"
            )));
        }
        Ok(Variable { name, cardinality })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }
}

/// A joint pmf over an ordered list of named variables, stored densely.
///
/// Invariants (checked on construction): one axis per variable, axis lengths
/// match the declared cardinalities, every entry is `>= 0`, and the total mass
/// is `1` within [`JOINT_SUM_TOL`].
#[derive(Debug, Clone)]
pub struct JointPmf {
    variables: Vec<Variable>,
    probs: ArrayD<f64>,
}

impl JointPmf {
    pub fn new(variables: Vec<Variable>, probs: ArrayD<f64>) -> Result<Self> {
        if probs.ndim() != variables.len() {
            return Err(Error::invalid(format!(
                "pmf has {} axes but {} variables were declared",
                probs.ndim(),
                variables.len()
            )));
        }
        for (axis, var) in variables.iter().enumerate() {
            if probs.shape()[axis] != var.cardinality {
                return Err(Error::invalid(format!(
                    "axis {axis} has length {} but variable {} has cardinality {}",
                    probs.shape()[axis],
                    var.name,
                    var.cardinality
                )));
            }
        }
        for (i, var) in variables.iter().enumerate() {
            if variables[..i].iter().any(|v| v.name == var.name) {
                return Err(Error::invalid(format!("duplicate variable {}", var.name)));
            }
        }
        let mut sum = 0.0;
        for &p in probs.iter() {
            if !(p >= 0.0) {
                return Err(Error::invalid(format!("pmf entry {p} is negative or NaN")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > JOINT_SUM_TOL {
            return Err(Error::invalid(format!(
                "pmf mass {sum} deviates from 1 by more than {JOINT_SUM_TOL:e}"
            )));
        }
        Ok(JointPmf { variables, probs })
    }

    /// Builds a pmf from a flat buffer in row-major order over `variables`.
    pub fn from_flat(variables: Vec<Variable>, flat: Vec<f64>) -> Result<Self> {
        let shape: Vec<usize> = variables.iter().map(|v| v.cardinality).collect();
        let probs = ArrayD::from_shape_vec(ndarray::IxDyn(&shape), flat)
            .map_err(|e| Error::invalid(format!("flat buffer does not match shape: {e}")))?;
        JointPmf::new(variables, probs)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn probs(&self) -> &ArrayD<f64> {
        &self.probs
    }

    fn axes_for(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut axes = Vec::with_capacity(names.len());
        for name in names {
            let axis = self
                .variables
                .iter()
                .position(|v| v.name == *name)
                .ok_or_else(|| Error::invalid(format!("unknown variable {name}")))?;
            if axes.contains(&axis) {
                return Err(Error::invalid(format!("variable {name} listed twice")));
            }
            axes.push(axis);
        }
        Ok(axes)
    }

    /// Marginal distribution over `names`, keeping this pmf's variable order.
    pub fn marginal(&self, names: &[&str]) -> Result<JointPmf> {
        let mut axes = self.axes_for(names)?;
        axes.sort_unstable();
        let plan = MarginalPlan::new(self.probs.shape(), &axes);
        let flat = plan.accumulate(self.probs.as_slice().expect("standard layout"));
        let vars = axes.iter().map(|&a| self.variables[a].clone()).collect();
        JointPmf::from_flat(vars, flat)
    }

    /// Joint entropy `H(names)` in bits. The empty set has zero entropy.
    pub fn entropy(&self, names: &[&str]) -> Result<f64> {
        let mut axes = self.axes_for(names)?;
        axes.sort_unstable();
        let plan = MarginalPlan::new(self.probs.shape(), &axes);
        Ok(plan.entropy(self.probs.as_slice().expect("standard layout")))
    }

    /// Mutual information `I(a; b)` in bits.
    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        self.conditional_mutual_information(a, b, &[])
    }

    /// Conditional mutual information `I(a; b | c)` in bits, computed as
    /// `H(a,c) + H(b,c) - H(a,b,c) - H(c)`. Values within rounding dust below
    /// zero are clamped to exactly zero.
    pub fn conditional_mutual_information(
        &self,
        a: &[&str],
        b: &[&str],
        c: &[&str],
    ) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::invalid(
                "mutual information needs non-empty variable groups",
            ));
        }
        let a_axes = self.axes_for(a)?;
        let b_axes = self.axes_for(b)?;
        let c_axes = self.axes_for(c)?;
        for ax in &a_axes {
            if b_axes.contains(ax) || c_axes.contains(ax) {
                return Err(Error::invalid(format!(
                    "variable {} appears in more than one group",
                    self.variables[*ax].name
                )));
            }
        }
        for ax in &b_axes {
            if c_axes.contains(ax) {
                return Err(Error::invalid(format!(
                    "variable {} appears in more than one group",
                    self.variables[*ax].name
                )));
            }
        }
        let plan = CmiPlan::new(self.probs.shape(), &a_axes, &b_axes, &c_axes);
        Ok(plan.eval(self.probs.as_slice().expect("standard layout")))
    }
}

/// Precomputed flat-index map for marginalizing a dense pmf onto a subset of
/// axes. Building the map once and reusing it keeps the optimizer's inner
/// loop free of index arithmetic.
#[derive(Debug, Clone)]
pub(crate) struct MarginalPlan {
    out_len: usize,
    map: Vec<u32>,
}

impl MarginalPlan {
    /// `keep` must be sorted axis indices into `shape`.
    pub(crate) fn new(shape: &[usize], keep: &[usize]) -> Self {
        let total: usize = shape.iter().product();
        debug_assert!(total < u32::MAX as usize);
        let out_len: usize = keep.iter().map(|&a| shape[a]).product::<usize>().max(1);
        let mut map = Vec::with_capacity(total);
        let mut digits = vec![0usize; shape.len()];
        for _ in 0..total {
            let mut out = 0usize;
            for &axis in keep {
                out = out * shape[axis] + digits[axis];
            }
            map.push(out as u32);
            // Row-major odometer increment.
            for axis in (0..shape.len()).rev() {
                digits[axis] += 1;
                if digits[axis] < shape[axis] {
                    break;
                }
                digits[axis] = 0;
            }
        }
        MarginalPlan { out_len, map }
    }

    /// Marginal bucket that full-joint cell `cell` lands in.
    pub(crate) fn bucket(&self, cell: usize) -> usize {
        self.map[cell] as usize
    }

    pub(crate) fn accumulate(&self, flat: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_len];
        for (&p, &idx) in flat.iter().zip(&self.map) {
            out[idx as usize] += p;
        }
        out
    }

    pub(crate) fn entropy(&self, flat: &[f64]) -> f64 {
        let marg = self.accumulate(flat);
        let mut h = 0.0;
        for p in marg {
            if p > 0.0 {
                h -= p * p.log2();
            }
        }
        h
    }
}

/// The four marginal plans behind one conditional mutual information.
#[derive(Debug, Clone)]
pub(crate) struct CmiPlan {
    ac: MarginalPlan,
    bc: MarginalPlan,
    abc: MarginalPlan,
    c: MarginalPlan,
}

impl CmiPlan {
    pub(crate) fn new(shape: &[usize], a: &[usize], b: &[usize], c: &[usize]) -> Self {
        let sorted = |axes: &[&[usize]]| -> Vec<usize> {
            let mut v: Vec<usize> = axes.iter().flat_map(|s| s.iter().copied()).collect();
            v.sort_unstable();
            v
        };
        CmiPlan {
            ac: MarginalPlan::new(shape, &sorted(&[a, c])),
            bc: MarginalPlan::new(shape, &sorted(&[b, c])),
            abc: MarginalPlan::new(shape, &sorted(&[a, b, c])),
            c: MarginalPlan::new(shape, &sorted(&[c])),
        }
    }

    pub(crate) fn eval(&self, flat: &[f64]) -> f64 {
        let value = self.ac.entropy(flat) + self.bc.entropy(flat)
            - self.abc.entropy(flat)
            - self.c.entropy(flat);
        clamp_information(value)
    }
}

/// Clamps rounding dust below zero back to zero; genuinely negative values
/// (beyond the dust threshold) are passed through so bugs stay visible.
pub(crate) fn clamp_information(value: f64) -> f64 {
    if value < 0.0 && value > -CMI_CLAMP {
        0.0
    } else {
        value
    }
}

/// Binary entropy `H_b(p) = -p log2 p - (1-p) log2 (1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "binary entropy argument {p} outside [0, 1]"
        )));
    }
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).log2();
    }
    Ok(h)
}

/// Binary convolution `a * b = a(1-b) + b(1-a)`, the crossover probability of
/// the cascade of two independent binary symmetric flips.
pub fn binary_convolve(a: f64, b: f64) -> Result<f64> {
    for (label, v) in [("first", a), ("second", b)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!(
                "{label} convolution argument {v} outside [0, 1]"
            )));
        }
    }
    Ok(a * (1.0 - b) + b * (1.0 - a))
}
