//! Result plumbing shared by every rate maximization: the achieved rate, a
//! re-evaluable certificate for it, which min-term was binding, and a trace
//! of what the search did.

use ndarray::{Array2, Array3};

use crate::channel::InnerDistribution;
use crate::gaussian::GaussianParams;
pub use crate::opt::OptimizerTrace;

/// Which rate expression a [`RateResult`] maximized. Determines how the
/// certificate is re-evaluated and how the min-terms are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// min of the three general lower-bound terms over factored inputs.
    InnerBound,
    /// min of the two cut-set terms over a joint input pmf.
    Cutset,
    /// min(H(Y|XR,S), I(X,XR;Y)) over product inputs.
    ProductCapacity,
    /// I(X,XR;Y) over a joint input pmf.
    MessageCoop,
    /// min(I(X;Y|XR,V), I(X,XR,V;Y) - I(V;S|XR)) over joint inputs and a
    /// state description.
    StateCoopOnly,
    /// min(H(Y|XR,S), I(X,XR;Y)) over a joint input pmf.
    StateCoopCapacity,
    /// I(X;Y|XR = x_r) over a source pmf and a fixed relay symbol.
    NoStateInfo,
    /// min of the three lower-bound terms under the jointly Gaussian
    /// parameterization.
    GaussianInner,
}

impl Objective {
    /// Human-readable labels of the expression's min-terms, in order.
    pub fn term_labels(&self) -> &'static [&'static str] {
        match self {
            Objective::InnerBound | Objective::GaussianInner => &[
                "I(X;Y|XR,V,U) + c_sr",
                "I(X,XR,V;Y) - I(V;S|XR,U)",
                "I(X,XR,V;Y|U) + c_sr + c_rs - I(V;S|XR,U)",
            ],
            Objective::Cutset => &["I(X,XR;Y)", "I(X;Y|XR,S) + c_sr"],
            Objective::ProductCapacity | Objective::StateCoopCapacity => {
                &["H(Y|XR,S)", "I(X,XR;Y)"]
            }
            Objective::MessageCoop => &["I(X,XR;Y)"],
            Objective::StateCoopOnly => &["I(X;Y|XR,V)", "I(X,XR,V;Y) - I(V;S|XR)"],
            Objective::NoStateInfo => &["I(X;Y|XR=x_r)"],
        }
    }
}

/// The explicit parameter point achieving a reported rate. Feeding it back
/// through the matching evaluator reproduces the rate (within 1e-9).
#[derive(Debug, Clone)]
pub enum Certificate {
    /// Full factored input distribution.
    Inner(InnerDistribution),
    /// Independent source and relay input pmfs.
    ProductInput { p_x: Vec<f64>, p_xr: Vec<f64> },
    /// Joint input pmf, indexed `[x][x_r]`.
    JointInput { p_x_xr: Array2<f64> },
    /// Joint input pmf plus a state description `p(v | s, x_r)`,
    /// indexed `[s][x_r][v]`.
    StateCoop {
        p_x_xr: Array2<f64>,
        p_v_given_s_xr: Array3<f64>,
    },
    /// Source pmf with the relay pinned to one symbol.
    SourceInput { p_x: Vec<f64>, relay_symbol: usize },
    /// Gaussian power-split and compression-noise parameters.
    Gaussian(GaussianParams),
}

/// Outcome of a rate maximization.
#[derive(Debug, Clone)]
pub struct RateResult {
    /// Achieved value in bits per channel use; never negative.
    pub rate: f64,
    /// Which expression was maximized.
    pub objective: Objective,
    /// The achieving parameters.
    pub certificate: Certificate,
    /// Index into `objective.term_labels()` of the minimizing term at the
    /// certificate (first index on ties).
    pub binding_term: usize,
    /// Search statistics.
    pub trace: OptimizerTrace,
    /// Conditions under which the reported value is meaningful but weaker
    /// than claimed (e.g. a capacity formula evaluated outside its regime).
    pub warnings: Vec<String>,
}

impl RateResult {
    pub fn binding_term_label(&self) -> &'static str {
        self.objective.term_labels()[self.binding_term]
    }
}

/// Index of the smallest entry, first on ties.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}
