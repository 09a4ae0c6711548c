//! Binary modulo-additive relay channel `Y = X ⊕ X_R ⊕ S` with
//! `X ~ cost-constrained`, `X_R ~ cost-constrained`, `S ~ Bern(p_s)`, and the
//! closed-form rates it admits. The channel doubles as the reference fixture
//! for the discrete machinery: its optimum is known exactly.

use ndarray::Array4;

use crate::channel::{CostConstraint, DmChannelSpec};
use crate::error::{Error, Result};
use crate::prob::{binary_convolve, binary_entropy};

/// Parameters of the binary modulo-additive channel. `p` and `p_r` are the
/// input cost budgets (maximum probability of sending a 1), `p_s` the state
/// bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryModuloParams {
    pub p: f64,
    pub p_r: f64,
    pub p_s: f64,
}

impl BinaryModuloParams {
    pub fn new(p: f64, p_r: f64, p_s: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("p_r", p_r), ("p_s", p_s)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::invalid(format!(
                    "{name} = {v} is not a probability in [0, 1]"
                )));
            }
        }
        Ok(BinaryModuloParams { p, p_r, p_s })
    }
}

/// Builds the explicit channel: XOR kernel, state `Bern(p_s)`, Hamming costs
/// on both inputs with budgets `p` and `p_r`, and no conferencing.
pub fn build_channel(params: &BinaryModuloParams) -> Result<DmChannelSpec> {
    let mut kernel = Array4::zeros((2, 2, 2, 2));
    for s in 0..2 {
        for x in 0..2 {
            for xr in 0..2 {
                kernel[[s, x, xr, x ^ xr ^ s]] = 1.0;
            }
        }
    }
    Ok(
        DmChannelSpec::new(vec![1.0 - params.p_s, params.p_s], kernel, 0.0, 0.0)?
            .with_input_cost(CostConstraint::new(vec![0.0, 1.0], params.p)?)?
            .with_relay_cost(CostConstraint::new(vec![0.0, 1.0], params.p_r)?)?,
    )
}

/// Capacity of the channel without conferencing:
/// `min(H_b(p), H_b(p * p_r * p_s) - H_b(p_s))` where `*` is binary
/// convolution. Both inputs sit on their cost boundary.
pub fn capacity_closed_form(params: &BinaryModuloParams) -> Result<f64> {
    let BinaryModuloParams { p, p_r, p_s } = *params;
    let noise = binary_convolve(binary_convolve(p, p_r)?, p_s)?;
    Ok(binary_entropy(p)?.min(binary_entropy(noise)? - binary_entropy(p_s)?))
}

/// Best rate when the relay ignores the state and pins its input to 0:
/// `H_b(p * p_s) - H_b(p_s)`.
pub fn no_state_info_closed_form(params: &BinaryModuloParams) -> Result<f64> {
    let BinaryModuloParams { p, p_s, .. } = *params;
    Ok(binary_entropy(binary_convolve(p, p_s)?)? - binary_entropy(p_s)?)
}

/// The state-cooperation gain: capacity minus the no-state-information rate.
pub fn cooperation_gain_closed_form(params: &BinaryModuloParams) -> Result<f64> {
    Ok(capacity_closed_form(params)? - no_state_info_closed_form(params)?)
}
