//! Resilient backpropagation, Rprop⁻ variant: per-parameter step sizes
//! adapted from gradient sign agreement, no weight backtracking.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpParams {
    pub delta_init: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub increase: f64,
    pub decrease: f64,
}

impl Default for RpParams {
    fn default() -> Self {
        Self { delta_init: 0.07, delta_min: 1e-6, delta_max: 50.0, increase: 1.2, decrease: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpState {
    pub step_sizes: Vec<f64>,
    /// Gradient remembered for the next sign comparison; zeroed after a
    /// sign flip.
    pub prev_grad: Vec<f64>,
}

impl RpState {
    pub fn new(dim: usize, params: &RpParams) -> Self {
        Self { step_sizes: vec![params.delta_init; dim], prev_grad: vec![0.0; dim] }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn rp_step(theta: &mut [f64], grad: &[f64], state: &mut RpState, params: &RpParams) {
    for i in 0..theta.len() {
        let g = grad[i];
        let agreement = g * state.prev_grad[i];
        let delta = &mut state.step_sizes[i];
        if agreement > 0.0 {
            *delta = (*delta * params.increase).min(params.delta_max);
        } else if agreement < 0.0 {
            *delta = (*delta * params.decrease).max(params.delta_min);
            state.prev_grad[i] = 0.0;
            continue;
        }
        theta[i] -= sign(g) * *delta;
        state.prev_grad[i] = g;
    }
}
