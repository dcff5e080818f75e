//! Møller's scaled conjugate gradient. Curvature along the search direction
//! comes from a finite difference of gradients; a Levenberg-style scale `λ`
//! keeps the local quadratic model positive definite.

use alloc::vec;
use alloc::vec::Vec;

use crate::optim::Objective;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScgParams {
    pub sigma: f64,
    pub lambda_init: f64,
}

impl Default for ScgParams {
    fn default() -> Self {
        Self { sigma: 5e-5, lambda_init: 5e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScgState {
    /// Search direction.
    p: Vec<f64>,
    /// Negative gradient at the current point.
    r: Vec<f64>,
    value: f64,
    success: bool,
    lambda: f64,
    lambda_bar: f64,
    delta: f64,
    iteration: usize,
    restart_every: usize,
    sigma: f64,
}

impl ScgState {
    pub fn new(objective: &impl Objective, theta: &[f64], params: &ScgParams) -> Self {
        let mut g = vec![0.0; theta.len()];
        let value = objective.gradient(theta, &mut g);
        let r: Vec<f64> = g.iter().map(|v| -v).collect();
        Self {
            p: r.clone(),
            r,
            value,
            success: true,
            lambda: params.lambda_init,
            lambda_bar: 0.0,
            delta: 0.0,
            iteration: 0,
            restart_every: theta.len().max(1),
            sigma: params.sigma,
        }
    }

    pub fn direction(&self) -> &[f64] {
        &self.p
    }

    /// Negative gradient at the current point.
    pub fn residual(&self) -> &[f64] {
        &self.r
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One iteration. Returns whether `theta` moved.
pub fn scg_step(objective: &impl Objective, theta: &mut [f64], state: &mut ScgState) -> bool {
    state.iteration += 1;
    let mut p_sq = dot(&state.p, &state.p);
    if p_sq == 0.0 {
        return false;
    }
    let mut mu = dot(&state.p, &state.r);
    if mu <= 0.0 {
        // Not a descent direction any more: fall back to steepest descent.
        state.p.clone_from(&state.r);
        p_sq = dot(&state.p, &state.p);
        mu = p_sq;
        state.success = true;
    }
    let n = theta.len();
    let mut scratch = vec![0.0; n];
    if state.success {
        let sigma_k = state.sigma / libm::sqrt(p_sq);
        let probe: Vec<f64> = theta.iter().zip(&state.p).map(|(t, p)| t + sigma_k * p).collect();
        objective.gradient(&probe, &mut scratch);
        // s = (E'(w + σp) - E'(w))/σ with E'(w) = -r.
        state.delta = scratch.iter().zip(&state.r).zip(&state.p).map(|((g, r), p)| (g + r) / sigma_k * p).sum();
    }
    state.delta += (state.lambda - state.lambda_bar) * p_sq;
    if state.delta <= 0.0 {
        state.lambda_bar = 2.0 * (state.lambda - state.delta / p_sq);
        state.delta = -state.delta + state.lambda * p_sq;
        state.lambda = state.lambda_bar;
    }
    let alpha = mu / state.delta;
    let candidate: Vec<f64> = theta.iter().zip(&state.p).map(|(t, p)| t + alpha * p).collect();
    let new_value = objective.gradient(&candidate, &mut scratch);
    let comparison = 2.0 * state.delta * (state.value - new_value) / (mu * mu);
    let moved = comparison >= 0.0 && new_value.is_finite();
    if moved {
        theta.copy_from_slice(&candidate);
        let r_new: Vec<f64> = scratch.iter().map(|g| -g).collect();
        state.lambda_bar = 0.0;
        state.success = true;
        if state.iteration.is_multiple_of(state.restart_every) {
            state.p.clone_from(&r_new);
        } else {
            let beta = (dot(&r_new, &r_new) - dot(&r_new, &state.r)) / mu;
            for (p, r) in state.p.iter_mut().zip(&r_new) {
                *p = r + beta * *p;
            }
        }
        state.r = r_new;
        state.value = new_value;
        if comparison >= 0.75 {
            state.lambda *= 0.25;
        }
    } else {
        state.lambda_bar = state.lambda;
        state.success = false;
    }
    if comparison < 0.25 || !new_value.is_finite() {
        let c = if comparison.is_finite() { comparison } else { 0.0 };
        state.lambda += state.delta * (1.0 - c) / p_sq;
    }
    moved
}
