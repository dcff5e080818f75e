//! Bayesian regularization: Levenberg-Marquardt on `F = β·E_D + α·E_W` with
//! the hyperparameters re-estimated from the evidence after every accepted
//! step (`E_D` the residual sum of squares, `E_W` the sum of squared
//! parameters).

use alloc::vec::Vec;

use crate::linalg::{Cholesky, Matrix};
use crate::optim::lm::{damped_solve, LmParams, NormalEquations};
use crate::optim::LeastSquares;
use crate::{Error, Result};

pub const HYPER_MIN: f64 = 1e-12;
pub const HYPER_MAX: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrParams {
    pub alpha_init: f64,
    pub beta_init: f64,
    pub lm: LmParams,
}

impl Default for BrParams {
    fn default() -> Self {
        Self { alpha_init: 0.01, beta_init: 1.0, lm: LmParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrStep {
    pub theta: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// Effective number of parameters.
    pub gamma: f64,
    pub lambda: f64,
    /// `E_D` at the new parameters.
    pub sse: f64,
    /// Regularized objective before and after the step, under the incoming
    /// `(α, β)`.
    pub objective_before: f64,
    pub objective_after: f64,
}

fn energy(theta: &[f64]) -> f64 {
    theta.iter().map(|t| t * t).sum()
}

fn clamp_hyper(v: f64) -> f64 {
    if v.is_nan() {
        HYPER_MAX
    } else {
        v.clamp(HYPER_MIN, HYPER_MAX)
    }
}

/// `γ = P - α·tr((β·JᵀJ + α·I)⁻¹)`, clamped to `[0, P]`.
pub fn effective_parameters(jtj: &Matrix, alpha: f64, beta: f64) -> f64 {
    let p = jtj.rows() as f64;
    let mut h = Matrix::zeros(jtj.rows(), jtj.cols());
    let mut shift = alpha;
    // Round-off can defeat the factorization when α is tiny next to β·JᵀJ;
    // a larger shift then gives an upper bound on the trace term.
    for _ in 0..40 {
        for (dst, &src) in h.as_mut_slice().iter_mut().zip(jtj.as_slice()) {
            *dst = beta * src;
        }
        for i in 0..jtj.rows() {
            h[(i, i)] += shift;
        }
        if let Some(ch) = Cholesky::factor(&h) {
            return (p - alpha * ch.inverse_trace()).clamp(0.0, p);
        }
        shift *= 10.0;
    }
    p
}

/// Damped steps on the regularized objective from one linearization until
/// one lowers it, then the evidence update
/// `α' = γ/(2·E_W)`, `β' = (N - γ)/(2·E_D)`, each clamped to
/// `[1e-12, 1e12]`.
pub fn br_step(
    theta: &[f64],
    ne: &NormalEquations,
    alpha: f64,
    beta: f64,
    mut lambda: f64,
    params: &LmParams,
    mut sse_at: impl FnMut(&[f64]) -> f64,
) -> Result<BrStep> {
    let objective_before = beta * ne.sse + alpha * energy(theta);
    let rhs: Vec<f64> = ne.jtr.iter().zip(theta).map(|(g, t)| beta * g + alpha * t).collect();
    loop {
        if lambda > params.lambda_max {
            return Err(Error::LambdaOverflow);
        }
        let (delta, used) = damped_solve(&ne.jtj, beta, alpha, &rhs, lambda, params)?;
        lambda = used;
        let candidate: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - d).collect();
        let sse = sse_at(&candidate);
        let ew = energy(&candidate);
        let objective_after = beta * sse + alpha * ew;
        if objective_after.is_finite() && objective_after < objective_before {
            let gamma = effective_parameters(&ne.jtj, alpha, beta);
            let n = ne.residual_count as f64;
            return Ok(BrStep {
                theta: candidate,
                alpha: clamp_hyper(gamma / (2.0 * ew)),
                beta: clamp_hyper((n - gamma) / (2.0 * sse)),
                gamma,
                lambda: lambda / params.lambda_decrease,
                sse,
                objective_before,
                objective_after,
            });
        }
        lambda *= params.lambda_increase;
    }
}

/// State carried across BR epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrState {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: Option<f64>,
}

impl BrState {
    pub fn new(params: &BrParams) -> Self {
        Self { alpha: params.alpha_init, beta: params.beta_init, lambda: params.lm.lambda_init, gamma: None }
    }
}

/// One BR epoch on `problem`.
pub fn br_epoch(
    problem: &impl LeastSquares,
    theta: &mut Vec<f64>,
    state: &mut BrState,
    params: &LmParams,
) -> Result<BrStep> {
    let ne = problem.normal_equations(theta);
    let step = br_step(theta, &ne, state.alpha, state.beta, state.lambda, params, |t| problem.sse(t))?;
    theta.clone_from(&step.theta);
    *state = BrState { alpha: step.alpha, beta: step.beta, lambda: step.lambda, gamma: Some(step.gamma) };
    Ok(step)
}
