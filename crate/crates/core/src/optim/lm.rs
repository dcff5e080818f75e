//! Levenberg-Marquardt: damped Gauss-Newton on the residual sum of squares.

use alloc::vec::Vec;

use crate::linalg::{Cholesky, Matrix};
use crate::optim::LeastSquares;
use crate::{Error, Result};

/// `JᵀJ`, `Jᵀr` and `‖r‖²` at one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquations {
    pub jtj: Matrix,
    pub jtr: Vec<f64>,
    pub sse: f64,
    pub residual_count: usize,
}

impl NormalEquations {
    pub fn from_jacobian(jacobian: &Matrix, residuals: &[f64]) -> Self {
        Self {
            jtj: jacobian.gram(),
            jtr: jacobian.transpose_mul_vec(residuals),
            sse: residuals.iter().map(|r| r * r).sum(),
            residual_count: residuals.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.jtr.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmParams {
    pub lambda_init: f64,
    pub lambda_increase: f64,
    pub lambda_decrease: f64,
    pub lambda_max: f64,
}

impl Default for LmParams {
    fn default() -> Self {
        Self { lambda_init: 1e-3, lambda_increase: 10.0, lambda_decrease: 10.0, lambda_max: 1e10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmStep {
    pub theta: Vec<f64>,
    pub lambda: f64,
    pub accepted: bool,
    /// Sum of squares at the returned `theta`.
    pub sse: f64,
}

/// Solves `(scale·JᵀJ + (shift + λ)I)·δ = rhs`, raising `λ` by the increase
/// factor whenever the matrix fails to factor. Returns `δ` and the `λ` used.
pub(crate) fn damped_solve(
    jtj: &Matrix,
    scale: f64,
    shift: f64,
    rhs: &[f64],
    mut lambda: f64,
    params: &LmParams,
) -> Result<(Vec<f64>, f64)> {
    let n = rhs.len();
    let mut a = Matrix::zeros(n, n);
    loop {
        if lambda > params.lambda_max {
            return Err(Error::SolveFailure);
        }
        for (dst, &src) in a.as_mut_slice().iter_mut().zip(jtj.as_slice()) {
            *dst = scale * src;
        }
        for i in 0..n {
            a[(i, i)] += shift + lambda;
        }
        if let Some(ch) = Cholesky::factor(&a) {
            return Ok((ch.solve(rhs), lambda));
        }
        lambda *= params.lambda_increase;
    }
}

/// One damped attempt: solve `(JᵀJ + λI)δ = Jᵀr`, try `θ - δ`, and accept it
/// only if the sum of squares drops. Accepting divides `λ`, rejecting
/// multiplies it; a rejection that pushes `λ` past its maximum is
/// [`Error::LambdaOverflow`].
pub fn lm_step(
    theta: &[f64],
    ne: &NormalEquations,
    lambda: f64,
    params: &LmParams,
    mut sse_at: impl FnMut(&[f64]) -> f64,
) -> Result<LmStep> {
    if lambda > params.lambda_max {
        return Err(Error::LambdaOverflow);
    }
    let (delta, lambda) = damped_solve(&ne.jtj, 1.0, 0.0, &ne.jtr, lambda, params)?;
    let candidate: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - d).collect();
    let sse = sse_at(&candidate);
    if sse.is_finite() && sse < ne.sse {
        return Ok(LmStep { theta: candidate, lambda: lambda / params.lambda_decrease, accepted: true, sse });
    }
    let lambda = lambda * params.lambda_increase;
    if lambda > params.lambda_max {
        return Err(Error::LambdaOverflow);
    }
    Ok(LmStep { theta: theta.to_vec(), lambda, accepted: false, sse: ne.sse })
}

/// Repeats [`lm_step`] from one linearization until a step is accepted.
/// Returns the new sum of squares.
pub fn lm_epoch(problem: &impl LeastSquares, theta: &mut Vec<f64>, lambda: &mut f64, params: &LmParams) -> Result<f64> {
    let ne = problem.normal_equations(theta);
    loop {
        let step = lm_step(theta, &ne, *lambda, params, |t| problem.sse(t))?;
        *lambda = step.lambda;
        if step.accepted {
            *theta = step.theta;
            return Ok(step.sse);
        }
    }
}
