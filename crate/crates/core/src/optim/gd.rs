//! Fixed-rate steepest descent.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdParams {
    pub learning_rate: f64,
}

impl Default for GdParams {
    fn default() -> Self {
        Self { learning_rate: 0.01 }
    }
}

pub fn gd_step(theta: &mut [f64], grad: &[f64], learning_rate: f64) {
    for (t, g) in theta.iter_mut().zip(grad) {
        *t -= learning_rate * g;
    }
}
