//! Feed-forward network mapping an RSSI vector to a 2D position.
//!
//! Each layer computes `a' = act(a·W + b)` with `W` stored row-major as
//! `fan_in × fan_out`. Inputs are min-max normalized to `[-1, 1]` before the
//! first layer and outputs are mapped back to meters after the last one; both
//! affine maps live inside the model so an exported model is self-contained.
//!
//! The flat parameter vector used by the trainers lists, layer by layer, the
//! row-major weights followed by the biases.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::dataset::Dataset;
use crate::linalg::{accumulate_outer_upper, Matrix};
use crate::optim::lm::NormalEquations;
use crate::rng;
use crate::{Error, Result};

/// A point in the localization plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Position) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        libm::sqrt(dx * dx + dy * dy)
    }
}

/// RSSI readings in dBm, one per anchor in ascending anchor-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct RssiVector(Vec<f64>);

impl RssiVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(alloc::format!("rssi reading {v}")));
        }
        Ok(Self(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for RssiVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn tansig(z: f64) -> f64 {
    libm::tanh(z)
}

pub fn purelin(z: f64) -> f64 {
    z
}

pub fn logsig(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    TanSig,
    PureLin,
    LogSig,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::TanSig => tansig(z),
            Activation::PureLin => purelin(z),
            Activation::LogSig => logsig(z),
        }
    }

    /// Derivative expressed through the activation's own output `a`.
    pub fn derivative_at_output(self, a: f64) -> f64 {
        match self {
            Activation::TanSig => 1.0 - a * a,
            Activation::PureLin => 1.0,
            Activation::LogSig => a * (1.0 - a),
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Activation::TanSig => 0,
            Activation::PureLin => 1,
            Activation::LogSig => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::TanSig),
            1 => Some(Activation::PureLin),
            2 => Some(Activation::LogSig),
            _ => None,
        }
    }
}

/// Per-channel min-max map between raw units and `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    /// Maps `[-1, 1]` onto itself.
    pub const IDENTITY: MinMax = MinMax { min: -1.0, max: 1.0 };

    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::DegenerateData(alloc::format!("normalization range [{min}, {max}] is empty")));
        }
        Ok(Self { min, max })
    }

    pub fn normalize(&self, x: f64) -> f64 {
        2.0 * (x - self.min) / (self.max - self.min) - 1.0
    }

    pub fn denormalize(&self, y: f64) -> f64 {
        (y + 1.0) * 0.5 * (self.max - self.min) + self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<f64>,
    input_norm: Vec<MinMax>,
    output_norm: Vec<MinMax>,
    seed: u64,
}

fn parameter_count_for(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpModel {
    /// Builds a network with weights and biases drawn uniformly from
    /// `±1/√fan_in` (per layer, weights row-major then biases) using the
    /// crate's seeded generator. Normalization starts as the identity on
    /// `[-1, 1]`.
    pub fn new(layer_sizes: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        validate_shape(layer_sizes, activations)?;
        let mut rng = rng::seeded(seed);
        let mut params = Vec::with_capacity(parameter_count_for(layer_sizes));
        for w in layer_sizes.windows(2) {
            let limit = 1.0 / libm::sqrt(w[0] as f64);
            for _ in 0..w[0] * w[1] + w[1] {
                params.push(rng::symmetric(&mut rng, limit));
            }
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            activations: activations.to_vec(),
            params,
            input_norm: vec![MinMax::IDENTITY; layer_sizes[0]],
            output_norm: vec![MinMax::IDENTITY; layer_sizes[layer_sizes.len() - 1]],
            seed,
        })
    }

    /// A localization network: `inputs` anchors, tansig hidden layers of the
    /// given widths and a purelin output pair `(x, y)`.
    pub fn localization(inputs: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(inputs);
        sizes.extend_from_slice(hidden);
        sizes.push(2);
        let mut acts = vec![Activation::TanSig; hidden.len()];
        acts.push(Activation::PureLin);
        Self::new(&sizes, &acts, seed)
    }

    /// Assembles a model from explicit parts, checking every shape invariant.
    pub fn from_parts(
        layer_sizes: Vec<usize>,
        activations: Vec<Activation>,
        params: Vec<f64>,
        input_norm: Vec<MinMax>,
        output_norm: Vec<MinMax>,
        seed: u64,
    ) -> Result<Self> {
        validate_shape(&layer_sizes, &activations)?;
        let expected = parameter_count_for(&layer_sizes);
        if params.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: params.len() });
        }
        let model = Self { layer_sizes, activations, params, input_norm: Vec::new(), output_norm: Vec::new(), seed };
        model.with_normalization(input_norm, output_norm)
    }

    pub fn with_normalization(mut self, input_norm: Vec<MinMax>, output_norm: Vec<MinMax>) -> Result<Self> {
        if input_norm.len() != self.input_count() {
            return Err(Error::DimensionMismatch { expected: self.input_count(), found: input_norm.len() });
        }
        if output_norm.len() != self.output_count() {
            return Err(Error::DimensionMismatch { expected: self.output_count(), found: output_norm.len() });
        }
        for n in input_norm.iter().chain(&output_norm) {
            MinMax::new(n.min, n.max)?;
        }
        self.input_norm = input_norm;
        self.output_norm = output_norm;
        Ok(self)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_count(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_count(&self) -> usize {
        self.layer_sizes[self.layer_sizes.len() - 1]
    }

    /// Number of weight layers.
    pub fn depth(&self) -> usize {
        self.activations.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::DimensionMismatch { expected: self.params.len(), found: params.len() });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn input_norm(&self) -> &[MinMax] {
        &self.input_norm
    }

    pub fn output_norm(&self) -> &[MinMax] {
        &self.output_norm
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn layer_offset(&self, k: usize) -> usize {
        parameter_count_for(&self.layer_sizes[..=k])
    }

    /// Row-major `fan_in × fan_out` weights of layer `k`.
    pub fn weights(&self, k: usize) -> &[f64] {
        let start = self.layer_offset(k);
        &self.params[start..start + self.layer_sizes[k] * self.layer_sizes[k + 1]]
    }

    pub fn weights_mut(&mut self, k: usize) -> &mut [f64] {
        let start = self.layer_offset(k);
        let len = self.layer_sizes[k] * self.layer_sizes[k + 1];
        &mut self.params[start..start + len]
    }

    pub fn biases(&self, k: usize) -> &[f64] {
        let start = self.layer_offset(k) + self.layer_sizes[k] * self.layer_sizes[k + 1];
        &self.params[start..start + self.layer_sizes[k + 1]]
    }

    pub fn biases_mut(&mut self, k: usize) -> &mut [f64] {
        let start = self.layer_offset(k) + self.layer_sizes[k] * self.layer_sizes[k + 1];
        let len = self.layer_sizes[k + 1];
        &mut self.params[start..start + len]
    }

    /// Sum of squared parameters.
    pub fn weight_energy(&self) -> f64 {
        self.params.iter().map(|p| p * p).sum()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_count() {
            return Err(Error::DimensionMismatch { expected: self.input_count(), found: len });
        }
        Ok(())
    }

    pub fn normalize_input(&self, raw: &[f64], out: &mut [f64]) {
        for ((o, &r), n) in out.iter_mut().zip(raw).zip(&self.input_norm) {
            *o = n.normalize(r);
        }
    }

    /// Output in raw units (meters for localization models).
    pub fn predict(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        self.check_input(inputs.len())?;
        let mut ws = Workspace::new(self);
        let mut x = vec![0.0; inputs.len()];
        self.normalize_input(inputs, &mut x);
        let out = self.forward_normalized(&self.params, &x, &mut ws);
        Ok(out.iter().zip(&self.output_norm).map(|(&y, n)| n.denormalize(y)).collect())
    }

    /// Estimated position for one RSSI vector.
    pub fn forward(&self, rssi: &[f64]) -> Result<Position> {
        if self.output_count() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: self.output_count() });
        }
        let out = self.predict(rssi)?;
        Ok(Position::new(out[0], out[1]))
    }

    /// Forward pass in normalized space with an explicit parameter vector.
    /// Returns the last layer's activations.
    pub fn forward_normalized<'w>(&self, params: &[f64], x: &[f64], ws: &'w mut Workspace) -> &'w [f64] {
        ws.acts[0].copy_from_slice(x);
        let mut offset = 0;
        for k in 0..self.depth() {
            let (fi, fo) = (self.layer_sizes[k], self.layer_sizes[k + 1]);
            let w = &params[offset..offset + fi * fo];
            let b = &params[offset + fi * fo..offset + fi * fo + fo];
            offset += fi * fo + fo;
            let (head, tail) = ws.acts.split_at_mut(k + 1);
            let (input, out) = (&head[k], &mut tail[0]);
            out.copy_from_slice(b);
            for (i, &a) in input.iter().enumerate() {
                for (o, &wij) in out.iter_mut().zip(&w[i * fo..(i + 1) * fo]) {
                    *o += a * wij;
                }
            }
            let act = self.activations[k];
            for o in out.iter_mut() {
                *o = act.apply(*o);
            }
        }
        &ws.acts[self.depth()]
    }

    /// Reverse accumulation from `ws` (filled by the last forward pass).
    /// `ws.delta[depth]` must hold ∂L/∂a at the output; gradients are added
    /// into `grad`.
    fn backward(&self, params: &[f64], ws: &mut Workspace, grad: &mut [f64]) {
        let depth = self.depth();
        let mut offset = params.len();
        for k in (0..depth).rev() {
            let (fi, fo) = (self.layer_sizes[k], self.layer_sizes[k + 1]);
            offset -= fi * fo + fo;
            let act = self.activations[k];
            // ∂L/∂z for this layer's outputs.
            for (d, &a) in ws.delta[k + 1].iter_mut().zip(&ws.acts[k + 1]) {
                *d *= act.derivative_at_output(a);
            }
            let (dlo, dhi) = ws.delta.split_at_mut(k + 1);
            let dz = &dhi[0];
            let input = &ws.acts[k];
            let gw = &mut grad[offset..offset + fi * fo + fo];
            for (i, &a) in input.iter().enumerate() {
                if a != 0.0 {
                    for (g, &d) in gw[i * fo..(i + 1) * fo].iter_mut().zip(dz) {
                        *g += a * d;
                    }
                }
            }
            for (g, &d) in gw[fi * fo..].iter_mut().zip(dz) {
                *g += d;
            }
            if k > 0 {
                let w = &params[offset..offset + fi * fo];
                for (i, dprev) in dlo[k].iter_mut().enumerate() {
                    let row = &w[i * fo..(i + 1) * fo];
                    *dprev = row.iter().zip(dz).map(|(wij, d)| wij * d).sum();
                }
            }
        }
    }

    /// Mean over samples and outputs of the squared normalized residual.
    pub fn mse_batch(&self, params: &[f64], batch: &Batch) -> f64 {
        self.check_batch(batch);
        let mut ws = Workspace::new(self);
        let mut sse = 0.0;
        for s in 0..batch.len() {
            let y = self.forward_normalized(params, batch.input(s), &mut ws);
            for (a, t) in y.iter().zip(batch.target(s)) {
                sse += (a - t) * (a - t);
            }
        }
        sse / batch.residual_count() as f64
    }

    /// Writes ∂MSE/∂θ into `grad` and returns the MSE.
    pub fn gradient_batch(&self, params: &[f64], batch: &Batch, grad: &mut [f64]) -> f64 {
        self.check_batch(batch);
        assert_eq!(grad.len(), params.len());
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 2.0 / batch.residual_count() as f64;
        let mut ws = Workspace::new(self);
        let mut sse = 0.0;
        let depth = self.depth();
        for s in 0..batch.len() {
            self.forward_normalized(params, batch.input(s), &mut ws);
            let (acts, delta) = (&ws.acts[depth], &mut ws.delta[depth]);
            for ((d, &a), &t) in delta.iter_mut().zip(acts).zip(batch.target(s)) {
                let r = a - t;
                sse += r * r;
                *d = scale * r;
            }
            self.backward(params, &mut ws, grad);
        }
        sse / batch.residual_count() as f64
    }

    /// Jacobian of the residuals `output - target` (sample-major, then output
    /// coordinate) with respect to `params`, and the residual vector.
    pub fn jacobian_batch(&self, params: &[f64], batch: &Batch) -> (Matrix, Vec<f64>) {
        self.check_batch(batch);
        let outs = self.output_count();
        let mut jac = Matrix::zeros(batch.residual_count(), params.len());
        let mut residuals = Vec::with_capacity(batch.residual_count());
        let mut ws = Workspace::new(self);
        for s in 0..batch.len() {
            let y = self.forward_normalized(params, batch.input(s), &mut ws);
            residuals.extend(y.iter().zip(batch.target(s)).map(|(a, t)| a - t));
            for o in 0..outs {
                ws.seed_output(o);
                self.backward(params, &mut ws, jac.row_mut(s * outs + o));
            }
        }
        (jac, residuals)
    }

    /// Accumulates `JᵀJ`, `Jᵀr` and the residual sum of squares without
    /// materializing the Jacobian.
    pub fn normal_equations_batch(&self, params: &[f64], batch: &Batch) -> NormalEquations {
        self.check_batch(batch);
        let n = params.len();
        let outs = self.output_count();
        let mut jtj = Matrix::zeros(n, n);
        let mut jtr = vec![0.0; n];
        let mut sse = 0.0;
        let mut row = vec![0.0; n];
        let mut ws = Workspace::new(self);
        let mut residual = vec![0.0; outs];
        for s in 0..batch.len() {
            let y = self.forward_normalized(params, batch.input(s), &mut ws);
            for ((r, &a), &t) in residual.iter_mut().zip(y).zip(batch.target(s)) {
                *r = a - t;
                sse += *r * *r;
            }
            for o in 0..outs {
                row.iter_mut().for_each(|v| *v = 0.0);
                ws.seed_output(o);
                self.backward(params, &mut ws, &mut row);
                accumulate_outer_upper(&mut jtj, &row);
                for (g, &j) in jtr.iter_mut().zip(&row) {
                    *g += j * residual[o];
                }
            }
        }
        jtj.mirror_upper();
        NormalEquations { jtj, jtr, sse, residual_count: batch.residual_count() }
    }

    fn check_batch(&self, batch: &Batch) {
        assert_eq!(batch.input_dim, self.input_count(), "batch input width");
        assert_eq!(batch.output_dim, self.output_count(), "batch output width");
    }

    /// `(∂MSE/∂θ, MSE)` over a dataset, in normalized output space.
    pub fn gradient(&self, data: &Dataset) -> Result<(Vec<f64>, f64)> {
        let batch = Batch::from_dataset(self, data)?;
        let mut grad = vec![0.0; self.params.len()];
        let mse = self.gradient_batch(&self.params, &batch, &mut grad);
        Ok((grad, mse))
    }

    /// Residual Jacobian over a dataset (rows: sample-major, then x/y).
    pub fn jacobian(&self, data: &Dataset) -> Result<Matrix> {
        let batch = Batch::from_dataset(self, data)?;
        Ok(self.jacobian_batch(&self.params, &batch).0)
    }
}

fn validate_shape(layer_sizes: &[usize], activations: &[Activation]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidConfig("a network needs at least an input and an output layer".into()));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::InvalidConfig("layer sizes must be positive".into()));
    }
    if activations.len() != layer_sizes.len() - 1 {
        return Err(Error::DimensionMismatch { expected: layer_sizes.len() - 1, found: activations.len() });
    }
    Ok(())
}

/// Reusable per-layer buffers for forward and backward passes.
#[derive(Debug, Clone)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Workspace {
    pub fn new(model: &MlpModel) -> Self {
        let acts: Vec<Vec<f64>> = model.layer_sizes.iter().map(|&n| vec![0.0; n]).collect();
        Self { delta: acts.clone(), acts }
    }

    fn seed_output(&mut self, o: usize) {
        let last = self.delta.len() - 1;
        self.delta[last].iter_mut().enumerate().for_each(|(j, d)| *d = if j == o { 1.0 } else { 0.0 });
    }
}

/// Normalized training rows, laid out contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    input_dim: usize,
    output_dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl Batch {
    /// Panics if the buffers are not whole rows or hold different row counts.
    pub fn new(input_dim: usize, output_dim: usize, inputs: Vec<f64>, targets: Vec<f64>) -> Self {
        assert!(input_dim > 0 && output_dim > 0);
        assert_eq!(inputs.len() % input_dim, 0);
        assert_eq!(targets.len() % output_dim, 0);
        assert_eq!(inputs.len() / input_dim, targets.len() / output_dim);
        Self { input_dim, output_dim, inputs, targets }
    }

    /// Normalizes a dataset's RSSI columns and targets with the model's maps.
    pub fn from_dataset(model: &MlpModel, data: &Dataset) -> Result<Self> {
        if data.anchor_count() != model.input_count() {
            return Err(Error::DimensionMismatch { expected: model.input_count(), found: data.anchor_count() });
        }
        if model.output_count() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: model.output_count() });
        }
        let n_in = model.input_count();
        let mut inputs = vec![0.0; data.len() * n_in];
        let mut targets = Vec::with_capacity(data.len() * 2);
        for (row, chunk) in data.rows().iter().zip(inputs.chunks_mut(n_in)) {
            model.normalize_input(&row.rssi, chunk);
            targets.push(model.output_norm[0].normalize(row.target.x));
            targets.push(model.output_norm[1].normalize(row.target.y));
        }
        Ok(Self::new(n_in, 2, inputs, targets))
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.input_dim
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn residual_count(&self) -> usize {
        self.targets.len()
    }

    pub fn input(&self, s: usize) -> &[f64] {
        &self.inputs[s * self.input_dim..(s + 1) * self.input_dim]
    }

    pub fn target(&self, s: usize) -> &[f64] {
        &self.targets[s * self.output_dim..(s + 1) * self.output_dim]
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Batch {
        let mut inputs = Vec::with_capacity(indices.len() * self.input_dim);
        let mut targets = Vec::with_capacity(indices.len() * self.output_dim);
        for &i in indices {
            inputs.extend_from_slice(self.input(i));
            targets.extend_from_slice(self.target(i));
        }
        Batch::new(self.input_dim, self.output_dim, inputs, targets)
    }
}
