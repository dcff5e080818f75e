//! Full-batch trainers for [`MlpModel`]: Levenberg-Marquardt, Bayesian
//! regularization, Rprop, scaled conjugate gradient and gradient descent,
//! all driven by [`train`].
//!
//! The training loss is the mean squared residual in normalized output space.
//! Every epoch is checked against the stop conditions in priority order:
//! goal reached, gradient small, early stop, epoch budget.

pub mod br;
pub mod gd;
pub mod lm;
pub mod rprop;
pub mod scg;

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::dataset::{normalization_stats, Dataset};
use crate::mlp::{Batch, MlpModel};
use crate::{rng, Error, Result};

pub use br::{br_step, BrParams};
pub use gd::{gd_step, GdParams};
pub use lm::{lm_step, LmParams, NormalEquations};
pub use rprop::{rp_step, RpParams};
pub use scg::{scg_step, ScgParams};

/// A smooth objective over a flat parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, theta: &[f64]) -> f64;
    /// Writes the gradient into `grad` and returns the value.
    fn gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64;
}

/// A sum-of-squares objective exposing its Gauss-Newton normal equations.
pub trait LeastSquares {
    fn sse(&self, theta: &[f64]) -> f64;
    fn normal_equations(&self, theta: &[f64]) -> NormalEquations;
}

/// The network's training loss on one batch.
pub struct MlpObjective<'a> {
    pub model: &'a MlpModel,
    pub batch: &'a Batch,
}

impl Objective for MlpObjective<'_> {
    fn dim(&self) -> usize {
        self.model.parameter_count()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        self.model.mse_batch(theta, self.batch)
    }

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        self.model.gradient_batch(theta, self.batch, grad)
    }
}

impl LeastSquares for MlpObjective<'_> {
    fn sse(&self, theta: &[f64]) -> f64 {
        self.model.mse_batch(theta, self.batch) * self.batch.residual_count() as f64
    }

    fn normal_equations(&self, theta: &[f64]) -> NormalEquations {
        self.model.normal_equations_batch(theta, self.batch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Lm,
    Br,
    Rp,
    Scg,
    Gd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::Lm, Algorithm::Br, Algorithm::Rp, Algorithm::Scg, Algorithm::Gd];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lm => "lm",
            Algorithm::Br => "br",
            Algorithm::Rp => "rp",
            Algorithm::Scg => "scg",
            Algorithm::Gd => "gd",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

impl core::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlgorithmParams {
    pub lm: LmParams,
    pub br: BrParams,
    pub rp: RpParams,
    pub scg: ScgParams,
    pub gd: GdParams,
}

/// Where the model's input/output normalization comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Min-max statistics of the training data replace the model's maps.
    #[default]
    FitToData,
    /// The model's maps are used as they are.
    KeepModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub max_epochs: usize,
    /// Stop once the training MSE is at or below this value.
    pub goal_mse: f64,
    /// Stop once the MSE gradient norm falls below this value.
    pub min_gradient: f64,
    /// Share of the training rows held out for early stopping.
    pub validation_fraction: f64,
    /// Consecutive epochs without a new best validation MSE before stopping.
    pub patience: usize,
    /// Drives the validation hold-out.
    pub seed: u64,
    pub params: AlgorithmParams,
    pub normalization: Normalization,
}

impl TrainConfig {
    /// Defaults for `algorithm`. BR trains on every row (its regularizer
    /// replaces early stopping); the others hold out 15% for validation.
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            max_epochs: 1000,
            goal_mse: 0.0,
            min_gradient: 1e-7,
            validation_fraction: if algorithm == Algorithm::Br { 0.0 } else { 0.15 },
            patience: 6,
            seed: 0,
            params: AlgorithmParams::default(),
            normalization: Normalization::FitToData,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidConfig("validation_fraction must lie in [0, 1)".into()));
        }
        if self.patience == 0 {
            return Err(Error::InvalidConfig("patience must be at least 1".into()));
        }
        if !(self.goal_mse >= 0.0) {
            return Err(Error::InvalidConfig("goal_mse must be non-negative".into()));
        }
        if !(self.params.gd.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    MaxEpochs,
    GoalReached,
    GradientSmall,
    EarlyStop,
    LambdaOverflow,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::MaxEpochs => "max_epochs",
            StopReason::GoalReached => "goal_reached",
            StopReason::GradientSmall => "gradient_small",
            StopReason::EarlyStop => "early_stop",
            StopReason::LambdaOverflow => "lambda_overflow",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::MaxEpochs, Self::GoalReached, Self::GradientSmall, Self::EarlyStop, Self::LambdaOverflow]
            .into_iter()
            .find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub train_mse: f64,
    pub validation_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub algorithm: Algorithm,
    pub epochs_run: usize,
    /// One entry per completed epoch.
    pub loss_trace: Vec<EpochLoss>,
    pub final_train_mse: f64,
    pub final_validation_mse: Option<f64>,
    pub stop_reason: StopReason,
    /// Seconds spent in the epoch loop.
    pub wall_time: f64,
    /// BR only: effective number of parameters after the last update.
    pub effective_parameters: Option<f64>,
}

/// Monotonic time source for [`train_with_clock`].
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// A clock that never advances; reports carry `wall_time = 0`.
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

pub fn train(model: &MlpModel, data: &Dataset, cfg: &TrainConfig) -> Result<(MlpModel, TrainReport)> {
    train_with_clock(model, data, cfg, &NoClock)
}

enum TrainerState {
    Lm { lambda: f64 },
    Br(br::BrState),
    Rp(rprop::RpState),
    Scg(scg::ScgState),
    Gd,
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// Trains a copy of `model` on `data`. The result depends only on the model
/// (including its seed), the data and `cfg`; only `wall_time` reads the
/// clock.
pub fn train_with_clock(
    model: &MlpModel,
    data: &Dataset,
    cfg: &TrainConfig,
    clock: &dyn Clock,
) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    if data.anchor_count() != model.input_count() {
        return Err(Error::DimensionMismatch { expected: model.input_count(), found: data.anchor_count() });
    }
    if data.is_empty() {
        return Err(Error::DegenerateData("no training rows".into()));
    }
    let mut model = model.clone();
    if cfg.normalization == Normalization::FitToData {
        if data.len() < model.output_count() {
            return Err(Error::DegenerateData("fewer samples than network outputs".into()));
        }
        let (input_norm, output_norm) = normalization_stats(data)?;
        model = model.with_normalization(input_norm, output_norm)?;
    }
    let full = Batch::from_dataset(&model, data)?;

    let n_val = libm::round(cfg.validation_fraction * full.len() as f64) as usize;
    let (train_batch, val_batch) = if n_val == 0 || n_val >= full.len() {
        (full, None)
    } else {
        let mut order: Vec<usize> = (0..full.len()).collect();
        order.shuffle(&mut rng::seeded(cfg.seed));
        let (val, tr) = order.split_at_mut(n_val);
        val.sort_unstable();
        tr.sort_unstable();
        (full.select(tr), Some(full.select(val)))
    };

    let objective = MlpObjective { model: &model, batch: &train_batch };
    let val_mse = |theta: &[f64]| val_batch.as_ref().map(|b| model.mse_batch(theta, b));
    let mut theta = model.params().to_vec();
    let mut grad = vec![0.0; theta.len()];

    let params = &cfg.params;
    let mut state = match cfg.algorithm {
        Algorithm::Lm => TrainerState::Lm { lambda: params.lm.lambda_init },
        Algorithm::Br => TrainerState::Br(br::BrState::new(&params.br)),
        Algorithm::Rp => TrainerState::Rp(rprop::RpState::new(theta.len(), &params.rp)),
        Algorithm::Scg => TrainerState::Scg(scg::ScgState::new(&objective, &theta, &params.scg)),
        Algorithm::Gd => TrainerState::Gd,
    };

    let start = clock.seconds();
    let mut trace = Vec::new();
    let mut best_val = val_mse(&theta);
    let mut best_theta = theta.clone();
    let mut fails = 0;
    let mut train_mse = objective.gradient(&theta, &mut grad);

    let stop = loop {
        if !train_mse.is_finite() {
            return Err(Error::NonFinite(alloc::format!("training MSE after epoch {}", trace.len())));
        }
        if train_mse <= cfg.goal_mse {
            break StopReason::GoalReached;
        }
        if norm(&grad) < cfg.min_gradient {
            break StopReason::GradientSmall;
        }
        if val_batch.is_some() && fails >= cfg.patience {
            break StopReason::EarlyStop;
        }
        if trace.len() >= cfg.max_epochs {
            break StopReason::MaxEpochs;
        }

        let stepped = match &mut state {
            TrainerState::Lm { lambda } => lm::lm_epoch(&objective, &mut theta, lambda, &params.lm).map(|_| ()),
            TrainerState::Br(st) => br::br_epoch(&objective, &mut theta, st, &params.br.lm).map(|_| ()),
            TrainerState::Rp(st) => {
                rprop::rp_step(&mut theta, &grad, st, &params.rp);
                Ok(())
            }
            TrainerState::Scg(st) => {
                scg::scg_step(&objective, &mut theta, st);
                Ok(())
            }
            TrainerState::Gd => {
                gd::gd_step(&mut theta, &grad, params.gd.learning_rate);
                Ok(())
            }
        };
        match stepped {
            Ok(()) => {}
            Err(Error::LambdaOverflow) if !trace.is_empty() => break StopReason::LambdaOverflow,
            Err(e) => return Err(e),
        }

        train_mse = objective.gradient(&theta, &mut grad);
        let v = val_mse(&theta);
        trace.push(EpochLoss { train_mse, validation_mse: v });
        if let (Some(v), Some(best)) = (v, best_val) {
            if v < best {
                best_val = Some(v);
                best_theta.clone_from(&theta);
                fails = 0;
            } else {
                fails += 1;
            }
        }
    };
    let wall_time = (clock.seconds() - start).max(0.0);

    if stop == StopReason::EarlyStop {
        theta = best_theta;
    }
    let final_train_mse = model.mse_batch(&theta, &train_batch);
    let final_validation_mse = val_mse(&theta);
    let effective_parameters = match state {
        TrainerState::Br(st) => st.gamma,
        _ => None,
    };
    model.set_params(&theta)?;
    let report = TrainReport {
        algorithm: cfg.algorithm,
        epochs_run: trace.len(),
        loss_trace: trace,
        final_train_mse,
        final_validation_mse,
        stop_reason: stop,
        wall_time,
        effective_parameters,
    };
    Ok((model, report))
}
