//! Core of the `rssiloc` toolkit: map received-signal-strength readings from
//! fixed anchor nodes to 2D positions with a small feed-forward network.
//!
//! The crate is `no_std` (it needs `alloc`) so the same model code can back
//! firmware-side inference. Everything that touches files, clocks or threads
//! lives in the companion `rssiloc` crate.
//!
//! Module map:
//!
//! - [`mlp`]: the network, its forward pass, gradients and Jacobians.
//! - [`codec`]: the versioned binary model format.
//! - [`optim`]: the five trainers (LM, BR, RP, SCG, GD) behind [`optim::train`].
//! - [`dataset`]: fingerprint matrices, the survey grid, splitting, normalization.
//! - [`channel`]: the synthetic testbed (path loss, anchors, beacon exchange).
//! - [`metrics`]: localization error statistics.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod codec;
pub mod dataset;
mod error;
pub mod linalg;
pub mod metrics;
pub mod mlp;
pub mod optim;
pub mod rng;

pub use channel::{AnchorConfig, ChannelModel, Deployment};
pub use dataset::{Dataset, GridSpec, Sample, SplitSpec};
pub use error::{Error, Result};
pub use metrics::EvalReport;
pub use mlp::{Activation, MinMax, MlpModel, Position, RssiVector};
pub use optim::{Algorithm, StopReason, TrainConfig, TrainReport};
