//! Streaming champion-challenger AutoML core.
//!
//! Tunes the feature-interaction and learning-rate configuration of a hashed
//! online linear regressor while serving predictions, under a hard budget of
//! `b` simultaneously live models and no model persistence. The pieces:
//!
//! - [`learner`]: the base online learner — a hashed-weight linear regressor
//!   trained by online gradient descent, with namespace-interaction crossing.
//! - [`bounds`]: progressive-validation loss tracking (clipped-MAE proxy),
//!   the confidence radius, and the promotion/elimination tests.
//! - [`oracle`]: challenger generation from a champion (one additional
//!   pairwise interaction, learning-rate perturbation).
//! - [`scheduler`]: doubling resource leases, median-based eviction, and
//!   starvation-free admission of challengers into the live pool.
//! - [`engine`]: the per-example loop tying it all together.
//!
//! The crate is `no_std` (alloc required); IO, file formats and the CLI live
//! in the companion `chacha-cli` crate.

#![no_std]

extern crate alloc;

pub mod bounds;
pub mod config;
pub mod engine;
pub mod example;
pub mod learner;
pub mod oracle;
pub mod scheduler;

pub use bounds::{BoundParams, Bounds, LabelRange, LossAccumulator};
pub use config::{Config, ConfigError, ConfigId, InteractionPair};
pub use engine::{Engine, EngineError, EngineMode, EngineParams, StepRecord};
pub use example::{Example, Feature, Namespace};
pub use learner::{DimensionTracker, LearnerError, LearnerModel};
pub use oracle::{OracleParams, TuningTask};
pub use scheduler::{ChallengerRecord, SchedulerParams};
