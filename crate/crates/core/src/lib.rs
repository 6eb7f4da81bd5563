//! A laboratory for evaluating time-series feature attributions against
//! synthetic ground truth.
//!
//! The crate generates binary-classification benchmarks whose
//! class-discriminating feature occupies a known window, trains a small
//! residual 1-D convolutional classifier on them with an exact reverse-mode
//! autodiff engine, explains predictions with gradients, integrated
//! gradients and occlusion, and then scores those explanations two ways:
//!
//! * **perturbation**: degradation scores from most/least-relevant-first
//!   perturbation sequences ([`perturbation`]);
//! * **ground truth**: prevalence-normalized area under the
//!   precision–recall curve against the known feature window
//!   ([`groundtruth`]).
//!
//! [`analysis`] aggregates per-instance results by dataset and class and
//! correlates the two evaluations; [`pipeline`] orchestrates the full
//! experiment grid behind the `attrlab` CLI.
//!
//! ```
//! use attrlab::datagen::{generate_feature, FeatureKind, FeatureSpec};
//!
//! let pulse = generate_feature(&FeatureSpec::new(FeatureKind::Pulse, 2.0, 60))?;
//! assert_eq!(pulse[30], 2.0); // peak amplitude at the window center
//! # Ok::<(), attrlab::Error>(())
//! ```

pub mod analysis;
pub mod attribution;
pub mod datagen;
pub mod error;
pub mod groundtruth;
pub mod net;
pub mod perturbation;
pub mod pipeline;
pub mod seeds;
pub mod tape;
pub mod trainer;

mod floatfmt;
mod kernels;

pub use error::{Error, Result};
