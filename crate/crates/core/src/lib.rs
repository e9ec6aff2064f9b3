//! Batch-mode active-learning query engine.
//!
//! Samples live in a latent embedding space ([`pool::SamplePool`]). Each
//! iteration, a strategy picks which non-annotated samples to annotate next:
//!
//! * [`scoring`] turns Monte-Carlo prediction stacks into per-sample
//!   uncertainty and implements the cosine set-cover baseline;
//! * [`bsq`] scores candidates by how much more likely they are under the
//!   pool's latent distribution than under the annotated set's;
//! * [`simulate`] runs whole experiments against an oracle that reveals
//!   stored labels, and writes replayable JSON logs;
//! * [`metrics`] holds Dice, mean surface distance and class entropy;
//! * [`ingest`] reads IDX/CSV data, synthesizes pools and fits linear
//!   encoders; [`report`] turns logs into plot-ready tables.
//!
//! ```
//! use alquery::bsq::{bsq_log_ratio, DiagGaussian};
//!
//! let pool = DiagGaussian::new(vec![0.0], vec![1.0])?;
//! let annotated = DiagGaussian::new(vec![-1.0], vec![1.5])?;
//! // z = 1 lies where the annotated set is thin: positive score.
//! let score = bsq_log_ratio(&[1.0], &pool, &annotated)?;
//! assert!((score - 0.553556).abs() < 1e-4);
//! # Ok::<(), alquery::Error>(())
//! ```

pub mod bsq;
mod error;
pub mod ingest;
pub mod metrics;
pub mod pool;
pub mod report;
pub mod scoring;
pub mod seed;
pub mod simulate;

pub use error::{Error, Result};
pub use pool::{create_pool, AnnotationState, HoldoutSplit, Matrix, SamplePool};
