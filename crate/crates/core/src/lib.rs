//! One-pass coresets for k-means on large, high-dimensional point streams.
//!
//! The crate combines a weighted BICO-style clustering-feature engine
//! ([`coreset`]) with best-fit-subspace projection of pieces of the stream
//! ([`linalg`]). Two pipelines are built on top of it:
//!
//! - [`piecy`]: one engine, fed with pieces of `p` points whose intrinsic
//!   dimension was reduced by a truncated SVD.
//! - [`piecy_mr`]: a merge-and-reduce tree of engines where every level
//!   re-projects the weighted coreset of the level below.
//!
//! [`eval`] provides weighted k-means++ and Lloyd iterations to turn a
//! coreset into centers, and [`datagen`] the synthetic instance families
//! used for benchmarking. [`format`] reads and writes point streams.

pub mod coreset;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod format;
pub mod linalg;
pub mod piecy;
pub mod piecy_mr;
pub mod rng;

pub use coreset::{BicoEngine, ClusteringFeature, WeightedPoint};
pub use error::{Error, Result};
pub use linalg::{Matrix, Projector, SvdBackend, SvdTruncation};
pub use eval::{CenterSet, CostSummary, EvalParams};
pub use piecy::{Piecy, PiecyConfig, PipelineOutput, PipelineStats};
pub use piecy_mr::{MrConfig, MrTree, PiecyMr, TreeStats};
