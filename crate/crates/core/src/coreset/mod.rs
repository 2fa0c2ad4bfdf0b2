//! Clustering features and the weighted BICO engine.

mod engine;
mod feature;

pub use engine::BicoEngine;
pub use feature::{insertion_error_increment, max_insertable_copies, ClusteringFeature, WeightedPoint};

#[cfg(test)]
mod tests;
