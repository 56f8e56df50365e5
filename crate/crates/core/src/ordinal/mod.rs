//! Joint-ordinal depth relations: relation matrices, sanitization of
//! predicted matrices, candidate scoring, temperature-softmax aggregation,
//! MEAN and oracle estimates, and a noisy-ordinal simulator.

mod matrix;
mod noise;
mod score;

pub use matrix::{complement, OrdinalMatrix, EQUAL, FARTHER, NEARER};
pub(crate) use matrix::numbered_lines;
pub use noise::{corrupt_ordinals, pairwise_accuracy};
pub use score::{
    aggregate, flat_distance, mean_pose, oracle_select, score, score_samples, softmax_weights, ScoredSamples,
    DEFAULT_EPSILON_MM, TEMPERATURE_GT, TEMPERATURE_PREDICTED,
};
