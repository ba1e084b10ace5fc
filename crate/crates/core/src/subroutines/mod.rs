//! The two universal building blocks: realizing any instrument from a von Neumann measurement,
//! and realizing a von Neumann measurement from any non-trivial POVM by generalized cloning.

mod cloning;
mod post;

pub use cloning::{
    chernoff_information, chernoff_log_sum, cloning_error_rate, ml_decode, ml_decode_counts,
    pairwise_min_chernoff, select_cloning_basis, total_variation, ChernoffInfo, CloningBasis,
    CloningErrorRate, ErrorRateMode, DISTINCT_TV, EXACT_TYPE_LIMIT,
};
pub use post::{
    build_measurement_isometry, embed_outcomes, run_post_measurement, Branch,
    MeasurementIsometry, OutcomeEmbedding, ISOMETRY_TOL,
};
