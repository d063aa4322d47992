//! Independent lower bounds, suboptimality ratios, map diameter and
//! benchmark scenario generation.

mod distance;
mod ratio;
mod scengen;

pub use distance::{
    map_diameter, shortest_path_dist, trivial_lower_bound, DistanceError, DistanceField,
    LowerBound, UNREACHABLE,
};
pub use ratio::{suboptimality_ratio, RatioError};
pub use scengen::{
    bucket_count, generate_even_scenario, generate_random_scenario, ScenGenError, PAIRS_PER_BUCKET,
};

/// Reserved algorithm name under which the system's trivial lower bound is
/// recorded.
pub const TRIVIAL_ORACLE: &str = "trivial-oracle";
