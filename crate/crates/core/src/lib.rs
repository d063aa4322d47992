//! Tracking of best-known lower bounds and solutions for multi-agent path
//! finding benchmarks.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: grid maps, scenarios, instances and the domain manifest.
//! * [`plan`]: plan strings, motion simulation, conflicts and sum-of-costs.
//! * [`bounds`]: breadth-first distances, trivial lower bounds, map
//!   diameter, suboptimality ratios and scenario generation.
//! * [`tracking`]: per-instance records, classification, revocation,
//!   aggregation and the persistent event log.
//! * [`ingest`]: submission CSV parsing and batch ingestion.
//! * [`runner`]: driving external solvers under the benchmark protocol.
//!
//! Ratios and percentages are generic over [`Scalar`]; the aliases below fix
//! the two instantiations used by the service and the tests.

pub mod bounds;
pub mod ingest;
pub mod model;
pub mod num;
pub mod plan;
pub mod runner;
pub mod tracking;

pub use crate::num::Scalar;

/// Sum-of-costs and lower-bound values.
pub type Cost = u64;

/// Exact rational scalar, used where percentages must sum exactly.
pub type ExactRatio = num_rational::Rational64;

pub type ProgressSummaryF64 = tracking::ProgressSummary<f64>;
pub type ExactProgressSummary = tracking::ProgressSummary<ExactRatio>;
pub type SuboptimalityPointF64 = tracking::SuboptimalityPoint<f64>;
pub type SeriesPointF64 = tracking::SeriesPoint<f64>;
