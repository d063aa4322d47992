//! Per-instance records, classification, revocation, aggregation, exports
//! and the persistent event log.

mod analysis;
mod benchmark;
mod export;
mod record;
mod store;

pub use analysis::{
    summarize, AlgoCriterion, AlgoMetrics, GroupBy, ProgressSummary, SeriesMetric, SeriesPoint, StateSource,
    SuboptimalityPoint, Tracker, TrackingError,
};
pub use benchmark::{Benchmark, BenchmarkError, Scope, ScopeError, ScopeSlice};
pub use export::{import_instance_states, ExportLevel, ExportTable, ImportError, InstanceRow, INSTANCE_COLUMNS};
pub use record::{
    AlgorithmMeta, BatchId, BestLowerBound, BestSolution, BoundConflict, Contribution, HistoryEntry,
    InstanceRecord, InstanceState, RecordError, WrongInstance,
};
pub use store::{BatchInfo, Event, Store, StoreError, Txn, LOG_FORMAT_VERSION};
