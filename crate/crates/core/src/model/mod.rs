//! Benchmark domain types and their text formats.

mod instance;
mod manifest;
mod map;
mod scenario;

pub use instance::{instance_agents, InstanceError, InstanceId};
pub use manifest::{default_manifest, Domain, DomainManifest, ManifestError, DEFAULT_MANIFEST};
pub use map::{parse_map, Cell, GridMap, MapError};
pub use scenario::{
    parse_scenario, BindError, ScenEntry, ScenKind, Scenario, ScenarioError, ScenarioId,
};

/// Splits text into lines, accepting both LF and CRLF endings.
pub(crate) fn text_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l))
}
