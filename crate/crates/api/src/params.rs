use std::collections::HashMap;
use std::str::FromStr;

use tracker_core::model::{Domain, InstanceId, ScenarioId};
use tracker_core::tracking::Scope;

use crate::ApiError;

/// Raw query parameters; each handler parses what it needs.
pub type Params = HashMap<String, String>;

pub fn parsed<T: FromStr>(p: &Params, key: &'static str) -> Result<Option<T>, ApiError>
where
    T::Err: std::fmt::Display,
{
    match p.get(key).map(|s| s.trim()).filter(|s| !s.is_empty()) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|e| ApiError::bad_request("InvalidParameter", format!("{key}={v:?}: {e}"))),
    }
}

pub fn required<T: FromStr>(p: &Params, key: &'static str) -> Result<T, ApiError>
where
    T::Err: std::fmt::Display,
{
    parsed(p, key)?.ok_or_else(|| ApiError::bad_request("MissingParameter", format!("{key} is required")))
}

/// `domain`, `map`, `scenario` (a label such as `even-1`, requires `map`),
/// `agents_min` and `agents_max`.
pub fn scope(p: &Params) -> Result<Scope, ApiError> {
    let domain: Option<Domain> = parsed(p, "domain")?;
    let map: Option<String> = parsed(p, "map")?;
    let label: Option<String> = parsed(p, "scenario")?;
    let scenario = match (&map, label) {
        (_, None) => None,
        (None, Some(_)) => {
            return Err(ApiError::bad_request("ScenarioWithoutMap", "a scenario filter requires a map"));
        }
        (Some(m), Some(l)) => Some(
            ScenarioId::parse_label(m, &l).map_err(|e| ApiError::bad_request("InvalidParameter", e.to_string()))?,
        ),
    };
    let mut scope = Scope { domain, map, scenario: scenario.map(|s| (s.kind, s.index)), agents: None };
    let lo: Option<u32> = parsed(p, "agents_min")?;
    let hi: Option<u32> = parsed(p, "agents_max")?;
    if lo.is_some() || hi.is_some() {
        scope = scope.with_agents(lo.unwrap_or(1), hi.unwrap_or(u32::MAX));
    }
    Ok(scope)
}

/// `map`, `scenario` and `agents`, all required.
pub fn instance(p: &Params) -> Result<InstanceId, ApiError> {
    let map: String = required(p, "map")?;
    let label: String = required(p, "scenario")?;
    let agents: u32 = required(p, "agents")?;
    let scen = ScenarioId::parse_label(&map, &label).map_err(|e| ApiError::bad_request("InvalidParameter", e.to_string()))?;
    Ok(InstanceId::new(&scen, agents))
}

/// Comma-separated list; `None` when absent or blank.
pub fn list(p: &Params, key: &str) -> Option<Vec<String>> {
    let v = p.get(key)?.trim();
    (!v.is_empty()).then(|| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
}
