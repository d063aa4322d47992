use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    default_manifest, instance_agents, BindError, Cell, Domain, DomainManifest, GridMap, InstanceId, ManifestError,
    MapError, ScenKind, Scenario, ScenarioError, ScenarioId,
};

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("map {path}: {source}")]
    Map { path: PathBuf, source: MapError },
    #[error("scenario {path}: {source}")]
    Scenario { path: PathBuf, source: ScenarioError },
    #[error("domain manifest: {0}")]
    Manifest(#[from] ManifestError),
    #[error("scenario {scenario}: {source}")]
    Bind { scenario: ScenarioId, source: BindError },
    #[error("scenario {0} references an unloaded map")]
    MissingMap(ScenarioId),
    #[error("scenario {0} loaded twice")]
    DuplicateScenario(ScenarioId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScopeError {
    #[error("a scenario filter requires a map")]
    ScenarioWithoutMap,
    #[error("empty agent range {0}..={1}")]
    EmptyAgentRange(u32, u32),
    #[error("unknown map {0:?}")]
    UnknownMap(String),
    #[error("unknown scenario {0}")]
    UnknownScenario(ScenarioId),
    #[error("scope {0} contains no instances")]
    EmptyScope(String),
}

/// A query scope. Narrower fields require their parents: a scenario needs a
/// map. Unset fields do not filter.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<(ScenKind, u32)>,
    /// Inclusive agent-count range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<(u32, u32)>,
}

impl Scope {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn domain(d: Domain) -> Self {
        Self { domain: Some(d), ..Self::default() }
    }

    pub fn map(name: &str) -> Self {
        Self { map: Some(name.to_string()), ..Self::default() }
    }

    pub fn scenario(id: &ScenarioId) -> Self {
        Self { map: Some(id.map_name.clone()), scenario: Some((id.kind, id.index)), ..Self::default() }
    }

    pub fn with_agents(mut self, lo: u32, hi: u32) -> Self {
        self.agents = Some((lo, hi));
        self
    }

    pub fn scenario_id(&self) -> Option<ScenarioId> {
        let map = self.map.as_ref()?;
        self.scenario.map(|(kind, index)| ScenarioId::new(map.clone(), kind, index))
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(d) = self.domain {
            parts.push(format!("domain={d}"));
        }
        match (self.scenario_id(), &self.map) {
            (Some(s), _) => parts.push(format!("scenario={s}")),
            (None, Some(m)) => parts.push(format!("map={m}")),
            _ => {}
        }
        if let Some((lo, hi)) = self.agents {
            parts.push(format!("agents={lo}..={hi}"));
        }
        if parts.is_empty() {
            f.write_str("all")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

/// One scenario's contribution to a scope: instances with agent counts
/// `lo..=hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopeSlice<'a> {
    pub scenario: &'a ScenarioId,
    pub lo: u32,
    pub hi: u32,
}

impl ScopeSlice<'_> {
    pub fn len(&self) -> u64 {
        u64::from(self.hi - self.lo + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> InstanceId {
        InstanceId::new(self.scenario, self.lo)
    }

    pub fn last(&self) -> InstanceId {
        InstanceId::new(self.scenario, self.hi)
    }
}

/// The loaded benchmark: maps, their scenarios and the domain manifest.
/// Every `(map, scenario, k)` with `1 <= k <= |scenario|` is an instance.
#[derive(Debug, Clone, Default)]
pub struct Benchmark {
    maps: BTreeMap<String, GridMap>,
    scenarios: BTreeMap<ScenarioId, Scenario>,
    manifest: DomainManifest,
}

impl Benchmark {
    pub fn new(manifest: DomainManifest) -> Self {
        Self { maps: BTreeMap::new(), scenarios: BTreeMap::new(), manifest }
    }

    /// Loads `maps/*.map`, `scens/*.scen` and the optional `domains.txt`
    /// manifest (the built-in manifest otherwise). Scenario files are named
    /// `<map>-<kind>-<index>.scen`.
    pub fn load(root: &Path) -> Result<Self, BenchmarkError> {
        let manifest_path = root.join("domains.txt");
        let manifest = if manifest_path.exists() {
            DomainManifest::parse(&read(&manifest_path)?)?
        } else {
            default_manifest()
        };
        let mut bench = Self::new(manifest);
        for path in list(&root.join("maps"), "map")? {
            let name = stem(&path);
            let map = GridMap::parse(&read(&path)?)
                .map_err(|source| BenchmarkError::Map { path: path.clone(), source })?
                .with_name(&name);
            bench.add_map(map);
        }
        for path in list(&root.join("scens"), "scen")? {
            let file = path.file_name().and_then(|f| f.to_str()).unwrap_or_default().to_string();
            let scen = Scenario::parse_named(&file, &read(&path)?)
                .map_err(|source| BenchmarkError::Scenario { path: path.clone(), source })?;
            bench.add_scenario(scen)?;
        }
        Ok(bench)
    }

    pub fn add_map(&mut self, map: GridMap) {
        self.maps.insert(map.name().to_string(), map);
    }

    pub fn add_scenario(&mut self, scen: Scenario) -> Result<(), BenchmarkError> {
        let map = self.maps.get(&scen.id.map_name).ok_or_else(|| BenchmarkError::MissingMap(scen.id.clone()))?;
        scen.bind(map).map_err(|source| BenchmarkError::Bind { scenario: scen.id.clone(), source })?;
        if self.scenarios.contains_key(&scen.id) {
            return Err(BenchmarkError::DuplicateScenario(scen.id));
        }
        self.scenarios.insert(scen.id.clone(), scen);
        Ok(())
    }

    pub fn manifest(&self) -> &DomainManifest {
        &self.manifest
    }

    pub fn maps(&self) -> impl Iterator<Item = &GridMap> {
        self.maps.values()
    }

    pub fn map(&self, name: &str) -> Option<&GridMap> {
        self.maps.get(name)
    }

    pub fn scenario(&self, id: &ScenarioId) -> Option<&Scenario> {
        self.scenarios.get(id)
    }

    pub fn scenarios(&self) -> impl Iterator<Item = &Scenario> {
        self.scenarios.values()
    }

    pub fn scenarios_of<'a>(&'a self, map: &'a str) -> impl Iterator<Item = &'a Scenario> + 'a {
        self.scenarios.values().filter(move |s| s.id.map_name == map)
    }

    pub fn domain_of(&self, map: &str) -> Option<Domain> {
        self.manifest.domain_of(map)
    }

    /// Map and start/goal pairs of an instance, or `None` if it is not part
    /// of the benchmark.
    pub fn instance(&self, id: &InstanceId) -> Option<(&GridMap, Vec<(Cell, Cell)>)> {
        let scen = self.scenarios.get(&id.scenario())?;
        let map = self.maps.get(&id.map_name)?;
        let pairs = instance_agents(scen, id.agents as usize).ok()?;
        Some((map, pairs))
    }

    pub fn contains(&self, id: &InstanceId) -> bool {
        self.scenarios
            .get(&id.scenario())
            .is_some_and(|s| id.agents >= 1 && id.agents as usize <= s.len())
    }

    /// Checks a scope's filters against the loaded benchmark.
    pub fn check_scope(&self, scope: &Scope) -> Result<(), ScopeError> {
        if scope.scenario.is_some() && scope.map.is_none() {
            return Err(ScopeError::ScenarioWithoutMap);
        }
        if let Some((lo, hi)) = scope.agents {
            if lo > hi {
                return Err(ScopeError::EmptyAgentRange(lo, hi));
            }
        }
        if let Some(m) = &scope.map {
            if !self.maps.contains_key(m) {
                return Err(ScopeError::UnknownMap(m.clone()));
            }
        }
        if let Some(id) = scope.scenario_id() {
            if !self.scenarios.contains_key(&id) {
                return Err(ScopeError::UnknownScenario(id));
            }
        }
        Ok(())
    }

    /// The scenario slices making up a scope, in (map, scenario) order.
    /// Fails on an invalid or empty scope.
    pub fn slices(&self, scope: &Scope) -> Result<Vec<ScopeSlice<'_>>, ScopeError> {
        self.check_scope(scope)?;
        let (lo, hi) = scope.agents.unwrap_or((1, u32::MAX));
        let lo = lo.max(1);
        let slices: Vec<ScopeSlice<'_>> = self
            .scenarios
            .iter()
            .filter(|(id, _)| scope.map.as_ref().is_none_or(|m| &id.map_name == m))
            .filter(|(id, _)| scope.scenario.is_none_or(|(k, i)| id.kind == k && id.index == i))
            .filter(|(id, _)| scope.domain.is_none_or(|d| self.domain_of(&id.map_name) == Some(d)))
            .filter_map(|(id, s)| {
                let hi = hi.min(s.len() as u32);
                (lo <= hi).then_some(ScopeSlice { scenario: id, lo, hi })
            })
            .collect();
        if slices.is_empty() {
            return Err(ScopeError::EmptyScope(scope.to_string()));
        }
        Ok(slices)
    }

    pub fn instance_count(&self, scope: &Scope) -> Result<u64, ScopeError> {
        Ok(self.slices(scope)?.iter().map(ScopeSlice::len).sum())
    }
}

fn read(path: &Path) -> Result<String, BenchmarkError> {
    fs::read_to_string(path).map_err(|source| BenchmarkError::Io { path: path.to_path_buf(), source })
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

fn list(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, BenchmarkError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let entries = fs::read_dir(dir).map_err(|source| BenchmarkError::Io { path: dir.to_path_buf(), source })?;
    let mut out = Vec::new();
    for e in entries {
        let path = e.map_err(|source| BenchmarkError::Io { path: dir.to_path_buf(), source })?.path();
        if path.extension().and_then(|x| x.to_str()) == Some(ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
