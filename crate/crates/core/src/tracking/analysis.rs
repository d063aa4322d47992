use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use super::benchmark::{Benchmark, Scope, ScopeError, ScopeSlice};
use super::record::{InstanceRecord, InstanceState};
use super::store::{Store, StoreError};
use crate::bounds::{suboptimality_ratio, DistanceField, TRIVIAL_ORACLE};
use crate::model::{Cell, Domain, InstanceId, ScenarioId};
use crate::{Cost, Scalar};

#[derive(Debug, Error)]
pub enum TrackingError {
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Closed/solved/unknown counts and percentages over one scope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressSummary<T> {
    pub scope: String,
    pub total: u64,
    pub closed: u64,
    pub solved: u64,
    pub unknown: u64,
    pub closed_pct: T,
    pub solved_pct: T,
    pub unknown_pct: T,
}

impl<T: Scalar> ProgressSummary<T> {
    pub fn from_counts(scope: String, total: u64, closed: u64, solved: u64) -> Self {
        let unknown = total - closed - solved;
        Self {
            scope,
            total,
            closed,
            solved,
            unknown,
            closed_pct: T::percent(closed, total),
            solved_pct: T::percent(solved, total),
            unknown_pct: T::percent(unknown, total),
        }
    }
}

/// Where instance states come from when aggregating: the live store or an
/// imported export.
pub trait StateSource {
    /// `(closed, solved)` counts among the slice's instances; the rest are unknown.
    fn tally(&self, slice: &ScopeSlice<'_>) -> (u64, u64);
}

impl StateSource for Store {
    fn tally(&self, slice: &ScopeSlice<'_>) -> (u64, u64) {
        let mut counts = (0, 0);
        for r in self.records_in(slice.first()..=slice.last()) {
            match r.classify() {
                InstanceState::Closed => counts.0 += 1,
                InstanceState::Solved => counts.1 += 1,
                InstanceState::Unknown => {}
            }
        }
        counts
    }
}

impl StateSource for BTreeMap<InstanceId, InstanceState> {
    fn tally(&self, slice: &ScopeSlice<'_>) -> (u64, u64) {
        let mut counts = (0, 0);
        for state in self.range(slice.first()..=slice.last()).map(|(_, s)| s) {
            match state {
                InstanceState::Closed => counts.0 += 1,
                InstanceState::Solved => counts.1 += 1,
                InstanceState::Unknown => {}
            }
        }
        counts
    }
}

/// Exact progress counts over every benchmark instance in `scope`; instances
/// without a record count as unknown.
pub fn summarize<T: Scalar, S: StateSource + ?Sized>(
    bench: &Benchmark,
    scope: &Scope,
    source: &S,
) -> Result<ProgressSummary<T>, ScopeError> {
    let (mut total, mut closed, mut solved) = (0, 0, 0);
    for slice in bench.slices(scope)? {
        let (c, s) = source.tally(&slice);
        total += slice.len();
        closed += c;
        solved += s;
    }
    Ok(ProgressSummary::from_counts(scope.to_string(), total, closed, solved))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Domain,
    Map,
    Scenario,
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "domain" => Ok(GroupBy::Domain),
            "map" => Ok(GroupBy::Map),
            "scenario" => Ok(GroupBy::Scenario),
            _ => Err(format!("unknown grouping {s:?}")),
        }
    }
}

/// Per-algorithm criteria for comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoCriterion {
    Solved,
    Closed,
    BestLb,
    BestSolution,
}

impl AlgoCriterion {
    pub fn holds(self, rec: &InstanceRecord, algorithm: &str) -> bool {
        match self {
            AlgoCriterion::Solved => rec.history.iter().any(|h| h.cost.is_some() && h.algorithm == algorithm),
            AlgoCriterion::Closed => rec.closed_by(algorithm),
            AlgoCriterion::BestLb => rec.holds_best_lb(algorithm),
            AlgoCriterion::BestSolution => rec.holds_best_cost(algorithm),
        }
    }
}

impl FromStr for AlgoCriterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solved" => Ok(AlgoCriterion::Solved),
            "closed" => Ok(AlgoCriterion::Closed),
            "best_lb" => Ok(AlgoCriterion::BestLb),
            "best_solution" => Ok(AlgoCriterion::BestSolution),
            _ => Err(format!("unknown metric {s:?}")),
        }
    }
}

/// Quantity plotted against agent count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeriesMetric {
    State(InstanceState),
    Algorithm(String, AlgoCriterion),
}

impl SeriesMetric {
    fn holds(&self, rec: &InstanceRecord) -> bool {
        match self {
            SeriesMetric::State(s) => rec.classify() == *s,
            SeriesMetric::Algorithm(a, c) => c.holds(rec, a),
        }
    }
}

/// Share of the `instances` at one agent count meeting a metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint<T> {
    pub agents: u32,
    pub instances: u64,
    pub count: u64,
    pub percent: T,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AlgoMetrics {
    pub closed: u64,
    pub solved: u64,
    pub best_lower_bound: u64,
    pub best_solution: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuboptimalityPoint<T> {
    pub agents: u32,
    pub lower_bound: Cost,
    pub cost: Cost,
    pub ratio: T,
    /// The bound is only the trivial one, so `ratio` over-estimates the gap.
    pub trivial_lower_bound: bool,
}

/// A loaded benchmark together with its record store.
#[derive(Debug, Default)]
pub struct Tracker {
    pub benchmark: Benchmark,
    pub store: Store,
}

impl Tracker {
    pub fn new(benchmark: Benchmark, store: Store) -> Self {
        Self { benchmark, store }
    }

    pub fn progress_summary<T: Scalar>(&self, scope: &Scope) -> Result<ProgressSummary<T>, TrackingError> {
        Ok(summarize(&self.benchmark, scope, &self.store)?)
    }

    /// One summary per domain, map or scenario inside `scope`.
    pub fn progress_grouped<T: Scalar>(
        &self,
        scope: &Scope,
        by: GroupBy,
    ) -> Result<Vec<ProgressSummary<T>>, TrackingError> {
        let slices = self.benchmark.slices(scope)?;
        let subs: Vec<Scope> = match by {
            GroupBy::Domain => {
                let present: BTreeSet<Domain> =
                    slices.iter().filter_map(|s| self.benchmark.domain_of(&s.scenario.map_name)).collect();
                present.into_iter().map(|d| Scope { domain: Some(d), ..scope.clone() }).collect()
            }
            GroupBy::Map => {
                let maps: BTreeSet<&str> = slices.iter().map(|s| s.scenario.map_name.as_str()).collect();
                maps.into_iter().map(|m| Scope { map: Some(m.to_string()), ..scope.clone() }).collect()
            }
            GroupBy::Scenario => slices
                .iter()
                .map(|s| Scope {
                    map: Some(s.scenario.map_name.clone()),
                    scenario: Some((s.scenario.kind, s.scenario.index)),
                    ..scope.clone()
                })
                .collect(),
        };
        subs.iter().map(|s| self.progress_summary(s)).collect()
    }

    fn check_algorithm(&self, name: &str) -> Result<(), TrackingError> {
        if self.store.algorithms().contains_key(name) {
            Ok(())
        } else {
            Err(TrackingError::UnknownAlgorithm(name.to_string()))
        }
    }

    /// For each agent count `k`, the share of instances `(map, s, k)` over the
    /// scope's scenarios with at least `k` entries that meet `metric`.
    pub fn series<T: Scalar>(&self, scope: &Scope, metric: &SeriesMetric) -> Result<Vec<SeriesPoint<T>>, TrackingError> {
        if let SeriesMetric::Algorithm(a, _) = metric {
            self.check_algorithm(a)?;
        }
        let slices = self.benchmark.slices(scope)?;
        let mut totals: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
        for slice in &slices {
            for k in slice.lo..=slice.hi {
                totals.entry(k).or_default().0 += 1;
            }
            for r in self.store.records_in(slice.first()..=slice.last()) {
                if metric.holds(r) {
                    totals.entry(r.instance.agents).or_default().1 += 1;
                }
            }
        }
        Ok(totals
            .into_iter()
            .map(|(agents, (instances, count))| SeriesPoint {
                agents,
                instances,
                count,
                percent: T::percent(count, instances),
            })
            .collect())
    }

    pub fn agent_count_series<T: Scalar>(
        &self,
        map: &str,
        metric: &SeriesMetric,
    ) -> Result<Vec<SeriesPoint<T>>, TrackingError> {
        self.series(&Scope::map(map), metric)
    }

    /// Per-algorithm series of one criterion; `algorithms` defaults to every
    /// registered algorithm except the trivial oracle.
    pub fn comparison_series<T: Scalar>(
        &self,
        scope: &Scope,
        criterion: AlgoCriterion,
        algorithms: Option<&[String]>,
    ) -> Result<BTreeMap<String, Vec<SeriesPoint<T>>>, TrackingError> {
        let names = self.algorithm_names(algorithms, false)?;
        let mut out = BTreeMap::new();
        for a in names {
            let s = self.series(scope, &SeriesMetric::Algorithm(a.clone(), criterion))?;
            out.insert(a, s);
        }
        Ok(out)
    }

    fn algorithm_names(&self, requested: Option<&[String]>, include_oracle: bool) -> Result<Vec<String>, TrackingError> {
        match requested {
            Some(list) => {
                for a in list {
                    self.check_algorithm(a)?;
                }
                Ok(list.to_vec())
            }
            None => Ok(self
                .store
                .algorithms()
                .keys()
                .filter(|a| include_oracle || a.as_str() != TRIVIAL_ORACLE)
                .cloned()
                .collect()),
        }
    }

    /// The four counters per registered algorithm over `scope`. The trivial
    /// oracle is listed only on request.
    pub fn algorithm_comparison(
        &self,
        scope: &Scope,
        include_oracle: bool,
    ) -> Result<BTreeMap<String, AlgoMetrics>, TrackingError> {
        let names = self.algorithm_names(None, include_oracle)?;
        let mut out: BTreeMap<String, AlgoMetrics> = names.iter().map(|a| (a.clone(), AlgoMetrics::default())).collect();
        for slice in self.benchmark.slices(scope)? {
            for r in self.store.records_in(slice.first()..=slice.last()) {
                for a in r.solvers() {
                    if let Some(m) = out.get_mut(a) {
                        m.solved += 1;
                    }
                }
                if let Some(b) = &r.best_lb {
                    for a in &b.holders {
                        if let Some(m) = out.get_mut(a) {
                            m.best_lower_bound += 1;
                        }
                    }
                }
                if let Some(b) = &r.best_cost {
                    for a in &b.holders {
                        if let Some(m) = out.get_mut(a) {
                            m.best_solution += 1;
                            if r.closed_by(a) {
                                m.closed += 1;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Suboptimality ratio per agent count for every instance of a scenario
    /// with a solution. Without a recorded lower bound the trivial one is
    /// computed; points resting on it are flagged. A zero lower bound with a
    /// positive cost has no ratio and is left out.
    pub fn suboptimality_series<T: Scalar>(&self, id: &ScenarioId) -> Result<Vec<SuboptimalityPoint<T>>, TrackingError> {
        let scen = self
            .benchmark
            .scenario(id)
            .ok_or_else(|| ScopeError::UnknownScenario(id.clone()))?;
        let map = self.benchmark.map(&id.map_name).ok_or_else(|| ScopeError::UnknownMap(id.map_name.clone()))?;
        let first = InstanceId::new(id, 1);
        let last = InstanceId::new(id, scen.len() as u32);
        let mut prefix: Option<Vec<Option<Cost>>> = None;
        let mut out = Vec::new();
        for r in self.store.records_in(first..=last) {
            let Some(cost) = r.cost() else { continue };
            let (lb, trivial) = match &r.best_lb {
                Some(b) => (b.value, b.holders.len() == 1 && b.holders.contains(TRIVIAL_ORACLE)),
                None => {
                    let sums = prefix.get_or_insert_with(|| trivial_prefix_sums(map, scen.pairs()));
                    match sums.get(r.instance.agents as usize).copied().flatten() {
                        Some(lb) => (lb, true),
                        None => continue,
                    }
                }
            };
            if let Ok(ratio) = suboptimality_ratio::<T>(lb, cost) {
                out.push(SuboptimalityPoint { agents: r.instance.agents, lower_bound: lb, cost, ratio, trivial_lower_bound: trivial });
            }
        }
        Ok(out)
    }
}

/// `sums[k]` is the trivial lower bound of the first `k` pairs, `None` from
/// the first unreachable pair on.
fn trivial_prefix_sums(map: &crate::model::GridMap, pairs: impl Iterator<Item = (Cell, Cell)>) -> Vec<Option<Cost>> {
    let mut fields: HashMap<Cell, Option<DistanceField>> = HashMap::new();
    let mut sums = vec![Some(0)];
    let mut acc = Some(0);
    for (s, g) in pairs {
        let field = fields.entry(g).or_insert_with(|| DistanceField::compute(map, g).ok());
        acc = acc.and_then(|a| field.as_ref().and_then(|f| f.get(s)).map(|d| a + Cost::from(d)));
        sums.push(acc);
    }
    sums
}
