use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use super::analysis::{summarize, ProgressSummary, TrackingError, Tracker};
use super::benchmark::{Scope, ScopeSlice};
use super::record::{InstanceRecord, InstanceState};
use crate::model::{Domain, InstanceId, ScenarioId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportLevel {
    Instance,
    Scenario,
    Map,
    Domain,
}

impl FromStr for ExportLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "instance" => Ok(ExportLevel::Instance),
            "scenario" => Ok(ExportLevel::Scenario),
            "map" => Ok(ExportLevel::Map),
            "domain" => Ok(ExportLevel::Domain),
            _ => Err(format!("unknown export level {s:?}")),
        }
    }
}

pub const INSTANCE_COLUMNS: [&str; 10] = [
    "map_name",
    "scenario",
    "agents",
    "domain",
    "lower_bound",
    "solution_cost",
    "state",
    "lb_holders",
    "cost_holders",
    "plan_batch",
];
const SUMMARY_COLUMNS: [&str; 7] = ["total", "closed", "solved", "unknown", "closed_pct", "solved_pct", "unknown_pct"];

/// A table with a fixed column order per level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportTable {
    pub level: ExportLevel,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ExportTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are utf-8")
    }
}

/// One instance as listed and exported; instances without a record are unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceRow {
    pub instance: InstanceId,
    pub domain: Option<Domain>,
    pub lower_bound: Option<u64>,
    pub solution_cost: Option<u64>,
    pub state: InstanceState,
    pub lb_holders: BTreeSet<String>,
    pub cost_holders: BTreeSet<String>,
    pub plan_batch: Option<String>,
}

impl InstanceRow {
    fn new(instance: InstanceId, domain: Option<Domain>, rec: Option<&InstanceRecord>) -> Self {
        let lb = rec.and_then(|r| r.best_lb.as_ref());
        let cost = rec.and_then(|r| r.best_cost.as_ref());
        Self {
            instance,
            domain,
            lower_bound: lb.map(|b| b.value),
            solution_cost: cost.map(|b| b.value),
            state: rec.map_or(InstanceState::Unknown, InstanceRecord::classify),
            lb_holders: lb.map(|b| b.holders.clone()).unwrap_or_default(),
            cost_holders: cost.map(|b| b.holders.clone()).unwrap_or_default(),
            plan_batch: cost.map(|b| b.plan_batch.0.clone()),
        }
    }

    fn to_fields(&self) -> Vec<String> {
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join("|");
        vec![
            self.instance.map_name.clone(),
            format!("{}-{}", self.instance.scen_kind, self.instance.scen_index),
            self.instance.agents.to_string(),
            self.domain.map(|d| d.to_string()).unwrap_or_default(),
            opt(self.lower_bound),
            opt(self.solution_cost),
            self.state.as_str().to_string(),
            join(&self.lb_holders),
            join(&self.cost_holders),
            self.plan_batch.clone().unwrap_or_default(),
        ]
    }
}

fn summary_fields(s: &ProgressSummary<f64>) -> Vec<String> {
    vec![
        s.total.to_string(),
        s.closed.to_string(),
        s.solved.to_string(),
        s.unknown.to_string(),
        format!("{:.4}", s.closed_pct),
        format!("{:.4}", s.solved_pct),
        format!("{:.4}", s.unknown_pct),
    ]
}

fn header(prefix: &[&str], rest: &[&str]) -> Vec<String> {
    prefix.iter().chain(rest).map(|s| s.to_string()).collect()
}

impl Tracker {
    /// Instance rows of a scope in (map, scenario, agents) order, skipping
    /// `offset` rows and returning at most `limit`, plus the total row count.
    pub fn instance_rows(
        &self,
        scope: &Scope,
        offset: u64,
        limit: Option<u64>,
    ) -> Result<(u64, Vec<InstanceRow>), TrackingError> {
        let slices = self.benchmark.slices(scope)?;
        let total: u64 = slices.iter().map(ScopeSlice::len).sum();
        let mut skip = offset;
        let mut remaining = limit.unwrap_or(u64::MAX);
        let mut rows = Vec::new();
        for slice in &slices {
            if remaining == 0 {
                break;
            }
            if skip >= slice.len() {
                skip -= slice.len();
                continue;
            }
            let lo = slice.lo + skip as u32;
            skip = 0;
            let hi = u64::from(slice.hi).min(u64::from(lo).saturating_add(remaining - 1)) as u32;
            let first = InstanceId::new(slice.scenario, lo);
            let last = InstanceId::new(slice.scenario, hi);
            let recs: BTreeMap<u32, &InstanceRecord> =
                self.store.records_in(first..=last).map(|r| (r.instance.agents, r)).collect();
            let domain = self.benchmark.domain_of(&slice.scenario.map_name);
            for k in lo..=hi {
                rows.push(InstanceRow::new(InstanceId::new(slice.scenario, k), domain, recs.get(&k).copied()));
            }
            remaining -= u64::from(hi - lo + 1);
        }
        Ok((total, rows))
    }

    /// Results of a scope at one aggregation level.
    pub fn export_results(&self, scope: &Scope, level: ExportLevel) -> Result<ExportTable, TrackingError> {
        let bench = &self.benchmark;
        let slices = bench.slices(scope)?;
        let (header, rows) = match level {
            ExportLevel::Instance => {
                let (_, rows) = self.instance_rows(scope, 0, None)?;
                (header(&INSTANCE_COLUMNS, &[]), rows.iter().map(InstanceRow::to_fields).collect())
            }
            ExportLevel::Scenario => {
                let mut rows = Vec::new();
                for s in &slices {
                    let sub = Scope { map: Some(s.scenario.map_name.clone()), scenario: Some((s.scenario.kind, s.scenario.index)), ..scope.clone() };
                    let summary: ProgressSummary<f64> = summarize(bench, &sub, &self.store)?;
                    let domain = bench.domain_of(&s.scenario.map_name).map(|d| d.to_string()).unwrap_or_default();
                    let mut row = vec![s.scenario.map_name.clone(), s.scenario.label(), domain];
                    row.extend(summary_fields(&summary));
                    rows.push(row);
                }
                (header(&["map_name", "scenario", "domain"], &SUMMARY_COLUMNS), rows)
            }
            ExportLevel::Map => {
                let maps: BTreeSet<&str> = slices.iter().map(|s| s.scenario.map_name.as_str()).collect();
                let mut rows = Vec::new();
                for m in maps {
                    let sub = Scope { map: Some(m.to_string()), ..scope.clone() };
                    let summary: ProgressSummary<f64> = summarize(bench, &sub, &self.store)?;
                    let domain = bench.domain_of(m).map(|d| d.to_string()).unwrap_or_default();
                    let mut row = vec![m.to_string(), domain];
                    row.extend(summary_fields(&summary));
                    rows.push(row);
                }
                (header(&["map_name", "domain"], &SUMMARY_COLUMNS), rows)
            }
            ExportLevel::Domain => {
                let mut maps: BTreeMap<Domain, BTreeSet<&str>> = BTreeMap::new();
                for s in &slices {
                    if let Some(d) = bench.domain_of(&s.scenario.map_name) {
                        maps.entry(d).or_default().insert(&s.scenario.map_name);
                    }
                }
                let mut rows = Vec::new();
                for (d, members) in maps {
                    let sub = Scope { domain: Some(d), ..scope.clone() };
                    let summary: ProgressSummary<f64> = summarize(bench, &sub, &self.store)?;
                    let mut row = vec![d.to_string(), members.len().to_string()];
                    row.extend(summary_fields(&summary));
                    rows.push(row);
                }
                (header(&["domain", "maps"], &SUMMARY_COLUMNS), rows)
            }
        };
        Ok(ExportTable { level, header, rows })
    }
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header does not match the instance export columns")]
    Header,
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
}

/// Reads the instance states back from an instance-level export.
pub fn import_instance_states(text: &str) -> Result<BTreeMap<InstanceId, InstanceState>, ImportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    if r.headers()?.iter().ne(INSTANCE_COLUMNS.iter().copied()) {
        return Err(ImportError::Header);
    }
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let bad = |reason: String| ImportError::Row { row, reason };
        let scen = ScenarioId::parse_label(&rec[0], &rec[1]).map_err(|e| bad(e.to_string()))?;
        let agents: u32 = rec[2].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
        let state: InstanceState = rec[6].parse().map_err(bad)?;
        out.insert(InstanceId::new(&scen, agents), state);
    }
    Ok(out)
}
