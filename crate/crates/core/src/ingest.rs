//! Submission batches: CSV parsing, descriptor handling, validation and
//! atomic application to the record store.

use std::collections::HashSet;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bounds::{trivial_lower_bound, TRIVIAL_ORACLE};
use crate::model::{InstanceId, ScenarioId};
use crate::plan::{validate_plan_set, PlanSet};
use crate::tracking::{AlgorithmMeta, BatchId, BoundConflict, Contribution, StoreError, Tracker, Txn};
use crate::Cost;

/// Exact header of a submission CSV.
pub const CSV_HEADER: [&str; 6] = ["map_name", "scenario", "agents", "lower_bound", "solution_cost", "plan"];

#[derive(Debug, Error)]
pub enum SubmissionError {
    #[error("missing or wrong header, expected {}", CSV_HEADER.join(","))]
    MissingHeader,
    #[error("row {row}: expected {} columns, found {found}", CSV_HEADER.len())]
    ColumnCountMismatch { row: usize, found: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("descriptor: {0}")]
    Descriptor(#[from] toml::de::Error),
    #[error("descriptor field {0:?} must be non-empty")]
    EmptyDescriptorField(&'static str),
}

/// Sidecar metadata of a batch, as TOML with keys `algorithm`, `authors`,
/// `references` and `repository`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchDescriptor {
    pub algorithm: String,
    pub authors: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub references: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repository: Option<String>,
}

impl BatchDescriptor {
    pub fn parse(text: &str) -> Result<Self, SubmissionError> {
        let d: Self = toml::from_str(text)?;
        if d.algorithm.trim().is_empty() {
            return Err(SubmissionError::EmptyDescriptorField("algorithm"));
        }
        if d.authors.trim().is_empty() {
            return Err(SubmissionError::EmptyDescriptorField("authors"));
        }
        Ok(d)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("descriptor serializes")
    }

    pub fn meta(&self) -> AlgorithmMeta {
        AlgorithmMeta {
            name: self.algorithm.trim().to_string(),
            authors: self.authors.clone(),
            references: self.references.clone(),
            repository: self.repository.clone(),
        }
    }
}

/// One CSV data row as raw fields; `row` counts data rows from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRow {
    pub row: usize,
    pub fields: Vec<String>,
}

/// Parses a submission CSV into raw rows in file order.
pub fn parse_submission_csv(text: &str) -> Result<Vec<RawRow>, SubmissionError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = r.records();
    let header = records.next().ok_or(SubmissionError::MissingHeader)??;
    if header.iter().map(str::trim).ne(CSV_HEADER.iter().copied()) {
        return Err(SubmissionError::MissingHeader);
    }
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        if rec.len() != CSV_HEADER.len() {
            return Err(SubmissionError::ColumnCountMismatch { row: i + 1, found: rec.len() });
        }
        rows.push(RawRow { row: i + 1, fields: rec.iter().map(str::to_string).collect() });
    }
    Ok(rows)
}

/// A parsed batch: descriptor plus rows, identified by a hash of both files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawBatchFile {
    pub batch_id: BatchId,
    pub descriptor: BatchDescriptor,
    pub rows: Vec<RawRow>,
}

impl RawBatchFile {
    pub fn parse(descriptor: &str, csv: &str) -> Result<Self, SubmissionError> {
        let d = BatchDescriptor::parse(descriptor)?;
        let rows = parse_submission_csv(csv)?;
        Ok(Self { batch_id: content_hash(descriptor, csv), descriptor: d, rows })
    }
}

/// SHA-256 over the descriptor and CSV bytes.
pub fn content_hash(descriptor: &str, csv: &str) -> BatchId {
    let mut h = Sha256::new();
    h.update((descriptor.len() as u64).to_le_bytes());
    h.update(descriptor.as_bytes());
    h.update(csv.as_bytes());
    BatchId(hex::encode(h.finalize()))
}

/// A well-formed submission entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmissionRow {
    pub instance: InstanceId,
    pub lower_bound: Option<Cost>,
    pub solution_cost: Option<Cost>,
    pub plan: Option<PlanSet>,
}

impl SubmissionRow {
    fn from_raw(raw: &RawRow) -> Result<Self, RejectReason> {
        let f = &raw.fields;
        let parse_err = |what: &str, e: &dyn std::fmt::Display| RejectReason::ParseError(format!("{what}: {e}"));
        let scen = ScenarioId::parse_label(f[0].trim(), f[1].trim()).map_err(|e| parse_err("scenario", &e))?;
        let agents: u32 = f[2].trim().parse().map_err(|e| parse_err("agents", &e))?;
        let opt = |s: &str, what: &str| -> Result<Option<Cost>, RejectReason> {
            let s = s.trim();
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| parse_err(what, &e))
            }
        };
        let lower_bound = opt(&f[3], "lower_bound")?;
        let solution_cost = opt(&f[4], "solution_cost")?;
        let plan_text = f[5].trim();
        let plan = if plan_text.is_empty() {
            None
        } else {
            Some(PlanSet::parse_field(plan_text).map_err(|e| parse_err("plan", &e))?)
        };
        match (lower_bound, solution_cost, &plan) {
            (None, None, _) => Err(RejectReason::ParseError("row has neither lower_bound nor solution_cost".into())),
            (_, Some(_), None) => Err(RejectReason::MissingPlan),
            (_, None, Some(_)) => Err(RejectReason::ParseError("plan given without solution_cost".into())),
            _ => Ok(Self { instance: InstanceId::new(&scen, agents), lower_bound, solution_cost, plan }),
        }
    }

    fn to_fields(&self) -> [String; 6] {
        let opt = |v: Option<Cost>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.instance.map_name.clone(),
            format!("{}-{}", self.instance.scen_kind, self.instance.scen_index),
            self.instance.agents.to_string(),
            opt(self.lower_bound),
            opt(self.solution_cost),
            self.plan.as_ref().map(PlanSet::to_field).unwrap_or_default(),
        ]
    }
}

/// Renders rows as a submission CSV with the standard header.
pub fn write_submission_csv(rows: &[SubmissionRow]) -> String {
    let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Necessary).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(r.to_fields()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are utf-8")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum RejectReason {
    ParseError(String),
    UnknownInstance(String),
    PlanInvalid(String),
    CostMismatch { claimed: Cost, computed: Cost },
    MissingPlan,
    DuplicateRow,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::ParseError(d) => write!(f, "ParseError: {d}"),
            RejectReason::UnknownInstance(d) => write!(f, "UnknownInstance: {d}"),
            RejectReason::PlanInvalid(d) => write!(f, "PlanInvalid: {d}"),
            RejectReason::CostMismatch { claimed, computed } => {
                write!(f, "CostMismatch: claimed {claimed}, computed {computed}")
            }
            RejectReason::MissingPlan => f.write_str("MissingPlan"),
            RejectReason::DuplicateRow => f.write_str("DuplicateRow"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RowOutcome {
    Accepted,
    Rejected(RejectReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowReport {
    pub row: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceId>,
    pub outcome: RowOutcome,
}

/// A batch whose lower bounds were revoked while ingesting this one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RevocationNotice {
    pub batch_id: BatchId,
    pub trigger: InstanceId,
    pub conflict: String,
    pub affected: Vec<InstanceId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub batch_id: BatchId,
    pub algorithm: String,
    pub accepted: usize,
    pub rejected: usize,
    pub rows: Vec<RowReport>,
    pub revocations: Vec<RevocationNotice>,
}

impl IngestReport {
    fn new(batch: &RawBatchFile, rows: Vec<RowReport>, revocations: Vec<RevocationNotice>) -> Self {
        let accepted = rows.iter().filter(|r| r.outcome == RowOutcome::Accepted).count();
        Self {
            batch_id: batch.batch_id.clone(),
            algorithm: batch.descriptor.algorithm.clone(),
            accepted,
            rejected: rows.len() - accepted,
            rows,
            revocations,
        }
    }
}

struct Checked {
    row: SubmissionRow,
    trivial_lb: Option<Cost>,
}

fn check_row(tracker: &Tracker, raw: &RawRow) -> Result<Checked, RejectReason> {
    let row = SubmissionRow::from_raw(raw)?;
    let Some((map, pairs)) = tracker.benchmark.instance(&row.instance) else {
        return Err(RejectReason::UnknownInstance(row.instance.to_string()));
    };
    if let (Some(cost), Some(plan)) = (row.solution_cost, &row.plan) {
        let outcome = validate_plan_set(map, &pairs, plan, Some(cost))
            .map_err(|e| RejectReason::PlanInvalid(e.to_string()))?;
        if !outcome.valid {
            return Err(match (outcome.cost_mismatch, outcome.conflicts.is_empty() && outcome.agent_errors.is_empty()) {
                (Some(m), true) => RejectReason::CostMismatch { claimed: m.claimed, computed: m.computed },
                _ => RejectReason::PlanInvalid(outcome.reason().unwrap_or_default()),
            });
        }
    }
    let trivial_lb = trivial_lower_bound(map, &pairs).ok().map(|lb| lb.total);
    Ok(Checked { row, trivial_lb })
}

fn oracle_batch() -> BatchId {
    BatchId(TRIVIAL_ORACLE.to_string())
}

/// Applies `c`, revoking whichever batches' lower bounds it contradicts.
fn contribute_resolving(
    txn: &mut Txn<'_>,
    c: Contribution,
    notices: &mut Vec<RevocationNotice>,
) -> Result<(), StoreError> {
    // each round revokes at least one batch, so this terminates
    while let Some(conflict) = txn.contribute(c.clone())? {
        revoke_all(txn, &conflict, &c.instance, notices)?;
    }
    Ok(())
}

fn revoke_all(
    txn: &mut Txn<'_>,
    conflict: &BoundConflict,
    trigger: &InstanceId,
    notices: &mut Vec<RevocationNotice>,
) -> Result<(), StoreError> {
    for batch in conflict.offending() {
        let reason = conflict.to_string();
        let affected = txn.revoke(batch, Some(trigger.clone()), &reason)?;
        notices.push(RevocationNotice { batch_id: batch.clone(), trigger: trigger.clone(), conflict: reason, affected });
    }
    Ok(())
}

/// Validates every row and applies the accepted ones in a single
/// transaction. Rows are validated in parallel; outcomes are reported in row
/// order. A batch already in the store is reported as all duplicates and
/// changes nothing. Only a storage failure is an error, and then nothing is
/// applied.
pub fn ingest_batch(
    tracker: &mut Tracker,
    batch: &RawBatchFile,
    received_at: DateTime<Utc>,
) -> Result<IngestReport, StoreError> {
    if tracker.store.has_batch(&batch.batch_id) {
        let rows = batch
            .rows
            .iter()
            .map(|r| RowReport {
                row: r.row,
                instance: SubmissionRow::from_raw(r).ok().map(|s| s.instance),
                outcome: RowOutcome::Rejected(RejectReason::DuplicateRow),
            })
            .collect();
        return Ok(IngestReport::new(batch, rows, Vec::new()));
    }

    let checked: Vec<Result<Checked, RejectReason>> = batch.rows.par_iter().map(|r| check_row(tracker, r)).collect();

    let mut seen = HashSet::new();
    let mut reports = Vec::with_capacity(batch.rows.len());
    let mut accepted = Vec::new();
    for (raw, res) in batch.rows.iter().zip(checked) {
        let (instance, outcome) = match res {
            Ok(c) if !seen.insert(c.row.instance.clone()) => {
                (Some(c.row.instance), RowOutcome::Rejected(RejectReason::DuplicateRow))
            }
            Ok(c) => {
                let id = c.row.instance.clone();
                accepted.push(c);
                (Some(id), RowOutcome::Accepted)
            }
            Err(reason) => (SubmissionRow::from_raw(raw).ok().map(|s| s.instance), RowOutcome::Rejected(reason)),
        };
        reports.push(RowReport { row: raw.row, instance, outcome });
    }

    let meta = batch.descriptor.meta();
    let batch_id = batch.batch_id.clone();
    let notices = tracker.store.transact(|txn| {
        let mut notices = Vec::new();
        txn.register_batch(batch_id.clone(), meta.clone(), received_at)?;
        if !accepted.is_empty() && !txn.has_batch(&oracle_batch()) {
            txn.register_batch(oracle_batch(), AlgorithmMeta::named(TRIVIAL_ORACLE), received_at)?;
        }
        for c in &accepted {
            let row = &c.row;
            let contribution = Contribution {
                batch_id: batch_id.clone(),
                algorithm: meta.name.clone(),
                instance: row.instance.clone(),
                lower_bound: row.lower_bound,
                cost: row.solution_cost,
                plan: row.plan.clone(),
            };
            contribute_resolving(txn, contribution, &mut notices)?;
            if let Some(lb) = c.trivial_lb {
                let oracle = Contribution {
                    batch_id: oracle_batch(),
                    algorithm: TRIVIAL_ORACLE.to_string(),
                    instance: row.instance.clone(),
                    lower_bound: Some(lb),
                    cost: None,
                    plan: None,
                };
                contribute_resolving(txn, oracle, &mut notices)?;
            }
        }
        Ok::<_, StoreError>(notices)
    })?;
    Ok(IngestReport::new(batch, reports, notices))
}
