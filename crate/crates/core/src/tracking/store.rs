use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, Write};
use std::ops::RangeBounds;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::{AlgorithmMeta, BatchId, BoundConflict, Contribution, InstanceRecord, RecordError};
use crate::model::InstanceId;

/// Version written in the log header; readers refuse any other.
pub const LOG_FORMAT_VERSION: u32 = 1;
const LOG_FORMAT_NAME: &str = "mapf-tracker-events";
const LOG_FILE: &str = "events.jsonl";
const SNAPSHOT_FILE: &str = "snapshot.jsonl";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt event log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("unsupported event log version {0}")]
    UnsupportedVersion(u32),
    #[error("injected write fault")]
    InjectedFault,
    #[error("event log is unusable after a failed write; reopen the store")]
    Poisoned,
    #[error("unknown batch {0}")]
    UnknownBatch(BatchId),
    #[error("batch {0} already registered")]
    DuplicateBatch(BatchId),
    #[error("contribution references unregistered batch {0}")]
    UnregisteredBatch(BatchId),
    #[error("{instance}: {source}")]
    Record { instance: InstanceId, source: RecordError },
    #[error("event sequence {found} out of order, expected {expected}")]
    OutOfOrder { expected: u64, found: u64 },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// One accepted state change. The log is a sequence of these grouped into
/// committed transactions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Batch { seq: u64, batch_id: BatchId, algorithm: AlgorithmMeta, received_at: DateTime<Utc> },
    Contribution { seq: u64, contribution: Contribution },
    Revocation {
        seq: u64,
        batch_id: BatchId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trigger: Option<InstanceId>,
        reason: String,
    },
}

impl Event {
    pub fn seq(&self) -> u64 {
        match self {
            Event::Batch { seq, .. } | Event::Contribution { seq, .. } | Event::Revocation { seq, .. } => *seq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchInfo {
    pub algorithm: String,
    pub received_at: DateTime<Utc>,
    pub contributions: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct State {
    algorithms: BTreeMap<String, AlgorithmMeta>,
    batches: BTreeMap<BatchId, BatchInfo>,
    revoked: BTreeSet<BatchId>,
    records: BTreeMap<InstanceId, InstanceRecord>,
    // instances on which a batch contributed a lower bound, revoked or not
    lb_index: BTreeMap<BatchId, BTreeSet<InstanceId>>,
    next_seq: u64,
}

/// Changes of one transaction, not yet visible in the store.
#[derive(Debug, Default)]
struct Staged {
    algorithms: BTreeMap<String, AlgorithmMeta>,
    batches: BTreeMap<BatchId, BatchInfo>,
    revoked: BTreeSet<BatchId>,
    records: BTreeMap<InstanceId, InstanceRecord>,
    lb_index: BTreeMap<BatchId, BTreeSet<InstanceId>>,
    events: Vec<Event>,
}

/// A transaction over the store. Reads see the staged changes; nothing is
/// visible to other readers until the enclosing [`Store::transact`] commits.
pub struct Txn<'s> {
    base: &'s State,
    staged: Staged,
    next_seq: u64,
}

impl<'s> Txn<'s> {
    fn new(base: &'s State) -> Self {
        Self { base, staged: Staged::default(), next_seq: base.next_seq }
    }

    pub fn record(&self, id: &InstanceId) -> Cow<'_, InstanceRecord> {
        if let Some(r) = self.staged.records.get(id).or_else(|| self.base.records.get(id)) {
            Cow::Borrowed(r)
        } else {
            Cow::Owned(InstanceRecord::new(id.clone()))
        }
    }

    pub fn has_batch(&self, batch: &BatchId) -> bool {
        self.staged.batches.contains_key(batch) || self.base.batches.contains_key(batch)
    }

    pub fn is_revoked(&self, batch: &BatchId) -> bool {
        self.staged.revoked.contains(batch) || self.base.revoked.contains(batch)
    }

    fn take_seq(&mut self, seq: Option<u64>) -> Result<u64, StoreError> {
        let expected = self.next_seq;
        match seq {
            Some(found) if found != expected => Err(StoreError::OutOfOrder { expected, found }),
            _ => {
                self.next_seq += 1;
                Ok(expected)
            }
        }
    }

    pub fn register_batch(
        &mut self,
        batch_id: BatchId,
        algorithm: AlgorithmMeta,
        received_at: DateTime<Utc>,
    ) -> Result<(), StoreError> {
        self.register_batch_at(None, batch_id, algorithm, received_at)
    }

    fn register_batch_at(
        &mut self,
        seq: Option<u64>,
        batch_id: BatchId,
        algorithm: AlgorithmMeta,
        received_at: DateTime<Utc>,
    ) -> Result<(), StoreError> {
        if self.has_batch(&batch_id) {
            return Err(StoreError::DuplicateBatch(batch_id));
        }
        let seq = self.take_seq(seq)?;
        let info = BatchInfo { algorithm: algorithm.name.clone(), received_at, contributions: 0 };
        self.staged.batches.insert(batch_id.clone(), info);
        self.staged.algorithms.insert(algorithm.name.clone(), algorithm.clone());
        self.staged.events.push(Event::Batch { seq, batch_id, algorithm, received_at });
        Ok(())
    }

    /// Applies a contribution, or returns the conflict it would cause and
    /// leaves the transaction unchanged. A contribution already recorded is a
    /// no-op and emits no event.
    pub fn contribute(&mut self, c: Contribution) -> Result<Option<BoundConflict>, StoreError> {
        self.contribute_at(None, c)
    }

    fn contribute_at(&mut self, seq: Option<u64>, c: Contribution) -> Result<Option<BoundConflict>, StoreError> {
        if !self.has_batch(&c.batch_id) {
            return Err(StoreError::UnregisteredBatch(c.batch_id));
        }
        if self.record(&c.instance).contains(&c) {
            return Ok(None);
        }
        let revoked = self.is_revoked(&c.batch_id);
        let next = match self.record(&c.instance).record_result(&c, self.next_seq, revoked) {
            Ok(next) => next,
            Err(RecordError::Conflict(conflict)) => return Ok(Some(conflict)),
            Err(source) => return Err(StoreError::Record { instance: c.instance, source }),
        };
        let seq = self.take_seq(seq)?;
        if c.lower_bound.is_some() {
            self.staged.lb_index.entry(c.batch_id.clone()).or_default().insert(c.instance.clone());
        }
        let info = match self.staged.batches.get_mut(&c.batch_id) {
            Some(info) => info,
            None => {
                let base = self.base.batches[&c.batch_id].clone();
                self.staged.batches.entry(c.batch_id.clone()).or_insert(base)
            }
        };
        info.contributions += 1;
        self.staged.records.insert(c.instance.clone(), next);
        self.staged.events.push(Event::Contribution { seq, contribution: c });
        Ok(None)
    }

    /// Voids every lower bound of `batch`, past and future. Returns the
    /// instances whose record changed.
    pub fn revoke(
        &mut self,
        batch: &BatchId,
        trigger: Option<InstanceId>,
        reason: &str,
    ) -> Result<Vec<InstanceId>, StoreError> {
        self.revoke_at(None, batch, trigger, reason)
    }

    fn revoke_at(
        &mut self,
        seq: Option<u64>,
        batch: &BatchId,
        trigger: Option<InstanceId>,
        reason: &str,
    ) -> Result<Vec<InstanceId>, StoreError> {
        if !self.has_batch(batch) {
            return Err(StoreError::UnknownBatch(batch.clone()));
        }
        let seq = self.take_seq(seq)?;
        self.staged.revoked.insert(batch.clone());
        let mut touched: BTreeSet<InstanceId> = BTreeSet::new();
        for ids in [self.base.lb_index.get(batch), self.staged.lb_index.get(batch)].into_iter().flatten() {
            touched.extend(ids.iter().cloned());
        }
        let mut changed = Vec::new();
        for id in touched {
            let mut rec = self.record(&id).into_owned();
            if rec.revoke_batch(batch) {
                self.staged.records.insert(id.clone(), rec);
                changed.push(id);
            }
        }
        self.staged.events.push(Event::Revocation {
            seq,
            batch_id: batch.clone(),
            trigger,
            reason: reason.to_string(),
        });
        Ok(changed)
    }

    fn apply(&mut self, event: Event) -> Result<(), StoreError> {
        match event {
            Event::Batch { seq, batch_id, algorithm, received_at } => {
                self.register_batch_at(Some(seq), batch_id, algorithm, received_at)
            }
            Event::Contribution { seq, contribution } => {
                let instance = contribution.instance.clone();
                match self.contribute_at(Some(seq), contribution)? {
                    None => Ok(()),
                    Some(conflict) => Err(StoreError::Record { instance, source: conflict.into() }),
                }
            }
            Event::Revocation { seq, batch_id, trigger, reason } => {
                self.revoke_at(Some(seq), &batch_id, trigger, &reason).map(|_| ())
            }
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.staged.events
    }

    fn finish(self) -> (Staged, u64) {
        (self.staged, self.next_seq)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LogHeader {
    format: String,
    version: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct LogLine {
    txn: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    event: Option<Event>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    commit: bool,
}

/// Append-only JSON-lines file of committed transactions. Every transaction
/// ends with a commit line; a trailing transaction without one is discarded
/// and truncated away on open.
#[derive(Debug)]
struct EventLog {
    path: PathBuf,
    file: File,
    len: u64,
    next_txn: u64,
    fault_after: Option<usize>,
    poisoned: bool,
}

impl EventLog {
    fn open(path: &Path) -> Result<(Self, Vec<Vec<Event>>), StoreError> {
        if !path.exists() {
            let header = serde_json::to_string(&LogHeader {
                format: LOG_FORMAT_NAME.to_string(),
                version: LOG_FORMAT_VERSION,
            })
            .expect("header serializes");
            fs::write(path, format!("{header}\n")).map_err(io_err(path))?;
        }
        let (txns, committed_len, next_txn) = Self::read(path)?;
        let file = OpenOptions::new().read(true).write(true).open(path).map_err(io_err(path))?;
        if file.metadata().map_err(io_err(path))?.len() != committed_len {
            file.set_len(committed_len).map_err(io_err(path))?;
            file.sync_all().map_err(io_err(path))?;
        }
        let log = Self { path: path.to_path_buf(), file, len: committed_len, next_txn, fault_after: None, poisoned: false };
        Ok((log, txns))
    }

    fn read(path: &Path) -> Result<(Vec<Vec<Event>>, u64, u64), StoreError> {
        let mut reader = BufReader::new(File::open(path).map_err(io_err(path))?);
        let mut buf = String::new();
        let mut offset = reader.read_line(&mut buf).map_err(io_err(path))? as u64;
        let header: LogHeader = serde_json::from_str(buf.trim_end())
            .map_err(|e| StoreError::CorruptLog { line: 1, reason: e.to_string() })?;
        if header.format != LOG_FORMAT_NAME {
            return Err(StoreError::CorruptLog { line: 1, reason: format!("unexpected format {:?}", header.format) });
        }
        if header.version != LOG_FORMAT_VERSION {
            return Err(StoreError::UnsupportedVersion(header.version));
        }
        let mut committed_len = offset;
        let mut txns = Vec::new();
        let mut pending: Vec<Event> = Vec::new();
        let mut pending_txn: Option<u64> = None;
        let mut next_txn = 0;
        let mut line_no = 1;
        let mut tail_error: Option<StoreError> = None;
        loop {
            buf.clear();
            let n = reader.read_line(&mut buf).map_err(io_err(path))?;
            if n == 0 {
                break;
            }
            line_no += 1;
            offset += n as u64;
            if let Some(err) = tail_error.take() {
                // garbage followed by more data is corruption, not a torn tail
                return Err(err);
            }
            let parsed = if buf.ends_with('\n') {
                serde_json::from_str::<LogLine>(buf.trim_end()).map_err(|e| e.to_string())
            } else {
                Err("truncated line".to_string())
            };
            let line = match parsed {
                Ok(line) => line,
                Err(reason) => {
                    tail_error = Some(StoreError::CorruptLog { line: line_no, reason });
                    continue;
                }
            };
            if pending_txn.is_some_and(|t| t != line.txn) {
                return Err(StoreError::CorruptLog {
                    line: line_no,
                    reason: format!("transaction {} interleaved with {}", line.txn, pending_txn.unwrap()),
                });
            }
            pending_txn = Some(line.txn);
            if let Some(event) = line.event {
                pending.push(event);
            }
            if line.commit {
                txns.push(std::mem::take(&mut pending));
                pending_txn = None;
                committed_len = offset;
                next_txn = line.txn + 1;
            }
        }
        Ok((txns, committed_len, next_txn))
    }

    fn append(&mut self, events: &[Event]) -> Result<(), StoreError> {
        if self.poisoned {
            return Err(StoreError::Poisoned);
        }
        let txn = self.next_txn;
        let mut lines: Vec<String> = events
            .iter()
            .map(|e| serde_json::to_string(&LogLine { txn, event: Some(e.clone()), commit: false }))
            .collect::<Result<_, _>>()
            .expect("events serialize");
        lines.push(serde_json::to_string(&LogLine { txn, event: None, commit: true }).expect("commit serializes"));

        if let Some(k) = self.fault_after.take() {
            // simulate a crash: k complete lines and half of the next
            let mut torn = String::new();
            for l in lines.iter().take(k.min(lines.len() - 1)) {
                torn.push_str(l);
                torn.push('\n');
            }
            if let Some(next) = lines.get(k.min(lines.len() - 1)) {
                torn.push_str(&next[..next.len() / 2]);
            }
            let _ = self.file.seek(io::SeekFrom::Start(self.len)).and_then(|_| self.file.write_all(torn.as_bytes()));
            self.poisoned = true;
            return Err(StoreError::InjectedFault);
        }

        let mut body = lines.join("\n");
        body.push('\n');
        let result = (|| {
            self.file.seek(io::SeekFrom::Start(self.len))?;
            self.file.write_all(body.as_bytes())?;
            self.file.sync_data()
        })();
        match result {
            Ok(()) => {
                self.len += body.len() as u64;
                self.next_txn += 1;
                Ok(())
            }
            Err(source) => {
                if self.file.set_len(self.len).is_err() {
                    self.poisoned = true;
                }
                Err(StoreError::Io { path: self.path.clone(), source })
            }
        }
    }
}

/// The record store: in-memory state derived from an event log, optionally
/// persisted to a directory holding the log and a derived snapshot.
#[derive(Debug)]
pub struct Store {
    state: State,
    log: Option<EventLog>,
    dir: Option<PathBuf>,
    // committed transactions of a store without a log
    journal: Vec<Vec<Event>>,
}

impl Default for Store {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl Store {
    pub fn in_memory() -> Self {
        Self { state: State::default(), log: None, dir: None, journal: Vec::new() }
    }

    /// Opens (creating if needed) a store directory and replays its log.
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let (log, txns) = EventLog::open(&dir.join(LOG_FILE))?;
        let mut store = Self::replay(txns)?;
        store.journal.clear();
        store.log = Some(log);
        store.dir = Some(dir.to_path_buf());
        store.write_snapshot()?;
        Ok(store)
    }

    /// Builds an in-memory store by applying committed transactions in order.
    pub fn replay(txns: impl IntoIterator<Item = Vec<Event>>) -> Result<Self, StoreError> {
        let mut store = Self::in_memory();
        for events in txns {
            let mut txn = Txn::new(&store.state);
            for e in events {
                txn.apply(e)?;
            }
            let (staged, next_seq) = txn.finish();
            store.journal.push(staged.events.clone());
            store.merge(staged, next_seq);
        }
        Ok(store)
    }

    /// Runs `f` in a transaction and commits its events atomically: either
    /// all of them are logged and applied, or none.
    pub fn transact<R, E>(&mut self, f: impl FnOnce(&mut Txn<'_>) -> Result<R, E>) -> Result<R, E>
    where
        E: From<StoreError>,
    {
        let mut txn = Txn::new(&self.state);
        let out = f(&mut txn)?;
        let (staged, next_seq) = txn.finish();
        if staged.events.is_empty() {
            return Ok(out);
        }
        match &mut self.log {
            Some(log) => log.append(&staged.events)?,
            None => self.journal.push(staged.events.clone()),
        }
        self.merge(staged, next_seq);
        if self.dir.is_some() {
            self.write_snapshot()?;
        }
        Ok(out)
    }

    fn merge(&mut self, staged: Staged, next_seq: u64) {
        let s = &mut self.state;
        s.algorithms.extend(staged.algorithms);
        s.batches.extend(staged.batches);
        s.revoked.extend(staged.revoked);
        s.records.extend(staged.records);
        for (batch, ids) in staged.lb_index {
            s.lb_index.entry(batch).or_default().extend(ids);
        }
        s.next_seq = next_seq;
    }

    pub fn revoke_batch_lower_bounds(&mut self, batch: &BatchId, reason: &str) -> Result<Vec<InstanceId>, StoreError> {
        self.transact(|txn| txn.revoke(batch, None, reason))
    }

    /// Makes the next log write tear after `lines` complete lines, as a crash
    /// would, and leaves the store unusable until reopened.
    pub fn inject_write_fault(&mut self, lines: usize) {
        if let Some(log) = &mut self.log {
            log.fault_after = Some(lines);
        }
    }

    /// Committed transactions in order.
    pub fn transactions(&self) -> Result<Vec<Vec<Event>>, StoreError> {
        match &self.log {
            Some(log) => EventLog::read(&log.path).map(|(txns, _, _)| txns),
            None => Ok(self.journal.clone()),
        }
    }

    pub fn record(&self, id: &InstanceId) -> Option<&InstanceRecord> {
        self.state.records.get(id)
    }

    pub fn records(&self) -> impl Iterator<Item = &InstanceRecord> {
        self.state.records.values()
    }

    pub fn records_in<R: RangeBounds<InstanceId>>(&self, range: R) -> impl Iterator<Item = &InstanceRecord> {
        self.state.records.range(range).map(|(_, r)| r)
    }

    pub fn record_count(&self) -> usize {
        self.state.records.len()
    }

    pub fn algorithms(&self) -> &BTreeMap<String, AlgorithmMeta> {
        &self.state.algorithms
    }

    pub fn batches(&self) -> &BTreeMap<BatchId, BatchInfo> {
        &self.state.batches
    }

    pub fn has_batch(&self, batch: &BatchId) -> bool {
        self.state.batches.contains_key(batch)
    }

    pub fn revoked(&self) -> &BTreeSet<BatchId> {
        &self.state.revoked
    }

    pub fn event_count(&self) -> u64 {
        self.state.next_seq
    }

    /// Canonical text of the full derived state, one JSON value per line.
    /// Equal stores produce byte-identical text.
    pub fn snapshot_text(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, v: serde_json::Value| {
            out.push_str(&v.to_string());
            out.push('\n');
        };
        push(&mut out, serde_json::json!({ "events": self.state.next_seq, "revoked": self.state.revoked }));
        for a in self.state.algorithms.values() {
            push(&mut out, serde_json::json!({ "algorithm": a }));
        }
        for (id, b) in &self.state.batches {
            push(&mut out, serde_json::json!({ "batch": id, "info": b }));
        }
        for r in self.state.records.values() {
            push(&mut out, serde_json::json!({ "record": r }));
        }
        out
    }

    /// Canonical text of best bounds only, without histories.
    pub fn bests_text(&self) -> String {
        let mut out = String::new();
        for r in self.state.records.values() {
            let (lb, cost) = r.bests();
            let v = serde_json::json!({ "instance": r.instance, "best_lb": lb, "best_cost": cost });
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }

    fn write_snapshot(&self) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(SNAPSHOT_FILE);
        let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        fs::write(&tmp, self.snapshot_text()).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ScenKind, ScenarioId};
    use crate::Cost;

    fn inst(n: u32) -> InstanceId {
        InstanceId::new(&ScenarioId::new("m", ScenKind::Even, 1), n)
    }

    fn at() -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    fn batch(store: &mut Store, id: &str, alg: &str, rows: &[(u32, Option<Cost>, Option<Cost>)]) {
        store
            .transact(|t| {
                t.register_batch(id.into(), AlgorithmMeta::named(alg), at())?;
                for &(n, lb, cost) in rows {
                    let c = Contribution {
                        batch_id: id.into(),
                        algorithm: alg.into(),
                        instance: inst(n),
                        lower_bound: lb,
                        cost,
                        plan: cost.map(|_| "w".parse().unwrap()),
                    };
                    assert!(t.contribute(c)?.is_none());
                }
                Ok::<_, StoreError>(())
            })
            .unwrap();
    }

    #[test]
    fn revocation_touches_only_that_batch() {
        let mut s = Store::in_memory();
        batch(&mut s, "b1", "A", &[(1, Some(5), None), (2, Some(7), None)]);
        batch(&mut s, "b2", "B", &[(1, Some(4), None)]);
        let changed = s.revoke_batch_lower_bounds(&"b1".into(), "test").unwrap();
        assert_eq!(changed, vec![inst(1), inst(2)]);
        assert_eq!(s.record(&inst(1)).unwrap().lower_bound(), Some(4));
        assert_eq!(s.record(&inst(2)).unwrap().lower_bound(), None);
        assert!(matches!(
            s.revoke_batch_lower_bounds(&"nope".into(), "x"),
            Err(StoreError::UnknownBatch(_))
        ));
    }

    #[test]
    fn failed_transaction_changes_nothing() {
        let mut s = Store::in_memory();
        batch(&mut s, "b1", "A", &[(1, Some(5), None)]);
        let before = s.snapshot_text();
        let r: Result<(), StoreError> = s.transact(|t| {
            t.register_batch("b2".into(), AlgorithmMeta::named("B"), at())?;
            t.revoke(&"b1".into(), None, "x")?;
            Err(StoreError::UnknownBatch("abort".into()))
        });
        assert!(r.is_err());
        assert_eq!(s.snapshot_text(), before);
    }

    #[test]
    fn log_round_trip_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Store::open(dir.path()).unwrap();
        batch(&mut s, "b1", "A", &[(1, Some(5), Some(6)), (2, None, Some(3))]);
        batch(&mut s, "b2", "B", &[(1, Some(6), None)]);
        let committed = s.snapshot_text();
        s.inject_write_fault(1);
        let r = s.transact(|t| {
            t.register_batch("b3".into(), AlgorithmMeta::named("C"), at())?;
            t.revoke(&"b2".into(), None, "x").map(|_| ())
        });
        assert!(matches!(r, Err(StoreError::InjectedFault)));
        assert_eq!(s.snapshot_text(), committed);
        drop(s);

        let mut s = Store::open(dir.path()).unwrap();
        assert_eq!(s.snapshot_text(), committed);
        assert_eq!(fs::read_to_string(dir.path().join(SNAPSHOT_FILE)).unwrap(), committed);
        batch(&mut s, "b3", "C", &[(3, None, Some(2))]);
        let after = s.snapshot_text();
        drop(s);
        assert_eq!(Store::open(dir.path()).unwrap().snapshot_text(), after);
    }

    #[test]
    fn replay_reproduces_state() {
        let mut s = Store::in_memory();
        batch(&mut s, "b1", "A", &[(1, Some(5), None)]);
        batch(&mut s, "b2", "B", &[(1, None, Some(5)), (2, None, Some(9))]);
        s.revoke_batch_lower_bounds(&"b1".into(), "x").unwrap();
        let again = Store::replay(s.transactions().unwrap()).unwrap();
        assert_eq!(again.snapshot_text(), s.snapshot_text());
    }

    #[test]
    fn rejects_mid_file_garbage_and_other_versions() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Store::open(dir.path()).unwrap();
        batch(&mut s, "b1", "A", &[(1, Some(5), None)]);
        batch(&mut s, "b2", "A", &[(2, Some(5), None)]);
        drop(s);
        let path = dir.path().join(LOG_FILE);
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[2] = "{not json";
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        assert!(matches!(Store::open(dir.path()), Err(StoreError::CorruptLog { line: 3, .. })));

        fs::write(&path, "{\"format\":\"mapf-tracker-events\",\"version\":9}\n").unwrap();
        assert!(matches!(Store::open(dir.path()), Err(StoreError::UnsupportedVersion(9))));
    }
}
