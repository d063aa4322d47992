use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::InstanceId;
use crate::plan::PlanSet;
use crate::Cost;

/// Content-derived identifier of a submission batch.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BatchId(pub String);

impl fmt::Display for BatchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BatchId {
    fn from(s: &str) -> Self {
        BatchId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmMeta {
    pub name: String,
    pub authors: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub references: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repository: Option<String>,
}

impl AlgorithmMeta {
    pub fn named(name: &str) -> Self {
        Self { name: name.to_string(), authors: String::new(), references: None, repository: None }
    }
}

/// One accepted submission entry for one instance. A cost is only ever
/// present together with the plan that validated to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contribution {
    pub batch_id: BatchId,
    pub algorithm: String,
    pub instance: InstanceId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<Cost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Cost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub seq: u64,
    pub batch_id: BatchId,
    pub algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<Cost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Cost>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub lb_revoked: bool,
}

impl HistoryEntry {
    /// The lower bound if it still counts.
    pub fn live_lower_bound(&self) -> Option<Cost> {
        self.lower_bound.filter(|_| !self.lb_revoked)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestLowerBound {
    pub value: Cost,
    pub holders: BTreeSet<String>,
    pub batches: BTreeSet<BatchId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestSolution {
    pub value: Cost,
    pub holders: BTreeSet<String>,
    /// Batch whose plan is stored; the first accepted at this value.
    pub plan_batch: BatchId,
    pub plan: PlanSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceState {
    Closed,
    Solved,
    Unknown,
}

impl InstanceState {
    pub fn as_str(self) -> &'static str {
        match self {
            InstanceState::Closed => "closed",
            InstanceState::Solved => "solved",
            InstanceState::Unknown => "unknown",
        }
    }
}

impl std::str::FromStr for InstanceState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closed" => Ok(InstanceState::Closed),
            "solved" => Ok(InstanceState::Solved),
            "unknown" => Ok(InstanceState::Unknown),
            _ => Err(format!("unknown instance state {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundConflict {
    /// A lower bound exceeds a verified solution cost; the bound's batch is wrong.
    LowerBoundAboveSolution { lower_bound: Cost, cost: Cost, offending: BTreeSet<BatchId> },
    /// A verified cost undercuts recorded lower bounds; their batches are wrong.
    SolutionBelowLowerBound { cost: Cost, lower_bound: Cost, offending: BTreeSet<BatchId> },
}

impl BoundConflict {
    pub fn offending(&self) -> &BTreeSet<BatchId> {
        match self {
            BoundConflict::LowerBoundAboveSolution { offending, .. }
            | BoundConflict::SolutionBelowLowerBound { offending, .. } => offending,
        }
    }
}

impl fmt::Display for BoundConflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundConflict::LowerBoundAboveSolution { lower_bound, cost, .. } => {
                write!(f, "lower bound {lower_bound} exceeds verified cost {cost}")
            }
            BoundConflict::SolutionBelowLowerBound { cost, lower_bound, .. } => {
                write!(f, "verified cost {cost} is below lower bound {lower_bound}")
            }
        }
    }
}

impl std::error::Error for BoundConflict {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("contribution for {found} applied to record of {expected}")]
pub struct WrongInstance {
    pub expected: InstanceId,
    pub found: InstanceId,
}

/// Best known bounds of one instance together with every contribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance: InstanceId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_lb: Option<BestLowerBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_cost: Option<BestSolution>,
    pub history: Vec<HistoryEntry>,
}

impl InstanceRecord {
    pub fn new(instance: InstanceId) -> Self {
        Self { instance, best_lb: None, best_cost: None, history: Vec::new() }
    }

    pub fn lower_bound(&self) -> Option<Cost> {
        self.best_lb.as_ref().map(|b| b.value)
    }

    pub fn cost(&self) -> Option<Cost> {
        self.best_cost.as_ref().map(|b| b.value)
    }

    /// Closed when both bounds meet, solved when a solution exists, unknown
    /// otherwise.
    pub fn classify(&self) -> InstanceState {
        match (self.lower_bound(), self.cost()) {
            (Some(lb), Some(c)) if lb == c => InstanceState::Closed,
            (_, Some(_)) => InstanceState::Solved,
            (_, None) => InstanceState::Unknown,
        }
    }

    /// Whether an identical `(batch, algorithm, bounds)` entry is already recorded.
    pub fn contains(&self, c: &Contribution) -> bool {
        self.history.iter().any(|h| {
            h.batch_id == c.batch_id
                && h.algorithm == c.algorithm
                && h.lower_bound == c.lower_bound
                && h.cost == c.cost
        })
    }

    /// Folds one accepted contribution into the record.
    ///
    /// `lb_revoked` marks the contribution's lower bound as void (its batch has
    /// been revoked). Re-recording an identical `(batch, entry)` is a no-op.
    /// A contribution that would leave a lower bound above a verified cost is
    /// refused with the batches to revoke.
    pub fn record_result(
        &self,
        c: &Contribution,
        seq: u64,
        lb_revoked: bool,
    ) -> Result<InstanceRecord, RecordError> {
        if c.instance != self.instance {
            return Err(RecordError::WrongInstance(WrongInstance {
                expected: self.instance.clone(),
                found: c.instance.clone(),
            }));
        }
        if self.contains(c) {
            return Ok(self.clone());
        }
        let live_lb = c.lower_bound.filter(|_| !lb_revoked);
        let best_cost = match (self.cost(), c.cost) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if let (Some(lb), Some(cost)) = (live_lb, best_cost) {
            if lb > cost {
                return Err(RecordError::Conflict(BoundConflict::LowerBoundAboveSolution {
                    lower_bound: lb,
                    cost,
                    offending: BTreeSet::from([c.batch_id.clone()]),
                }));
            }
        }
        if let (Some(cost), Some(lb)) = (c.cost, self.lower_bound()) {
            if cost < lb {
                let offending = self
                    .history
                    .iter()
                    .filter(|h| h.live_lower_bound().is_some_and(|v| v > cost))
                    .map(|h| h.batch_id.clone())
                    .collect();
                return Err(RecordError::Conflict(BoundConflict::SolutionBelowLowerBound {
                    cost,
                    lower_bound: lb,
                    offending,
                }));
            }
        }

        let mut next = self.clone();
        next.history.push(HistoryEntry {
            seq,
            batch_id: c.batch_id.clone(),
            algorithm: c.algorithm.clone(),
            lower_bound: c.lower_bound,
            cost: c.cost,
            lb_revoked: lb_revoked && c.lower_bound.is_some(),
        });
        if let Some(lb) = live_lb {
            match &mut next.best_lb {
                Some(best) if best.value == lb => {
                    best.holders.insert(c.algorithm.clone());
                    best.batches.insert(c.batch_id.clone());
                }
                Some(best) if best.value > lb => {}
                _ => {
                    next.best_lb = Some(BestLowerBound {
                        value: lb,
                        holders: BTreeSet::from([c.algorithm.clone()]),
                        batches: BTreeSet::from([c.batch_id.clone()]),
                    })
                }
            }
        }
        if let Some(cost) = c.cost {
            let plan = c.plan.clone().ok_or(RecordError::MissingPlan)?;
            match &mut next.best_cost {
                Some(best) if best.value == cost => {
                    best.holders.insert(c.algorithm.clone());
                }
                Some(best) if best.value < cost => {}
                _ => {
                    next.best_cost = Some(BestSolution {
                        value: cost,
                        holders: BTreeSet::from([c.algorithm.clone()]),
                        plan_batch: c.batch_id.clone(),
                        plan,
                    })
                }
            }
        }
        Ok(next)
    }

    /// Voids every lower bound contributed by `batch` and recomputes the best
    /// lower bound from the remaining history. Returns whether anything changed.
    pub fn revoke_batch(&mut self, batch: &BatchId) -> bool {
        let mut changed = false;
        for h in &mut self.history {
            if &h.batch_id == batch && h.lower_bound.is_some() && !h.lb_revoked {
                h.lb_revoked = true;
                changed = true;
            }
        }
        if changed {
            self.best_lb = self.recompute_best_lb();
        }
        changed
    }

    fn recompute_best_lb(&self) -> Option<BestLowerBound> {
        let value = self.history.iter().filter_map(HistoryEntry::live_lower_bound).max()?;
        let holders = self.history.iter().filter(|h| h.live_lower_bound() == Some(value));
        Some(BestLowerBound {
            value,
            holders: holders.clone().map(|h| h.algorithm.clone()).collect(),
            batches: holders.map(|h| h.batch_id.clone()).collect(),
        })
    }

    /// Algorithms with an accepted solution on this instance.
    pub fn solvers(&self) -> BTreeSet<&str> {
        self.history.iter().filter(|h| h.cost.is_some()).map(|h| h.algorithm.as_str()).collect()
    }

    pub fn holds_best_lb(&self, algorithm: &str) -> bool {
        self.best_lb.as_ref().is_some_and(|b| b.holders.contains(algorithm))
    }

    pub fn holds_best_cost(&self, algorithm: &str) -> bool {
        self.best_cost.as_ref().is_some_and(|b| b.holders.contains(algorithm))
    }

    /// Closed by an algorithm: it holds both best bounds of a closed instance.
    pub fn closed_by(&self, algorithm: &str) -> bool {
        self.classify() == InstanceState::Closed
            && self.holds_best_lb(algorithm)
            && self.holds_best_cost(algorithm)
    }

    /// Bests without history, as compared by revocation-equivalence checks.
    pub fn bests(&self) -> (Option<&BestLowerBound>, Option<&BestSolution>) {
        (self.best_lb.as_ref(), self.best_cost.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error(transparent)]
    Conflict(#[from] BoundConflict),
    #[error(transparent)]
    WrongInstance(WrongInstance),
    #[error("solution cost without a plan")]
    MissingPlan,
}
