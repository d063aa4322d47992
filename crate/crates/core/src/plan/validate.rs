use serde::Serialize;
use thiserror::Error;

use super::{agent_cost, find_conflicts, simulate, Conflict, GoalNotReached, PlanSet, SimError};
use crate::model::{Cell, GridMap};
use crate::Cost;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanSetError {
    #[error("plan set has {plans} agents, instance has {pairs}")]
    AgentCountMismatch { pairs: usize, plans: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize)]
#[serde(untagged)]
pub enum AgentError {
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    GoalNotReached(#[from] GoalNotReached),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CostMismatch {
    pub claimed: Cost,
    pub computed: Cost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationOutcome {
    pub valid: bool,
    /// Sum of individual costs; present when every agent simulates cleanly
    /// and reaches its goal.
    pub computed_cost: Option<Cost>,
    pub agent_costs: Vec<Cost>,
    pub conflicts: Vec<Conflict>,
    pub agent_errors: Vec<(usize, AgentError)>,
    pub cost_mismatch: Option<CostMismatch>,
}

impl ValidationOutcome {
    /// One-line reason for an invalid outcome, `None` when valid.
    pub fn reason(&self) -> Option<String> {
        if self.valid {
            return None;
        }
        if let Some((agent, err)) = self.agent_errors.first() {
            return Some(format!("agent {agent}: {err}"));
        }
        if let Some(c) = self.conflicts.first() {
            let more = self.conflicts.len() - 1;
            return Some(if more > 0 { format!("{c} (+{more} more)") } else { c.to_string() });
        }
        self.cost_mismatch
            .map(|m| format!("cost mismatch: claimed {} computed {}", m.claimed, m.computed))
    }
}

/// Validates a plan set against an instance's start/goal pairs.
///
/// Conflicts are computed whenever every agent simulates without leaving the
/// map or hitting an obstacle, even if some agent misses its goal.
pub fn validate_plan_set(
    map: &GridMap,
    pairs: &[(Cell, Cell)],
    plans: &PlanSet,
    claimed_cost: Option<Cost>,
) -> Result<ValidationOutcome, PlanSetError> {
    if pairs.len() != plans.len() {
        return Err(PlanSetError::AgentCountMismatch { pairs: pairs.len(), plans: plans.len() });
    }
    let mut agent_errors = Vec::new();
    let mut paths = Vec::with_capacity(pairs.len());
    for (agent, (&(start, _), actions)) in pairs.iter().zip(plans.plans()).enumerate() {
        match simulate(map, start, actions) {
            Ok(p) => paths.push(p),
            Err(e) => agent_errors.push((agent, e.into())),
        }
    }

    let mut conflicts = Vec::new();
    let mut computed_cost = None;
    let mut agent_costs = Vec::new();
    if agent_errors.is_empty() {
        for (agent, (path, &(_, goal))) in paths.iter().zip(pairs).enumerate() {
            match agent_cost(path, goal) {
                Ok(c) => agent_costs.push(c),
                Err(e) => agent_errors.push((agent, e.into())),
            }
        }
        if agent_errors.is_empty() {
            computed_cost = Some(agent_costs.iter().sum());
        } else {
            agent_costs.clear();
        }
        conflicts = find_conflicts(&paths);
    }

    let cost_mismatch = match (claimed_cost, computed_cost) {
        (Some(claimed), Some(computed)) if claimed != computed => {
            Some(CostMismatch { claimed, computed })
        }
        _ => None,
    };
    let valid = agent_errors.is_empty()
        && conflicts.is_empty()
        && cost_mismatch.is_none()
        && computed_cost.is_some();
    Ok(ValidationOutcome { valid, computed_cost, agent_costs, conflicts, agent_errors, cost_mismatch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::ConflictKind;

    fn cells(v: &[((u32, u32), (u32, u32))]) -> Vec<(Cell, Cell)> {
        v.iter().map(|&((a, b), (c, d))| (Cell::new(a, b), Cell::new(c, d))).collect()
    }

    #[test]
    fn disjoint_plans_are_valid() {
        let map = GridMap::open("m", 3, 3);
        let pairs = cells(&[((0, 0), (2, 0)), ((0, 2), (2, 2))]);
        let plans: PlanSet = "rr;rr".parse().unwrap();
        let out = validate_plan_set(&map, &pairs, &plans, Some(4)).unwrap();
        assert!(out.valid);
        assert_eq!(out.computed_cost, Some(4));
        assert_eq!(out.agent_costs, vec![2, 2]);
        assert_eq!(out.reason(), None);
    }

    #[test]
    fn swap_is_invalid() {
        let map = GridMap::open("m", 3, 3);
        let pairs = cells(&[((0, 0), (1, 0)), ((1, 0), (0, 0))]);
        let out = validate_plan_set(&map, &pairs, &"r;l".parse().unwrap(), None).unwrap();
        assert!(!out.valid);
        assert_eq!(out.conflicts.len(), 1);
        assert_eq!(out.conflicts[0].kind, ConflictKind::Edge);
        assert!(out.reason().unwrap().contains("edge conflict"));
    }

    #[test]
    fn cost_off_by_one() {
        // independent tally: agent 0 "rd" reaches (1,1) at t=2, agent 1 "wwl"
        // reaches (1,2) at t=3, so the sum of costs is 5
        let map = GridMap::open("m", 3, 3);
        let pairs = cells(&[((0, 0), (1, 1)), ((2, 2), (1, 2))]);
        let plans: PlanSet = "rd;wwl".parse().unwrap();
        let out = validate_plan_set(&map, &pairs, &plans, Some(4)).unwrap();
        assert!(!out.valid);
        assert_eq!(out.cost_mismatch, Some(CostMismatch { claimed: 4, computed: 5 }));
        assert!(validate_plan_set(&map, &pairs, &plans, Some(5)).unwrap().valid);
        assert!(validate_plan_set(&map, &pairs, &plans, None).unwrap().valid);
    }

    #[test]
    fn agent_errors_surface() {
        let map = GridMap::open("m", 3, 3);
        let pairs = cells(&[((0, 0), (1, 0)), ((2, 2), (2, 2))]);
        let out = validate_plan_set(&map, &pairs, &"u;".parse().unwrap(), None).unwrap();
        assert_eq!(out.agent_errors, vec![(0, AgentError::Simulation(SimError::OutOfBounds { t: 1 }))]);
        assert_eq!(out.computed_cost, None);
        let out = validate_plan_set(&map, &pairs, &"w;".parse().unwrap(), None).unwrap();
        assert!(matches!(out.agent_errors[0], (0, AgentError::GoalNotReached(_))));
        assert!(!out.valid);
        assert_eq!(
            validate_plan_set(&map, &pairs, &"r".parse().unwrap(), None).unwrap_err(),
            PlanSetError::AgentCountMismatch { pairs: 2, plans: 1 }
        );
    }

    #[test]
    fn start_equals_goal_with_moves() {
        let map = GridMap::open("m", 3, 3);
        let pairs = cells(&[((1, 1), (1, 1))]);
        let out = validate_plan_set(&map, &pairs, &"rl".parse().unwrap(), None).unwrap();
        assert!(out.valid);
        assert_eq!(out.computed_cost, Some(2));
    }
}
