//! Plan strings, motion simulation, collision detection and plan-set
//! validation.
//!
//! Semantics follow classical MAPF: unit-cost moves and waits on a
//! 4-connected grid, agents stay on their goal after their plan ends, and
//! only vertex and swap conflicts are forbidden (following an agent into a
//! cell it vacates in the same step is allowed).

mod conflict;
mod path;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conflict::{find_conflicts, Conflict, ConflictKind, ConflictLocation};
pub use path::{agent_cost, simulate, GoalNotReached, Path, SimError};
pub use validate::{
    validate_plan_set, AgentError, CostMismatch, PlanSetError, ValidationOutcome,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanParseError {
    #[error("illegal plan character {found:?} at index {index}")]
    IllegalCharacter { index: usize, found: char },
}

/// One unit-time action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Wait,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Wait];

    /// Column/row displacement; up decreases the row index.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
            Action::Wait => (0, 0),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Action::Up => 'u',
            Action::Down => 'd',
            Action::Left => 'l',
            Action::Right => 'r',
            Action::Wait => 'w',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_lowercase() {
            'u' => Some(Action::Up),
            'd' => Some(Action::Down),
            'l' => Some(Action::Left),
            'r' => Some(Action::Right),
            'w' => Some(Action::Wait),
            _ => None,
        }
    }
}

/// Parses a single agent's plan string (case-insensitive).
pub fn parse_plan(text: &str) -> Result<Vec<Action>, PlanParseError> {
    text.chars()
        .enumerate()
        .map(|(index, c)| {
            Action::from_char(c).ok_or(PlanParseError::IllegalCharacter { index, found: c })
        })
        .collect()
}

/// Canonical lowercase form of an action sequence.
pub fn plan_to_string(actions: &[Action]) -> String {
    actions.iter().map(|a| a.to_char()).collect()
}

/// Per-agent action sequences in scenario-entry order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PlanSet {
    plans: Vec<Vec<Action>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("agent {agent}: {source}")]
pub struct PlanFieldError {
    pub agent: usize,
    #[source]
    pub source: PlanParseError,
}

impl PlanSet {
    pub fn new(plans: Vec<Vec<Action>>) -> Self {
        Self { plans }
    }

    /// Parses the multi-agent plan field: agent strings joined by `;`.
    pub fn parse_field(field: &str) -> Result<Self, PlanFieldError> {
        let plans = field
            .split(';')
            .enumerate()
            .map(|(agent, s)| parse_plan(s.trim()).map_err(|source| PlanFieldError { agent, source }))
            .collect::<Result<_, _>>()?;
        Ok(Self { plans })
    }

    pub fn to_field(&self) -> String {
        self.plans.iter().map(|p| plan_to_string(p)).collect::<Vec<_>>().join(";")
    }

    pub fn plans(&self) -> &[Vec<Action>] {
        &self.plans
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    /// Longest sequence length.
    pub fn horizon(&self) -> usize {
        self.plans.iter().map(Vec::len).max().unwrap_or(0)
    }
}

impl FromStr for PlanSet {
    type Err = PlanFieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_field(s)
    }
}

impl fmt::Display for PlanSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_field())
    }
}

impl Serialize for PlanSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_field())
    }
}

impl<'de> Deserialize<'de> for PlanSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_udlrw() {
        assert_eq!(
            parse_plan("udlrw").unwrap(),
            vec![Action::Up, Action::Down, Action::Left, Action::Right, Action::Wait]
        );
        assert_eq!(parse_plan("").unwrap(), vec![]);
        assert_eq!(
            parse_plan("ux").unwrap_err(),
            PlanParseError::IllegalCharacter { index: 1, found: 'x' }
        );
        assert_eq!(plan_to_string(&parse_plan("UdLrW").unwrap()), "udlrw");
    }

    #[test]
    fn field_round_trip() {
        let p = PlanSet::parse_field("rr;dd;;w").unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.horizon(), 2);
        assert_eq!(p.to_field(), "rr;dd;;w");
        let err = PlanSet::parse_field("rr;dx").unwrap_err();
        assert_eq!(err.agent, 1);
    }

    proptest! {
        #[test]
        fn canonical_round_trip(s in "[udlrw]{0,40}") {
            prop_assert_eq!(plan_to_string(&parse_plan(&s).unwrap()), s);
        }

        #[test]
        fn case_insensitive(s in "[udlrwUDLRW]{0,40}") {
            prop_assert_eq!(plan_to_string(&parse_plan(&s).unwrap()), s.to_lowercase());
        }
    }
}
