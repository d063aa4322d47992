use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::map::Cell;
use super::scenario::{ScenKind, Scenario, ScenarioId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("agent count {requested} out of range 1..={available}")]
    AgentCountOutOfRange { requested: usize, available: usize },
}

/// A benchmark instance: the first `agents` entries of one scenario.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InstanceId {
    pub map_name: String,
    pub scen_kind: ScenKind,
    pub scen_index: u32,
    pub agents: u32,
}

impl InstanceId {
    pub fn new(scenario: &ScenarioId, agents: u32) -> Self {
        Self {
            map_name: scenario.map_name.clone(),
            scen_kind: scenario.kind,
            scen_index: scenario.index,
            agents,
        }
    }

    pub fn scenario(&self) -> ScenarioId {
        ScenarioId::new(self.map_name.clone(), self.scen_kind, self.scen_index)
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}-{}/{}", self.map_name, self.scen_kind, self.scen_index, self.agents)
    }
}

/// Start/goal pairs of the first `n` scenario entries.
pub fn instance_agents(s: &Scenario, n: usize) -> Result<Vec<(Cell, Cell)>, InstanceError> {
    if n == 0 || n > s.entries.len() {
        return Err(InstanceError::AgentCountOutOfRange {
            requested: n,
            available: s.entries.len(),
        });
    }
    Ok(s.pairs().take(n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScenEntry;
    use proptest::prelude::*;

    fn scenario(n: u32) -> Scenario {
        let entries = (0..n)
            .map(|i| ScenEntry {
                bucket: 0,
                map_file: "m.map".into(),
                map_width: 64,
                map_height: 64,
                start: Cell::new(i, 0),
                goal: Cell::new(i, 1),
                ref_distance: 1.0,
            })
            .collect();
        Scenario { id: ScenarioId::new("m", ScenKind::Even, 1), entries }
    }

    #[test]
    fn prefixes() {
        let s = scenario(5);
        assert_eq!(instance_agents(&s, 1).unwrap(), vec![(Cell::new(0, 0), Cell::new(0, 1))]);
        assert_eq!(instance_agents(&s, 5).unwrap().len(), 5);
        assert_eq!(
            instance_agents(&s, 6).unwrap_err(),
            InstanceError::AgentCountOutOfRange { requested: 6, available: 5 }
        );
        assert!(instance_agents(&s, 0).is_err());
    }

    #[test]
    fn display() {
        let id = InstanceId::new(&ScenarioId::new("orz900d", ScenKind::Even, 1), 4119);
        assert_eq!(id.to_string(), "orz900d/even-1/4119");
        assert_eq!(id.scenario().label(), "even-1");
    }

    proptest! {
        #[test]
        fn prefix_property(len in 2u32..50, n in 1usize..49) {
            prop_assume!(n < len as usize);
            let s = scenario(len);
            let a = instance_agents(&s, n).unwrap();
            let b = instance_agents(&s, n + 1).unwrap();
            prop_assert_eq!(&b[..n], &a[..]);
        }
    }
}
