use serde::Serialize;
use thiserror::Error;

use super::Action;
use crate::model::{Cell, GridMap};
use crate::Cost;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimError {
    #[error("start {start} is not a traversable in-bounds cell")]
    StartNotTraversable { start: Cell },
    #[error("moves out of bounds at t={t}")]
    OutOfBounds { t: usize },
    #[error("moves into an obstacle at t={t}")]
    IntoObstacle { t: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize)]
#[error("final position {end} is not the goal {goal}")]
pub struct GoalNotReached {
    pub end: Cell,
    pub goal: Cell,
}

/// Positions at timesteps `0..=T`; position 0 is the start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Path {
    positions: Vec<Cell>,
}

impl Path {
    pub fn new(positions: Vec<Cell>) -> Self {
        assert!(!positions.is_empty(), "a path has at least its start position");
        Self { positions }
    }

    pub fn positions(&self) -> &[Cell] {
        &self.positions
    }

    /// Position at `t`, holding the final position after the path ends.
    pub fn at(&self, t: usize) -> Cell {
        self.positions[t.min(self.positions.len() - 1)]
    }

    pub fn last(&self) -> Cell {
        *self.positions.last().expect("non-empty")
    }

    /// Index of the last timestep, i.e. the number of actions.
    pub fn end_time(&self) -> usize {
        self.positions.len() - 1
    }
}

/// Applies actions from `start`, failing at the first illegal step.
pub fn simulate(map: &GridMap, start: Cell, actions: &[Action]) -> Result<Path, SimError> {
    if !map.is_passable(start) {
        return Err(SimError::StartNotTraversable { start });
    }
    let mut positions = Vec::with_capacity(actions.len() + 1);
    positions.push(start);
    let mut cur = start;
    for (i, a) in actions.iter().enumerate() {
        let t = i + 1;
        let (dx, dy) = a.delta();
        let (nx, ny) = (cur.x as i64 + dx, cur.y as i64 + dy);
        if !map.in_bounds(nx, ny) {
            return Err(SimError::OutOfBounds { t });
        }
        let next = Cell::new(nx as u32, ny as u32);
        if !map.is_passable(next) {
            return Err(SimError::IntoObstacle { t });
        }
        positions.push(next);
        cur = next;
    }
    Ok(Path { positions })
}

/// Smallest `T` such that the agent is at `goal` for every `t >= T`.
pub fn agent_cost(path: &Path, goal: Cell) -> Result<Cost, GoalNotReached> {
    if path.last() != goal {
        return Err(GoalNotReached { end: path.last(), goal });
    }
    let away = path.positions.iter().rposition(|&p| p != goal);
    Ok(away.map_or(0, |t| t as Cost + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::parse_plan;

    fn run(map: &GridMap, start: (u32, u32), plan: &str) -> Result<Path, SimError> {
        simulate(map, Cell::new(start.0, start.1), &parse_plan(plan).unwrap())
    }

    #[test]
    fn straight_moves() {
        let map = GridMap::open("m", 3, 3);
        let p = run(&map, (0, 0), "rrd").unwrap();
        let cells: Vec<_> = [(0, 0), (1, 0), (2, 0), (2, 1)].iter().map(|&(x, y)| Cell::new(x, y)).collect();
        assert_eq!(p.positions(), cells.as_slice());
        assert_eq!(p.at(10), Cell::new(2, 1));
    }

    #[test]
    fn errors_name_first_bad_step() {
        let map = GridMap::open("m", 3, 3);
        assert_eq!(run(&map, (0, 0), "u").unwrap_err(), SimError::OutOfBounds { t: 1 });
        assert_eq!(run(&map, (0, 0), "rrrr").unwrap_err(), SimError::OutOfBounds { t: 3 });
        let walled = GridMap::parse("type octile\nheight 1\nwidth 3\nmap\n.@.").unwrap();
        assert_eq!(run(&walled, (0, 0), "r").unwrap_err(), SimError::IntoObstacle { t: 1 });
        assert!(matches!(run(&walled, (1, 0), "").unwrap_err(), SimError::StartNotTraversable { .. }));
    }

    #[test]
    fn cost_examples() {
        let map = GridMap::open("m", 5, 5);
        let goal = Cell::new(2, 0);
        assert_eq!(agent_cost(&run(&map, (0, 0), "rrww").unwrap(), goal), Ok(2));
        assert_eq!(agent_cost(&run(&map, (0, 0), "wrr").unwrap(), goal), Ok(3));
        assert_eq!(agent_cost(&run(&map, (0, 0), "rrrlw").unwrap(), goal), Ok(4));
        // touches the goal at t=2, leaves, returns at t=5
        assert_eq!(agent_cost(&run(&map, (0, 0), "rrdwu").unwrap(), goal), Ok(5));
        assert_eq!(agent_cost(&run(&map, (2, 0), "").unwrap(), goal), Ok(0));
        assert_eq!(agent_cost(&run(&map, (2, 0), "www").unwrap(), goal), Ok(0));
        assert!(agent_cost(&run(&map, (0, 0), "r").unwrap(), goal).is_err());
    }
}
