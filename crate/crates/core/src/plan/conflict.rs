use serde::Serialize;

use super::Path;
use crate::model::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    Vertex,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(untagged)]
pub enum ConflictLocation {
    Vertex(Cell),
    /// The move of the lower-indexed agent, `from -> to`.
    Edge(Cell, Cell),
}

/// A collision between agents `agents.0 < agents.1` at timestep `time`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub agents: (usize, usize),
    pub time: usize,
    pub location: ConflictLocation,
}

impl Conflict {
    fn sort_key(&self) -> (usize, usize, usize, ConflictKind) {
        (self.time, self.agents.0, self.agents.1, self.kind)
    }
}

impl std::fmt::Display for Conflict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (i, j) = self.agents;
        match self.location {
            ConflictLocation::Vertex(c) => {
                write!(f, "vertex conflict at t={} agents {i},{j} cell {c}", self.time)
            }
            ConflictLocation::Edge(a, b) => {
                write!(f, "edge conflict at t={} agents {i},{j} edge {a}-{b}", self.time)
            }
        }
    }
}

fn key(c: Cell) -> u64 {
    (u64::from(c.y) << 32) | u64::from(c.x)
}

/// All vertex and swap conflicts, with every path padded to the common
/// horizon by holding its final position. Sorted by `(time, i, j)`.
pub fn find_conflicts(paths: &[Path]) -> Vec<Conflict> {
    let horizon = paths.iter().map(Path::end_time).max().unwrap_or(0);
    let mut conflicts = Vec::new();
    let mut occupancy: Vec<(u64, usize)> = Vec::with_capacity(paths.len());
    let mut moves: Vec<(u64, u64, usize)> = Vec::new();

    for t in 0..=horizon {
        occupancy.clear();
        occupancy.extend(paths.iter().enumerate().map(|(a, p)| (key(p.at(t)), a)));
        occupancy.sort_unstable();
        for run in occupancy.chunk_by(|a, b| a.0 == b.0) {
            for (n, &(_, i)) in run.iter().enumerate() {
                for &(_, j) in &run[n + 1..] {
                    conflicts.push(Conflict {
                        kind: ConflictKind::Vertex,
                        agents: (i, j),
                        time: t,
                        location: ConflictLocation::Vertex(paths[i].at(t)),
                    });
                }
            }
        }

        if t == 0 {
            continue;
        }
        moves.clear();
        for (a, p) in paths.iter().enumerate() {
            if t > p.end_time() {
                continue;
            }
            let (from, to) = (p.at(t - 1), p.at(t));
            if from != to {
                moves.push((key(from), key(to), a));
            }
        }
        moves.sort_unstable();
        for &(from, to, i) in &moves {
            // each swapped pair is reported once, from the lower-indexed agent
            let start = moves.partition_point(|m| (m.0, m.1) < (to, from));
            for &(_, _, j) in moves[start..].iter().take_while(|m| (m.0, m.1) == (to, from)) {
                if i < j {
                    conflicts.push(Conflict {
                        kind: ConflictKind::Edge,
                        agents: (i, j),
                        time: t,
                        location: ConflictLocation::Edge(paths[i].at(t - 1), paths[i].at(t)),
                    });
                }
            }
        }
    }
    conflicts.sort_by_key(Conflict::sort_key);
    conflicts
}
