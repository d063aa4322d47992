use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Cell, GridMap};
use crate::Cost;

/// Distance marker for cells not reachable from the source.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistanceError {
    #[error("endpoint {0} is not a traversable cell")]
    NonTraversableEndpoint(Cell),
    #[error("agent {agent}: goal {goal} unreachable from start {start}")]
    UnreachablePair { agent: usize, start: Cell, goal: Cell },
}

/// 4-connected breadth-first distances from one source cell.
#[derive(Debug, Clone)]
pub struct DistanceField {
    source: Cell,
    width: u32,
    dist: Vec<u32>,
}

impl DistanceField {
    pub fn compute(map: &GridMap, source: Cell) -> Result<Self, DistanceError> {
        if !map.is_passable(source) {
            return Err(DistanceError::NonTraversableEndpoint(source));
        }
        let mut dist = vec![UNREACHABLE; map.num_cells()];
        bfs_into(map, map.index(source), &mut dist, &mut VecDeque::new());
        Ok(Self { source, width: map.width(), dist })
    }

    pub fn source(&self) -> Cell {
        self.source
    }

    /// Distance to `c`, `None` if unreachable or off the map.
    pub fn get(&self, c: Cell) -> Option<u32> {
        if c.x >= self.width {
            return None;
        }
        let i = c.y as usize * self.width as usize + c.x as usize;
        self.dist.get(i).copied().filter(|&d| d != UNREACHABLE)
    }

    pub fn raw(&self) -> &[u32] {
        &self.dist
    }
}

pub(crate) fn bfs_into(map: &GridMap, source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
    dist.fill(UNREACHABLE);
    queue.clear();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        for v in map.neighbours(u) {
            if dist[v] == UNREACHABLE {
                dist[v] = du + 1;
                queue.push_back(v);
            }
        }
    }
}

/// Exact 4-connected distance; `Ok(None)` when `g` is unreachable from `s`.
pub fn shortest_path_dist(map: &GridMap, s: Cell, g: Cell) -> Result<Option<u32>, DistanceError> {
    for c in [s, g] {
        if !map.is_passable(c) {
            return Err(DistanceError::NonTraversableEndpoint(c));
        }
    }
    if s == g {
        return Ok(Some(0));
    }
    let target = map.index(g);
    let mut dist = vec![UNREACHABLE; map.num_cells()];
    let mut queue = VecDeque::new();
    dist[map.index(s)] = 0;
    queue.push_back(map.index(s));
    while let Some(u) = queue.pop_front() {
        for v in map.neighbours(u) {
            if dist[v] == UNREACHABLE {
                dist[v] = dist[u] + 1;
                if v == target {
                    return Ok(Some(dist[v]));
                }
                queue.push_back(v);
            }
        }
    }
    Ok(None)
}

/// Sum of individual shortest-path distances, with the per-agent terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LowerBound {
    pub total: Cost,
    pub per_agent: Vec<u32>,
}

/// The trivial lower bound: every agent follows a shortest path while
/// ignoring the others.
pub fn trivial_lower_bound(map: &GridMap, pairs: &[(Cell, Cell)]) -> Result<LowerBound, DistanceError> {
    let mut fields: HashMap<Cell, DistanceField> = HashMap::new();
    let mut per_agent = Vec::with_capacity(pairs.len());
    for (agent, &(start, goal)) in pairs.iter().enumerate() {
        if !map.is_passable(start) {
            return Err(DistanceError::NonTraversableEndpoint(start));
        }
        let field = match fields.entry(goal) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => e.insert(DistanceField::compute(map, goal)?),
        };
        let d = field.get(start).ok_or(DistanceError::UnreachablePair { agent, start, goal })?;
        per_agent.push(d);
    }
    Ok(LowerBound { total: per_agent.iter().map(|&d| Cost::from(d)).sum(), per_agent })
}

/// Connected components of traversable cells as `(label per cell, sizes)`;
/// blocked cells are labelled `usize::MAX`.
pub(crate) fn components(map: &GridMap) -> (Vec<usize>, Vec<usize>) {
    let mut label = vec![usize::MAX; map.num_cells()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..map.num_cells() {
        if !map.passable_flags()[start] || label[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        label[start] = id;
        stack.push(start);
        while let Some(u) = stack.pop() {
            size += 1;
            for v in map.neighbours(u) {
                if label[v] == usize::MAX {
                    label[v] = id;
                    stack.push(v);
                }
            }
        }
        sizes.push(size);
    }
    (label, sizes)
}

/// Maximum shortest-path distance between two traversable cells of the
/// largest connected component (the first one in row-major order on ties).
pub fn map_diameter(map: &GridMap) -> u32 {
    let (label, sizes) = components(map);
    let Some(largest) = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(id, _)| id)
    else {
        return 0;
    };
    let sources: Vec<usize> = (0..map.num_cells()).filter(|&i| label[i] == largest).collect();
    sources
        .par_iter()
        .map_init(
            || (vec![UNREACHABLE; map.num_cells()], VecDeque::new()),
            |(dist, queue), &s| {
                bfs_into(map, s, dist, queue);
                dist.iter().filter(|&&d| d != UNREACHABLE).copied().max().unwrap_or(0)
            },
        )
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> GridMap {
        let text = format!(
            "type octile\nheight {}\nwidth {}\nmap\n{}\n",
            rows.len(),
            rows[0].len(),
            rows.join("\n")
        );
        GridMap::parse(&text).unwrap()
    }

    /// Exhaustive relaxation over all cells; independent of the queue-based search.
    fn relax_all_pairs(map: &GridMap) -> Vec<Vec<u32>> {
        let n = map.num_cells();
        let mut d = vec![vec![UNREACHABLE; n]; n];
        for i in 0..n {
            if map.passable_flags()[i] {
                d[i][i] = 0;
            }
        }
        loop {
            let mut changed = false;
            for i in 0..n {
                for u in 0..n {
                    if d[i][u] == UNREACHABLE {
                        continue;
                    }
                    let (ux, uy) = (u % map.width() as usize, u / map.width() as usize);
                    for v in 0..n {
                        let (vx, vy) = (v % map.width() as usize, v / map.width() as usize);
                        let adjacent = ux.abs_diff(vx) + uy.abs_diff(vy) == 1;
                        if adjacent && map.passable_flags()[v] && d[i][u] + 1 < d[i][v] {
                            d[i][v] = d[i][u] + 1;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return d;
            }
        }
    }

    #[test]
    fn open_grid_distances() {
        let m = GridMap::open("m", 5, 5);
        assert_eq!(shortest_path_dist(&m, Cell::new(0, 0), Cell::new(3, 0)), Ok(Some(3)));
        assert_eq!(shortest_path_dist(&m, Cell::new(2, 2), Cell::new(2, 2)), Ok(Some(0)));
    }

    #[test]
    fn detour_around_wall() {
        // middle column blocked except the bottom cell
        let m = grid(&[".@.", ".@.", "..."]);
        let brute = relax_all_pairs(&m);
        assert_eq!(brute[m.index(Cell::new(0, 0))][m.index(Cell::new(2, 0))], 6);
        assert_eq!(shortest_path_dist(&m, Cell::new(0, 0), Cell::new(2, 0)), Ok(Some(6)));
    }

    #[test]
    fn unreachable_and_blocked() {
        let m = grid(&[".@."]);
        assert_eq!(shortest_path_dist(&m, Cell::new(0, 0), Cell::new(2, 0)), Ok(None));
        assert_eq!(
            shortest_path_dist(&m, Cell::new(1, 0), Cell::new(2, 0)),
            Err(DistanceError::NonTraversableEndpoint(Cell::new(1, 0)))
        );
        let pairs = [(Cell::new(0, 0), Cell::new(0, 0)), (Cell::new(0, 0), Cell::new(2, 0))];
        assert!(matches!(
            trivial_lower_bound(&m, &pairs),
            Err(DistanceError::UnreachablePair { agent: 1, .. })
        ));
    }

    #[test]
    fn trivial_bound_sums() {
        let m = GridMap::open("m", 8, 8);
        let pairs = [(Cell::new(0, 0), Cell::new(3, 0)), (Cell::new(0, 1), Cell::new(2, 4))];
        let lb = trivial_lower_bound(&m, &pairs).unwrap();
        assert_eq!(lb.per_agent, vec![3, 5]);
        assert_eq!(lb.total, 8);
        let still = [(Cell::new(1, 1), Cell::new(1, 1)), (Cell::new(2, 2), Cell::new(2, 2))];
        assert_eq!(trivial_lower_bound(&m, &still).unwrap().total, 0);
    }

    #[test]
    fn diameters() {
        assert_eq!(map_diameter(&GridMap::open("m", 2, 2)), 2);
        assert_eq!(map_diameter(&grid(&["@@", "@."])), 0);
        // S-shaped corridor through a 4x4 grid
        let s = grid(&["....", "@@@.", "....", ".@@@"]);
        let brute = relax_all_pairs(&s);
        let expected = brute.iter().flatten().filter(|&&d| d != UNREACHABLE).max().copied().unwrap();
        assert_eq!(expected, 9);
        assert_eq!(map_diameter(&s), expected);
    }

    #[test]
    fn diameter_uses_largest_component() {
        // left: a 5-cell corridor with diameter 4; right: a 3x2 block of 6 cells with diameter 3
        let m = grid(&[".@...", ".@...", ".@@@@", ".@@@@", ".@@@@"]);
        let (_, sizes) = components(&m);
        assert_eq!(sizes, vec![5, 6]);
        assert_eq!(map_diameter(&m), 3);
    }

    #[test]
    fn bfs_matches_brute_force_on_random_maps() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let (w, h) = (rng.gen_range(1..7u32), rng.gen_range(1..7u32));
            let mut cells: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.7)).collect();
            cells[0] = true;
            let m = GridMap::from_cells("r", w, h, cells).unwrap();
            let brute = relax_all_pairs(&m);
            for s in m.traversable_cells() {
                let f = DistanceField::compute(&m, s).unwrap();
                for g in m.traversable_cells() {
                    let b = brute[m.index(s)][m.index(g)];
                    assert_eq!(f.get(g), (b != UNREACHABLE).then_some(b));
                    assert_eq!(shortest_path_dist(&m, s, g).unwrap(), shortest_path_dist(&m, g, s).unwrap());
                }
            }
        }
    }
}
