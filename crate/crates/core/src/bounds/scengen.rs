use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::distance::{bfs_into, components, map_diameter, UNREACHABLE};
use crate::model::{Cell, GridMap, ScenEntry, ScenKind, Scenario, ScenarioId};

/// Start/goal pairs per distance bucket of an even scenario.
pub const PAIRS_PER_BUCKET: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenGenError {
    #[error("bucket {bucket} has only {found} qualifying pairs, needs {PAIRS_PER_BUCKET}")]
    BucketUnsatisfiable { bucket: u32, found: usize },
    #[error("{requested} agents requested but the map has {available} traversable cells")]
    NotEnoughCells { requested: usize, available: usize },
}

/// Number of buckets for a map of diameter `d_max`: `floor(d_max / 4) + 1`.
pub fn bucket_count(d_max: u32) -> u32 {
    d_max / 4 + 1
}

fn entry(map: &GridMap, bucket: u32, start: Cell, goal: Cell, dist: u32) -> ScenEntry {
    ScenEntry {
        bucket,
        map_file: format!("{}.map", map.name()),
        map_width: map.width(),
        map_height: map.height(),
        start,
        goal,
        ref_distance: f64::from(dist),
    }
}

/// Generates an even scenario: bucket `i` holds [`PAIRS_PER_BUCKET`] pairs
/// whose distance `d` satisfies `4i <= d <= 4i + 4`.
///
/// Starts are pairwise distinct and goals are pairwise distinct across the
/// whole scenario, and `start != goal`. Buckets are filled from the farthest
/// down, and entries are written in bucket order. For each bucket, candidate starts are
/// visited in a seeded random order and each accepted start takes a goal drawn
/// uniformly from its unused qualifying goals. The returned scenario has
/// index 1; callers renumber it.
pub fn generate_even_scenario(map: &GridMap, seed: u64) -> Result<Scenario, ScenGenError> {
    let buckets = bucket_count(map_diameter(map));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<usize> = (0..map.num_cells()).filter(|&i| map.passable_flags()[i]).collect();
    let mut used_start = vec![false; map.num_cells()];
    let mut used_goal = vec![false; map.num_cells()];
    let mut dist = vec![UNREACHABLE; map.num_cells()];
    let mut queue = VecDeque::new();
    let mut entries = Vec::with_capacity(buckets as usize * PAIRS_PER_BUCKET);

    // far buckets have the fewest candidates, so they pick first
    for bucket in (0..buckets).rev() {
        let (lo, hi) = (4 * bucket, 4 * bucket + 4);
        let mut order = cells.clone();
        order.shuffle(&mut rng);
        let mut found = 0;
        for &s in &order {
            if found == PAIRS_PER_BUCKET {
                break;
            }
            if used_start[s] {
                continue;
            }
            bfs_into(map, s, &mut dist, &mut queue);
            let goals: Vec<usize> = cells
                .iter()
                .copied()
                .filter(|&g| g != s && !used_goal[g] && (lo..=hi).contains(&dist[g]))
                .collect();
            if goals.is_empty() {
                continue;
            }
            let g = goals[rng.gen_range(0..goals.len())];
            used_start[s] = true;
            used_goal[g] = true;
            entries.push(entry(map, bucket, map.cell_at(s), map.cell_at(g), dist[g]));
            found += 1;
        }
        if found < PAIRS_PER_BUCKET {
            return Err(ScenGenError::BucketUnsatisfiable { bucket, found });
        }
    }
    entries.sort_by_key(|e| e.bucket);
    Ok(Scenario { id: ScenarioId::new(map.name(), ScenKind::Even, 1), entries })
}

/// Generates a random scenario of `n` agents with pairwise-distinct starts,
/// pairwise-distinct goals, and every goal reachable from its start.
pub fn generate_random_scenario(map: &GridMap, n: usize, seed: u64) -> Result<Scenario, ScenGenError> {
    let available = map.traversable_count();
    if n > available {
        return Err(ScenGenError::NotEnoughCells { requested: n, available });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (label, sizes) = components(map);
    let mut cells: Vec<usize> = (0..map.num_cells()).filter(|&i| map.passable_flags()[i]).collect();
    cells.shuffle(&mut rng);
    let starts = &cells[..n];

    let mut goal_pools: Vec<Vec<usize>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    let mut pool_order = cells.clone();
    pool_order.shuffle(&mut rng);
    for &c in &pool_order {
        goal_pools[label[c]].push(c);
    }

    let mut dist = vec![UNREACHABLE; map.num_cells()];
    let mut queue = VecDeque::new();
    let mut entries = Vec::with_capacity(n);
    for &s in starts {
        let g = goal_pools[label[s]].pop().expect("a component has as many goals as starts");
        bfs_into(map, s, &mut dist, &mut queue);
        entries.push(entry(map, 0, map.cell_at(s), map.cell_at(g), dist[g]));
    }
    Ok(Scenario { id: ScenarioId::new(map.name(), ScenKind::Random, 1), entries })
}
