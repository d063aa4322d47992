use std::collections::BTreeMap;

use chrono::DateTime;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tracker_core::bounds::{generate_random_scenario, trivial_lower_bound};
use tracker_core::model::{default_manifest, Domain, GridMap, InstanceId, ScenKind, ScenarioId};
use tracker_core::plan::PlanSet;
use tracker_core::tracking::{
    import_instance_states, summarize, AlgoCriterion, AlgorithmMeta, Benchmark, BatchId, Contribution, ExportLevel,
    GroupBy, InstanceState, ProgressSummary, Scope, SeriesMetric, Store, Tracker,
};
use tracker_core::Cost;

/// Three maps over two domains, four random scenarios each of 12 agents.
fn tracker() -> Tracker {
    let mut b = Benchmark::new(default_manifest());
    for (i, (name, side)) in [("empty-8-8", 8), ("empty-16-16", 16), ("room-32-32-4", 32)].into_iter().enumerate() {
        let map = GridMap::open(name, side, side);
        b.add_map(map.clone());
        for index in 1..=4 {
            let mut s = generate_random_scenario(&map, 12, u64::from(index) * 31 + i as u64).unwrap();
            s.id = ScenarioId::new(name, ScenKind::Random, index);
            b.add_scenario(s).unwrap();
        }
    }
    Tracker::new(b, Store::in_memory())
}

fn contribution(batch: &str, alg: &str, id: &InstanceId, lb: Option<Cost>, cost: Option<Cost>) -> Contribution {
    Contribution {
        batch_id: batch.into(),
        algorithm: alg.into(),
        instance: id.clone(),
        lower_bound: lb,
        cost,
        plan: cost.map(|_| PlanSet::new(vec![Vec::new(); id.agents as usize])),
    }
}

fn register(t: &mut Tracker, batch: &str, alg: &str) {
    t.store
        .transact(|txn| txn.register_batch(batch.into(), AlgorithmMeta::named(alg), DateTime::UNIX_EPOCH))
        .unwrap();
}

/// Random bounds on about two thirds of all instances.
fn populate(t: &mut Tracker, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    register(t, "b1", "A");
    let ids: Vec<InstanceId> = t
        .benchmark
        .scenarios()
        .flat_map(|s| (1..=s.len() as u32).map(move |k| InstanceId::new(&s.id, k)))
        .collect();
    t.store
        .transact(|txn| {
            for id in &ids {
                let lb = 10 * u64::from(id.agents);
                let c = match rng.gen_range(0..3) {
                    0 => contribution("b1", "A", id, Some(lb), Some(lb)),
                    1 => contribution("b1", "A", id, Some(lb), Some(lb + rng.gen_range(1..5))),
                    _ => continue,
                };
                assert!(txn.contribute(c)?.is_none());
            }
            Ok::<_, tracker_core::tracking::StoreError>(())
        })
        .unwrap();
}

#[test]
fn summaries_are_additive_over_groups() {
    let mut t = tracker();
    populate(&mut t, 7);
    let all: ProgressSummary<Ratio<i64>> = t.progress_summary(&Scope::all()).unwrap();
    assert_eq!(all.total, 3 * 4 * 12);
    assert_eq!(all.closed_pct + all.solved_pct + all.unknown_pct, Ratio::from_integer(100));
    for by in [GroupBy::Domain, GroupBy::Map, GroupBy::Scenario] {
        let parts: Vec<ProgressSummary<f64>> = t.progress_grouped(&Scope::all(), by).unwrap();
        let sum = |f: fn(&ProgressSummary<f64>) -> u64| parts.iter().map(f).sum::<u64>();
        assert_eq!(sum(|p| p.total), all.total, "{by:?}");
        assert_eq!(sum(|p| p.closed), all.closed, "{by:?}");
        assert_eq!(sum(|p| p.solved), all.solved, "{by:?}");
        assert_eq!(sum(|p| p.unknown), all.unknown, "{by:?}");
        for p in &parts {
            assert!((p.closed_pct + p.solved_pct + p.unknown_pct - 100.0).abs() < 1e-9);
        }
    }
    let open: ProgressSummary<f64> = t.progress_summary(&Scope::domain(Domain::Open)).unwrap();
    assert_eq!(open.total, 2 * 4 * 12);
}

#[test]
fn agent_range_scopes_partition_the_scenario() {
    let mut t = tracker();
    populate(&mut t, 3);
    let id = ScenarioId::new("empty-16-16", ScenKind::Random, 2);
    let whole: ProgressSummary<f64> = t.progress_summary(&Scope::scenario(&id)).unwrap();
    let lo: ProgressSummary<f64> = t.progress_summary(&Scope::scenario(&id).with_agents(1, 5)).unwrap();
    let hi: ProgressSummary<f64> = t.progress_summary(&Scope::scenario(&id).with_agents(6, 12)).unwrap();
    assert_eq!((lo.total + hi.total, lo.closed + hi.closed), (whole.total, whole.closed));
}

#[test]
fn instance_export_round_trips_to_the_same_summaries() {
    let mut t = tracker();
    populate(&mut t, 11);
    let table = t.export_results(&Scope::all(), ExportLevel::Instance).unwrap();
    assert_eq!(table.rows.len(), 144);
    let states = import_instance_states(&table.to_csv()).unwrap();
    assert_eq!(states.len(), 144);
    for scope in [Scope::all(), Scope::domain(Domain::Room), Scope::map("empty-8-8")] {
        let direct: ProgressSummary<f64> = t.progress_summary(&scope).unwrap();
        let imported: ProgressSummary<f64> = summarize(&t.benchmark, &scope, &states).unwrap();
        assert_eq!(direct, imported, "{scope}");
    }
    for level in [ExportLevel::Scenario, ExportLevel::Map, ExportLevel::Domain] {
        let table = t.export_results(&Scope::all(), level).unwrap();
        let totals: u64 = table.rows.iter().map(|r| r[table.header.iter().position(|h| h == "total").unwrap()].parse::<u64>().unwrap()).sum();
        assert_eq!(totals, 144, "{level:?}");
    }
}

#[test]
fn paging_covers_every_instance_once() {
    let mut t = tracker();
    populate(&mut t, 5);
    let (total, all) = t.instance_rows(&Scope::all(), 0, None).unwrap();
    assert_eq!(total, 144);
    let mut paged = Vec::new();
    for offset in (0..total).step_by(25) {
        let (_, rows) = t.instance_rows(&Scope::all(), offset, Some(25)).unwrap();
        paged.extend(rows);
    }
    assert_eq!(paged, all);
    assert!(all.iter().any(|r| r.state == InstanceState::Unknown));
}

#[test]
fn ties_credit_every_holder_in_any_order() {
    let id = InstanceId::new(&ScenarioId::new("empty-8-8", ScenKind::Random, 1), 3);
    let batches = [("x", "X"), ("y", "Y"), ("z", "Z")];
    let mut orders: Vec<Vec<usize>> = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                if a != b && b != c && a != c {
                    orders.push(vec![a, b, c]);
                }
            }
        }
    }
    let mut texts = Vec::new();
    for order in orders {
        let mut t = tracker();
        for &i in &order {
            let (b, a) = batches[i];
            register(&mut t, b, a);
            t.store
                .transact(|txn| txn.contribute(contribution(b, a, &id, Some(30), Some(30))))
                .unwrap();
        }
        let metrics = t.algorithm_comparison(&Scope::all(), false).unwrap();
        for (_, a) in batches {
            assert_eq!((metrics[a].closed, metrics[a].best_lower_bound, metrics[a].best_solution), (1, 1, 1));
        }
        let rec = t.store.record(&id).unwrap();
        let (lb, cost) = rec.bests();
        let (lb, cost) = (lb.unwrap(), cost.unwrap());
        texts.push(format!("{} {:?} {} {:?}", lb.value, lb.holders, cost.value, cost.holders));
    }
    texts.dedup();
    assert_eq!(texts, vec!["30 {\"X\", \"Y\", \"Z\"} 30 {\"X\", \"Y\", \"Z\"}".to_string()]);
}

#[test]
fn comparison_series_per_agent_count() {
    let mut t = tracker();
    populate(&mut t, 9);
    let points = t
        .comparison_series::<f64>(&Scope::map("empty-8-8"), AlgoCriterion::Closed, None)
        .unwrap();
    let series = &points["A"];
    let closed = t.series::<f64>(&Scope::map("empty-8-8"), &SeriesMetric::State(InstanceState::Closed)).unwrap();
    let counts: Vec<u64> = series.iter().map(|p| p.count).collect();
    assert_eq!(counts, closed.iter().map(|p| p.count).collect::<Vec<_>>());
    assert!(series.iter().all(|p| p.instances == 4));
    assert!(t
        .comparison_series::<f64>(&Scope::all(), AlgoCriterion::Solved, Some(&["nobody".to_string()]))
        .is_err());
}

#[test]
fn suboptimality_falls_back_to_the_trivial_bound() {
    let mut t = tracker();
    let id = ScenarioId::new("empty-16-16", ScenKind::Random, 1);
    register(&mut t, "s", "S");
    let scen = t.benchmark.scenario(&id).unwrap().clone();
    let map = t.benchmark.map("empty-16-16").unwrap().clone();
    let pairs: Vec<_> = scen.pairs().collect();
    let trivial = |k: usize| trivial_lower_bound(&map, &pairs[..k]).unwrap().total;
    t.store
        .transact(|txn| {
            let k3 = InstanceId::new(&id, 3);
            let k5 = InstanceId::new(&id, 5);
            txn.contribute(contribution("s", "S", &k3, None, Some(trivial(3) + 4)))?;
            txn.contribute(contribution("s", "S", &k5, Some(trivial(5) + 1), Some(trivial(5) + 2)))
        })
        .unwrap();
    let points = t.suboptimality_series::<Ratio<i64>>(&id).unwrap();
    let by_agents: BTreeMap<u32, _> = points.iter().map(|p| (p.agents, p)).collect();
    assert_eq!(by_agents.len(), 2);
    let p3 = by_agents[&3];
    assert!(p3.trivial_lower_bound);
    assert_eq!(p3.lower_bound, trivial(3));
    assert_eq!(p3.ratio, Ratio::new(4, trivial(3) as i64));
    let p5 = by_agents[&5];
    assert!(!p5.trivial_lower_bound);
    assert_eq!(p5.ratio, Ratio::new(1, trivial(5) as i64 + 1));
}

#[test]
fn revoking_restores_the_next_best_bound() {
    let mut t = tracker();
    let id = InstanceId::new(&ScenarioId::new("empty-8-8", ScenKind::Random, 4), 2);
    register(&mut t, "lo", "Low");
    register(&mut t, "hi", "High");
    t.store
        .transact(|txn| {
            txn.contribute(contribution("lo", "Low", &id, Some(4), None))?;
            txn.contribute(contribution("hi", "High", &id, Some(9), None))
        })
        .unwrap();
    assert_eq!(t.store.record(&id).unwrap().lower_bound(), Some(9));
    let affected = t.store.revoke_batch_lower_bounds(&BatchId::from("hi"), "manual").unwrap();
    assert_eq!(affected, vec![id.clone()]);
    let rec = t.store.record(&id).unwrap();
    assert_eq!(rec.lower_bound(), Some(4));
    assert!(rec.holds_best_lb("Low") && !rec.holds_best_lb("High"));
    assert_eq!(rec.classify(), InstanceState::Unknown);

    // the revoked batch's later bounds are void too
    let other = InstanceId::new(&ScenarioId::new("empty-8-8", ScenKind::Random, 4), 3);
    t.store.transact(|txn| txn.contribute(contribution("hi", "High", &other, Some(12), None))).unwrap();
    assert_eq!(t.store.record(&other).map(|r| r.lower_bound()), Some(None));
}

#[test]
fn shuffled_commit_order_gives_the_same_bests() {
    let id = |k| InstanceId::new(&ScenarioId::new("empty-8-8", ScenKind::Random, 1), k);
    let items: Vec<(&str, &str, u32, Option<Cost>, Option<Cost>)> = vec![
        ("a", "A", 1, Some(3), Some(3)),
        ("b", "B", 1, Some(2), Some(3)),
        ("a", "A", 2, Some(6), Some(9)),
        ("b", "B", 2, Some(7), Some(8)),
        ("c", "C", 2, None, Some(8)),
        ("c", "C", 3, Some(11), None),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut reference: Option<String> = None;
    for _ in 0..20 {
        let mut order = items.clone();
        order.shuffle(&mut rng);
        let mut t = tracker();
        for b in ["a", "b", "c"] {
            register(&mut t, b, &b.to_uppercase());
        }
        for (b, a, k, lb, cost) in order {
            t.store.transact(|txn| txn.contribute(contribution(b, a, &id(k), lb, cost))).unwrap();
        }
        let mut text = t.store.bests_text();
        for k in 1..=3 {
            if let Some(c) = t.store.record(&id(k)).and_then(|r| r.best_cost.as_ref()) {
                text = text.replace(&format!("\"plan_batch\":\"{}\"", c.plan_batch.0), "\"plan_batch\":\"?\"");
            }
        }
        match &reference {
            None => reference = Some(text),
            Some(r) => assert_eq!(r, &text),
        }
    }
}
