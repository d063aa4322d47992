use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::json;

use tracker_api::{ApiConfig, AppState};
use tracker_core::bounds::{generate_even_scenario, generate_random_scenario, trivial_lower_bound, DistanceError};
use tracker_core::ingest::{ingest_batch, RawBatchFile, RowOutcome};
use tracker_core::model::{parse_scenario, Cell, Domain, GridMap, ScenKind, Scenario, ScenarioId};
use tracker_core::plan::{validate_plan_set, PlanSet};
use tracker_core::runner::{run_scenario, Failure as RunFailure, ProcessSolver, RunnerPolicy, SolverAdapter};
use tracker_core::tracking::{Benchmark, ExportLevel, GroupBy, ProgressSummary, Scope, Store, Tracker, TrackingError};

use crate::output::{opt, Format, Rendered};
use crate::{Failure, Instance, ScopeArgs, Tracked};

type Outcome = Result<Option<Rendered>, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("map").to_string()
}

fn load_map(path: &Path) -> Result<GridMap, Failure> {
    GridMap::parse(&read(path)?)
        .map(|m| m.with_name(stem(path)))
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_instance(i: &Instance) -> Result<(GridMap, Vec<(Cell, Cell)>), Failure> {
    let map = load_map(&i.map)?;
    let entries = parse_scenario(&read(&i.scen)?).map_err(|e| Failure::Usage(format!("{}: {e}", i.scen.display())))?;
    if i.agents == 0 || i.agents > entries.len() {
        return Err(Failure::Usage(format!("--agents must be in 1..={}", entries.len())));
    }
    Ok((map, entries[..i.agents].iter().map(|e| (e.start, e.goal)).collect()))
}

/// Accepts one plan per line or a single `;`-joined field.
fn parse_plan_file(text: &str) -> Result<PlanSet, Failure> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let field = if lines.len() == 1 { lines[0].to_string() } else { lines.join(";") };
    PlanSet::parse_field(&field).map_err(usage)
}

pub fn validate(i: &Instance, plan: &Path, claimed: Option<u64>) -> Outcome {
    let (map, pairs) = load_instance(i)?;
    let plans = parse_plan_file(&read(plan)?)?;
    let outcome = validate_plan_set(&map, &pairs, &plans, claimed).map_err(usage)?;
    let mut preamble = vec![
        format!("valid: {}", outcome.valid),
        format!("sum_of_costs: {}", opt(outcome.computed_cost)),
    ];
    preamble.extend(outcome.agent_errors.iter().map(|(a, e)| format!("agent {a}: {e}")));
    preamble.extend(outcome.conflicts.iter().map(|c| format!("conflict: {c}")));
    if let Some(m) = outcome.cost_mismatch {
        preamble.push(format!("cost mismatch: claimed {}, computed {}", m.claimed, m.computed));
    }
    let rows = outcome.agent_costs.iter().enumerate().map(|(a, c)| vec![a.to_string(), c.to_string()]).collect();
    let rendered = Rendered::new(&outcome, &["agent", "cost"], rows).with_preamble(preamble);
    if outcome.valid {
        return Ok(Some(rendered));
    }
    let reason = match (outcome.agent_errors.is_empty() && outcome.conflicts.is_empty(), outcome.cost_mismatch) {
        (true, Some(m)) => format!("CostMismatch: claimed {}, computed {}", m.claimed, m.computed),
        _ => format!("PlanInvalid: {}", outcome.reason().unwrap_or_default()),
    };
    Err(Failure::Domain { reason, rendered: Some(rendered) })
}

pub fn lb(i: &Instance) -> Outcome {
    let (map, pairs) = load_instance(i)?;
    let bound = trivial_lower_bound(&map, &pairs).map_err(|e| match e {
        DistanceError::UnreachablePair { .. } => Failure::Domain { reason: format!("UnreachablePair: {e}"), rendered: None },
        DistanceError::NonTraversableEndpoint(_) => Failure::Domain { reason: format!("NonTraversableEndpoint: {e}"), rendered: None },
    })?;
    let rows = pairs
        .iter()
        .zip(&bound.per_agent)
        .enumerate()
        .map(|(a, ((s, g), d))| vec![a.to_string(), s.to_string(), g.to_string(), d.to_string()])
        .collect();
    Ok(Some(
        Rendered::new(&bound, &["agent", "start", "goal", "distance"], rows)
            .with_preamble(vec![format!("lower_bound: {}", bound.total)]),
    ))
}

fn open_tracker(t: &Tracked) -> Result<Tracker, Failure> {
    if !t.bench_root.is_dir() {
        return Err(Failure::Usage(format!("benchmark root {} is not a directory", t.bench_root.display())));
    }
    let bench = Benchmark::load(&t.bench_root).map_err(usage)?;
    let dir = t.store.clone().unwrap_or_else(|| t.bench_root.join("store"));
    fs::create_dir_all(&dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    let store = Store::open(&dir).map_err(usage)?;
    Ok(Tracker::new(bench, store))
}

fn scope(a: &ScopeArgs) -> Result<Scope, Failure> {
    let domain = a.domain.as_deref().map(str::parse::<Domain>).transpose().map_err(usage)?;
    let scenario = match (&a.map, &a.scenario) {
        (_, None) => None,
        (None, Some(_)) => return Err(usage("--scenario requires --map")),
        (Some(m), Some(l)) => Some(ScenarioId::parse_label(m, l).map_err(usage)?),
    };
    let mut s = Scope { domain, map: a.map.clone(), scenario: scenario.map(|s| (s.kind, s.index)), agents: None };
    if a.agents_min.is_some() || a.agents_max.is_some() {
        s = s.with_agents(a.agents_min.unwrap_or(1), a.agents_max.unwrap_or(u32::MAX));
    }
    Ok(s)
}

fn tracking(e: TrackingError) -> Failure {
    usage(e)
}

pub fn ingest(t: &Tracked, descriptor: &Path, csv: &Path) -> Outcome {
    let mut tracker = open_tracker(t)?;
    let batch = RawBatchFile::parse(&read(descriptor)?, &read(csv)?).map_err(usage)?;
    let report = ingest_batch(&mut tracker, &batch, chrono::Utc::now()).map_err(usage)?;
    let mut preamble = vec![
        format!("batch: {}", report.batch_id),
        format!("algorithm: {}", report.algorithm),
        format!("accepted: {}  rejected: {}", report.accepted, report.rejected),
    ];
    for n in &report.revocations {
        preamble.push(format!(
            "revoked lower bounds of batch {} (triggered by {}, {} instances affected)",
            n.batch_id,
            n.trigger,
            n.affected.len()
        ));
    }
    let rows = report
        .rows
        .iter()
        .map(|r| {
            let outcome = match &r.outcome {
                RowOutcome::Accepted => "accepted".to_string(),
                RowOutcome::Rejected(why) => why.to_string(),
            };
            vec![r.row.to_string(), opt(r.instance.as_ref()), outcome]
        })
        .collect();
    Ok(Some(Rendered::new(&report, &["row", "instance", "outcome"], rows).with_preamble(preamble)))
}

pub fn export(t: &Tracked, a: &ScopeArgs, level: &str) -> Outcome {
    let tracker = open_tracker(t)?;
    let level: ExportLevel = level.parse().map_err(usage)?;
    let table = tracker.export_results(&scope(a)?, level).map_err(tracking)?;
    let header: Vec<&str> = table.header.iter().map(String::as_str).collect();
    Ok(Some(Rendered::new(&table, &header, table.rows.clone())))
}

fn summary_row(s: &ProgressSummary<f64>) -> Vec<String> {
    vec![
        s.scope.clone(),
        s.total.to_string(),
        s.closed.to_string(),
        s.solved.to_string(),
        s.unknown.to_string(),
        format!("{:.2}", s.closed_pct),
        format!("{:.2}", s.solved_pct),
        format!("{:.2}", s.unknown_pct),
    ]
}

pub fn progress(t: &Tracked, a: &ScopeArgs, group_by: Option<&str>) -> Outcome {
    let tracker = open_tracker(t)?;
    let scope = scope(a)?;
    let summary: ProgressSummary<f64> = tracker.progress_summary(&scope).map_err(tracking)?;
    let groups: Vec<ProgressSummary<f64>> = match group_by {
        Some(g) => tracker.progress_grouped(&scope, g.parse::<GroupBy>().map_err(usage)?).map_err(tracking)?,
        None => Vec::new(),
    };
    let mut rows: Vec<Vec<String>> = groups.iter().map(summary_row).collect();
    rows.push(summary_row(&summary));
    let header = ["scope", "total", "closed", "solved", "unknown", "closed_pct", "solved_pct", "unknown_pct"];
    Ok(Some(Rendered::new(&json!({ "summary": summary, "groups": groups }), &header, rows)))
}

pub fn serve(t: &Tracked, bind: &str, upload_cap: usize, async_rows: usize) -> Outcome {
    let tracker = open_tracker(t)?;
    let state = AppState::new(tracker, ApiConfig { upload_cap, async_threshold: async_rows });
    let rt = tokio::runtime::Runtime::new().map_err(usage)?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind).await.map_err(|e| Failure::Usage(format!("{bind}: {e}")))?;
        eprintln!("listening on http://{}", listener.local_addr().map_err(usage)?);
        tracker_api::serve(listener, state).await.map_err(usage)
    })?;
    Ok(None)
}

fn seconds(v: f64, flag: &str) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(v).map_err(|e| Failure::Usage(format!("{flag}: {e}")))
}

pub fn policy(budget: f64, lb_extension: bool, failure_stop: u32, agent_step: u32, grace: f64) -> Result<RunnerPolicy, Failure> {
    let p = RunnerPolicy {
        base_budget: seconds(budget, "--budget")?,
        lb_extension,
        failure_stop,
        agent_step,
        grace: seconds(grace, "--grace")?,
    };
    p.validate().map_err(usage)?;
    Ok(p)
}

fn failure_name(f: &RunFailure) -> String {
    match f {
        RunFailure::Timeout => "timeout".into(),
        RunFailure::Crash(d) => format!("crash ({d})"),
        RunFailure::AdapterSpawnFailure(d) => format!("spawn failure ({d})"),
        RunFailure::OutputContractViolation(d) => format!("contract violation ({d})"),
        RunFailure::NoSolution => "no solution".into(),
        RunFailure::InvalidPlan(d) => format!("invalid plan ({d})"),
    }
}

pub fn run(adapter: &Path, map: &Path, scen: &Path, policy: &RunnerPolicy, out_dir: Option<&Path>) -> Outcome {
    let adapter = SolverAdapter::parse(&read(adapter)?).map_err(usage)?;
    let grid = load_map(map)?;
    let file_name = scen.file_name().and_then(|f| f.to_str()).unwrap_or_default();
    let scenario = Scenario::parse_named(file_name, &read(scen)?).map_err(usage)?;
    scenario.bind(&grid).map_err(usage)?;
    let mut solver = ProcessSolver {
        adapter: adapter.clone(),
        map_path: map.display().to_string(),
        scen_path: scen.display().to_string(),
    };
    let result = run_scenario(&mut solver, &grid, &scenario, policy).map_err(usage)?;
    let mut written: Vec<PathBuf> = Vec::new();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
        for (name, text) in [("batch.csv", result.to_csv()), ("descriptor.toml", adapter.descriptor().to_toml())] {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
    }
    let rows = result
        .attempts
        .iter()
        .map(|a| {
            vec![
                a.agents.to_string(),
                a.solved.to_string(),
                a.failure.as_ref().map(failure_name).unwrap_or_default(),
                opt(a.lower_bound),
                opt(a.cost),
                a.elapsed.as_millis().to_string(),
            ]
        })
        .collect();
    let preamble = written.iter().map(|p| format!("wrote {}", p.display())).collect();
    let body = json!({ "attempts": result.attempts, "rows": result.rows.len() });
    Ok(Some(
        Rendered::new(&body, &["agents", "solved", "failure", "lower_bound", "cost", "elapsed_ms"], rows)
            .with_preamble(preamble),
    ))
}

pub fn genscen(
    map: &Path,
    kind: &str,
    seed: u64,
    agents: usize,
    index: u32,
    out: Option<&Path>,
    format: Format,
) -> Outcome {
    let grid = load_map(map)?;
    let kind: ScenKind = kind.parse().map_err(usage)?;
    let mut scen = match kind {
        ScenKind::Even => generate_even_scenario(&grid, seed),
        ScenKind::Random => generate_random_scenario(&grid, agents, seed),
    }
    .map_err(|e| Failure::Domain { reason: e.to_string(), rendered: None })?;
    scen.id = ScenarioId::new(grid.name(), kind, index);
    let text = scen.to_text();
    match out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            Ok(None)
        }
        None if format == Format::Json => Ok(Some(Rendered::new(&scen.entries, &[], Vec::new()))),
        None => {
            print!("{text}");
            Ok(None)
        }
    }
}
