//! Driving external solvers over a scenario: one run per agent count, a
//! wall-clock budget per run, and a stop rule on consecutive failures.

use std::io::{BufRead, BufReader};
use std::os::unix::process::CommandExt;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{write_submission_csv, BatchDescriptor, SubmissionRow};
use crate::model::{instance_agents, GridMap, InstanceId, Scenario};
use crate::plan::{validate_plan_set, PlanSet};
use crate::Cost;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("base budget must be positive")]
    ZeroBudget,
    #[error("failure stop must be at least 1")]
    ZeroFailureStop,
    #[error("agent step must be at least 1")]
    ZeroAgentStep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunnerPolicy {
    pub base_budget: Duration,
    /// Grant another base budget while the reported lower bound keeps rising.
    pub lb_extension: bool,
    /// Consecutive failures that end a scenario.
    pub failure_stop: u32,
    pub agent_step: u32,
    /// Time between the polite and the forced kill at budget expiry.
    pub grace: Duration,
}

impl Default for RunnerPolicy {
    fn default() -> Self {
        Self {
            base_budget: Duration::from_secs(60),
            lb_extension: false,
            failure_stop: 2,
            agent_step: 1,
            grace: Duration::from_secs(2),
        }
    }
}

impl RunnerPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.base_budget.is_zero() {
            return Err(PolicyError::ZeroBudget);
        }
        if self.failure_stop == 0 {
            return Err(PolicyError::ZeroFailureStop);
        }
        if self.agent_step == 0 {
            return Err(PolicyError::ZeroAgentStep);
        }
        Ok(())
    }
}

/// Budget of one run under the lower-bound extension rule. At each expiry
/// the run gets another base budget iff the lower bound reported during the
/// window that just ended exceeds the one it started from. In the first
/// window the starting value is the first bound reported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetTracker {
    base: Duration,
    extend: bool,
    deadline: Duration,
    window_start: Option<Cost>,
    current: Option<Cost>,
}

impl BudgetTracker {
    pub fn new(base: Duration, extend: bool) -> Self {
        Self { base, extend, deadline: base, window_start: None, current: None }
    }

    /// Elapsed time at which the run is stopped unless extended.
    pub fn deadline(&self) -> Duration {
        self.deadline
    }

    pub fn observe_lower_bound(&mut self, lb: Cost) {
        if self.window_start.is_none() {
            self.window_start = Some(lb);
        }
        self.current = Some(self.current.map_or(lb, |c| c.max(lb)));
    }

    /// Called at the deadline; returns whether the run continues.
    pub fn on_expiry(&mut self) -> bool {
        let increased = matches!((self.window_start, self.current), (Some(s), Some(c)) if c > s);
        if self.extend && increased {
            self.deadline += self.base;
            self.window_start = self.current;
            true
        } else {
            false
        }
    }
}

/// One line of solver output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputLine {
    LowerBound(Cost),
    Cost(Cost),
    Plan(String),
}

/// Parses `lb <int>`, `cost <int>` or `plan <field>`; blank lines are `None`.
pub fn parse_output_line(line: &str) -> Result<Option<OutputLine>, String> {
    let line = line.trim();
    if line.is_empty() {
        return Ok(None);
    }
    let (key, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let value = value.trim();
    let int = |v: &str| v.parse::<Cost>().map_err(|e| format!("{key} {v:?}: {e}"));
    match key {
        "lb" => int(value).map(|v| Some(OutputLine::LowerBound(v))),
        "cost" => int(value).map(|v| Some(OutputLine::Cost(v))),
        "plan" if !value.is_empty() => Ok(Some(OutputLine::Plan(value.to_string()))),
        _ => Err(format!("unrecognised output line {line:?}")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    TimedOut,
    Crashed(String),
    SpawnFailed(String),
    ContractViolation(String),
}

/// What one solver run reported, before local validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RawRun {
    pub status: RunStatus,
    pub lower_bound: Option<Cost>,
    pub cost: Option<Cost>,
    pub plan: Option<String>,
    pub elapsed: Duration,
}

impl RawRun {
    pub fn failed(status: RunStatus) -> Self {
        Self { status, lower_bound: None, cost: None, plan: None, elapsed: Duration::ZERO }
    }
}

/// Runs a solver on the first `agents` entries of the scenario.
pub trait SolverExec {
    fn run(&mut self, agents: u32, policy: &RunnerPolicy) -> RawRun;
}

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("adapter: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("adapter command is empty")]
    EmptyCommand,
}

/// How to invoke one solver. `command` is an argument vector whose elements
/// may contain `{map}`, `{scen}`, `{agents}` and `{budget}` (whole seconds,
/// rounded up).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverAdapter {
    pub algorithm: String,
    pub authors: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub references: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repository: Option<String>,
    pub command: Vec<String>,
    #[serde(default)]
    pub emits_lower_bounds: bool,
}

impl SolverAdapter {
    pub fn parse(text: &str) -> Result<Self, AdapterError> {
        let a: Self = toml::from_str(text)?;
        if a.command.is_empty() {
            return Err(AdapterError::EmptyCommand);
        }
        Ok(a)
    }

    pub fn render(&self, map: &str, scen: &str, agents: u32, budget: Duration) -> Vec<String> {
        let secs = budget.as_secs() + u64::from(budget.subsec_nanos() > 0);
        self.command
            .iter()
            .map(|arg| {
                arg.replace("{map}", map)
                    .replace("{scen}", scen)
                    .replace("{agents}", &agents.to_string())
                    .replace("{budget}", &secs.to_string())
            })
            .collect()
    }

    pub fn descriptor(&self) -> BatchDescriptor {
        BatchDescriptor {
            algorithm: self.algorithm.clone(),
            authors: self.authors.clone(),
            references: self.references.clone(),
            repository: self.repository.clone(),
        }
    }
}

/// Runs an adapter's executable as a child process in its own process group.
pub struct ProcessSolver {
    pub adapter: SolverAdapter,
    pub map_path: String,
    pub scen_path: String,
}

enum Msg {
    Line(String),
    Eof,
}

fn signal_group(child: &Child, sig: libc::c_int) {
    // the child leads its own group, so its pid is the group id
    let pgid = child.id() as libc::pid_t;
    unsafe {
        libc::kill(-pgid, sig);
    }
}

impl SolverExec for ProcessSolver {
    fn run(&mut self, agents: u32, policy: &RunnerPolicy) -> RawRun {
        let argv = self.adapter.render(&self.map_path, &self.scen_path, agents, policy.base_budget);
        let started = Instant::now();
        let mut child = match Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .process_group(0)
            .spawn()
        {
            Ok(c) => c,
            Err(e) => return RawRun::failed(RunStatus::SpawnFailed(format!("{}: {e}", argv[0]))),
        };
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        let reader = thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(Msg::Line(l)).is_err() {
                            return;
                        }
                    }
                    Err(_) => break,
                }
            }
            let _ = tx.send(Msg::Eof);
        });

        let mut budget = BudgetTracker::new(policy.base_budget, policy.lb_extension && self.adapter.emits_lower_bounds);
        let mut run = RawRun { status: RunStatus::Completed, lower_bound: None, cost: None, plan: None, elapsed: Duration::ZERO };
        let mut violation: Option<String> = None;
        let mut kill_at: Option<Instant> = None;
        let mut timed_out = false;
        loop {
            let now = Instant::now();
            let wait = match kill_at {
                Some(k) => k.saturating_duration_since(now),
                None => (started + budget.deadline()).saturating_duration_since(now),
            };
            match rx.recv_timeout(wait) {
                Ok(Msg::Line(l)) => match parse_output_line(&l) {
                    Ok(Some(OutputLine::LowerBound(v))) => {
                        budget.observe_lower_bound(v);
                        run.lower_bound = Some(run.lower_bound.map_or(v, |c| c.max(v)));
                    }
                    Ok(Some(OutputLine::Cost(v))) => run.cost = Some(v),
                    Ok(Some(OutputLine::Plan(p))) => run.plan = Some(p),
                    Ok(None) => {}
                    Err(e) => {
                        violation.get_or_insert(e);
                    }
                },
                Ok(Msg::Eof) | Err(mpsc::RecvTimeoutError::Disconnected) => break,
                Err(mpsc::RecvTimeoutError::Timeout) => match kill_at {
                    Some(_) => {
                        signal_group(&child, libc::SIGKILL);
                        kill_at = Some(Instant::now() + Duration::from_secs(3600));
                    }
                    None if budget.on_expiry() => {}
                    None => {
                        timed_out = true;
                        signal_group(&child, libc::SIGTERM);
                        kill_at = Some(Instant::now() + policy.grace);
                    }
                },
            }
        }
        let status = child.wait();
        // stragglers in the group must not outlive the run
        signal_group(&child, libc::SIGKILL);
        let _ = reader.join();
        run.elapsed = started.elapsed();
        run.status = if let Some(v) = violation {
            RunStatus::ContractViolation(v)
        } else if timed_out {
            RunStatus::TimedOut
        } else {
            match status {
                Ok(s) if s.success() => RunStatus::Completed,
                Ok(s) => RunStatus::Crashed(s.to_string()),
                Err(e) => RunStatus::Crashed(e.to_string()),
            }
        };
        run
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Failure {
    Timeout,
    Crash(String),
    AdapterSpawnFailure(String),
    OutputContractViolation(String),
    NoSolution,
    InvalidPlan(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Attempt {
    pub agents: u32,
    pub solved: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub lower_bound: Option<Cost>,
    pub cost: Option<Cost>,
    pub elapsed: Duration,
}

/// Results of one scenario run, ready to be written as a submission batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioRun {
    pub attempts: Vec<Attempt>,
    pub rows: Vec<SubmissionRow>,
}

impl ScenarioRun {
    pub fn attempted(&self) -> Vec<u32> {
        self.attempts.iter().map(|a| a.agents).collect()
    }

    /// Submission CSV of the run's rows.
    pub fn to_csv(&self) -> String {
        write_submission_csv(&self.rows)
    }
}

/// Checks a raw run against the instance; a success carries a plan that
/// validates to exactly the reported cost.
fn judge(map: &GridMap, scen: &Scenario, agents: u32, raw: &RawRun) -> Result<(Cost, PlanSet), Failure> {
    match &raw.status {
        RunStatus::SpawnFailed(e) => return Err(Failure::AdapterSpawnFailure(e.clone())),
        RunStatus::ContractViolation(e) => return Err(Failure::OutputContractViolation(e.clone())),
        _ => {}
    }
    let (cost, plan) = match (raw.cost, &raw.plan) {
        (Some(c), Some(p)) => (c, p),
        (Some(_), None) => return Err(Failure::OutputContractViolation("cost without plan".into())),
        _ => {
            return Err(match &raw.status {
                RunStatus::TimedOut => Failure::Timeout,
                RunStatus::Crashed(e) => Failure::Crash(e.clone()),
                _ => Failure::NoSolution,
            })
        }
    };
    let plan = PlanSet::parse_field(plan).map_err(|e| Failure::InvalidPlan(e.to_string()))?;
    let pairs = instance_agents(scen, agents as usize).map_err(|e| Failure::InvalidPlan(e.to_string()))?;
    let outcome = validate_plan_set(map, &pairs, &plan, Some(cost)).map_err(|e| Failure::InvalidPlan(e.to_string()))?;
    if !outcome.valid {
        return Err(Failure::InvalidPlan(outcome.reason().unwrap_or_default()));
    }
    Ok((cost, plan))
}

/// Runs `n = 1, 1 + step, ...` up to the scenario length and stops after
/// `failure_stop` consecutive failures. Timeouts, crashes, contract
/// violations and invalid plans all count as failures. Reported lower bounds
/// are kept even when the run fails; costs only with a validated plan.
pub fn run_scenario(
    exec: &mut dyn SolverExec,
    map: &GridMap,
    scen: &Scenario,
    policy: &RunnerPolicy,
) -> Result<ScenarioRun, PolicyError> {
    policy.validate()?;
    let mut attempts = Vec::new();
    let mut rows = Vec::new();
    let mut consecutive = 0;
    let mut n = 1u32;
    while (n as usize) <= scen.len() && consecutive < policy.failure_stop {
        let raw = exec.run(n, policy);
        let instance = InstanceId::new(&scen.id, n);
        let judged = judge(map, scen, n, &raw);
        let lower_bound = match (&raw.status, raw.lower_bound) {
            (RunStatus::ContractViolation(_) | RunStatus::SpawnFailed(_), _) => None,
            (_, lb) => lb,
        };
        let (solved, failure, cost, plan) = match judged {
            Ok((c, p)) => (true, None, Some(c), Some(p)),
            Err(f) => (false, Some(f), None, None),
        };
        // a bound above the validated cost is the solver's error; drop it
        let lower_bound = lower_bound.filter(|&lb| cost.is_none_or(|c| lb <= c));
        if lower_bound.is_some() || cost.is_some() {
            rows.push(SubmissionRow { instance, lower_bound, solution_cost: cost, plan });
        }
        attempts.push(Attempt { agents: n, solved, failure, lower_bound, cost, elapsed: raw.elapsed });
        consecutive = if solved { 0 } else { consecutive + 1 };
        n += policy.agent_step;
    }
    Ok(ScenarioRun { attempts, rows })
}
