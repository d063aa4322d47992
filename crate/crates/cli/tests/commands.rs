use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mapf-tracker"));
    c.env_remove("MAPF_BENCH_ROOT").env_remove("MAPF_TRACKER_STORE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn open_map(w: usize, h: usize) -> String {
    format!("type octile\nheight {h}\nwidth {w}\nmap\n{}", format!("{}\n", ".".repeat(w)).repeat(h))
}

fn scen_text(map: &str, w: u32, h: u32, pairs: &[((u32, u32), (u32, u32))]) -> String {
    let mut s = "version 1\n".to_string();
    for ((sx, sy), (gx, gy)) in pairs {
        s.push_str(&format!("0\t{map}.map\t{w}\t{h}\t{sx}\t{sy}\t{gx}\t{gy}\t0\n"));
    }
    s
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    /// An 8x8 open map `empty-8-8` with a scenario of six agents, agent i
    /// going from (0,i) to (3,i).
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("maps")).unwrap();
        fs::create_dir_all(dir.path().join("scens")).unwrap();
        fs::write(dir.path().join("maps/empty-8-8.map"), open_map(8, 8)).unwrap();
        let pairs: Vec<_> = (0..6).map(|i| ((0, i), (3, i))).collect();
        fs::write(dir.path().join("scens/empty-8-8-random-1.scen"), scen_text("empty-8-8", 8, 8, &pairs)).unwrap();
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn arg(&self, rel: &str) -> String {
        self.path(rel).display().to_string()
    }

    fn write(&self, rel: &str, text: &str) -> String {
        fs::write(self.path(rel), text).unwrap();
        self.arg(rel)
    }

    fn root(&self) -> String {
        self.dir.path().display().to_string()
    }
}

fn instance_args<'a>(f: &'a Fixture, agents: &'a str, out: &'a mut Vec<String>) -> Vec<&'a str> {
    *out = vec![f.arg("maps/empty-8-8.map"), f.arg("scens/empty-8-8-random-1.scen")];
    vec!["--map", &out[0], "--scen", &out[1], "--agents", agents]
}

#[test]
fn validate_reports_cost_conflicts_and_mismatches() {
    let f = Fixture::new();
    let mut paths = Vec::new();
    let inst = instance_args(&f, "2", &mut paths);

    let good = f.write("good.plan", "rrr\nwrrr\n");
    let o = run(&[&["validate"], &inst[..], &["--plan", &good, "--cost", "7"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("sum_of_costs: 7"));

    let wrong = run(&[&["validate"], &inst[..], &["--plan", &good, "--cost", "6"]].concat());
    assert_eq!(wrong.status.code(), Some(1));
    assert!(stderr(&wrong).contains("CostMismatch: claimed 6, computed 7"), "{}", stderr(&wrong));

    // agent 0 drops into row 1 as agent 1 climbs into row 0
    let swap = f.write("swap.plan", "drrl;urrr");
    let o = run(&[&["validate"], &inst[..], &["--plan", &swap]].concat());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("conflict: "), "{}", stdout(&o));
    assert!(stderr(&o).starts_with("error: PlanInvalid:"), "{}", stderr(&o));

    let o = run(&[&["validate", "--format", "json"], &inst[..], &["--plan", &good]].concat());
    let v = json(&o);
    assert_eq!(v["valid"], true);
    assert_eq!(v["agent_costs"], serde_json::json!([3, 4]));
}

#[test]
fn trivial_bound_and_unreachable_goals() {
    let f = Fixture::new();
    let mut paths = Vec::new();
    let inst = instance_args(&f, "6", &mut paths);
    let o = run(&[&["lb", "--format", "json"], &inst[..]].concat());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["total"], 18);

    let walled = "type octile\nheight 3\nwidth 3\nmap\n.@.\n.@.\n.@.\n";
    let map = f.write("walled.map", walled);
    let scen = f.write("walled.scen", &scen_text("walled", 3, 3, &[((0, 0), (0, 2)), ((0, 1), (2, 1))]));
    let o = run(&["lb", "--map", &map, "--scen", &scen, "--agents", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("UnreachablePair") && stderr(&o).contains("agent 1"), "{}", stderr(&o));
}

#[test]
fn bound_never_exceeds_a_validated_cost() {
    let f = Fixture::new();
    // staggered plans: agent i waits i steps, detours or not, then heads right
    let plans = ["rrr", "wrrr", "urrrd", "drrru", "wwrrr", "rrrlr"];
    let mut checked = 0;
    for k in 1..=6 {
        let mut paths = Vec::new();
        let ks = k.to_string();
        let inst = instance_args(&f, &ks, &mut paths);
        let plan = f.write("p.plan", &plans[..k].join(";"));
        let v = run(&[&["validate", "--format", "json"], &inst[..], &["--plan", &plan]].concat());
        let v = json(&v);
        if v["valid"] != true {
            continue;
        }
        let lb = json(&run(&[&["lb", "--format", "json"], &inst[..]].concat()));
        assert!(lb["total"].as_u64().unwrap() <= v["computed_cost"].as_u64().unwrap(), "k={k}");
        checked += 1;
    }
    assert!(checked >= 2);
}

#[test]
fn genscen_is_deterministic_per_seed() {
    let f = Fixture::new();
    let map = f.write("maps/empty-12-12.map", &open_map(12, 12));
    let gen = |seed: &str, out: &str| {
        let out = f.arg(out);
        let o = run(&["genscen", "--map", &map, "--kind", "even", "--seed", seed, "--out", &out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read_to_string(out).unwrap()
    };
    let a = gen("7", "a.scen");
    let b = gen("7", "b.scen");
    let c = gen("8", "c.scen");
    assert_eq!(a, b);
    assert_ne!(a, c);
    // d_max = 22 on a 12x12 grid: 6 buckets of 10
    assert_eq!(a.lines().count(), 1 + 60);

    let o = run(&["genscen", "--map", &map, "--kind", "random", "--seed", "3", "--agents", "20"]);
    assert_eq!(stdout(&o).lines().count(), 21);
    let o = run(&["genscen", "--map", &map, "--kind", "diagonal", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

fn rows(f: &Fixture, body: &[&str]) -> String {
    f.write("batch.csv", &format!("map_name,scenario,agents,lower_bound,solution_cost,plan\n{}\n", body.join("\n")))
}

#[test]
fn ingest_then_export_reflects_the_batch() {
    let f = Fixture::new();
    let root = f.root();
    let desc = f.write("desc.toml", "algorithm = \"Rows\"\nauthors = \"Tester\"\n");
    let csv = rows(&f, &["empty-8-8,random-1,1,3,3,rrr", "empty-8-8,random-1,2,,7,rrr;wrrr", "empty-8-8,random-1,3,,1,r;r;r"]);
    let o = run(&["ingest", "--bench-root", &root, "--descriptor", &desc, "--csv", &csv, "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&o);
    assert_eq!((report["accepted"].as_u64(), report["rejected"].as_u64()), (Some(2), Some(1)));
    assert!(f.path("store/events.jsonl").exists());

    let export = |fmt: &str| {
        bin().args(["export", "--map", "empty-8-8", "--format", fmt]).env("MAPF_BENCH_ROOT", &root).output().unwrap()
    };
    let o = export("csv");
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("empty-8-8,random-1,1,") && lines[1].contains(",closed,Rows"), "{}", lines[1]);
    assert!(lines[2].contains(",solved,"));
    assert!(lines[3].ends_with(",unknown,,,"));
    assert_eq!(stdout(&export("json")), stdout(&export("json")));

    let again = run(&["ingest", "--bench-root", &root, "--descriptor", &desc, "--csv", &csv, "--format", "json"]);
    let report = json(&again);
    assert_eq!(report["accepted"], 0);
    assert!(report["rows"].as_array().unwrap().iter().all(|r| r["outcome"]["reason"] == "duplicate_row"));

    let o = bin().args(["progress", "--map", "empty-8-8", "--format", "json"]).env("MAPF_BENCH_ROOT", &root).output().unwrap();
    let v = json(&o);
    assert_eq!((v["summary"]["closed"].as_u64(), v["summary"]["solved"].as_u64()), (Some(1), Some(1)));
}

#[test]
fn usage_errors_exit_with_two() {
    let f = Fixture::new();
    let o = run(&["lb", "--map", &f.arg("missing.map"), "--scen", &f.arg("scens/empty-8-8-random-1.scen"), "--agents", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["export", "--bench-root", &f.arg("nowhere")]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["export", "--bench-root", &f.root(), "--scenario", "random-1"]);
    assert_eq!(o.status.code(), Some(2));
    let mut paths = Vec::new();
    let inst = instance_args(&f, "9", &mut paths);
    let o = run(&[&["lb"], &inst[..]].concat());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

fn write_script(dir: &Path) -> String {
    // solves up to three agents (each steps right three times), fails beyond
    let script = "n=$1\n\
        if [ \"$n\" -gt 3 ]; then echo lb 99; exit 1; fi\n\
        echo lb $((3 * n))\n\
        p=rrr; i=1; while [ $i -lt $n ]; do p=\"$p;rrr\"; i=$((i + 1)); done\n\
        echo cost $((3 * n))\n\
        echo plan $p\n";
    let path = dir.join("solver.sh");
    fs::write(&path, script).unwrap();
    path.display().to_string()
}

#[test]
fn run_honours_the_failure_stop_and_feeds_ingestion() {
    let f = Fixture::new();
    let script = write_script(f.dir.path());
    let adapter = f.write(
        "adapter.toml",
        &format!("algorithm = \"Mock\"\nauthors = \"Tester\"\ncommand = [\"/bin/sh\", \"{script}\", \"{{agents}}\"]\nemits_lower_bounds = true\n"),
    );
    let out = f.arg("out");
    let o = run(&[
        "run",
        "--adapter",
        &adapter,
        "--map",
        &f.arg("maps/empty-8-8.map"),
        "--scen",
        &f.arg("scens/empty-8-8-random-1.scen"),
        "--budget",
        "5",
        "--out-dir",
        &out,
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let attempted: Vec<u64> = v["attempts"].as_array().unwrap().iter().map(|a| a["agents"].as_u64().unwrap()).collect();
    assert_eq!(attempted, vec![1, 2, 3, 4, 5]);
    assert_eq!(v["attempts"][3]["failure"]["kind"], "crash");
    let batch = fs::read_to_string(f.path("out/batch.csv")).unwrap();
    // failed runs keep their reported bounds: rows 4 and 5 carry lb 99 only
    assert_eq!(batch.lines().count(), 1 + 5);

    let o = run(&[
        "ingest",
        "--bench-root",
        &f.root(),
        "--descriptor",
        &f.arg("out/descriptor.toml"),
        "--csv",
        &f.arg("out/batch.csv"),
        "--format",
        "json",
    ]);
    let report = json(&o);
    assert_eq!(report["algorithm"], "Mock");
    assert_eq!(report["accepted"], 5);
}
