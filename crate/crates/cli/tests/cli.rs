use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

use dyncc::harness::{gen_ops, gen_planted, standard_workload};
use dyncc::{graph::fixtures, SignedGraph};
use dyncc_cli::commands::{run_bench, BenchConfig, Cli, Command as Sub};
use dyncc_cli::format::{parse_graph, serialize_graph, serialize_ops};

const K4_MINUS: &str = "vertices 1 2 3 4\nedge+ 1 3\nedge+ 1 4\nedge+ 2 3\nedge+ 2 4\nedge+ 3 4\n";

fn dyncc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyncc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("r.json")).unwrap()).unwrap()
}

fn setup(graph: &str, ops: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("g.txt"), graph).unwrap();
    fs::write(dir.path().join("ops.txt"), ops).unwrap();
    dir
}

const RUN: &[&str] = &[
    "run", "--graph", "g.txt", "--ops", "ops.txt", "--report", "r.json",
];

#[test]
fn run_k4_minus_merge() {
    let dir = setup(K4_MINUS, "flip 1 2\n");
    let out = dyncc(
        dir.path(),
        &[RUN, &["--epsilon", "7/10", "--check"]].concat(),
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["schema"], "dyncc-report/1");
    let step = &r["steps"][0];
    assert_eq!(step["t"], 1);
    assert_eq!(step["cluster_count"], 1);
    assert_eq!(step["cost_total"], 0);
    assert_eq!(step["baseline_match"], true);
    assert_eq!(r["steps"].as_array().unwrap().len(), 1);
    assert!(r["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn rejected_step_is_recorded() {
    let dir = setup(K4_MINUS, "del 2\nflip 1 2\n");
    let out = dyncc(
        dir.path(),
        &[RUN, &["--epsilon", "7/10", "--check"]].concat(),
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["steps"][0]["status"], "rejected");
    assert_eq!(r["steps"][1]["status"], "applied");
    assert_eq!(r["steps"][1]["cluster_count"], 1);
    assert_eq!(r["totals"]["rejected"], 1);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = setup(K4_MINUS, "flip 1\n");
    assert_eq!(dyncc(dir.path(), RUN).status.code(), Some(2));
    let dir = setup("edge+ 1 9\n", "flip 1 2\n");
    assert_eq!(dyncc(dir.path(), RUN).status.code(), Some(2));
    let dir = setup(K4_MINUS, "flip 1 2\n");
    let out = dyncc(dir.path(), &[RUN, &["--epsilon", "0/1"]].concat());
    assert_eq!(out.status.code(), Some(2));
    let out = dyncc(
        dir.path(),
        &["run", "--graph", "missing.txt", "--ops", "ops.txt"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = dyncc(dir.path(), &[RUN, &["--pruning", "sloppy"]].concat());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn strict_check_exits_one_on_divergence() {
    // corpus seed 5 diverges under the strict pruning guards
    let (params, eps) = standard_workload(5);
    let g = gen_planted(&params);
    let ops = gen_ops(&params, &g);
    let dir = setup(&serialize_graph(&g), &serialize_ops(&ops));
    let eps = eps.to_string();
    let strict = [
        RUN,
        &[
            "--epsilon",
            &eps,
            "--pruning",
            "paper-strict",
            "--check",
            "--strict",
        ],
    ]
    .concat();
    assert_eq!(dyncc(dir.path(), &strict).status.code(), Some(1));
    let r = report(dir.path());
    let w = &r["witnesses"][0];
    assert!(w["t"].as_u64().unwrap() >= 1);
    assert_ne!(w["online"], w["baseline"]);

    let lenient = [
        RUN,
        &["--epsilon", &eps, "--pruning", "paper-strict", "--check"],
    ]
    .concat();
    assert_eq!(dyncc(dir.path(), &lenient).status.code(), Some(0));
    let corrected = [RUN, &["--epsilon", &eps, "--check", "--strict"]].concat();
    assert_eq!(dyncc(dir.path(), &corrected).status.code(), Some(0));
    assert!(report(dir.path())["witnesses"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn gen_two_triangles() {
    let dir = TempDir::new().unwrap();
    let args = [
        "gen", "--n", "6", "--k", "2", "--p", "1/1", "--q", "0/1", "--ops", "10",
    ];
    assert_eq!(dyncc(dir.path(), &args).status.code(), Some(0));
    let g = parse_graph(&fs::read_to_string(dir.path().join("graph.txt")).unwrap()).unwrap();
    assert_eq!(g, fixtures::two_triangles());
    let ops = fs::read_to_string(dir.path().join("ops.txt")).unwrap();
    assert_eq!(ops.lines().count(), 10);
}

#[test]
fn gen_is_byte_identical_per_seed() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str, seed: &str| {
        let (g, o) = (format!("g{tag}.txt"), format!("o{tag}.txt"));
        let args = [
            "gen",
            "--n",
            "30",
            "--k",
            "3",
            "--seed",
            seed,
            "--out-graph",
            &g,
            "--out-ops",
            &o,
        ];
        assert_eq!(dyncc(dir.path(), &args).status.code(), Some(0));
        (
            fs::read(dir.path().join(g)).unwrap(),
            fs::read(dir.path().join(o)).unwrap(),
        )
    };
    assert_eq!(run("a", "7"), run("b", "7"));
    assert_ne!(run("c", "7"), run("d", "8"));
}

#[test]
fn gen_rejects_q_above_p() {
    let dir = TempDir::new().unwrap();
    let out = dyncc(dir.path(), &["gen", "--p", "1/10", "--q", "1/2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_on_planted_instance_stays_below_recompute() {
    let cli = <Cli as clap::Parser>::try_parse_from([
        "dyncc", "bench", "--n", "1000", "--k", "10", "--ops", "200",
    ])
    .unwrap();
    let Sub::Bench(cfg) = cli.command else {
        panic!("expected bench");
    };
    let cfg: BenchConfig = cfg;
    let r = run_bench(&cfg).unwrap();
    assert_eq!(r.steps.len(), 200);
    assert_eq!(r.totals.flips, 200);
    assert!(r.totals.online_below_baseline);
    for s in &r.steps {
        assert!(
            s.online_na_evaluations < s.baseline_na_evaluations,
            "step {}",
            s.t
        );
    }
    assert!(r.totals.ratio.unwrap() < 1.0);
}

#[test]
fn bench_accepts_files() {
    let dir = setup(K4_MINUS, "flip 1 2\nflip 1 2\n");
    let args = [
        "bench",
        "--graph",
        "g.txt",
        "--ops-file",
        "ops.txt",
        "--epsilon",
        "7/10",
        "--report",
        "r.json",
    ];
    assert_eq!(dyncc(dir.path(), &args).status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["schema"], "dyncc-bench/1");
    assert_eq!(r["steps"].as_array().unwrap().len(), 2);
}

proptest! {
    #[test]
    fn graph_text_round_trips(n in 0u64..12, bits in prop::collection::vec(any::<bool>(), 66), offset in 0u64..1000) {
        let mut g = SignedGraph::with_vertices((0..n).map(|v| v + offset));
        let mut k = 0;
        for a in 0..n {
            for b in a + 1..n {
                if bits[k] {
                    g.set_positive(a + offset, b + offset).unwrap();
                }
                k += 1;
            }
        }
        let text = serialize_graph(&g);
        let parsed = parse_graph(&text).unwrap();
        prop_assert_eq!(&parsed, &g);
        prop_assert_eq!(serialize_graph(&parsed), text);
    }
}
