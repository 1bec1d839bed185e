use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn ebc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebc")).args(args).output().expect("binary runs")
}

fn ebc_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ebc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const EXAMPLE3: &str = "5 3\n1 2 3\n2 3 4\n4 5\n";

#[test]
fn simulate_prints_trials_and_aggregate() {
    let args = ["simulate", "--scheme", "gh", "--q", "256", "--n", "32", "--k", "40", "--pe", "0.3", "--trials", "100", "--seed", "7"];
    let o = ebc(&args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 102);
    assert!(lines[0].starts_with("scheme,q,N,K"));
    assert_eq!(lines.iter().filter(|l| l.contains(",agg,")).count(), 1);
    // same flags, same bytes
    assert_eq!(stdout(&ebc(&args)), text);
}

#[test]
fn simulate_reads_json_config() {
    let cfg = scratch("sim.json");
    fs::write(&cfg, r#"{"scheme": "rlnc", "n": 8, "k": 5, "q": 16, "trials": 3}"#).unwrap();
    let o = ebc(&["simulate", "--config", cfg.to_str().unwrap(), "--trials", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 6);
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("rlnc,16,8,5,"));

    fs::write(&cfg, r#"{"scheme": "rlnc", "bogus": 1}"#).unwrap();
    assert_eq!(ebc(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ebc(&["simulate", "--bogus"]).status.code(), Some(1));
    assert_eq!(ebc(&["simulate", "--scheme", "nope"]).status.code(), Some(1));
    assert_eq!(ebc(&["simulate", "--scheme", "gh", "--q", "16", "--k", "40"]).status.code(), Some(1));
    assert_eq!(ebc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ebc(&["--help"]).status.code(), Some(0));
}

#[test]
fn appendix_a_pipes_into_brute_force() {
    let o = ebc(&["gen", "appendix-a", "--q", "3", "--n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let s = ebc_stdin(&["iev-solve", "--method", "brute"], &stdout(&o));
    assert_eq!(s.status.code(), Some(0));
    assert_eq!(stdout(&s).trim(), "EMPTY");
    let oracle = ebc_stdin(&["oracle", "iev"], &stdout(&o));
    assert_eq!(stdout(&oracle).trim(), "EMPTY");
}

#[test]
fn hitset_solve_example_three() {
    let path = scratch("example3.txt");
    fs::write(&path, EXAMPLE3).unwrap();
    for method in ["greedy", "exact", "oracle"] {
        let o = ebc(&["hitset-solve", "--method", method, "--in", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{method}");
        assert_eq!(stdout(&o).lines().next(), Some("size 2"), "{method}");
    }
    let greedy = ebc(&["hitset-solve", "--method", "greedy", "--in", path.to_str().unwrap()]);
    assert_eq!(stdout(&greedy), "size 2\nset 2 4\n");
    let missing = ebc(&["hitset-solve", "--in", "/nonexistent/instance.txt"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn hitting_reduction_matches_sparsity_oracle() {
    let scen = ebc_stdin(&["gen", "hitting-to-sparsity", "--q", "5"], EXAMPLE3);
    assert_eq!(scen.status.code(), Some(0));
    let oh = ebc_stdin(&["iev-solve", "--method", "oh"], &stdout(&scen));
    let oracle = ebc_stdin(&["oracle", "sparsity"], &stdout(&scen));
    let weight = |o: &Output| stdout(o).lines().find(|l| l.starts_with("weight")).map(str::to_string);
    assert_eq!(weight(&oh), Some("weight 2".into()));
    assert_eq!(weight(&oh), weight(&oracle));
}

#[test]
fn three_sat_generation_round_trips_formula() {
    let cnf = scratch("f.cnf");
    let a = ebc(&["gen", "3sat", "--vars", "4", "--clauses", "6", "--seed", "9", "--cnf-out", cnf.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    let b = ebc(&["gen", "3sat", "--cnf", cnf.to_str().unwrap()]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn sweep_is_thread_independent_and_feeds_plotdata() {
    let grid = scratch("grid.json");
    fs::write(
        &grid,
        r#"{"base": {"k": 6, "q": 16, "trials": 3, "master_seed": 5}, "schemes": ["gh", "chunked"], "ns": [8, 16, 24, 32, 40]}"#,
    )
    .unwrap();
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_ebc"))
            .args(["sweep", "--config", grid.to_str().unwrap()])
            .env("EBC_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
    };
    let csv_text = run("1");
    assert_eq!(csv_text, run("3"));
    assert_eq!(csv_text.lines().count(), 1 + 10 * 3 + 10);

    let csv = scratch("sweep.csv");
    fs::write(&csv, &csv_text).unwrap();
    let dir = scratch("plots");
    let plot = |d: &PathBuf| {
        let o = ebc(&["plotdata", "--csv", csv.to_str().unwrap(), "--x", "N", "--out-dir", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        fs::read_to_string(d.join("completion_time_vs_N.dat")).unwrap()
    };
    let first = plot(&dir);
    let data: Vec<&str> = first.split("\n\n\n").next().unwrap().lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 5);
    let xs: Vec<usize> = data.iter().map(|l| l.split(' ').next().unwrap().parse().unwrap()).collect();
    assert_eq!(xs, vec![8, 16, 24, 32, 40]);
    assert_eq!(plot(&scratch("plots-again")), first);
}

#[test]
fn selftest_passes() {
    let o = ebc(&["selftest"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| l.ends_with("PASS")).count(), 4);
}
