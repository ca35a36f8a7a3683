use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swapstable")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_prints_cost_and_trace_path() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("line.trace");
    let o = run(&["solve", "--instance", path_str(&fixture("line.inst")), "--rho", "1", "--out", path_str(&trace)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("cost 2\n"), "{text}");
    assert!(text.contains(&format!("trace {}", trace.display())));
    let written = std::fs::read_to_string(&trace).unwrap();
    assert!(written.contains("step 1 cost 2 "));
    assert!(written.ends_with("terminated local_optimum\n"));
}

#[test]
fn oracle_lists_four_optima() {
    let o = run(&["oracle", "--instance", path_str(&fixture("line.inst"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("optimal_cost 2\n"));
    assert!(text.contains("optima 4\n"));
}

#[test]
fn k_override_changes_the_optimum() {
    let o = run(&["oracle", "--instance", path_str(&fixture("line.inst")), "--k", "4"]);
    assert!(stdout(&o).starts_with("optimal_cost 0\n"));
}

#[test]
fn generated_pvc_instance_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("p3.inst");
    let graph = fixture("p3.graph");
    let o = run(&["gen-pvc4", "--graph", path_str(&graph), "--k", "1", "--out", path_str(&inst)]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["certify-reduction", "--variant", "pvc4", "--graph", path_str(&graph), "--k", "1", "--instance", path_str(&inst)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("equivalent yes\n"));
    assert!(text.contains("instance_matches yes\n"));

    // A pvc6 certificate against the pvc4 file reports the mismatch.
    let o = run(&["certify-reduction", "--variant", "pvc6", "--graph", path_str(&graph), "--k", "1", "--instance", path_str(&inst)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("instance_matches no\n"));
}

#[test]
fn grid_generation_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("grid.inst");
    let tiling = fixture("row.tiling");
    for cmd in ["gen-grid", "gen-cylinder"] {
        let o = run(&[cmd, "--tiling", path_str(&tiling), "--out", path_str(&inst)]);
        assert_eq!(o.status.code(), Some(0), "{cmd}");
    }
    let o = run(&["certify-reduction", "--variant", "grid", "--tiling", path_str(&tiling)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("source grid_tiling\nequivalent yes\n"));
    let o = run(&["gen-grid", "--tiling", path_str(&tiling), "--eps", "2/5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unstable_instance_is_a_negative_verdict() {
    let two = fixture("two_optima.inst");
    let o = run(&["verify-stability", "--instance", path_str(&two), "--alpha", "11/10", "--trials", "20"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("status violated\n"));
    let o = run(&["verify-stability", "--instance", path_str(&two), "--alpha", "11/10", "--beta", "2", "--trials", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["verify-stability", "--instance", path_str(&two), "--alpha", "11/10", "--family"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("status stable\n"));
}

#[test]
fn exit_codes_for_errors() {
    let line = fixture("line.inst");
    assert_eq!(run(&["oracle", "--instance", path_str(&line), "--budget", "2"]).status.code(), Some(3));
    assert_eq!(run(&["oracle", "--instance", "/nonexistent/file.inst"]).status.code(), Some(2));
    assert_eq!(run(&["solve"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--instance", path_str(&line), "--rho", "0"]).status.code(), Some(2));
    assert_eq!(run(&["verify-stability", "--instance", path_str(&line), "--alpha", "x/y"]).status.code(), Some(2));
    assert_eq!(run(&["certify-reduction", "--variant", "pvc4"]).status.code(), Some(2));
    assert_eq!(run(&["oracle", "--instance", path_str(&fixture("p3.graph"))]).status.code(), Some(2));
}

#[test]
fn outputs_do_not_depend_on_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let two = fixture("two_optima.inst");
    let mut files = Vec::new();
    for jobs in ["1", "4"] {
        let out = dir.path().join(format!("verdict{jobs}"));
        let o = run(&[
            "--jobs", jobs, "verify-stability", "--instance", path_str(&two), "--alpha", "3/2", "--beta", "1", "--trials", "200", "--seed", "5",
            "--out", path_str(&out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        files.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn lemma_checks_pass() {
    let o = run(&["check-lemmas", "--max-vertex", "5", "--instance", path_str(&fixture("line.inst"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("counterexamples 0 "));
    assert!(text.ends_with("lemmas hold\n"));
}

#[test]
fn bench_reports_each_rho() {
    let o = run(&["bench", "--instance", path_str(&fixture("line.inst")), "--rho", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("rho 1 cost 2 iterations 1 optimal yes"));
    assert!(text.contains("rho 2 cost 2 "));
}
