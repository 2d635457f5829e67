use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orientcirc"))
        .args(args)
        .env_remove("ORIENTCIRC_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn netlist(name: &str, text: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const NOT_X1: &str = "nvars 1\ng1 = VAR 1\ng2 = NOT g1\noutput g2\n";
const AND2: &str = "nvars 2\ng1 = VAR 1\ng2 = VAR 2\ng3 = AND g1 g2\noutput g3\n";

#[test]
fn orient_reports_negation() {
    let p = netlist("not_x1.net", NOT_X1);
    let o = run(&["orient", p.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "g2 1 beta:1"), "{out}");
    assert!(out.contains("max_weight 1"));
}

#[test]
fn orient_uniform_failure_exits_one() {
    let p = netlist("not_x1_uniform.net", NOT_X1);
    let o = run(&["orient", p.to_str().unwrap(), "--uniform", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["orient", p.to_str().unwrap(), "--uniform", "1"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn triangle_table() {
    let o = run(&["gen", "clique", "--n", "3", "--k", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "tt:3:01");
}

#[test]
fn maxterms_list_bipartite_graphs() {
    let o = run(&["gen", "maxterms", "--n", "3", "--k", "3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("{12,13}"), "{out}");
    assert!(!out.contains("{12,13,23}"), "{out}");
}

#[test]
fn random_circuit_is_seeded() {
    let args = ["gen", "random-circuit", "--nvars", "4", "--depth", "4", "--neg", "1"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["--seed", "2", "gen", "random-circuit", "--nvars", "4", "--depth", "4", "--neg", "1"]);
    assert!(c.status.success());
    assert!(stdout(&a).starts_with("nvars 4"));
}

#[test]
fn unknown_suite_is_usage_error() {
    let o = run(&["verify", "nosuchsuite"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kw_sim_single_pair() {
    let p = netlist("and2.net", AND2);
    let o = run(&["kw-sim", p.to_str().unwrap(), "--x", "11", "--y", "01"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["answer"]["index"], 1);
    assert_eq!(v["total_bits"], 1);
}

#[test]
fn kw_sim_rejects_bad_pair() {
    let p = netlist("and2_bad.net", AND2);
    let o = run(&["kw-sim", p.to_str().unwrap(), "--x", "01", "--y", "00"]);
    assert!(!o.status.success());
}

#[test]
fn vertex_protocol_on_clique() {
    let o = run(&["gen", "clique", "--n", "4", "--k", "3", "--circuit"]);
    assert!(o.status.success());
    let p = netlist("clique43.net", &stdout(&o));
    let o = run(&["kw-sim", p.to_str().unwrap(), "--mode", "vertex", "--exhaustive"]);
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_is_deterministic_across_thread_counts() {
    let one = run(&["--jobs", "1", "--json", "verify", "eq1", "--corpus", "40", "--no-time"]);
    let four = run(&["--jobs", "4", "--json", "verify", "eq1", "--corpus", "40", "--no-time"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn verify_budget_truncates() {
    let o = run(&["--json", "verify", "roundtrip", "--budget", "0s"]);
    let out = stdout(&o);
    assert!(out.contains("truncated"), "{out}");
}
