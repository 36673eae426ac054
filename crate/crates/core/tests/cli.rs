use std::io::Write;
use std::process::{Command, Output, Stdio};

fn funk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_funk"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env_remove("FUNK_FUEL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_rejects_the_compose_listing() {
    let o = funk(&["check", "examples/fig1_compose.fk"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(": upward-funarg: "), "{err}");
    assert!(err.starts_with("examples/fig1_compose.fk:"), "{err}");
}

#[test]
fn run_prints_the_observation() {
    let o = funk(&["run", "examples/fig3_twice.fk"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "5");
}

#[test]
fn diff_over_the_corpus_agrees() {
    let o = funk(&["diff", "examples", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["all_agree"], true);
    assert_eq!(v["entries"].as_array().unwrap().len(), 17);
    assert_eq!(v["rejected"].as_array().unwrap().len(), 7);
}

#[test]
fn trace_ends_with_a_final_record() {
    let o = funk(&["trace", "--json", "examples/zero_arg_call.fk"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines[0]["rule"], "Init");
    let last = lines.last().unwrap();
    assert_eq!(last["final"], true);
    assert_eq!(last["observation"]["value"], 7);
    assert!(lines.iter().all(|l| l["version"] == 1));
}

#[test]
fn stats_show_frame_reuse() {
    let with = funk(&["stats", "--json", "examples/tailcall_lists.fk"]);
    let without = funk(&["stats", "--json", "--no-tailcall", "examples/tailcall_lists.fk"]);
    let cells = |o: &Output| {
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["stats"]["max_retained_cells"].as_u64().unwrap()
    };
    assert_eq!(cells(&with), 100);
    assert!(cells(&without) >= 2500);
}

#[test]
fn fuel_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_funk"))
        .args(["run", "examples/accumulate_tail.fk"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env("FUNK_FUEL", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn reads_standard_input() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_funk"))
        .args(["region-run"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"var x = 2; var f = fun(y:int)[x]{ return x * y; }; var r = f(21); return r;")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "42");
}

#[test]
fn other_commands() {
    let o = funk(&["erase-run", "examples/effectpoly_ok.fk"]);
    assert_eq!((o.status.code(), stdout(&o).trim().to_string()), (Some(0), "12".to_string()));
    let o = funk(&["emit-regions", "examples/zero_arg_call.fk"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("new r1."), "{}", stdout(&o));
    let o = funk(&["run", "--oracle", "examples/nested_effect_abs.fk"]);
    assert_eq!(stdout(&o).trim(), "7");
    assert_eq!(funk(&["run", "no/such/file.fk"]).status.code(), Some(64));
    assert_eq!(funk(&["emit-regions", "--fuel", "3", "examples/arity.fk"]).status.code(), Some(64));
}
