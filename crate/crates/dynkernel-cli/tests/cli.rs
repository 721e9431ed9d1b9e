use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dynkernel"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dynkernel-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_grid_counts_and_determinism() {
    let a = bin().args(["gen", "grid", "9"]).output().unwrap();
    assert!(a.status.success());
    let text = stdout(&a);
    assert_eq!(text.lines().filter(|l| l.starts_with("av ")).count(), 9);
    assert_eq!(text.lines().filter(|l| l.starts_with("ae ")).count(), 12);
    for kind in ["random-planar-incremental", "mixed-insert-delete", "bounded-degree-tree-plus"] {
        let x = bin().args(["gen", kind, "50", "--seed", "4"]).output().unwrap();
        let y = bin().args(["gen", kind, "50", "--seed", "4"]).output().unwrap();
        assert_eq!(x.stdout, y.stdout);
    }
    let bad = bin().args(["gen", "cube", "3"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn empty_stream_gives_header_only() {
    let o = run_with_stdin(&["run"], "# nothing\n");
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 1);
    let v: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    assert_eq!(v["header"], true);
    assert_eq!(v["schema"], 1);
}

#[test]
fn c4_kernel_stream_is_consistent() {
    let kout = scratch("c4.kernel");
    let o = run_with_stdin(
        &["run", "--plugin", "vc", "--paranoid", "--kernel-out", kout.to_str().unwrap()],
        "av 1\nav 2\nav 3\nav 4\nae 1 2\nae 2 3\nae 3 4\nae 4 1\n",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let metrics: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(metrics.len(), 9);
    for (i, m) in metrics[1..].iter().enumerate() {
        assert_eq!(m["idx"], i);
    }
    assert_eq!(metrics[8]["m"], 4);
    let text = std::fs::read_to_string(&kout).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("# final"), "{last}");
    let field = |k: &str| -> u64 {
        last.split_whitespace().find_map(|f| f.strip_prefix(&format!("{k}="))).unwrap().parse().unwrap()
    };
    assert_eq!(field("opt_graph"), 2);
    assert_eq!(field("opt_kernel") + field("delta"), 2);
}

#[test]
fn input_errors_name_the_line_or_update() {
    let o = run_with_stdin(&["run"], "av 1\nav 2\nbogus 3\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let o = run_with_stdin(&["run", "--density", "0.5"], "av 1\nav 2\nav 3\nae 1 2\nae 2 3\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("update 4"), "{}", stderr(&o));
    let o = run_with_stdin(&["run"], "av 1\nav 1\n");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn metrics_replay_byte_identical() {
    let stream = stdout(&bin().args(["gen", "mixed-insert-delete", "40", "--seed", "2"]).output().unwrap());
    let a = run_with_stdin(&["run", "--plugin", "ds"], &stream);
    let b = run_with_stdin(&["run", "--plugin", "ds"], &stream);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn synth_is_deterministic_and_checked() {
    let (p1, p2) = (scratch("vc1.store"), scratch("vc1b.store"));
    for p in [&p1, &p2] {
        let o = bin().args(["synth", "--plugin", "vc", "--t-max", "1", "--n-max", "3", "-o", p.to_str().unwrap()]).output().unwrap();
        assert!(o.status.success());
        assert!(stdout(&o).contains("classes 4"));
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    let ds = scratch("ds.store");
    let o = bin().args(["synth", "--plugin", "ds", "--t-max", "2", "--n-max", "5", "-o", ds.to_str().unwrap()]).output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("classes "));
    let o = bin().args(["synth", "--plugin", "ds", "--t-max", "4", "--n-max", "9", "--budget", "1000", "-o", ds.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    // a synthesized store can drive a run
    let o = run_with_stdin(&["run", "--plugin", "vc", "--store", p1.to_str().unwrap(), "--paranoid"], "av 1\nav 2\nae 1 2\n");
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn bench_buckets() {
    let o = bin().args(["bench", "--gen", "grid", "--sizes", "16,64"]).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.lines().any(|l| l.starts_with("4 ")));
    assert!(table.lines().any(|l| l.starts_with("6 ")));
    let f = scratch("tiny.stream");
    std::fs::write(&f, "av 1\nav 2\nae 1 2\n").unwrap();
    let o = bin().args(["bench", f.to_str().unwrap()]).output().unwrap();
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().filter(|l| !l.starts_with('#') && !l.starts_with("log2n")).count(), 1);
}
