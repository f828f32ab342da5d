use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        Files { dir: tempfile::tempdir().unwrap() }
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn model(&self, name: &str) -> PathBuf {
        self.write(&format!("{name}.rbn"), rbn::corpus::model_source(name).unwrap())
    }

    fn scenario(&self, name: &str) -> PathBuf {
        self.write(&format!("{name}.rbs"), rbn::corpus::scenario_source(name).unwrap())
    }
}

fn rbn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbn")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn infer_robot() {
    let f = Files::new();
    let (m, s) = (f.model("robot"), f.scenario("robot4"));
    let o = rbn(&["infer", path(&m), path(&s), "--oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("P(s(l1)) = 0.911010742188"), "{out}");
    assert!(out.contains("nodes=11"), "{out}");
    assert!(out.contains("oracle=0.911010742188"), "{out}");
}

#[test]
fn json_output_is_deterministic() {
    let f = Files::new();
    let (m, s) = (f.model("robot"), f.scenario("robot_evidence"));
    let run = || {
        let o = rbn(&["infer", path(&m), path(&s), "--json"]);
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
            .lines()
            .map(|l| {
                let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                v.as_object_mut().unwrap().remove("time_ms");
                v
            })
            .collect::<Vec<_>>()
    };
    let first = run();
    assert_eq!(first.len(), 3);
    assert_eq!(first[0]["query"], "s(l1)");
    assert_eq!(first[1]["query"], "t(l3)");
    for _ in 0..3 {
        assert_eq!(run(), first);
    }
}

#[test]
fn exit_codes() {
    let f = Files::new();
    let robot = f.model("robot");
    let blocked = f.scenario("robot_blocked");
    assert_eq!(rbn(&["infer", path(&robot), path(&blocked)]).status.code(), Some(2));

    let sym = f.model("symmetric");
    let partial = f.scenario("symmetric_partial");
    let o = rbn(&["infer", path(&sym), path(&partial)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("well-founded: no"));
    let total = f.scenario("symmetric");
    let o = rbn(&["infer", path(&sym), path(&total)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("well-founded: yes"));

    let bad = f.write("bad.rbn", "relation r/1; r(x) = q(x);");
    assert_eq!(rbn(&["check", path(&bad)]).status.code(), Some(1));
    let garbled = f.write("garbled.rbn", "relation r/1 r(x) = ;");
    assert_eq!(rbn(&["check", path(&garbled)]).status.code(), Some(1));
    let missing = f.dir.path().join("missing.rbn");
    assert_eq!(rbn(&["check", path(&missing)]).status.code(), Some(1));

    let s4 = f.scenario("robot4");
    assert_eq!(rbn(&["infer", path(&robot), path(&s4), "--budget-bits", "2"]).status.code(), Some(4));
}

#[test]
fn check_reports_violations_and_recursion() {
    let f = Files::new();
    let bad = f.write("bad.rbn", "relation r/1; relation s/1; r(x) = s(x);");
    let o = rbn(&["check", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("no probability formula"), "{}", stdout(&o));

    let temporal = f.model("temporal");
    let o = rbn(&["check", path(&temporal)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("recursive"));
    let o = rbn(&["check", path(&temporal), "--recursive"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stderr.is_empty());
}

#[test]
fn deps_prints_the_robot_formula() {
    let f = Files::new();
    let m = f.model("robot");
    let o = rbn(&["deps", path(&m), "s", "b"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("pa(s, b)(x; y1, y2) := "), "{out}");
    assert_eq!(lines[1], "normal form: (x = y1 & x != y2) | (x = y2 & x != y1)");
    let o = rbn(&["deps", path(&m), "s", "t", "--ancestor"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rbn(&["deps", path(&m), "s", "nope"]).status.code(), Some(1));
}

#[test]
fn translate_fol() {
    let o = rbn(&["translate-fol", "exists y b(x,y)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "max{ b(x,y) | y ; true }");
    let o = rbn(&["translate-fol", "t(x) | t(y)", "--readable"]);
    assert_eq!(stdout(&o).trim(), "max{ t(x), t(y) | ; true }");
    assert_eq!(rbn(&["translate-fol", "exists"]).status.code(), Some(1));
}

#[test]
fn oracle_command_agrees_with_infer() {
    let f = Files::new();
    let (m, s) = (f.model("temporal"), f.scenario("temporal"));
    let a = stdout(&rbn(&["infer", path(&m), path(&s)]));
    let b = stdout(&rbn(&["oracle", path(&m), path(&s)]));
    let probs = |t: &str| -> Vec<String> {
        t.lines().filter(|l| l.starts_with("P(")).map(|l| l.split("  ").next().unwrap().to_string()).collect()
    };
    assert_eq!(probs(&a), probs(&b));
    assert_eq!(probs(&a).len(), 2);
}
