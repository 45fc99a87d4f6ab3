use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn gsdecay(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsdecay"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("GSDECAY_OUT_DIR")
        .output()
        .unwrap()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn find(dir: &Path, suffix: &str) -> PathBuf {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().ends_with(suffix))
        .unwrap_or_else(|| panic!("no *{suffix} in {}", dir.display()))
}

const HARMONIC: &str = r#"{
  "potential": { "kind": "power", "params": { "beta": 1 } },
  "dimension": 1,
  "grid": { "half_width": 10, "points": 2000 }
}"#;

const SMALL_KERNEL_PLAN: &str = r#"{
  "potential": { "kind": "power", "params": { "beta": 1 } },
  "dimension": 1,
  "grid": { "half_width": 10, "points": 1000 },
  "fk": { "paths": 20000, "steps": 100,
          "exit_time": [ { "lambda": 1, "r": 1 }, { "lambda": 4, "r": 1 } ] },
  "resolvent": { "lambdas": [1, 4, 16] }
}"#;

#[test]
fn solve_writes_header_with_lambda() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "h.json", HARMONIC);
    let out = tmp.path().join("out");
    let o = gsdecay(&["solve"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(find(&out, "-ground-state.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# gsdecay "));
    assert!(lines.next().unwrap().starts_with("# config "));
    let lambda: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# lambda0 "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((lambda - 1.0).abs() < 1e-4, "{lambda}");
    assert!(text.lines().any(|l| l == "x1,phi0,V"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2001);
    assert!(String::from_utf8_lossy(&o.stdout).contains("lambda0"));
}

#[test]
fn quiet_suppresses_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "h.json", HARMONIC);
    let o = gsdecay(&["solve", "--quiet"], &cfg, &tmp.path().join("out"));
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
}

#[test]
fn invalid_delta_exits_two_and_names_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "bad.json",
        r#"{
  "potential": { "kind": "power", "params": { "beta": 1 } },
  "dimension": 1,
  "grid": { "half_width": 10, "points": 200 },
  "envelopes": [ { "side": "lower", "epsilon": 0.1, "delta": 1.5 } ]
}"#,
    );
    let out = tmp.path().join("out");
    let o = gsdecay(&["solve"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("envelopes[0].delta"), "{err}");
    assert!(!out.exists(), "nothing is written before validation passes");
}

#[test]
fn unknown_key_exits_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "bad.json",
        r#"{ "potential": { "kind": "power", "params": { "beta": 1 } },
             "dimension": 1, "grid": { "half_width": 10, "points": 200 }, "colour": 3 }"#,
    );
    let o = gsdecay(&["solve"], &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn solver_failure_exits_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "slow.json",
        r#"{ "potential": { "kind": "power", "params": { "beta": 1 } },
             "dimension": 2, "grid": { "half_width": 6, "points": 60 },
             "solver": { "tol": 1e-12, "max_iter": 2, "gap": false } }"#,
    );
    let o = gsdecay(&["solve"], &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn custom_table_potential_solves() {
    let tmp = TempDir::new().unwrap();
    let mut table = String::from("# x, V(x)\nx,value\n");
    for i in -60..=60 {
        let x = i as f64 / 10.0;
        table.push_str(&format!("{x},{}\n", x * x));
    }
    fs::write(tmp.path().join("v.csv"), table).unwrap();
    let cfg = write_config(
        &tmp,
        "t.json",
        r#"{ "potential": { "kind": "table", "table": "v.csv" },
             "dimension": 1, "grid": { "half_width": 6, "points": 1201 } }"#,
    );
    let out = tmp.path().join("out");
    let o = gsdecay(&["solve"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(find(&out, "-ground-state.csv")).unwrap();
    let lambda: f64 = text.lines().find_map(|l| l.strip_prefix("# lambda0 ")).unwrap().parse().unwrap();
    // Piecewise-linear x² on a 0.1 mesh: within a few 1e-3 of 1.
    assert!((lambda - 1.0).abs() < 5e-3, "{lambda}");
}

#[test]
fn table_outside_box_is_rejected() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("v.csv"), "0,0\n1,1\n2,4\n").unwrap();
    let cfg = write_config(
        &tmp,
        "t.json",
        r#"{ "potential": { "kind": "table", "table": "v.csv" },
             "dimension": 1, "grid": { "half_width": 6, "points": 100 } }"#,
    );
    let o = gsdecay(&["solve"], &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn envelope_report_passes_for_harmonic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "h.json", HARMONIC);
    let out = tmp.path().join("out");
    let o = gsdecay(&["envelope"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(find(&out, "-report.txt")).unwrap();
    assert!(report.contains("\npass = true\n"), "{report}");
    assert!(report.contains("condition_two.holds = false"));
    let env = fs::read_to_string(find(&out, "-envelopes.csv")).unwrap();
    assert_eq!(env.lines().filter(|l| l.ends_with(",true")).count(), 8);
}

#[test]
fn envelope_failure_exits_four() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "log.json",
        r#"{ "potential": { "kind": "log" }, "dimension": 1,
             "grid": { "half_width": 30, "points": 3001 } }"#,
    );
    let o = gsdecay(&["envelope"], &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("decay ratio band"));
}

fn verdicts(dir: &Path) -> Vec<String> {
    fs::read_to_string(find(dir, "-kernel-report.txt"))
        .unwrap()
        .lines()
        .filter(|l| l.starts_with("check."))
        .map(String::from)
        .collect()
}

#[test]
fn kernel_checks_pass_and_verdicts_ignore_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "k.json", SMALL_KERNEL_PLAN);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = gsdecay(&["kernel-checks", "--seed", "1"], &cfg, &a);
    let ob = gsdecay(&["kernel-checks", "--seed", "2"], &cfg, &b);
    assert!(oa.status.success(), "{}", String::from_utf8_lossy(&oa.stdout));
    assert!(ob.status.success(), "{}", String::from_utf8_lossy(&ob.stdout));
    let va = verdicts(&a);
    assert!(!va.is_empty() && va.iter().all(|l| l.ends_with("= pass")), "{va:?}");
    assert_eq!(va, verdicts(&b));
    let ea = fs::read_to_string(find(&a, "-exit-time.csv")).unwrap();
    let eb = fs::read_to_string(find(&b, "-exit-time.csv")).unwrap();
    assert_ne!(ea, eb, "different seeds should change the stderr digits");
    let resolvent = fs::read_to_string(find(&a, "-resolvent.csv")).unwrap();
    assert_eq!(resolvent.lines().filter(|l| l.ends_with(",pass")).count(), 12);
    find(&a, "-dirichlet.csv");
    find(&a, "-sandwich-lower.csv");
    find(&a, "-sandwich-upper.csv");
}

#[test]
fn reruns_are_byte_identical_and_stamped() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "k.json", SMALL_KERNEL_PLAN);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(gsdecay(&["report", "--quiet"], &cfg, &a).status.success());
    assert!(gsdecay(&["report", "--quiet"], &cfg, &b).status.success());
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 10);
    let hash = names[0].to_string_lossy().split('-').nth(1).unwrap().to_string();
    for n in &names {
        let x = fs::read(a.join(n)).unwrap();
        let y = fs::read(b.join(n)).unwrap();
        assert_eq!(x, y, "{n:?} differs between runs");
        let text = String::from_utf8(x).unwrap();
        assert!(text.starts_with(&format!("# gsdecay {}\n# config {hash}\n", env!("CARGO_PKG_VERSION"))), "{n:?}");
    }
}

#[test]
fn output_directory_precedence() {
    let tmp = TempDir::new().unwrap();
    let from_config = tmp.path().join("from-config");
    let cfg = write_config(
        &tmp,
        "h.json",
        &format!(
            r#"{{ "potential": {{ "kind": "power", "params": {{ "beta": 1 }} }},
                  "dimension": 1, "grid": {{ "half_width": 8, "points": 400 }},
                  "output_dir": {:?} }}"#,
            from_config
        ),
    );
    let from_env = tmp.path().join("from-env");
    let run = |out: Option<&Path>, env: bool| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_gsdecay"));
        c.args(["solve", "--quiet", "--config"]).arg(&cfg).current_dir(tmp.path());
        if let Some(o) = out {
            c.arg("--out").arg(o);
        }
        if env {
            c.env("GSDECAY_OUT_DIR", &from_env);
        } else {
            c.env_remove("GSDECAY_OUT_DIR");
        }
        assert!(c.status().unwrap().success());
    };
    run(None, false);
    assert!(from_config.exists());
    run(None, true);
    assert!(from_env.exists());
    let flag = tmp.path().join("from-flag");
    run(Some(&flag), true);
    assert!(flag.exists());
}

#[test]
fn seed_flag_changes_config_hash() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "h.json", HARMONIC);
    let out = tmp.path().join("out");
    assert!(gsdecay(&["solve", "--quiet", "--seed", "1"], &cfg, &out).status.success());
    assert!(gsdecay(&["solve", "--quiet", "--seed", "2"], &cfg, &out).status.success());
    assert_eq!(fs::read_dir(&out).unwrap().count(), 2);
}
