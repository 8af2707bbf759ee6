use std::path::Path;
use std::process::{Command, Output};

use wwdtn::table::Table;

fn wwdtn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wwdtn")).args(args).current_dir(dir).output().expect("binary runs")
}

fn read_table(path: &Path) -> Table {
    Table::from_csv(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn symbol_half_is_tanh() {
    let dir = tempfile::tempdir().unwrap();
    let out = wwdtn(
        &["symbol", "--s", "0.5", "--r-min", "0", "--r-max", "10", "--points", "11", "--out", "t.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_table(&dir.path().join("t.csv"));
    assert_eq!(t.len(), 11);
    assert!(t.comments[0].starts_with("argv: wwdtn symbol"));
    let r = t.column("r").unwrap();
    let st = t.column("s_tilde").unwrap();
    for (r, v) in r.iter().zip(&st) {
        assert!((v - r.tanh()).abs() <= 1e-12);
    }
    assert_eq!(r, (0..=10).map(f64::from).collect::<Vec<_>>());
}

#[test]
fn outputs_are_deterministic_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["symbol", "--s", "0.3,0.7", "--r-min", "1e-3", "--r-max", "1e3", "--points", "64", "--spacing", "log"];
    let mut a = args.to_vec();
    a.extend(["--out", "a.csv"]);
    let mut b = args.to_vec();
    b.extend(["--out", "b.csv"]);
    assert!(wwdtn(&a, dir.path()).status.success());
    assert!(wwdtn(&b, dir.path()).status.success());
    let ta = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let tb = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    // Only the recorded argv differs.
    assert_eq!(ta.lines().skip(1).collect::<Vec<_>>(), tb.lines().skip(1).collect::<Vec<_>>());
    let mut names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(names, ["a.csv", "b.csv"]);
}

#[test]
fn ts_curve_writes_csv_and_log_log_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = wwdtn(
        &[
            "ts-curve", "--s", "0.25", "--r-min", "1e-4", "--r-max", "1e3", "--points", "40", "--out", "ts.csv",
            "--plot", "ts.svg",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_table(&dir.path().join("ts.csv"));
    assert_eq!(t.len(), 40);
    let v = t.column("t_s").unwrap();
    assert!(v.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
    let svg = std::fs::read_to_string(dir.path().join("ts.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 1);
    assert!(svg.contains("slope 1-2s") && svg.contains("1e-4"));
}

#[test]
fn usage_errors_exit_two_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["symbol", "--bogus"],
        vec!["symbol", "--s", "1.5"],
        vec!["ts-curve", "--s", "0.5"],
        vec!["oracle", "--s", "0.5", "--cells", "64,32"],
        vec!["limsup-trend", "--s", "0.3", "--epsilons", "0.01,0.1"],
        vec!["selftest", "--only", "12"],
    ] {
        let out = wwdtn(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = wwdtn(&["symbol", "--s", "0.5", "--out", "missing/dir/t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = wwdtn(&["ts-curve", "--help"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[default: 40]") && text.contains("[default: 0.0001]"), "{text}");
    let top = wwdtn(&["--help"], dir.path());
    let text = String::from_utf8_lossy(&top.stdout);
    for sub in ["symbol", "oracle", "energy", "ts-curve", "gamma-min", "limsup-trend", "averaging", "selftest"] {
        assert!(text.contains(sub), "{sub}");
    }
}

#[test]
fn gamma_min_json_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = wwdtn(
        &[
            "gamma-min",
            "--s",
            "0.6",
            "--n",
            "64",
            "--max-iter",
            "30",
            "--json",
            "tr.json",
            "--out",
            "tr.csv",
            "--plot",
            "m.svg",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tr.json")).unwrap()).unwrap();
    let runs = doc.as_array().unwrap();
    assert_eq!(runs.len(), 2);
    for run in runs {
        let obj = run.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["converged", "energy_history", "epsilon", "s"]);
        let h: Vec<f64> = obj["energy_history"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
    }
    let csv = read_table(&dir.path().join("tr.csv"));
    assert_eq!(csv.columns, ["epsilon", "iteration", "energy"]);
}

#[test]
fn energy_field_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = wwdtn(
        &["energy", "--s", "0.3", "--epsilon", "0.1", "--profile", "indicator", "--field-out", "f.csv"],
        dir.path(),
    );
    assert!(a.status.success());
    let b = wwdtn(&["energy", "--s", "0.3", "--epsilon", "0.1", "--field", "f.csv"], dir.path());
    assert!(b.status.success());
    let ja: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let jb: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(ja, jb);
    assert_eq!(ja["report"]["potential"].as_f64(), Some(0.0));
    assert_eq!(ja["regime"], "subcritical");
}

#[test]
fn selftest_subset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = wwdtn(&["selftest", "--only", "1,3,11", "--json", "st.json"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);
    assert!(dir.path().join("st.json").exists());
}
