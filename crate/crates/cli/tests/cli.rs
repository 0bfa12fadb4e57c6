use std::path::Path;
use std::process::{Command, Output};

fn nvcap(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvcap"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("NVCAP_OUT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn leakage_sweep_writes_table_plot_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = nvcap(dir.path(), &["leakage-sweep", "--points", "13"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("leakage.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("[V]"));
    assert_eq!(csv.lines().count(), 14);
    assert!(dir.path().join("plot_leakage.py").exists());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "leakage-sweep");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(m["outputs"].to_string().contains("leakage.csv"));
}

#[test]
fn parse_and_validation_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = dir.path().join("typo.params");
    std::fs::write(&bad_key, "[device]\nt_fee = 10 nm\n").unwrap();
    let o = nvcap(dir.path(), &["--params", bad_key.to_str().unwrap(), "validate"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("typo.params:2:1") && e.contains("t_fe"), "{e}");

    let bad_value = dir.path().join("neg.params");
    std::fs::write(&bad_value, "[device]\nt_fe = -10 nm\n").unwrap();
    let o = nvcap(dir.path(), &["--params", bad_value.to_str().unwrap(), "validate"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("t_fe"));

    let o = nvcap(dir.path(), &["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nvcap(dir.path(), &["--params", "/nonexistent/file.params", "validate"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn validate_accepts_the_shipped_parameter_file() {
    let dir = tempfile::tempdir().unwrap();
    let shipped = concat!(env!("CARGO_MANIFEST_DIR"), "/../../params/nominal.params");
    let o = nvcap(dir.path(), &["--params", shipped, "validate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let resolved = std::fs::read_to_string(dir.path().join("resolved.params")).unwrap();
    // the resolved file is itself a valid input
    let again = tempfile::tempdir().unwrap();
    let path = again.path().join("resolved.params");
    std::fs::write(&path, &resolved).unwrap();
    let o = nvcap(again.path(), &["--params", path.to_str().unwrap(), "validate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), resolved);
}

#[test]
fn replay_reproduces_outputs_bit_for_bit() {
    let first = tempfile::tempdir().unwrap();
    let o = nvcap(
        first.path(),
        &[
            "--seed",
            "11",
            "montecarlo",
            "--experiment",
            "params",
            "--samples",
            "200",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let second = tempfile::tempdir().unwrap();
    let manifest = first.path().join("manifest.json");
    let o = nvcap(second.path(), &["replay", manifest.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["mc_samples.csv", "mc_summary.csv", "resolved.params"] {
        assert_eq!(
            std::fs::read(first.path().join(f)).unwrap(),
            std::fs::read(second.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn tampered_manifest_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(nvcap(dir.path(), &["validate"]).status.success());
    let path = dir.path().join("manifest.json");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("t_fe = 10", "t_fe = 11", 1)).unwrap();
    let o = nvcap(tempfile::tempdir().unwrap().path(), &["replay", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(7), "{}", stderr(&o));
}

#[test]
fn synthesized_data_calibrates_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = nvcap(
        dir.path(),
        &["calibrate", "--data", data.to_str().unwrap(), "--synthesize", "0"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(data.join("leakage_fe.csv").exists());
    let o = nvcap(
        dir.path(),
        &[
            "calibrate",
            "--data",
            data.to_str().unwrap(),
            "--stages",
            "d",
            "--passes",
            "1",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let fitted = std::fs::read_to_string(dir.path().join("fitted.params")).unwrap();
    assert!(fitted.contains("n_tr_fe"));
    let o = nvcap(
        dir.path(),
        &["calibrate", "--data", data.to_str().unwrap(), "--plan", "bogus"],
    );
    assert_eq!(o.status.code(), Some(5));
}
