use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn enp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enp")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Data lines of a text output, provenance comments removed.
fn data(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

#[test]
fn verify_kernels_writes_reports_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k");
    let o = enp(&["verify-kernels", "--out", out.to_str().unwrap(), "--surface", "ellipsoid", "--set", "kernel_pairs=2000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    assert_eq!(report["passed"], Value::Bool(true));
    assert_eq!(report["config"]["surface"], "ellipsoid");
    assert_eq!(report["config"]["kernel_pairs"], "2000");
    assert!(report["code_hash"].as_str().is_some_and(|h| h.len() == 16));
    assert!(report["timestamp"].is_u64());
    let text = std::fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# config ") && l.contains("surface=ellipsoid")));
    let rows = data(&out.join("residuals.csv"));
    assert_eq!(rows[0], "check,max_residual,tolerance,status");
    assert!(rows[1..].iter().all(|r| r.ends_with(",pass")));
    assert!(!out.join(".enp.lock").exists());
}

#[test]
fn outputs_are_deterministic_apart_from_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap().to_string();
    let args = ["verify-kernels", "--out", &out, "--seed", "7", "--set", "kernel_pairs=500"];
    let read = || {
        assert_eq!(enp(&args).status.code(), Some(0));
        let mut r = json(&dir.path().join("report.json"));
        r.as_object_mut().unwrap().remove("timestamp");
        (r, std::fs::read(dir.path().join("residuals.csv")).unwrap(), std::fs::read(dir.path().join("summary.txt")).unwrap())
    };
    assert_eq!(read(), read());
}

#[test]
fn config_file_keys_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# kernels only\nsurface = star\nkernel_pairs = 300\nseed = 3\n").unwrap();
    let out = dir.path().join("o");
    let o = enp(&["verify-kernels", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    assert_eq!(report["config"]["surface"], "star");
    assert_eq!(report["seed"], 4);
}

#[test]
fn configuration_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "lambda = 1\ncolour = red\n").unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["verify-kernels", "--out", out, "--mu", "-1"], "'mu'"),
        (&["verify-kernels", "--out", out, "--surface", "torus"], "'surface'"),
        (&["verify-kernels", "--out", out, "--config", bad.to_str().unwrap()], "'colour'"),
        (&["spectrum", "--out", out, "--resolutions", "16"], "'resolutions'"),
        (&["probe-compactness", "--out", out, "--resolutions", "8,12", "--set", "probe=false"], "'resolutions'"),
    ];
    for (args, key) in cases {
        let o = enp(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(key), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn unknown_ceiling_exits_3_with_the_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let o = enp(&["spectrum", "--out", dir.path().to_str().unwrap(), "--resolutions", "8,10,12", "--set", "max_unknowns=500"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("resolution 12"), "{}", stderr(&o));
}

#[test]
fn locked_output_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(".enp.lock"), "1").unwrap();
    let o = enp(&["verify-kernels", "--out", dir.path().to_str().unwrap(), "--set", "kernel_pairs=10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("in use"));
    assert!(dir.path().join(".enp.lock").exists());
}

#[test]
fn spectrum_writes_sorted_eigenvalues_and_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let o = enp(&["spectrum", "--out", dir.path().to_str().unwrap(), "--resolutions", "8,10", "--set", "probe=false", "--set", "export_matrices=true"]);
    // the coarse grids do not meet the clustering thresholds, so exit 1 is expected
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let eig: Vec<f64> = data(&dir.path().join("eigenvalues.csv")).iter().map(|l| l.parse().unwrap()).collect();
    let report = json(&dir.path().join("report.json"));
    let finest = &report["resolutions"][1];
    assert_eq!(eig.len() as u64, finest["dim"].as_u64().unwrap());
    assert!(eig.windows(2).all(|w| w[0] <= w[1]));
    assert!((report["centers"][1].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-15);
    let bin = std::fs::read(dir.path().join("K_n10.bin")).unwrap();
    assert_eq!(&bin[..8], b"ENPMAT01");
    assert_eq!(bin.len(), 32 + 8 * eig.len() * eig.len());
    assert_eq!(data(&dir.path().join("K_n10.csv")).len(), eig.len());
    let rows = data(&dir.path().join("residuals.csv"));
    assert!(rows.iter().any(|r| r.starts_with("cluster_fraction,")));
    let code = o.status.code().unwrap();
    assert_eq!(code == 0, rows[1..].iter().all(|r| r.ends_with(",pass")));
}

#[test]
fn probe_compactness_writes_singular_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = enp(&["probe-compactness", "--out", dir.path().to_str().unwrap(), "--resolutions", "8,9,10", "--set", "probe_index=4", "--set", "lanczos_steps=30"]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let rows = data(&dir.path().join("singular_values.csv"));
    assert_eq!(rows[0], "composite,resolution,index,sigma");
    assert_eq!(rows.len() - 1, 4 * 3 * 4);
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["compactness"].as_array().unwrap().len(), 4);
}
