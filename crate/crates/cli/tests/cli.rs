//! End-to-end tests of the binary: config validation, output layout,
//! determinism, and exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ionsim"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn read_csv_column(path: &Path, col: usize) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

const MBL_SMALL: &str = "experiment = \"mbl\"\nn = 4\nw_over_j0 = 6.0\nn_realizations = 2\nn_times = 20\nseed = 11\n";

#[test]
fn modes_run_matches_two_ion_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("modes.toml");
    write(
        &cfg,
        "experiment = \"modes\"\n[trap]\nn_ions = 2\naxial_freq = 3.141592653589793e6\ntransverse_freq = 3.141592653589793e7\n",
    );
    let out = dir.path().join("out");
    let status = bin().args(["modes", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());

    // Dimensionless equilibrium positions for two ions sit at +-(1/4)^(1/3).
    let positions = read_csv_column(&out.join("positions.csv"), 1);
    assert_eq!(positions.len(), 2);
    let a = 0.25f64.cbrt();
    assert!((positions[0] + a).abs() < 1e-8 && (positions[1] - a).abs() < 1e-8);

    let freqs = read_csv_column(&out.join("modes.csv"), 1);
    // Highest mode is the COM mode at the transverse trap frequency.
    assert!((freqs[0] - 3.141592653589793e7).abs() < 1e-3 * freqs[0]);
    assert!(freqs[1] < freqs[0]);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "modes");
    assert!(manifest["outputs"].as_array().unwrap().len() >= 3);
}

#[test]
fn mbl_mean_file_is_the_average_of_realizations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mbl.toml");
    write(&cfg, MBL_SMALL);
    let out = dir.path().join("out");
    let status = bin().args(["mbl", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());

    for col in 1..=5 {
        let r0 = read_csv_column(&out.join("realization_000.csv"), col);
        let r1 = read_csv_column(&out.join("realization_001.csv"), col);
        let mean = read_csv_column(&out.join("mean.csv"), col);
        for t in 0..mean.len() {
            assert!((mean[t] - 0.5 * (r0[t] + r1[t])).abs() < 1e-12);
        }
    }
}

#[test]
fn identical_configs_give_byte_identical_outputs_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mbl.toml");
    write(&cfg, MBL_SMALL);
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    assert!(bin()
        .args(["mbl", "--config"]).arg(&cfg).arg("--out").arg(&out1)
        .args(["--threads", "1"]).status().unwrap().success());
    assert!(bin()
        .args(["mbl", "--config"]).arg(&cfg).arg("--out").arg(&out2)
        .args(["--threads", "2"]).status().unwrap().success());
    for name in ["realization_000.csv", "realization_001.csv", "mean.csv", "summary.json"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between thread counts");
    }
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mbl.toml");
    write(&cfg, MBL_SMALL);
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    assert!(bin().args(["mbl", "--config"]).arg(&cfg).arg("--out").arg(&out1).status().unwrap().success());
    assert!(bin()
        .args(["mbl", "--config"]).arg(&cfg).arg("--out").arg(&out2)
        .args(["--seed", "99"]).status().unwrap().success());
    let m1: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out1.join("manifest.json")).unwrap()).unwrap();
    let m2: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out2.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m1["seed"], 11);
    assert_eq!(m2["seed"], 99);
    assert_ne!(m1["per_realization_seeds"], m2["per_realization_seeds"]);
    assert_ne!(m1["config_sha256"], m2["config_sha256"]);
    assert_ne!(
        fs::read(out1.join("realization_000.csv")).unwrap(),
        fs::read(out2.join("realization_000.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    // Missing file.
    let code = bin()
        .args(["mbl", "--config", "/nonexistent.toml", "--out"]).arg(&out)
        .status().unwrap().code().unwrap();
    assert_eq!(code, 2);

    // Unknown key.
    let cfg = dir.path().join("bad.toml");
    write(&cfg, "experiment = \"mbl\"\nw_over_j0 = 1.0\nbogus = 3\n");
    let code = bin().args(["mbl", "--config"]).arg(&cfg).arg("--out").arg(&out)
        .status().unwrap().code().unwrap();
    assert_eq!(code, 2);

    // Kind mismatch between config and subcommand.
    let cfg2 = dir.path().join("mix.toml");
    write(&cfg2, MBL_SMALL);
    let code = bin().args(["pretherm", "--config"]).arg(&cfg2).arg("--out").arg(&out)
        .status().unwrap().code().unwrap();
    assert_eq!(code, 2);
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn numeric_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // A transverse confinement this weak makes the zigzag mode unstable.
    let cfg = dir.path().join("modes.toml");
    write(
        &cfg,
        "experiment = \"modes\"\n[trap]\nn_ions = 5\naxial_freq = 3.0e6\ntransverse_freq = 3.1e6\n",
    );
    let out = dir.path().join("out");
    let output = bin().args(["modes", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(output.status.code().unwrap(), 3);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("exit_code"), "machine-readable record missing: {stderr}");
    assert!(!out.join("manifest.json").exists(), "no manifest after failure");
}

#[test]
fn threads_env_var_is_honored_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mbl.toml");
    write(&cfg, MBL_SMALL);
    let out = dir.path().join("out");
    let code = bin()
        .env("IONSIM_THREADS", "zebra")
        .args(["mbl", "--config"]).arg(&cfg).arg("--out").arg(&out)
        .status().unwrap().code().unwrap();
    assert_eq!(code, 2);
    assert!(bin()
        .env("IONSIM_THREADS", "2")
        .args(["mbl", "--config"]).arg(&cfg).arg("--out").arg(&out)
        .status().unwrap().success());
}
