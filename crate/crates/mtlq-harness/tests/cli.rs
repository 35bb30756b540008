//! End-to-end checks of the `mtlq` binary at toy scale.

use std::path::Path;
use std::process::Command;

fn mtlq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mtlq"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn generate_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        run_ok(mtlq()
            .args(["generate", "--m", "50", "--seed", "9"])
            .arg("--file")
            .arg(path)
            .arg("--out")
            .arg(dir.path()));
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    let text = String::from_utf8(bytes_a).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("r1,r2,") && header.ends_with("o2_pct_air,temp_c"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn train_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(mtlq()
        .args([
            "train", "--network", "a10", "--m", "150", "--seed", "2", "--epochs", "6",
        ])
        .arg("--out")
        .arg(dir.path()));
    assert!(out.contains("dev MAE O2"));

    let run_dir = dir.path().join("a10_seed2");
    assert!(run_dir.join("checkpoint.txt").is_file());
    assert!(run_dir.join("trace.csv").is_file());
    assert!(dir.path().join("config_resolved.txt").is_file());

    let before = std::fs::read(run_dir.join("dev/report.json")).unwrap();
    let out = run_ok(mtlq().arg("report").arg("--run").arg(&run_dir));
    assert!(out.contains("a10 (dev)"));
    let after = std::fs::read(run_dir.join("dev/report.json")).unwrap();
    assert_eq!(before, after, "recomputed report must match the stored one");
}

#[test]
fn train_with_svg_emits_plots() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(mtlq()
        .args([
            "train", "--network", "a10", "--m", "120", "--seed", "3", "--epochs", "5", "--svg",
        ])
        .arg("--out")
        .arg(dir.path()));
    let dev = dir.path().join("a10_seed3/dev");
    for f in ["boxplot_o2.svg", "boxplot_t.svg", "kde_o2.svg", "kde_t.svg"] {
        assert!(dev.join(f).is_file(), "{f} missing");
    }
}

#[test]
fn compare_smoke_emits_tables() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(mtlq()
        .args([
            "compare",
            "--networks",
            "a10,c",
            "--seeds",
            "1,2",
            "--m",
            "150",
            "--epochs",
            "5",
        ])
        .arg("--out")
        .arg(dir.path()));
    let mae = std::fs::read_to_string(dir.path().join("compare_mae.csv")).unwrap();
    assert!(mae.starts_with("network,seed,split,mae_o2_pct_air,mae_t_c"));
    // 2 networks x 2 seeds x 2 splits
    assert_eq!(mae.lines().count(), 9);
    let table = std::fs::read_to_string(dir.path().join("compare_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(Path::new(&dir.path().join("a10_seed1/dev/predictions.csv")).is_file());
}

#[test]
fn custom_spec_file_trains() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("tiny.spec");
    std::fs::write(
        &spec,
        "input_dim = 16\ntrunk = 8\nbranch = o2 | 3 | O2 | 2\nbranch = joint | - | O2,T | 1\n",
    )
    .unwrap();
    run_ok(mtlq()
        .args(["train", "--m", "120", "--seed", "4", "--epochs", "5"])
        .arg("--network")
        .arg(format!("spec:{}", spec.display()))
        .arg("--out")
        .arg(dir.path()));
    let runs: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("custom-tiny"))
        .collect();
    assert_eq!(runs.len(), 1);
}

#[test]
fn sweep_single_row_smoke() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(mtlq()
        .args([
            "sweep", "--m", "150", "--epochs", "5", "--seed", "1", "--grid", "0.3,5,5",
        ])
        .arg("--out")
        .arg(dir.path()));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "header plus one row");
    assert!(dir.path().join("sweep_summary.json").is_file());
}

#[test]
fn config_file_drives_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(&cfg, "m = 130\nseed = 6\nepochs = 4\nnetwork = a10\n").unwrap();
    run_ok(mtlq()
        .arg("train")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path()));
    assert!(dir.path().join("a10_seed6").is_dir());
    let resolved = std::fs::read_to_string(dir.path().join("config_resolved.txt")).unwrap();
    assert!(resolved.contains("m = 130"));
    assert!(resolved.contains("epochs = 4"));
}
