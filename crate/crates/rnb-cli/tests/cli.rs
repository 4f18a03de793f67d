//! End-to-end tests of the rnb binary: exit codes, determinism, file
//! contracts.

use std::path::Path;
use std::process::{Command, Output};

fn rnb(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnb"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

const NET: &str = r#"{
  "name": "toy-share",
  "blocks": [{"layers": [
    {"kind":"dense","in":8,"out":8},
    {"kind":"relu"},
    {"kind":"dense","in":8,"out":8},
    {"kind":"relu"},
    {"kind":"dense","in":8,"out":2}
  ]}],
  "reuse": [{"granularity":"layer-wise",
             "members":[{"block":0,"layer":0},{"block":0,"layer":2}],
             "transforms":[{"kind":"identity"},{"kind":"channel_shuffle","g":2}]}]
}"#;

fn write_net(dir: &Path) {
    std::fs::write(dir.join("net.json"), NET).unwrap();
}

fn train(dir: &Path) {
    let out = rnb(
        &[
            "train-toy",
            "--net",
            "net.json",
            "--epochs",
            "40",
            "--lr",
            "0.01",
            "--seed",
            "5",
            "--out",
            "out",
        ],
        dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_weights_exits_one_with_message() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path());
    let out = rnb(
        &[
            "simulate",
            "--net",
            "net.json",
            "--weights",
            "nope.rnbw",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("weights not found: nope.rnbw"), "{stderr}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rnb(&["cost", "--arch", "warpdrive"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_reports_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path());
    train(dir.path());
    for pass in ["a", "b"] {
        let out = rnb(
            &[
                "simulate",
                "--net",
                "net.json",
                "--weights",
                "out/weights.rnbw",
                "--seed",
                "9",
                "--no-timestamp",
                "--out",
                pass,
            ],
            dir.path(),
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let report_a = std::fs::read(dir.path().join("a/report.json")).unwrap();
    let report_b = std::fs::read(dir.path().join("b/report.json")).unwrap();
    assert_eq!(report_a, report_b);
    let trace_a = std::fs::read(dir.path().join("a/trace.csv")).unwrap();
    let trace_b = std::fs::read(dir.path().join("b/trace.csv")).unwrap();
    assert_eq!(trace_a, trace_b);
    assert!(trace_a.starts_with(b"tile_id,row,col,target,iterations,energy_nj,time_ns\n"));
}

#[test]
fn compare_report_with_itself_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path());
    train(dir.path());
    let out = rnb(
        &[
            "simulate",
            "--net",
            "net.json",
            "--weights",
            "out/weights.rnbw",
            "--no-timestamp",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let out = rnb(
        &[
            "compare",
            "out/report.json",
            "out/report.json",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["energy_savings_pct"].as_f64().unwrap(), 0.0);
    assert_eq!(summary["delay_savings_pct"].as_f64().unwrap(), 0.0);
    for cat in summary["categories"].as_array().unwrap() {
        assert_eq!(cat["delta"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn reuse_toggle_controls_write_counts() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path());
    train(dir.path());
    let on = rnb(
        &[
            "simulate",
            "--net",
            "net.json",
            "--weights",
            "out/weights.rnbw",
            "--no-timestamp",
            "--out",
            "out",
            "--report",
            "on.json",
        ],
        dir.path(),
    );
    assert!(on.status.success());
    let off = rnb(
        &[
            "simulate",
            "--net",
            "net.json",
            "--weights",
            "out/weights.rnbw",
            "--reuse",
            "off",
            "--no-timestamp",
            "--out",
            "out",
            "--report",
            "off.json",
        ],
        dir.path(),
    );
    assert!(off.status.success());
    let on: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/on.json")).unwrap())
            .unwrap();
    let off: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/off.json")).unwrap())
            .unwrap();
    // Shared 8x8 basic + head vs two streamed uses + head.
    assert_eq!(on["programming"]["element_writes"].as_u64().unwrap(), 128);
    assert_eq!(off["programming"]["element_writes"].as_u64().unwrap(), 192);
    assert_eq!(on["schema"].as_str().unwrap(), "rnb-report/1");
}

#[test]
fn cost_command_prints_reference_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = rnb(
        &[
            "cost", "--all", "-N", "256", "-B", "16", "-K", "8", "-C", "10", "--out", "out",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rnb_line = stdout.lines().find(|l| l.starts_with("rnb")).unwrap();
    assert!(rnb_line.contains("16"), "{rnb_line}");
    let holy_line = stdout.lines().find(|l| l.starts_with("holylight")).unwrap();
    assert!(holy_line.contains("1280"), "{holy_line}");
}

#[test]
fn cost_command_single_architecture() {
    let dir = tempfile::tempdir().unwrap();
    let out = rnb(
        &[
            "cost", "--arch", "rnb", "-N", "8", "-B", "16", "-K", "1", "--out", "out",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = stdout.lines().filter(|l| l.contains("rnb")).collect();
    assert_eq!(rows.len(), 1);
    // programming = min(8, 16) = 8
    let fields: Vec<&str> = rows[0].split_whitespace().collect();
    assert_eq!(fields[1], "8", "{stdout}");
    assert!(!stdout.contains("holylight"));
}

#[test]
fn train_zero_epochs_emits_initial_weights() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path());
    let out = rnb(
        &[
            "train-toy",
            "--net",
            "net.json",
            "--epochs",
            "0",
            "--seed",
            "5",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let weights = dir.path().join("out/weights.rnbw");
    assert!(weights.exists());
    let store = rnb_core::numerics::read_weights_file(&weights).unwrap();
    let net = rnb_core::netgraph::parse_netdesc(NET).unwrap();
    let init = rnb_core::netgraph::init_weights(&net, 5).unwrap();
    for (key, entry) in &init {
        // Container stores f32; compare at that precision.
        let want: Vec<f32> = entry.to_tensor().data().iter().map(|&v| v as f32).collect();
        let got: Vec<f32> = store[key]
            .to_tensor()
            .data()
            .iter()
            .map(|&v| v as f32)
            .collect();
        assert_eq!(want, got, "{key}");
    }
}

#[test]
fn emit_plot_data_produces_category_rows() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path());
    train(dir.path());
    let out = rnb(
        &[
            "simulate",
            "--net",
            "net.json",
            "--weights",
            "out/weights.rnbw",
            "--no-timestamp",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let out = rnb(
        &["emit-plot-data", "out/report.json", "--out", "out"],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("category,value\n"));
    for row in [
        "energy_programming_uj",
        "energy_calibration_uj",
        "latency_total_ns",
        "area_mrr_mm2",
    ] {
        assert!(stdout.contains(row), "missing {row}");
    }
}

#[test]
fn train_metrics_csv_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    write_net(dir.path());
    let out = rnb(
        &[
            "train-toy",
            "--net",
            "net.json",
            "--epochs",
            "3",
            "--seed",
            "5",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,loss,accuracy,lr");
    assert_eq!(lines.len(), 4);
}

#[test]
fn conv_net_initializes_and_simulates() {
    // epochs = 0 needs no dataset, so it also works for conv nets, which is
    // the way to get weights for a conv simulate run.
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("conv.json"),
        r#"{"name":"conv-toy","blocks":[{"layers":[
            {"kind":"conv2d","cin":1,"cout":4,"k":3},
            {"kind":"relu"}]}]}"#,
    )
    .unwrap();
    let out = rnb(&["train-toy", "--net", "conv.json", "--epochs", "0", "--out", "out"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = rnb(
        &[
            "simulate", "--net", "conv.json", "--weights", "out/weights.rnbw", "--input-hw",
            "4x4", "--no-timestamp", "--out", "out",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    // 4x9 lowered conv weight: two tiles of 64 cells.
    assert_eq!(report["programming"]["element_writes"].as_u64().unwrap(), 128);
    assert!(report["equivalence"]["max_steps"].as_f64().unwrap() <= 3.0);
}
