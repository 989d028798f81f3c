use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn labelshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_labelshift")).args(args).output().unwrap()
}

fn write_config(dir: &Path) -> String {
    let config = r#"{
        "datasets": [{"name": "blobs", "synthetic": {"means": [[-1, -1], [1, 1]],
            "variances": {"shared": [1, 1]}, "prior": [0.75, 0.25]}, "n": 240}],
        "models": [{"kind": "gaussian_nb"}],
        "methods": ["none", "distpfn", "distpfn_t"],
        "betas": [1.0, 3.0],
        "seeds": [0, 1, 2]
    }"#;
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    path.display().to_string()
}

#[test]
fn run_then_report_matches_recomputed_means() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");
    let run = labelshift(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("report.json").exists());

    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    // 3 methods x (unshifted + 2 betas) x 3 seeds
    assert_eq!(report.lines().count(), 1 + 27);

    // independent mean per (method, beta) from the raw rows
    let mut reader = csv::Reader::from_reader(report.as_bytes());
    let header = reader.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (method, beta, acc) = (col("method"), col("beta"), col("accuracy"));
    let mut sums: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.unwrap();
        let slot = sums.entry((rec[method].to_string(), rec[beta].to_string())).or_default();
        slot.0 += rec[acc].parse::<f64>().unwrap();
        slot.1 += 1;
    }

    let summary = labelshift(&["report", "--in", out.to_str().unwrap(), "--group-by", "method,beta"]);
    assert!(summary.status.success());
    let text = String::from_utf8(summary.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().clone();
    assert_eq!(&header[0], "method");
    assert_eq!(&header[1], "beta");
    let mean_col = header.iter().position(|h| h == "accuracy_mean").unwrap();
    let mut seen = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let (sum, n) = sums[&(rec[0].to_string(), rec[1].to_string())];
        let mean: f64 = rec[mean_col].parse().unwrap();
        assert!((mean - sum / n as f64).abs() < 1e-12);
        assert_eq!(rec[2].parse::<usize>().unwrap(), n);
        seen += 1;
    }
    assert_eq!(seen, sums.len());
}

#[test]
fn shift_gen_writes_rows_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("a,b,class\n");
    for i in 0..100 {
        text += &format!("{i},{},{}\n", i * 2, if i < 90 { "common" } else { "rare" });
    }
    let data = dir.path().join("in.csv");
    fs::write(&data, text).unwrap();
    let out = dir.path().join("shifted.csv");
    let args = [
        "shift-gen", "--data", data.to_str().unwrap(), "--label", "class", "--beta", "2", "--seed", "3",
        "--out", out.to_str().unwrap(), "--target-size", "400",
    ];
    let first = labelshift(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let rows = fs::read_to_string(&out).unwrap();
    assert_eq!(rows.lines().next().unwrap(), "a,b,class");
    assert_eq!(rows.lines().count(), 401);
    let rare = rows.lines().filter(|l| l.ends_with(",rare")).count();
    // weights (0.1^-2, 0.9^-2) normalized give the rare class ~0.988
    assert!(rare > 370, "{rare}");

    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("shifted.csv.json")).unwrap()).unwrap();
    assert_eq!(sidecar["n_rows"], 400);
    assert_eq!(sidecar["beta"], 2.0);
    assert_eq!(sidecar["source_histogram"], serde_json::json!([90, 10]));

    // same seed, same bytes
    let again = dir.path().join("again.csv");
    let mut args2 = args;
    args2[10] = again.to_str().unwrap();
    assert!(labelshift(&args2).status.success());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = labelshift(&["run", "--config", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.json"));

    let config = write_config(dir.path());
    let out = dir.path().join("out");
    assert!(labelshift(&["run", "--config", &config, "--out", out.to_str().unwrap()]).status.success());
    let axis = labelshift(&["report", "--in", out.to_str().unwrap(), "--group-by", "method,colour"]);
    assert_eq!(axis.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&axis.stderr).contains("colour"));
}
