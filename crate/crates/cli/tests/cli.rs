use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_poisonbench");

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn poisonbench(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env("POISONBENCH_DATA_DIR", repo().join("data/mnist"))
        .output()
        .unwrap()
}

fn smoke_config() -> String {
    repo().join("configs/synth_smoke.toml").display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_the_documented_files() {
    let tmp = tempfile::tempdir().unwrap();
    let o = poisonbench(tmp.path(), &["run", &smoke_config(), "--output_dir=out", "--hyper.iterations=30"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("out/metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,train_loss,test_acc,grad_norm_sq,xi_hat,a_hat,sigma2_hat_max,agg_dev");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("0,") && rows[0].ends_with(",NaN"));
    // 17 significant digits
    let loss = rows[1].split(',').nth(1).unwrap();
    assert_eq!(loss.split('e').next().unwrap().replace(['.', '-'], "").len(), 17, "{loss}");

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["config"]["hyper"]["iterations"], 30);
    assert_eq!(manifest["config"]["aggregator"]["assumed_regular"], 7);
    assert!(manifest["code_version"].is_string());
}

#[test]
fn config_errors_exit_with_two_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 4] = [
        (&["--hyper.workers=5", "--hyper.regular=4", "--partition.kind=one_class"], "`partition`"),
        (&["--aggregator.kind=trimean", "--hyper.regular=4"], "aggregator.assumed_regular"),
        (&["--hyper.gamma=oops"], "hyper.gamma"),
        (&["--attack.flip_prob=2"], "attack.flip_prob"),
    ];
    for (overrides, field) in cases {
        let mut args = vec!["run", "cfg"];
        let cfg = smoke_config();
        args[1] = &cfg;
        args.extend_from_slice(overrides);
        let o = poisonbench(tmp.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{overrides:?}");
        assert!(stderr(&o).contains(field), "{overrides:?}: {}", stderr(&o));
    }
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn validate_config_prints_the_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = poisonbench(tmp.path(), &["validate-config", &repo().join("configs/mnist_one_class.toml").display().to_string()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["log_every"], 15);
    assert!(v["dataset"]["dir"].as_str().unwrap().ends_with("data/mnist"));

    let missing = Command::new(BIN)
        .args(["validate-config", &repo().join("configs/mnist_one_class.toml").display().to_string()])
        .env_remove("POISONBENCH_DATA_DIR")
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("dataset.dir"));
}

#[test]
fn divergence_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = poisonbench(tmp.path(), &["run", &smoke_config(), "--hyper.gamma=1e9", "--aggregator.kind=mean"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
}

#[test]
fn theory_reports_every_check() {
    let tmp = tempfile::tempdir().unwrap();
    let o = poisonbench(tmp.path(), &["theory", "--out", "report.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    let ids: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(
        ids,
        [
            "trimean_contraction",
            "cc_contraction",
            "faba_contraction",
            "indistinguishable_sets",
            "quadratic_assumptions",
            "quadratic_lower_bound",
            "mean_upper_bound"
        ]
    );
    assert_eq!(v["passed"], true);

    let o = poisonbench(tmp.path(), &["theory", "--out", "bad.json", "--inject-fault", "mean-as-faba"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("faba_contraction"));
}

fn write_sweep(dir: &Path, aggregators: &str, extra: &str) -> PathBuf {
    let text = format!(
        r#"output_dir = "sweep"
[grid]
aggregators = {aggregators}
{extra}
[base]
log_every = 20
[base.dataset]
kind = "synth"
classes = 4
dim = 6
per_class = 40
spread = 0.8
[base.attack]
kind = "static_flip"
[base.aggregator]
kind = "mean"
[base.hyper]
workers = 8
regular = 7
iterations = 60
gamma = 0.05
alpha = 0.1
seed = 1
"#
    );
    let p = dir.join("sweep.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn one_cell_sweep_matches_a_single_run() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_sweep(tmp.path(), r#"["faba"]"#, "");
    let o = poisonbench(tmp.path(), &["sweep", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cell: Vec<_> = fs::read_dir(tmp.path().join("sweep")).unwrap().flatten().filter(|e| e.path().is_dir()).collect();
    assert_eq!(cell.len(), 1);
    let run_dir = cell[0].path().join("faba");

    let single = poisonbench(tmp.path(), &["run", run_dir.join("manifest.json").to_str().unwrap(), "--output_dir=single"]);
    assert!(single.status.success(), "{}", stderr(&single));
    assert_eq!(
        fs::read(run_dir.join("metrics.csv")).unwrap(),
        fs::read(tmp.path().join("single/metrics.csv")).unwrap()
    );
    let summary = fs::read_to_string(tmp.path().join("sweep/summary.csv")).unwrap();
    assert!(summary.starts_with("cell,attack,beta,flip_prob,regular,seed,acc_faba,best_acc,winner,failed\n"));
    assert!(summary.lines().nth(1).unwrap().contains(",faba,"));
}

#[test]
fn failing_cells_are_recorded_and_the_sweep_continues() {
    let tmp = tempfile::tempdir().unwrap();
    // TriMean is undefined at R = 4 of 8
    let p = write_sweep(tmp.path(), r#"["mean", "trimean"]"#, "regulars = [7, 4]");
    let o = poisonbench(tmp.path(), &["sweep", p.to_str().unwrap(), "--jobs", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let summary = fs::read_to_string(tmp.path().join("sweep/summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].ends_with(','), "{}", rows[0]);
    assert!(rows[1].ends_with(",mean,trimean"), "{}", rows[1]);
}
