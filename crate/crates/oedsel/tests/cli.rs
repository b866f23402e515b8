//! End-to-end checks of the binary: subcommand grammar, exit codes, and
//! output artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn oedsel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oedsel"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn run_writes_csv_and_json_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "run",
        "--model",
        "linear_gaussian",
        "--n",
        "6",
        "--d",
        "3",
        "--selector",
        "lsig,random",
        "--k",
        "3",
        "--trials",
        "2",
        "--seed",
        "7",
        "--out",
        "out.csv",
    ];
    let first = oedsel(&args, dir.path());
    assert!(first.status.success(), "{first:?}");
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert!(csv.starts_with(
        "trial,selector,k,design,mi_value,mi_stderr,wall_time_ms,op_mults,op_factorizations,op_model_evals\n"
    ));
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 3);
    assert!(dir.path().join("out.json").exists());

    let bytes_first = std::fs::read(dir.path().join("out.csv")).unwrap();
    let second = oedsel(&args, dir.path());
    assert!(second.status.success());
    assert_eq!(
        bytes_first,
        std::fs::read(dir.path().join("out.csv")).unwrap()
    );
}

#[test]
fn run_accepts_config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        r#"
[model]
name = "linear_gaussian"
n = 5
d = 2

[selectors]
list = ["gauss"]

[run]
k_max = 2
trials = 1
out = "from_config.csv"
"#,
    )
    .unwrap();
    let out = oedsel(
        &["run", "--config", "exp.toml", "--trials", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let csv = std::fs::read_to_string(dir.path().join("from_config.csv")).unwrap();
    // override took effect: 2 trials x 1 selector x k_max 2
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn run_rejects_invalid_configuration_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = oedsel(
        &[
            "run", "--model", "epidemic", "--n", "5", "--k", "9", "--trials", "1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn run_reports_trial_failures_with_exit_two() {
    // exhaustive selection needs the closed form; epidemic trials all fail
    let dir = tempfile::tempdir().unwrap();
    let out = oedsel(
        &[
            "run",
            "--model",
            "epidemic",
            "--n",
            "5",
            "--selector",
            "exhaustive",
            "--k",
            "2",
            "--trials",
            "1",
            "--eval-inner",
            "8",
            "--eval-outer",
            "8",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn evaluate_prints_estimate_and_validates_design() {
    let dir = tempfile::tempdir().unwrap();
    let ok = oedsel(
        &[
            "evaluate",
            "--model",
            "linear_gaussian",
            "--n",
            "6",
            "--d",
            "3",
            "--design",
            "3;0;5",
        ],
        dir.path(),
    );
    assert!(ok.status.success(), "{ok:?}");
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("MI ="), "{stdout}");
    assert!(stdout.contains("closed-form"), "{stdout}");

    let nmc = oedsel(
        &[
            "evaluate",
            "--model",
            "spatial_poisson",
            "--design",
            "3;7;12",
            "--nmc-inner",
            "64",
            "--nmc-outer",
            "32",
        ],
        dir.path(),
    );
    assert!(nmc.status.success(), "{nmc:?}");
    assert!(String::from_utf8_lossy(&nmc.stdout).contains("nmc"));

    let bad = oedsel(
        &[
            "evaluate",
            "--model",
            "linear_gaussian",
            "--n",
            "6",
            "--design",
            "1;1",
        ],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(1), "{bad:?}");

    let out_of_range = oedsel(
        &[
            "evaluate",
            "--model",
            "linear_gaussian",
            "--n",
            "6",
            "--design",
            "7",
        ],
        dir.path(),
    );
    assert_eq!(out_of_range.status.code(), Some(1), "{out_of_range:?}");
}

#[test]
fn check_gradients_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = oedsel(
        &[
            "check-gradients",
            "--model",
            "epidemic",
            "--n",
            "8",
            "--points",
            "20",
        ],
        dir.path(),
    );
    assert!(ok.status.success(), "{ok:?}");
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS"));

    let fault = oedsel(
        &[
            "check-gradients",
            "--model",
            "epidemic",
            "--n",
            "8",
            "--points",
            "20",
            "--inject-fault",
        ],
        dir.path(),
    );
    assert_eq!(fault.status.code(), Some(3), "{fault:?}");
    assert!(String::from_utf8_lossy(&fault.stdout).contains("FAIL"));
}

#[test]
fn bench_runs_small_grid_and_rejects_bad_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let ok = oedsel(&["bench", "--grid", "n=10,20", "k=2,4"], dir.path());
    assert!(ok.status.success(), "{ok:?}");
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("lsig_mults"));
    assert!(stdout.contains("within 2x: true"));

    let bad = oedsel(&["bench", "--grid", "q=1,2"], dir.path());
    assert_eq!(bad.status.code(), Some(1), "{bad:?}");
}
