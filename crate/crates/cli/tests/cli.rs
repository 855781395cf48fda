//! CLI behavior tests on a miniature corpus: command flow, exit codes,
//! and artifact-dependency errors.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_graspcast");

fn graspcast(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Writes a config that generates a small fast corpus (few keys, few
/// epochs) into `dir` and runs synth with it.
fn small_corpus(dir: &Path, seed: u64) -> std::path::PathBuf {
    let synth_config = dir.join("synth.toml");
    std::fs::write(
        &synth_config,
        format!("out_dir = \".\"\nseed = {seed}\n\n[synth]\nn = 160\n"),
    )
    .unwrap();
    let output = graspcast(
        &["synth", "--config", synth_config.to_str().unwrap()],
        dir,
    );
    assert!(output.status.success(), "synth failed: {}", stderr_of(&output));
    // Shrink training for test speed.
    let config = dir.join("config.toml");
    let text = std::fs::read_to_string(&config).unwrap();
    let text = text.replace("epochs = 3000", "epochs = 120");
    std::fs::write(&config, text).unwrap();
    config
}

#[test]
fn full_command_flow_on_small_corpus() {
    let dir = tempfile::TempDir::new().unwrap();
    let config = small_corpus(dir.path(), 3);
    let config_arg = config.to_str().unwrap();

    let ingest = graspcast(&["ingest", "--config", config_arg], dir.path());
    assert!(ingest.status.success());
    let ingest_text = stdout_of(&ingest);
    assert!(ingest_text.contains("joined 160 samples"), "{ingest_text}");

    let split = graspcast(&["split", "--config", config_arg], dir.path());
    assert!(split.status.success());
    assert!(dir.path().join("splits/split_alpha_parallel.txt").is_file());

    let train = graspcast(
        &[
            "train", "--config", config_arg, "--variant", "mlp-o", "--principal", "alpha",
            "--gripper", "parallel",
        ],
        dir.path(),
    );
    assert!(train.status.success(), "{}", stderr_of(&train));
    assert!(dir
        .path()
        .join("models/mlp-o/alpha/parallel/all-objects.bin")
        .is_file());

    let baseline = graspcast(
        &[
            "baseline", "--config", config_arg, "--principal", "alpha", "--gripper", "parallel",
        ],
        dir.path(),
    );
    assert!(baseline.status.success(), "{}", stderr_of(&baseline));
    assert!(dir.path().join("thresholds/alpha_parallel.csv").is_file());

    let eval = graspcast(
        &[
            "eval", "--config", config_arg, "--principal", "alpha", "--gripper", "parallel",
            "--methods", "baseline,mlp-o",
        ],
        dir.path(),
    );
    assert!(eval.status.success(), "{}", stderr_of(&eval));
    let results = std::fs::read_to_string(dir.path().join("reports/eval_results.csv")).unwrap();
    assert!(results.lines().any(|l| l.starts_with("baseline,alpha,parallel,ALL")));
    assert!(results.lines().any(|l| l.starts_with("mlp-o,alpha,parallel,ALL")));
}

#[test]
fn train_without_variant_is_usage_error() {
    let dir = tempfile::TempDir::new().unwrap();
    let config = small_corpus(dir.path(), 5);
    let output = graspcast(&["train", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("--variant"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::TempDir::new().unwrap();
    let output = graspcast(&["ingest", "--nope"], dir.path());
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn missing_config_file_is_usage_error() {
    let dir = tempfile::TempDir::new().unwrap();
    let output = graspcast(&["ingest", "--config", "does-not-exist.toml"], dir.path());
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("does-not-exist.toml"));
}

#[test]
fn corrupt_estimate_file_is_data_error() {
    let dir = tempfile::TempDir::new().unwrap();
    let config = small_corpus(dir.path(), 7);
    let estimates = dir.path().join("data/estimates/alpha.csv");
    std::fs::write(&estimates, "scene_id,im_id,obj_id,score,R,t,time\n1,0,oops\n").unwrap();
    let output = graspcast(&["ingest", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("alpha.csv"));
}

#[test]
fn eval_without_artifacts_is_data_error_naming_the_artifact() {
    let dir = tempfile::TempDir::new().unwrap();
    let config = small_corpus(dir.path(), 9);
    let output = graspcast(
        &[
            "eval",
            "--config",
            config.to_str().unwrap(),
            "--principal",
            "alpha",
            "--gripper",
            "parallel",
            "--methods",
            "baseline",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(
        stderr_of(&output).contains("thresholds/alpha_parallel.csv"),
        "error must name the missing artifact: {}",
        stderr_of(&output)
    );
}

#[test]
fn empty_estimate_file_is_reported_with_its_name() {
    let dir = tempfile::TempDir::new().unwrap();
    let config = small_corpus(dir.path(), 13);
    let estimates = dir.path().join("data/estimates/bravo.csv");
    std::fs::write(&estimates, "scene_id,im_id,obj_id,score,R,t,time\n").unwrap();
    let output = graspcast(&["ingest", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("bravo.csv"));
}

#[test]
fn train_dump_features_writes_matrix() {
    let dir = tempfile::TempDir::new().unwrap();
    let config = small_corpus(dir.path(), 15);
    let output = graspcast(
        &[
            "train", "--config", config.to_str().unwrap(), "--variant", "mlp-o",
            "--principal", "alpha", "--gripper", "parallel", "--dump-features",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    let dump = dir
        .path()
        .join("features/mlp-o_alpha_parallel_all-objects.csv");
    assert!(dump.is_file());
    let text = std::fs::read_to_string(&dump).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 161, "header plus one row per joined sample");
    // Each row: key + 17 features (12 differences + 5 object one-hots) + label.
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), 19);
}

#[test]
fn commands_do_not_mutate_inputs() {
    let dir = tempfile::TempDir::new().unwrap();
    let config = small_corpus(dir.path(), 17);
    let config_arg = config.to_str().unwrap();
    let data_dir = dir.path().join("data");
    let snapshot = |root: &Path| -> Vec<(std::path::PathBuf, Vec<u8>)> {
        let mut files = Vec::new();
        fn walk(root: &Path, dir: &Path, out: &mut Vec<(std::path::PathBuf, Vec<u8>)>) {
            for entry in std::fs::read_dir(dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    walk(root, &path, out);
                } else {
                    out.push((path.clone(), std::fs::read(&path).unwrap()));
                }
            }
        }
        walk(root, root, &mut files);
        files.sort();
        files
    };
    let before = snapshot(&data_dir);
    for args in [
        vec!["ingest", "--config", config_arg],
        vec!["split", "--config", config_arg],
        vec![
            "train", "--config", config_arg, "--variant", "mlp", "--principal", "bravo",
            "--gripper", "underactuated",
        ],
    ] {
        let output = graspcast(&args, dir.path());
        assert!(output.status.success(), "{args:?}: {}", stderr_of(&output));
    }
    assert_eq!(before, snapshot(&data_dir), "inputs must not change");
}
