use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_typeprobe"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn typeprobe")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn generate(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = run(bin().args(["generate", "--count", "12"]).args(extra).arg("--out").arg(dir));
    assert!(out.status.success(), "{}", stderr(&out));
    dir.to_path_buf()
}

fn oracle(dataset: &Path, mode: &str, log: &Path) {
    let out = run(
        bin()
            .args(["evaluate", "--oracle", mode, "--dataset"])
            .arg(dataset)
            .arg("--log")
            .arg(log),
    );
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn generate_refuses_non_empty_directory_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = generate(&tmp.path().join("ds"), &[]);
    let again = run(bin().args(["generate", "--count", "12", "--out"]).arg(&ds));
    assert!(!again.status.success());
    assert!(stderr(&again).contains("--force"), "{}", stderr(&again));
    let forced = run(bin().args(["generate", "--count", "12", "--force", "--out"]).arg(&ds));
    assert!(forced.status.success(), "{}", stderr(&forced));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("typeprobe.toml");
    std::fs::write(&config, format!("seed = 7\ncount = 8\nout = {:?}\n", tmp.path().join("from-config"))).unwrap();
    let out = run(bin().arg("generate").arg("--config").arg(&config));
    assert!(out.status.success(), "{}", stderr(&out));
    let samples = std::fs::read_to_string(tmp.path().join("from-config/samples.manifest")).unwrap();
    assert_eq!(samples.lines().count(), 8);

    let out = run(bin().args(["generate", "--count", "4"]).arg("--config").arg(&config).arg("--out").arg(tmp.path().join("flag")));
    assert!(out.status.success(), "{}", stderr(&out));
    let samples = std::fs::read_to_string(tmp.path().join("flag/samples.manifest")).unwrap();
    assert_eq!(samples.lines().count(), 4);
}

#[test]
fn unknown_config_key_and_missing_paths_are_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    std::fs::write(&config, "sead = 1\n").unwrap();
    let out = run(bin().arg("generate").arg("--config").arg(&config));
    assert!(!out.status.success());

    let out = run(bin().args(["generate", "--registry", "/nonexistent/registry.toml", "--out"]).arg(tmp.path().join("x")));
    assert!(!out.status.success());
    assert!(stderr(&out).contains("/nonexistent/registry.toml"), "{}", stderr(&out));
}

#[test]
fn perturb_suggests_close_preset_names() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = generate(&tmp.path().join("ds"), &[]);
    let out = run(bin().args(["perturb", "--preset", "jpeg75", "--dataset"]).arg(&ds));
    assert!(!out.status.success());
    assert!(stderr(&out).contains("jpeg-75"), "{}", stderr(&out));

    let out = run(bin().args(["perturb", "--preset", "scale-0.5", "--dataset"]).arg(&ds));
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(tmp.path().join("ds-scale-0.5/dataset.hash").exists());
}

#[test]
fn missing_api_key_names_the_variable() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = generate(&tmp.path().join("ds"), &[]);
    let endpoints = tmp.path().join("endpoints.toml");
    std::fs::write(
        &endpoints,
        "[[endpoint]]\nname = \"remote\"\nbase_url = \"http://127.0.0.1:9\"\nkey_env = \"TYPEPROBE_TEST_UNSET_KEY\"\nmodel = \"m\"\n",
    )
    .unwrap();
    let out = run(
        bin()
            .args(["evaluate", "--endpoint", "remote", "--endpoints"])
            .arg(&endpoints)
            .arg("--dataset")
            .arg(&ds)
            .env_remove("TYPEPROBE_TEST_UNSET_KEY"),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("TYPEPROBE_TEST_UNSET_KEY"), "{}", stderr(&out));
}

#[test]
fn report_compare_with_itself_has_no_discordance() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = generate(&tmp.path().join("ds"), &[]);
    let log = tmp.path().join("informed.log");
    oracle(&ds, "informed", &log);
    let out = run(
        bin()
            .args(["report", "--format", "json", "--dataset"])
            .arg(&ds)
            .arg("--compare")
            .arg(&log)
            .arg(&log),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let cmp = &report["comparisons"][0]["result"];
    assert_eq!(cmp["b"], 0);
    assert_eq!(cmp["c"], 0);
    assert_eq!(cmp["p_value"], 1.0);
}

#[test]
fn report_refuses_logs_from_another_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let a = generate(&tmp.path().join("a"), &[]);
    let b = generate(&tmp.path().join("b"), &["--seed", "9"]);
    let log = tmp.path().join("b.log");
    oracle(&b, "random", &log);
    let out = run(bin().arg("report").arg(&log).arg("--dataset").arg(&a));
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--allow-mixed"), "{}", stderr(&out));
}

#[test]
fn report_table_and_parse_output() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = generate(&tmp.path().join("ds"), &[]);
    let log = tmp.path().join("informed.log");
    oracle(&ds, "informed", &log);

    let out = run(
        bin()
            .arg("report")
            .arg(&log)
            .arg("--dataset")
            .arg(&ds)
            .args(["--by", "size_bucket", "--confusion", "color"]),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Family") && text.contains("pixel-oracle/informed"), "{text}");
    assert!(text.contains("confusion"), "{text}");

    let out = run(bin().arg("parse").arg(&log).arg("--dataset").arg(&ds));
    assert!(out.status.success(), "{}", stderr(&out));
    let lines: Vec<Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 48);
    assert!(lines.iter().all(|v| v["parser_version"] == "1" && v["question_id"].is_string()));
}

#[test]
fn evaluate_refuses_to_clobber_a_log() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = generate(&tmp.path().join("ds"), &[]);
    let log = tmp.path().join("r.log");
    oracle(&ds, "random", &log);
    let again = run(bin().args(["evaluate", "--oracle", "random", "--dataset"]).arg(&ds).arg("--log").arg(&log));
    assert!(!again.status.success());
}

#[test]
fn export_with_count_four_gives_one_record_per_property() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("ft");
    let out = run(bin().args(["export-finetune", "--count", "4", "--format", "sharegpt", "--out"]).arg(&out_dir));
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(out_dir.join("finetune.jsonl")).unwrap();
    let mut props: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["property"].as_str().unwrap().to_string())
        .collect();
    props.sort();
    assert_eq!(props, ["color", "family", "size", "style"]);
}
