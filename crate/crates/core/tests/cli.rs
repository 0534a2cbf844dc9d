use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn geoflow(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_geoflow"));
    cmd.args(args).env_remove("GEOFLOW_WORKERS").env("RUST_LOG", "error");
    if let Some(w) = workers {
        cmd.env("GEOFLOW_WORKERS", w);
    }
    cmd.output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.conf");
    std::fs::write(&path, body).unwrap();
    path
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn list_scenarios_names_all_six() {
    let out = geoflow(&["list-scenarios"], None);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    for name in [
        "figure2",
        "assumption_sweep",
        "sandwich",
        "vanishing_limit",
        "gibbs",
        "transfer_toy",
    ] {
        assert!(stdout.lines().any(|l| l.starts_with(name)), "{name} missing from\n{stdout}");
    }
}

#[test]
fn shipped_configs_validate() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "conf") {
            let out = geoflow(&["validate", path.to_str().unwrap()], None);
            assert!(out.status.success(), "{}: {}", path.display(), text(&out.stderr));
            seen += 1;
        }
    }
    assert_eq!(seen, 6);
}

#[test]
fn empty_regulariser_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = figure2\nregularisers =\n");
    let out = geoflow(&["validate", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("regularisers"), "{}", text(&out.stderr));
}

#[test]
fn unknown_key_and_bad_line_are_rejected_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = sandwich\nsandwich.evry = 3\n");
    let out = geoflow(&["validate", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("sandwich.evry"));

    let cfg = write_config(dir.path(), "scenario = sandwich\nno equals sign here\n");
    let out = geoflow(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 2"), "{}", text(&out.stderr));
}

#[test]
fn negative_lambda_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = figure2\nregularisers = standard\nlambda = -0.1\n");
    let out = geoflow(&["validate", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_worker_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = sandwich\noutput_dir = out\nflow.max_time = 5\n");
    let out = geoflow(&["run", cfg.to_str().unwrap()], Some("zero"));
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("GEOFLOW_WORKERS"));
}

#[test]
fn run_writes_manifest_listing_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = sandwich\noutput_dir = out\nflow.max_time = 20\n");
    let out = geoflow(&["run", cfg.to_str().unwrap()], Some("1"));
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("PASS bounds_hold"));

    let out_dir = dir.path().join("out");
    let manifest = std::fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("scenario = sandwich"));
    assert!(manifest.contains("status = pass"));
    assert!(manifest.contains("config.flow.max_time = 20"));
    let mut listed: Vec<String> = manifest
        .lines()
        .filter_map(|l| l.strip_prefix("file = "))
        .map(str::to_owned)
        .collect();
    listed.push("manifest.txt".into());
    listed.sort();
    let mut on_disk: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
}

#[test]
fn failing_gate_exits_nonzero_with_a_report() {
    // at a vanishing lambda standard ridge cannot pull the endpoint 0.01 away
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = figure2\noutput_dir = out\nmodels = bilinear\nregularisers = standard\nlambda = 1e-9\nflow.max_time = 50\n",
    );
    let out = geoflow(&["run", cfg.to_str().unwrap()], Some("1"));
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert!(
        stderr.lines().any(|l| l.starts_with("failure: gate bilinear.standard")),
        "{stderr}"
    );
    let manifest = std::fs::read_to_string(dir.path().join("out/manifest.txt")).unwrap();
    assert!(manifest.contains("status = fail"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body =
        "scenario = vanishing_limit\nmodels = bilinear\nregularisers = anchored\nlambdas = 0.1, 0.03\nflow.step_size = 0.05\n";
    let mut csvs = vec![];
    for (run, workers) in [("a", "1"), ("b", "3")] {
        let cfg = write_config(dir.path(), &format!("{body}output_dir = {run}\n"));
        let out = geoflow(&["run", cfg.to_str().unwrap()], Some(workers));
        assert!(out.status.code().is_some());
        let path = dir.path().join(run).join("limits_bilinear.csv");
        csvs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}
