use std::path::PathBuf;

use sparse_vss::cli::{run_cli, EXIT_CONFIG, EXIT_OK};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["sparse-vss"];
    full.extend_from_slice(args);
    let code = run_cli(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn shipped(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn value_of(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.trim().strip_prefix('=').map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("{key} missing in {text}"))
}

#[test]
fn shipped_configs_validate() {
    for name in ["table2.conf", "desk.json"] {
        let (code, out, err) = run(&["--config", &shipped(name), "validate-config"]);
        assert_eq!(code, EXIT_OK, "{name}: {err}");
        assert!(out.contains("config ok"));
    }
}

#[test]
fn missing_config_is_a_config_error_naming_the_path() {
    let (code, _, err) = run(&["--config", "/nonexistent/study.conf", "validate-config"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("/nonexistent/study.conf"), "{err}");
}

#[test]
fn bad_parameters_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "mu_max = 3\n").unwrap();
    let (code, _, err) = run(&["--config", path.to_str().unwrap(), "validate-config"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(!err.is_empty());
    let (code, _, _) = run(&["--algorithms", "lms", "validate-config"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn theory_bounds_prints_bound_and_limit() {
    let (code, out, _) = run(&["theory-bounds", "--lambda-max", "1", "--noise-power", "0.01", "--mu", "0.2"]);
    assert_eq!(code, EXIT_OK);
    assert!((value_of(&out, "nlms_lower_bound") - 0.01 / 1.4).abs() < 1e-15);
    assert!((value_of(&out, "small_step_limit") - 0.005).abs() < 1e-15);
}

#[test]
fn unknown_subcommand_or_flag_is_a_usage_error() {
    assert_eq!(run(&["plot-everything"]).0, EXIT_CONFIG);
    assert_eq!(run(&["--frobnicate", "mse-curves"]).0, EXIT_CONFIG);
    assert_eq!(run(&[]).0, EXIT_CONFIG);
}

#[test]
fn help_exits_cleanly() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("theory-bounds"));
}

#[test]
fn mse_curves_writes_results_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.conf");
    std::fs::write(
        &cfg,
        "n_taps = 8\nsparsity_list = 2\nsnr_db_list = 10\nruns = 3\nstop.max_iterations = 50\nber_snr_db = 10\nber_sparsity = 2\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let (code, _, err) = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--algorithms",
        "iss-nlms,vss-nlms",
        "mse-curves",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let csv = std::fs::read_to_string(out_dir.join("k2_snr10db/mse_curves.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 50);
    let manifest = std::fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("master_seed"));
}
