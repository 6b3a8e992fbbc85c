use std::path::Path;
use std::process::{Command, Output};

fn nlgrad(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlgrad")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const LOCALIZE: &str = r#"
seed = 3
[kernel]
family = "truncated-fractional"
s = 0.5
[grid]
n = 1024
length = 8.0
[experiment]
kind = "localize"
deltas = [0.4, 0.2, 0.1, 0.05]
[output]
directory = "out"
"#;

const GAMMA_DIV: &str = r#"
[kernel]
family = "truncated-fractional"
s = 0.5
[grid]
n = 256
length = 4.0
[experiment]
kind = "gamma-sweep"
regime = "diverging"
deltas = [2.0, 5.0, 10.0, 50.0]
integrand = { kind = "power", p = 2.0 }
[output]
directory = "out"
formats = ["json", "csv", "bin"]
"#;

#[test]
fn localize_writes_a_quadratic_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "localize.toml", LOCALIZE);
    let out = nlgrad(&["run", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("out/rate.json"));
    let slope = report["result"]["fitted_slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    assert_eq!(report["version"], concat!("nlgrad ", env!("CARGO_PKG_VERSION")));
    assert_eq!(report["config"]["kernel"]["s"], 0.5);
    assert_eq!(report["config"]["seed"], 3);
    let csv = std::fs::read_to_string(dir.path().join("out/rate.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta,error,bound"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    // 17 significant digits in scientific notation
    assert_eq!(first[1].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn vanishing_horizon_above_one_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &LOCALIZE.replace("[0.4,", "[1.5,"));
    let out = nlgrad(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(0, 1]"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn diverging_gamma_sweep_reports_decreasing_distances() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gamma_div.toml", GAMMA_DIV);
    let out = nlgrad(&["run", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("out/gamma.json"));
    assert_eq!(report["result"]["distances_decreasing"], true);
    let entries = report["result"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    assert!(dir.path().join("out/u_ref.bin").exists());
    assert!(dir.path().join("out/u_delta_3.bin").exists());
    let (grid, comps) = nlgrad::grid::read_bin(&dir.path().join("out/u_ref.bin")).unwrap();
    assert_eq!((grid.dim(), grid.points_per_axis(), comps.len()), (1, 256, 1));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gamma_div.toml", GAMMA_DIV);
    assert!(nlgrad(&["run", &cfg, "--output-dir", "a"], dir.path()).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_nlgrad"))
        .args(["run", &cfg, "--output-dir", "b"])
        .current_dir(dir.path())
        .env("NLGRAD_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let a = std::fs::read(dir.path().join("a/gamma.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/gamma.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn numerical_failure_exits_with_3_and_writes_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[kernel]
family = "truncated-fractional"
s = 0.5
delta = 0.5
regime = "vanishing"
[grid]
n = 64
length = 4.0
[experiment]
kind = "minimize"
integrand = { kind = "power", p = 3.0 }
max_iter = 2
[output]
directory = "out"
"#;
    let cfg = write(dir.path(), "short.toml", text);
    let out = nlgrad(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = json(&dir.path().join("out/error.json"));
    assert_eq!(err["exit_code"], 3);
    assert!(err["error"].as_str().unwrap().contains("2 iterations"));
    assert_eq!(err["config"]["experiment"]["max_iter"], 2);
    let report = json(&dir.path().join("out/minimize.json"));
    assert_eq!(report["result"]["converged"], false);
}

#[test]
fn validate_lists_derived_quantities_without_running() {
    let dir = tempfile::tempdir().unwrap();
    let text = LOCALIZE.replace("s = 0.5", "s = 0.5\nkappa = -1").replace("truncated-fractional", "log-corrected");
    let cfg = write(dir.path(), "b.toml", &text);
    let out = nlgrad(&["validate", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["sigma"], 0.25);
    assert_eq!(v["gamma"], 0.5);
    assert_eq!(v["analytic_s_inf"], 0.5);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn validate_rejects_missing_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "no_s.toml", &LOCALIZE.replace("s = 0.5\n", ""));
    let out = nlgrad(&["validate", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel.s"));

    let cfg = write(dir.path(), "no_sfn.toml", &LOCALIZE.replace("truncated-fractional", "variable-exponent"));
    let out = nlgrad(&["validate", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel.s_fn"));

    let cfg = write(dir.path(), "garbled.toml", "[kernel\nfamily = ");
    assert_eq!(nlgrad(&["validate", &cfg], dir.path()).status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nlgrad"))
        .arg("list-kernels")
        .env("NLGRAD_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn list_kernels_names_every_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlgrad(&["list-kernels"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["truncated-fractional", "log-corrected", "variable-exponent", "riesz", "custom"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn shipped_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = nlgrad(&["validate", path.to_str().unwrap()], &root);
            assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            count += 1;
        }
    }
    assert!(count >= 5);
}
