use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qresponse(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qresponse")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn meta(text: &str, key: &str) -> String {
    let prefix = format!("# {key}: ");
    text.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("no {key} in output")).to_string()
}

fn column(text: &str, name: &str) -> Vec<String> {
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.map(|r| r.split(',').nth(idx).unwrap().to_string()).collect()
}

const ISING: &str = r#"
[system]
builder = "ising"
sites = 3
coupling = 1.0
field = 0.0

[ensemble]
beta = 1.0
mu = 0.0

[protocol]
t_i = 0.0
t_f = 4.0
steps = 2000

[[protocol.sources]]
source = "x0"
waveform = { kind = "ramp", from = 0.0, to = 0.4 }

[[tasks]]
name = "static-susc"

[[tasks]]
name = "fdr-check"

[[tasks]]
name = "work-stats"
crooks = true
"#;

#[test]
fn run_writes_one_file_per_task() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), ISING).unwrap();
    let out = qresponse(&["run", "--config", "exp.toml", "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for stem in ["static-susc", "fdr-check", "work-stats"] {
        assert!(dir.path().join("res").join(format!("{stem}.csv")).exists(), "{stem}");
    }
    let fdr = fs::read_to_string(dir.path().join("res/fdr-check.csv")).unwrap();
    assert_eq!(meta(&fdr, "pass"), "true");
    let work = fs::read_to_string(dir.path().join("res/work-stats.csv")).unwrap();
    assert_eq!(meta(&work, "jarzynski_pass"), "true");
    assert_eq!(meta(&work, "crooks_pass"), "true");
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), ISING).unwrap();
    for out in ["a", "b"] {
        assert!(qresponse(&["run", "--config", "exp.toml", "--out", out, "--format", "json"], dir.path())
            .status
            .success());
    }
    for stem in ["static-susc", "fdr-check", "work-stats"] {
        let a = fs::read(dir.path().join(format!("a/{stem}.json"))).unwrap();
        let b = fs::read(dir.path().join(format!("b/{stem}.json"))).unwrap();
        assert_eq!(a, b, "{stem}");
    }
}

#[test]
fn json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    assert!(qresponse(&["spectrum", "--out", ".", "--format", "json"], dir.path()).status.success());
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(v["metadata"]["task"], "spectrum");
    assert!(v["column_order"].as_array().unwrap().len() >= 2);
}

#[test]
fn fdr_check_single_function() {
    let dir = tempfile::tempdir().unwrap();
    let out = qresponse(&["fdr-check", "--f", "symmetric", "--out", "."], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("fdr-check.csv")).unwrap();
    assert!(column(&text, "f").iter().all(|f| f == "symmetric"));
    assert_eq!(meta(&text, "pass"), "true");
}

#[test]
fn volterra_check_reports_fitted_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let out = qresponse(&["volterra-check", "--orders", "1,2", "--out", "."], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("volterra-check.csv")).unwrap();
    let rows = column(&text, "row");
    let orders = column(&text, "order");
    let exps = column(&text, "exponent");
    let fits: Vec<(usize, f64)> = rows
        .iter()
        .zip(orders.iter().zip(&exps))
        .filter(|(r, _)| *r == "fit")
        .map(|(_, (o, e))| (o.parse().unwrap(), e.parse().unwrap()))
        .collect();
    assert_eq!(fits.len(), 2);
    for (order, e) in fits {
        assert!((e - (order as f64 + 1.0)).abs() < 0.15, "order {order}: exponent {e}");
    }
}

#[test]
fn fluid_current_ward_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = qresponse(&["fluid-current", "--sigma", "1.5", "--D", "0.3", "--tau", "0.2", "--seed", "9", "--out", "."], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("fluid-current.csv")).unwrap();
    let res = column(&text, "ward_residual");
    assert!(res.len() > 100);
    assert!(res.iter().all(|r| r.parse::<f64>().unwrap() <= 1e-12));
    assert_eq!(column(&text, "g00_re")[0].parse::<f64>().unwrap(), 5.0);
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), ISING).unwrap();
    let first = qresponse(&["run", "--config", "exp.toml", "--dump-config"], dir.path());
    assert!(first.status.success());
    fs::write(dir.path().join("dumped.toml"), &first.stdout).unwrap();
    let second = qresponse(&["run", "--config", "dumped.toml", "--dump-config"], dir.path());
    assert_eq!(first.stdout, second.stdout);
}

fn error_record(out: &Output) -> serde_json::Value {
    serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).expect("stderr is one JSON record")
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[system\nbuilder = 1").unwrap();
    let out = qresponse(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["exit_code"], 2);
}

#[test]
fn invalid_value_exits_3_with_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[ensemble]\nbeta = 1.0\nmu = 0.0\nkelvin = 3\n\n[[tasks]]\nname = \"static-susc\"\n")
        .unwrap();
    let out = qresponse(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(error_record(&out)["path"].as_str().unwrap().contains("kelvin"));

    fs::write(dir.path().join("bad2.toml"), "[[tasks]]\nname = \"fdr-check\"\nf = [\"bogus\"]\n").unwrap();
    let out = qresponse(&["run", "--config", "bad2.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_record(&out)["path"], "tasks[0].f[0]");
}

#[test]
fn numerical_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    // Eight steps cannot resolve this drive, so the exact reference is refused.
    let cfg = r#"
[system]
builder = "qubit"
z_source = true

[protocol]
t_i = 0.0
t_f = 8.0
steps = 8

[[protocol.sources]]
source = "x"
waveform = { kind = "gaussian", base = 0.0, amp = 1.0, center = 4.0, width = 0.6 }

[[tasks]]
name = "volterra-check"
"#;
    fs::write(dir.path().join("coarse.toml"), cfg).unwrap();
    let out = qresponse(&["run", "--config", "coarse.toml", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let record = error_record(&out);
    assert_eq!(record["task"], "volterra-check");
    assert_eq!(record["error"], "NumericalFailure");
}
