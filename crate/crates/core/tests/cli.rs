use std::path::Path;
use std::process::Command;

use serde_json::Value;

const PRINTED_G: &str = r#"{"num":[1.5679e-5,-2.5685e-5],"den":[1,-2.000985,1.000994]}"#;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_rirkit")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn run_in_process(args: &[&str]) -> (i32, Vec<u8>) {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let argv = std::iter::once("rirkit").chain(args.iter().copied());
    let code = rirkit::cli::main_with_args(argv, &mut stdout, &mut stderr);
    (code, stdout)
}

fn check_report(v: &Value, command: &str) {
    assert_eq!(v["schema"], "rirkit/1");
    assert_eq!(v["command"], command);
    assert!(v["result"].is_object());
}

fn check_error(r: &Run, class: &str, code: i32) {
    assert_eq!(r.code, code, "{}", r.stdout);
    let v = r.json();
    assert_eq!(v["schema"], "rirkit/1");
    assert_eq!(v["error"]["class"], class);
    assert_eq!(v["error"]["exit_code"], code);
    assert!(!r.stderr.is_empty());
}

fn read_csv(path: &Path, header: &[&str]) -> Vec<Vec<f64>> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let h: Vec<String> = rd.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(h, header);
    rd.records()
        .map(|r| {
            let r = r.unwrap();
            assert_eq!(r.len(), header.len());
            r.iter().map(|x| x.parse::<f64>().unwrap()).collect()
        })
        .collect()
}

#[test]
fn analyze_printed_plant_writes_report_and_response() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = run(&["analyze", "--input", PRINTED_G, "--out", out]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    check_report(&v, "analyze");
    let verdict = &v["result"]["verdict"];
    assert_eq!(verdict["status"], "exact_sufficient");
    assert_eq!(verdict["class"]["class_name"], "G2_interior");
    let lb = verdict["lower_bound"].as_f64().unwrap();
    assert!((lb - 0.2868).abs() < 0.05 * 0.2868);
    let saved = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(saved.trim_end(), r.stdout.trim_end());
    let rows = read_csv(&dir.path().join("response.csv"), &["omega", "gain", "gain_db", "phase"]);
    assert_eq!(rows.len(), 4097);
}

#[test]
fn input_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(&path, r#"{"num":[1],"den":[1,-2]}"#).unwrap();
    let r = run(&["synth", "--input", path.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    check_report(&v, "synth");
    assert_eq!(v["result"]["spec"]["c"], -1);
    assert_eq!(v["result"]["stability"]["mode"], "pole_at_+1");
}

#[test]
fn exit_codes() {
    check_error(&run(&["analyze", "--input", r#"{"num":[1],"den":[1,-0.5]}"#]), "precondition", 3);
    check_error(&run(&["analyze", "--input", r#"{"num":[1,0,0],"den":[1,0.5]}"#]), "invalid_input", 2);
    check_error(&run(&["analyze", "--input", r#"{"num":[1],"den":[1,0,1]}"#]), "invalid_input", 2);
    check_error(&run(&["analyze", "--input", "{not json"]), "invalid_input", 2);
    check_error(&run(&["analyze"]), "invalid_input", 2);
    check_error(&run(&["synth", "--input", r#"{"num":[1],"den":[1,-6,11.75,-7.5]}"#]), "precondition", 3);
    check_error(&run(&["nyquist", "--dump", "--input", r#"{"num":[0.5],"den":[1,-2]}"#]), "invalid_input", 2);
    check_error(&run(&["pcr-max", "--param", "omega=1"]), "invalid_input", 2);
    check_error(&run(&["pcr-max", "--param", "bogus=1"]), "invalid_input", 2);
    check_error(&run(&["maglev", "--eps", "-1"]), "invalid_input", 2);
    check_error(&run(&["no-such-command"]), "invalid_input", 2);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn nyquist_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = run(&["nyquist", "--dump", "--eps", "0.01", "--input", r#"{"num":[-1.5],"den":[1,-2]}"#, "--out", out]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    check_report(&v, "nyquist");
    assert_eq!(v["result"]["crossings"]["nu_o"], -1);
    assert_eq!(v["result"]["lemma1"]["holds"], true);
    let rows = read_csv(&dir.path().join("nyquist.csv"), &["omega", "re", "im"]);
    assert!(rows.len() >= 4096);
}

#[test]
fn pcr_max_is_deterministic() {
    let args = ["pcr-max", "--seed", "7", "--param", "omega=1.2", "--param", "theta=-0.4", "--param", "trials=3000"];
    let (c1, a) = run_in_process(&args);
    let (c2, b) = run_in_process(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    check_report(&v, "pcr-max");
    let best = v["result"]["best"].as_f64().unwrap();
    assert!(best <= v["result"]["bound"].as_f64().unwrap() + 1e-6);
}

#[test]
fn maglev_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = run(&["maglev", "--out", out]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    check_report(&v, "maglev");
    assert_eq!(v["result"]["verdict"]["status"], "not_exact");
    assert_eq!(v["result"]["bound"]["compensated_status"], "exact_sufficient");
    assert!(v["result"]["bound"]["ratio"].as_f64().unwrap() > 1.0);
    read_csv(&dir.path().join("response.csv"), &["omega", "gain", "gain_db", "phase"]);
}

#[test]
fn fhn_find_and_sim() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = run(&["fhn-find", "--out", out]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    check_report(&v, "fhn-find");
    assert!((v["result"]["e_o"].as_f64().unwrap() + 0.1192).abs() < 3e-3);
    let rows = read_csv(&dir.path().join("fig1.csv"), &["e", "inv_norm"]);
    assert!(rows.len() > 90);

    let sim = ["fhn-sim", "--eps", "-0.05", "--steps", "5000", "--out", out];
    let (code, first) = run_in_process(&sim);
    assert_eq!(code, 0);
    let fig2 = std::fs::read(dir.path().join("fig2.csv")).unwrap();
    let (_, second) = run_in_process(&sim);
    assert_eq!(first, second);
    assert_eq!(fig2, std::fs::read(dir.path().join("fig2.csv")).unwrap());
    let rows = read_csv(&dir.path().join("fig2.csv"), &["n", "x", "y"]);
    assert_eq!(rows.len(), 5000);
    let v: Value = serde_json::from_slice(&first).unwrap();
    check_report(&v, "fhn-sim");
    assert!(v["result"]["linear_spectral_radius"].as_f64().unwrap() >= 1.0);
}
