//! Command-line front end. Reports are JSON on stdout (schema "rirkit/1");
//! plot data goes to CSV files under `--out`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::casestudies::{
    fhn_perturbation, fhn_search_eo, fhn_simulate, linear_spectral_radius, maglev_upper_bound, oscillation_report,
    FhnModel, MaglevBound, MaglevParams, MaglevZoh, OscillationReport, OscillationThresholds,
};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::nyquist::{
    closed_loop_poles, contour_samples, crossing_counts, lemma1_check, ContourSpec, CrossingReport, Lemma1Report,
};
use crate::rir::{exact_rir_analyze_with, pcr_max_search, synth_marginal_perturbation_with, AllPassSpec, RirVerdict};
use crate::transfer::RationalTF;

pub const SCHEMA: &str = "rirkit/1";

#[derive(Debug, Parser)]
#[command(name = "rirkit", version, about = "Robust instability radius analysis for discrete-time SISO systems")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a plant and decide whether its radius equals 1/‖g‖.
    Analyze,
    /// Build the minimum-norm all-pass perturbation that makes the loop marginally stable.
    Synth,
    /// Count crossings of (1, ∞) by the indented Nyquist plot of a loop.
    Nyquist {
        /// Write the contour samples to nyquist.csv.
        #[arg(long)]
        dump: bool,
    },
    /// Random search for the largest all-pass phase rate at a given phase.
    PcrMax,
    /// Sampled maglev plant and its high-pass upper bound.
    Maglev,
    /// Locate the FHN DC gain where |e| = 1/‖g_e‖ and synthesize the perturbation.
    FhnFind,
    /// Simulate the FHN map under the shaped perturbation.
    FhnSim,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Transfer function JSON {"num": [...], "den": [...]}, as a file path or inline.
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Directory for CSV side files and report.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Base frequency grid size.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Tolerance on the phase-rate comparison.
    #[arg(long = "tol-rate", global = true)]
    pub tol_rate: Option<f64>,
    /// Contour offset (nyquist), bound margin (maglev) or gain offset of the shaped perturbation (fhn-sim)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// Simulation length for fhn-sim
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Model or search parameter, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE", global = true, allow_hyphen_values = true)]
    pub params: Vec<String>,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema: &'static str,
    command: &'a str,
    result: T,
}

#[derive(Serialize)]
struct ErrorBody {
    class: &'static str,
    exit_code: i32,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    schema: &'static str,
    command: &'a str,
    error: ErrorBody,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Synth => "synth",
            Command::Nyquist { .. } => "nyquist",
            Command::PcrMax => "pcr-max",
            Command::Maglev => "maglev",
            Command::FhnFind => "fhn-find",
            Command::FhnSim => "fhn-sim",
        }
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(cfg) => run(&cfg, stdout, stderr),
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = write!(stderr, "{e}");
            let report = ErrorReport {
                schema: SCHEMA,
                command: "",
                error: ErrorBody { class: "invalid_input", exit_code: 2, message: e.kind().to_string() },
            };
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("serializable"));
            2
        }
    }
}

pub fn run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let name = cfg.command.name();
    match dispatch(cfg) {
        Ok(json) => {
            let _ = writeln!(stdout, "{json}");
            0
        }
        Err(e) => {
            let class = e.class();
            let _ = writeln!(stderr, "rirkit {name}: {e}");
            let report = ErrorReport {
                schema: SCHEMA,
                command: name,
                error: ErrorBody { class: class.name(), exit_code: class.exit_code(), message: e.to_string() },
            };
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("serializable"));
            class.exit_code()
        }
    }
}

fn dispatch(cfg: &RunConfig) -> Result<String> {
    let o = &cfg.options;
    let name = cfg.command.name();
    match &cfg.command {
        Command::Analyze => finish(o, name, analyze(o)?),
        Command::Synth => finish(o, name, synth(o)?),
        Command::Nyquist { dump } => finish(o, name, nyquist(o, *dump)?),
        Command::PcrMax => finish(o, name, pcr_max(o)?),
        Command::Maglev => finish(o, name, maglev(o)?),
        Command::FhnFind => finish(o, name, fhn_find(o)?),
        Command::FhnSim => finish(o, name, fhn_sim(o)?),
    }
}

fn finish<T: Serialize>(o: &Options, command: &str, result: T) -> Result<String> {
    let json = serde_json::to_string_pretty(&Report { schema: SCHEMA, command, result })
        .map_err(|e| Error::NumericalFault(format!("report serialization: {e}")))?;
    if let Some(dir) = &o.out {
        write_file(&dir.join("report.json"), format!("{json}\n").as_bytes())?;
    }
    Ok(json)
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn write_csv(
    o: &Options,
    file: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<Option<PathBuf>> {
    let Some(dir) = &o.out else { return Ok(None) };
    let path = dir.join(file);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| io_error(&path, e))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| io_error(&path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| io_error(&path, e))?;
    write_file(&path, &bytes)?;
    Ok(Some(path))
}

fn tolerances(o: &Options) -> Result<Tolerances> {
    let mut tol = Tolerances::default();
    if let Some(g) = o.grid {
        if g < 16 {
            return Err(Error::InvalidParameter(format!("--grid {g} is below 16")));
        }
        tol.grid = g;
    }
    if let Some(r) = o.tol_rate {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidParameter(format!("--tol-rate {r} must be non-negative")));
        }
        tol.rate_tol = r;
    }
    Ok(tol)
}

fn read_tf(o: &Options) -> Result<RationalTF> {
    let raw = o.input.as_deref().ok_or_else(|| Error::InvalidParameter("--input is required".into()))?;
    let text = if raw.trim_start().starts_with('{') {
        raw.to_string()
    } else {
        fs::read_to_string(raw).map_err(|e| Error::InvalidParameter(format!("cannot read {raw}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(format!("transfer function JSON: {e}")))
}

fn params(o: &Options, allowed: &[&str]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for p in &o.params {
        let (k, v) =
            p.split_once('=').ok_or_else(|| Error::InvalidParameter(format!("--param {p} is not KEY=VALUE")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(Error::InvalidParameter(format!("unknown parameter {k}; expected one of {allowed:?}")));
        }
        let v: f64 =
            v.trim().parse().map_err(|_| Error::InvalidParameter(format!("--param {k}: {v} is not a number")))?;
        out.insert(k.to_string(), v);
    }
    Ok(out)
}

fn count(v: f64, what: &str) -> Result<usize> {
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidParameter(format!("{what} must be a non-negative integer, got {v}")))
    }
}

fn response_rows(g: &RationalTF, n: usize) -> Result<Vec<Vec<f64>>> {
    (0..=n)
        .map(|k| {
            let w = std::f64::consts::PI * k as f64 / n as f64;
            let v = g.response(w)?;
            Ok(vec![w, v.norm(), 20.0 * v.norm().log10(), v.arg()])
        })
        .collect()
}

const RESPONSE_HEADER: [&str; 4] = ["omega", "gain", "gain_db", "phase"];

#[derive(Serialize)]
struct AnalyzeResult {
    tf: RationalTF,
    verdict: RirVerdict,
    files: Vec<PathBuf>,
}

fn analyze(o: &Options) -> Result<AnalyzeResult> {
    let g = read_tf(o)?;
    let tol = tolerances(o)?;
    let verdict = exact_rir_analyze_with(&g, &tol)?;
    let files = write_csv(o, "response.csv", &RESPONSE_HEADER, response_rows(&g, tol.grid)?)?;
    Ok(AnalyzeResult { tf: g, verdict, files: files.into_iter().collect() })
}

fn synth(o: &Options) -> Result<crate::rir::Synthesis> {
    let g = read_tf(o)?;
    synth_marginal_perturbation_with(&g, &tolerances(o)?)
}

#[derive(Serialize)]
struct NyquistResult {
    crossings: CrossingReport,
    lemma1: Option<Lemma1Report>,
    closed_loop_max_modulus: f64,
    files: Vec<PathBuf>,
}

fn nyquist(o: &Options, dump: bool) -> Result<NyquistResult> {
    let l = read_tf(o)?;
    let mut spec = ContourSpec::inverse(o.eps.unwrap_or(0.0));
    if let Some(g) = o.grid {
        spec.samples = g;
    }
    let crossings = crossing_counts(&l, &spec)?;
    let n = l.unstable_pole_count()?;
    let lemma1 = if n > 0 { Some(lemma1_check(&l, n)?) } else { None };
    let closed_loop_max_modulus = closed_loop_poles(&l)?.max_modulus();
    let mut files = vec![];
    if dump {
        if o.out.is_none() {
            return Err(Error::InvalidParameter("--dump needs --out".into()));
        }
        let rows = contour_samples(&l, &spec)?.into_iter().map(|(w, v)| vec![w, v.re, v.im]);
        files.extend(write_csv(o, "nyquist.csv", &["omega", "re", "im"], rows)?);
    }
    Ok(NyquistResult { crossings, lemma1, closed_loop_max_modulus, files })
}

fn pcr_max(o: &Options) -> Result<crate::rir::PcrSearch> {
    let p = params(o, &["omega", "theta", "order", "trials"])?;
    let need =
        |k: &str| p.get(k).copied().ok_or_else(|| Error::InvalidParameter(format!("--param {k}=... is required")));
    let order = count(p.get("order").copied().unwrap_or(4.0), "order")?;
    let trials = count(p.get("trials").copied().unwrap_or(20000.0), "trials")?;
    pcr_max_search(need("omega")?, need("theta")?, order, trials, o.seed)
}

#[derive(Serialize)]
struct MaglevResult {
    params: MaglevParams,
    zoh: MaglevZoh,
    tf: RationalTF,
    dc_gain: f64,
    verdict: RirVerdict,
    bound: MaglevBound,
    files: Vec<PathBuf>,
}

fn maglev(o: &Options) -> Result<MaglevResult> {
    let p = params(o, &["k", "p", "tau", "T"])?;
    let d = MaglevParams::default();
    let mp = MaglevParams {
        k: p.get("k").copied().unwrap_or(d.k),
        p: p.get("p").copied().unwrap_or(d.p),
        tau: p.get("tau").copied().unwrap_or(d.tau),
        t: p.get("T").copied().unwrap_or(d.t),
    };
    let zoh = MaglevZoh::new(mp)?;
    let tf = crate::casestudies::maglev_zoh(mp)?;
    let tol = tolerances(o)?;
    let verdict = exact_rir_analyze_with(&tf, &tol)?;
    let bound = maglev_upper_bound(mp, o.eps.unwrap_or(0.01))?;
    let files = write_csv(o, "response.csv", &RESPONSE_HEADER, response_rows(&tf, tol.grid)?)?;
    Ok(MaglevResult { params: mp, dc_gain: zoh.dc_gain(), zoh, tf, verdict, bound, files: files.into_iter().collect() })
}

const FHN_KEYS: [&str; 6] = ["c", "alpha", "beta", "tau", "d", "I"];

fn fhn_model(p: &BTreeMap<String, f64>) -> FhnModel {
    let d = FhnModel::default();
    let get = |k: &str, v: f64| p.get(k).copied().unwrap_or(v);
    FhnModel {
        c: get("c", d.c),
        alpha: get("alpha", d.alpha),
        beta: get("beta", d.beta),
        tau: get("tau", d.tau),
        d: get("d", d.d),
        current: get("I", d.current),
    }
}

#[derive(Serialize)]
struct FhnFindResult {
    model: FhnModel,
    e_o: f64,
    fixed_point: crate::casestudies::FixedPoint,
    g: RationalTF,
    verdict: RirVerdict,
    delta_f: AllPassSpec,
    delta_f_tf: RationalTF,
    files: Vec<PathBuf>,
}

fn fhn_find(o: &Options) -> Result<FhnFindResult> {
    let model = fhn_model(&params(o, &FHN_KEYS)?);
    let s = fhn_search_eo(&model)?;
    let pert = fhn_perturbation(s.e_o, &s.g, 0.0, 0.5)?;
    let rows = s.sweep.iter().map(|p| vec![p.e, p.inv_norm]);
    let files = write_csv(o, "fig1.csv", &["e", "inv_norm"], rows)?;
    Ok(FhnFindResult {
        model,
        e_o: s.e_o,
        fixed_point: s.fixed_point,
        g: s.g,
        verdict: s.verdict,
        delta_f: pert.spec,
        delta_f_tf: pert.delta_f,
        files: files.into_iter().collect(),
    })
}

#[derive(Serialize)]
struct FhnSimResult {
    model: FhnModel,
    e_o: f64,
    eps: f64,
    delta: RationalTF,
    linear_spectral_radius: f64,
    init: (f64, f64),
    steps: usize,
    diverged: bool,
    oscillation: OscillationReport,
    last: (usize, f64, f64),
    files: Vec<PathBuf>,
}

fn fhn_sim(o: &Options) -> Result<FhnSimResult> {
    let mut keys = FHN_KEYS.to_vec();
    keys.extend(["r", "dx", "dy"]);
    let p = params(o, &keys)?;
    let model = fhn_model(&p);
    let eps = o.eps.unwrap_or(0.05);
    let steps = o.steps.unwrap_or(200_000);
    if steps == 0 {
        return Err(Error::InvalidParameter("--steps must be positive".into()));
    }
    let s = fhn_search_eo(&model)?;
    let pert = fhn_perturbation(s.e_o, &s.g, eps, p.get("r").copied().unwrap_or(0.5))?;
    let radius = linear_spectral_radius(&s.g, &pert.delta)?;
    let init = (
        s.fixed_point.xbar + p.get("dx").copied().unwrap_or(0.05),
        s.fixed_point.ybar + p.get("dy").copied().unwrap_or(0.0),
    );
    let traj = fhn_simulate(&model, &pert.delta, steps, init)?;
    let oscillation = oscillation_report(&traj, OscillationThresholds::default());
    let rows = traj.points.iter().map(|&(n, x, y)| vec![n as f64, x, y]);
    let files = write_csv(o, "fig2.csv", &["n", "x", "y"], rows)?;
    Ok(FhnSimResult {
        model,
        e_o: s.e_o,
        eps,
        delta: pert.delta,
        linear_spectral_radius: radius,
        init,
        steps,
        diverged: traj.diverged,
        oscillation,
        last: *traj.points.last().expect("at least one step"),
        files: files.into_iter().collect(),
    })
}
