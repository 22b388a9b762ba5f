//! Command-line front end.
//!
//! Every subcommand accepts the same flat set of flags, which may also come
//! from a JSON config file (`--config`) whose keys are the flag names.
//! Flags given on the command line override the file. Keys a subcommand does
//! not use are rejected. Experiments write `<name>.csv`, `<name>.json` and
//! the effective config `<name>.config.json` into `--out`; replaying that
//! config reproduces the outputs byte for byte.
//!
//! Exit status: 0 when every check passes, 1 when any fails, 2 on usage or
//! constraint errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bounds::{self, BoundSpec, Case, FixedTimeVariant};
use crate::deterministic::{toeplitz_ladder, toeplitz_test_functions};
use crate::experiments::report::{num, resolve_timestamp, write_file};
use crate::experiments::{
    run_experiment, ApplySetup, Conv00Setup, ExperimentConfig, FixedTimeLevel, RunMetadata, TailCell, TailSetup,
    WllnSetup, DEFAULT_DELTA, DEFAULT_PILOT, Z95,
};
use crate::fractional::{Alpha, CAlphaEstimator, ConvolutionMethod, FractionalConvolver};
use crate::parallel;
use crate::paths::{
    bm_increments, fbm_path, lanes, FbmMethod, IntegrandSampler, IntegrandSpec, PhiTag, RandomStream, TimeGrid,
};
use crate::Error;

const DEFAULT_CELLS: usize = 1 << 12;
const DEFAULT_PATHS: usize = 10_000;
const DEFAULT_OUT: &str = "results";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug)]
#[command(
    name = "fracmart",
    version,
    about = "Fractional martingale deviation bounds and their Monte Carlo checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print C_t, κ, c₁ and C_{β,β′}.
    Constants(Invocation),
    /// Evaluate a deviation bound.
    Bound(Invocation),
    /// Monte Carlo tail probabilities against a deviation bound.
    Tail(Invocation),
    /// Terminal-value tail against the fixed-time bound (α < 0).
    FixedTime(Invocation),
    /// Weak law of large numbers trend.
    Wlln(Invocation),
    /// Occupation functional of fBm against its local-time limit.
    ApplyFbm(Invocation),
    /// Ratio of the convolution to its variance integral along a t ladder.
    Conv00(Invocation),
    /// Fractional Toeplitz ratios along a t ladder.
    Toeplitz(Invocation),
    /// Check the elementary power inequality on a log grid.
    Mayo(Invocation),
    /// Estimate c_α from the β-variation of the ξ ≡ 1 convolution.
    Calpha(Invocation),
    /// Dump sample paths as CSV.
    Simulate(Invocation),
}

impl Command {
    fn parts(&self) -> (&'static str, &Invocation) {
        match self {
            Command::Constants(i) => ("constants", i),
            Command::Bound(i) => ("bound", i),
            Command::Tail(i) => ("tail", i),
            Command::FixedTime(i) => ("fixed-time", i),
            Command::Wlln(i) => ("wlln", i),
            Command::ApplyFbm(i) => ("apply-fbm", i),
            Command::Conv00(i) => ("conv00", i),
            Command::Toeplitz(i) => ("toeplitz", i),
            Command::Mayo(i) => ("mayo", i),
            Command::Calpha(i) => ("calpha", i),
            Command::Simulate(i) => ("simulate", i),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct Invocation {
    /// JSON object of flag values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (falls back to FRACMART_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum CaseName {
    I,
    Ii,
    Iii,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum VariantName {
    Intro,
    Remark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum IntegrandName {
    Constant,
    Gauss,
    ShiftedGauss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ProcessName {
    /// Brownian motion W
    Bm,
    /// Fractional Brownian motion
    Fbm,
    /// Integrand ξ
    Xi,
    /// Fractional martingale
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum MethodName {
    Auto,
    Direct,
    Fft,
}

impl From<MethodName> for ConvolutionMethod {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Auto => ConvolutionMethod::Auto,
            MethodName::Direct => ConvolutionMethod::Direct,
            MethodName::Fft => ConvolutionMethod::Fft,
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct Params {
    /// Fractional order α ∈ (−½, ½).
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Variation index β (defaults to 2/(1+2α)).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum)]
    case: Option<CaseName>,
    #[arg(long)]
    beta_prime: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Almost-sure bound on |ξ| (case iii).
    #[arg(long)]
    c_inf: Option<f64>,
    /// Deviation multipliers, comma separated.
    #[arg(long = "L", value_delimiter = ',')]
    #[serde(rename = "L")]
    l: Option<Vec<f64>>,
    /// Horizon.
    #[arg(long)]
    t: Option<f64>,
    /// Horizon ladder, comma separated.
    #[arg(long, value_delimiter = ',')]
    t_values: Option<Vec<f64>>,
    /// Conditioning level ν_t (pilot median when absent).
    #[arg(long)]
    nu: Option<f64>,
    /// Fixed-time level.
    #[arg(long)]
    u: Option<f64>,
    /// Fixed-time bound value to calibrate u to.
    #[arg(long)]
    target: Option<f64>,
    #[arg(long, value_enum)]
    variant: Option<VariantName>,
    /// Grid cells.
    #[arg(long)]
    cells: Option<usize>,
    /// Cells per unit time (toeplitz).
    #[arg(long)]
    per_unit: Option<f64>,
    /// Monte Carlo replicates.
    #[arg(long)]
    paths: Option<usize>,
    /// Pilot replicates for ν_t.
    #[arg(long)]
    pilot: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    integrand: Option<IntegrandName>,
    /// Value of a constant integrand.
    #[arg(long, allow_negative_numbers = true)]
    xi_value: Option<f64>,
    /// Hurst index of the fBm.
    #[arg(long)]
    hurst: Option<f64>,
    /// WLLN threshold η.
    #[arg(long)]
    eta: Option<f64>,
    /// Local-time bandwidth δ.
    #[arg(long)]
    delta: Option<f64>,
    /// β-variation subdivisions, comma separated.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Points per axis of the mayo grid.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, value_enum)]
    process: Option<ProcessName>,
    #[arg(long, value_enum)]
    method: Option<MethodName>,
    /// Report timestamp in seconds since the epoch.
    #[arg(long)]
    timestamp: Option<u64>,
}

const SIM_INTEGRAND: [&str; 3] = ["integrand", "xi-value", "hurst"];

fn allowed(cmd: &str) -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = match cmd {
        "constants" => vec!["t", "alpha", "beta", "beta-prime", "eps"],
        "bound" => vec!["alpha", "case", "beta-prime", "eps", "c-inf", "L", "t", "nu"],
        "tail" => vec![
            "alpha",
            "case",
            "beta-prime",
            "eps",
            "c-inf",
            "L",
            "t",
            "nu",
            "cells",
            "paths",
            "pilot",
            "seed",
            "method",
            "timestamp",
        ],
        "fixed-time" => vec![
            "alpha",
            "variant",
            "beta-prime",
            "t",
            "nu",
            "u",
            "target",
            "cells",
            "paths",
            "pilot",
            "seed",
            "method",
            "timestamp",
        ],
        "wlln" => vec!["alpha", "eta", "t-values", "cells", "paths", "seed", "timestamp"],
        "apply-fbm" => vec![
            "alpha",
            "hurst",
            "t-values",
            "cells",
            "paths",
            "delta",
            "seed",
            "timestamp",
        ],
        "conv00" => vec!["alpha", "t-values", "cells", "paths", "seed", "timestamp"],
        "toeplitz" => vec!["alpha", "t-values", "per-unit"],
        "mayo" => vec!["alpha", "eps", "size"],
        "calpha" => vec!["alpha", "t", "cells", "paths", "m", "seed"],
        "simulate" => vec!["process", "alpha", "t", "cells", "paths", "seed", "method"],
        _ => vec![],
    };
    if matches!(cmd, "tail" | "fixed-time" | "wlln" | "conv00" | "simulate") {
        keys.extend(SIM_INTEGRAND);
    }
    keys
}

fn to_map(p: &Params) -> Map<String, Value> {
    match serde_json::to_value(p).expect("params serialize") {
        Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => unreachable!("params serialize to an object"),
    }
}

/// Config file values overlaid with command-line flags.
fn effective(cmd: &str, inv: &Invocation) -> CliResult<Params> {
    let mut base = match &inv.config {
        None => Map::new(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(usage(format!("config {} must hold a JSON object", path.display()))),
                Err(e) => return Err(usage(format!("config {}: {e}", path.display()))),
            }
        }
    };
    if let Some(c) = base.remove("command") {
        if c.as_str() != Some(cmd) {
            return Err(usage(format!("config is for command {c}, not `{cmd}`")));
        }
    }
    base.extend(to_map(&inv.params));
    let keys = allowed(cmd);
    if let Some(k) = base.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(usage(format!("`--{k}` is not used by `{cmd}`")));
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| usage(format!("config: {e}")))
}

fn echo(cmd: &str, p: &Params) -> Value {
    let mut m = to_map(p);
    m.insert("command".into(), Value::String(cmd.into()));
    Value::Object(m)
}

fn need<T: Clone>(v: &Option<T>, flag: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| usage(format!("`--{flag}` is required")))
}

fn alpha_of(p: &Params) -> CliResult<Alpha> {
    Ok(Alpha::new(need(&p.alpha, "alpha")?)?)
}

fn integrand_of(p: &mut Params) -> CliResult<IntegrandSpec> {
    Ok(match *p.integrand.get_or_insert(IntegrandName::Constant) {
        IntegrandName::Constant => IntegrandSpec::constant(*p.xi_value.get_or_insert(1.0)),
        IntegrandName::Gauss => IntegrandSpec::phi_of_fbm(need(&p.hurst, "hurst")?, PhiTag::Gauss),
        IntegrandName::ShiftedGauss => IntegrandSpec::phi_of_fbm(need(&p.hurst, "hurst")?, PhiTag::ShiftedGauss),
    })
}

fn case_of(p: &Params, c_inf_default: f64) -> CliResult<Case> {
    Ok(match need(&p.case, "case")? {
        CaseName::I => Case::I {
            beta_prime: need(&p.beta_prime, "beta-prime")?,
        },
        CaseName::Ii => Case::Ii {
            eps: need(&p.eps, "eps")?,
        },
        CaseName::Iii => Case::Iii {
            eps: need(&p.eps, "eps")?,
            c_inf: p.c_inf.unwrap_or(c_inf_default),
        },
    })
}

fn workers_of(inv: &Invocation) -> CliResult<usize> {
    match inv.workers {
        Some(0) => Err(usage("`--workers` must be at least 1")),
        Some(k) => Ok(k),
        None => Ok(parallel::default_workers()),
    }
}

fn tail_setup(p: &mut Params) -> CliResult<TailSetup> {
    let alpha = alpha_of(p)?;
    let integrand = integrand_of(p)?;
    let t = *p.t.get_or_insert(1.0);
    let replicates = *p.paths.get_or_insert(DEFAULT_PATHS);
    let seed = need(&p.seed, "seed")?;
    let mut setup = TailSetup::new(alpha, t, integrand, replicates, seed)
        .cells(*p.cells.get_or_insert(DEFAULT_CELLS))
        .pilot(*p.pilot.get_or_insert(DEFAULT_PILOT));
    setup.method = (*p.method.get_or_insert(MethodName::Auto)).into();
    Ok(setup)
}

fn pass_line(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn dispatch(cli: Cli) -> CliResult<bool> {
    let (cmd, inv) = cli.command.parts();
    let mut p = effective(cmd, inv)?;
    match cmd {
        "constants" => constants(&mut p),
        "bound" => bound(&mut p),
        "toeplitz" => toeplitz(cmd, &mut p, inv),
        "mayo" => mayo(cmd, &mut p, inv),
        "calpha" => calpha(cmd, &mut p, inv),
        "simulate" => simulate(&mut p, inv),
        _ => {
            let config = experiment_config(cmd, &mut p)?;
            experiment(cmd, config, &mut p, inv)
        }
    }
}

fn experiment_config(cmd: &str, p: &mut Params) -> CliResult<ExperimentConfig> {
    Ok(match cmd {
        "tail" => {
            let setup = tail_setup(p)?;
            let case = case_of(p, setup.integrand.sup_bound())?;
            let ls = p.l.get_or_insert_with(|| vec![1.0]).clone();
            ExperimentConfig::Tail {
                setup,
                cells: ls.into_iter().map(|l| TailCell { case, l }).collect(),
                nu: p.nu,
            }
        }
        "fixed-time" => {
            let setup = tail_setup(p)?;
            let variant = match *p.variant.get_or_insert(VariantName::Intro) {
                VariantName::Intro => FixedTimeVariant::Intro,
                VariantName::Remark => FixedTimeVariant::Remark {
                    beta_prime: need(&p.beta_prime, "beta-prime")?,
                },
            };
            let level = match (p.u, p.target) {
                (Some(_), Some(_)) => return Err(usage("give only one of `--u` and `--target`")),
                (Some(u), None) => FixedTimeLevel::U(u),
                (None, t) => FixedTimeLevel::Target(*p.target.get_or_insert(t.unwrap_or(0.1))),
            };
            ExperimentConfig::FixedTime {
                setup,
                variant,
                level,
                nu: p.nu,
            }
        }
        "wlln" => ExperimentConfig::Wlln(WllnSetup {
            alpha: alpha_of(p)?,
            eta: *p.eta.get_or_insert(0.5),
            t_values: p.t_values.get_or_insert_with(|| vec![10.0, 40.0, 160.0]).clone(),
            integrand: integrand_of(p)?,
            cells: *p.cells.get_or_insert(DEFAULT_CELLS),
            replicates: *p.paths.get_or_insert(DEFAULT_PATHS),
            seed: need(&p.seed, "seed")?,
        }),
        "apply-fbm" => ExperimentConfig::ApplyFbm(ApplySetup {
            hurst: need(&p.hurst, "hurst")?,
            alpha: alpha_of(p)?,
            t_values: p.t_values.get_or_insert_with(|| vec![10.0, 100.0, 1000.0]).clone(),
            cells: *p.cells.get_or_insert(DEFAULT_CELLS),
            replicates: *p.paths.get_or_insert(DEFAULT_PATHS),
            delta: *p.delta.get_or_insert(DEFAULT_DELTA),
            seed: need(&p.seed, "seed")?,
        }),
        "conv00" => ExperimentConfig::Conv00(Conv00Setup {
            alpha: alpha_of(p)?,
            integrand: integrand_of(p)?,
            t_values: p.t_values.get_or_insert_with(|| vec![10.0, 100.0, 1000.0]).clone(),
            cells: *p.cells.get_or_insert(DEFAULT_CELLS),
            replicates: *p.paths.get_or_insert(DEFAULT_PATHS),
            seed: need(&p.seed, "seed")?,
        }),
        other => unreachable!("not an experiment: {other}"),
    })
}

fn experiment(cmd: &str, config: ExperimentConfig, p: &mut Params, inv: &Invocation) -> CliResult<bool> {
    let workers = workers_of(inv)?;
    let timestamp = resolve_timestamp(p.timestamp);
    p.timestamp = Some(timestamp);
    let report = run_experiment(&config, workers)?;
    print!("{}", report.csv);
    println!("{}", pass_line(report.pass));
    let config_echo = echo(cmd, p);
    let dir = inv.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let meta = RunMetadata::new(config.seed(), timestamp);
    report.write(&dir, &config_echo, &meta)?;
    write_config(&dir, cmd, &config_echo)?;
    Ok(report.pass)
}

fn write_config(dir: &Path, name: &str, config: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(config).map_err(Error::from)?;
    text.push('\n');
    write_file(&dir.join(format!("{name}.config.json")), text.as_bytes())?;
    Ok(())
}

/// Write a CSV table and JSON summary when `--out` is given.
fn write_optional(cmd: &str, p: &Params, inv: &Invocation, csv: &str, results: Value, pass: bool) -> CliResult<()> {
    let Some(dir) = &inv.out else { return Ok(()) };
    write_file(&dir.join(format!("{cmd}.csv")), csv.as_bytes())?;
    let summary = serde_json::json!({
        "experiment": cmd,
        "pass": pass,
        "results": results,
        "config": echo(cmd, p),
    });
    let mut text = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
    text.push('\n');
    write_file(&dir.join(format!("{cmd}.json")), text.as_bytes())?;
    write_config(dir, cmd, &echo(cmd, p))
}

fn constants(p: &mut Params) -> CliResult<bool> {
    let t = *p.t.get_or_insert(1.0);
    println!("C_t = {} (t = {})", bounds::c_t(t), num(t));
    let beta = match (p.beta, p.alpha) {
        (Some(b), _) => Some(b),
        (None, Some(a)) => Some(Alpha::new(a)?.beta()),
        (None, None) => None,
    };
    if let Some(b) = beta {
        println!("beta = {b}");
    }
    if let Some(bp) = p.beta_prime {
        let b = beta.ok_or_else(|| usage("`--beta-prime` needs `--alpha` or `--beta`"))?;
        println!("kappa = {} (case i, beta' = {bp})", bounds::kappa_case_i(b, bp)?);
        println!("c1 = {}", bounds::c1_constant(b, bp)?);
        println!("C_beta_beta' = {}", bounds::c_beta_betaprime(b, bp)?);
    }
    if let Some(eps) = p.eps {
        println!("kappa = {} (eps = {eps})", bounds::kappa_eps(eps)?);
    }
    Ok(true)
}

fn bound(p: &mut Params) -> CliResult<bool> {
    let alpha = alpha_of(p)?;
    let case = case_of(p, 1.0)?;
    let t = *p.t.get_or_insert(1.0);
    let nu = *p.nu.get_or_insert(1.0);
    let mut out = String::from("case,alpha,L,t,nu,threshold,bound,c_t,kappa,c1,t_power\n");
    for &l in p.l.get_or_insert_with(|| vec![1.0]).iter() {
        let v = bounds::bound(&BoundSpec::new(alpha, case, l, t, nu)?)?;
        let c1 = v.c1.map(num).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{c1},{}",
            case.name(),
            num(alpha.value()),
            num(l),
            num(t),
            num(nu),
            num(v.threshold),
            num(v.probability_bound),
            num(v.c_t),
            num(v.kappa),
            num(v.t_power)
        );
    }
    print!("{out}");
    Ok(true)
}

fn toeplitz(cmd: &str, p: &mut Params, inv: &Invocation) -> CliResult<bool> {
    let alpha = need(&p.alpha, "alpha")?;
    let ts = p.t_values.get_or_insert_with(|| vec![10.0, 100.0, 1000.0]).clone();
    let per_unit = *p.per_unit.get_or_insert(100.0);
    let mut csv = String::from("function,t,ratio,error\n");
    let mut ladders = Vec::new();
    for (name, x, limit) in toeplitz_test_functions() {
        let l = toeplitz_ladder(alpha, name, x, limit, &ts, per_unit)?;
        for r in &l.rows {
            let _ = writeln!(csv, "{name},{},{},{}", num(r.t), num(r.ratio), num(r.error));
        }
        ladders.push(l);
    }
    print!("{csv}");
    let mut pass = true;
    for l in &ladders {
        println!("{}: {}", l.function, pass_line(l.monotone));
        pass &= l.monotone;
    }
    let results = serde_json::to_value(&ladders).map_err(Error::from)?;
    write_optional(cmd, p, inv, &csv, results, pass)?;
    Ok(pass)
}

fn mayo(cmd: &str, p: &mut Params, inv: &Invocation) -> CliResult<bool> {
    let size = *p.size.get_or_insert(50);
    let pairs = match (p.alpha, p.eps) {
        (Some(a), Some(e)) => vec![(a, e)],
        (None, None) => bounds::mayo_sweep_pairs(),
        _ => {
            return Err(usage(
                "give both `--alpha` and `--eps`, or neither for the default pairs",
            ))
        }
    };
    let mut csv = String::from("alpha,eps,constant,numeric,relative_gap,points,failures,pass\n");
    let mut sweeps = Vec::new();
    for (a, e) in pairs {
        let s = bounds::mayo_sweep(a, e, size, 1e-3, 1e3)?;
        println!(
            "alpha = {a}, eps = {e}: C = {:.5} (numeric {:.5}, relative gap {:.1e}), {}/{} grid points ok: {}",
            s.constant,
            s.numeric,
            s.relative_gap,
            s.points - s.failures,
            s.points,
            pass_line(s.pass())
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            num(a),
            num(e),
            num(s.constant),
            num(s.numeric),
            num(s.relative_gap),
            s.points,
            s.failures,
            pass_line(s.pass())
        );
        sweeps.push(s);
    }
    let pass = sweeps.iter().all(|s| s.pass());
    let results = serde_json::to_value(&sweeps).map_err(Error::from)?;
    write_optional(cmd, p, inv, &csv, results, pass)?;
    Ok(pass)
}

fn calpha(cmd: &str, p: &mut Params, inv: &Invocation) -> CliResult<bool> {
    let alpha = alpha_of(p)?;
    let t = *p.t.get_or_insert(1.0);
    let cells = *p.cells.get_or_insert(DEFAULT_CELLS);
    let replicates = *p.paths.get_or_insert(DEFAULT_PATHS);
    let seed = need(&p.seed, "seed")?;
    let ms = p.m.get_or_insert_with(|| vec![cells]).clone();
    let grid = TimeGrid::new(t, cells)?;
    let est = CAlphaEstimator::new(alpha, grid, replicates, seed)
        .workers(workers_of(inv)?)
        .ladder(&ms)?;
    let mut csv = String::from("alpha,beta,t,cells,m,N,c_alpha,se,lo,hi,low_replicates\n");
    for e in &est {
        let (lo, hi) = e.interval(Z95);
        let _ = writeln!(
            csv,
            "{},{},{},{cells},{},{replicates},{},{},{},{},{}",
            num(e.alpha),
            num(e.beta),
            num(t),
            e.subdivisions,
            num(e.value()),
            num(e.std_error()),
            num(lo),
            num(hi),
            e.low_replicates
        );
    }
    print!("{csv}");
    let results = serde_json::to_value(&est).map_err(Error::from)?;
    write_optional(cmd, p, inv, &csv, results, true)?;
    Ok(true)
}

fn simulate(p: &mut Params, inv: &Invocation) -> CliResult<bool> {
    let process = *p.process.get_or_insert(ProcessName::M);
    let t = *p.t.get_or_insert(1.0);
    let cells = *p.cells.get_or_insert(DEFAULT_CELLS);
    let count = *p.paths.get_or_insert(1);
    let seed = need(&p.seed, "seed")?;
    let grid = TimeGrid::new(t, cells)?;
    let columns: Vec<Vec<f64>> = match process {
        ProcessName::Bm => (0..count as u64)
            .map(|r| {
                let dw = bm_increments(&grid, &RandomStream::new(seed, r));
                std::iter::once(0.0)
                    .chain(dw.iter().scan(0.0, |w, d| {
                        *w += d;
                        Some(*w)
                    }))
                    .collect()
            })
            .collect(),
        ProcessName::Fbm => {
            let h = need(&p.hurst, "hurst")?;
            (0..count as u64)
                .map(|r| {
                    let s = RandomStream::new(seed, r).lane(lanes::INTEGRAND);
                    Ok(fbm_path(&grid, h, &s, FbmMethod::auto(cells))?.into_values())
                })
                .collect::<crate::Result<_>>()?
        }
        ProcessName::Xi | ProcessName::M => {
            let spec = integrand_of(p)?;
            let sampler = IntegrandSampler::new(&spec, &grid)?;
            let conv = match process {
                ProcessName::M => Some(FractionalConvolver::new(
                    alpha_of(p)?,
                    grid,
                    (*p.method.get_or_insert(MethodName::Auto)).into(),
                )),
                _ => None,
            };
            (0..count as u64)
                .map(|r| {
                    let stream = RandomStream::new(seed, r);
                    let xi = sampler.sample(&stream);
                    match &conv {
                        Some(c) => Ok(c.convolve(&xi, &bm_increments(&grid, &stream))?.into_values()),
                        None => Ok(xi.into_values()),
                    }
                })
                .collect::<crate::Result<_>>()?
        }
    };
    let mut csv = String::from("t");
    for r in 0..count {
        let _ = write!(csv, ",path_{r}");
    }
    csv.push('\n');
    for (i, s) in grid.points().enumerate() {
        csv.push_str(&num(s));
        for c in &columns {
            csv.push(',');
            csv.push_str(&num(c[i]));
        }
        csv.push('\n');
    }
    match &inv.out {
        Some(dir) => {
            write_file(&dir.join("simulate.csv"), csv.as_bytes())?;
            write_config(dir, "simulate", &echo("simulate", p))?;
        }
        None => print!("{csv}"),
    }
    Ok(true)
}

/// Parse `args` (including the program name), run the subcommand and return
/// the exit status.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn every_allowed_key_is_a_param() {
        let all = to_map(&Params {
            alpha: Some(0.0),
            beta: Some(2.0),
            case: Some(CaseName::I),
            beta_prime: Some(6.0),
            eps: Some(0.1),
            c_inf: Some(1.0),
            l: Some(vec![1.0]),
            t: Some(1.0),
            t_values: Some(vec![1.0]),
            nu: Some(1.0),
            u: Some(1.0),
            target: Some(0.1),
            variant: Some(VariantName::Intro),
            cells: Some(1),
            per_unit: Some(1.0),
            paths: Some(1),
            pilot: Some(1),
            seed: Some(1),
            integrand: Some(IntegrandName::Gauss),
            xi_value: Some(1.0),
            hurst: Some(0.5),
            eta: Some(0.5),
            delta: Some(0.1),
            m: Some(vec![1]),
            size: Some(2),
            process: Some(ProcessName::M),
            method: Some(MethodName::Fft),
            timestamp: Some(0),
        });
        for cmd in [
            "constants",
            "bound",
            "tail",
            "fixed-time",
            "wlln",
            "apply-fbm",
            "conv00",
            "toeplitz",
            "mayo",
            "calpha",
            "simulate",
        ] {
            for k in allowed(cmd) {
                assert!(all.contains_key(k), "{cmd}: {k}");
            }
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["fracmart", "constants", "--t", "1"]), 0);
        assert_eq!(run(["fracmart", "nope"]), 2);
        assert_eq!(run(["fracmart", "constants", "--bogus", "1"]), 2);
        assert_eq!(run(["fracmart", "constants", "--eta", "1"]), 2);
        assert_eq!(
            run(["fracmart", "bound", "--case", "ii", "--alpha", "0.25", "--eps", "0.3"]),
            2
        );
        assert_eq!(
            run(["fracmart", "bound", "--case", "ii", "--alpha", "0.25", "--eps", "0.1"]),
            0
        );
        assert_eq!(
            run(["fracmart", "tail", "--case", "iii", "--alpha", "0", "--eps", "0.25"]),
            2,
            "seed required"
        );
        assert_eq!(
            run(["fracmart", "mayo", "--alpha", "0.4", "--eps", "0.7", "--size", "5"]),
            0
        );
        assert_eq!(run(["fracmart", "toeplitz", "--alpha", "-0.2"]), 2);
    }
}
