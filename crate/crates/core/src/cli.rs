//! Command-line front end. `run` parses arguments, executes one command and
//! returns the process exit code.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::approx::{
    applicable, evaluate_grid, grid_csv, positivity_violations, ratio_curve, ratio_curve_csv, Approximation,
    AsymmetricApprox, SymmetricApprox,
};
use crate::error::Error;
use crate::model::SystemParams;
use crate::oracle::{solve_stationary, transform_min_diff};
use crate::sim::{simulate_with, Scenario, SimOptions};
use crate::stability::check_stability;
use crate::tail::{decay_profile, marginal_sum, tail_evaluate, tail_table_csv};

/// Parameters used when neither a file nor a preset is given.
pub const DEFAULT_PARAMS: SystemParams = SystemParams {
    lambda0: 0.15,
    lambda1: 0.05,
    lambda2: 0.01,
    mu: 0.44,
    alpha1: 0.25,
    alpha2: 0.1,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "gjsoq", version, about = "Two-orbit retrial queue with a join-the-shorter-orbit stream")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON file with the six rates.
    #[arg(long, global = true, value_name = "FILE")]
    pub params: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda0: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda1: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda2: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha1: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha2: Option<f64>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Output file; stdout when absent.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Vec<(&'static str, f64)> {
        [
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("mu", self.mu),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Stability criteria, loads, drifts and pooling flags.
    Stability,
    /// Exact decay profile along the minimum and optional tail table.
    Decay {
        /// Tail table spec, e.g. `--table m_max=30 l_range=-5..5`.
        #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
        table: Option<Vec<String>>,
    },
    /// Closed-form approximation on a grid or its anti-diagonal ratio curve.
    Approx {
        /// Grid extent: cells `0 <= i, j <= n`.
        #[arg(long, default_value_t = 40)]
        n: u32,
        /// Cells with `max(i, j)` below this are tagged outside the asymptotic regime.
        #[arg(long, default_value_t = 10)]
        threshold: u32,
        /// Divide grid values by the grid total.
        #[arg(long)]
        normalize: bool,
        /// Use the general evaluator even on symmetric input.
        #[arg(long)]
        general: bool,
        /// Emit `Pr(k+1)/Pr(k)` for `k <= K` instead of the grid.
        #[arg(long, value_name = "K")]
        ratio_curve: Option<u32>,
    },
    /// Truncated exact stationary distribution.
    Solve {
        #[arg(long, default_value_t = 60)]
        n_max: usize,
    },
    /// Event-driven simulation.
    Simulate {
        #[arg(long, default_value_t = 1e5)]
        horizon: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Trajectory sampling step; 0 disables sampling.
        #[arg(long, default_value_t = 1.0)]
        sample_dt: f64,
        #[arg(long, default_value_t = 0.5)]
        warmup: f64,
        #[arg(long, default_value_t = 20)]
        batches: usize,
        /// Start from a regime preset (inline rate flags still override).
        #[arg(long, value_name = "NAME")]
        scenario: Option<String>,
    },
    /// Reference-value reproductions and the oracle decay check.
    Validate {
        #[arg(long, default_value_t = 60)]
        n_max: usize,
    },
    /// Runs a command over a parameter grid, one output file per point.
    ///
    /// Example: `sweep --grid mu=0.4:0.6:3 --grid alpha1=0.2,0.3 --out-dir d -- decay`
    Sweep {
        /// `field=start:stop:count` or `field=v1,v2,...`; repeat for a product grid.
        #[arg(long = "grid", required = true, value_name = "SPEC")]
        grids: Vec<String>,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        /// The command to run at each point, after `--`.
        #[arg(last = true, required = true)]
        command: Vec<String>,
    },
}

#[derive(Debug, Parser)]
#[command(name = "gjsoq sweep --")]
struct PointCli {
    #[command(subcommand)]
    command: Command,
}

/// A failed run, classified by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Input(String),
    Hypothesis(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Hypothesis(_) => EXIT_HYPOTHESIS,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Hypothesis(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParam { .. } | Error::Input(_) => Failure::Input(msg),
            Error::NoConvergence { .. } | Error::Singular(_) => Failure::Numerical(msg),
            _ => Failure::Hypothesis(msg),
        }
    }
}

/// Result of one command before rendering.
struct Output {
    value: Value,
    /// Tabular CSV body, when the command has one.
    table: Option<String>,
    /// Failed validation checks.
    failures: Vec<String>,
}

impl Output {
    fn new(value: Value) -> Self {
        Output {
            value,
            table: None,
            failures: Vec::new(),
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable output")
}

fn set_field(p: &mut SystemParams, field: &str, v: f64) -> Result<(), Failure> {
    match field {
        "lambda0" => p.lambda0 = v,
        "lambda1" => p.lambda1 = v,
        "lambda2" => p.lambda2 = v,
        "mu" => p.mu = v,
        "alpha1" => p.alpha1 = v,
        "alpha2" => p.alpha2 = v,
        _ => return Err(Failure::Input(format!("unknown parameter `{field}`"))),
    }
    Ok(())
}

fn read_params(path: &Path) -> Result<SystemParams, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read parameter file {}: {e}", path.display())))?;
    SystemParams::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn scenario_of(cmd: &Command) -> Result<Option<Scenario>, Failure> {
    match cmd {
        Command::Simulate {
            scenario: Some(name), ..
        } => Scenario::parse(name).map(Some).ok_or_else(|| {
            let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
            Failure::Input(format!("unknown scenario `{name}` (expected one of {})", names.join(", ")))
        }),
        _ => Ok(None),
    }
}

/// Resolves the parameter set and describes where it came from.
fn resolve_params(common: &CommonArgs, scenario: Option<Scenario>) -> Result<(SystemParams, Value), Failure> {
    let (mut p, base) = match (&common.params, scenario) {
        (Some(_), Some(_)) => {
            return Err(Failure::Input("--params and --scenario are mutually exclusive".into()));
        }
        (Some(path), None) => (read_params(path)?, json!({ "file": path.display().to_string() })),
        (None, Some(s)) => (s.preset(), json!({ "preset": s.name() })),
        (None, None) => (DEFAULT_PARAMS, json!({ "default": "table1" })),
    };
    let mut overrides = Map::new();
    for (field, v) in common.overrides() {
        set_field(&mut p, field, v)?;
        overrides.insert(field.into(), json!(v));
    }
    p.validate()?;
    let mut source = base;
    source["overrides"] = Value::Object(overrides);
    Ok((p, source))
}

fn provenance(argv: &[String], p: &SystemParams, source: &Value) -> Value {
    json!({
        "tool": "gjsoq",
        "version": env!("CARGO_PKG_VERSION"),
        "command_line": argv.join(" "),
        "params": p,
        "param_source": source,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::String(s) => out.push_str(&format!("{},{}\n", csv_field(prefix), csv_field(s))),
        other => out.push_str(&format!("{},{}\n", csv_field(prefix), other)),
    }
}

fn render(format: Format, prov: &Value, out: &Output) -> String {
    match format {
        Format::Json => {
            let doc = json!({ "provenance": prov, "result": out.value });
            serde_json::to_string_pretty(&doc).expect("serializable output") + "\n"
        }
        Format::Csv => {
            let mut s = String::new();
            for key in ["tool", "version", "command_line", "params", "param_source"] {
                let v = match &prov[key] {
                    Value::String(x) => x.clone(),
                    other => other.to_string(),
                };
                s.push_str(&format!("# {key}: {v}\n"));
            }
            if let Some(extra) = prov.get("sweep_point") {
                s.push_str(&format!("# sweep_point: {extra}\n"));
            }
            match &out.table {
                Some(t) => s.push_str(t),
                None => {
                    s.push_str("key,value\n");
                    flatten("", &out.value, &mut s);
                }
            }
            s
        }
    }
}

fn parse_table_spec(spec: &[String]) -> Result<(u32, (i64, i64)), Failure> {
    let (mut m_max, mut l_range) = (30u32, (-5i64, 5i64));
    let bad = |s: &str| Failure::Input(format!("bad table spec `{s}` (expected m_max=N or l_range=A..B)"));
    for item in spec {
        let (k, v) = item.split_once('=').ok_or_else(|| bad(item))?;
        match k {
            "m_max" => m_max = v.parse().map_err(|_| bad(item))?,
            "l_range" => {
                let (a, b) = v.split_once("..").ok_or_else(|| bad(item))?;
                l_range = (a.parse().map_err(|_| bad(item))?, b.parse().map_err(|_| bad(item))?);
                if l_range.0 > l_range.1 {
                    return Err(bad(item));
                }
            }
            _ => return Err(bad(item)),
        }
    }
    Ok((m_max, l_range))
}

/// `field=start:stop:count` or `field=v1,v2,...`.
fn parse_grid(spec: &str) -> Result<(String, Vec<f64>), Failure> {
    let bad = || Failure::Input(format!("bad grid spec `{spec}`"));
    let (field, values) = spec.split_once('=').ok_or_else(bad)?;
    let mut scratch = DEFAULT_PARAMS;
    set_field(&mut scratch, field, 0.0)?;
    let parts: Vec<&str> = values.split(':').collect();
    let vals = if parts.len() == 3 {
        let (a, b): (f64, f64) = (parts[0].parse().map_err(|_| bad())?, parts[1].parse().map_err(|_| bad())?);
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        match n {
            0 => return Err(bad()),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        }
    } else {
        values
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    Ok((field.to_string(), vals))
}

fn cmd_stability(p: &SystemParams) -> Output {
    Output::new(to_value(&check_stability(p)))
}

fn cmd_decay(p: &SystemParams, table: Option<&[String]>) -> Result<Output, Failure> {
    let profile = decay_profile(p)?;
    let mut value = json!({ "profile": profile });
    match marginal_sum(p, &profile) {
        Ok(m) => value["marginal_sum"] = to_value(&m),
        Err(e) => {
            value["marginal_sum"] = Value::Null;
            value["marginal_sum_note"] = json!(e.to_string());
        }
    }
    let mut out = Output::new(value);
    if let Some(spec) = table {
        let (m_max, l_range) = parse_table_spec(spec)?;
        let rows: Vec<Value> = (0..=m_max)
            .flat_map(|m| (l_range.0..=l_range.1).flat_map(move |l| [0u8, 1].map(|k| (m, l, k))))
            .map(|(m, l, k)| json!({ "m": m, "l": l, "server": k, "value": tail_evaluate(&profile, m, l, k) }))
            .collect();
        out.value["table"] = Value::Array(rows);
        out.table = Some(tail_table_csv(&profile, m_max, l_range));
    }
    Ok(out)
}

fn cmd_approx(
    p: &SystemParams,
    n: u32,
    threshold: u32,
    normalize: bool,
    general: bool,
    curve: Option<u32>,
) -> Result<Output, Failure> {
    let (evaluator, constants, a): (&str, Value, Box<dyn Approximation + Send + Sync>) =
        if general || !p.is_symmetric(1e-12) {
            let a = AsymmetricApprox::new(p)?;
            ("general", to_value(&a), Box::new(a))
        } else {
            applicable(p)?;
            let a = SymmetricApprox::new(p)?;
            ("symmetric", to_value(&a), Box::new(a))
        };
    let mut value = json!({ "evaluator": evaluator, "constants": constants });
    let mut out = Output::new(Value::Null);
    if let Some(k) = curve {
        let c = ratio_curve(p, k)?;
        value["ratio_curve"] = to_value(&c.iter().map(|(k, r)| json!({ "k": k, "ratio": r })).collect::<Vec<_>>());
        out.table = Some(ratio_curve_csv(&c));
    } else {
        let cells = evaluate_grid(a.as_ref(), n, threshold, normalize);
        value["positivity_violations"] = to_value(&positivity_violations(&cells));
        value["grid"] = to_value(&cells);
        out.table = Some(grid_csv(&cells));
    }
    out.value = value;
    Ok(out)
}

fn cmd_solve(p: &SystemParams, n_max: usize) -> Result<Output, Failure> {
    let sol = solve_stationary(p, n_max)?;
    let value = json!({
        "diagnostics": sol.diagnostics_json(),
        "busy_fraction": sol.busy_fraction(),
        "mean_min": sol.mean_min(),
        "mean_n1": sol.expect(|i, _| i as f64),
        "mean_n2": sol.expect(|_, j| j as f64),
    });
    let mut out = Output::new(value);
    out.table = Some(sol.to_csv());
    Ok(out)
}

fn cmd_simulate(p: &SystemParams, opt: &SimOptions, scenario: Option<Scenario>) -> Result<Output, Failure> {
    if !(opt.horizon > 0.0 && opt.horizon.is_finite()) {
        return Err(Failure::Input(format!("horizon must be positive and finite, got {}", opt.horizon)));
    }
    if !(0.0..1.0).contains(&opt.warmup_fraction) || opt.batches < 2 || !(opt.sample_dt >= 0.0) {
        return Err(Failure::Input("need 0 <= warmup < 1, batches >= 2 and sample_dt >= 0".into()));
    }
    let tr = simulate_with(p, opt);
    let mut value = json!({
        "rng": tr.rng,
        "seed": tr.seed,
        "horizon": tr.horizon,
        "sample_dt": tr.sample_dt,
        "warmup_fraction": opt.warmup_fraction,
        "samples": tr.samples.len(),
        "summary": tr.summary,
        "growth_ratio": tr.summary.growth_ratio(),
    });
    if let Some(s) = scenario {
        let report = check_stability(p);
        value["scenario"] = json!({
            "name": s.name(),
            "caption": s.caption(),
            "regime_holds": s.holds(&report),
            "stable": report.stable,
        });
    }
    let mut out = Output::new(value);
    out.table = Some(tr.to_csv());
    Ok(out)
}

const TABLE1_PRINTED: [((u32, u32), f64); 8] = [
    ((10, 100), 4.0667e-40),
    ((10, 200), 2.3404e-81),
    ((10, 300), 1.3469e-122),
    ((10, 400), 7.7516e-164),
    ((100, 10), 1.2203e-54),
    ((200, 10), 4.555e-112),
    ((300, 10), 1.7003e-169),
    ((400, 10), 6.3466e-227),
];

/// `(lambda0, lambda1, lambda2, alpha1, alpha2)` with `mu = 0.44`.
type RatioPreset = (f64, f64, f64, f64, f64);

/// Presets with the printed ratios at `k = 5, 15, 35, 55`.
const TABLE2_PRINTED: [(RatioPreset, [f64; 4]); 4] = [
    ((0.06, 0.0, 0.0, 0.15, 0.35), [0.1526, 0.1527, 0.1527, 0.1527]),
    ((0.04, 0.01, 0.01, 0.15, 0.35), [0.2446, 0.1948, 0.1683, 0.1596]),
    ((0.06, 0.0, 0.0, 0.25, 0.25), [0.1527, 0.1527, 0.1527, 0.1527]),
    ((0.04, 0.01, 0.01, 0.25, 0.25), [0.225, 0.1669, 0.1538, 0.1527]),
];

fn check(name: &str, pass: bool, detail: Value, failures: &mut Vec<String>) -> Value {
    if !pass {
        failures.push(name.to_string());
    }
    json!({ "check": name, "pass": pass, "detail": detail })
}

fn cmd_validate(p: &SystemParams, n_max: usize) -> Result<Output, Failure> {
    if n_max < 30 {
        return Err(Failure::Input(format!("validate needs n_max >= 30, got {n_max}")));
    }
    let profile = decay_profile(p)?;
    let approx = applicable(p)?;
    let mut failures = Vec::new();
    let mut checks = Vec::new();

    // Both sides divided by rho^(i+j) so that far cells stay representable.
    let tail_scaled = |i: u32, j: u32| profile.x_scaled(j as i64 - i as i64);
    let heuristic_scaled = |i: u32, j: u32| approx.normalization() * approx.scaled_value(i, j, 1);
    let matched = heuristic_scaled(10, 10) / tail_scaled(10, 10);
    let mut rows = Vec::new();
    let mut worst_rel = 0.0f64;
    for ((i, j), _) in TABLE1_PRINTED {
        let (h, t) = (heuristic_scaled(i, j), tail_scaled(i, j));
        let rel = ((h - matched * t) / h).abs();
        worst_rel = worst_rel.max(rel);
        rows.push(json!({ "i": i, "j": j, "relative_difference": rel }));
    }
    checks.push(check(
        "table1_relative",
        worst_rel < 1e-4,
        json!({ "tolerance": 1e-4, "max": worst_rel, "cells": rows }),
        &mut failures,
    ));

    if *p == DEFAULT_PARAMS {
        let mut rows = Vec::new();
        let mut worst = 1.0f64;
        for ((i, j), printed) in TABLE1_PRINTED {
            let diff = (approx.value(i, j, 1) - tail_evaluate(&profile, i.min(j), j as i64 - i as i64, 1)).abs();
            let factor = (diff / printed).max(printed / diff);
            worst = worst.max(factor);
            rows.push(json!({ "i": i, "j": j, "absolute_difference": diff, "printed": printed }));
        }
        checks.push(check(
            "table1_absolute",
            worst <= 100.0,
            json!({ "max_factor": worst, "allowed_factor": 100.0, "cells": rows }),
            &mut failures,
        ));
    }

    let mut rows = Vec::new();
    let (mut worst, mut worst_limit) = (0.0f64, 0.0f64);
    for ((l0, l1, l2, a1, a2), printed) in TABLE2_PRINTED {
        let q = SystemParams::new(l0, l1, l2, 0.44, a1, a2)?;
        let curve = ratio_curve(&q, 500)?;
        let got: Vec<f64> = [5usize, 15, 35, 55].iter().map(|&k| curve[k].1).collect();
        worst = got[1..]
            .iter()
            .zip(&printed[1..])
            .fold(worst, |w, (g, e)| w.max((g - e).abs()));
        worst_limit = worst_limit.max((curve[500].1 - q.derived().rho).abs());
        rows.push(json!({ "params": q, "k": [5, 15, 35, 55], "computed": got, "printed": printed }));
    }
    checks.push(check(
        "table2_ratios",
        worst < 5e-3 && worst_limit < 1e-6,
        json!({ "tolerance": 5e-3, "max": worst, "limit_tolerance": 1e-6, "limit_max": worst_limit, "rows": rows }),
        &mut failures,
    ));

    let sol = solve_stationary(p, n_max)?;
    let v = transform_min_diff(&sol);
    let r2 = profile.decay_rate;
    let (mut worst_ratio, mut worst_idle) = (0.0f64, 0.0f64);
    for m in 15..=25 {
        for l in -2..=2 {
            if let (Some(a), Some(b)) = (v.get(m + 1, l, 1), v.get(m, l, 1)) {
                worst_ratio = worst_ratio.max((a / b / r2 - 1.0).abs());
            }
        }
    }
    for (m, l, k, busy) in v.entries() {
        if k == 1 && m >= 1 && l.abs() <= 2 && m < n_max - 2 {
            if let Some(idle) = v.get(m, l, 0) {
                worst_idle = worst_idle.max((idle / busy / profile.idle_factor - 1.0).abs());
            }
        }
    }
    checks.push(check(
        "oracle_decay",
        worst_ratio < 0.02 && worst_idle < 0.005,
        json!({
            "n_max": n_max,
            "ratio_tolerance": 0.02,
            "ratio_max": worst_ratio,
            "idle_tolerance": 0.005,
            "idle_max": worst_idle,
            "residual_norm": sol.residual_norm,
        }),
        &mut failures,
    ));

    let mut out = Output::new(json!({ "passed": failures.is_empty(), "failures": failures, "checks": checks }));
    out.failures = failures;
    Ok(out)
}

fn run_command(cmd: &Command, p: &SystemParams, scenario: Option<Scenario>) -> Result<Output, Failure> {
    match cmd {
        Command::Stability => Ok(cmd_stability(p)),
        Command::Decay { table } => cmd_decay(p, table.as_deref()),
        Command::Approx {
            n,
            threshold,
            normalize,
            general,
            ratio_curve,
        } => cmd_approx(p, *n, *threshold, *normalize, *general, *ratio_curve),
        Command::Solve { n_max } => cmd_solve(p, *n_max),
        Command::Simulate {
            horizon,
            seed,
            sample_dt,
            warmup,
            batches,
            ..
        } => {
            let mut opt = SimOptions::new(*horizon, *seed, *sample_dt);
            opt.warmup_fraction = *warmup;
            opt.batches = *batches;
            cmd_simulate(p, &opt, scenario)
        }
        Command::Validate { n_max } => cmd_validate(p, *n_max),
        Command::Sweep { .. } => Err(Failure::Input("sweep cannot be nested".into())),
    }
}

fn verdict(failures: &[String]) -> i32 {
    if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}

/// A rendered document and its exit code.
pub struct Rendered {
    pub body: String,
    pub code: i32,
    /// Messages for stderr.
    pub notes: Vec<String>,
}

fn execute_single(cli: &Cli, argv: &[String]) -> Result<Rendered, Failure> {
    let scenario = scenario_of(&cli.command)?;
    let (p, source) = resolve_params(&cli.common, scenario)?;
    let out = run_command(&cli.command, &p, scenario)?;
    let prov = provenance(argv, &p, &source);
    let code = verdict(&out.failures);
    let notes = out.failures.iter().map(|f| format!("validation check failed: {f}")).collect();
    Ok(Rendered {
        body: render(cli.common.format, &prov, &out),
        code,
        notes,
    })
}

fn execute_sweep(cli: &Cli, argv: &[String], grids: &[String], out_dir: &Path, inner: &[String]) -> Result<Rendered, Failure> {
    let point_cli = PointCli::try_parse_from(std::iter::once("gjsoq".to_string()).chain(inner.iter().cloned()))
        .map_err(|e| Failure::Input(format!("bad sweep command: {e}")))?;
    let cmd = point_cli.command;
    if matches!(cmd, Command::Sweep { .. }) {
        return Err(Failure::Input("sweep cannot be nested".into()));
    }
    let scenario = scenario_of(&cmd)?;
    let grids: Vec<(String, Vec<f64>)> = grids.iter().map(|g| parse_grid(g)).collect::<Result<_, _>>()?;
    let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (field, vals) in &grids {
        points = points
            .into_iter()
            .flat_map(|pt| {
                vals.iter().map(move |&v| {
                    let mut next = pt.clone();
                    next.push((field.clone(), v));
                    next
                })
            })
            .collect();
    }
    // Grid fields replace the base values, so the base need not be valid on its own.
    let mut base_args = cli.common.clone();
    for (field, _) in &grids {
        match field.as_str() {
            "lambda0" => base_args.lambda0 = None,
            "lambda1" => base_args.lambda1 = None,
            "lambda2" => base_args.lambda2 = None,
            "mu" => base_args.mu = None,
            "alpha1" => base_args.alpha1 = None,
            "alpha2" => base_args.alpha2 = None,
            _ => {}
        }
    }
    let (base, source) = resolve_params(&base_args, scenario)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Failure::Input(format!("cannot create output directory {}: {e}", out_dir.display())))?;
    let format = cli.common.format;
    let rows: Vec<Value> = points
        .par_iter()
        .enumerate()
        .map(|(idx, pt)| {
            let file = out_dir.join(format!("point_{idx:04}.{}", format.extension()));
            let mut p = base;
            for (f, v) in pt {
                set_field(&mut p, f, *v).expect("grid fields were checked");
            }
            let point: Map<String, Value> = pt.iter().map(|(f, v)| (f.clone(), json!(v))).collect();
            let result = p.validate().map_err(Failure::from).and_then(|_| run_command(&cmd, &p, scenario));
            let (code, message) = match result {
                Ok(out) => {
                    let mut prov = provenance(argv, &p, &source);
                    prov["sweep_point"] = Value::Object(point.clone());
                    let code = verdict(&out.failures);
                    match std::fs::write(&file, render(format, &prov, &out)) {
                        Ok(()) => (code, out.failures.join(";")),
                        Err(e) => (EXIT_INPUT, format!("cannot write {}: {e}", file.display())),
                    }
                }
                Err(f) => (f.exit_code(), f.to_string()),
            };
            json!({
                "point": idx,
                "file": if code == EXIT_OK || code == EXIT_VALIDATION { json!(file.display().to_string()) } else { Value::Null },
                "exit_code": code,
                "values": point,
                "params": p,
                "message": message,
            })
        })
        .collect();
    let worst = rows.iter().map(|r| r["exit_code"].as_i64().unwrap() as i32).max().unwrap_or(EXIT_OK);
    let failed = rows.iter().filter(|r| r["exit_code"] != json!(0)).count();
    let mut table = String::from("point,file,exit_code,lambda0,lambda1,lambda2,mu,alpha1,alpha2,message\n");
    for r in &rows {
        let q = &r["params"];
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r["point"],
            csv_field(r["file"].as_str().unwrap_or("")),
            r["exit_code"],
            q["lambda0"],
            q["lambda1"],
            q["lambda2"],
            q["mu"],
            q["alpha1"],
            q["alpha2"],
            csv_field(r["message"].as_str().unwrap_or(""))
        ));
    }
    let out = Output {
        value: json!({ "points": rows.len(), "failed": failed, "out_dir": out_dir.display().to_string(), "index": rows }),
        table: Some(table),
        failures: Vec::new(),
    };
    let notes = if failed > 0 {
        vec![format!("{failed} of {} sweep points did not succeed", rows.len())]
    } else {
        Vec::new()
    };
    Ok(Rendered {
        body: render(format, &provenance(argv, &base, &source), &out),
        code: worst,
        notes,
    })
}

/// Executes a parsed command line. `argv` is recorded in the provenance block.
pub fn execute(cli: &Cli, argv: &[String]) -> Result<Rendered, Failure> {
    match &cli.command {
        Command::Sweep {
            grids,
            out_dir,
            command,
        } => execute_sweep(cli, argv, grids, out_dir, command),
        _ => execute_single(cli, argv),
    }
}

/// Parses `args` (program name first), runs the command, writes the output
/// and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let rendered = match execute(&cli, &argv) {
        Ok(r) => r,
        Err(f) => {
            eprintln!("error: {f}");
            return f.exit_code();
        }
    };
    for n in &rendered.notes {
        eprintln!("{n}");
    }
    let written = match &cli.common.out {
        Some(path) => std::fs::write(path, &rendered.body)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{}", rendered.body);
            Ok(())
        }
    };
    match written {
        Ok(()) => rendered.code,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
