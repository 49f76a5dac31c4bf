//! Command-line front end: `solve`, `price`, `compare` and `validate`.
//!
//! Exit codes: 0 on success, 1 on a domain failure (well-posedness gates,
//! failed validation), 2 on a usage or configuration error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::agents::{solve_regime, AgentSolution, Regime};
use crate::defaults;
use crate::error::{Error, Result};
use crate::model::{validate_params, IncomeStream, ModelParams, Psi};
use crate::pricing::{
    closed_form_price, default_horizon, info_value_report, price_mc, InfoValueReport,
    ReportOptions,
};
use crate::quadrature::{gauss_hermite, QuadratureRule};
use crate::simulate::{Conditioning, SimConfig};
use crate::validation::{run_criterion, Criterion, SuiteScale};

#[derive(Debug, Parser)]
#[command(
    name = "infoval",
    version,
    about = "Indifference prices and the value of jump information in a jump-diffusion market"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the regimes and print their constants.
    Solve(SolveArgs),
    /// Price a stream by Monte Carlo and, where known, in closed form.
    Price(PriceArgs),
    /// Compare a stream's prices across regimes.
    Compare(CompareArgs),
    /// Run the built-in acceptance suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// TOML file with mu, r, sigma, lambda, m, v, rho, R, v_eps and optional [psi.<name>] tables.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, value_name = "N", default_value_t = defaults::N_PATHS)]
    pub paths: usize,
    /// Simulation horizon in years; chosen from the truncation bound when omitted.
    #[arg(long, value_name = "T")]
    pub horizon: Option<f64>,
    #[arg(long, value_name = "STEP", default_value_t = defaults::DT)]
    pub dt: f64,
    #[arg(long, value_name = "S", default_value_t = defaults::SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// uninformed, timing, signal, merton or all.
    #[arg(long, default_value = "all", value_parser = parse_regimes)]
    pub regime: RegimeSelection,
}

#[derive(Debug, Clone, Args)]
pub struct PriceArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// constant:LEVEL, exp_until_jump or post_jump_signal:PSI.
    #[arg(long, value_name = "SPEC")]
    pub stream: String,
    #[arg(long, default_value = "all", value_parser = parse_regimes)]
    pub regime: RegimeSelection,
    /// Condition on the signal about the first jump.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub eta0: Option<f64>,
    /// Condition on the time of the first jump.
    #[arg(long, value_name = "X")]
    pub t1: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_name = "SPEC")]
    pub stream: String,
    /// Signal values for the conditional signal-insider prices; repeatable.
    /// Defaults to m + k·sd(η) for k = −2..2.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub eta0: Vec<f64>,
    /// Skip Monte Carlo wherever a closed form exists.
    #[arg(long)]
    pub closed_form_only: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Smaller Monte Carlo sizes for a fast smoke run.
    #[arg(long)]
    pub quick: bool,
    /// Criterion numbers to run; repeatable. All ten when omitted.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u8).range(1..=10))]
    pub criterion: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegimeSelection(pub Vec<Regime>);

fn parse_regimes(s: &str) -> std::result::Result<RegimeSelection, String> {
    if s == "all" {
        return Ok(RegimeSelection(Regime::ALL.to_vec()));
    }
    s.parse::<Regime>()
        .map(|r| RegimeSelection(vec![r]))
        .map_err(|e| e.to_string())
}

/// Parse the stream mini-language against the built-in and configured Ψ.
pub fn parse_stream(spec: &str, psis: &BTreeMap<String, Psi>) -> Result<IncomeStream> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    match (kind, arg) {
        ("constant", Some(level)) => level
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(IncomeStream::constant)
            .ok_or_else(|| Error::Config(format!("bad constant level `{level}`"))),
        ("exp_until_jump", None) => Ok(IncomeStream::exp_until_first_jump()),
        ("post_jump_signal", Some(name)) => psis
            .get(name)
            .cloned()
            .or_else(|| Psi::by_name(name))
            .map(IncomeStream::post_first_jump_signal)
            .ok_or_else(|| Error::Config(format!("unknown Ψ `{name}`"))),
        _ => Err(Error::Config(format!(
            "unknown stream `{spec}`; expected constant:LEVEL, exp_until_jump or post_jump_signal:PSI"
        ))),
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

/// Run a parsed command; `Ok` carries the exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    configure_workers()?;
    match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Price(a) => price(a),
        Command::Compare(a) => compare(a),
        Command::Validate(a) => validate(a),
    }
}

fn configure_workers() -> Result<()> {
    let Ok(value) = std::env::var(defaults::WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{} must be a positive integer", defaults::WORKERS_ENV)))?;
    // a second call within one process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load_config(out: &OutputArgs) -> Result<(ModelParams, BTreeMap<String, Psi>)> {
    let (p, psis) = match &out.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            ModelParams::from_toml_str(&text)?
        }
        None => (ModelParams::CANON, BTreeMap::new()),
    };
    validate_params(&p).into_result()?;
    Ok((p, psis))
}

fn rule() -> Result<QuadratureRule> {
    gauss_hermite(defaults::RULE_ORDER)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::Config(e.to_string()))
        }
    }
}

fn to_json(value: &impl Serialize) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Config(e.to_string()))
}

fn solution_json(sol: &AgentSolution) -> Result<Value> {
    let v = match sol {
        AgentSolution::Uninformed(s) => serde_json::to_value(s),
        AgentSolution::Timing(s) => serde_json::to_value(s),
        AgentSolution::Merton(s) => serde_json::to_value(s),
        AgentSolution::Signal(s) => {
            let (h_min, h_max) = s
                .h_values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &h| (lo.min(h), hi.max(h)));
            let p = s.params();
            Ok(json!({
                "a3": s.a3,
                "a1": s.a1,
                "outer_iterations": s.outer_iterations,
                "damped": s.damped,
                "posterior_var": s.posterior_var,
                "grid_size": s.eta_grid.len(),
                "eta_min": s.eta_grid.first(),
                "eta_max": s.eta_grid.last(),
                "h_min": h_min,
                "h_max": h_max,
                "h_at_mean_signal": s.h(p.m),
                "q_bar_at_mean_signal": s.q_bar_table(p.m),
            }))
        }
    };
    v.map_err(|e| Error::Config(e.to_string()))
}

fn solve(a: &SolveArgs) -> Result<i32> {
    let (p, _) = load_config(&a.output)?;
    let rule = rule()?;
    let mut report = serde_json::Map::new();
    let mut failed = false;
    for &regime in &a.regime.0 {
        let entry = match solve_regime(regime, &p, &rule) {
            Ok(sol) => solution_json(&sol)?,
            Err(e) if e.is_usage() => return Err(e),
            Err(e) => {
                eprintln!("error: {regime}: {e}");
                failed = true;
                json!({ "error": e.to_string() })
            }
        };
        report.insert(regime.to_string(), entry);
    }
    let text = match a.output.format {
        Format::Json => to_json(&report)?,
        Format::Table => {
            let mut t = String::from("regime,quantity,value\n");
            for (regime, entry) in &report {
                if let Value::Object(fields) = entry {
                    for (k, v) in fields {
                        let _ = writeln!(t, "{regime},{k},{v}");
                    }
                }
            }
            t
        }
    };
    emit(&a.output.out, &text)?;
    Ok(i32::from(failed))
}

/// One line of a price report.
#[derive(Debug, Clone, Serialize)]
pub struct PriceRow {
    pub stream: String,
    pub regime: Regime,
    pub method: &'static str,
    pub mean: f64,
    pub std_error: Option<f64>,
    pub truncation_bound: Option<f64>,
    pub n_paths: Option<usize>,
    pub horizon: Option<f64>,
    pub conditioning: Conditioning,
}

fn sim_config(sim: &SimArgs, horizon: f64) -> SimConfig {
    SimConfig {
        horizon,
        dt: sim.dt,
        n_paths: sim.paths,
        seed: sim.seed,
    }
}

fn horizon_for(
    sim: &SimArgs,
    e: &IncomeStream,
    sol: &AgentSolution,
    p: &ModelParams,
    cond: &Conditioning,
    rule: &QuadratureRule,
) -> Result<f64> {
    match sim.horizon {
        Some(h) => Ok(h),
        None => default_horizon(e, sol, p, cond, defaults::TAIL_TOL, rule),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn conditioning_label(c: &Conditioning) -> String {
    match (c.first_jump_time, c.first_signal) {
        (Some(t1), Some(eta)) => format!("t1={t1};eta0={eta}"),
        (Some(t1), None) => format!("t1={t1}"),
        (None, Some(eta)) => format!("eta0={eta}"),
        (None, None) => String::new(),
    }
}

fn price(a: &PriceArgs) -> Result<i32> {
    let (p, psis) = load_config(&a.output)?;
    let e = parse_stream(&a.stream, &psis)?;
    let rule = rule()?;
    let cond = Conditioning {
        first_jump_time: a.t1,
        first_signal: a.eta0,
    };
    let mut rows = Vec::new();
    for &regime in &a.regime.0 {
        let sol = solve_regime(regime, &p, &rule)?;
        if let Some(v) = closed_form_price(&e, &sol, &p, &cond, &rule)? {
            rows.push(PriceRow {
                stream: e.describe(),
                regime,
                method: "closed_form",
                mean: v,
                std_error: None,
                truncation_bound: None,
                n_paths: None,
                horizon: None,
                conditioning: cond,
            });
        }
        let horizon = horizon_for(&a.sim, &e, &sol, &p, &cond, &rule)?;
        let est = price_mc(&e, &sol, &p, &sim_config(&a.sim, horizon), &cond, &rule)?;
        rows.push(PriceRow {
            stream: e.describe(),
            regime,
            method: "mc",
            mean: est.mean,
            std_error: Some(est.std_error),
            truncation_bound: Some(est.truncation_bound),
            n_paths: Some(est.n_paths),
            horizon: Some(est.horizon),
            conditioning: cond,
        });
    }
    let text = match a.output.format {
        Format::Json => to_json(&rows)?,
        Format::Table => {
            let mut t = String::from(
                "stream,regime,method,mean,std_error,truncation_bound,n_paths,horizon,conditioning\n",
            );
            for r in &rows {
                let _ = writeln!(
                    t,
                    "{},{},{},{},{},{},{},{},{}",
                    r.stream,
                    r.regime,
                    r.method,
                    r.mean,
                    opt(r.std_error),
                    opt(r.truncation_bound),
                    r.n_paths.map(|n| n.to_string()).unwrap_or_default(),
                    opt(r.horizon),
                    conditioning_label(&r.conditioning)
                );
            }
            t
        }
    };
    emit(&a.output.out, &text)?;
    Ok(0)
}

fn compare_table(report: &InfoValueReport) -> String {
    let mut t = String::from(
        "kind,key,closed_form,mc_mean,mc_std_error,price,information_value\n",
    );
    let base = report.price(Regime::Uninformed);
    for r in &report.regimes {
        let _ = writeln!(
            t,
            "regime,{},{},{},{},{},{}",
            r.regime,
            opt(r.closed_form),
            opt(r.mc.map(|m| m.mean)),
            opt(r.mc.map(|m| m.std_error)),
            r.price,
            opt(base.map(|b| r.price - b))
        );
    }
    for g in &report.signal_grid {
        let _ = writeln!(
            t,
            "eta0,{},{},{},{},{},{}",
            g.eta0,
            opt(g.closed_form),
            opt(g.mc.map(|m| m.mean)),
            opt(g.mc.map(|m| m.std_error)),
            g.price,
            g.signal_value
        );
    }
    t
}

fn compare(a: &CompareArgs) -> Result<i32> {
    let (p, psis) = load_config(&a.output)?;
    let e = parse_stream(&a.stream, &psis)?;
    let rule = rule()?;
    let sols = Regime::ALL
        .iter()
        .map(|&r| solve_regime(r, &p, &rule))
        .collect::<Result<Vec<_>>>()?;
    let eta_grid = if a.eta0.is_empty() {
        (-2..=2).map(|k| p.m + f64::from(k) * p.signal_sd()).collect()
    } else {
        a.eta0.clone()
    };
    let horizon = match a.sim.horizon {
        Some(h) => h,
        None => {
            let mut h = 0.0f64;
            for sol in &sols {
                h = h.max(horizon_for(&a.sim, &e, sol, &p, &Conditioning::none(), &rule)?);
            }
            h
        }
    };
    let opts = ReportOptions {
        sim: sim_config(&a.sim, horizon),
        mc_with_closed_form: !a.closed_form_only,
        eta_grid,
    };
    let report = info_value_report(&e, &p, &sols, &opts, &rule)?;
    let text = match a.output.format {
        Format::Json => to_json(&report)?,
        Format::Table => compare_table(&report),
    };
    emit(&a.output.out, &text)?;
    Ok(0)
}

fn validate(a: &ValidateArgs) -> Result<i32> {
    let scale = if a.quick {
        SuiteScale::quick()
    } else {
        SuiteScale::full()
    };
    let ids: Vec<u8> = if a.criterion.is_empty() {
        (1..=10).collect()
    } else {
        a.criterion.clone()
    };
    let results: Vec<Criterion> = ids.iter().map(|&id| run_criterion(id, &scale)).collect();
    let text = match a.format {
        Format::Json => to_json(&results)?,
        Format::Table => {
            let mut t = String::new();
            for c in &results {
                let _ = write!(t, "{c}");
            }
            let passed = results.iter().filter(|c| c.passed()).count();
            let _ = writeln!(t, "{passed}/{} criteria passed", results.len());
            t
        }
    };
    emit(&a.out, &text)?;
    Ok(if results.iter().all(Criterion::passed) { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_mini_language() {
        let none = BTreeMap::new();
        assert_eq!(parse_stream("constant:2.5", &none).unwrap().describe(), "constant:2.5");
        assert_eq!(parse_stream("exp_until_jump", &none).unwrap().describe(), "exp_until_jump");
        assert_eq!(
            parse_stream("post_jump_signal:tanh", &none).unwrap().describe(),
            "post_jump_signal:tanh"
        );
        for bad in ["constant", "constant:x", "post_jump_signal:nope", "foo", "exp_until_jump:1"] {
            assert!(matches!(parse_stream(bad, &none), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn regime_selection() {
        assert_eq!(parse_regimes("all").unwrap().0, Regime::ALL.to_vec());
        assert_eq!(parse_regimes("timing").unwrap().0, vec![Regime::Timing]);
        assert!(parse_regimes("oracle").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(["infoval", "frobnicate"]), 2);
        assert_eq!(
            main_with_args(["infoval", "price", "--stream", "bogus", "--paths", "10"]),
            2
        );
        assert_eq!(
            main_with_args(["infoval", "solve", "--config", "/nonexistent/params.toml"]),
            2
        );
    }
}
