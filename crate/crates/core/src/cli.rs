//! Command-line front end.
//!
//! Settings come from three places, later ones winning: built-in per-command
//! defaults, a flat `key=value` file given with `--config`, and the flags.
//! The seed falls back to `SSDE_SEED` when neither sets it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::lamperti::{cramer_condition_check, simulate_xi, LampertiConfig};
use crate::mc::{self, McConfig, McSummary, SelfSimSetup, SolutionKind};
use crate::params::{classify_regime, Parameters};
use crate::sde::{self, SamplePath, SchemeConfig};
use crate::specfun::laplace_exponent_xi;
use crate::stable::{default_cutoff, RngStream};

#[derive(Debug, Parser)]
#[command(name = "ssde", version, about = "Self-similar stable-driven jump SDE toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Regime, thresholds and derived constants.
    Classify(Flags),
    /// One sample path of Z (absorbed or class-S) or of V.
    Simulate(Flags),
    /// One sample path of the Lamperti Lévy process.
    Xi(Flags),
    /// Censored extinction probabilities over a sweep of theta.
    Extinction(Flags),
    /// Empirical log-Laplace transforms of xi_1 and L_1 against closed forms.
    LaplaceCheck(Flags),
    /// KS test of the scaling property, with a negative control.
    Selfsim(Flags),
    /// Mean of V_t against V_0 + c t.
    DriftCheck(Flags),
    /// KS test of the Lamperti construction against the direct scheme.
    LampertiCheck(Flags),
    /// Tidy CSVs for plotting, written into the --out directory.
    Report(Flags),
}

#[derive(Debug, Clone, Default, Args)]
struct Flags {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Starting value.
    #[arg(long)]
    z0: Option<f64>,
    /// Time horizon, or the evaluation time of the two-sample tests.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    grid_step: Option<f64>,
    /// Jump cutoff; `inf` switches the jumps off.
    #[arg(long)]
    cutoff: Option<f64>,
    /// Gaussian replacement of the discarded small jumps.
    #[arg(long)]
    refine: Option<bool>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Keep every k-th path point (jump times are always kept).
    #[arg(long)]
    sample_every: Option<usize>,
    /// `absorbed`, `extended` or `v` (simulate only).
    #[arg(long, value_enum)]
    solution: Option<Solution>,
    /// Comma-separated theta values for the extinction sweep.
    #[arg(long)]
    thetas: Option<String>,
    /// Comma-separated lambda values for laplace-check.
    #[arg(long)]
    lambdas: Option<String>,
    /// Scale factor of the self-similarity test.
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solution {
    Absorbed,
    Extended,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Classify,
    Simulate,
    Xi,
    Extinction,
    LaplaceCheck,
    Selfsim,
    DriftCheck,
    LampertiCheck,
    Report,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandName,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub z0: f64,
    pub scheme: SchemeConfig<f64>,
    pub mc: McConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub sample_every: usize,
    pub solution: Solution,
    pub thetas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub scale: f64,
}

const CONFIG_KEYS: &[&str] = &[
    "alpha", "beta", "theta", "z0", "horizon", "grid_step", "cutoff", "refine", "n", "seed", "workers", "out",
    "format", "sample_every", "solution", "thetas", "lambdas", "scale",
];

/// Reads a flat `key=value` file; `#` starts a comment, dashes in keys are
/// read as underscores.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("config line {}: expected key=value", lineno + 1)))?;
        let key = k.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::Validation(format!("config line {}: unknown key '{}'", lineno + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Validation(format!("{key}: cannot parse '{raw}'")))
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',').map(|s| parse_value(key, s.trim())).collect()
}

/// Flag value, else file value, else `None`.
fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key).map(|raw| parse_value(key, raw)).transpose(),
    }
}

fn pick_enum<T: ValueEnum>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file
            .get(key)
            .map(|raw| T::from_str(raw, true).map_err(|_| Error::Validation(format!("{key}: cannot parse '{raw}'"))))
            .transpose(),
    }
}

fn resolve(command: CommandName, flags: Flags) -> Result<RunConfig> {
    let file = match &flags.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let alpha = pick(flags.alpha, &file, "alpha")?.unwrap_or(1.5);
    let beta = pick(flags.beta, &file, "beta")?.unwrap_or(0.5);
    let theta = pick(flags.theta, &file, "theta")?.unwrap_or(0.5);
    // fail early with the parameter constraint
    let params = Parameters::derive(alpha, beta, theta)?;

    use CommandName::*;
    let (horizon, n, cutoff, grid, refine): (f64, usize, f64, f64, bool) = match command {
        Extinction => (50.0, 10_000, 1e-2, 1e-3, true),
        LaplaceCheck => (1.0, 100_000, 1e-2, 1e-3, true),
        Selfsim | LampertiCheck => (0.5, 10_000, default_cutoff(alpha), 1e-3, false),
        DriftCheck => (1.0, 10_000, default_cutoff(alpha), 1e-3, false),
        Report => (1.0, 2_000, 1e-2, 1e-3, true),
        Classify | Simulate | Xi => (1.0, 1, default_cutoff(alpha), 1e-3, false),
    };
    let horizon = pick(flags.horizon, &file, "horizon")?.unwrap_or(horizon);
    let grid_step = pick(flags.grid_step, &file, "grid_step")?.unwrap_or(grid.min(horizon));
    let scheme = SchemeConfig {
        grid_step,
        jump_cutoff: pick(flags.cutoff, &file, "cutoff")?.unwrap_or(cutoff),
        gaussian_refinement: pick(flags.refine, &file, "refine")?.unwrap_or(refine),
        horizon,
    };
    if command != Classify {
        scheme.validate()?;
    }

    let seed = match pick(flags.seed, &file, "seed")? {
        Some(s) => s,
        None => match std::env::var("SSDE_SEED") {
            Ok(raw) => parse_value("SSDE_SEED", raw.trim())?,
            Err(_) => 0,
        },
    };
    let mut mc = McConfig::new(pick(flags.n, &file, "n")?.unwrap_or(n), seed);
    if let Some(w) = pick(flags.workers, &file, "workers")? {
        if w == 0 {
            return Err(Error::Validation("workers must be >= 1".into()));
        }
        mc = mc.with_workers(w);
    }
    if mc.n == 0 {
        return Err(Error::Validation("n must be >= 1".into()));
    }

    let z0 = pick(flags.z0, &file, "z0")?.unwrap_or(if command == Extinction { 0.5 } else { 1.0 });
    if !(z0 > 0.0) || !z0.is_finite() {
        return Err(Error::Validation("z0 must be finite and > 0".into()));
    }
    let sample_every = pick(flags.sample_every, &file, "sample_every")?.unwrap_or(1);
    if sample_every == 0 {
        return Err(Error::Validation("sample_every must be >= 1".into()));
    }
    let thetas = match flags.thetas.or_else(|| file.get("thetas").cloned()) {
        Some(raw) => parse_list("thetas", &raw)?,
        None => vec![0.0, 0.3, 0.6, 0.9, 1.2],
    };
    let lambdas = match flags.lambdas.or_else(|| file.get("lambdas").cloned()) {
        Some(raw) => parse_list("lambdas", &raw)?,
        None => vec![0.25, 0.5],
    };
    for &t in &thetas {
        params.with_theta(t)?;
    }
    let scale = pick(flags.scale, &file, "scale")?.unwrap_or(2.0);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Validation("scale must be finite and > 0".into()));
    }
    let default_format = match command {
        Simulate | Xi | Extinction | Report => Format::Csv,
        _ => Format::Json,
    };
    Ok(RunConfig {
        command,
        alpha,
        beta,
        theta,
        z0,
        scheme,
        mc,
        out: flags.out.or_else(|| file.get("out").map(PathBuf::from)),
        format: pick_enum(flags.format, &file, "format")?.unwrap_or(default_format),
        sample_every,
        solution: pick_enum(flags.solution, &file, "solution")?.unwrap_or(Solution::Absorbed),
        thetas,
        lambdas,
        scale,
    })
}

/// Parses `argv` (including the program name) into a [`RunConfig`].
pub fn parse_args<I, S>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let text = e.to_string();
        Error::Validation(text.strip_prefix("error: ").unwrap_or(&text).trim_end().to_string())
    })?;
    let (name, flags) = match cli.command {
        Command::Classify(f) => (CommandName::Classify, f),
        Command::Simulate(f) => (CommandName::Simulate, f),
        Command::Xi(f) => (CommandName::Xi, f),
        Command::Extinction(f) => (CommandName::Extinction, f),
        Command::LaplaceCheck(f) => (CommandName::LaplaceCheck, f),
        Command::Selfsim(f) => (CommandName::Selfsim, f),
        Command::DriftCheck(f) => (CommandName::DriftCheck, f),
        Command::LampertiCheck(f) => (CommandName::LampertiCheck, f),
        Command::Report(f) => (CommandName::Report, f),
    };
    resolve(name, flags)
}

/// Float formatting for CSV: 17 significant digits, round-trip safe.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn json_text<V: Serialize>(value: &V) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn params_of(cfg: &RunConfig) -> Result<Parameters<f64>> {
    Parameters::derive(cfg.alpha, cfg.beta, cfg.theta)
}

fn classify_json(params: &Parameters<f64>) -> serde_json::Value {
    let regime = classify_regime(params);
    json!({
        "alpha": params.alpha,
        "beta": params.beta,
        "theta": params.theta,
        "eta": params.eta,
        "gamma": params.gamma_index,
        "c_alpha": params.c_alpha,
        "threshold_low": params.threshold_low,
        "threshold_high": params.threshold_high,
        "regime": regime.tag.as_str(),
        "boundary_flags": regime.boundary_flags,
        "cramer_condition": cramer_condition_check(params),
    })
}

fn path_csv(path: &SamplePath<f64>) -> String {
    let rows: Vec<Vec<String>> =
        path.times.iter().zip(&path.values).map(|(&t, &v)| vec![fmt_f64(t), fmt_f64(v)]).collect();
    csv_table(&["t", "value"], &rows)
}

fn path_json(path: &SamplePath<f64>) -> Result<String> {
    json_text(&json!({ "t": path.times, "value": path.values, "absorbed_at": path.absorbed_at }))
}

fn summary_row(s: &McSummary) -> Vec<String> {
    vec![fmt_f64(s.mean), fmt_f64(s.std_error), fmt_f64(s.ci95_low), fmt_f64(s.ci95_high)]
}

fn simulate_path(cfg: &RunConfig, params: &Parameters<f64>) -> Result<SamplePath<f64>> {
    let mut rng = RngStream::new(cfg.mc.seed, 0);
    let path = match cfg.solution {
        Solution::Absorbed => sde::simulate_z_absorbed(params, cfg.z0, &cfg.scheme, &mut rng)?,
        Solution::Extended => sde::simulate_z_extended(params, cfg.z0, &cfg.scheme, &mut rng)?,
        Solution::V => sde::simulate_v(params, cfg.z0, &cfg.scheme, &mut rng)?,
    };
    Ok(path.downsample(cfg.sample_every))
}

fn extinction_rows(cfg: &RunConfig, params: &Parameters<f64>) -> Result<Vec<(f64, McSummary)>> {
    cfg.thetas
        .iter()
        .map(|&theta| {
            let s = mc::estimate_extinction_probability(&params.with_theta(theta)?, cfg.z0, &cfg.scheme, &cfg.mc)?;
            eprintln!("extinction theta={theta} p_hat={:.4}", s.mean);
            Ok((theta, s))
        })
        .collect()
}

#[derive(Serialize)]
struct LaplaceRow {
    target: &'static str,
    lambda: f64,
    estimate: f64,
    std_error: f64,
    exact: f64,
    z_score: f64,
}

fn laplace_rows(cfg: &RunConfig, params: &Parameters<f64>) -> Result<Vec<LaplaceRow>> {
    let xi = mc::laplace_check_xi(params, &cfg.lambdas, cfg.scheme.jump_cutoff, cfg.scheme.gaussian_refinement, &cfg.mc)?;
    eprintln!("laplace-check xi done");
    let drv = mc::laplace_check_driver(params.alpha, &cfg.lambdas, &cfg.mc)?;
    eprintln!("laplace-check driver done");
    let row = |target, e: mc::LaplaceEstimate| LaplaceRow {
        target,
        lambda: e.lambda,
        estimate: e.estimate,
        std_error: e.std_error,
        exact: e.exact,
        z_score: e.z_score(),
    };
    Ok(xi.into_iter().map(|e| row("xi", e)).chain(drv.into_iter().map(|e| row("driver", e))).collect())
}

/// Output of one command, before writing.
enum Output {
    Text(String),
    /// File name → contents, written into the `--out` directory.
    Files(Vec<(String, String)>),
}

fn execute(cfg: &RunConfig) -> Result<Output> {
    let params = params_of(cfg)?;
    let json_or_csv = |value: serde_json::Value, header: &[&str], row: Vec<String>| -> Result<Output> {
        Ok(Output::Text(match cfg.format {
            Format::Json => json_text(&value)?,
            Format::Csv => csv_table(header, &[row]),
        }))
    };
    match cfg.command {
        CommandName::Classify => {
            let v = classify_json(&params);
            let row = vec![
                fmt_f64(params.alpha),
                fmt_f64(params.beta),
                fmt_f64(params.theta),
                fmt_f64(params.eta),
                fmt_f64(params.gamma_index),
                fmt_f64(params.threshold_low),
                fmt_f64(params.threshold_high),
                v["regime"].as_str().unwrap_or_default().to_string(),
            ];
            json_or_csv(v, &["alpha", "beta", "theta", "eta", "gamma", "threshold_low", "threshold_high", "regime"], row)
        }
        CommandName::Simulate => {
            let path = simulate_path(cfg, &params)?;
            Ok(Output::Text(match cfg.format {
                Format::Csv => path_csv(&path),
                Format::Json => path_json(&path)?,
            }))
        }
        CommandName::Xi => {
            let mut rng = RngStream::new(cfg.mc.seed, 0);
            let xi = simulate_xi(&params, cfg.scheme.horizon, cfg.scheme.jump_cutoff, &mut rng)?;
            let path = SamplePath { times: xi.times, values: xi.values, absorbed_at: None }.downsample(cfg.sample_every);
            Ok(Output::Text(match cfg.format {
                Format::Csv => path_csv(&path),
                Format::Json => path_json(&path)?,
            }))
        }
        CommandName::Extinction => {
            let rows = extinction_rows(cfg, &params)?;
            Ok(Output::Text(match cfg.format {
                Format::Csv => {
                    let rows: Vec<Vec<String>> = rows
                        .iter()
                        .map(|(theta, s)| std::iter::once(fmt_f64(*theta)).chain(summary_row(s)).collect())
                        .collect();
                    csv_table(&["theta", "p_hat", "se", "ci_low", "ci_high"], &rows)
                }
                Format::Json => {
                    let v: Vec<_> = rows.iter().map(|(theta, s)| json!({ "theta": theta, "summary": s })).collect();
                    json_text(&json!({ "z0": cfg.z0, "horizon": cfg.scheme.horizon, "rows": v }))?
                }
            }))
        }
        CommandName::LaplaceCheck => {
            let rows = laplace_rows(cfg, &params)?;
            Ok(Output::Text(match cfg.format {
                Format::Json => json_text(&json!({ "rows": rows }))?,
                Format::Csv => {
                    let body: Vec<Vec<String>> = rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.target.to_string(),
                                fmt_f64(r.lambda),
                                fmt_f64(r.estimate),
                                fmt_f64(r.std_error),
                                fmt_f64(r.exact),
                                fmt_f64(r.z_score),
                            ]
                        })
                        .collect();
                    csv_table(&["target", "lambda", "estimate", "std_error", "exact", "z_score"], &body)
                }
            }))
        }
        CommandName::Selfsim => {
            let kinds: &[SolutionKind] = if params.theta > params.threshold_low {
                &[SolutionKind::Absorbed, SolutionKind::Extended]
            } else {
                &[SolutionKind::Absorbed]
            };
            let mut reports = Vec::new();
            for &kind in kinds {
                let setup = SelfSimSetup { x0: cfg.z0, c: cfg.scale, t: cfg.scheme.horizon, kind, time_exponent: None };
                reports.push((format!("{kind:?}").to_lowercase(), mc::self_similarity_test(&params, &setup, &cfg.scheme, &cfg.mc)?));
                eprintln!("selfsim {kind:?} done");
            }
            let wrong = 1.0 / (params.gamma_index + 0.5);
            let setup = SelfSimSetup {
                x0: cfg.z0,
                c: cfg.scale,
                t: cfg.scheme.horizon,
                kind: SolutionKind::Absorbed,
                time_exponent: Some(wrong),
            };
            reports.push(("negative_control".to_string(), mc::self_similarity_test(&params, &setup, &cfg.scheme, &cfg.mc)?));
            eprintln!("selfsim negative control done");
            ks_output(cfg, &reports)
        }
        CommandName::DriftCheck => {
            let s = mc::drift_identity_check(&params, cfg.z0, cfg.scheme.horizon, &cfg.scheme, &cfg.mc)?;
            let predicted = cfg.z0 + params.v_drift() * cfg.scheme.horizon;
            let v = json!({ "v0": cfg.z0, "t": cfg.scheme.horizon, "predicted": predicted, "summary": s });
            let row = std::iter::once(fmt_f64(predicted)).chain(summary_row(&s)).collect();
            json_or_csv(v, &["predicted", "mean_diff", "se", "ci_low", "ci_high"], row)
        }
        CommandName::LampertiCheck => {
            let lcfg = LampertiConfig { cutoff: cfg.scheme.jump_cutoff, ..LampertiConfig::default_for(params.alpha) };
            let t = cfg.scheme.horizon;
            let main = mc::lamperti_vs_sde_test(&params, cfg.z0, t, &lcfg, &cfg.scheme, &cfg.mc)?;
            eprintln!("lamperti-check done");
            let shifted = params.with_theta(params.theta + 0.5)?;
            let control = mc::lamperti_vs_sde_test_with(&shifted, &params, cfg.z0, t, &lcfg, &cfg.scheme, &cfg.mc)?;
            eprintln!("lamperti-check negative control done");
            ks_output(cfg, &[("lamperti".to_string(), main), ("negative_control".to_string(), control)])
        }
        CommandName::Report => report(cfg, &params),
    }
}

fn ks_output(cfg: &RunConfig, reports: &[(String, mc::KsReport)]) -> Result<Output> {
    Ok(Output::Text(match cfg.format {
        Format::Json => {
            let tests: Vec<_> = reports.iter().map(|(name, r)| json!({ "name": name, "report": r })).collect();
            json_text(&json!({ "t": cfg.scheme.horizon, "x0": cfg.z0, "tests": tests }))?
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|(name, r)| {
                    vec![
                        name.clone(),
                        fmt_f64(r.statistic),
                        r.n1.to_string(),
                        r.n2.to_string(),
                        fmt_f64(r.critical_value_1pct),
                        r.pass.to_string(),
                    ]
                })
                .collect();
            csv_table(&["name", "statistic", "n1", "n2", "critical_value_1pct", "pass"], &rows)
        }
    }))
}

/// Plot-ready tables: regimes over theta, psi over lambda, extinction sweep,
/// and one path.
fn report(cfg: &RunConfig, params: &Parameters<f64>) -> Result<Output> {
    let mut files = Vec::new();

    let mut regimes = String::from("theta,regime,cramer_condition\n");
    for i in 0..=200 {
        let theta = 2.0 * params.threshold_high * i as f64 / 200.0;
        let p = params.with_theta(theta)?;
        let _ = writeln!(regimes, "{},{},{}", fmt_f64(theta), classify_regime(&p).tag.as_str(), cramer_condition_check(&p));
    }
    files.push(("regimes.csv".to_string(), regimes));

    let mut psi = String::from("lambda,psi\n");
    for i in 0..200 {
        let lambda = i as f64 / 200.0;
        let _ = writeln!(psi, "{},{}", fmt_f64(lambda), fmt_f64(laplace_exponent_xi(lambda, params)?));
    }
    files.push(("psi.csv".to_string(), psi));

    let ext_cfg = RunConfig { scheme: cfg.scheme.with_horizon(cfg.scheme.horizon.max(10.0)), z0: cfg.z0.min(0.5), ..cfg.clone() };
    let mut ext = String::from("theta,p_hat,se,ci_low,ci_high\n");
    for (theta, s) in extinction_rows(&ext_cfg, params)? {
        let _ = writeln!(ext, "{},{}", fmt_f64(theta), summary_row(&s).join(","));
    }
    files.push(("extinction.csv".to_string(), ext));

    let path_cfg = RunConfig { solution: Solution::Absorbed, ..cfg.clone() };
    files.push(("path.csv".to_string(), path_csv(&simulate_path(&path_cfg, params)?)));
    Ok(Output::Files(files))
}

fn write_output(cfg: &RunConfig, output: Output) -> Result<()> {
    match output {
        Output::Text(text) => match &cfg.out {
            Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                Ok(stdout.flush()?)
            }
        },
        Output::Files(files) => {
            let dir = cfg.out.as_ref().ok_or_else(|| Error::Validation("report needs --out <directory>".into()))?;
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            for (name, text) in files {
                let path = dir.join(name);
                fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            Ok(())
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let output = execute(cfg)?;
    write_output(cfg, output)
}

/// Exit status for an error: 2 for regime errors, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Regime(_) => 2,
        _ => 1,
    }
}

/// Parses, runs, reports errors on stderr and returns the exit status.
pub fn main_with_args<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<S> = argv.into_iter().collect();
    // help and version are not errors
    if let Err(e) = Cli::try_parse_from(argv.clone()) {
        if !e.use_stderr() {
            let _ = e.print();
            return 0;
        }
    }
    match parse_args(argv).and_then(|cfg| run(&cfg)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
