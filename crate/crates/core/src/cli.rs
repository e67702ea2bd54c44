//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on domain or numerical errors (and failed
//! checks in `verify`), 2 on usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fekete::{minimize_in, FeketeOptions};
use crate::field::{make_field, w_quadrature, QuadratureParams};
use crate::model::{measure_to_json, solve_equilibrium, stationarity, uniform_grid, Model};
use crate::partition::{partition, Method, PartitionReport};
use crate::potential::Potential;
use crate::renorm::{lattice_min, periodic_w, PeriodicConfig};
use crate::sampler::{run_with_model, Init, SamplerConfig};
use crate::verify;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "loggas", version, about = "Numerical laboratory for one-dimensional log gases")]
struct Cli {
    /// Directory for output artifacts (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; LOGGAS_THREADS is used when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON run configuration; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize, Clone, Default)]
struct PotentialArgs {
    /// quadratic (default), quartic, double-well or polynomial.
    #[arg(long)]
    potential: Option<String>,
    /// Polynomial coefficients, lowest order first: "0,0,0.5".
    #[arg(long, allow_hyphen_values = true)]
    coeffs: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium measure and constants. Writes measure.json and
    /// density.csv (x, density).
    Equilibrium {
        #[command(flatten)]
        potential: PotentialArgs,
        /// Grid nodes for non-quadratic potentials.
        #[arg(long, default_value_t = 1200)]
        grid: usize,
    },
    /// Weighted Fekete set. Writes fekete.json and points.csv (index, x).
    Fekete {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Stop when max |∂w_n| ≤ tol·n.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[command(flatten)]
        potential: PotentialArgs,
    },
    /// Metropolis sampling. Writes samples.csv (chain, sample, x0, …),
    /// stats.json.
    Sample {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        /// Proposals per chain after burn-in.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        thinning: Option<usize>,
        /// fekete or equilibrium.
        #[arg(long, default_value = "fekete")]
        init: String,
        #[command(flatten)]
        potential: PotentialArgs,
    },
    /// Renormalized energy of a periodic configuration.
    Renorm {
        /// Use the integer lattice of period N.
        #[arg(long)]
        lattice: bool,
        #[arg(long = "N")]
        period: Option<usize>,
        /// Points in [0, N), comma separated.
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
        /// JSON file {"N": …, "points": […]}.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Field quadrature against the closed form. CSV columns: config_id, N,
    /// periodic_w, w_quadrature, eta, y_cut, rel_err.
    VerifyField {
        /// Lattice periods to include.
        #[arg(long = "N", value_delimiter = ',', default_value = "1,2,8")]
        periods: Vec<usize>,
        /// Number of seeded random configurations with N ≤ 16.
        #[arg(long, default_value_t = 20)]
        random: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-5)]
        eta: f64,
        /// Defaults to max(6, N).
        #[arg(long)]
        y_cut: Option<f64>,
    },
    /// Log-partition function and next-order quantity (JSON).
    Partition {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        /// exact-quadratic, quadrature or thermo.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        potential: PotentialArgs,
    },
    /// Partition sweep over (n, β). CSV columns: n, beta, method, log_z,
    /// next_order, error_bar, flagged.
    PartitionSweep {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        potential: PotentialArgs,
    },
    /// Runs the cross-check suite and prints a pass/fail table.
    Verify {
        /// Check ids to run (all by default).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

/// JSON run configuration. Every field is optional; flags override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub n: Option<usize>,
    pub beta: Option<f64>,
    pub potential: Option<String>,
    pub coeffs: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub chains: Option<usize>,
    pub tol: Option<f64>,
    pub method: Option<String>,
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
}

/// Parses a run configuration. Never panics.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(Error::Parse(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

/// Parses "0, 0, 0.5" or "0 0 0.5" into finite coefficients.
pub fn parse_coeffs(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if parts.is_empty() {
        return Err(Error::Parse("empty coefficient list".into()));
    }
    parts
        .iter()
        .map(|p| match p.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(Error::Parse(format!("invalid coefficient '{p}'"))),
        })
        .collect()
}

/// Resolves a potential from a name and an optional coefficient list.
pub fn potential_from_args(name: Option<&str>, coeffs: Option<&str>) -> Result<Potential> {
    let coeffs = coeffs.map(parse_coeffs).transpose()?;
    let name = name.unwrap_or(if coeffs.is_some() { "polynomial" } else { "quadratic" });
    Potential::from_name(name, coeffs.as_deref())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub timestamp: String,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

struct Context {
    out: Option<PathBuf>,
    file: RunConfig,
}

impl Context {
    fn potential(&self, args: &PotentialArgs) -> Result<Potential> {
        let file_coeffs = self.file.coeffs.as_ref().map(|c| {
            c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        });
        potential_from_args(
            args.potential.as_deref().or(self.file.potential.as_deref()),
            args.coeffs.as_deref().or(file_coeffs.as_deref()),
        )
    }

    fn out_dir(&self) -> Result<Option<&Path>> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Ok(Some(dir.as_path()))
            }
            None => Ok(None),
        }
    }

    fn manifest(&self, command: &str, parameters: Value, seed: Option<u64>) -> Result<()> {
        let Some(dir) = self.out_dir()? else { return Ok(()) };
        let parameters = match parameters {
            Value::Object(m) => m.into_iter().collect(),
            other => BTreeMap::from([("value".to_string(), other)]),
        };
        let manifest = RunManifest {
            command: command.to_string(),
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        if let Some(dir) = self.out_dir()? {
            fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
        }
        Ok(())
    }

    fn write_csv(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        if let Some(dir) = self.out_dir()? {
            let mut w = csv::Writer::from_path(dir.join(name))?;
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn num(x: f64) -> String {
    // shortest representation that round-trips
    format!("{x}")
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn require<T>(value: Option<T>, flag: &str) -> std::result::Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing required flag --{flag}")))
}

fn parse_method(text: Option<&str>) -> Result<Option<Method>> {
    text.map(str::parse).transpose()
}

fn sampler_config(
    ctx: &Context,
    n: usize,
    beta: f64,
    potential: Potential,
    steps: Option<usize>,
    chains: Option<usize>,
    seed: Option<u64>,
) -> SamplerConfig {
    let mut cfg = SamplerConfig::new(n, beta, potential);
    if let Some(s) = steps.or(ctx.file.steps) {
        cfg.steps = s;
        cfg.burn_in = (s / 5).max(1);
    }
    if let Some(c) = chains.or(ctx.file.chains) {
        cfg.chains = c;
    }
    cfg.seed = seed.or(ctx.file.seed).unwrap_or(0);
    if let Some(b) = ctx.file.burn_in {
        cfg.burn_in = b;
    }
    if let Some(t) = ctx.file.thinning {
        cfg.thinning = t;
    }
    cfg
}

fn run_command(ctx: &Context, command: Command, out: &mut (dyn Write + Send)) -> std::result::Result<bool, Failure> {
    let io = |e: std::io::Error| Failure::Run(Error::Io(e));
    match command {
        Command::Equilibrium { potential, grid } => {
            let v = ctx.potential(&potential)?;
            let model = if v.quadratic_center().is_some() {
                Model::new(v.clone())?
            } else {
                let half = (2.0 * v.growth_check_radius).max(4.0);
                let mu = solve_equilibrium(&v, &uniform_grid(-half, half, grid.max(16)), 1e-10, 5000)?;
                let constants = crate::model::model_constants(&mu, &v);
                Model { potential: v.clone(), measure: mu, constants }
            };
            let st = stationarity(&model.measure, &v, model.constants.c);
            let summary = serde_json::json!({
                "potential": v.label,
                "support": model.measure.support(),
                "constants": model.constants,
                "stationarity": { "on_support": st.on_support, "off_support_min": st.off_support_min },
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&summary).map_err(Error::from)?).map_err(io)?;
            if let Some(dir) = ctx.out_dir()? {
                fs::write(dir.join("measure.json"), measure_to_json(&model.measure, Some(model.constants))? + "\n")
                    .map_err(io)?;
                let [a, b] = model.measure.hull();
                let rows: Vec<Vec<String>> = uniform_grid(a - 0.5, b + 0.5, 401)
                    .iter()
                    .map(|&x| vec![num(x), num(model.measure.density_at(x))])
                    .collect();
                ctx.write_csv("density.csv", &header(&["x", "density"]), &rows)?;
            }
            ctx.manifest(
                "equilibrium",
                serde_json::json!({ "potential": potential, "grid": grid }),
                None,
            )?;
            Ok(true)
        }
        Command::Fekete { n, seed, tol, max_iter, potential } => {
            let n = require(n.or(ctx.file.n), "n")?;
            let seed = seed.or(ctx.file.seed).unwrap_or(0);
            let tol = tol.or(ctx.file.tol).unwrap_or(1e-10);
            let v = ctx.potential(&potential)?;
            let model = Model::new(v)?;
            let opts = FeketeOptions { seed, tol, max_iter, ..FeketeOptions::default() };
            let r = minimize_in(&model, n, &opts)?;
            let json = serde_json::to_string_pretty(&r).map_err(Error::from)?;
            writeln!(out, "{json}").map_err(io)?;
            ctx.write_json("fekete.json", &r)?;
            let rows: Vec<Vec<String>> = r
                .config
                .points()
                .iter()
                .enumerate()
                .map(|(i, &x)| vec![i.to_string(), num(x)])
                .collect();
            ctx.write_csv("points.csv", &header(&["index", "x"]), &rows)?;
            ctx.manifest(
                "fekete",
                serde_json::json!({ "n": n, "seed": seed, "tol": tol, "max_iter": max_iter, "potential": potential }),
                Some(seed),
            )?;
            Ok(true)
        }
        Command::Sample { n, beta, steps, chains, seed, burn_in, thinning, init, potential } => {
            let n = require(n.or(ctx.file.n), "n")?;
            let beta = require(beta.or(ctx.file.beta), "beta")?;
            let v = ctx.potential(&potential)?;
            let model = Model::new(v.clone())?;
            let mut cfg = sampler_config(ctx, n, beta, v, steps, chains, seed);
            if let Some(b) = burn_in {
                cfg.burn_in = b;
            }
            if let Some(t) = thinning {
                cfg.thinning = t;
            }
            cfg.init = match init.as_str() {
                "fekete" => Init::Fekete,
                "equilibrium" => Init::Equilibrium,
                other => return Err(Failure::Usage(format!("unknown --init '{other}'"))),
            };
            cfg.record_samples = ctx.out.is_some();
            let stats = run_with_model(&cfg, &model)?;
            let doc = serde_json::json!({ "config": cfg, "statistics": stats });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?).map_err(io)?;
            ctx.write_json("stats.json", &doc)?;
            let mut head = header(&["chain", "sample"]);
            head.extend((0..n).map(|i| format!("x{i}")));
            let rows: Vec<Vec<String>> = stats
                .samples
                .iter()
                .enumerate()
                .flat_map(|(c, chain)| {
                    chain.iter().enumerate().map(move |(s, x)| {
                        let mut r = vec![c.to_string(), s.to_string()];
                        r.extend(x.iter().map(|&v| num(v)));
                        r
                    })
                })
                .collect();
            ctx.write_csv("samples.csv", &head, &rows)?;
            ctx.manifest("sample", serde_json::to_value(&cfg).map_err(Error::from)?, Some(cfg.seed))?;
            Ok(true)
        }
        Command::Renorm { lattice, period, points, file } => {
            let config = if lattice {
                PeriodicConfig::lattice(require(period.or(ctx.file.n), "N")?)?
            } else if let Some(path) = &file {
                PeriodicConfig::from_json(&fs::read_to_string(path).map_err(io)?)?
            } else if let Some(p) = &points {
                let pts = parse_coeffs(p)?;
                PeriodicConfig::from_unsorted(period.unwrap_or(pts.len()), &pts)?
            } else {
                return Err(Failure::Usage("renorm needs --lattice, --points or --file".into()));
            };
            let w = periodic_w(&config)?;
            if lattice {
                writeln!(out, "{w:.12}").map_err(io)?;
            } else {
                let doc = serde_json::json!({
                    "N": config.period(),
                    "W": w,
                    "lattice_min": lattice_min(1.0)?,
                    "excess": w - lattice_min(1.0)?,
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?).map_err(io)?;
            }
            ctx.write_json("renorm.json", &serde_json::json!({ "N": config.period(), "points": config.points(), "W": w }))?;
            ctx.manifest(
                "renorm",
                serde_json::json!({ "lattice": lattice, "N": config.period(), "points": config.points() }),
                None,
            )?;
            Ok(true)
        }
        Command::VerifyField { periods, random, seed, eta, y_cut } => {
            let seed = seed.or(ctx.file.seed).unwrap_or(20);
            let mut configs = Vec::new();
            for &p in &periods {
                configs.push(PeriodicConfig::lattice(p)?);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..random {
                let n = rand::Rng::random_range(&mut rng, 1..=16);
                configs.push(verify::random_periodic(&mut rng, n, 0.05));
            }
            let mut rows = Vec::new();
            for (id, c) in configs.iter().enumerate() {
                let n = c.period() as f64;
                let y_cut = y_cut.unwrap_or(n.max(6.0));
                let params = QuadratureParams { eta, y_cut, ..QuadratureParams::default() };
                let exact = periodic_w(c)?;
                let q = w_quadrature(&make_field(c), params)?;
                rows.push(vec![
                    id.to_string(),
                    c.period().to_string(),
                    num(exact),
                    num(q),
                    num(eta),
                    num(y_cut),
                    num(((q - exact) / exact).abs()),
                ]);
            }
            let head = header(&["config_id", "N", "periodic_w", "w_quadrature", "eta", "y_cut", "rel_err"]);
            write!(out, "{}", csv_string(&head, &rows)?).map_err(io)?;
            ctx.write_csv("verify_field.csv", &head, &rows)?;
            ctx.manifest(
                "verify-field",
                serde_json::json!({ "N": periods, "random": random, "seed": seed, "eta": eta, "y_cut": y_cut }),
                Some(seed),
            )?;
            Ok(true)
        }
        Command::Partition { n, beta, method, steps, chains, seed, potential } => {
            let n = require(n.or(ctx.file.n), "n")?;
            let beta = require(beta.or(ctx.file.beta), "beta")?;
            let method = parse_method(method.as_deref().or(ctx.file.method.as_deref()))?;
            let v = ctx.potential(&potential)?;
            let model = Model::new(v.clone())?;
            let cfg = sampler_config(ctx, n, beta, v, steps, chains, seed);
            let report = partition(&model, n, beta, method, &cfg)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report).map_err(Error::from)?).map_err(io)?;
            ctx.write_json("partition.json", &report)?;
            ctx.manifest(
                "partition",
                serde_json::json!({ "n": n, "beta": beta, "method": method, "potential": potential, "sampler": cfg }),
                Some(cfg.seed),
            )?;
            Ok(true)
        }
        Command::PartitionSweep { n, beta, method, steps, chains, seed, potential } => {
            let method = parse_method(method.as_deref().or(ctx.file.method.as_deref()))?;
            let v = ctx.potential(&potential)?;
            let model = Model::new(v.clone())?;
            let mut rows = Vec::new();
            let mut reports: Vec<PartitionReport> = Vec::new();
            for &ni in &n {
                for &b in &beta {
                    let cfg = sampler_config(ctx, ni, b, v.clone(), steps, chains, seed);
                    let r = partition(&model, ni, b, method, &cfg)?;
                    rows.push(vec![
                        ni.to_string(),
                        num(b),
                        serde_json::to_value(r.method)
                            .ok()
                            .and_then(|m| m.as_str().map(String::from))
                            .unwrap_or_default(),
                        num(r.log_z),
                        num(r.next_order),
                        num(r.error_bar),
                        r.flagged.to_string(),
                    ]);
                    reports.push(r);
                }
            }
            let head = header(&["n", "beta", "method", "log_z", "next_order", "error_bar", "flagged"]);
            write!(out, "{}", csv_string(&head, &rows)?).map_err(io)?;
            ctx.write_csv("partition_sweep.csv", &head, &rows)?;
            ctx.manifest(
                "partition-sweep",
                serde_json::json!({ "n": n, "beta": beta, "method": method, "potential": potential }),
                seed,
            )?;
            Ok(true)
        }
        Command::Verify { only } => {
            let mut all = true;
            let mut outcomes = Vec::new();
            for (k, check) in verify::CHECKS.iter().enumerate() {
                if !only.is_empty() && !only.contains(&(k + 1)) {
                    continue;
                }
                let o = check();
                writeln!(out, "{o}").map_err(io)?;
                all &= o.passed;
                outcomes.push(o);
            }
            ctx.write_json("verify.json", &outcomes)?;
            ctx.manifest("verify", serde_json::json!({ "only": only }), None)?;
            Ok(all)
        }
    }
}

fn thread_count(flag: Option<usize>) -> std::result::Result<Option<usize>, Failure> {
    if let Some(t) = flag {
        return Ok(Some(t));
    }
    match std::env::var("LOGGAS_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("LOGGAS_THREADS must be a positive integer, got '{s}'"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> std::result::Result<bool, Failure> {
    let file = match &cli.config {
        Some(path) => parse_run_config(&fs::read_to_string(path).map_err(Error::from)?)?,
        None => RunConfig { schema_version: SCHEMA_VERSION, ..RunConfig::default() },
    };
    let ctx = Context { out: cli.out, file };
    let threads = thread_count(cli.threads)?;
    let mut buf: Vec<u8> = Vec::new();
    let result = match threads {
        Some(0) => return Err(Failure::Usage("--threads must be at least 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            pool.install(|| run_command(&ctx, cli.command, &mut buf))
        }
        None => run_command(&ctx, cli.command, &mut buf),
    };
    out.write_all(&buf).map_err(|e| Failure::Run(Error::Io(e)))?;
    out.flush().map_err(|e| Failure::Run(Error::Io(e)))?;
    result
}

/// Parses `argv` without running anything; the error is clap's rendered
/// message.
pub fn parse_argv<I, T>(argv: I) -> std::result::Result<(), String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv).map(|_| ()).map_err(|e| e.to_string())
}

/// Parses `argv` (including the program name), runs the command writing
/// its main output to `out`, and returns the process exit code.
pub fn dispatch_to<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    dispatch_to(argv, &mut lock)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_lists() {
        assert_eq!(parse_coeffs("0, 0,0.5").unwrap(), vec![0.0, 0.0, 0.5]);
        assert_eq!(parse_coeffs("1 -2\t3").unwrap(), vec![1.0, -2.0, 3.0]);
        assert!(parse_coeffs("").is_err());
        assert!(parse_coeffs("1,x").is_err());
        assert!(parse_coeffs("1,inf").is_err());
    }

    #[test]
    fn run_config_schema() {
        let c = parse_run_config(r#"{"schema_version": 1, "n": 8, "beta": 2.0}"#).unwrap();
        assert_eq!(c.n, Some(8));
        assert!(parse_run_config(r#"{"schema_version": 2}"#).is_err());
        assert!(parse_run_config(r#"{"schema_version": 1, "bogus": 1}"#).is_err());
        assert!(parse_run_config("[").is_err());
    }

    #[test]
    fn potential_resolution() {
        assert!(potential_from_args(None, None).unwrap().is_canonical_quadratic());
        assert!(potential_from_args(None, Some("0,0,0.5")).unwrap().is_canonical_quadratic());
        assert!(potential_from_args(Some("quartic"), Some("1")).is_err());
        assert!(potential_from_args(Some("cubic"), None).is_err());
    }

    #[test]
    fn exit_codes() {
        let mut sink = Vec::new();
        assert_eq!(dispatch_to(["loggas", "renorm", "--lattice", "--N", "8"], &mut sink), 0);
        assert_eq!(dispatch_to(["loggas", "bogus"], &mut sink), 2);
        assert_eq!(dispatch_to(["loggas", "fekete", "--n", "4", "--wat"], &mut sink), 2);
        assert_eq!(dispatch_to(["loggas", "renorm", "--lattice", "--N", "0"], &mut sink), 1);
        assert_eq!(dispatch_to(["loggas", "fekete"], &mut sink), 2);
    }
}
