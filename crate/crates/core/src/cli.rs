//! Command-line front end.
//!
//! Every subcommand resolves its configuration from an optional JSON file
//! (`--config`), fills defaults, applies flag overrides, and echoes the
//! result: to `<out>.resolved.json` when `--out` is given, otherwise to
//! stderr. `--out` is a path prefix; primary outputs go to stdout without it.
//!
//! Exit codes: 0 success, 1 usage error (nothing written), 2 numerical or
//! model error (the sidecar records `"status": "error"`).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::basis::{BasisSpec, Scaling, Sieve};
use crate::contiguity::{self, ContiguityConfig, RateEntry};
use crate::cox::{self, CoxPopulation, CoxSieve, CoxSieveProfile, NewtonOpts};
use crate::error::Error;
use crate::leastfav::DEFAULT_H_GRID;
use crate::model::ModelSpec;
use crate::montecarlo::{self, ExperimentConfig, FitBasis, KRule};
use crate::plm::{self, PlmSieveModel};

#[derive(Debug, Parser)]
#[command(name = "contigsieve", version, about = "Sieve maximum likelihood for the partially linear and Cox models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Plm,
    Cox,
}

impl ModelName {
    fn as_str(self) -> &'static str {
        match self {
            ModelName::Plm => "plm",
            ModelName::Cox => "cox",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Input CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output path prefix.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a PLM dataset (CSV `w,y,z`).
    PlmSim(Flags),
    /// Simulate a Cox dataset (CSV `t,delta,w`).
    CoxSim(Flags),
    /// Fit θ: PLM sieve profile MLE or Cox partial likelihood.
    Fit(Flags),
    /// Log-likelihood ratio, LAN, Hellinger and score-approximation diagnostics.
    Contiguity(Flags),
    /// Profile-likelihood expansion, sandwich bounds and concavity.
    Expansion(Flags),
    /// `J_m` against `J` over a grid of sieve sizes.
    InfoConvergence(Flags),
    /// Magnitudes of the sieve rate conditions.
    RateCheck(Flags),
    /// Replication study of √n(θ̂ − θ₀).
    Experiment(Flags),
    /// Recompute an experiment summary from its raw replication file.
    Summarize(Flags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PlmSim(_) => "plm-sim",
            Command::CoxSim(_) => "cox-sim",
            Command::Fit(_) => "fit",
            Command::Contiguity(_) => "contiguity",
            Command::Expansion(_) => "expansion",
            Command::InfoConvergence(_) => "info-convergence",
            Command::RateCheck(_) => "rate-check",
            Command::Experiment(_) => "experiment",
            Command::Summarize(_) => "summarize",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::PlmSim(f)
            | Command::CoxSim(f)
            | Command::Fit(f)
            | Command::Contiguity(f)
            | Command::Expansion(f)
            | Command::InfoConvergence(f)
            | Command::RateCheck(f)
            | Command::Experiment(f)
            | Command::Summarize(f) => f,
        }
    }

    fn allowed(&self) -> &'static [&'static str] {
        match self {
            Command::PlmSim(_) | Command::CoxSim(_) => &["config", "n", "seed", "out"],
            Command::Fit(_) => &["config", "model", "data", "k", "out"],
            Command::Contiguity(_) => &["config", "model", "n", "reps", "seed", "k", "workers", "out"],
            Command::Expansion(_) => &["config", "model", "data", "n", "seed", "k", "out"],
            Command::InfoConvergence(_) => &["config", "model", "out"],
            Command::RateCheck(_) => &["config", "model", "n", "k", "out"],
            Command::Experiment(_) => &["config", "model", "n", "reps", "seed", "k", "workers", "out"],
            Command::Summarize(_) => &["config", "model", "data", "out"],
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Model(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Model(e) => write!(f, "{e}"),
        }
    }
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn set_flags(f: &Flags) -> Vec<&'static str> {
    let mut v = Vec::new();
    let pairs: [(&'static str, bool); 9] = [
        ("config", f.config.is_some()),
        ("model", f.model.is_some()),
        ("data", f.data.is_some()),
        ("k", f.k.is_some()),
        ("n", f.n.is_some()),
        ("reps", f.reps.is_some()),
        ("seed", f.seed.is_some()),
        ("workers", f.workers.is_some()),
        ("out", f.out.is_some()),
    ];
    for (name, set) in pairs {
        if set {
            v.push(name);
        }
    }
    v
}

fn read_config(path: &Option<PathBuf>) -> Result<serde_json::Map<String, Value>, CliError> {
    let Some(p) = path else {
        return Ok(serde_json::Map::new());
    };
    let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(usage(format!("config {} must be a JSON object", p.display()))),
        Err(e) => Err(usage(format!("config {}: {e}", p.display()))),
    }
}

/// Sets `model`/`dgp` from `--model` when the config has none; a conflicting
/// `--model` is a usage error.
fn ensure_model(
    cfg: &mut serde_json::Map<String, Value>,
    flag: Option<ModelName>,
    fallback: Option<ModelName>,
    with_dgp: bool,
) -> Result<(), CliError> {
    let from_cfg = cfg.get("model").and_then(Value::as_str).map(str::to_owned);
    match (from_cfg, flag.or(fallback)) {
        (Some(c), Some(f)) if c != f.as_str() => {
            Err(usage(format!("--model {} conflicts with config model {c}", f.as_str())))
        }
        (Some(_), _) => Ok(()),
        (None, Some(f)) => {
            if with_dgp {
                let spec = ModelSpec::standard(f.as_str()).expect("known model");
                if let Value::Object(m) = serde_json::to_value(&spec).expect("serializable") {
                    for (key, v) in m {
                        cfg.entry(key).or_insert(v);
                    }
                }
            } else {
                cfg.insert("model".into(), json!(f.as_str()));
            }
            Ok(())
        }
        (None, None) => Err(usage("a model is required: pass --model or set it in the config")),
    }
}

fn finish<T: DeserializeOwned>(cfg: serde_json::Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(cfg)).map_err(|e| usage(format!("invalid configuration: {e}")))
}

fn put<T: Serialize>(cfg: &mut serde_json::Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        cfg.insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }
}

fn default_n() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub model: ModelName,
    pub data: PathBuf,
    /// PLM sieve size; default `max(ceil(n^{1/5}), 4)`.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub basis: FitBasis,
    /// PLM noise scale; estimated when absent.
    #[serde(default)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    /// Data to use instead of a simulated sample.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    /// PLM: sieve size (default rule applies when absent). Cox: cell count of
    /// the sieve profile; absent means the partial likelihood.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_h_grid")]
    pub h_grid: Vec<f64>,
    #[serde(default)]
    pub basis: FitBasis,
}

fn default_h_grid() -> Vec<f64> {
    DEFAULT_H_GRID.to_vec()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfoConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default)]
    pub k_grid: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default = "default_rate_n")]
    pub n: usize,
    /// Default: `ceil(n^{1/5})` (PLM) or `ceil(n^{3/4})` (Cox).
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_smoothness")]
    pub smoothness: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Override `ξ_m`; computed from the model's sieve otherwise.
    #[serde(default)]
    pub xi: Option<f64>,
    /// Override `a_n`; computed from the model's sieve otherwise.
    #[serde(default)]
    pub a: Option<f64>,
}

fn default_rate_n() -> usize {
    10_000
}

fn default_smoothness() -> f64 {
    1.0
}

fn default_threshold() -> f64 {
    contiguity::DEFAULT_RATE_THRESHOLD
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummarizeConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    pub data: PathBuf,
}

/// A resolved command ready to run.
enum Job {
    Sim(SimConfig),
    Fit(FitConfig),
    Contiguity(ContiguityConfig),
    Expansion(ExpansionConfig),
    Info(InfoConfig),
    Rate(RateConfig),
    Experiment(ExperimentConfig),
    Summarize(SummarizeConfig),
}

impl Job {
    fn config_json(&self) -> Value {
        let v = match self {
            Job::Sim(c) => serde_json::to_value(c),
            Job::Fit(c) => serde_json::to_value(c),
            Job::Contiguity(c) => serde_json::to_value(c),
            Job::Expansion(c) => serde_json::to_value(c),
            Job::Info(c) => serde_json::to_value(c),
            Job::Rate(c) => serde_json::to_value(c),
            Job::Experiment(c) => serde_json::to_value(c),
            Job::Summarize(c) => serde_json::to_value(c),
        };
        v.expect("serializable config")
    }
}

fn resolve(cmd: &Command) -> Result<Job, CliError> {
    let f = cmd.flags();
    let allowed = cmd.allowed();
    for name in set_flags(f) {
        if !allowed.contains(&name) {
            return Err(usage(format!("--{name} is not accepted by {}", cmd.name())));
        }
    }
    let mut cfg = read_config(&f.config)?;
    let job = match cmd {
        Command::PlmSim(_) | Command::CoxSim(_) => {
            let implied = if matches!(cmd, Command::PlmSim(_)) { ModelName::Plm } else { ModelName::Cox };
            ensure_model(&mut cfg, None, Some(implied), true)?;
            put(&mut cfg, "n", f.n);
            put(&mut cfg, "seed", f.seed);
            Job::Sim(finish(cfg)?)
        }
        Command::Fit(_) => {
            ensure_model(&mut cfg, f.model, None, false)?;
            put(&mut cfg, "data", f.data.clone());
            put(&mut cfg, "k", f.k);
            if !cfg.contains_key("data") {
                return Err(usage("fit needs --data"));
            }
            let c: FitConfig = finish(cfg)?;
            if c.model == ModelName::Cox && c.k.is_some() {
                return Err(usage("--k does not apply to the Cox partial likelihood"));
            }
            Job::Fit(c)
        }
        Command::Contiguity(_) => {
            ensure_model(&mut cfg, f.model, None, true)?;
            cfg.entry("n").or_insert(json!(default_n()));
            cfg.entry("reps").or_insert(json!(200));
            cfg.entry("seed").or_insert(json!(0));
            put(&mut cfg, "n", f.n);
            put(&mut cfg, "reps", f.reps);
            put(&mut cfg, "seed", f.seed);
            put(&mut cfg, "k_grid", f.k.map(|k| vec![k]));
            put(&mut cfg, "workers", f.workers);
            Job::Contiguity(finish(cfg)?)
        }
        Command::Expansion(_) => {
            ensure_model(&mut cfg, f.model, None, true)?;
            put(&mut cfg, "data", f.data.clone());
            put(&mut cfg, "n", f.n);
            put(&mut cfg, "seed", f.seed);
            put(&mut cfg, "k", f.k);
            Job::Expansion(finish(cfg)?)
        }
        Command::InfoConvergence(_) => {
            ensure_model(&mut cfg, f.model, None, true)?;
            Job::Info(finish(cfg)?)
        }
        Command::RateCheck(_) => {
            ensure_model(&mut cfg, f.model, None, true)?;
            put(&mut cfg, "n", f.n);
            put(&mut cfg, "k", f.k);
            Job::Rate(finish(cfg)?)
        }
        Command::Experiment(_) => {
            ensure_model(&mut cfg, f.model, None, true)?;
            cfg.entry("reps").or_insert(json!(1000));
            cfg.entry("master_seed").or_insert(json!(0));
            cfg.entry("n_grid").or_insert(json!([default_n()]));
            put(&mut cfg, "n_grid", f.n.map(|n| vec![n]));
            put(&mut cfg, "reps", f.reps);
            put(&mut cfg, "master_seed", f.seed);
            put(&mut cfg, "k_rule", f.k.map(|k| KRule::Fixed { k }));
            put(&mut cfg, "workers", f.workers);
            put(&mut cfg, "outputs", f.out.as_ref().map(|p| p.display().to_string()));
            let c: ExperimentConfig = finish(cfg)?;
            c.validate().map_err(|e| usage(e.to_string()))?;
            Job::Experiment(c)
        }
        Command::Summarize(_) => {
            ensure_model(&mut cfg, f.model, None, true)?;
            put(&mut cfg, "data", f.data.clone());
            if !cfg.contains_key("data") {
                return Err(usage("summarize needs --data"));
            }
            Job::Summarize(finish(cfg)?)
        }
    };
    Ok(job)
}

/// Named outputs of a successful run; the empty suffix is the primary
/// output, printed to stdout without `--out`.
type Outputs = Vec<(&'static str, String)>;

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> crate::Result<()>) -> crate::Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

fn read_data(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::open(path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))
}

fn plm_basis(basis: &FitBasis, k: usize, z: &[f64]) -> crate::Result<crate::basis::BasisMatrix> {
    Sieve::uniform(basis.spec(k))?.basis_matrix(z)
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    model: &'a str,
    status: &'a str,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct RateReport {
    n: usize,
    k: usize,
    xi: f64,
    a: f64,
    smoothness: f64,
    threshold: f64,
    conditions: BTreeMap<String, RateEntry>,
}

fn execute(job: &Job) -> Result<Outputs, CliError> {
    Ok(match job {
        Job::Sim(c) => {
            c.model.validate()?;
            let text = match &c.model {
                ModelSpec::Plm(d) => csv_string(|b| plm::write_plm_csv(b, &plm::simulate_plm(d, c.n, c.seed)?))?,
                ModelSpec::Cox(d) => csv_string(|b| cox::write_cox_csv(b, &cox::simulate_cox(d, c.n, c.seed)?))?,
            };
            vec![(".csv", text)]
        }
        Job::Fit(c) => {
            let file = read_data(&c.data)?;
            let body = match c.model {
                ModelName::Plm => {
                    let data = plm::read_plm_csv(file).map_err(|e| usage(e.to_string()))?;
                    let k = match c.k {
                        Some(k) => k,
                        None => KRule::Default.k_for(data.len())?,
                    };
                    let z: Vec<f64> = data.iter().map(|s| s.z).collect();
                    let fit = plm::fit_plm(&data, &plm_basis(&c.basis, k, &z)?, c.sigma)?;
                    serde_json::to_value(fit)
                }
                ModelName::Cox => {
                    let data = cox::read_cox_csv(file).map_err(|e| usage(e.to_string()))?;
                    serde_json::to_value(cox::fit_cox_partial(&data, &NewtonOpts::default())?)
                }
            }
            .expect("serializable");
            vec![(
                ".json",
                to_json(&Tagged {
                    model: c.model.as_str(),
                    status: "ok",
                    body,
                }),
            )]
        }
        Job::Contiguity(c) => {
            let r = contiguity::run_contiguity(c)?;
            vec![(".json", to_json(&r)), (".csv", r.to_csv())]
        }
        Job::Expansion(c) => {
            c.model.validate()?;
            let report = match &c.model {
                ModelSpec::Plm(d) => {
                    let data = match &c.data {
                        Some(p) => plm::read_plm_csv(read_data(p)?).map_err(|e| usage(e.to_string()))?,
                        None => plm::simulate_plm(d, c.n, c.seed)?,
                    };
                    let k = match c.k {
                        Some(k) => k,
                        None => KRule::Default.k_for(data.len())?,
                    };
                    let sieve = Sieve::uniform(c.basis.spec(k))?;
                    let z: Vec<f64> = data.iter().map(|s| s.z).collect();
                    let model = PlmSieveModel::new(&data, &sieve.basis_matrix(&z)?, d.sigma)?;
                    plm::plm_expansion(&model, &sieve, d.theta0, &c.h_grid)?
                }
                ModelSpec::Cox(d) => {
                    let data = match &c.data {
                        Some(p) => cox::read_cox_csv(read_data(p)?).map_err(|e| usage(e.to_string()))?,
                        None => cox::simulate_cox(d, c.n, c.seed)?,
                    };
                    match c.k {
                        Some(k) => cox::cox_sieve_expansion(&CoxSieveProfile::new(&data, k)?, d.theta0, &c.h_grid)?,
                        None => cox::cox_partial_expansion(&data, &CoxPopulation::new(d)?, &c.h_grid)?,
                    }
                }
            };
            vec![(".json", to_json(&report)), (".csv", report.to_csv())]
        }
        Job::Info(c) => {
            let r = match &c.model {
                ModelSpec::Plm(d) => {
                    let grid = c.k_grid.clone().unwrap_or_else(|| vec![4, 8, 16, 32, 64, 128]);
                    contiguity::jm_convergence_plm(d, &grid)?
                }
                ModelSpec::Cox(d) => {
                    let grid = c.k_grid.clone().unwrap_or_else(|| vec![8, 16, 32, 64, 128, 256]);
                    contiguity::jm_convergence_cox(d, &grid)?
                }
            };
            vec![(".json", to_json(&r))]
        }
        Job::Rate(c) => {
            c.model.validate()?;
            let nf = c.n as f64;
            let (k, xi, a) = match &c.model {
                ModelSpec::Plm(d) => {
                    let k = c.k.unwrap_or((nf.powf(0.2).ceil() as usize).max(1));
                    let sieve = Sieve::uniform(BasisSpec::piecewise_constant(k, Scaling::ProbabilityOrthonormal))?;
                    let (xi, a) = contiguity::plm_rate_inputs(d, &sieve)?;
                    (k, xi, a)
                }
                ModelSpec::Cox(d) => {
                    let k = c.k.unwrap_or((nf.powf(0.75).ceil() as usize).max(1));
                    let (xi, a) = contiguity::cox_rate_inputs(d, &CoxSieve::left_endpoint(&d.eta0, k)?);
                    (k, xi, a)
                }
            };
            let (xi, a) = (c.xi.unwrap_or(xi), c.a.unwrap_or(a));
            let report = RateReport {
                n: c.n,
                k,
                xi,
                a,
                smoothness: c.smoothness,
                threshold: c.threshold,
                conditions: contiguity::rate_check(c.n, k, c.smoothness, xi, a, c.threshold),
            };
            vec![(".json", to_json(&report))]
        }
        Job::Experiment(c) => {
            // Files are written by the engine when `outputs` is set.
            let out = montecarlo::run_experiment(c)?;
            vec![(".summary.json", to_json(&out.summary))]
        }
        Job::Summarize(c) => {
            let file = read_data(&c.data)?;
            let records = montecarlo::read_replications(file).map_err(|e| usage(e.to_string()))?;
            let j = c.model.efficient_information()?;
            vec![(".json", to_json(&montecarlo::summarize(&records, c.model.name(), 1.0 / j)?))]
        }
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn sidecar(cmd: &Command, job: &Job, status: &str, message: Option<&str>) -> String {
    let mut v = json!({
        "schema_version": 1,
        "command": cmd.name(),
        "config": job.config_json(),
        "status": status,
    });
    if let Some(m) = message {
        v["message"] = json!(m);
    }
    to_json(&v)
}

/// Runs a parsed command and returns the process exit code.
pub fn dispatch(cli: Cli) -> i32 {
    let cmd = &cli.command;
    let job = match resolve(cmd) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    let out = cmd.flags().out.clone();
    let result = execute(&job);
    let (status, message) = match &result {
        Ok(_) => ("ok", None),
        Err(e) => ("error", Some(e.to_string())),
    };
    if let Err(CliError::Usage(m)) = &result {
        eprintln!("usage error: {m}");
        return 1;
    }
    let side = sidecar(cmd, &job, status, message.as_deref());
    let write_result = (|| -> std::io::Result<()> {
        match &out {
            Some(prefix) => {
                std::fs::write(with_suffix(prefix, ".resolved.json"), &side)?;
                if let Ok(outputs) = &result {
                    for (suffix, text) in outputs {
                        // The experiment engine wrote its own files.
                        if !matches!(job, Job::Experiment(_)) {
                            std::fs::write(with_suffix(prefix, suffix), text)?;
                        }
                    }
                }
            }
            None => {
                eprint!("{side}");
                if let Ok(outputs) = &result {
                    let mut stdout = std::io::stdout().lock();
                    if let Some((_, text)) = outputs.first() {
                        stdout.write_all(text.as_bytes())?;
                    }
                }
            }
        }
        Ok(())
    })();
    if let Err(e) = write_result {
        eprintln!("i/o error: {e}");
        return 2;
    }
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Parses `argv` and dispatches. Parse failures exit with 1; `--help` and
/// `--version` with 0.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
