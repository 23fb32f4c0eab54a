//! Replication engine: simulate under the truth, fit, and summarise the
//! sampling distribution of `√n(θ̂ − θ₀)` against `N(0, J⁻¹)`.
//!
//! Each replication draws from its own generator seeded by
//! [`replication_seed`], and records are sorted by `(n, rep)` before any
//! aggregation, so summaries do not depend on the worker count.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::basis::{BasisSpec, Family, Scaling, Sieve};
use crate::cox::{self, CoxPopulation, NewtonOpts};
use crate::error::{Error, Result};
use crate::io;
use crate::model::ModelSpec;
use crate::plm;

pub const Z_975: f64 = 1.959963984540054;
pub const FAILURE_BUDGET: f64 = 0.05;
pub const RAW_HEADER: [&str; 9] = [
    "rep",
    "n",
    "k",
    "theta_hat",
    "se",
    "sqrt_n_err",
    "influence_sum",
    "ci_hit",
    "status",
];

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` in stream `stream`:
/// `mix(mix(mix(master) ^ stream) ^ rep)` with `mix` = SplitMix64.
pub fn replication_seed(master: u64, stream: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ rep)
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidSpec("workers must be positive".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidSpec(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Sieve size as a function of `n`. Cox partial-likelihood fits ignore it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum KRule {
    /// `max(ceil(n^{1/5}), 4)`.
    #[default]
    Default,
    /// `max(ceil(scale · n^exponent), min)`.
    Power {
        scale: f64,
        exponent: f64,
        #[serde(default = "one")]
        min: usize,
    },
    Fixed {
        k: usize,
    },
    /// Keys are decimal sample sizes.
    Explicit {
        map: BTreeMap<String, usize>,
    },
}

fn one() -> usize {
    1
}

impl KRule {
    pub fn k_for(&self, n: usize) -> Result<usize> {
        let nf = n as f64;
        let k = match self {
            KRule::Default => (nf.powf(0.2).ceil() as usize).max(4),
            KRule::Power { scale, exponent, min } => ((scale * nf.powf(*exponent)).ceil() as usize).max(*min),
            KRule::Fixed { k } => *k,
            KRule::Explicit { map } => *map
                .get(&n.to_string())
                .ok_or_else(|| Error::InvalidSpec(format!("k_rule has no entry for n = {n}")))?,
        };
        if k == 0 {
            return Err(Error::InvalidSpec("k must be positive".into()));
        }
        Ok(k)
    }
}

/// Basis used by PLM fits (raw scaling; the estimator is invariant to it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBasis {
    pub family: Family,
    #[serde(default)]
    pub degree: usize,
}

impl Default for FitBasis {
    fn default() -> Self {
        Self {
            family: Family::Bspline,
            degree: 3,
        }
    }
}

impl FitBasis {
    pub fn spec(&self, k: usize) -> BasisSpec {
        match self.family {
            Family::PiecewiseConstant => BasisSpec::piecewise_constant(k, Scaling::Raw),
            Family::Bspline => BasisSpec::bspline(k, self.degree, Scaling::Raw),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub k_rule: KRule,
    #[serde(default)]
    pub basis: FitBasis,
    /// PLM only: use the DGP's `σ` instead of estimating it.
    #[serde(default)]
    pub known_sigma: bool,
    pub reps: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Prefix for `<prefix>.raw.csv` and `<prefix>.summary.json`.
    #[serde(default)]
    pub outputs: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 100 {
            return Err(Error::InvalidSpec("reps must be at least 100".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("n_grid must be nonempty and strictly increasing".into()));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::InvalidSpec("n must be at least 2".into()));
        }
        self.model.validate()?;
        for &n in &self.n_grid {
            self.k_rule.k_for(n)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub n: usize,
    /// Sieve size; 0 for the Cox partial likelihood.
    pub k: usize,
    pub theta_hat: f64,
    pub se: f64,
    pub sqrt_n_err: f64,
    pub influence_sum: f64,
    #[serde(with = "crate::io::bit")]
    pub ci_hit: bool,
    pub status: String,
}

impl ReplicationRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn read_replications<R: std::io::Read>(reader: R) -> Result<Vec<ReplicationRecord>> {
    io::read_records(reader, &RAW_HEADER)
}

pub fn write_replications<W: std::io::Write>(writer: W, records: &[ReplicationRecord]) -> Result<()> {
    io::write_records(writer, records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub k: usize,
    pub reps: usize,
    pub completed: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    #[serde(rename = "J_inverse_target")]
    pub j_inverse_target: f64,
    pub variance_ratio: f64,
    pub coverage_95: f64,
    pub linearity_gap: f64,
    /// `sup |F_n − Φ|` of `√(nJ)(θ̂ − θ₀)`.
    pub ks_statistic: f64,
    pub ks_threshold: f64,
    pub ks_pass: bool,
    pub failures: usize,
    pub failure_reasons: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    pub model: String,
    pub per_n: Vec<NSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub records: Vec<ReplicationRecord>,
}

fn failed(rep: usize, n: usize, k: usize, e: &Error) -> ReplicationRecord {
    ReplicationRecord {
        rep,
        n,
        k,
        theta_hat: f64::NAN,
        se: f64::NAN,
        sqrt_n_err: f64::NAN,
        influence_sum: f64::NAN,
        ci_hit: false,
        status: e.to_string(),
    }
}

/// One replication at sample size `n`; fit errors become failed records.
fn replicate(
    config: &ExperimentConfig,
    j: f64,
    cox_pop: Option<&CoxPopulation>,
    sieve: Option<&Sieve>,
    n: usize,
    k: usize,
    rep: usize,
) -> ReplicationRecord {
    let seed = replication_seed(config.master_seed, n as u64, rep as u64);
    let theta0 = config.model.theta0();
    let rn = (n as f64).sqrt();
    let fitted: Result<(f64, f64, f64)> = match &config.model {
        ModelSpec::Plm(dgp) => (|| {
            let data = plm::simulate_plm(dgp, n, seed)?;
            let basis = sieve
                .expect("PLM experiments carry a sieve")
                .basis_matrix(&data.iter().map(|s| s.z).collect::<Vec<_>>())?;
            let fit = plm::fit_plm(&data, &basis, config.known_sigma.then_some(dgp.sigma))?;
            let infl = data.iter().map(|s| dgp.efficient_score(s)).sum::<f64>() / (j * rn);
            Ok((fit.theta_hat, fit.se, infl))
        })(),
        ModelSpec::Cox(dgp) => (|| {
            let data = cox::simulate_cox(dgp, n, seed)?;
            let fit = cox::fit_cox_partial(&data, &NewtonOpts::default())?;
            let pop = cox_pop.expect("Cox experiments carry population objects");
            let infl = data.iter().map(|s| pop.efficient_score(s)).sum::<f64>() / (j * rn);
            Ok((fit.theta_hat, fit.se, infl))
        })(),
    };
    match fitted {
        Ok((theta_hat, se, influence_sum)) => ReplicationRecord {
            rep,
            n,
            k,
            theta_hat,
            se,
            sqrt_n_err: rn * (theta_hat - theta0),
            influence_sum,
            ci_hit: (theta_hat - theta0).abs() <= Z_975 * se,
            status: "ok".into(),
        },
        Err(e) => failed(rep, n, k, &e),
    }
}

/// All replication records, sorted by `(n, rep)`.
pub fn run_replications(config: &ExperimentConfig) -> Result<Vec<ReplicationRecord>> {
    config.validate()?;
    let j = config.model.efficient_information()?;
    let cox_pop = match &config.model {
        ModelSpec::Cox(d) => Some(CoxPopulation::new(d)?),
        ModelSpec::Plm(_) => None,
    };
    let mut records = Vec::with_capacity(config.reps * config.n_grid.len());
    for &n in &config.n_grid {
        let (k, sieve) = match config.model {
            ModelSpec::Plm(_) => {
                let k = config.k_rule.k_for(n)?;
                (k, Some(Sieve::uniform(config.basis.spec(k))?))
            }
            ModelSpec::Cox(_) => (0, None),
        };
        let batch: Vec<ReplicationRecord> = with_workers(config.workers, || {
            (0..config.reps)
                .into_par_iter()
                .map(|rep| replicate(config, j, cox_pop.as_ref(), sieve.as_ref(), n, k, rep))
                .collect()
        })?;
        records.extend(batch);
    }
    records.sort_by_key(|r| (r.n, r.rep));
    Ok(records)
}

/// Runs the study, enforces the failure budget, and writes outputs when a
/// prefix is configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let records = run_replications(config)?;
    let j = config.model.efficient_information()?;
    let summary = summarize(&records, config.model.name(), 1.0 / j);
    if let Some(prefix) = &config.outputs {
        write_outputs(prefix, &records, summary.as_ref().ok())?;
    }
    Ok(ExperimentOutput {
        summary: summary?,
        records,
    })
}

/// Writes `<prefix>.raw.csv` and, when available, `<prefix>.summary.json`.
pub fn write_outputs(prefix: &str, records: &[ReplicationRecord], summary: Option<&ExperimentSummary>) -> Result<()> {
    let raw = std::fs::File::create(format!("{prefix}.raw.csv"))?;
    write_replications(raw, records)?;
    if let Some(s) = summary {
        let json = serde_json::to_string_pretty(s).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(format!("{prefix}.summary.json"), json + "\n")?;
    }
    Ok(())
}

/// Recomputes a summary from a raw replication file. `J⁻¹` is not stored in
/// the file and comes from the experiment's model.
pub fn summarize_file(path: &Path, model: &ModelSpec) -> Result<ExperimentSummary> {
    let records = read_replications(std::fs::File::open(path)?)?;
    summarize(&records, model.name(), 1.0 / model.efficient_information()?)
}

fn moments(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = v.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let variance = if v.len() > 1 { m2 * n / (n - 1.0) } else { f64::NAN };
    (mean, variance, m3 / m2.powf(1.5))
}

/// Kolmogorov distance of the sample to `N(0,1)`.
pub fn ks_normal(v: &[f64]) -> f64 {
    let std_normal = Normal::standard();
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = std_normal.cdf(*x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Aggregates per `n`. Records are re-sorted first, so the result depends
/// only on the record set. Errors on empty input or when more than 5% of the
/// replications at some `n` failed.
pub fn summarize(records: &[ReplicationRecord], model: &str, j_inverse: f64) -> Result<ExperimentSummary> {
    if records.is_empty() {
        return Err(Error::Empty("no replication records".into()));
    }
    if !(j_inverse > 0.0 && j_inverse.is_finite()) {
        return Err(Error::DegenerateInformation { value: 1.0 / j_inverse });
    }
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| (r.n, r.rep));
    let mut per_n = Vec::new();
    for group in sorted.chunk_by(|a, b| a.n == b.n) {
        let n = group[0].n;
        let reps = group.len();
        let ok: Vec<&ReplicationRecord> = group.iter().filter(|r| r.ok()).collect();
        let mut failure_reasons = BTreeMap::new();
        for r in group.iter().filter(|r| !r.ok()) {
            *failure_reasons.entry(r.status.clone()).or_insert(0) += 1;
        }
        let failures = reps - ok.len();
        if failures as f64 > FAILURE_BUDGET * reps as f64 || ok.len() < 2 {
            return Err(Error::TooManyFailures {
                n,
                failed: failures,
                reps,
                reason: group
                    .iter()
                    .find(|r| !r.ok())
                    .map(|r| r.status.clone())
                    .unwrap_or_default(),
            });
        }
        let err: Vec<f64> = ok.iter().map(|r| r.sqrt_n_err).collect();
        let (mean, variance, skewness) = moments(&err);
        let hits = ok.iter().filter(|r| r.ci_hit).count();
        let linearity_gap =
            ok.iter().map(|r| (r.sqrt_n_err - r.influence_sum).abs()).sum::<f64>() / ok.len() as f64;
        let scale = j_inverse.sqrt();
        let standardized: Vec<f64> = err.iter().map(|e| e / scale).collect();
        let ks_statistic = ks_normal(&standardized);
        let ks_threshold = 1.63 / (ok.len() as f64).sqrt();
        per_n.push(NSummary {
            n,
            k: group[0].k,
            reps,
            completed: ok.len(),
            mean,
            variance,
            skewness,
            j_inverse_target: j_inverse,
            variance_ratio: variance / j_inverse,
            coverage_95: hits as f64 / ok.len() as f64,
            linearity_gap,
            ks_statistic,
            ks_threshold,
            ks_pass: ks_statistic <= ks_threshold,
            failures,
            failure_reasons,
        });
    }
    Ok(ExperimentSummary {
        schema_version: 1,
        model: model.into(),
        per_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(rep: usize, err: f64, hit: bool) -> ReplicationRecord {
        ReplicationRecord {
            rep,
            n: 100,
            k: 4,
            theta_hat: 1.0 + err / 10.0,
            se: 0.1,
            sqrt_n_err: err,
            influence_sum: err,
            ci_hit: hit,
            status: "ok".into(),
        }
    }

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn coverage_arithmetic() {
        let recs: Vec<_> = (0..100).map(|i| record(i, (i as f64 - 50.0) / 30.0, i < 95)).collect();
        let s = summarize(&recs, "plm", 1.0).unwrap();
        assert_eq!(s.per_n[0].coverage_95, 0.95);
        assert_eq!(s.per_n[0].linearity_gap, 0.0);
    }

    #[test]
    fn empty_records_rejected() {
        assert!(matches!(summarize(&[], "plm", 1.0), Err(Error::Empty(_))));
    }

    #[test]
    fn failure_budget() {
        let mut recs: Vec<_> = (0..100).map(|i| record(i, i as f64 / 100.0, true)).collect();
        for r in recs.iter_mut().take(5) {
            r.status = "boom".into();
        }
        let s = summarize(&recs, "plm", 1.0).unwrap();
        assert_eq!(s.per_n[0].failures, 5);
        assert_eq!(s.per_n[0].failure_reasons["boom"], 5);
        recs[5].status = "boom".into();
        assert!(matches!(
            summarize(&recs, "plm", 1.0),
            Err(Error::TooManyFailures { failed: 6, .. })
        ));
    }

    #[test]
    fn raw_round_trip_is_exact() {
        let recs: Vec<_> = (0..100)
            .map(|i| record(i, (i as f64).sin() * std::f64::consts::PI, i % 3 != 0))
            .collect();
        let mut buf = Vec::new();
        write_replications(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("rep,n,k,theta_hat,se,sqrt_n_err,influence_sum,ci_hit,status\n"));
        let back = read_replications(&buf[..]).unwrap();
        assert_eq!(back, recs);
        assert_eq!(summarize(&back, "plm", 1.0), summarize(&recs, "plm", 1.0));
    }

    #[test]
    fn k_rules() {
        assert_eq!(KRule::Default.k_for(4000).unwrap(), 6);
        assert_eq!(KRule::Default.k_for(10).unwrap(), 4);
        let p = KRule::Power {
            scale: 1.0,
            exponent: 0.75,
            min: 1,
        };
        assert_eq!(p.k_for(10_000).unwrap(), 1000);
        let json = r#"{"rule":"explicit","map":{"100":3}}"#;
        let e: KRule = serde_json::from_str(json).unwrap();
        assert_eq!(e.k_for(100).unwrap(), 3);
        assert!(e.k_for(200).is_err());
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let normal = Normal::standard();
        let v: Vec<f64> = (0..n).map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
        assert!((ks_normal(&v) - 0.5 / n as f64).abs() < 1e-9);
    }
}
