//! Diagnostics for the sieve approximation: exact log-likelihood ratios of
//! the sieve law against the truth, LAN residuals, Hellinger distances,
//! efficient-score approximation errors, `J_m → J`, rate conditions, and a
//! finite-dimensional check of projection convergence.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{coefficients_for_target, BasisSpec, CoefficientRule, Measure, Scaling, Sieve};
use crate::cox::{
    self, loglr_cox, loglr_cox_obs, sieve_efficient_score_cox, Baseline, CoxDgp, CoxPopulation,
    CoxSample, CoxSieve,
};
use crate::error::{Error, Result};
use crate::leastfav::MomentSource;
use crate::model::ModelSpec;
use crate::montecarlo::{replication_seed, with_workers};
use crate::plm::{self, PlmDgp, PlmSample};
use crate::quad;

/// Importance weights `p_m/p₀` above this are clipped (and counted).
pub const WEIGHT_CLIP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlmLogLr {
    pub total: f64,
    pub linear_term: f64,
    pub quadratic_term: f64,
}

/// `h(z_i) = √n (β(z_i)ᵗγ₀ − η₀(z_i)) / σ`.
pub fn plm_h_values(samples: &[PlmSample], sieve: &Sieve, gamma0: &DVector<f64>, dgp: &PlmDgp) -> Vec<f64> {
    let rn = (samples.len() as f64).sqrt();
    samples
        .iter()
        .map(|s| rn * (sieve.combine(s.z, gamma0) - dgp.eta0.eval(s.z)) / dgp.sigma)
        .collect()
}

/// `log dP_m^n/dP_0^n = n^{-1/2} Σ h(Z_i) ε_i/σ − (2n)⁻¹ Σ h(Z_i)²`.
pub fn loglr_plm(samples: &[PlmSample], sieve: &Sieve, gamma0: &DVector<f64>, dgp: &PlmDgp) -> PlmLogLr {
    let n = samples.len() as f64;
    let h = plm_h_values(samples, sieve, gamma0, dgp);
    let linear_term = samples
        .iter()
        .zip(&h)
        .map(|(s, h)| h * dgp.noise(s) / dgp.sigma)
        .sum::<f64>()
        / n.sqrt();
    let quadratic_term = h.iter().map(|v| v * v).sum::<f64>() / (2.0 * n);
    PlmLogLr {
        total: linear_term - quadratic_term,
        linear_term,
        quadratic_term,
    }
}

/// `E₀ h(Z)² = n ‖β ᵗγ₀ − η₀‖²_{L2(P_Z)} / σ²`.
pub fn plm_h_second_moment(n: usize, sieve: &Sieve, gamma0: &DVector<f64>, dgp: &PlmDgp) -> f64 {
    let d = quad::integrate_piecewise(
        &|z| (sieve.combine(z, gamma0) - dgp.eta0.eval(z)).powi(2),
        0.0,
        1.0,
        &sieve.spec().interior_knots(),
        quad::DEFAULT_PANELS,
    );
    n as f64 * d / (dgp.sigma * dgp.sigma)
}

/// `loglr − [n^{-1/2} Σ g(X_i) − ½ E₀ g²]`.
pub fn lan_residual(loglr_total: f64, g_values: &[f64], g_second_moment: f64) -> f64 {
    let n = g_values.len().max(1) as f64;
    loglr_total - (g_values.iter().sum::<f64>() / n.sqrt() - 0.5 * g_second_moment)
}

/// A pair of laws: draws from each and the log density ratio `log p_m/p₀`.
pub trait DensityPair: Sync {
    type Obs: Send;
    fn draw_p0(&self, rng: &mut ChaCha8Rng) -> Self::Obs;
    fn draw_pm(&self, rng: &mut ChaCha8Rng) -> Self::Obs;
    fn log_ratio(&self, x: &Self::Obs) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
    pub draws: usize,
    pub clipped: usize,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

fn weight<P: DensityPair>(pair: &P, x: &P::Obs) -> Result<(f64, bool)> {
    let lr = pair.log_ratio(x);
    if lr.is_nan() || lr == f64::INFINITY {
        return Err(Error::SupportMismatch(format!("log density ratio {lr}")));
    }
    let rho = lr.exp();
    Ok(if rho > WEIGHT_CLIP { (WEIGHT_CLIP, true) } else { (rho, false) })
}

/// `∫(√p_m − √p₀)² = E₀(√(p_m/p₀) − 1)²` by Monte Carlo under `P₀`.
pub fn hellinger_sq<P: DensityPair>(pair: &P, mc_draws: usize, seed: u64) -> Result<McEstimate> {
    if mc_draws < 2 {
        return Err(Error::InvalidSpec("need at least 2 draws".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = Vec::with_capacity(mc_draws);
    let mut clipped = 0;
    for _ in 0..mc_draws {
        let x = pair.draw_p0(&mut rng);
        let (rho, c) = weight(pair, &x)?;
        clipped += usize::from(c);
        vals.push((rho.sqrt() - 1.0).powi(2));
    }
    let (value, se) = mean_se(&vals);
    Ok(McEstimate {
        value,
        se,
        draws: mc_draws,
        clipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreApproxEstimate {
    /// `E₀[(ℓ̃_m √ρ − ℓ̃)²]`, nonnegative by construction.
    pub value: f64,
    pub se: f64,
    /// `E_m ℓ̃_m² + E₀ ℓ̃² − 2 E₀[ℓ̃_m ℓ̃ √ρ]` with the first term from draws
    /// under `P_m`.
    pub three_term: f64,
    pub three_term_se: f64,
    pub draws: usize,
    pub clipped: usize,
}

/// Estimates `∫ (ℓ̃_m √p_m − ℓ̃ √p₀)² dμ` with `ρ = p_m/p₀`.
pub fn score_approx_err<P, Fm, Fl>(
    pair: &P,
    score_m: Fm,
    score_lim: Fl,
    mc_draws: usize,
    seed: u64,
) -> Result<ScoreApproxEstimate>
where
    P: DensityPair,
    Fm: Fn(&P::Obs) -> f64,
    Fl: Fn(&P::Obs) -> f64,
{
    if mc_draws < 2 {
        return Err(Error::InvalidSpec("need at least 2 draws".into()));
    }
    let mut rng0 = ChaCha8Rng::seed_from_u64(seed);
    let mut rngm = ChaCha8Rng::seed_from_u64(crate::montecarlo::splitmix64(seed ^ 0xA5A5_5A5A_0F0F_F0F0));
    let mut is_vals = Vec::with_capacity(mc_draws);
    let mut cross = Vec::with_capacity(mc_draws);
    let mut under_m = Vec::with_capacity(mc_draws);
    let mut clipped = 0;
    for _ in 0..mc_draws {
        let x = pair.draw_p0(&mut rng0);
        let (rho, c) = weight(pair, &x)?;
        clipped += usize::from(c);
        let (sm, sl) = (score_m(&x), score_lim(&x));
        let r = rho.sqrt();
        is_vals.push((sm * r - sl).powi(2));
        cross.push(sl * sl - 2.0 * sm * sl * r);
        let xm = pair.draw_pm(&mut rngm);
        under_m.push(score_m(&xm).powi(2));
    }
    let (value, se) = mean_se(&is_vals);
    let (c, c_se) = mean_se(&cross);
    let (m2, m2_se) = mean_se(&under_m);
    Ok(ScoreApproxEstimate {
        value,
        se,
        three_term: m2 + c,
        three_term_se: (c_se * c_se + m2_se * m2_se).sqrt(),
        draws: mc_draws,
        clipped,
    })
}

/// PLM truth against the sieve law with `η` replaced by `βᵗγ₀`.
#[derive(Debug, Clone)]
pub struct PlmPair {
    pub dgp: PlmDgp,
    pub sieve: Sieve,
    pub gamma0: DVector<f64>,
}

impl PlmPair {
    pub fn sieve_dgp(&self) -> PlmDgp {
        PlmDgp {
            eta0: crate::curve::Curve::Expansion {
                sieve: Box::new(self.sieve.clone()),
                coefficients: self.gamma0.iter().copied().collect(),
            },
            ..self.dgp.clone()
        }
    }
}

impl DensityPair for PlmPair {
    type Obs = PlmSample;

    fn draw_p0(&self, rng: &mut ChaCha8Rng) -> PlmSample {
        self.dgp.draw(rng)
    }

    fn draw_pm(&self, rng: &mut ChaCha8Rng) -> PlmSample {
        let mut x = self.dgp.draw(rng);
        x.y += self.sieve.combine(x.z, &self.gamma0) - self.dgp.eta0.eval(x.z);
        x
    }

    fn log_ratio(&self, x: &PlmSample) -> f64 {
        let r0 = x.y - self.dgp.eta0.eval(x.z) - self.dgp.theta0 * x.w;
        let rm = x.y - self.sieve.combine(x.z, &self.gamma0) - self.dgp.theta0 * x.w;
        (r0 * r0 - rm * rm) / (2.0 * self.dgp.sigma * self.dgp.sigma)
    }
}

/// Cox truth against the cox-scale sieve hazard `βᵗγ₀`.
#[derive(Debug)]
pub struct CoxPair {
    pub dgp: CoxDgp,
    pub sieve: CoxSieve,
    baseline: Baseline,
}

impl CoxPair {
    pub fn new(dgp: &CoxDgp, sieve: CoxSieve) -> Self {
        Self {
            baseline: Baseline::new(&dgp.eta0),
            dgp: dgp.clone(),
            sieve,
        }
    }
}

impl DensityPair for CoxPair {
    type Obs = CoxSample;

    fn draw_p0(&self, rng: &mut ChaCha8Rng) -> CoxSample {
        cox::draw_observation(&self.baseline, self.dgp.theta0, &self.dgp.w_law, &self.dgp.censor, rng)
    }

    fn draw_pm(&self, rng: &mut ChaCha8Rng) -> CoxSample {
        cox::draw_observation(&self.sieve, self.dgp.theta0, &self.dgp.w_law, &self.dgp.censor, rng)
    }

    fn log_ratio(&self, x: &CoxSample) -> f64 {
        loglr_cox_obs(x, &self.sieve, &self.baseline, self.dgp.theta0)
    }
}

/// PLM sieve of size `k`: probability-orthonormal cells under `U(0,1)` with
/// `γ₀` the `L2` projection of `η₀`.
pub fn plm_sieve(dgp: &PlmDgp, k: usize) -> Result<(Sieve, DVector<f64>)> {
    let sieve = Sieve::uniform(BasisSpec::piecewise_constant(k, Scaling::ProbabilityOrthonormal))?;
    let gamma0 = coefficients_for_target(
        &sieve,
        &|z| dgp.eta0.eval(z),
        CoefficientRule::L2Projection,
        &Measure::UniformZ,
    )?;
    Ok((sieve, gamma0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JmConvergence {
    pub k_values: Vec<usize>,
    #[serde(rename = "J_m_values")]
    pub j_m_values: Vec<f64>,
    /// `J_m − J`, computed directly where possible.
    pub gaps: Vec<f64>,
    #[serde(rename = "J_limit")]
    pub j_limit: f64,
}

/// `J_m` for probability-orthonormal cells of each size, and `J`.
pub fn jm_convergence_plm(dgp: &PlmDgp, k_grid: &[usize]) -> Result<JmConvergence> {
    let j_limit = plm::efficient_info_plm(dgp, None)?;
    let s2 = dgp.sigma * dgp.sigma;
    let mut j_m_values = Vec::new();
    let mut gaps = Vec::new();
    for &k in k_grid {
        let sieve = Sieve::uniform(BasisSpec::piecewise_constant(k, Scaling::ProbabilityOrthonormal))?;
        j_m_values.push(plm::efficient_info_plm(dgp, Some(&sieve))?);
        gaps.push(plm::parseval_gap(dgp, &sieve)? / s2);
    }
    Ok(JmConvergence {
        k_values: k_grid.to_vec(),
        j_m_values,
        gaps,
        j_limit,
    })
}

/// `J_m` of the cox-scale sieve with left-endpoint `γ₀`, evaluated under
/// the sieve law, and the limit `J`.
pub fn jm_convergence_cox(dgp: &CoxDgp, k_grid: &[usize]) -> Result<JmConvergence> {
    let j_limit = cox::efficient_info_cox(dgp, quad::DEFAULT_PANELS)?.j;
    let mut j_m_values = Vec::new();
    for &k in k_grid {
        let sieve = CoxSieve::left_endpoint(&dgp.eta0, k)?;
        let blocks = cox::cox_sieve_blocks(MomentSource::Population, dgp, &sieve, &[])?;
        j_m_values.push(blocks.j_m);
    }
    let gaps = j_m_values.iter().map(|j| j - j_limit).collect();
    Ok(JmConvergence {
        k_values: k_grid.to_vec(),
        j_m_values,
        gaps,
        j_limit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub magnitude: f64,
    pub pass: bool,
}

pub const DEFAULT_RATE_THRESHOLD: f64 = 0.5;

/// Finite-`n` magnitudes of the sieve rate conditions; advisory only.
pub fn rate_check(n: usize, k: usize, s: f64, xi: f64, a_n: f64, threshold: f64) -> BTreeMap<String, RateEntry> {
    let rn = (n as f64).sqrt();
    let kf = k as f64;
    let entries = [
        ("k2_over_sqrt_n", kf * kf / rn),
        ("xi_k_over_sqrt_n", xi * kf / rn),
        ("a_sqrt_k_xi", a_n * kf.sqrt() * xi),
        ("sqrt_n_k_pow_neg_s", rn * kf.powf(-s)),
        ("sqrt_n_over_k", rn / kf),
    ];
    entries
        .iter()
        .map(|(name, m)| {
            (
                name.to_string(),
                RateEntry {
                    magnitude: *m,
                    pass: *m <= threshold,
                },
            )
        })
        .collect()
}

/// `ξ_m = sup‖β‖` and `a_n = ‖b₀ − Π_m b₀‖_{L2}` for a PLM sieve.
pub fn plm_rate_inputs(dgp: &PlmDgp, sieve: &Sieve) -> Result<(f64, f64)> {
    Ok((sieve.sup_norm(), plm::parseval_gap(dgp, sieve)?.max(0.0).sqrt()))
}

/// `ξ_m = k` for the cox-scale cells and `a_n = ‖βᵗγ₀ − η₀‖_{L2[0,1]}`.
pub fn cox_rate_inputs(dgp: &CoxDgp, sieve: &CoxSieve) -> (f64, f64) {
    let k = sieve.k();
    let breaks: Vec<f64> = (1..k).map(|j| j as f64 / k as f64).chain(dgp.eta0.breakpoints()).collect();
    let sq = quad::integrate_piecewise(
        &|t| (sieve.level(t) - dgp.eta0.eval(t)).powi(2),
        0.0,
        1.0,
        &breaks,
        16,
    );
    (k as f64, sq.max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub deviations: Vec<f64>,
    pub final_deviation: f64,
    pub decreasing: bool,
}

fn project(a: &DMatrix<f64>, h: &DVector<f64>, step: usize) -> Result<DVector<f64>> {
    let g = a.transpose() * a;
    let eig = SymmetricEigen::new(g.clone());
    if !(eig.eigenvalues.min() > 1e-12 * eig.eigenvalues.max()) {
        return Err(Error::IllConditionedSpan { step });
    }
    let c = g.cholesky().ok_or(Error::IllConditionedSpan { step })?.solve(&(a.transpose() * h));
    Ok(a * c)
}

/// Deviations `‖Π(h_n | L_n) − Π(h | L)‖` along nested spans `L_n` (given as
/// column bases), with `L` the last span. Projections use the normal
/// equations.
pub fn projection_convergence_test(
    target: &DVector<f64>,
    nested_spans: &[DMatrix<f64>],
    targets_n: &[DVector<f64>],
) -> Result<ProjectionReport> {
    if nested_spans.is_empty() || nested_spans.len() != targets_n.len() {
        return Err(Error::InvalidSpec("need one target per span".into()));
    }
    let dim = target.len();
    for a in nested_spans {
        if a.nrows() != dim {
            return Err(Error::Shape {
                expected: dim,
                got: a.nrows(),
            });
        }
    }
    let limit = project(nested_spans.last().unwrap(), target, nested_spans.len() - 1)?;
    let mut deviations = Vec::with_capacity(nested_spans.len());
    for (i, (a, h)) in nested_spans.iter().zip(targets_n).enumerate() {
        deviations.push((project(a, h, i)? - &limit).norm());
    }
    let decreasing = deviations.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    Ok(ProjectionReport {
        final_deviation: *deviations.last().unwrap(),
        deviations,
        decreasing,
    })
}

/// Random instance in `ℝ^dim`: a random orthogonal frame whose leading
/// columns span `L_n` (so the spans are nested and fill the space), a target
/// `h`, and `h_n = h + p·4^{-n}` for a fixed perturbation `p` of size 1e-3.
pub fn random_nested_instance(dim: usize, seed: u64) -> (DVector<f64>, Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r, c| DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
    let frame = draw(dim, dim).qr().q();
    // Mix the frame within each leading block so the spans are not just
    // coordinate-aligned in the rotated system.
    let mix = draw(dim, dim);
    let mut basis = frame.clone();
    for j in 0..dim {
        for i in 0..j {
            let c = 0.3 * mix[(i, j)];
            let col = basis.column(j) + frame.column(i) * c;
            basis.set_column(j, &col);
        }
    }
    let h: DVector<f64> = draw(dim, 1).column(0).into_owned();
    let p: DVector<f64> = draw(dim, 1).column(0).into_owned() * 1e-3;
    let spans = (1..=dim).map(|n| basis.columns(0, n).into_owned()).collect();
    let targets = (1..=dim).map(|n| &h + &p * 4f64.powi(-(n as i32))).collect();
    (h, spans, targets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContiguityConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Sieve sizes `k_m`; default `ceil(n^{1/4}), ceil(n^{1/2}), ceil(n^{3/4})`.
    #[serde(default)]
    pub k_grid: Option<Vec<usize>>,
    #[serde(default = "default_mc_draws")]
    pub mc_draws: usize,
    /// Smoothness used by the `k^{-s}` rate entry.
    #[serde(default = "default_smoothness")]
    pub smoothness: f64,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_mc_draws() -> usize {
    20_000
}

fn default_smoothness() -> f64 {
    1.0
}

pub fn default_k_grid(n: usize) -> Vec<usize> {
    let nf = n as f64;
    let mut v: Vec<usize> = [0.25, 0.5, 0.75]
        .iter()
        .map(|e| (nf.powf(*e).ceil() as usize).max(1))
        .collect();
    v.dedup();
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub schema_version: u32,
    pub model: String,
    pub n: usize,
    pub reps: usize,
    pub m_grid: Vec<usize>,
    pub k_values: Vec<usize>,
    pub loglr_mean: Vec<f64>,
    pub loglr_var: Vec<f64>,
    /// Per `m`: quantiles 0.5, 0.9, 0.99 of `|LAN residual|` over replications.
    pub lan_residual_quantiles: Vec<[f64; 3]>,
    pub hellinger_sq: Vec<f64>,
    pub hellinger_se: Vec<f64>,
    pub score_approx_err: Vec<f64>,
    pub score_approx_se: Vec<f64>,
    pub weights_clipped: Vec<usize>,
    #[serde(rename = "J_m_values")]
    pub j_m_values: Vec<f64>,
    #[serde(rename = "J_limit")]
    pub j_limit: f64,
    pub rate_flags: Vec<BTreeMap<String, RateEntry>>,
    /// `g` used in the LAN residual.
    pub g_description: String,
}

impl DiagnosticsReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,k_m,loglr_mean,loglr_var,hellinger_sq,score_err,J_m\n");
        for i in 0..self.m_grid.len() {
            s.push_str(&format!(
                "{},{},{:?},{:?},{:?},{:?},{:?}\n",
                self.m_grid[i],
                self.k_values[i],
                self.loglr_mean[i],
                self.loglr_var[i],
                self.hellinger_sq[i],
                self.score_approx_err[i],
                self.j_m_values[i]
            ));
        }
        s
    }
}

/// Type-7 quantile of sorted data.
pub fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, var)
}

/// Replication study of the log-likelihood ratio and LAN residual at each
/// sieve size, plus Monte Carlo Hellinger and score-approximation errors.
/// Deterministic given the seed, whatever the worker count.
pub fn run_contiguity(config: &ContiguityConfig) -> Result<DiagnosticsReport> {
    if config.n < 2 || config.reps < 2 {
        return Err(Error::InvalidSpec("need n >= 2 and reps >= 2".into()));
    }
    let k_values = config.k_grid.clone().unwrap_or_else(|| default_k_grid(config.n));
    if k_values.is_empty() || k_values.contains(&0) {
        return Err(Error::InvalidSpec("k grid must be nonempty and positive".into()));
    }
    let n = config.n;
    let rep_rows: Vec<Vec<(f64, f64)>>;
    let mut report = DiagnosticsReport {
        schema_version: 1,
        model: String::new(),
        n,
        reps: config.reps,
        m_grid: (1..=k_values.len()).collect(),
        k_values: k_values.clone(),
        loglr_mean: Vec::new(),
        loglr_var: Vec::new(),
        lan_residual_quantiles: Vec::new(),
        hellinger_sq: Vec::new(),
        hellinger_se: Vec::new(),
        score_approx_err: Vec::new(),
        score_approx_se: Vec::new(),
        weights_clipped: Vec::new(),
        j_m_values: Vec::new(),
        j_limit: 0.0,
        rate_flags: Vec::new(),
        g_description: String::new(),
    };
    let mc_seed = replication_seed(config.seed, u64::MAX, 0);
    match &config.model {
        ModelSpec::Plm(dgp) => {
            dgp.validate()?;
            report.model = "plm".into();
            report.g_description = "g(x) = h_{m,n}(z)(y - eta0(z) - theta0 w)/sigma".into();
            report.j_limit = plm::efficient_info_plm(dgp, None)?;
            let mut sieves = Vec::new();
            for &k in &k_values {
                let (sieve, gamma0) = plm_sieve(dgp, k)?;
                let eh2 = plm_h_second_moment(n, &sieve, &gamma0, dgp);
                sieves.push((sieve, gamma0, eh2));
            }
            rep_rows = with_workers(config.workers, || {
                (0..config.reps)
                    .into_par_iter()
                    .map(|rep| -> Result<Vec<(f64, f64)>> {
                        let data = plm::simulate_plm(dgp, n, replication_seed(config.seed, 0, rep as u64))?;
                        Ok(sieves
                            .iter()
                            .map(|(sieve, gamma0, eh2)| {
                                let lr = loglr_plm(&data, sieve, gamma0, dgp);
                                let h = plm_h_values(&data, sieve, gamma0, dgp);
                                let g: Vec<f64> =
                                    data.iter().zip(&h).map(|(s, h)| h * dgp.noise(s) / dgp.sigma).collect();
                                (lr.total, lan_residual(lr.total, &g, *eh2))
                            })
                            .collect())
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            for (sieve, gamma0, _) in &sieves {
                let pair = PlmPair {
                    dgp: dgp.clone(),
                    sieve: sieve.clone(),
                    gamma0: gamma0.clone(),
                };
                let hel = hellinger_sq(&pair, config.mc_draws, mc_seed)?;
                let d = plm::plm_blocks(MomentSource::Population, dgp, sieve, &[], dgp.sigma)?
                    .tilt()
                    .clone();
                let sm = |x: &PlmSample| {
                    plm::efficient_score_plm_m(x, dgp.theta0, gamma0, sieve, &d, dgp.sigma).unwrap_or(f64::NAN)
                };
                let sa = score_approx_err(&pair, sm, |x: &PlmSample| dgp.efficient_score(x), config.mc_draws, mc_seed)?;
                report.hellinger_sq.push(hel.value);
                report.hellinger_se.push(hel.se);
                report.score_approx_err.push(sa.value);
                report.score_approx_se.push(sa.se);
                report.weights_clipped.push(hel.clipped + sa.clipped);
                report.j_m_values.push(plm::efficient_info_plm(dgp, Some(sieve))?);
                let (xi, a_n) = plm_rate_inputs(dgp, sieve)?;
                report
                    .rate_flags
                    .push(rate_check(n, sieve.dim(), config.smoothness, xi, a_n, DEFAULT_RATE_THRESHOLD));
            }
        }
        ModelSpec::Cox(dgp) => {
            dgp.validate()?;
            report.model = "cox".into();
            report.g_description = "g = 0".into();
            let pop = CoxPopulation::new(dgp)?;
            report.j_limit = pop.j;
            let sieves: Vec<CoxSieve> = k_values
                .iter()
                .map(|&k| CoxSieve::left_endpoint(&dgp.eta0, k))
                .collect::<Result<_>>()?;
            rep_rows = with_workers(config.workers, || {
                (0..config.reps)
                    .into_par_iter()
                    .map(|rep| -> Result<Vec<(f64, f64)>> {
                        let data = cox::simulate_cox(dgp, n, replication_seed(config.seed, 0, rep as u64))?;
                        sieves
                            .iter()
                            .map(|sv| {
                                let lr = loglr_cox(&data, sv, &dgp.eta0, dgp.theta0)?;
                                Ok((lr.total, lan_residual(lr.total, &[], 0.0)))
                            })
                            .collect()
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            for sv in &sieves {
                let pair = CoxPair::new(dgp, sv.clone());
                let hel = hellinger_sq(&pair, config.mc_draws, mc_seed)?;
                let cells = cox::sieve_population_cells(dgp, sv);
                let ratios = cox::interval_ratios(&cells);
                let gamma0 = DVector::from_column_slice(sv.gamma());
                let blocks = cox::blocks_from_cells(&gamma0, &cells)?;
                let sm = |x: &CoxSample| {
                    sieve_efficient_score_cox(x, &gamma0, dgp.theta0, &ratios).unwrap_or(f64::NAN)
                };
                let sa = score_approx_err(&pair, sm, |x: &CoxSample| pop.efficient_score(x), config.mc_draws, mc_seed)?;
                report.hellinger_sq.push(hel.value);
                report.hellinger_se.push(hel.se);
                report.score_approx_err.push(sa.value);
                report.score_approx_se.push(sa.se);
                report.weights_clipped.push(hel.clipped + sa.clipped);
                report.j_m_values.push(blocks.j_m);
                let (xi, a_n) = cox_rate_inputs(dgp, sv);
                report
                    .rate_flags
                    .push(rate_check(n, sv.k(), config.smoothness, xi, a_n, DEFAULT_RATE_THRESHOLD));
            }
        }
    }
    for m in 0..k_values.len() {
        let totals: Vec<f64> = rep_rows.iter().map(|r| r[m].0).collect();
        let mut res: Vec<f64> = rep_rows.iter().map(|r| r[m].1.abs()).collect();
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (mean, var) = mean_var(&totals);
        report.loglr_mean.push(mean);
        report.loglr_var.push(var);
        report.lan_residual_quantiles.push([
            quantile_sorted(&res, 0.5),
            quantile_sorted(&res, 0.9),
            quantile_sorted(&res, 0.99),
        ]);
    }
    Ok(report)
}
