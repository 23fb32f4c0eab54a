//! Cox regression on [0,1] with right censoring.
//!
//! Lifetimes have hazard `η(t) e^{θw}`; observations are
//! `T = min(T′, C, 1)` and `Δ = 1{T′ ≤ C, T′ ≤ 1}`. The module covers
//! simulation, Cox's partial likelihood, the piecewise-constant sieve with
//! `β_j = k·1{V_j}` (scores, efficient score, profile), population risk-set
//! curves `s^(r)(t) = E Y(t) W^r e^{θW}` by quadrature, and the exact
//! log-likelihood ratio between the sieve law and the truth.

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::leastfav::{expansion_report, ExpansionReport, FisherBlocks, MomentSource, PathValue, SieveLikelihood};
use crate::quad::{self, CumulativeIntegral};

/// At-risk mass below which population curves are considered truncated.
pub const SUPPORT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WLaw {
    Bernoulli { p: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    Gaussian { mean: f64, sd: f64 },
}

impl WLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            WLaw::Bernoulli { p } if !(0.0..=1.0).contains(p) => {
                Err(Error::InvalidSpec("Bernoulli p must lie in [0,1]".into()))
            }
            WLaw::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::InvalidSpec("discrete law needs matching values and probs".into()));
                }
                let total: f64 = probs.iter().sum();
                if probs.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidSpec("discrete probabilities must sum to 1".into()));
                }
                Ok(())
            }
            WLaw::Gaussian { sd, .. } if !(*sd >= 0.0) => {
                Err(Error::InvalidSpec("Gaussian sd must be nonnegative".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WLaw::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < *p)),
            WLaw::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().unwrap()
            }
            WLaw::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
        }
    }

    /// `E f(W)`; Gaussian laws use Simpson over ±10 sd.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self {
            WLaw::Bernoulli { p } => (1.0 - p) * f(0.0) + p * f(1.0),
            WLaw::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| p * f(*v)).sum(),
            WLaw::Gaussian { mean, sd } => {
                if *sd == 0.0 {
                    return f(*mean);
                }
                let norm = 1.0 / (sd * std::f64::consts::TAU.sqrt());
                quad::simpson(
                    &|w| f(w) * norm * (-0.5 * ((w - mean) / sd).powi(2)).exp(),
                    mean - 10.0 * sd,
                    mean + 10.0 * sd,
                    1024,
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CensorLaw {
    #[default]
    None,
    Uniform {
        lower: f64,
        upper: f64,
    },
    Exponential {
        rate: f64,
    },
}

impl CensorLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            CensorLaw::Uniform { lower, upper } if !(0.0 <= *lower && lower < upper) => {
                Err(Error::InvalidSpec("uniform censoring needs 0 <= lower < upper".into()))
            }
            CensorLaw::Exponential { rate } if !(*rate > 0.0) => {
                Err(Error::InvalidSpec("censoring rate must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            CensorLaw::None => f64::INFINITY,
            CensorLaw::Uniform { lower, upper } => lower + (upper - lower) * rng.random::<f64>(),
            CensorLaw::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
        }
    }

    /// `P(C ≥ t)`.
    pub fn survival(&self, t: f64) -> f64 {
        match self {
            CensorLaw::None => 1.0,
            CensorLaw::Uniform { lower, upper } => ((upper - t) / (upper - lower)).clamp(0.0, 1.0),
            CensorLaw::Exponential { rate } => (-rate * t).exp(),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            CensorLaw::Uniform { lower, upper } => vec![*lower, *upper],
            _ => Vec::new(),
        }
    }
}

/// True law: baseline hazard `η₀`, covariate law, censoring law; horizon 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxDgp {
    pub theta0: f64,
    pub eta0: Curve,
    pub w_law: WLaw,
    #[serde(default)]
    pub censor: CensorLaw,
}

impl CoxDgp {
    /// `θ₀ = ln 2`, `W ~ Bernoulli(½)`, `η₀ ≡ 1`, `C ~ U(0,2)`.
    pub fn standard() -> Self {
        Self {
            theta0: std::f64::consts::LN_2,
            eta0: Curve::constant(1.0),
            w_law: WLaw::Bernoulli { p: 0.5 },
            censor: CensorLaw::Uniform {
                lower: 0.0,
                upper: 2.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.w_law.validate()?;
        self.censor.validate()?;
        let m = self.eta0.min_on_unit();
        if !(m > 0.0) {
            return Err(Error::InvalidHazard(format!("inf eta0 = {m} on [0,1]")));
        }
        Ok(())
    }

    /// Breakpoints of everything integrated over time.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.eta0.breakpoints();
        b.extend(self.censor.breakpoints());
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoxSample {
    pub t: f64,
    #[serde(with = "crate::io::bit")]
    pub delta: bool,
    pub w: f64,
}

/// A cumulative baseline hazard on [0,1] that can be inverted.
pub trait CumulativeHazard {
    fn cum(&self, t: f64) -> f64;
    /// Smallest `t` with `cum(t) = target`, or `None` past `cum(1)`.
    fn invert(&self, target: f64) -> Option<f64>;
}

type BoxedFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// `Λ₀(t) = ∫₀ᵗ η₀`, closed form where the curve allows it.
pub struct Baseline {
    eta0: Curve,
    table: CumulativeIntegral<BoxedFn>,
}

impl std::fmt::Debug for Baseline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Baseline").field("eta0", &self.eta0).finish()
    }
}

impl Baseline {
    pub fn new(eta0: &Curve) -> Self {
        let c = eta0.clone();
        let f: BoxedFn = Box::new(move |t| c.eval(t));
        Self {
            eta0: eta0.clone(),
            table: CumulativeIntegral::new(f, 0.0, 1.0, &eta0.breakpoints(), quad::DEFAULT_PANELS),
        }
    }

    pub fn eta(&self, t: f64) -> f64 {
        self.eta0.eval(t)
    }
}

impl CumulativeHazard for Baseline {
    fn cum(&self, t: f64) -> f64 {
        match self.eta0 {
            Curve::Expansion { .. } => self.table.eval(t),
            _ => self.eta0.integral(0.0, t),
        }
    }

    fn invert(&self, target: f64) -> Option<f64> {
        if target > self.cum(1.0) {
            return None;
        }
        let t = self.table.invert(target)?;
        // Polish against the closed form with Newton steps.
        let mut t = t;
        for _ in 0..3 {
            let d = self.eta(t);
            if d > 0.0 {
                t = (t - (self.cum(t) - target) / d).clamp(0.0, 1.0);
            }
        }
        Some(t)
    }
}

/// Cell index and the length of `[0,t]` inside that cell for `k` equal cells.
#[inline]
pub fn cell_of(k: usize, t: f64) -> (usize, f64) {
    let j = ((t * k as f64).floor().max(0.0) as usize).min(k - 1);
    (j, (t - j as f64 / k as f64).clamp(0.0, 1.0 / k as f64))
}

/// Cox-scale sieve hazard `β(t)ᵗγ = k γ_{j(t)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxSieve {
    k: usize,
    gamma: Vec<f64>,
    prefix: Vec<f64>,
}

impl CoxSieve {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidSpec("k must be at least 1".into()));
        }
        if let Some(j) = gamma.iter().position(|g| !(*g > 0.0)) {
            return Err(Error::InvalidHazard(format!(
                "sieve hazard is {} on cell {j}",
                gamma[j] * gamma.len() as f64
            )));
        }
        let mut prefix = vec![0.0; gamma.len() + 1];
        for j in 0..gamma.len() {
            prefix[j + 1] = prefix[j] + gamma[j];
        }
        Ok(Self {
            k: gamma.len(),
            gamma,
            prefix,
        })
    }

    /// `γ_{0,j} = η₀((j−1)/k)/k`.
    pub fn left_endpoint(eta0: &Curve, k: usize) -> Result<Self> {
        Self::new((0..k).map(|j| eta0.eval(j as f64 / k as f64) / k as f64).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn level(&self, t: f64) -> f64 {
        self.k as f64 * self.gamma[cell_of(self.k, t).0]
    }

    pub fn as_curve(&self) -> Curve {
        Curve::Steps {
            levels: self.gamma.iter().map(|g| g * self.k as f64).collect(),
        }
    }
}

impl CumulativeHazard for CoxSieve {
    fn cum(&self, t: f64) -> f64 {
        let (j, part) = cell_of(self.k, t.clamp(0.0, 1.0));
        self.prefix[j] + self.k as f64 * self.gamma[j] * part
    }

    fn invert(&self, target: f64) -> Option<f64> {
        if target > self.prefix[self.k] {
            return None;
        }
        if target <= 0.0 {
            return Some(0.0);
        }
        let j = match self.prefix.binary_search_by(|x| x.partial_cmp(&target).unwrap()) {
            Ok(i) => return Some(i as f64 / self.k as f64),
            Err(i) => i - 1,
        };
        let kf = self.k as f64;
        Some((j as f64 / kf + (target - self.prefix[j]) / (kf * self.gamma[j])).min(1.0))
    }
}

/// One observation under hazard `dΛ(t)·e^{θw}`.
pub fn draw_observation<H: CumulativeHazard + ?Sized, R: Rng + ?Sized>(
    hazard: &H,
    theta: f64,
    w_law: &WLaw,
    censor: &CensorLaw,
    rng: &mut R,
) -> CoxSample {
    let w = w_law.draw(rng);
    let e: f64 = Exp1.sample(rng);
    let lifetime = hazard.invert(e * (-theta * w).exp()).unwrap_or(f64::INFINITY);
    let c = censor.draw(rng);
    let t = lifetime.min(c).min(1.0);
    let delta = lifetime <= c && lifetime <= 1.0;
    CoxSample {
        t: t.max(f64::MIN_POSITIVE),
        delta,
        w,
    }
}

/// `n` observations from the true law; deterministic given `seed`.
pub fn simulate_cox(dgp: &CoxDgp, n: usize, seed: u64) -> Result<Vec<CoxSample>> {
    if n == 0 {
        return Err(Error::InvalidSpec("n must be at least 1".into()));
    }
    dgp.validate()?;
    let base = Baseline::new(&dgp.eta0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| draw_observation(&base, dgp.theta0, &dgp.w_law, &dgp.censor, &mut rng))
        .collect())
}

/// `n` observations from the sieve law with hazard `β(t)ᵗγ e^{θw}`.
pub fn simulate_cox_sieve(dgp: &CoxDgp, sieve: &CoxSieve, n: usize, seed: u64) -> Vec<CoxSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| draw_observation(sieve, dgp.theta0, &dgp.w_law, &dgp.censor, &mut rng))
        .collect()
}

/// `S_n^(r)(t, θ) = n⁻¹ Σ Y_i(t) W_i^r e^{θW_i}`.
pub fn s_n_k(t: f64, theta: f64, samples: &[CoxSample], r: u32) -> f64 {
    samples
        .iter()
        .filter(|s| s.t >= t)
        .map(|s| s.w.powi(r as i32) * (theta * s.w).exp())
        .sum::<f64>()
        / samples.len() as f64
}

/// `S_n^(0..2)` at the distinct event times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSetCurves {
    pub event_times: Vec<f64>,
    pub s0: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

pub fn risk_set_curves(samples: &[CoxSample], theta: f64) -> RiskSetCurves {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[b].t.partial_cmp(&samples[a].t).unwrap());
    let n = samples.len() as f64;
    let (mut a0, mut a1, mut a2) = (0.0, 0.0, 0.0);
    let mut out = RiskSetCurves {
        event_times: Vec::new(),
        s0: Vec::new(),
        s1: Vec::new(),
        s2: Vec::new(),
    };
    let mut i = 0;
    while i < order.len() {
        let t = samples[order[i]].t;
        let mut has_event = false;
        while i < order.len() && samples[order[i]].t == t {
            let s = &samples[order[i]];
            let e = (theta * s.w).exp();
            a0 += e;
            a1 += s.w * e;
            a2 += s.w * s.w * e;
            has_event |= s.delta;
            i += 1;
        }
        if has_event {
            out.event_times.push(t);
            out.s0.push(a0 / n);
            out.s1.push(a1 / n);
            out.s2.push(a2 / n);
        }
    }
    out.event_times.reverse();
    out.s0.reverse();
    out.s1.reverse();
    out.s2.reverse();
    out
}

/// Newton options for the partial likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOpts {
    pub max_iter: usize,
    pub max_halvings: usize,
    pub start: f64,
    /// Convergence when `|U(θ)| < tol · n`.
    pub tol: f64,
    /// `|θ|` beyond which the iteration is declared divergent.
    pub divergence: f64,
}

impl Default for NewtonOpts {
    fn default() -> Self {
        Self {
            max_iter: 50,
            max_halvings: 30,
            start: 0.0,
            tol: 1e-10,
            divergence: 50.0,
        }
    }
}

/// Partial likelihood with Breslow handling of ties, pre-sorted for
/// repeated evaluation.
#[derive(Debug, Clone)]
pub struct PartialLikelihood {
    /// Groups of tied times in decreasing order: (covariates, event covariates).
    groups: Vec<(Vec<f64>, Vec<f64>)>,
    w_max: f64,
    w_min: f64,
}

impl PartialLikelihood {
    pub fn new(samples: &[CoxSample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("no observations".into()));
        }
        if !samples.iter().any(|s| s.delta) {
            return Err(Error::NoInformation("no events".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| b.t.partial_cmp(&a.t).unwrap());
        let mut groups: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        let mut last = f64::NAN;
        for s in &sorted {
            if s.t != last {
                groups.push((Vec::new(), Vec::new()));
                last = s.t;
            }
            let g = groups.last_mut().unwrap();
            g.0.push(s.w);
            if s.delta {
                g.1.push(s.w);
            }
        }
        let w_max = samples.iter().map(|s| s.w).fold(f64::NEG_INFINITY, f64::max);
        let w_min = samples.iter().map(|s| s.w).fold(f64::INFINITY, f64::min);
        Ok(Self {
            groups,
            w_max,
            w_min,
        })
    }

    /// `(log PL(θ), U(θ), I(θ))` with `I = −d²/dθ² log PL`; the risk sums
    /// are shifted by `max θw` so large `|θ|` does not overflow.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let shift = (theta * self.w_max).max(theta * self.w_min);
        let (mut a0, mut a1, mut a2) = (0.0, 0.0, 0.0);
        let (mut ll, mut u, mut info) = (0.0, 0.0, 0.0);
        for (all, events) in &self.groups {
            for &w in all {
                let e = (theta * w - shift).exp();
                a0 += e;
                a1 += w * e;
                a2 += w * w * e;
            }
            if events.is_empty() {
                continue;
            }
            let mean = a1 / a0;
            let var = (a2 / a0 - mean * mean).max(0.0);
            let log_s0 = a0.ln() + shift;
            for &w in events {
                ll += theta * w - log_s0;
                u += w - mean;
                info += var;
            }
        }
        (ll, u, info)
    }

    pub fn loglik(&self, theta: f64) -> f64 {
        self.eval(theta).0
    }

    /// Direction in which the likelihood is monotone, if every event has
    /// the largest (or smallest) covariate of its risk set.
    fn separation(&self) -> Option<&'static str> {
        let (mut all_max, mut all_min) = (true, true);
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for (all, events) in &self.groups {
            for &w in all {
                hi = hi.max(w);
                lo = lo.min(w);
            }
            for &w in events {
                all_max &= w >= hi;
                all_min &= w <= lo;
            }
        }
        match (all_max, all_min) {
            (true, false) => Some("+infinity"),
            (false, true) => Some("-infinity"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxFit {
    pub theta_hat: f64,
    pub se: f64,
    #[serde(rename = "J_hat")]
    pub j_hat: f64,
    pub iterations: usize,
    pub loglik: f64,
    pub score: f64,
    pub n: usize,
    pub events: usize,
    pub trace: Vec<f64>,
}

/// Maximises the partial likelihood by Newton's method with step halving.
pub fn fit_cox_partial(samples: &[CoxSample], opts: &NewtonOpts) -> Result<CoxFit> {
    let pl = PartialLikelihood::new(samples)?;
    let (_, _, info0) = pl.eval(0.0);
    if !(info0 > 0.0) {
        return Err(Error::NoInformation(
            "covariate is constant on every event risk set".into(),
        ));
    }
    if let Some(direction) = pl.separation() {
        return Err(Error::Separation {
            direction: direction.into(),
        });
    }
    let n = samples.len();
    let tol = opts.tol * n as f64;
    let mut theta = opts.start;
    let mut trace = Vec::new();
    let (mut ll, mut u, mut info) = pl.eval(theta);
    for it in 0..=opts.max_iter {
        trace.push(theta);
        if u.abs() < tol {
            let j_hat = info / n as f64;
            if !(j_hat > 0.0) {
                return Err(Error::DegenerateInformation { value: j_hat });
            }
            return Ok(CoxFit {
                theta_hat: theta,
                se: 1.0 / info.sqrt(),
                j_hat,
                iterations: it,
                loglik: ll,
                score: u,
                n,
                events: samples.iter().filter(|s| s.delta).count(),
                trace,
            });
        }
        if it == opts.max_iter {
            break;
        }
        let mut step = if info > 0.0 { u / info } else { u.signum() };
        let mut next = theta + step;
        let mut cand = pl.eval(next);
        let mut halvings = 0;
        // Near the optimum the likelihood gain falls below its rounding
        // error, so a smaller score also counts as progress.
        while !(cand.0 >= ll || cand.1.abs() < u.abs()) && halvings < opts.max_halvings {
            step *= 0.5;
            next = theta + step;
            cand = pl.eval(next);
            halvings += 1;
        }
        theta = next;
        (ll, u, info) = cand;
        if theta.abs() > opts.divergence {
            return Err(Error::Separation {
                direction: if theta > 0.0 { "+infinity" } else { "-infinity" }.into(),
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        trace,
    })
}

/// `A_n^cox(h) = log PL(θ₀ + h/√n) − log PL(θ₀)` on a grid.
pub fn partial_profile_process(samples: &[CoxSample], theta0: f64, h_grid: &[f64]) -> Result<Vec<f64>> {
    let pl = PartialLikelihood::new(samples)?;
    let rn = (samples.len() as f64).sqrt();
    let base = pl.loglik(theta0);
    Ok(h_grid.iter().map(|h| pl.loglik(theta0 + h / rn) - base).collect())
}

fn check_sieve_k(k: usize, gamma: &DVector<f64>) -> Result<()> {
    if gamma.len() != k {
        return Err(Error::Shape {
            expected: k,
            got: gamma.len(),
        });
    }
    Ok(())
}

/// `Σ_j k c_j |V_j ∩ [0,t]|`.
fn weighted_exposure(c: &[f64], t: f64) -> f64 {
    let k = c.len();
    let (j, part) = cell_of(k, t);
    c[..j].iter().sum::<f64>() + k as f64 * c[j] * part
}

/// `log p_{θ,γ}(x)` of the cox-scale sieve (hazard `k γ_j e^{θw}` on
/// cell `j`), up to terms free of `(θ, γ)`.
pub fn sieve_loglik_cox(sample: &CoxSample, theta: f64, gamma: &DVector<f64>) -> f64 {
    let k = gamma.len();
    let (j, part) = cell_of(k, sample.t);
    let lam = gamma.rows(0, j).sum() + k as f64 * gamma[j] * part;
    let mut v = -(theta * sample.w).exp() * lam;
    if sample.delta {
        v += (k as f64 * gamma[j]).ln() + theta * sample.w;
    }
    v
}

/// Scores `ℓ̇_m = W·M^m(1)` and `v̇_m,j = ∫ β_j/(βᵗγ₀) dM^m` of the
/// cox-scale sieve at `(θ₀, γ₀)`. With `β_j = k·1{V_j}`,
/// `v̇_m,j = Δ·1{T ∈ V_j}/γ_j − e^{θ₀w} k |V_j ∩ [0,T]|`.
pub fn sieve_scores_cox(sample: &CoxSample, gamma0: &DVector<f64>, theta0: f64) -> Result<(f64, DVector<f64>)> {
    let k = gamma0.len();
    if let Some(j) = gamma0.iter().position(|g| !(*g > 0.0)) {
        return Err(Error::InvalidHazard(format!("gamma0[{j}] = {}", gamma0[j])));
    }
    let kf = k as f64;
    let e = (theta0 * sample.w).exp();
    let (jt, part) = cell_of(k, sample.t);
    let d = f64::from(u8::from(sample.delta));
    let m = d - e * weighted_exposure(gamma0.as_slice(), sample.t);
    let vdot = DVector::from_fn(k, |j, _| {
        let expo = if j < jt {
            1.0 / kf
        } else if j == jt {
            part
        } else {
            0.0
        };
        let jump = if j == jt { d / gamma0[j] } else { 0.0 };
        jump - e * kf * expo
    });
    Ok((sample.w * m, vdot))
}

/// `ℓ̃_m = Σ_j ∫_{V_j} (W − r_j) dM^m` with `r_j = ∫_{V_j}s1 / ∫_{V_j}s0`.
pub fn sieve_efficient_score_cox(
    sample: &CoxSample,
    gamma0: &DVector<f64>,
    theta0: f64,
    interval_ratios: &[f64],
) -> Result<f64> {
    let k = gamma0.len();
    if interval_ratios.len() != k {
        return Err(Error::Shape {
            expected: k,
            got: interval_ratios.len(),
        });
    }
    let (jt, part) = cell_of(k, sample.t);
    for j in 0..=jt {
        if !interval_ratios[j].is_finite() {
            return Err(Error::EmptyRisk { cell: j });
        }
    }
    let kf = k as f64;
    let w = sample.w;
    let e = (theta0 * w).exp();
    let mut comp: f64 = (0..jt).map(|j| (w - interval_ratios[j]) * gamma0[j]).sum();
    comp += (w - interval_ratios[jt]) * kf * gamma0[jt] * part;
    let jump = if sample.delta { w - interval_ratios[jt] } else { 0.0 };
    Ok(jump - e * comp)
}

/// Path `t ↦ log p_{t, γ_t}(x)` with `γ_t` already tilted, and its
/// derivatives given `dγ_t/dt = −d`.
pub fn cox_path(t: f64, g_t: &DVector<f64>, d: &DVector<f64>, x: &CoxSample, k: usize) -> Result<PathValue> {
    check_sieve_k(k, g_t)?;
    if g_t.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::InvalidPath { t });
    }
    let (jt, _) = cell_of(k, x.t);
    let e = (t * x.w).exp();
    let lam = weighted_exposure(g_t.as_slice(), x.t);
    let dl = weighted_exposure(d.as_slice(), x.t);
    let (mut value, mut first, mut second) = (0.0, 0.0, 0.0);
    if x.delta {
        let g = g_t[jt];
        value += (k as f64 * g).ln() + t * x.w;
        first += -d[jt] / g + x.w;
        second += -(d[jt] / g).powi(2);
    }
    value -= e * lam;
    first -= e * (x.w * lam - dl);
    second -= e * (x.w * x.w * lam - 2.0 * x.w * dl);
    Ok(PathValue {
        value,
        first,
        second,
    })
}

/// `∫_{V_j} S_n^(r)(u, θ) du` for `r = 0, 1, 2`, each a length-`k` vector.
pub fn empirical_cell_integrals(samples: &[CoxSample], k: usize, theta: f64) -> [Vec<f64>; 3] {
    let kf = k as f64;
    let n = samples.len() as f64;
    let mut out = [vec![0.0; k], vec![0.0; k], vec![0.0; k]];
    // Full cells before j(T) accumulate through a suffix difference.
    let mut full = [vec![0.0; k + 1], vec![0.0; k + 1], vec![0.0; k + 1]];
    for s in samples {
        let (j, part) = cell_of(k, s.t);
        let e = (theta * s.w).exp();
        let m = [e, s.w * e, s.w * s.w * e];
        for r in 0..3 {
            out[r][j] += m[r] * part;
            full[r][j] += m[r];
        }
    }
    for r in 0..3 {
        let mut acc = 0.0;
        for j in (0..k).rev() {
            out[r][j] += acc / kf;
            acc += full[r][j];
        }
        for v in out[r].iter_mut() {
            *v /= n;
        }
    }
    out
}

/// Fisher blocks of the cox-scale sieve from cell integrals of `s^(0..2)`:
/// `i00 = Σ kγ_j ∫s2`, `i01_j = k∫s1`, `i11 = diag((k/γ_j)∫s0)`.
pub fn blocks_from_cells(gamma: &DVector<f64>, cells: &[Vec<f64>; 3]) -> Result<FisherBlocks> {
    let k = gamma.len();
    let kf = k as f64;
    for j in 0..k {
        if !(cells[0][j] > 0.0) {
            return Err(Error::EmptyRisk { cell: j });
        }
    }
    let i00 = (0..k).map(|j| kf * gamma[j] * cells[2][j]).sum();
    let i01 = DVector::from_fn(k, |j, _| kf * cells[1][j]);
    let diag = DVector::from_fn(k, |j, _| kf / gamma[j] * cells[0][j]);
    FisherBlocks::diagonal(i00, i01, diag)
}

/// Ratios `∫_{V_j}s1 / ∫_{V_j}s0` (NaN where the cell carries no risk).
pub fn interval_ratios(cells: &[Vec<f64>; 3]) -> Vec<f64> {
    cells[0]
        .iter()
        .zip(&cells[1])
        .map(|(a, b)| if *a > 0.0 { b / a } else { f64::NAN })
        .collect()
}

/// Sieve log-likelihood of a Cox dataset with closed-form profile
/// `γ̂_j(θ) = D_j / (k Σ_i e^{θw_i}|V_j ∩ [0,T_i]|)`.
#[derive(Debug, Clone)]
pub struct CoxSieveProfile {
    samples: Vec<CoxSample>,
    k: usize,
    events: Vec<usize>,
}

impl CoxSieveProfile {
    pub fn new(samples: &[CoxSample], k: usize) -> Result<Self> {
        if k == 0 || samples.is_empty() {
            return Err(Error::InvalidSpec("need k >= 1 and data".into()));
        }
        let mut events = vec![0usize; k];
        for s in samples.iter().filter(|s| s.delta) {
            events[cell_of(k, s.t).0] += 1;
        }
        if let Some(j) = events.iter().position(|d| *d == 0) {
            return Err(Error::NoInformation(format!("no events in cell {j}")));
        }
        Ok(Self {
            samples: samples.to_vec(),
            k,
            events,
        })
    }

    pub fn samples(&self) -> &[CoxSample] {
        &self.samples
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Plug-in blocks at `(θ, γ)`.
    pub fn sample_blocks(&self, theta: f64, gamma: &DVector<f64>) -> Result<FisherBlocks> {
        blocks_from_cells(gamma, &empirical_cell_integrals(&self.samples, self.k, theta))
    }

    pub fn loglik_obs(&self, theta: f64, gamma: &[f64], prefix: &[f64], s: &CoxSample) -> f64 {
        let (j, part) = cell_of(self.k, s.t);
        let kf = self.k as f64;
        let lam = prefix[j] + kf * gamma[j] * part;
        let mut v = -(theta * s.w).exp() * lam;
        if s.delta {
            v += (kf * gamma[j]).ln() + theta * s.w;
        }
        v
    }
}

impl SieveLikelihood for CoxSieveProfile {
    fn n(&self) -> usize {
        self.samples.len()
    }

    fn profile_gamma(&self, theta: f64) -> Result<DVector<f64>> {
        let cells = empirical_cell_integrals(&self.samples, self.k, theta);
        let n = self.samples.len() as f64;
        let kf = self.k as f64;
        Ok(DVector::from_fn(self.k, |j, _| self.events[j] as f64 / (kf * n * cells[0][j])))
    }

    fn loglik(&self, theta: f64, gamma: &DVector<f64>) -> Result<f64> {
        check_sieve_k(self.k, gamma)?;
        if gamma.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::InvalidPath { t: theta });
        }
        let mut prefix = vec![0.0; self.k + 1];
        for j in 0..self.k {
            prefix[j + 1] = prefix[j] + gamma[j];
        }
        Ok(self
            .samples
            .iter()
            .map(|s| self.loglik_obs(theta, gamma.as_slice(), &prefix, s))
            .sum())
    }
}

/// Expansion report of the sieve profile at `θ₀`, with blocks and
/// efficient scores plugged in from the data at `(θ₀, γ̂(θ₀))`.
pub fn cox_sieve_expansion(profile: &CoxSieveProfile, theta0: f64, h_grid: &[f64]) -> Result<ExpansionReport> {
    let gamma = profile.profile_gamma(theta0)?;
    let cells = empirical_cell_integrals(profile.samples(), profile.k(), theta0);
    let blocks = blocks_from_cells(&gamma, &cells)?;
    let ratios = interval_ratios(&cells);
    let scores = profile
        .samples()
        .iter()
        .map(|s| sieve_efficient_score_cox(s, &gamma, theta0, &ratios))
        .collect::<Result<Vec<_>>>()?;
    expansion_report(profile, theta0, h_grid, &blocks, &scores)
}

/// `A_n^cox` against `h·n^{-1/2}Σℓ̃ − ½h²J` with the population `ℓ̃` and
/// `J`. No sandwich bounds: the partial likelihood is not a sieve profile.
pub fn cox_partial_expansion(samples: &[CoxSample], pop: &CoxPopulation, h_grid: &[f64]) -> Result<ExpansionReport> {
    let a = partial_profile_process(samples, pop.dgp.theta0, h_grid)?;
    let n = samples.len();
    let s = samples.iter().map(|x| pop.efficient_score(x)).sum::<f64>() / (n as f64).sqrt();
    Ok(ExpansionReport::from_values(h_grid.to_vec(), a, s, pop.j, n))
}

/// Population `s^(r)(t) = S_C(t) E[W^r e^{θW} exp(−Λ(t) e^{θW})]` for a
/// given value `Λ(t)` of the cumulative baseline hazard.
pub fn population_s(dgp: &CoxDgp, t: f64, lambda: f64, r: u32) -> f64 {
    let sc = dgp.censor.survival(t);
    if sc == 0.0 {
        return 0.0;
    }
    let th = dgp.theta0;
    sc * dgp.w_law.expect(|w| {
        let e = (th * w).exp();
        w.powi(r as i32) * e * (-lambda * e).exp()
    })
}

/// Efficient information and the curve `v(t) = s2/s0 − (s1/s0)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxInfo {
    #[serde(rename = "J")]
    pub j: f64,
    pub t_grid: Vec<f64>,
    pub v: Vec<f64>,
}

/// `J = ∫₀¹ v(t) s^(0)(t) η₀(t) dt` under the true law.
pub fn efficient_info_cox(dgp: &CoxDgp, quadrature_panels: usize) -> Result<CoxInfo> {
    dgp.validate()?;
    let base = Baseline::new(&dgp.eta0);
    let panels = quadrature_panels.max(16);
    let mut t_grid = Vec::with_capacity(panels + 1);
    let mut v = Vec::with_capacity(panels + 1);
    for i in 0..=panels {
        let t = i as f64 / panels as f64;
        let lam = base.cum(t);
        let s0 = population_s(dgp, t, lam, 0);
        if s0 < SUPPORT_FLOOR {
            return Err(Error::SupportTruncation { t, value: s0 });
        }
        let e = population_s(dgp, t, lam, 1) / s0;
        t_grid.push(t);
        v.push((population_s(dgp, t, lam, 2) / s0 - e * e).max(0.0));
    }
    let integrand = |t: f64| {
        let lam = base.cum(t);
        let s0 = population_s(dgp, t, lam, 0);
        let s1 = population_s(dgp, t, lam, 1);
        let s2 = population_s(dgp, t, lam, 2);
        (s2 - s1 * s1 / s0) * base.eta(t)
    };
    let j = quad::integrate_piecewise(&integrand, 0.0, 1.0, &dgp.breakpoints(), panels);
    let scale = quad::integrate_piecewise(
        &|t| population_s(dgp, t, base.cum(t), 2) * base.eta(t),
        0.0,
        1.0,
        &dgp.breakpoints(),
        panels,
    );
    if !(j > 1e-10 * scale.max(1e-300)) {
        return Err(Error::DegenerateInformation { value: j });
    }
    Ok(CoxInfo { j, t_grid, v })
}

/// Population objects under the true law: `Λ₀`, `e = s1/s0`,
/// `Ψ(t) = ∫₀ᵗ e η₀`, and `J`.
pub struct CoxPopulation {
    pub dgp: CoxDgp,
    pub baseline: Arc<Baseline>,
    psi: CumulativeIntegral<BoxedFn>,
    pub j: f64,
}

impl std::fmt::Debug for CoxPopulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoxPopulation")
            .field("dgp", &self.dgp)
            .field("j", &self.j)
            .finish()
    }
}

impl CoxPopulation {
    pub fn new(dgp: &CoxDgp) -> Result<Self> {
        let info = efficient_info_cox(dgp, quad::DEFAULT_PANELS)?;
        let baseline = Arc::new(Baseline::new(&dgp.eta0));
        let (d, b) = (dgp.clone(), baseline.clone());
        let f: BoxedFn = Box::new(move |t| {
            let lam = b.cum(t);
            population_s(&d, t, lam, 1) / population_s(&d, t, lam, 0) * b.eta(t)
        });
        let psi = CumulativeIntegral::new(f, 0.0, 1.0, &dgp.breakpoints(), 1 << 10);
        Ok(Self {
            dgp: dgp.clone(),
            baseline,
            psi,
            j: info.j,
        })
    }

    /// `e(t) = s1(t)/s0(t)`.
    pub fn ratio(&self, t: f64) -> f64 {
        let lam = self.baseline.cum(t);
        population_s(&self.dgp, t, lam, 1) / population_s(&self.dgp, t, lam, 0)
    }

    /// `ℓ̃(x) = ∫ (w − e) dM = Δ(w − e(T)) − e^{θ₀w}(wΛ₀(T) − Ψ(T))`.
    pub fn efficient_score(&self, s: &CoxSample) -> f64 {
        let e = (self.dgp.theta0 * s.w).exp();
        let comp = s.w * self.baseline.cum(s.t) - self.psi.eval(s.t);
        let jump = if s.delta { s.w - self.ratio(s.t) } else { 0.0 };
        jump - e * comp
    }
}

/// Cell integrals `∫_{V_j} s_m^(r)` under the sieve law with hazard
/// `βᵗγ₀ e^{θ₀w}`.
pub fn sieve_population_cells(dgp: &CoxDgp, sieve: &CoxSieve) -> [Vec<f64>; 3] {
    let k = sieve.k();
    let breaks = dgp.censor.breakpoints();
    let mut out = [vec![0.0; k], vec![0.0; k], vec![0.0; k]];
    for j in 0..k {
        let (a, b) = (j as f64 / k as f64, (j + 1) as f64 / k as f64);
        for (r, o) in out.iter_mut().enumerate() {
            o[j] = quad::integrate_piecewise(
                &|t| population_s(dgp, t, sieve.cum(t), r as u32),
                a,
                b,
                &breaks,
                8,
            );
        }
    }
    out
}

/// Fisher blocks of the cox-scale sieve at `(θ₀, γ₀)`, evaluated under the
/// sieve law or from the data.
pub fn cox_sieve_blocks(
    source: MomentSource,
    dgp: &CoxDgp,
    sieve: &CoxSieve,
    samples: &[CoxSample],
) -> Result<FisherBlocks> {
    let gamma = DVector::from_column_slice(sieve.gamma());
    let cells = match source {
        MomentSource::Population => sieve_population_cells(dgp, sieve),
        MomentSource::Sample => empirical_cell_integrals(samples, sieve.k(), dgp.theta0),
    };
    blocks_from_cells(&gamma, &cells)
}

/// `log dP_m^n/dP_0^n` and its decomposition with `a = (βᵗγ₀ − η₀)/η₀`:
/// linear `Σ ∫ a dM`, quadratic `½ Σ ∫ a² dN`, and remainder
/// `Σ ∫ (log(1+a) − a + a²/2) dN`, so that `total = linear − quadratic + remainder`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoxLogLr {
    pub total: f64,
    pub linear_term: f64,
    pub quadratic_term: f64,
    pub remainder: f64,
    /// `Σ [Δ log(βᵗγ₀/η₀)(T) − e^{θ₀W} ∫₀ᵀ (βᵗγ₀ − η₀)]`.
    pub exact: f64,
    /// `sup_t |a(t)|` over the observed event times.
    pub max_abs_a: f64,
}

impl CoxLogLr {
    /// `|r| ≤ ½(1 + 1/(1−ε))·quadratic` with `ε = sup|a|`.
    pub fn remainder_bound(&self) -> f64 {
        let eps = self.max_abs_a;
        if eps >= 1.0 {
            return f64::INFINITY;
        }
        0.5 * (1.0 + 1.0 / (1.0 - eps)) * self.quadratic_term
    }
}

/// Per-observation exact log ratio `log p_m/p₀`.
pub fn loglr_cox_obs(s: &CoxSample, sieve: &CoxSieve, base: &Baseline, theta0: f64) -> f64 {
    let mut v = -(theta0 * s.w).exp() * (sieve.cum(s.t) - base.cum(s.t));
    if s.delta {
        v += (sieve.level(s.t) / base.eta(s.t)).ln();
    }
    v
}

pub fn loglr_cox(samples: &[CoxSample], sieve: &CoxSieve, eta0: &Curve, theta0: f64) -> Result<CoxLogLr> {
    let m = eta0.min_on_unit();
    if !(m > 0.0) {
        return Err(Error::InvalidHazard(format!("inf eta0 = {m}")));
    }
    let base = Baseline::new(eta0);
    let mut out = CoxLogLr {
        total: 0.0,
        linear_term: 0.0,
        quadratic_term: 0.0,
        remainder: 0.0,
        exact: 0.0,
        max_abs_a: 0.0,
    };
    for s in samples {
        let comp = (theta0 * s.w).exp() * (sieve.cum(s.t) - base.cum(s.t));
        out.linear_term -= comp;
        out.exact -= comp;
        if s.delta {
            let eta = base.eta(s.t);
            let a = (sieve.level(s.t) - eta) / eta;
            out.linear_term += a;
            out.quadratic_term += 0.5 * a * a;
            out.remainder += a.ln_1p() - a + 0.5 * a * a;
            out.exact += (sieve.level(s.t) / eta).ln();
            out.max_abs_a = out.max_abs_a.max(a.abs());
        }
    }
    out.total = out.linear_term - out.quadratic_term + out.remainder;
    Ok(out)
}

pub fn read_cox_csv<R: std::io::Read>(reader: R) -> Result<Vec<CoxSample>> {
    let s: Vec<CoxSample> = crate::io::read_records(reader, &["t", "delta", "w"])?;
    for (i, x) in s.iter().enumerate() {
        if !(x.t > 0.0 && x.t <= 1.0) {
            return Err(Error::Parse {
                line: i + 2,
                message: format!("t = {} outside (0,1]", x.t),
            });
        }
    }
    Ok(s)
}

pub fn write_cox_csv<W: std::io::Write>(writer: W, samples: &[CoxSample]) -> Result<()> {
    crate::io::write_records(writer, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(t: f64, delta: bool, w: f64) -> CoxSample {
        CoxSample { t, delta, w }
    }

    #[test]
    fn two_subject_separation() {
        let s = [obs(0.2, true, 1.0), obs(0.5, true, 0.0)];
        match fit_cox_partial(&s, &NewtonOpts::default()) {
            Err(Error::Separation { direction }) => assert_eq!(direction, "+infinity"),
            other => panic!("{other:?}"),
        }
        let pl = PartialLikelihood::new(&s).unwrap();
        for th in [-1.0f64, 0.0, 2.0] {
            let expect = th - (th.exp() + 1.0).ln();
            assert!((pl.loglik(th) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_covariate_has_no_information() {
        let s = [obs(0.2, true, 1.0), obs(0.5, true, 1.0), obs(0.7, false, 1.0)];
        assert!(matches!(
            fit_cox_partial(&s, &NewtonOpts::default()),
            Err(Error::NoInformation(_))
        ));
        let none = [obs(0.2, false, 1.0)];
        assert!(matches!(
            fit_cox_partial(&none, &NewtonOpts::default()),
            Err(Error::NoInformation(_))
        ));
    }

    #[test]
    fn risk_set_at_zero_and_fraction() {
        let s = [obs(0.2, true, 1.0), obs(0.5, false, -1.0), obs(0.9, true, 2.0)];
        let full: f64 = s.iter().map(|x| (0.5 * x.w).exp()).sum::<f64>() / 3.0;
        assert!((s_n_k(0.0, 0.5, &s, 0) - full).abs() < 1e-15);
        assert!((s_n_k(0.3, 0.0, &s, 0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn left_endpoint_sieve_inverse() {
        let sv = CoxSieve::left_endpoint(&Curve::polynomial(vec![1.0, 1.0]), 4).unwrap();
        for t in [0.0, 0.1, 0.25, 0.6, 1.0] {
            let c = sv.cum(t);
            assert!((sv.invert(c).unwrap() - t).abs() < 1e-14);
        }
        assert!(sv.invert(sv.cum(1.0) + 1e-9).is_none());
    }

    #[test]
    fn baseline_inverse() {
        let b = Baseline::new(&Curve::polynomial(vec![1.0, 1.0]));
        assert!((b.cum(0.5) - 0.625).abs() < 1e-15);
        assert!((b.invert(0.625).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn vdot_support_when_censored_early() {
        let g = DVector::from_element(4, 0.25);
        let (_, v) = sieve_scores_cox(&obs(0.1, false, 0.3), &g, 0.5).unwrap();
        assert!(v[0] != 0.0);
        assert!(v.iter().skip(1).all(|x| *x == 0.0));
    }

    #[test]
    fn jump_of_efficient_score() {
        let g = DVector::from_element(4, 0.25);
        let r = [0.4, 0.45, 0.5, 0.55];
        let x = obs(0.6, true, 1.0);
        let censored = CoxSample { delta: false, ..x };
        let a = sieve_efficient_score_cox(&x, &g, 0.0, &r).unwrap();
        let b = sieve_efficient_score_cox(&censored, &g, 0.0, &r).unwrap();
        assert!((a - b - (1.0 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_covariate_score_vanishes() {
        let g = DVector::from_element(5, 0.2);
        let r = [2.0; 5];
        for x in [obs(0.3, true, 2.0), obs(0.95, false, 2.0)] {
            assert!(sieve_efficient_score_cox(&x, &g, 0.7, &r).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn empty_cell_ratio_rejected() {
        let g = DVector::from_element(3, 1.0 / 3.0);
        let r = [0.5, f64::NAN, 0.5];
        assert!(matches!(
            sieve_efficient_score_cox(&obs(0.5, true, 1.0), &g, 0.0, &r),
            Err(Error::EmptyRisk { cell: 1 })
        ));
    }

    #[test]
    fn loglr_zero_when_hazard_in_sieve() {
        let eta = Curve::Steps {
            levels: vec![1.0, 2.0, 1.5],
        };
        let dgp = CoxDgp {
            eta0: eta.clone(),
            ..CoxDgp::standard()
        };
        let s = simulate_cox(&dgp, 200, 1).unwrap();
        let sv = CoxSieve::left_endpoint(&eta, 3).unwrap();
        let lr = loglr_cox(&s, &sv, &eta, dgp.theta0).unwrap();
        assert!(lr.total.abs() < 1e-12 && lr.exact.abs() < 1e-12);
    }

    #[test]
    fn degenerate_w_information() {
        let dgp = CoxDgp {
            w_law: WLaw::Discrete {
                values: vec![1.0],
                probs: vec![1.0],
            },
            ..CoxDgp::standard()
        };
        assert!(matches!(
            efficient_info_cox(&dgp, 256),
            Err(Error::DegenerateInformation { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let s = vec![obs(0.25, true, 1.0), obs(1.0, false, 0.0)];
        let mut buf = Vec::new();
        write_cox_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,delta,w\n0.25,1,1"));
        assert_eq!(read_cox_csv(buf.as_slice()).unwrap(), s);
    }
}
