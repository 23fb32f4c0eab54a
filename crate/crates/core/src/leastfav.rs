//! Least-favourable submodels and the profile-likelihood expansion.
//!
//! For Fisher blocks `i00, i01, i11` of a sieve model the least-favourable
//! path through `(θ, γ)` is `t ↦ (t, γ + i11⁻¹i10 (θ − t))`. Along it the
//! log-likelihood `l_m(t, θ, γ)` has derivative equal to the efficient score
//! at `t = θ`. The profile process `A(h) = log pl(θ₀ + h/√n) − log pl(θ₀)` is
//! bracketed by two such paths, which is what [`expansion_report`] checks.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where expectations in Fisher blocks and efficient scores come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentSource {
    /// Analytic under the data-generating law (quadrature).
    #[default]
    Population,
    /// Plug-in sample averages.
    Sample,
}

/// Information blocks of a sieve model with scalar `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherBlocks {
    pub i00: f64,
    pub i01: DVector<f64>,
    pub i11: DMatrix<f64>,
    /// Schur complement `i00 − i01 i11⁻¹ i10`.
    #[serde(rename = "J_m")]
    pub j_m: f64,
    tilt: DVector<f64>,
}

impl FisherBlocks {
    pub fn new(i00: f64, i01: DVector<f64>, i11: DMatrix<f64>) -> Result<Self> {
        let k = i01.len();
        if i11.nrows() != k || i11.ncols() != k {
            return Err(Error::Shape {
                expected: k,
                got: i11.nrows(),
            });
        }
        let diagonal = (0..k).all(|i| (0..k).all(|j| i == j || i11[(i, j)] == 0.0));
        let tilt = if diagonal {
            if (0..k).any(|j| !(i11[(j, j)] > 0.0)) {
                return Err(Error::SingularInformation);
            }
            DVector::from_fn(k, |j, _| i01[j] / i11[(j, j)])
        } else {
            let max = i11.diagonal().amax();
            let chol = Cholesky::new(i11.clone()).ok_or(Error::SingularInformation)?;
            let min_pivot = chol.l().diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b * b));
            if !(min_pivot > 1e-14 * max) {
                return Err(Error::SingularInformation);
            }
            chol.solve(&i01)
        };
        let j_m = i00 - i01.dot(&tilt);
        Ok(Self {
            i00,
            i01,
            i11,
            j_m,
            tilt,
        })
    }

    /// Blocks with diagonal `i11`, given by its diagonal.
    pub fn diagonal(i00: f64, i01: DVector<f64>, i11_diag: DVector<f64>) -> Result<Self> {
        Self::new(i00, i01, DMatrix::from_diagonal(&i11_diag))
    }

    pub fn k(&self) -> usize {
        self.i01.len()
    }

    /// Least-favourable direction `i11⁻¹ i10`.
    pub fn tilt(&self) -> &DVector<f64> {
        &self.tilt
    }

    /// Rejects a nonpositive Schur complement.
    pub fn require_positive(&self) -> Result<()> {
        if self.j_m > 1e-12 * self.i00.abs().max(1e-300) {
            Ok(())
        } else {
            Err(Error::DegenerateInformation { value: self.j_m })
        }
    }
}

/// `γ_t^sub(θ, γ) = γ + i11⁻¹ i10 (θ − t)`.
pub fn gamma_sub(t: f64, theta: f64, gamma: &DVector<f64>, blocks: &FisherBlocks) -> Result<DVector<f64>> {
    if gamma.len() != blocks.k() {
        return Err(Error::Shape {
            expected: blocks.k(),
            got: gamma.len(),
        });
    }
    Ok(gamma + blocks.tilt() * (theta - t))
}

/// `l_m` and its first two `t`-derivatives at one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathValue {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// One observation of either model.
#[derive(Debug, Clone, Copy)]
pub enum Observation<'a> {
    Plm(&'a crate::plm::PlmSample),
    Cox(&'a crate::cox::CoxSample),
}

/// Model context for [`l_m_curve`].
#[derive(Debug, Clone, Copy)]
pub enum PathModel<'a> {
    Plm {
        sieve: &'a crate::basis::Sieve,
        sigma: f64,
    },
    /// Cox-scale cells on [0,1].
    Cox { k: usize },
}

/// `t ↦ log p_{t, γ_t^sub(θ,γ)}(x)` with derivatives. The PLM value drops
/// the additive constant `−½ log(2πσ²)`.
pub fn l_m_curve(
    t: f64,
    theta: f64,
    gamma: &DVector<f64>,
    obs: Observation<'_>,
    model: PathModel<'_>,
    blocks: &FisherBlocks,
) -> Result<PathValue> {
    let g_t = gamma_sub(t, theta, gamma, blocks)?;
    let d = blocks.tilt();
    match (obs, model) {
        (Observation::Plm(x), PathModel::Plm { sieve, sigma }) => {
            let beta = sieve.eval(x.z)?;
            let r = x.y - x.w * t - beta.dot(&g_t);
            let a = x.w - beta.dot(d);
            let s2 = sigma * sigma;
            Ok(PathValue {
                value: -r * r / (2.0 * s2),
                first: r * a / s2,
                second: -a * a / s2,
            })
        }
        (Observation::Cox(x), PathModel::Cox { k }) => {
            crate::cox::cox_path(t, &g_t, d, x, k)
        }
        _ => Err(Error::InvalidSpec("observation does not match the model".into())),
    }
}

/// Sum of sieve log-likelihoods over a dataset and its profile in `γ`.
pub trait SieveLikelihood {
    fn n(&self) -> usize;

    /// `γ̂(θ) = argmax_γ L(θ, γ)`.
    fn profile_gamma(&self, theta: f64) -> Result<DVector<f64>>;

    /// `Σ_i log p_{θ,γ}(X_i)`, up to a constant not depending on `(θ, γ)`.
    fn loglik(&self, theta: f64, gamma: &DVector<f64>) -> Result<f64>;

    /// `log pl(θ_b) − log pl(θ_a)`.
    fn profile_diff(&self, theta_a: f64, theta_b: f64) -> Result<f64> {
        let a = self.loglik(theta_a, &self.profile_gamma(theta_a)?)?;
        let b = self.loglik(theta_b, &self.profile_gamma(theta_b)?)?;
        Ok(b - a)
    }
}

pub const DEFAULT_H_GRID: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

const SANDWICH_SLACK: f64 = 1e-10;
const CONCAVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub h_grid: Vec<f64>,
    #[serde(rename = "A_values")]
    pub a_values: Vec<f64>,
    pub lan_prediction: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `None` when the process is not a sieve profile (Cox partial likelihood).
    pub sandwich_lower_ok: Option<bool>,
    pub sandwich_upper_ok: Option<bool>,
    /// Smallest slack over both inequalities, on the `n⁻¹` scale.
    pub sandwich_min_slack: Option<f64>,
    pub concave_ok: bool,
    /// Largest second divided difference of `A` over the grid with `h = 0`.
    pub max_second_difference: f64,
    pub max_abs_residual: f64,
    pub score_sum_scaled: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub n: usize,
}

impl ExpansionReport {
    /// Builds a report from `A(h)` values, `n^{-1/2} Σ ℓ̃` and the
    /// information used in the prediction `h·S − ½h²J`.
    pub fn from_values(
        h_grid: Vec<f64>,
        a_values: Vec<f64>,
        score_sum_scaled: f64,
        j: f64,
        n: usize,
    ) -> Self {
        let lan_prediction: Vec<f64> = h_grid
            .iter()
            .map(|h| h * score_sum_scaled - 0.5 * h * h * j)
            .collect();
        let residuals: Vec<f64> = a_values
            .iter()
            .zip(&lan_prediction)
            .map(|(a, p)| a - p)
            .collect();
        let max_second_difference = max_second_divided_difference(&h_grid, &a_values);
        Self {
            concave_ok: max_second_difference <= CONCAVITY_TOL,
            max_abs_residual: residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
            h_grid,
            a_values,
            lan_prediction,
            residuals,
            sandwich_lower_ok: None,
            sandwich_upper_ok: None,
            sandwich_min_slack: None,
            max_second_difference,
            score_sum_scaled,
            j,
            n,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,A,prediction,residual\n");
        for i in 0..self.h_grid.len() {
            s.push_str(&format!(
                "{:?},{:?},{:?},{:?}\n",
                self.h_grid[i], self.a_values[i], self.lan_prediction[i], self.residuals[i]
            ));
        }
        s
    }
}

/// Second divided differences of `f` on the grid augmented with `(0, 0)`,
/// i.e. `2·[slope_right − slope_left]/(h_{i+1} − h_{i−1})`; concave data
/// gives values `≤ 0`.
pub fn max_second_divided_difference(h: &[f64], f: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = h.iter().copied().zip(f.iter().copied()).collect();
    if !h.contains(&0.0) {
        pts.push((0.0, 0.0));
    }
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pts.windows(3)
        .map(|w| {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            2.0 * (s2 - s1) / (w[2].0 - w[0].0)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Profile process `A(h)` at `θ₀ + h/√n`, the LAN prediction from supplied
/// efficient-score values and `J_m` from `blocks`, and the two sandwich
/// bounds built from least-favourable paths with direction `blocks.tilt()`.
pub fn expansion_report<M: SieveLikelihood + ?Sized>(
    model: &M,
    theta0: f64,
    h_grid: &[f64],
    blocks: &FisherBlocks,
    effscore_values: &[f64],
) -> Result<ExpansionReport> {
    let n = model.n();
    if effscore_values.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: effscore_values.len(),
        });
    }
    let rn = (n as f64).sqrt();
    let inner = |h: f64, e: Error| Error::Inner {
        h,
        source: Box::new(e),
    };
    let g0 = model.profile_gamma(theta0).map_err(|e| inner(0.0, e))?;
    let l00 = model.loglik(theta0, &g0).map_err(|e| inner(0.0, e))?;
    let mut a_values = Vec::with_capacity(h_grid.len());
    let mut lower_ok = true;
    let mut upper_ok = true;
    let mut min_slack = f64::INFINITY;
    for &h in h_grid {
        let th = theta0 + h / rn;
        let step = || -> Result<(f64, f64, f64)> {
            let a = model.profile_diff(theta0, th)?;
            let gh = model.profile_gamma(th)?;
            let lower = model.loglik(th, &gamma_sub(th, theta0, &g0, blocks)?)? - l00;
            let upper =
                model.loglik(th, &gh)? - model.loglik(theta0, &gamma_sub(theta0, th, &gh, blocks)?)?;
            Ok((a, lower, upper))
        };
        let (a, lower, upper) = step().map_err(|e| inner(h, e))?;
        let nf = n as f64;
        let s_lo = (a - lower) / nf;
        let s_hi = (upper - a) / nf;
        lower_ok &= s_lo >= -SANDWICH_SLACK;
        upper_ok &= s_hi >= -SANDWICH_SLACK;
        min_slack = min_slack.min(s_lo).min(s_hi);
        a_values.push(a);
    }
    let score_sum = effscore_values.iter().sum::<f64>() / rn;
    let mut report = ExpansionReport::from_values(h_grid.to_vec(), a_values, score_sum, blocks.j_m, n);
    report.sandwich_lower_ok = Some(lower_ok);
    report.sandwich_upper_ok = Some(upper_ok);
    report.sandwich_min_slack = Some(min_slack);
    Ok(report)
}
