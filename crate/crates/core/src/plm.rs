//! Partially linear model `Y = η₀(Z) + θ₀W + ε`, `ε ~ N(0, σ²)`.
//!
//! Fitting partials the sieve out of `W` and `Y` by least squares, which
//! makes the profile log-likelihood an exact quadratic in `θ`.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::{check_rank, BasisMatrix, Measure, Sieve};
use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::leastfav::{expansion_report, ExpansionReport, FisherBlocks, MomentSource, SieveLikelihood};
use crate::quad;

const COLLINEAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZLaw {
    #[default]
    Uniform,
}

/// True law of `(W, Y, Z)`: `Z ~ U(0,1)`, `W = b₀(Z) + ν` with
/// `ν ~ N(0, w_noise_sd²)`, `Y = η₀(Z) + θ₀W + ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlmDgp {
    pub theta0: f64,
    pub eta0: Curve,
    pub b0: Curve,
    pub sigma: f64,
    pub w_noise_sd: f64,
    #[serde(default)]
    pub z_law: ZLaw,
}

impl PlmDgp {
    /// `Z ~ U(0,1)`, `b₀ = sin(2πz)`, `W = b₀(Z) + N(0,1)`, `η₀ = z²`,
    /// `σ = 1`, `θ₀ = 1`; here `J = 1`.
    pub fn standard() -> Self {
        Self {
            theta0: 1.0,
            eta0: Curve::polynomial(vec![0.0, 0.0, 1.0]),
            b0: Curve::sine(1.0, 1.0),
            sigma: 1.0,
            w_noise_sd: 1.0,
            z_law: ZLaw::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidSpec("sigma must be positive".into()));
        }
        if !(self.w_noise_sd > 0.0) {
            return Err(Error::InvalidSpec("w_noise_sd must be positive".into()));
        }
        Ok(())
    }

    /// `ε = y − η₀(z) − θ₀w`.
    pub fn noise(&self, s: &PlmSample) -> f64 {
        s.y - self.eta0.eval(s.z) - self.theta0 * s.w
    }

    /// `E W² = ‖b₀‖² + w_noise_sd²`.
    pub fn second_moment_w(&self) -> f64 {
        self.b0_norm_sq() + self.w_noise_sd * self.w_noise_sd
    }

    pub fn b0_norm_sq(&self) -> f64 {
        quad::integrate_piecewise(
            &|z| self.b0.eval(z).powi(2),
            0.0,
            1.0,
            &self.b0.breakpoints(),
            quad::DEFAULT_PANELS,
        )
    }

    /// Limit efficient score `σ⁻²(w − b₀(z))(y − η₀(z) − θ₀w)`.
    pub fn efficient_score(&self, s: &PlmSample) -> f64 {
        (s.w - self.b0.eval(s.z)) * self.noise(s) / (self.sigma * self.sigma)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PlmSample {
        let z: f64 = rng.random();
        let nu: f64 = StandardNormal.sample(rng);
        let eps: f64 = StandardNormal.sample(rng);
        let w = self.b0.eval(z) + self.w_noise_sd * nu;
        PlmSample {
            w,
            y: self.eta0.eval(z) + self.theta0 * w + self.sigma * eps,
            z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlmSample {
    pub w: f64,
    pub y: f64,
    pub z: f64,
}

/// Draws `n` observations; deterministic given `seed`. `σ = 0` is accepted
/// here for noiseless test data.
pub fn simulate_plm(dgp: &PlmDgp, n: usize, seed: u64) -> Result<Vec<PlmSample>> {
    if n == 0 {
        return Err(Error::InvalidSpec("n must be at least 1".into()));
    }
    if !(dgp.sigma >= 0.0) || !(dgp.w_noise_sd >= 0.0) {
        return Err(Error::InvalidSpec("scales must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dgp.draw(&mut rng)).collect())
}

/// `W − W̆` and `Y − Y̆` after least-squares projection on the sieve, with
/// the projection coefficients.
#[derive(Debug, Clone)]
pub struct Partialled {
    pub w_res: Vec<f64>,
    pub y_res: Vec<f64>,
    /// `B⁻¹ n⁻¹ Σ β W`.
    pub coef_w: DVector<f64>,
    /// `B⁻¹ n⁻¹ Σ β Y`.
    pub coef_y: DVector<f64>,
    pub sum_w_sq: f64,
}

pub fn partial_out(samples: &[PlmSample], basis: &BasisMatrix) -> Result<Partialled> {
    let n = samples.len();
    if basis.n() != n {
        return Err(Error::Shape {
            expected: n,
            got: basis.n(),
        });
    }
    let k = basis.k();
    if n <= k {
        return Err(Error::InvalidSpec(format!("need n > k (n = {n}, k = {k})")));
    }
    let x = &basis.values;
    let b = x.transpose() * x / n as f64;
    check_rank(&b)?;
    let chol = Cholesky::new(b).ok_or(Error::RankDeficient {
        index: 0,
        ratio: 0.0,
    })?;
    let w = DVector::from_iterator(n, samples.iter().map(|s| s.w));
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.y));
    let coef_w = chol.solve(&(x.transpose() * &w / n as f64));
    let coef_y = chol.solve(&(x.transpose() * &y / n as f64));
    let w_res = (&w - x * &coef_w).iter().copied().collect();
    let y_res = (&y - x * &coef_y).iter().copied().collect();
    Ok(Partialled {
        w_res,
        y_res,
        coef_w,
        coef_y,
        sum_w_sq: w.norm_squared(),
    })
}

impl Partialled {
    pub fn sxx(&self) -> f64 {
        self.w_res.iter().map(|v| v * v).sum()
    }

    /// Closed-form maximiser `Σ(W−W̆)(Y−Y̆) / Σ(W−W̆)²`.
    pub fn theta_hat(&self) -> Result<f64> {
        let sxx = self.sxx();
        if sxx < COLLINEAR_TOL * self.sum_w_sq {
            return Err(Error::Collinear {
                ratio: sxx / self.sum_w_sq,
            });
        }
        let sxy: f64 = self.w_res.iter().zip(&self.y_res).map(|(a, b)| a * b).sum();
        Ok(sxy / sxx)
    }

    pub fn rss(&self, theta: f64) -> f64 {
        self.w_res
            .iter()
            .zip(&self.y_res)
            .map(|(w, y)| (y - theta * w).powi(2))
            .sum()
    }

    /// `γ̂(θ) = B⁻¹ n⁻¹ Σ β (Y − θW)`.
    pub fn gamma(&self, theta: f64) -> DVector<f64> {
        &self.coef_y - &self.coef_w * theta
    }

    pub fn profile_loglik(&self, theta: f64, sigma: f64) -> f64 {
        -self.rss(theta) / (2.0 * sigma * sigma)
    }

    /// `pl(θ_b) − pl(θ_a)` expanded so that no large sums cancel.
    pub fn profile_diff(&self, theta_a: f64, theta_b: f64, sigma: f64) -> f64 {
        let d = theta_b - theta_a;
        self.w_res
            .iter()
            .zip(&self.y_res)
            .map(|(w, y)| d * w * (2.0 * (y - theta_a * w) - d * w))
            .sum::<f64>()
            / (2.0 * sigma * sigma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlmFit {
    pub theta_hat: f64,
    pub gamma_hat: Vec<f64>,
    pub se: f64,
    #[serde(rename = "J_m_hat")]
    pub j_m_hat: f64,
    pub profile_loglik_at_theta_hat: f64,
    pub sigma_used: f64,
    pub sigma_estimated: bool,
    pub n: usize,
    pub k: usize,
}

/// Sieve profile MLE; `σ̂² = RSS/(n − k − 1)` when `sigma` is `None`.
pub fn fit_plm(samples: &[PlmSample], basis: &BasisMatrix, sigma: Option<f64>) -> Result<PlmFit> {
    let p = partial_out(samples, basis)?;
    let theta_hat = p.theta_hat()?;
    let n = samples.len();
    let k = basis.k();
    let rss = p.rss(theta_hat);
    let (sigma_used, sigma_estimated) = match sigma {
        Some(s) if s > 0.0 => (s, false),
        Some(_) => return Err(Error::InvalidSpec("sigma must be positive".into())),
        None => {
            if n < k + 2 {
                return Err(Error::InvalidSpec("need n > k + 1 to estimate sigma".into()));
            }
            ((rss / (n - k - 1) as f64).sqrt(), true)
        }
    };
    if !(sigma_used > 0.0) {
        return Err(Error::DegenerateInformation { value: sigma_used });
    }
    let j_m_hat = p.sxx() / (n as f64 * sigma_used * sigma_used);
    Ok(PlmFit {
        theta_hat,
        gamma_hat: p.gamma(theta_hat).iter().copied().collect(),
        se: 1.0 / (n as f64 * j_m_hat).sqrt(),
        j_m_hat,
        profile_loglik_at_theta_hat: -rss / (2.0 * sigma_used * sigma_used),
        sigma_used,
        sigma_estimated,
        n,
        k,
    })
}

/// `−(2σ²)⁻¹ Σ (Y − Y̆ − θ(W − W̆))²`.
pub fn profile_loglik_plm(
    theta: f64,
    samples: &[PlmSample],
    basis: &BasisMatrix,
    sigma: f64,
) -> Result<f64> {
    let p = partial_out(samples, basis)?;
    p.theta_hat()?;
    Ok(p.profile_loglik(theta, sigma))
}

/// `σ⁻²(w − β(z)ᵗd)(y − β(z)ᵗγ − θw)`, where `d = i₁₁⁻¹i₁₀` is the
/// least-favourable direction. For an orthonormal sieve under the law of
/// `Z`, `d = E[Wβ(Z)]`.
pub fn efficient_score_plm_m(
    sample: &PlmSample,
    theta: f64,
    gamma: &DVector<f64>,
    sieve: &Sieve,
    direction: &DVector<f64>,
    sigma: f64,
) -> Result<f64> {
    let k = sieve.dim();
    for v in [gamma, direction] {
        if v.len() != k {
            return Err(Error::Shape {
                expected: k,
                got: v.len(),
            });
        }
    }
    let beta = sieve.eval(sample.z)?;
    let r = sample.y - beta.dot(gamma) - theta * sample.w;
    Ok((sample.w - beta.dot(direction)) * r / (sigma * sigma))
}

/// `log p_{θ,γ}(x)` of the sieve model without `−½ log(2πσ²)`.
pub fn sieve_loglik_plm(sample: &PlmSample, theta: f64, gamma: &DVector<f64>, sieve: &Sieve, sigma: f64) -> Result<f64> {
    let r = sample.y - sieve.eval(sample.z)?.dot(gamma) - theta * sample.w;
    Ok(-r * r / (2.0 * sigma * sigma))
}

/// Scores `ℓ̇_m = σ⁻² w r` and `v̇_m = σ⁻² β(z) r` with `r = y − β(z)ᵗγ − θw`.
pub fn sieve_scores_plm(
    sample: &PlmSample,
    theta: f64,
    gamma: &DVector<f64>,
    sieve: &Sieve,
    sigma: f64,
) -> Result<(f64, DVector<f64>)> {
    let beta = sieve.eval(sample.z)?;
    let s2 = sigma * sigma;
    let r = (sample.y - beta.dot(gamma) - theta * sample.w) / s2;
    Ok((sample.w * r, beta * r))
}

/// `E[Wβ(Z)] = ∫ β b₀` under the law of `Z`.
pub fn wbeta_moments(dgp: &PlmDgp, sieve: &Sieve) -> DVector<f64> {
    sieve.inner_products(&|z| dgp.b0.eval(z), &Measure::UniformZ)
}

/// `n⁻¹ Σ W β(Z)`.
pub fn wbeta_sample(samples: &[PlmSample], sieve: &Sieve) -> DVector<f64> {
    let k = sieve.dim();
    let mut acc = DVector::zeros(k);
    let mut row = vec![0.0; k];
    for s in samples {
        sieve.eval_into(s.z, &mut row);
        for j in 0..k {
            acc[j] += s.w * row[j];
        }
    }
    acc / samples.len() as f64
}

/// `J = σ⁻²(EW² − ‖b₀‖²)` without a sieve; with one,
/// `J_m = σ⁻²(EW² − cᵗG⁻¹c)` where `c = E[Wβ]` and `G` is the sieve Gram
/// matrix, which is `σ⁻²(EW² − Σ⟨β_j, b₀⟩²)` for an orthonormal sieve.
pub fn efficient_info_plm(dgp: &PlmDgp, sieve: Option<&Sieve>) -> Result<f64> {
    dgp.validate()?;
    let s2 = dgp.sigma * dgp.sigma;
    let ew2 = dgp.second_moment_w();
    let explained = match sieve {
        None => dgp.b0_norm_sq(),
        Some(s) => {
            let c = wbeta_moments(dgp, s);
            let g = s.effective_gram();
            let chol = Cholesky::new(g).ok_or(Error::SingularInformation)?;
            c.dot(&chol.solve(&c))
        }
    };
    let j = (ew2 - explained) / s2;
    if !(j > COLLINEAR_TOL * ew2 / s2) {
        return Err(Error::DegenerateInformation { value: j });
    }
    Ok(j)
}

/// Parseval gap `‖b₀‖² − cᵗG⁻¹c`, computed without forming `J_m − J` by
/// subtraction of two large numbers.
pub fn parseval_gap(dgp: &PlmDgp, sieve: &Sieve) -> Result<f64> {
    let c = wbeta_moments(dgp, sieve);
    let chol = Cholesky::new(sieve.effective_gram()).ok_or(Error::SingularInformation)?;
    Ok(dgp.b0_norm_sq() - c.dot(&chol.solve(&c)))
}

/// Fisher blocks of the sieve model at `(θ₀, γ₀)`:
/// `i00 = σ⁻²EW²`, `i01 = σ⁻²E[Wβ]`, `i11 = σ⁻²E[ββᵗ]`.
pub fn plm_blocks(
    source: MomentSource,
    dgp: &PlmDgp,
    sieve: &Sieve,
    samples: &[PlmSample],
    sigma: f64,
) -> Result<FisherBlocks> {
    let s2 = sigma * sigma;
    match source {
        MomentSource::Population => FisherBlocks::new(
            dgp.second_moment_w() / s2,
            wbeta_moments(dgp, sieve) / s2,
            sieve.effective_gram() / s2,
        ),
        MomentSource::Sample => plm_sample_blocks(samples, sieve, sigma),
    }
}

pub fn plm_sample_blocks(samples: &[PlmSample], sieve: &Sieve, sigma: f64) -> Result<FisherBlocks> {
    if samples.is_empty() {
        return Err(Error::Empty("no samples".into()));
    }
    let s2 = sigma * sigma;
    let n = samples.len() as f64;
    let x = sieve.design(&samples.iter().map(|s| s.z).collect::<Vec<_>>())?;
    let ew2 = samples.iter().map(|s| s.w * s.w).sum::<f64>() / n;
    FisherBlocks::new(
        ew2 / s2,
        wbeta_sample(samples, sieve) / s2,
        x.transpose() * &x / (n * s2),
    )
}

/// Sieve Gaussian likelihood of a dataset, profiled in closed form.
#[derive(Debug, Clone)]
pub struct PlmSieveModel {
    samples: Vec<PlmSample>,
    design: DMatrix<f64>,
    partialled: Partialled,
    sigma: f64,
}

impl PlmSieveModel {
    pub fn new(samples: &[PlmSample], basis: &BasisMatrix, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidSpec("sigma must be positive".into()));
        }
        let partialled = partial_out(samples, basis)?;
        partialled.theta_hat()?;
        Ok(Self {
            samples: samples.to_vec(),
            design: basis.values.clone(),
            partialled,
            sigma,
        })
    }

    pub fn partialled(&self) -> &Partialled {
        &self.partialled
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn samples(&self) -> &[PlmSample] {
        &self.samples
    }

    /// Sample-moment efficient scores `σ⁻²(W − W̆)(Y − β(Z)ᵗγ̂(θ) − θW)`.
    pub fn sample_efficient_scores(&self, theta: f64) -> Vec<f64> {
        let g = self.partialled.gamma(theta);
        let fitted = &self.design * &g;
        let s2 = self.sigma * self.sigma;
        self.samples
            .iter()
            .zip(&self.partialled.w_res)
            .enumerate()
            .map(|(i, (x, wr))| wr * (x.y - fitted[i] - theta * x.w) / s2)
            .collect()
    }
}

impl SieveLikelihood for PlmSieveModel {
    fn n(&self) -> usize {
        self.samples.len()
    }

    fn profile_gamma(&self, theta: f64) -> Result<DVector<f64>> {
        Ok(self.partialled.gamma(theta))
    }

    fn loglik(&self, theta: f64, gamma: &DVector<f64>) -> Result<f64> {
        if gamma.len() != self.design.ncols() {
            return Err(Error::Shape {
                expected: self.design.ncols(),
                got: gamma.len(),
            });
        }
        let fitted = &self.design * gamma;
        let rss: f64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, x)| (x.y - theta * x.w - fitted[i]).powi(2))
            .sum();
        Ok(-rss / (2.0 * self.sigma * self.sigma))
    }

    fn profile_diff(&self, theta_a: f64, theta_b: f64) -> Result<f64> {
        Ok(self.partialled.profile_diff(theta_a, theta_b, self.sigma))
    }
}

/// Expansion report with sample-moment `ℓ̃_m` and `J_m`; the residuals then
/// vanish up to rounding because the Gaussian profile is exactly quadratic.
pub fn plm_expansion(model: &PlmSieveModel, sieve: &Sieve, theta0: f64, h_grid: &[f64]) -> Result<ExpansionReport> {
    let blocks = plm_sample_blocks(model.samples(), sieve, model.sigma())?;
    expansion_report(model, theta0, h_grid, &blocks, &model.sample_efficient_scores(theta0))
}

pub fn read_plm_csv<R: std::io::Read>(reader: R) -> Result<Vec<PlmSample>> {
    crate::io::read_records(reader, &["w", "y", "z"])
}

pub fn write_plm_csv<W: std::io::Write>(writer: W, samples: &[PlmSample]) -> Result<()> {
    crate::io::write_records(writer, samples)
}

/// `n × k` sample design for a sieve, exposed for callers that fit many
/// times on the same covariates.
pub fn design(samples: &[PlmSample], sieve: &Sieve) -> Result<DMatrix<f64>> {
    sieve.design(&samples.iter().map(|s| s.z).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisSpec, Scaling};

    fn uniform_sieve(spec: BasisSpec) -> Sieve {
        Sieve::uniform(spec).unwrap()
    }

    #[test]
    fn noiseless_residual_identity() {
        let mut dgp = PlmDgp::standard();
        dgp.sigma = 0.0;
        let s = simulate_plm(&dgp, 50, 3).unwrap();
        for x in &s {
            assert_eq!(x.y, dgp.eta0.eval(x.z) + dgp.theta0 * x.w);
        }
    }

    #[test]
    fn same_seed_same_data() {
        let dgp = PlmDgp::standard();
        assert_eq!(simulate_plm(&dgp, 20, 9).unwrap(), simulate_plm(&dgp, 20, 9).unwrap());
        assert_ne!(simulate_plm(&dgp, 20, 9).unwrap(), simulate_plm(&dgp, 20, 10).unwrap());
    }

    #[test]
    fn noiseless_fit_is_exact() {
        let mut dgp = PlmDgp::standard();
        dgp.sigma = 0.0;
        dgp.eta0 = Curve::polynomial(vec![0.5, -1.0, 2.0]);
        let s = simulate_plm(&dgp, 200, 1).unwrap();
        let sieve = uniform_sieve(BasisSpec::bspline(6, 3, Scaling::Raw));
        let bm = sieve.basis_matrix(&s.iter().map(|x| x.z).collect::<Vec<_>>()).unwrap();
        let fit = fit_plm(&s, &bm, Some(1.0)).unwrap();
        assert!((fit.theta_hat - dgp.theta0).abs() < 1e-10);
    }

    #[test]
    fn covariate_in_span_is_collinear() {
        let s: Vec<PlmSample> = (0..40)
            .map(|i| {
                let z = (i as f64 + 0.5) / 40.0;
                PlmSample { w: 1.0 + z, y: z, z }
            })
            .collect();
        let sieve = uniform_sieve(BasisSpec::bspline(4, 1, Scaling::Raw));
        let bm = sieve.basis_matrix(&s.iter().map(|x| x.z).collect::<Vec<_>>()).unwrap();
        assert!(matches!(fit_plm(&s, &bm, Some(1.0)), Err(Error::Collinear { .. })));
    }

    #[test]
    fn profile_is_exact_quadratic() {
        let dgp = PlmDgp::standard();
        let s = simulate_plm(&dgp, 300, 4).unwrap();
        let sieve = uniform_sieve(BasisSpec::bspline(6, 3, Scaling::Raw));
        let bm = sieve.basis_matrix(&s.iter().map(|x| x.z).collect::<Vec<_>>()).unwrap();
        let p = partial_out(&s, &bm).unwrap();
        let c = p.sxx();
        let step = 0.01;
        for i in 0..10 {
            let t = 0.9 + i as f64 * step;
            let d2 = p.profile_loglik(t + step, 1.0) - 2.0 * p.profile_loglik(t, 1.0)
                + p.profile_loglik(t - step, 1.0);
            assert!((d2 + c * step * step).abs() < 1e-9);
        }
    }

    #[test]
    fn sigma_does_not_move_argmax() {
        let dgp = PlmDgp::standard();
        let s = simulate_plm(&dgp, 300, 5).unwrap();
        let sieve = uniform_sieve(BasisSpec::bspline(6, 3, Scaling::Raw));
        let bm = sieve.basis_matrix(&s.iter().map(|x| x.z).collect::<Vec<_>>()).unwrap();
        let a = fit_plm(&s, &bm, Some(1.0)).unwrap();
        let b = fit_plm(&s, &bm, Some(3.0)).unwrap();
        let c = fit_plm(&s, &bm, None).unwrap();
        assert_eq!(a.theta_hat, b.theta_hat);
        assert_eq!(a.theta_hat, c.theta_hat);
        assert!(c.sigma_estimated);
        assert!((a.se - 1.0 / (300.0 * a.j_m_hat).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn efficient_score_zero_cases() {
        let sieve = uniform_sieve(BasisSpec::piecewise_constant(4, Scaling::ProbabilityOrthonormal));
        let d = DVector::from_vec(vec![0.3, -0.2, 0.1, 0.5]);
        let g = DVector::from_vec(vec![1.0, 2.0, 0.0, -1.0]);
        let z = 0.6;
        let beta = sieve.eval(z).unwrap();
        let s = PlmSample {
            w: beta.dot(&d),
            y: 4.0,
            z,
        };
        assert_eq!(efficient_score_plm_m(&s, 1.0, &g, &sieve, &d, 1.0).unwrap(), 0.0);
        let s2 = PlmSample {
            w: 0.7,
            y: beta.dot(&g) + 2.0 * 0.7,
            z,
        };
        assert!(efficient_score_plm_m(&s2, 2.0, &g, &sieve, &d, 1.0).unwrap().abs() < 1e-15);
        let short = DVector::zeros(3);
        assert!(matches!(
            efficient_score_plm_m(&s2, 2.0, &short, &sieve, &d, 1.0),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn information_limits() {
        let dgp = PlmDgp::standard();
        assert!((efficient_info_plm(&dgp, None).unwrap() - 1.0).abs() < 1e-10);
        let mut flat = dgp.clone();
        flat.b0 = Curve::constant(0.7);
        flat.w_noise_sd = 1.3;
        let sieve = uniform_sieve(BasisSpec::piecewise_constant(4, Scaling::ProbabilityOrthonormal));
        let jm = efficient_info_plm(&flat, Some(&sieve)).unwrap();
        let j = efficient_info_plm(&flat, None).unwrap();
        assert!((jm - 1.69).abs() < 1e-10 && (j - 1.69).abs() < 1e-10);
    }
}
