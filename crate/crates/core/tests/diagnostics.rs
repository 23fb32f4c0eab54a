use contigsieve::contiguity::{
    hellinger_sq, jm_convergence_cox, loglr_plm, plm_sieve, rate_check, DensityPair, PlmPair,
};
use contigsieve::cox::CoxDgp;
use contigsieve::curve::Curve;
use contigsieve::plm::{simulate_plm, PlmDgp};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn plm_loglr_matches_gaussian_densities() {
    let dgp = PlmDgp::standard();
    let (sieve, gamma0) = plm_sieve(&dgp, 6).unwrap();
    let data = simulate_plm(&dgp, 400, 12).unwrap();
    let lr = loglr_plm(&data, &sieve, &gamma0, &dgp);
    let normal = statrs::distribution::Normal::new(0.0, dgp.sigma).unwrap();
    use statrs::distribution::Continuous;
    let direct: f64 = data
        .iter()
        .map(|x| {
            let m = x.y - sieve.combine(x.z, &gamma0) - dgp.theta0 * x.w;
            let t = x.y - dgp.eta0.eval(x.z) - dgp.theta0 * x.w;
            normal.ln_pdf(m) - normal.ln_pdf(t)
        })
        .sum();
    assert!((lr.total - direct).abs() < 1e-10, "{} vs {direct}", lr.total);
    let pair = PlmPair { dgp, sieve, gamma0 };
    let per_obs: f64 = data.iter().map(|x| pair.log_ratio(x)).sum();
    assert!((per_obs - direct).abs() < 1e-10);
}

struct Shift(f64);

impl DensityPair for Shift {
    type Obs = f64;
    fn draw_p0(&self, rng: &mut ChaCha8Rng) -> f64 {
        Normal::new(0.0, 1.0).unwrap().sample(rng)
    }
    fn draw_pm(&self, rng: &mut ChaCha8Rng) -> f64 {
        Normal::new(self.0, 1.0).unwrap().sample(rng)
    }
    fn log_ratio(&self, x: &f64) -> f64 {
        self.0 * x - 0.5 * self.0 * self.0
    }
}

#[test]
fn hellinger_of_gaussian_shift() {
    // ∫(√p − √q)² = 2(1 − exp(−δ²/8)).
    let delta = 0.2;
    let exact = 2.0 * (1.0 - (-delta * delta / 8.0f64).exp());
    let est = hellinger_sq(&Shift(delta), 200_000, 4).unwrap();
    assert!((est.value - exact).abs() < 3.0 * est.se, "{} ± {} vs {exact}", est.value, est.se);
    assert_eq!(est.clipped, 0);
}

#[test]
fn cox_sieve_information_approaches_limit() {
    let dgp = CoxDgp {
        eta0: Curve::polynomial(vec![1.0, 1.0]),
        ..CoxDgp::standard()
    };
    let r = jm_convergence_cox(&dgp, &[2, 8, 32, 128]).unwrap();
    let gaps: Vec<f64> = r.j_m_values.iter().map(|j| (j - r.j_limit).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[3] < 1e-3);
}

#[test]
fn rate_flags_follow_threshold() {
    let r = rate_check(10_000, 8, 1.0, 2.0, 0.01, 0.5);
    assert!((r["k2_over_sqrt_n"].magnitude - 0.64).abs() < 1e-12);
    assert!(!r["k2_over_sqrt_n"].pass);
    assert!(!r["sqrt_n_over_k"].pass);
    assert!(r["xi_k_over_sqrt_n"].pass);
}
