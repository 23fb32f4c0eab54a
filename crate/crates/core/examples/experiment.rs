//! Monte Carlo efficiency study: variance of `√n(θ̂ − θ₀)` against `J⁻¹`,
//! interval coverage and a normality check, per sample size.

use contigsieve::model::ModelSpec;
use contigsieve::montecarlo::{run_experiment, ExperimentConfig, FitBasis, KRule};

fn main() -> contigsieve::Result<()> {
    for model in ["plm", "cox"] {
        let config = ExperimentConfig {
            model: ModelSpec::standard(model).unwrap(),
            n_grid: vec![250, 1000],
            k_rule: KRule::Default,
            basis: FitBasis::default(),
            known_sigma: false,
            reps: 500,
            master_seed: 2024,
            workers: None,
            outputs: None,
        };
        let out = run_experiment(&config)?;
        for s in &out.summary.per_n {
            println!(
                "{model} n={:5} k={:2} var/J^-1={:.3} coverage={:.3} ks={:.3} ({}) failures={}",
                s.n,
                s.k,
                s.variance_ratio,
                s.coverage_95,
                s.ks_statistic,
                if s.ks_pass { "pass" } else { "fail" },
                s.failures
            );
        }
    }
    Ok(())
}
