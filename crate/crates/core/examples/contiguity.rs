//! Replicated log-likelihood-ratio diagnostics between the truth and the
//! sieve laws over a grid of sieve sizes.

use contigsieve::contiguity::{run_contiguity, ContiguityConfig};
use contigsieve::model::ModelSpec;

fn main() -> contigsieve::Result<()> {
    let config = ContiguityConfig {
        model: ModelSpec::standard("plm").unwrap(),
        n: 2000,
        reps: 200,
        seed: 7,
        k_grid: None,
        mc_draws: 20_000,
        smoothness: 1.0,
        workers: None,
    };
    let report = run_contiguity(&config)?;
    print!("{}", report.to_csv());
    for (k, q) in report.k_values.iter().zip(&report.lan_residual_quantiles) {
        println!("k={k}: |LAN residual| median={:.2e} q90={:.2e} q99={:.2e}", q[0], q[1], q[2]);
    }
    Ok(())
}
