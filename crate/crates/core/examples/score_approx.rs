//! Monte Carlo estimates of the Hellinger distance and the efficient-score
//! approximation error between the PLM truth and its sieve laws.

use contigsieve::contiguity::{hellinger_sq, plm_sieve, score_approx_err, PlmPair};
use contigsieve::leastfav::MomentSource;
use contigsieve::plm::{efficient_score_plm_m, plm_blocks, PlmDgp, PlmSample};

fn main() -> contigsieve::Result<()> {
    let dgp = PlmDgp::standard();
    for k in [4, 8, 16, 32] {
        let (sieve, gamma0) = plm_sieve(&dgp, k)?;
        let blocks = plm_blocks(MomentSource::Population, &dgp, &sieve, &[], dgp.sigma)?;
        let d = blocks.tilt().clone();
        let pair = PlmPair { dgp: dgp.clone(), sieve: sieve.clone(), gamma0: gamma0.clone() };
        let h = hellinger_sq(&pair, 20_000, 1)?;
        let s = score_approx_err(
            &pair,
            |x: &PlmSample| efficient_score_plm_m(x, dgp.theta0, &gamma0, &sieve, &d, dgp.sigma).unwrap(),
            |x: &PlmSample| dgp.efficient_score(x),
            20_000,
            1,
        )?;
        println!("k={k:2}  hellinger^2={:.3e}  score error={:.3e} ± {:.1e}", h.value, s.value, s.se);
    }
    Ok(())
}
