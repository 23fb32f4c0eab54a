//! Which sieve-size conditions hold for a given `n` and `k`.

use contigsieve::contiguity::{plm_rate_inputs, plm_sieve, rate_check, DEFAULT_RATE_THRESHOLD};
use contigsieve::plm::PlmDgp;

fn main() -> contigsieve::Result<()> {
    let dgp = PlmDgp::standard();
    let n = 10_000;
    for k in [4, 10, 32, 100] {
        let (sieve, _) = plm_sieve(&dgp, k)?;
        let (xi, a) = plm_rate_inputs(&dgp, &sieve)?;
        println!("k={k}");
        for (name, e) in rate_check(n, k, 1.0, xi, a, DEFAULT_RATE_THRESHOLD) {
            println!("  {name:20} {:10.4} {}", e.magnitude, if e.pass { "ok" } else { "violated" });
        }
    }
    Ok(())
}
