//! Partial-likelihood Newton fit on simulated right-censored data.

use contigsieve::cox::{fit_cox_partial, simulate_cox, CoxDgp, NewtonOpts};

fn main() -> contigsieve::Result<()> {
    let dgp = CoxDgp::standard();
    let data = simulate_cox(&dgp, 2000, 1)?;
    let fit = fit_cox_partial(&data, &NewtonOpts::default())?;
    println!("events={} / n={}", fit.events, fit.n);
    println!("theta_hat={:.4} (true {:.4})  se={:.4}", fit.theta_hat, dgp.theta0, fit.se);
    println!("newton iterations={}  |U|={:.2e}", fit.iterations, fit.score.abs());
    Ok(())
}
