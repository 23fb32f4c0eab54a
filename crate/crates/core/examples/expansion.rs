//! Local expansion of the profile log-likelihood around the truth:
//! `A(h)` against `h·S − ½h²J`, plus the sandwich and concavity checks.

use contigsieve::basis::{BasisSpec, Scaling, Sieve};
use contigsieve::cox::{cox_partial_expansion, cox_sieve_expansion, simulate_cox, CoxDgp, CoxPopulation, CoxSieveProfile};
use contigsieve::leastfav::{ExpansionReport, DEFAULT_H_GRID};
use contigsieve::plm::{plm_expansion, simulate_plm, PlmDgp, PlmSieveModel};

fn show(label: &str, r: &ExpansionReport) {
    println!("{label}: J={:.4} concave={} max|res|={:.2e} sandwich slack={:?}", r.j, r.concave_ok, r.max_abs_residual, r.sandwich_min_slack);
    for ((h, a), p) in r.h_grid.iter().zip(&r.a_values).zip(&r.lan_prediction) {
        println!("  h={h:+.1}  A={a:+.5}  prediction={p:+.5}");
    }
}

fn main() -> contigsieve::Result<()> {
    let dgp = PlmDgp::standard();
    let data = simulate_plm(&dgp, 1000, 2)?;
    let sieve = Sieve::uniform(BasisSpec::bspline(8, 3, Scaling::Raw))?;
    let z: Vec<f64> = data.iter().map(|s| s.z).collect();
    let model = PlmSieveModel::new(&data, &sieve.basis_matrix(&z)?, dgp.sigma)?;
    show("plm sieve profile", &plm_expansion(&model, &sieve, dgp.theta0, &DEFAULT_H_GRID)?);

    let cdgp = CoxDgp::standard();
    let cdata = simulate_cox(&cdgp, 1000, 2)?;
    let profile = CoxSieveProfile::new(&cdata, 5)?;
    show("cox sieve profile", &cox_sieve_expansion(&profile, cdgp.theta0, &DEFAULT_H_GRID)?);
    let pop = CoxPopulation::new(&cdgp)?;
    show("cox partial likelihood", &cox_partial_expansion(&cdata, &pop, &DEFAULT_H_GRID)?);
    Ok(())
}
