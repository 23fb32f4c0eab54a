use contigsieve::contiguity::{jm_convergence_cox, jm_convergence_plm};
use contigsieve::cox::CoxDgp;
use contigsieve::curve::Curve;
use contigsieve::plm::PlmDgp;

fn main() -> contigsieve::Result<()> {
    let grid = [2, 4, 8, 16, 32, 64, 128];
    let plm = jm_convergence_plm(&PlmDgp::standard(), &grid)?;
    let cox_dgp = CoxDgp {
        eta0: Curve::polynomial(vec![1.0, 1.0]),
        ..CoxDgp::standard()
    };
    let cox = jm_convergence_cox(&cox_dgp, &grid)?;
    println!("plm J={:.6}  cox J={:.6}", plm.j_limit, cox.j_limit);
    for i in 0..grid.len() {
        println!(
            "k={:3}  plm J_m={:.6}  cox J_m={:.6}",
            grid[i], plm.j_m_values[i], cox.j_m_values[i]
        );
    }
    Ok(())
}
