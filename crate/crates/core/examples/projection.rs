//! Projections of a moving target onto nested spans converge to the
//! projection onto the limit span.

use contigsieve::contiguity::{projection_convergence_test, random_nested_instance};

fn main() -> contigsieve::Result<()> {
    let (h, spans, targets) = random_nested_instance(6, 3);
    let report = projection_convergence_test(&h, &spans, &targets)?;
    for (i, d) in report.deviations.iter().enumerate() {
        println!("span {}: deviation {d:.3e}", i + 1);
    }
    println!("decreasing: {}", report.decreasing);
    Ok(())
}
