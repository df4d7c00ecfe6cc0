//! Response-driven principal balances on simulated data with 20 marker parts.
//!
//! Run with `cargo run --release --example pls_principal_balances`.

use plspb::pb;
use plspb::simgen::{self, ScenarioCase, SimScenario};

fn main() -> plspb::Result<()> {
    let scenario = SimScenario::new(ScenarioCase::OneBlock, 42);
    let data = simgen::simulate_dataset(&scenario)?;

    let fit = pb::pls_pb_tree(&data.x, &data.y)?;
    let basis = &fit.basis;
    println!(
        "{} balances, orthonormality error {:e}, valid partition: {}",
        basis.len(),
        basis.orthonormality_error(),
        basis.is_valid_partition()
    );

    let names = data.x.part_names();
    for (k, (b, score)) in basis.balances().iter().zip(basis.scores()).take(3).enumerate() {
        let num: Vec<&str> = b.numerator().iter().map(|&i| names[i].as_str()).collect();
        let den: Vec<&str> = b.denominator().iter().map(|&i| names[i].as_str()).collect();
        println!("PB{} |cov| = {score:.3}", k + 1);
        println!("  numerator   {}", num.join(" "));
        println!("  denominator {}", den.join(" "));
    }

    let first = simgen::first_balance_recovery(basis, &data.marker_mask)?;
    println!(
        "first balance covers {:.0}% of markers and {:.0}% of noise parts",
        100.0 * first.marker_rate,
        100.0 * first.noise_rate
    );
    Ok(())
}
