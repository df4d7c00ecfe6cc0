//! clr, pivot coordinates and a single balance on a small composition.
//!
//! Run with `cargo run --example log_ratio_transforms`.

use nalgebra::DMatrix;
use plspb::coda::{self, BalanceCoefficients, CompositionMatrix, SignVector};

fn main() -> plspb::Result<()> {
    let x = CompositionMatrix::new(
        DMatrix::from_row_slice(3, 4, &[
            10.0, 20.0, 30.0, 40.0,
            1.0, 1.0, 1.0, 1.0,
            5.0, 2.0, 2.0, 1.0,
        ]),
        vec!["Ca".into(), "Mg".into(), "Na".into(), "K".into()],
    )?;

    let clr = coda::clr(&x);
    println!("clr rows (each sums to zero):\n{:.4}", clr.values());

    // Rescaling a row does not change its clr.
    let scaled = coda::closure(x.values(), 100.0)?;
    let diff = (coda::clr(&scaled).values() - clr.values()).amax();
    println!("max clr change after closure to 100: {diff:e}");

    let z = coda::pivot_coordinates(&x);
    println!("pivot coordinates:\n{:.4}", z);
    let back = coda::inverse_pivot(&z, 1.0)?;
    println!("inverse pivot (closed to 1):\n{:.4}", back.values());

    // (Ca, Mg) against K, leaving Na out.
    let signs = SignVector::new(vec![1, 1, 0, -1])?;
    let b: BalanceCoefficients = coda::signs_to_coefficients(&signs);
    println!("balance coefficients: {:.5?}", b.coeffs().as_slice());
    println!("balance values: {:.4?}", coda::balance_values(&x, &b)?.as_slice());
    Ok(())
}
