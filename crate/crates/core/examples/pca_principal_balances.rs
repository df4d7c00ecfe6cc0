//! Variance-driven principal balances next to their response-driven
//! counterpart on data with four marker blocks of different strength.
//!
//! Run with `cargo run --release --example pca_principal_balances`.

use plspb::modelsel;
use plspb::pb;
use plspb::simgen::{self, ScenarioCase, SimScenario};

fn main() -> plspb::Result<()> {
    let scenario = SimScenario::new(ScenarioCase::SameSizedBlocks, 3);
    let data = simgen::simulate_dataset(&scenario)?;

    let pca = pb::pca_pb(&data.x)?;
    let pls = pb::pls_pb(&data.x, &data.y)?;

    println!("variance of the first five PCA-PBs: {:.3?}", &pca.scores()[..5]);
    println!("|cov| of the first five PLS-PBs:    {:.3?}", &pls.scores()[..5]);

    for (name, basis) in [("pca-pb", &pca), ("pls-pb", &pls)] {
        let rec = simgen::first_balance_recovery(basis, &data.marker_mask)?;
        let fit = modelsel::fit_on_balances(&data.x, &data.y, basis, 1)?;
        let rmse = modelsel::rmsep(data.y.as_slice(), fit.predict(&data.x)?.as_slice())?;
        println!(
            "{name}: first balance holds {:.0}% of markers, one-balance training RMSE {rmse:.3}",
            100.0 * rec.marker_rate
        );
    }

    // With every balance in the model both bases give the same fit.
    let k = data.x.n_parts() - 1;
    let a = modelsel::fit_on_balances(&data.x, &data.y, &pca, k)?.predict(&data.x)?;
    let b = modelsel::fit_on_balances(&data.x, &data.y, &pls, k)?.predict(&data.x)?;
    println!("full-basis fitted values differ by at most {:e}", (a - b).amax());
    Ok(())
}
