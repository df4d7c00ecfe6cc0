//! Repeated 5-fold cross-validation of all three methods and one-SE selection.
//!
//! Run with `cargo run --release --example cross_validation`.

use plspb::modelsel::{self, CvConfig, Method, Metric};
use plspb::simgen::{self, ScenarioCase, SimScenario};

fn main() -> plspb::Result<()> {
    let data = simgen::simulate_dataset(&SimScenario::new(ScenarioCase::DifferentSizedBlocks, 11))?;

    for method in Method::ALL {
        let cfg = CvConfig {
            method,
            max_k: 10,
            folds: 5,
            repeats: 5,
            seed: 2024,
            metric: Metric::Rmsep,
        };
        let cv = modelsel::cross_validate(&data.x, &data.y, &cfg)?;
        let curve: Vec<String> = cv.mean_error.iter().map(|e| format!("{e:.2}")).collect();
        println!("{method:>6}: RMSEP by k = [{}]", curve.join(", "));
        println!("        one-SE choice k = {}", cv.selected_k);
    }

    let k = modelsel::one_se_select(&[5.0, 3.0, 2.9, 2.95], &[0.2; 4])?;
    println!("one-SE rule on a hand-made curve picks k = {k}");
    Ok(())
}
