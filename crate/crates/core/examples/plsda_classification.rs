//! Two-class discrimination: PLS-DA on clr data and on principal balances,
//! scored by cross-validated misclassification error.
//!
//! Run with `cargo run --release --example plsda_classification`.

use nalgebra::DVector;
use plspb::coda;
use plspb::latent;
use plspb::modelsel::{self, CvConfig, Method, Metric, CLASS_THRESHOLD};
use plspb::simgen::{self, ScenarioCase, SimScenario};

fn main() -> plspb::Result<()> {
    let mut scenario = SimScenario::new(ScenarioCase::OneBlock, 8);
    scenario.n = 200;
    scenario.d = 40;
    scenario.block_sizes = vec![10];
    let data = simgen::simulate_dataset(&scenario)?;

    // Labels: above or below the median response.
    let mut sorted: Vec<f64> = data.y.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let labels = DVector::from_iterator(data.y.len(), data.y.iter().map(|&v| f64::from(v > median)));

    let model = latent::pls_fit(&coda::clr(&data.x), &labels, 2)?;
    let predicted = latent::classify(&model, &data.x, CLASS_THRESHOLD)?;
    let wrong = predicted
        .iter()
        .zip(labels.iter())
        .filter(|(&p, &l)| f64::from(p) != l)
        .count();
    println!("two-component PLS-DA training errors: {wrong} of {}", labels.len());

    for method in [Method::Pls, Method::PlsPb, Method::PcaPb] {
        let cfg = CvConfig {
            method,
            max_k: 6,
            folds: 5,
            repeats: 3,
            seed: 1,
            metric: Metric::Me,
        };
        let cv = modelsel::cross_validate(&data.x, &labels, &cfg)?;
        let curve: Vec<String> = cv.mean_error.iter().map(|e| format!("{e:.3}")).collect();
        println!("{method:>6}: ME by k = [{}], one-SE k = {}", curve.join(", "), cv.selected_k);
    }
    Ok(())
}
