//! The three marker designs: covariance structure and generated datasets.
//!
//! Run with `cargo run --release --example simulate_scenarios`.

use plspb::simgen::{self, ScenarioCase, SimScenario};

fn main() -> plspb::Result<()> {
    for case in [
        ScenarioCase::OneBlock,
        ScenarioCase::SameSizedBlocks,
        ScenarioCase::DifferentSizedBlocks,
    ] {
        let scenario = SimScenario::new(case, 5);
        let sigma = simgen::build_sigma(&scenario)?;
        let data = simgen::simulate_dataset(&scenario)?;
        let signal = data.signal();
        let snr = signal.variance() / data.epsilon.variance();
        println!(
            "{case:>16}: blocks {:?}, sigma[0,1] = {:+.2}, X is {}x{}, signal/noise variance {snr:.1}",
            scenario.block_sizes,
            sigma[(0, 1)],
            data.x.n_samples(),
            data.x.n_parts(),
        );
    }

    Ok(())
}
