//! How often each part enters the first balance over repeated simulations.
//!
//! Run with `cargo run --release --example marker_recovery`.

use plspb::modelsel::Method;
use plspb::simgen::{ScenarioCase, SimScenario};
use plspb::study;

fn main() -> plspb::Result<()> {
    let runs = 25;
    let scenario = SimScenario::new(ScenarioCase::SameSizedBlocks, 99);
    let results = study::recovery_study(&scenario, &[Method::PlsPb, Method::PcaPb], runs)?;

    for r in &results {
        println!(
            "{}: marker rate {:.2}, noise rate {:.2}",
            r.method,
            r.counts.mean_marker_rate(),
            r.counts.mean_noise_rate()
        );
        let per_block: Vec<usize> = scenario
            .block_sizes
            .iter()
            .scan(0, |start, &size| {
                let block = &r.counts.counts[*start..*start + size];
                *start += size;
                Some(block.iter().sum::<usize>())
            })
            .collect();
        println!("  inclusions per marker block (of {} each): {per_block:?}", 20 * runs);
    }
    Ok(())
}
