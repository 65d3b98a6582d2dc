//! Execute a shared-parameter layer on one slate, aggregate the vote and apply
//! a single REINFORCE update.
//!
//! ```bash
//! cargo run --example coagent_vote
//! ```

use std::sync::Arc;

use coagent_edge::coagent::*;
use coagent_edge::sim::AvailabilityMask;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coagent_edge::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let layer = CoagentLayer::random(DEFAULT_UNITS, 2, &mut rng);
    let slate: Vec<Arc<[f64]>> = [[0.9, 0.1], [-0.5, 0.4], [0.2, -0.8], [0.0, 0.0], [-1.0, 1.0]]
        .iter()
        .map(|r| Arc::from(&r[..]))
        .collect();
    // Slots 1 and 3 did not arrive in time.
    let mask = AvailabilityMask::new(vec![true, false, true, false, true]);

    let (votes, records) = execute_layer(&layer, &slate, &mask, 0, &mut rng)?;
    println!("votes: {:?}", votes.counts);
    println!("{} executions (units x available slots)", records.len());
    let choice = aggregate_vote(&votes, &mut rng);
    println!("recommended slot: {choice:?}");

    let reward = if choice == Some(0) { 2.0 } else { 0.0 };
    let returns = Returns::reward_to_go(&[reward], 1.0);
    let updated = reinforce_update(&layer, records.iter(), &returns, 0.1, 1.0)?;
    let moved = layer
        .to_flat()
        .iter()
        .zip(updated.to_flat())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("reward {reward}, largest weight change {moved:.4}");

    let mut snapshot = Vec::new();
    save_layer(&updated, &mut snapshot)?;
    println!("snapshot: {} bytes, reload equal: {}", snapshot.len(), load_layer(snapshot.as_slice())? == updated);
    Ok(())
}
