//! The coordinate-descent baseline updates with one edge's executions per
//! episode. Summing every edge's increment recovers the full update exactly.
//!
//! ```bash
//! cargo run --example edge_decomposition
//! ```

use coagent_edge::baseline::{cd_increment, cd_schedule, EdgeAssignment};
use coagent_edge::coagent::{reinforce_update, CoagentLayer, LayerGradient};
use coagent_edge::letor::synthetic::SyntheticConfig;
use coagent_edge::letor::{Dataset, QueryPool, SLATE_SIZE};
use coagent_edge::sim::{run_episode, Mode, SimVariant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coagent_edge::Result<()> {
    let mut cfg = SyntheticConfig::for_dataset(Dataset::Mq2008, 5);
    cfg.queries = 60;
    let pool = QueryPool::build(&cfg.generate(), Dataset::Mq2008, SLATE_SIZE)?;
    let variant = SimVariant::new(Dataset::Mq2008, Mode::Rl);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let layer = CoagentLayer::random(32, pool.feature_dim(), &mut rng);
    let trace = run_episode(&pool, &layer, &variant, 0.3, 1.0, &mut rng)?;

    let edges = EdgeAssignment::default();
    let mut total = LayerGradient::zeros(layer.num_units(), layer.feature_dim());
    for e in 0..edges.n_edges() {
        let inc = cd_increment(&layer, &trace, e, &edges, 1.0)?;
        let n = trace.records().filter(|r| edges.edge_of(r.document_slot) == Some(e)).count();
        println!("edge {e}: {n:>4} executions, largest component {:.5}", inc.max_abs());
        total.add_assign(&inc);
    }
    let alpha = 0.01;
    let summed = layer.applied(alpha, &total)?;
    let full = reinforce_update(&layer, trace.records(), &trace.returns, alpha, 1.0)?;
    let identical = summed.to_flat().iter().zip(full.to_flat()).all(|(a, b)| a.to_bits() == b.to_bits());
    println!("sum over edges equals full update bit for bit: {identical}");
    println!("episodes 0..7 update edges {:?}", (0..7).map(|i| cd_schedule(i, edges.n_edges())).collect::<Vec<_>>());
    Ok(())
}
