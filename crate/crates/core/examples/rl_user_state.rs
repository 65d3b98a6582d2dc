//! Play MSLR-style RL episodes and follow the latent user state.
//!
//! ```bash
//! cargo run --example rl_user_state -- [unreliability]
//! ```

use coagent_edge::coagent::CoagentLayer;
use coagent_edge::letor::synthetic::SyntheticConfig;
use coagent_edge::letor::{Dataset, QueryPool, SLATE_SIZE};
use coagent_edge::sim::{run_episode, Mode, SimVariant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coagent_edge::Result<()> {
    let p: f64 = std::env::args().nth(1).map_or(0.2, |a| a.parse().expect("unreliability"));
    let mut cfg = SyntheticConfig::for_dataset(Dataset::Mslr, 3);
    cfg.queries = 100;
    let pool = QueryPool::build(&cfg.generate(), Dataset::Mslr, SLATE_SIZE)?;
    let variant = SimVariant::new(Dataset::Mslr, Mode::Rl);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let layer = CoagentLayer::random(32, pool.feature_dim(), &mut rng);

    for episode in 0..3 {
        let trace = run_episode(&pool, &layer, &variant, p, 1.0, &mut rng)?;
        println!("episode {episode}");
        for (t, step) in trace.steps.iter().enumerate() {
            println!(
                "  t={t} slate {:?} arrived {} picked relevance {:?} use {:.1} reward {}",
                step.slate.relevances,
                step.mask.count(),
                step.recommended_relevance(),
                step.use_before.value(),
                step.reward
            );
        }
        println!("  returns {:?}", trace.returns.as_slice());
    }
    Ok(())
}
