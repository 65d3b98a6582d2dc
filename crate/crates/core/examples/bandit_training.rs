//! Train the coagent recommender on the MQ2008-style bandit simulator and
//! compare it with the uniform-random recommender.
//!
//! ```bash
//! cargo run --release --example bandit_training -- [episodes] [alpha] [unreliability]
//! ```

use coagent_edge::harness::{smooth_curve, train_trial, uniform_policy_mean, Agent, TrialSpec};
use coagent_edge::letor::synthetic::SyntheticConfig;
use coagent_edge::letor::{Dataset, QueryPool, SLATE_SIZE};
use coagent_edge::sim::{Mode, SimVariant};

fn main() -> coagent_edge::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes: usize = args.next().map_or(50_000, |a| a.parse().expect("episodes"));
    let alpha: f64 = args.next().map_or(0.01, |a| a.parse().expect("alpha"));
    let p: f64 = args.next().map_or(0.0, |a| a.parse().expect("unreliability"));

    let records = SyntheticConfig::for_dataset(Dataset::Mq2008, 7).generate();
    let pool = QueryPool::build(&records, Dataset::Mq2008, SLATE_SIZE)?;
    let variant = SimVariant::new(Dataset::Mq2008, Mode::Bandit);
    println!("{} queries, {} features", pool.len(), pool.feature_dim());

    let baseline = uniform_policy_mean(&pool, &variant, p, 100_000, 1)?;
    println!("uniform-random mean return: {baseline:.4}");

    for agent in [Agent::Coagent, Agent::CoordinateDescent] {
        let spec = TrialSpec {
            variant: variant.clone(),
            agent,
            unreliability: p,
            alpha,
            gamma: 1.0,
            episodes,
            units: 32,
            seed: 11,
        };
        let returns = train_trial(&pool, &spec)?;
        let window = 10_000.min(episodes);
        let curve = smooth_curve(&returns, window)?;
        let checkpoints: Vec<String> = (1..=5)
            .map(|i| format!("{:.3}", curve[i * (curve.len() - 1) / 5]))
            .collect();
        println!(
            "{agent:>18}: smoothed return at 20/40/60/80/100%: {}",
            checkpoints.join(" ")
        );
    }
    Ok(())
}
