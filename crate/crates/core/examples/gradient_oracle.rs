//! Compare the expected update against the exact policy gradient and central
//! finite differences on a fully enumerable two-step environment.
//!
//! ```bash
//! cargo run --release --example gradient_oracle
//! ```

use coagent_edge::coagent::{CoagentLayer, CoagentParams};
use coagent_edge::letor::Dataset;
use coagent_edge::oracle::*;
use coagent_edge::sim::{Mode, SimVariant};

fn main() -> coagent_edge::Result<()> {
    let mut variant = SimVariant::new(Dataset::Mq2008, Mode::Rl);
    variant.episode_len = 2;
    let contexts = vec![
        MicroContext {
            probability: 0.6,
            features: vec![vec![0.5, -0.3], vec![-0.4, 0.8]],
            relevances: vec![0, 2],
        },
        MicroContext {
            probability: 0.4,
            features: vec![vec![0.1, 0.9], vec![0.7, -0.6]],
            relevances: vec![1, 0],
        },
    ];
    let env = MicroEnv::with_unreliability(contexts, 0.25, variant)?;
    let layer = CoagentLayer::from_units(
        2,
        vec![
            CoagentParams { weights: vec![0.4, -0.2, 0.1] },
            CoagentParams { weights: vec![-0.7, 0.5, 0.3] },
        ],
    )?;
    let gamma = 0.9;
    println!("outcome space: {} joint outcomes per trajectory", env.outcome_space(layer.num_units()));
    println!("J = {:.6}", exact_objective(&env, &layer, gamma)?);

    let exact = exact_policy_gradient(&env, &layer, gamma)?;
    let update = expected_update_increment(&env, &layer, gamma)?;
    let fd = finite_difference_gradient(&env, &layer, gamma, 1e-5)?;
    println!("{:>3} {:>14} {:>14} {:>14}", "i", "E[update]", "exact", "finite diff");
    for i in 0..exact.values.len() {
        println!("{i:>3} {:>14.9} {:>14.9} {:>14.9}", update.values[i], exact.values[i], fd.values[i]);
    }
    println!(
        "relative error: update vs exact {:.2e}, exact vs finite differences {:.2e}",
        max_relative_error(&update.values, &exact.values),
        max_relative_error(&exact.values, &fd.values)
    );
    Ok(())
}
