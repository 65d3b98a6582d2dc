#![allow(dead_code)]

use coagent_edge::coagent::{CoagentLayer, CoagentParams};
use coagent_edge::letor::Dataset;
use coagent_edge::oracle::{MicroContext, MicroEnv};
use coagent_edge::sim::{AvailabilityMask, Mode, SimVariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn layer_with_scale(units: usize, dim: usize, scale: f64, seed: u64) -> CoagentLayer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let units = (0..units)
        .map(|_| CoagentParams {
            weights: (0..=dim).map(|_| rng.gen_range(-scale..=scale)).collect(),
        })
        .collect();
    CoagentLayer::from_units(dim, units).unwrap()
}

pub fn random_contexts(n: usize, docs: usize, dim: usize, max_label: u8, seed: u64) -> Vec<MicroContext> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter()
        .map(|w| MicroContext {
            probability: w / total,
            features: (0..docs)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect())
                .collect(),
            relevances: (0..docs).map(|_| rng.gen_range(0..=max_label)).collect(),
        })
        .collect()
}

/// Bandit: 2 documents, 3 units, 4 contexts, independent dropout 0.3.
pub fn bandit_env() -> (MicroEnv, CoagentLayer) {
    let variant = SimVariant::new(Dataset::Mslr, Mode::Bandit);
    let env = MicroEnv::with_unreliability(random_contexts(4, 2, 2, 4, 1), 0.3, variant).unwrap();
    (env, layer_with_scale(3, 2, 0.8, 2))
}

/// Two-step MQ2008 RL dynamics, 2 documents, 2 units, 2 contexts,
/// independent dropout 0.25.
pub fn rl_env() -> (MicroEnv, CoagentLayer) {
    let mut variant = SimVariant::new(Dataset::Mq2008, Mode::Rl);
    variant.episode_len = 2;
    let mut contexts = random_contexts(2, 2, 2, 2, 3);
    contexts[0].relevances = vec![0, 2];
    contexts[1].relevances = vec![1, 0];
    let env = MicroEnv::with_unreliability(contexts, 0.25, variant).unwrap();
    (env, layer_with_scale(2, 2, 0.8, 4))
}

/// Two-step MSLR RL dynamics with a correlated, hand-written mask
/// distribution, 3 contexts, 2 units.
pub fn rl_env_correlated_masks() -> (MicroEnv, CoagentLayer) {
    let mut variant = SimVariant::new(Dataset::Mslr, Mode::Rl);
    variant.episode_len = 2;
    let mut contexts = random_contexts(3, 2, 1, 4, 5);
    contexts[0].relevances = vec![1, 4];
    contexts[1].relevances = vec![0, 3];
    contexts[2].relevances = vec![2, 2];
    let env = MicroEnv {
        contexts,
        masks: vec![
            (0.5, AvailabilityMask::new(vec![true, true])),
            (0.3, AvailabilityMask::new(vec![true, false])),
            (0.15, AvailabilityMask::new(vec![false, true])),
            (0.05, AvailabilityMask::new(vec![false, false])),
        ],
        variant,
        enumeration_cap: coagent_edge::oracle::DEFAULT_ENUMERATION_CAP,
    };
    (env, layer_with_scale(2, 1, 1.0, 6))
}

use coagent_edge::letor::{DocumentRecord, QueryPool, SLATE_SIZE};
use coagent_edge::letor::synthetic::SyntheticConfig;

/// A small synthetic pool: 30 queries with 6 to 12 documents of dimension 3.
pub fn small_pool(dataset: Dataset, seed: u64) -> QueryPool {
    let mut cfg = SyntheticConfig::for_dataset(dataset, seed);
    cfg.queries = 30;
    cfg.min_docs = 6;
    cfg.max_docs = 12;
    cfg.feature_dim = 3;
    cfg.informative = 2;
    QueryPool::build(&cfg.generate(), dataset, SLATE_SIZE).unwrap()
}

/// One query per entry of `labels`, features derived from the labels.
pub fn labelled_pool(dataset: Dataset, labels: &[&[u8]]) -> QueryPool {
    let records: Vec<DocumentRecord> = labels
        .iter()
        .enumerate()
        .flat_map(|(q, ls)| {
            ls.iter().enumerate().map(move |(i, &l)| DocumentRecord {
                relevance: l,
                query_id: format!("q{q}"),
                features: vec![l as f64, i as f64],
            })
        })
        .collect();
    QueryPool::build(&records, dataset, SLATE_SIZE).unwrap()
}
