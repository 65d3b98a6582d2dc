//! Edge recommendation simulators (MSLR / MQ2008, bandit / RL) and the
//! unreliability model.
//!
//! Each timestep draws, in this order: the query, the slate, the
//! availability mask, the coagent actions (unit-major), the tie-break and,
//! in RL mode, the user-state increment. Keeping this order fixed makes
//! traces reproducible from a seed.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::coagent::{aggregate_vote, execute_layer, CoagentLayer, ExecutionRecord, Returns, VoteVector};
use crate::error::{Error, Result};
use crate::letor::{CandidateSlate, Dataset, QueryPool, SLATE_SIZE};

/// Which slots' computations reached the local edge in time.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AvailabilityMask {
    available: Vec<bool>,
}

impl AvailabilityMask {
    pub fn new(available: Vec<bool>) -> Self {
        AvailabilityMask { available }
    }

    pub fn all(len: usize) -> Self {
        AvailabilityMask::new(vec![true; len])
    }

    pub fn none(len: usize) -> Self {
        AvailabilityMask::new(vec![false; len])
    }

    /// Mask whose slot `i` is available iff bit `i` of `bits` is set.
    pub fn from_bits(bits: u32, len: usize) -> Self {
        AvailabilityMask::new((0..len).map(|i| bits >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.available.len()
    }

    pub fn is_empty(&self) -> bool {
        self.available.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.available
    }

    pub fn is_available(&self, slot: usize) -> bool {
        self.available.get(slot).copied().unwrap_or(false)
    }

    pub fn available_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.available
            .iter()
            .enumerate()
            .filter(|(_, a)| **a)
            .map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.available.iter().filter(|a| **a).count()
    }

    /// Probability of this mask when each slot drops out independently with
    /// probability `p`.
    pub fn probability(&self, p: f64) -> f64 {
        self.available
            .iter()
            .map(|&a| if a { 1.0 - p } else { p })
            .product()
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// Samples a slate-sized mask; each slot is available with probability
/// `1 - p`.
pub fn sample_availability<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<AvailabilityMask> {
    sample_availability_n(p, SLATE_SIZE, rng)
}

pub fn sample_availability_n<R: Rng + ?Sized>(
    p: f64,
    len: usize,
    rng: &mut R,
) -> Result<AvailabilityMask> {
    check_probability(p)?;
    Ok(AvailabilityMask::new(
        (0..len).map(|_| rng.gen::<f64>() >= p).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Bandit,
    Rl,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Bandit => "bandit",
            Mode::Rl => "rl",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bandit" => Ok(Mode::Bandit),
            "rl" => Ok(Mode::Rl),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// USE value at or above which rewards are multiplied.
pub const USE_THRESHOLD: f64 = 0.8;

/// USE increments are multiples of this quantum.
pub const USE_QUANTUM: f64 = 0.4;

/// Simulator parameters. [`SimVariant::new`] gives the reference settings;
/// the fields stay public so ablations can override them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimVariant {
    pub dataset: Dataset,
    pub mode: Mode,
    /// Relevance labels whose recommendation may raise the USE.
    pub trigger: Vec<u8>,
    pub multiplier: f64,
    pub episode_len: usize,
    /// Keep one query for the whole episode instead of redrawing per step.
    pub fixed_query: bool,
}

impl SimVariant {
    pub fn new(dataset: Dataset, mode: Mode) -> Self {
        let (trigger, multiplier) = match dataset {
            Dataset::Mslr => (vec![0, 1], 10.0),
            Dataset::Mq2008 => (vec![0], 5.0),
        };
        SimVariant {
            dataset,
            mode,
            trigger,
            multiplier,
            episode_len: match mode {
                Mode::Bandit => 1,
                Mode::Rl => 5,
            },
            fixed_query: false,
        }
    }

    pub fn priority(&self) -> &'static [u8] {
        self.dataset.priority()
    }

    pub fn is_trigger(&self, relevance: u8) -> bool {
        self.trigger.contains(&relevance)
    }
}

/// The latent user state, stored as a count of 0.4 increments so that the
/// threshold comparison is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct UserState {
    pub quanta: u32,
}

impl UserState {
    pub fn value(self) -> f64 {
        self.quanta as f64 * USE_QUANTUM
    }

    /// `value() >= 0.8`.
    pub fn is_boosted(self) -> bool {
        self.quanta >= 2
    }
}

/// Distribution of the USE increment, in quanta, after recommending a
/// document of `relevance`: uniform over {0.0, 0.4, 0.8} for trigger labels
/// in RL mode, otherwise no change.
pub fn use_increment_outcomes(relevance: Option<u8>, variant: &SimVariant) -> &'static [(f64, u32)] {
    const TRIGGERED: [(f64, u32); 3] = [(1.0 / 3.0, 0), (1.0 / 3.0, 1), (1.0 / 3.0, 2)];
    const UNCHANGED: [(f64, u32); 1] = [(1.0, 0)];
    match relevance {
        Some(r) if variant.mode == Mode::Rl && variant.is_trigger(r) => &TRIGGERED,
        _ => &UNCHANGED,
    }
}

pub fn use_transition<R: Rng + ?Sized>(
    state: UserState,
    recommended_relevance: Option<u8>,
    variant: &SimVariant,
    rng: &mut R,
) -> UserState {
    match recommended_relevance {
        Some(r) if variant.is_trigger(r) => UserState {
            quanta: state.quanta + rng.gen_range(0..3u32),
        },
        _ => state,
    }
}

/// Reward for recommending a document of `recommended_relevance`, given the
/// USE *before* this step's transition.
pub fn compute_reward(recommended_relevance: Option<u8>, state: UserState, variant: &SimVariant) -> f64 {
    let Some(rel) = recommended_relevance else {
        return 0.0;
    };
    let base = rel as f64;
    match variant.mode {
        Mode::Rl if state.is_boosted() => base * variant.multiplier,
        _ => base,
    }
}

/// Best myopic reward available on this slate, 0 when nothing arrived.
pub fn optimal_available_reward(
    slate: &CandidateSlate,
    mask: &AvailabilityMask,
    variant: &SimVariant,
    state: UserState,
) -> f64 {
    mask.available_slots()
        .map(|s| compute_reward(Some(slate.relevances[s]), state, variant))
        .fold(0.0, f64::max)
}

/// Exact expectation of [`optimal_available_reward`] over all masks when
/// every slot drops out with probability `p`.
pub fn expected_optimal_reward(
    slate: &CandidateSlate,
    variant: &SimVariant,
    state: UserState,
    p: f64,
) -> Result<f64> {
    check_probability(p)?;
    let n = slate.len();
    Ok((0..1u32 << n)
        .map(|bits| {
            let mask = AvailabilityMask::from_bits(bits, n);
            mask.probability(p) * optimal_available_reward(slate, &mask, variant, state)
        })
        .sum())
}

/// One timestep of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub slate: CandidateSlate,
    pub mask: AvailabilityMask,
    pub votes: VoteVector,
    pub records: Vec<ExecutionRecord>,
    pub recommendation: Option<usize>,
    pub use_before: UserState,
    pub reward: f64,
}

impl Step {
    pub fn recommended_relevance(&self) -> Option<u8> {
        self.recommendation.map(|s| self.slate.relevances[s])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<Step>,
    pub returns: Returns,
}

impl EpisodeTrace {
    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    /// Undiscounted sum of rewards.
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn records(&self) -> impl Iterator<Item = &ExecutionRecord> {
        self.steps.iter().flat_map(|s| s.records.iter())
    }

    pub fn recompute_returns(&self, gamma: f64) -> Returns {
        Returns::reward_to_go(&self.rewards(), gamma)
    }
}

fn check_pool(pool: &QueryPool, variant: &SimVariant, p: f64) -> Result<()> {
    check_probability(p)?;
    if pool.dataset() != variant.dataset {
        return Err(Error::Config(format!(
            "pool built for {} but simulator is {}",
            pool.dataset(),
            variant.dataset
        )));
    }
    Ok(())
}

/// Plays one episode with the coagent policy and fills in reward-to-go
/// returns under `gamma`.
pub fn run_episode<R: Rng + ?Sized>(
    pool: &QueryPool,
    layer: &CoagentLayer,
    variant: &SimVariant,
    p: f64,
    gamma: f64,
    rng: &mut R,
) -> Result<EpisodeTrace> {
    check_pool(pool, variant, p)?;
    let mut state = UserState::default();
    let mut steps = Vec::with_capacity(variant.episode_len);
    let mut query: Option<String> = None;
    for t in 0..variant.episode_len {
        let qid = match (&query, variant.fixed_query) {
            (Some(q), true) => q.clone(),
            _ => pool.sample_query(rng)?.to_string(),
        };
        let slate = pool.select_candidates(&qid, rng)?;
        query = Some(qid);
        let mask = sample_availability_n(p, slate.len(), rng)?;
        let (votes, records) = execute_layer(layer, &slate.features, &mask, t as u32, rng)?;
        let recommendation = aggregate_vote(&votes, rng);
        let relevance = recommendation.map(|s| slate.relevances[s]);
        let reward = compute_reward(relevance, state, variant);
        let use_before = state;
        if variant.mode == Mode::Rl {
            state = use_transition(state, relevance, variant, rng);
        }
        steps.push(Step {
            slate,
            mask,
            votes,
            records,
            recommendation,
            use_before,
            reward,
        });
    }
    let returns = Returns::reward_to_go(
        &steps.iter().map(|s| s.reward).collect::<Vec<_>>(),
        gamma,
    );
    Ok(EpisodeTrace { steps, returns })
}

/// Undiscounted return of one episode under the policy that picks uniformly
/// among the available documents.
pub fn run_uniform_episode<R: Rng + ?Sized>(
    pool: &QueryPool,
    variant: &SimVariant,
    p: f64,
    rng: &mut R,
) -> Result<f64> {
    check_pool(pool, variant, p)?;
    let mut state = UserState::default();
    let mut total = 0.0;
    let mut query: Option<String> = None;
    for _ in 0..variant.episode_len {
        let qid = match (&query, variant.fixed_query) {
            (Some(q), true) => q.clone(),
            _ => pool.sample_query(rng)?.to_string(),
        };
        let slate = pool.select_candidates(&qid, rng)?;
        query = Some(qid);
        let mask = sample_availability_n(p, slate.len(), rng)?;
        let slots: Vec<usize> = mask.available_slots().collect();
        let relevance = if slots.is_empty() {
            None
        } else {
            Some(slate.relevances[slots[rng.gen_range(0..slots.len())]])
        };
        total += compute_reward(relevance, state, variant);
        if variant.mode == Mode::Rl {
            state = use_transition(state, relevance, variant, rng);
        }
    }
    Ok(total)
}
