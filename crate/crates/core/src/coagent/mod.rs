//! The coagent network policy.
//!
//! A layer holds `units` linear-logistic coagents whose parameters are shared
//! across every document slot. At each timestep, every unit executes once per
//! *available* document, emitting a binary action; a document's vote is the
//! number of units that fired for it, and the highest vote wins the
//! recommendation. Each execution leaves an [`ExecutionRecord`], and the
//! REINFORCE update sums `gamma^t * G_t * d ln pi / d theta` over those
//! records only, so coagents that never executed for a document contribute
//! nothing.

mod snapshot;

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::sim::AvailabilityMask;

pub use snapshot::{load_layer, save_layer, SNAPSHOT_VERSION};

/// Units per layer in the reference architecture.
pub const DEFAULT_UNITS: usize = 32;

/// Half-width of the uniform initialization interval.
pub const INIT_SCALE: f64 = 0.01;

/// Numerically stable `exp(z) / (exp(z) + 1)`.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Parameters of one coagent: `feature_dim` input weights followed by a bias
/// weight. The logit of action 1 is `weights . [input; 1]`; action 0 has
/// logit 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CoagentParams {
    pub weights: Vec<f64>,
}

impl CoagentParams {
    pub fn zeros(feature_dim: usize) -> Self {
        CoagentParams {
            weights: vec![0.0; feature_dim + 1],
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn logit(&self, input: &[f64]) -> Result<f64> {
        let dim = self.feature_dim();
        if input.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: input.len(),
            });
        }
        Ok(self.logit_unchecked(input))
    }

    fn logit_unchecked(&self, input: &[f64]) -> f64 {
        let (w, bias) = self.weights.split_at(input.len());
        w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + bias[0]
    }

    /// Probability of emitting action 1 for `input`.
    pub fn action_probability(&self, input: &[f64]) -> Result<f64> {
        self.logit(input).map(logistic)
    }
}

/// `units` coagents sharing parameters across document slots.
#[derive(Debug, Clone, PartialEq)]
pub struct CoagentLayer {
    feature_dim: usize,
    units: Vec<CoagentParams>,
}

impl CoagentLayer {
    pub fn zeros(units: usize, feature_dim: usize) -> Self {
        CoagentLayer {
            feature_dim,
            units: vec![CoagentParams::zeros(feature_dim); units],
        }
    }

    /// Weights drawn i.i.d. uniform in `[-INIT_SCALE, INIT_SCALE]`, unit-major.
    pub fn random<R: Rng + ?Sized>(units: usize, feature_dim: usize, rng: &mut R) -> Self {
        let units = (0..units)
            .map(|_| CoagentParams {
                weights: (0..=feature_dim)
                    .map(|_| rng.gen_range(-INIT_SCALE..=INIT_SCALE))
                    .collect(),
            })
            .collect();
        CoagentLayer { feature_dim, units }
    }

    pub fn from_units(feature_dim: usize, units: Vec<CoagentParams>) -> Result<Self> {
        for u in &units {
            if u.weights.len() != feature_dim + 1 {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim + 1,
                    found: u.weights.len(),
                });
            }
        }
        Ok(CoagentLayer { feature_dim, units })
    }

    /// Builds a layer from a unit-major flat parameter vector.
    pub fn from_flat(units: usize, feature_dim: usize, flat: &[f64]) -> Result<Self> {
        let width = feature_dim + 1;
        if flat.len() != units * width {
            return Err(Error::DimensionMismatch {
                expected: units * width,
                found: flat.len(),
            });
        }
        Ok(CoagentLayer {
            feature_dim,
            units: flat
                .chunks(width)
                .map(|c| CoagentParams { weights: c.to_vec() })
                .collect(),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.units.iter().flat_map(|u| u.weights.iter().copied()).collect()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    pub fn num_params(&self) -> usize {
        self.units.len() * (self.feature_dim + 1)
    }

    pub fn units(&self) -> &[CoagentParams] {
        &self.units
    }

    pub fn unit(&self, index: usize) -> &CoagentParams {
        &self.units[index]
    }

    /// `self + alpha * increment`, elementwise.
    pub fn applied(&self, alpha: f64, increment: &LayerGradient) -> Result<Self> {
        if increment.values.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                found: increment.values.len(),
            });
        }
        let width = self.feature_dim + 1;
        let units = self
            .units
            .iter()
            .zip(increment.values.chunks(width))
            .map(|(u, g)| CoagentParams {
                weights: u.weights.iter().zip(g).map(|(w, d)| w + alpha * d).collect(),
            })
            .collect();
        Ok(CoagentLayer {
            feature_dim: self.feature_dim,
            units,
        })
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: input.len(),
            });
        }
        Ok(())
    }
}

/// One firing of one coagent on one document.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionRecord {
    pub coagent_index: usize,
    pub document_slot: usize,
    pub time: u32,
    pub input: Arc<[f64]>,
    pub action: bool,
    /// Probability the policy assigned to `action` when it was sampled.
    pub action_probability: f64,
}

/// Per-slot vote counts; `None` for slots whose computation did not arrive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteVector {
    pub counts: Vec<Option<u32>>,
}

impl VoteVector {
    pub fn mask(&self) -> AvailabilityMask {
        AvailabilityMask::new(self.counts.iter().map(Option::is_some).collect())
    }

    /// True when no slot carries a vote.
    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(Option::is_none)
    }
}

/// Runs every unit on every available slot, unit-major.
pub fn execute_layer<R: Rng + ?Sized>(
    layer: &CoagentLayer,
    slate_features: &[Arc<[f64]>],
    mask: &AvailabilityMask,
    time: u32,
    rng: &mut R,
) -> Result<(VoteVector, Vec<ExecutionRecord>)> {
    if mask.len() != slate_features.len() {
        return Err(Error::DimensionMismatch {
            expected: slate_features.len(),
            found: mask.len(),
        });
    }
    let slots: Vec<usize> = mask.available_slots().collect();
    for &s in &slots {
        layer.check_input(&slate_features[s])?;
    }

    let mut counts: Vec<Option<u32>> = mask
        .as_slice()
        .iter()
        .map(|&a| if a { Some(0) } else { None })
        .collect();
    let mut records = Vec::with_capacity(layer.num_units() * slots.len());
    for (unit_index, unit) in layer.units.iter().enumerate() {
        for &slot in &slots {
            let input = &slate_features[slot];
            let z = unit.logit_unchecked(input);
            let p1 = logistic(z);
            let action = rng.gen::<f64>() < p1;
            if action {
                if let Some(c) = counts[slot].as_mut() {
                    *c += 1;
                }
            }
            records.push(ExecutionRecord {
                coagent_index: unit_index,
                document_slot: slot,
                time,
                input: Arc::clone(input),
                action,
                action_probability: if action { p1 } else { logistic(-z) },
            });
        }
    }
    Ok((VoteVector { counts }, records))
}

/// Recommends the available slot with the most votes, breaking ties uniformly
/// at random. Returns `None` when no slot is available. The generator is only
/// consulted when two or more slots tie.
pub fn aggregate_vote<R: Rng + ?Sized>(votes: &VoteVector, rng: &mut R) -> Option<usize> {
    let best = votes.counts.iter().flatten().copied().max()?;
    let tied: Vec<usize> = votes
        .counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == Some(best))
        .map(|(i, _)| i)
        .collect();
    if tied.len() == 1 {
        Some(tied[0])
    } else {
        Some(tied[rng.gen_range(0..tied.len())])
    }
}

/// Per-timestep returns `G_t`, indexed by execution time.
#[derive(Debug, Clone, PartialEq)]
pub struct Returns(Vec<f64>);

impl Returns {
    pub fn new(values: Vec<f64>) -> Self {
        Returns(values)
    }

    /// Reward-to-go: `G_t = sum_{k >= t} gamma^(k - t) R_k`.
    pub fn reward_to_go(rewards: &[f64], gamma: f64) -> Self {
        let mut values = vec![0.0; rewards.len()];
        let mut acc = 0.0;
        for (t, r) in rewards.iter().enumerate().rev() {
            acc = r + gamma * acc;
            values[t] = acc;
        }
        Returns(values)
    }

    pub fn get(&self, time: u32) -> Option<f64> {
        self.0.get(time as usize).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Flat unit-major gradient (or increment) over a layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub feature_dim: usize,
    pub values: Vec<f64>,
}

impl LayerGradient {
    pub fn zeros(units: usize, feature_dim: usize) -> Self {
        LayerGradient {
            feature_dim,
            values: vec![0.0; units * (feature_dim + 1)],
        }
    }

    pub fn add_assign(&mut self, other: &LayerGradient) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, scale: f64, other: &LayerGradient) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `d ln pi(x, u) / d theta = (u - sigma) [x; 1]` for a logistic unit.
pub fn log_prob_gradient(params: &CoagentParams, input: &[f64], action: bool) -> Result<Vec<f64>> {
    let sigma = params.action_probability(input)?;
    let scale = f64::from(u8::from(action)) - sigma;
    Ok(input
        .iter()
        .map(|x| scale * x)
        .chain(std::iter::once(scale))
        .collect())
}

/// Sum over `records` of `gamma^t * G_t * d ln pi / d theta`, evaluated at the
/// parameters of `layer`.
///
/// Contributions are first summed per document slot (in record order) and
/// the slot sums are then added in ascending slot order. Restricting the
/// records to a subset of slots therefore reproduces that subset's partial
/// sums exactly.
pub fn reinforce_increment<'a, I>(
    layer: &CoagentLayer,
    records: I,
    returns: &Returns,
    gamma: f64,
) -> Result<LayerGradient>
where
    I: IntoIterator<Item = &'a ExecutionRecord>,
{
    let width = layer.feature_dim + 1;
    let mut per_slot: Vec<Option<Vec<f64>>> = Vec::new();
    for r in records {
        let ret = returns.get(r.time).ok_or(Error::MissingReturn(r.time))?;
        layer.check_input(&r.input)?;
        let unit = layer.units.get(r.coagent_index).ok_or(Error::DimensionMismatch {
            expected: layer.num_units(),
            found: r.coagent_index + 1,
        })?;
        if per_slot.len() <= r.document_slot {
            per_slot.resize(r.document_slot + 1, None);
        }
        let acc = per_slot[r.document_slot].get_or_insert_with(|| vec![0.0; layer.num_params()]);

        let sigma = logistic(unit.logit_unchecked(&r.input));
        let coef = gamma.powi(r.time as i32) * ret;
        let scale = coef * (f64::from(u8::from(r.action)) - sigma);
        let g = &mut acc[r.coagent_index * width..(r.coagent_index + 1) * width];
        for (gj, xj) in g.iter_mut().zip(r.input.iter()) {
            *gj += scale * xj;
        }
        g[width - 1] += scale;
    }

    let mut total = LayerGradient::zeros(layer.num_units(), layer.feature_dim);
    for slot in per_slot.into_iter().flatten() {
        for (a, b) in total.values.iter_mut().zip(&slot) {
            *a += b;
        }
    }
    Ok(total)
}

/// One REINFORCE step over a batch of executions. All gradient terms use the
/// pre-update parameters.
pub fn reinforce_update<'a, I>(
    layer: &CoagentLayer,
    records: I,
    returns: &Returns,
    alpha: f64,
    gamma: f64,
) -> Result<CoagentLayer>
where
    I: IntoIterator<Item = &'a ExecutionRecord>,
{
    let inc = reinforce_increment(layer, records, returns, gamma)?;
    layer.applied(alpha, &inc)
}
