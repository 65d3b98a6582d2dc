//! Exact-enumeration oracles for tiny environments.
//!
//! A [`MicroEnv`] is small enough that every joint outcome of an episode
//! (context, availability mask, every coagent action, tie-break, USE
//! increment) can be listed. Three quantities are computed from it:
//!
//! * [`exact_objective`]: `J(theta)` by backward recursion over user states.
//! * [`exact_policy_gradient`]: the likelihood-ratio gradient
//!   `sum_traj P(traj) * R(traj) * grad ln P(traj)`, with the score summed
//!   over every execution in the trajectory.
//! * [`expected_update_increment`]: the probability-weighted mean of the
//!   increment [`reinforce_increment`] produces for each trajectory.
//!
//! [`finite_difference_gradient`] differentiates `exact_objective`
//! numerically. Policy probabilities here are evaluated with a plain
//! `exp(z) / (exp(z) + 1)` rather than through the layer's own helpers.

use std::sync::Arc;

use crate::coagent::{reinforce_increment, CoagentLayer, ExecutionRecord, LayerGradient, Returns};
use crate::error::{Error, Result};
use crate::sim::{compute_reward, use_increment_outcomes, AvailabilityMask, SimVariant, UserState};

/// Default bound on the number of enumerated trajectories.
pub const DEFAULT_ENUMERATION_CAP: u128 = 50_000_000;

/// One equally-shaped slate of documents, drawn with `probability`.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroContext {
    pub probability: f64,
    pub features: Vec<Vec<f64>>,
    pub relevances: Vec<u8>,
}

/// A finite environment for exact gradient checks. Rewards and USE dynamics
/// follow `variant`; its `episode_len` is the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroEnv {
    pub contexts: Vec<MicroContext>,
    pub masks: Vec<(f64, AvailabilityMask)>,
    pub variant: SimVariant,
    pub enumeration_cap: u128,
}

impl MicroEnv {
    /// Every slot independently unavailable with probability `p`; masks of
    /// probability zero are left out.
    pub fn with_unreliability(contexts: Vec<MicroContext>, p: f64, variant: SimVariant) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        let n = contexts.first().ok_or(Error::Empty("micro contexts"))?.relevances.len();
        let masks = (0..1u32 << n)
            .map(|bits| AvailabilityMask::from_bits(bits, n))
            .map(|m| (m.probability(p), m))
            .filter(|(w, _)| *w > 0.0)
            .collect();
        Ok(MicroEnv {
            contexts,
            masks,
            variant,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.contexts.first().map_or(0, |c| c.relevances.len())
    }

    pub fn horizon(&self) -> usize {
        self.variant.episode_len
    }

    /// Upper bound on the number of enumerated trajectories for `units`.
    pub fn outcome_space(&self, units: usize) -> u128 {
        let n = self.n_docs() as u32;
        let per_step = (self.contexts.len() as u128)
            .saturating_mul(self.masks.len() as u128)
            .saturating_mul(1u128.checked_shl(units as u32 * n).unwrap_or(u128::MAX))
            .saturating_mul(n.max(1) as u128)
            .saturating_mul(3);
        (0..self.horizon()).fold(1u128, |acc, _| acc.saturating_mul(per_step))
    }

    fn validate(&self, layer: &CoagentLayer) -> Result<()> {
        let n = self.n_docs();
        if self.contexts.is_empty() {
            return Err(Error::Empty("micro contexts"));
        }
        for c in &self.contexts {
            if c.relevances.len() != n || c.features.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.features.len().min(c.relevances.len()),
                });
            }
            for f in &c.features {
                if f.len() != layer.feature_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: layer.feature_dim(),
                        found: f.len(),
                    });
                }
            }
        }
        for (_, m) in &self.masks {
            if m.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.len(),
                });
            }
        }
        let size = self.outcome_space(layer.num_units());
        if size > self.enumeration_cap {
            return Err(Error::EnumerationCap {
                size,
                cap: self.enumeration_cap,
            });
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    z.exp() / (z.exp() + 1.0)
}

fn unit_logit(layer: &CoagentLayer, unit: usize, x: &[f64]) -> f64 {
    let w = &layer.unit(unit).weights;
    let mut z = w[x.len()];
    for (wi, xi) in w.iter().zip(x) {
        z += wi * xi;
    }
    z
}

/// `sigma[unit][slot]` for one context.
fn firing_probabilities(layer: &CoagentLayer, ctx: &MicroContext) -> Vec<Vec<f64>> {
    (0..layer.num_units())
        .map(|u| {
            ctx.features
                .iter()
                .map(|x| sigmoid(unit_logit(layer, u, x)))
                .collect()
        })
        .collect()
}

/// A joint assignment of actions to every (unit, available slot) pair,
/// unit-major, with its probability and the resulting recommendation
/// distribution.
struct JointAction {
    probability: f64,
    /// `(unit, slot, action)` in unit-major order.
    executions: Vec<(usize, usize, bool)>,
    /// Tied winners; each is chosen with probability `1 / winners.len()`.
    winners: Vec<usize>,
}

fn joint_actions(sigma: &[Vec<f64>], mask: &AvailabilityMask) -> Vec<JointAction> {
    let slots: Vec<usize> = mask.available_slots().collect();
    let pairs: Vec<(usize, usize)> = (0..sigma.len())
        .flat_map(|u| slots.iter().map(move |&s| (u, s)))
        .collect();
    let mut out = Vec::with_capacity(1 << pairs.len());
    for bits in 0..1u64 << pairs.len() {
        let mut probability = 1.0;
        let mut votes = vec![0u32; mask.len()];
        let mut executions = Vec::with_capacity(pairs.len());
        for (k, &(u, s)) in pairs.iter().enumerate() {
            let action = bits >> k & 1 == 1;
            let p1 = sigma[u][s];
            probability *= if action { p1 } else { 1.0 - p1 };
            if action {
                votes[s] += 1;
            }
            executions.push((u, s, action));
        }
        let winners = match slots.iter().map(|&s| votes[s]).max() {
            Some(best) => slots.iter().copied().filter(|&s| votes[s] == best).collect(),
            None => Vec::new(),
        };
        out.push(JointAction {
            probability,
            executions,
            winners,
        });
    }
    out
}

/// `J(theta) = E[sum_t gamma^t R_t]`, computed exactly.
pub fn exact_objective(env: &MicroEnv, layer: &CoagentLayer, gamma: f64) -> Result<f64> {
    env.validate(layer)?;
    let per_context: Vec<Vec<Vec<JointAction>>> = env
        .contexts
        .iter()
        .map(|c| {
            let sigma = firing_probabilities(layer, c);
            env.masks.iter().map(|(_, m)| joint_actions(&sigma, m)).collect()
        })
        .collect();
    Ok(value(env, &per_context, gamma, 0, UserState::default()))
}

fn value(
    env: &MicroEnv,
    per_context: &[Vec<Vec<JointAction>>],
    gamma: f64,
    t: usize,
    state: UserState,
) -> f64 {
    if t == env.horizon() {
        return 0.0;
    }
    let mut total = 0.0;
    for (ctx, joint_by_mask) in env.contexts.iter().zip(per_context) {
        for ((mask_p, _), joints) in env.masks.iter().zip(joint_by_mask) {
            // Recommendation distribution for this context and mask.
            let mut choice = vec![0.0; env.n_docs()];
            let mut none = 0.0;
            for j in joints {
                if j.winners.is_empty() {
                    none += j.probability;
                } else {
                    let share = j.probability / j.winners.len() as f64;
                    for &w in &j.winners {
                        choice[w] += share;
                    }
                }
            }
            let weight = ctx.probability * mask_p;
            let outcomes = choice
                .iter()
                .enumerate()
                .map(|(s, &p)| (p, Some(ctx.relevances[s])))
                .chain(std::iter::once((none, None)));
            for (p, rel) in outcomes {
                if p == 0.0 {
                    continue;
                }
                let r = compute_reward(rel, state, &env.variant);
                for &(q, inc) in use_increment_outcomes(rel, &env.variant) {
                    let next = UserState {
                        quanta: state.quanta + inc,
                    };
                    total += weight * p * q * (r + gamma * value(env, per_context, gamma, t + 1, next));
                }
            }
        }
    }
    total
}

/// One fully enumerated episode.
pub struct Trajectory<'a> {
    pub probability: f64,
    pub rewards: &'a [f64],
    pub records: &'a [ExecutionRecord],
}

/// Calls `visit` once per trajectory with nonzero probability.
pub fn for_each_trajectory<F>(env: &MicroEnv, layer: &CoagentLayer, mut visit: F) -> Result<()>
where
    F: FnMut(&Trajectory<'_>),
{
    env.validate(layer)?;
    let inputs: Vec<Vec<Arc<[f64]>>> = env
        .contexts
        .iter()
        .map(|c| c.features.iter().map(|f| Arc::from(f.as_slice())).collect())
        .collect();
    let per_context: Vec<ContextTables> = env
        .contexts
        .iter()
        .map(|c| {
            let sigma = firing_probabilities(layer, c);
            let joints = env.masks.iter().map(|(_, m)| joint_actions(&sigma, m)).collect();
            (sigma, joints)
        })
        .collect();
    let mut walker = Walker {
        env,
        inputs: &inputs,
        per_context: &per_context,
        rewards: Vec::new(),
        records: Vec::new(),
        visit: &mut visit,
    };
    walker.walk(0, UserState::default(), 1.0);
    Ok(())
}

/// Firing probabilities per (unit, slot) and joint actions per mask.
type ContextTables = (Vec<Vec<f64>>, Vec<Vec<JointAction>>);

struct Walker<'a, F> {
    env: &'a MicroEnv,
    inputs: &'a [Vec<Arc<[f64]>>],
    per_context: &'a [ContextTables],
    rewards: Vec<f64>,
    records: Vec<ExecutionRecord>,
    visit: &'a mut F,
}

impl<F: FnMut(&Trajectory<'_>)> Walker<'_, F> {
    fn walk(&mut self, t: usize, state: UserState, prob: f64) {
        if t == self.env.horizon() {
            (self.visit)(&Trajectory {
                probability: prob,
                rewards: &self.rewards,
                records: &self.records,
            });
            return;
        }
        let env = self.env;
        let per_context = self.per_context;
        for (c, ctx) in env.contexts.iter().enumerate() {
            let (sigma, joint_by_mask) = &per_context[c];
            for ((mask_p, _), joints) in env.masks.iter().zip(joint_by_mask) {
                for j in joints {
                    let p_joint = prob * ctx.probability * mask_p * j.probability;
                    if p_joint == 0.0 {
                        continue;
                    }
                    let mark = self.records.len();
                    for &(u, s, action) in &j.executions {
                        let p1 = sigma[u][s];
                        self.records.push(ExecutionRecord {
                            coagent_index: u,
                            document_slot: s,
                            time: t as u32,
                            input: Arc::clone(&self.inputs[c][s]),
                            action,
                            action_probability: if action { p1 } else { 1.0 - p1 },
                        });
                    }
                    let choices: Vec<(f64, Option<u8>)> = if j.winners.is_empty() {
                        vec![(1.0, None)]
                    } else {
                        let k = j.winners.len() as f64;
                        j.winners.iter().map(|&w| (1.0 / k, Some(ctx.relevances[w]))).collect()
                    };
                    for (p_choice, rel) in choices {
                        let r = compute_reward(rel, state, &env.variant);
                        for &(q, inc) in use_increment_outcomes(rel, &env.variant) {
                            self.rewards.push(r);
                            let next = UserState {
                                quanta: state.quanta + inc,
                            };
                            self.walk(t + 1, next, p_joint * p_choice * q);
                            self.rewards.pop();
                        }
                    }
                    self.records.truncate(mark);
                }
            }
        }
    }
}

/// `grad J` as the probability-weighted discounted return times the joint
/// score of every execution in the trajectory.
pub fn exact_policy_gradient(env: &MicroEnv, layer: &CoagentLayer, gamma: f64) -> Result<LayerGradient> {
    let width = layer.feature_dim() + 1;
    let mut grad = LayerGradient::zeros(layer.num_units(), layer.feature_dim());
    for_each_trajectory(env, layer, |traj| {
        let ret: f64 = traj
            .rewards
            .iter()
            .enumerate()
            .map(|(t, r)| gamma.powi(t as i32) * r)
            .sum();
        if ret == 0.0 {
            return;
        }
        let weight = traj.probability * ret;
        for rec in traj.records {
            let sigma = sigmoid(unit_logit(layer, rec.coagent_index, &rec.input));
            // d ln sigma = (1 - sigma) x ; d ln (1 - sigma) = -sigma x
            let coef = if rec.action { 1.0 - sigma } else { -sigma };
            let block = &mut grad.values[rec.coagent_index * width..(rec.coagent_index + 1) * width];
            for (g, x) in block.iter_mut().zip(rec.input.iter().chain(std::iter::once(&1.0))) {
                *g += weight * coef * x;
            }
        }
    })?;
    Ok(grad)
}

/// Exact expectation of the increment [`reinforce_increment`] returns for one
/// episode (the update with `alpha = 1`), using reward-to-go returns.
pub fn expected_update_increment(env: &MicroEnv, layer: &CoagentLayer, gamma: f64) -> Result<LayerGradient> {
    let mut expected = LayerGradient::zeros(layer.num_units(), layer.feature_dim());
    let mut failure = None;
    for_each_trajectory(env, layer, |traj| {
        if failure.is_some() {
            return;
        }
        let returns = Returns::reward_to_go(traj.rewards, gamma);
        match reinforce_increment(layer, traj.records, &returns, gamma) {
            Ok(inc) => expected.add_scaled(traj.probability, &inc),
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(expected),
    }
}

/// Central differences of `f` around `theta` with step `h`.
pub fn central_difference<F>(mut f: F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h}")));
    }
    let mut point = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        point[i] = theta[i] + h;
        let up = f(&point)?;
        point[i] = theta[i] - h;
        let down = f(&point)?;
        point[i] = theta[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Central differences of [`exact_objective`] in every layer parameter.
pub fn finite_difference_gradient(
    env: &MicroEnv,
    layer: &CoagentLayer,
    gamma: f64,
    h: f64,
) -> Result<LayerGradient> {
    env.validate(layer)?;
    let (units, dim) = (layer.num_units(), layer.feature_dim());
    let values = central_difference(
        |theta| exact_objective(env, &CoagentLayer::from_flat(units, dim, theta)?, gamma),
        &layer.to_flat(),
        h,
    )?;
    Ok(LayerGradient {
        feature_dim: dim,
        values,
    })
}

/// `max_i |a_i - b_i| / max(|a|_inf, |b|_inf)`, or the absolute difference
/// when both vectors are below `1e-12`.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}
