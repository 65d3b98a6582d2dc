mod common;

use coagent_edge::coagent::{log_prob_gradient, CoagentLayer, CoagentParams};
use coagent_edge::letor::Dataset;
use coagent_edge::oracle::*;
use coagent_edge::sim::{AvailabilityMask, Mode, SimVariant};
use common::*;
use proptest::prelude::*;

const RTOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;

fn sigma(w: &[f64], x: &[f64]) -> f64 {
    let z: f64 = w.iter().zip(x.iter().chain(std::iter::once(&1.0))).map(|(a, b)| a * b).sum();
    1.0 / (1.0 + (-z).exp())
}

#[test]
fn constant_reward_has_zero_gradient() {
    // Every document has the same relevance, so the choice cannot matter.
    let variant = SimVariant::new(Dataset::Mslr, Mode::Bandit);
    let mut contexts = random_contexts(3, 2, 2, 4, 9);
    for c in &mut contexts {
        c.relevances = vec![3, 3];
    }
    // p = 0 keeps the NoRecommendation outcome (reward 0) out.
    let env = MicroEnv::with_unreliability(contexts, 0.0, variant).unwrap();
    let layer = layer_with_scale(2, 2, 0.5, 10);
    let exact = exact_policy_gradient(&env, &layer, 1.0).unwrap();
    assert!(exact.max_abs() < 1e-12, "{:?}", exact.values);
    let fd = finite_difference_gradient(&env, &layer, 1.0, FD_STEP).unwrap();
    assert!(fd.max_abs() < 1e-9, "{:?}", fd.values);
}

#[test]
fn one_unit_closed_form() {
    // One unit, two documents: A (relevance 1) and B (relevance 0).
    // P(A) = 1/2 + (sigma_a - sigma_b) / 2, so
    // grad J = sum_c p_c / 2 [sigma_a (1 - sigma_a) [x_a; 1] - sigma_b (1 - sigma_b) [x_b; 1]].
    let contexts = vec![
        MicroContext {
            probability: 0.3,
            features: vec![vec![0.5, -1.0], vec![-0.25, 0.75]],
            relevances: vec![1, 0],
        },
        MicroContext {
            probability: 0.7,
            features: vec![vec![-0.6, 0.2], vec![0.9, 0.1]],
            relevances: vec![1, 0],
        },
    ];
    let env = MicroEnv::with_unreliability(contexts.clone(), 0.0, SimVariant::new(Dataset::Mq2008, Mode::Bandit)).unwrap();
    let w = vec![0.4, -0.3, 0.1];
    let layer = CoagentLayer::from_units(2, vec![CoagentParams { weights: w.clone() }]).unwrap();

    let mut expected = vec![0.0; 3];
    for c in &contexts {
        let (sa, sb) = (sigma(&w, &c.features[0]), sigma(&w, &c.features[1]));
        let xa: Vec<f64> = c.features[0].iter().copied().chain([1.0]).collect();
        let xb: Vec<f64> = c.features[1].iter().copied().chain([1.0]).collect();
        for j in 0..3 {
            expected[j] += c.probability * 0.5 * (sa * (1.0 - sa) * xa[j] - sb * (1.0 - sb) * xb[j]);
        }
    }
    let exact = exact_policy_gradient(&env, &layer, 1.0).unwrap();
    assert!(max_relative_error(&exact.values, &expected) < 1e-12, "{:?} vs {expected:?}", exact.values);
    let fd = finite_difference_gradient(&env, &layer, 1.0, FD_STEP).unwrap();
    assert!(max_relative_error(&fd.values, &exact.values) < RTOL);
}

fn check_all_routes(env: &MicroEnv, layer: &CoagentLayer, gamma: f64) {
    let exact = exact_policy_gradient(env, layer, gamma).unwrap();
    let expected = expected_update_increment(env, layer, gamma).unwrap();
    let fd = finite_difference_gradient(env, layer, gamma, FD_STEP).unwrap();
    assert!(exact.max_abs() > 1e-3, "degenerate instance");
    let e1 = max_relative_error(&expected.values, &exact.values);
    let e2 = max_relative_error(&exact.values, &fd.values);
    assert!(e1 < RTOL, "update vs exact: {e1:e}");
    assert!(e2 < RTOL, "exact vs finite differences: {e2:e}");
}

#[test]
fn bandit_routes_agree() {
    let (env, layer) = bandit_env();
    check_all_routes(&env, &layer, 1.0);
}

#[test]
fn rl_routes_agree() {
    let (env, layer) = rl_env();
    check_all_routes(&env, &layer, 0.9);
    check_all_routes(&env, &layer, 1.0);
}

#[test]
fn correlated_masks_routes_agree() {
    let (env, layer) = rl_env_correlated_masks();
    check_all_routes(&env, &layer, 1.0);
}

#[test]
fn fully_unavailable_documents_give_zero_gradient() {
    let variant = SimVariant::new(Dataset::Mslr, Mode::Bandit);
    let env = MicroEnv::with_unreliability(random_contexts(2, 2, 2, 4, 11), 1.0, variant).unwrap();
    let layer = layer_with_scale(2, 2, 0.5, 12);
    assert_eq!(exact_policy_gradient(&env, &layer, 1.0).unwrap().max_abs(), 0.0);
    assert_eq!(expected_update_increment(&env, &layer, 1.0).unwrap().max_abs(), 0.0);
    assert_eq!(exact_objective(&env, &layer, 1.0).unwrap(), 0.0);
}

#[test]
fn permuting_slots_leaves_expected_update() {
    let (env, layer) = rl_env_correlated_masks();
    let mut swapped = env.clone();
    for c in &mut swapped.contexts {
        c.features.reverse();
        c.relevances.reverse();
    }
    for (_, m) in &mut swapped.masks {
        let mut v = m.as_slice().to_vec();
        v.reverse();
        *m = AvailabilityMask::new(v);
    }
    let a = expected_update_increment(&env, &layer, 1.0).unwrap();
    let b = expected_update_increment(&swapped, &layer, 1.0).unwrap();
    assert!(max_relative_error(&a.values, &b.values) < 1e-12);
    let ja = exact_objective(&env, &layer, 1.0).unwrap();
    let jb = exact_objective(&swapped, &layer, 1.0).unwrap();
    assert!((ja - jb).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_gradient_matches_finite_differences(
        w in prop::collection::vec(-3.0f64..3.0, 4),
        x in prop::collection::vec(-1.0f64..1.0, 3),
        action: bool,
    ) {
        let p = CoagentParams { weights: w.clone() };
        let g = log_prob_gradient(&p, &x, action).unwrap();
        let fd = central_difference(
            |theta| {
                let s = CoagentParams { weights: theta.to_vec() }.action_probability(&x)?;
                Ok(if action { s.ln() } else { (1.0 - s).ln() })
            },
            &w,
            1e-5,
        ).unwrap();
        for (a, b) in g.iter().zip(&fd) {
            prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn random_bandit_instances_are_unbiased(seed in 0u64..1000, p in 0.0f64..0.9) {
        let variant = SimVariant::new(Dataset::Mslr, Mode::Bandit);
        let env = MicroEnv::with_unreliability(random_contexts(2, 2, 1, 4, seed), p, variant).unwrap();
        let layer = layer_with_scale(2, 1, 1.0, seed + 1);
        let exact = exact_policy_gradient(&env, &layer, 1.0).unwrap();
        let expected = expected_update_increment(&env, &layer, 1.0).unwrap();
        prop_assert!(max_relative_error(&exact.values, &expected.values) < RTOL);
    }
}
