//! Filter correctness against an independent brute-force Bayes oracle, plus
//! normalization and likelihood-partition properties on random models.

mod common;

use common::{bayes_oracle, random_belief, random_model, ModelShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safe_mpomdp::model::ModelError;

#[test]
fn belief_update_matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0B);
    let shape = ModelShape { max_agents: 1, max_actions_per_agent: 4, max_observations_per_agent: 4, ..Default::default() };
    for case in 0..100 {
        let model = random_model(&mut rng, &shape);
        let prev = random_belief(&mut rng, model.num_states());
        for a in 0..model.num_joint_actions() {
            let action = model.joint_action_from_index(a);
            for z in 0..model.num_joint_observations() {
                let obs = model.joint_observation_from_index(z);
                let expected = bayes_oracle(&model, &prev, &action, &obs);
                match (model.belief_update(&prev, &action, &obs), expected) {
                    (Ok(posterior), Some(oracle)) => {
                        for (got, want) in posterior.probs().iter().zip(&oracle) {
                            assert!(
                                (got - want).abs() <= 1e-12,
                                "case {case}: filter {got} vs oracle {want}"
                            );
                        }
                    }
                    (Err(ModelError::ImpossibleObservation { .. }), None) => {}
                    (got, want) => panic!("case {case}: filter {got:?} vs oracle {want:?}"),
                }
            }
        }
    }
}

#[test]
fn observation_likelihoods_partition_unity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11C);
    for _ in 0..50 {
        let model = random_model(&mut rng, &ModelShape::default());
        let belief = random_belief(&mut rng, model.num_states());
        for a in 0..model.num_joint_actions() {
            let action = model.joint_action_from_index(a);
            let total: f64 = (0..model.num_joint_observations())
                .map(|z| {
                    model.observation_likelihood(
                        &belief,
                        &action,
                        &model.joint_observation_from_index(z),
                    )
                })
                .sum();
            assert!((total - 1.0).abs() <= 1e-9, "likelihoods sum to {total}");
        }
    }
}

#[test]
fn ten_thousand_updates_stay_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let model = random_model(
        &mut rng,
        &ModelShape { max_states: 6, max_agents: 2, ..Default::default() },
    );
    let mut belief = random_belief(&mut rng, model.num_states());
    let mut state = 0usize;
    for step in 0..10_000 {
        let a = rng.random_range(0..model.num_joint_actions());
        let action = model.joint_action_from_index(a);
        let (next, obs) = model.sample_step(state, &action, &mut rng);
        state = next;
        belief = model
            .belief_update(&belief, &action, &obs)
            .expect("sampled observations have positive likelihood");
        let sum: f64 = belief.probs().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9, "step {step}: sum drifted to {sum}");
    }
}

#[test]
fn point_mass_chains_stay_point_masses() {
    // Point-mass prior, deterministic transition row, consistent observation.
    let mut rng = ChaCha8Rng::seed_from_u64(0xDE6);
    for _ in 0..50 {
        let mut model = random_model(&mut rng, &ModelShape::default());
        let n = model.num_states();
        let q0 = rng.random_range(0..n);
        let q1 = rng.random_range(0..n);
        let a = rng.random_range(0..model.num_joint_actions());
        let mut row = vec![0.0; n];
        row[q1] = 1.0;
        model.transition[q0][a] = row;
        let action = model.joint_action_from_index(a);
        let prev = safe_mpomdp::Belief::point_mass(n, q0);
        for z in 0..model.num_joint_observations() {
            if model.observation_fn[q1][a][z] <= 0.0 {
                continue;
            }
            let obs = model.joint_observation_from_index(z);
            let posterior = model.belief_update(&prev, &action, &obs).unwrap();
            assert_eq!(posterior.probs()[q1], 1.0);
            let mass: f64 = posterior.probs().iter().sum();
            assert_eq!(mass, 1.0);
        }
    }
}
