//! Shared helpers for integration tests: seeded random model generation and
//! an independent brute-force Bayes oracle.

use rand::Rng;
use safe_mpomdp::model::{Belief, JointAction, JointObservation, MpomdpModel};

pub struct ModelShape {
    pub max_states: usize,
    pub max_agents: usize,
    pub max_actions_per_agent: usize,
    pub max_observations_per_agent: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            max_states: 6,
            max_agents: 2,
            max_actions_per_agent: 3,
            max_observations_per_agent: 3,
        }
    }
}

fn random_row(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-3).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// A random fully-stochastic model of the given shape.
pub fn random_model(rng: &mut impl Rng, shape: &ModelShape) -> MpomdpModel {
    let n = rng.random_range(1..=shape.max_states);
    let agents = rng.random_range(1..=shape.max_agents);
    let actions: Vec<Vec<String>> = (0..agents)
        .map(|i| {
            (0..rng.random_range(1..=shape.max_actions_per_agent))
                .map(|a| format!("a{i}_{a}"))
                .collect()
        })
        .collect();
    let observations: Vec<Vec<String>> = (0..agents)
        .map(|i| {
            (0..rng.random_range(1..=shape.max_observations_per_agent))
                .map(|z| format!("z{i}_{z}"))
                .collect()
        })
        .collect();
    let na: usize = actions.iter().map(|a| a.len()).product();
    let nz: usize = observations.iter().map(|z| z.len()).product();

    let model = MpomdpModel {
        agents: (0..agents).map(|i| format!("agent{i}")).collect(),
        states: (0..n).map(|q| format!("s{q}")).collect(),
        initial_belief: random_row(rng, n),
        actions,
        observations,
        transition: (0..n)
            .map(|_| (0..na).map(|_| random_row(rng, n)).collect())
            .collect(),
        reward: (0..n)
            .map(|_| (0..na).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect(),
        observation_fn: (0..n)
            .map(|_| (0..na).map(|_| random_row(rng, nz)).collect())
            .collect(),
    };
    assert!(model.validate().is_empty(), "generator must produce valid models");
    model
}

pub fn random_belief(rng: &mut impl Rng, n: usize) -> Belief {
    Belief::new(random_row(rng, n)).expect("random row is on the simplex")
}

/// Independent Bayes oracle: enumerate the joint distribution over
/// `(q, q', z)`, condition on the received observation, marginalize the
/// previous state. Returns `None` when the observation has zero mass.
pub fn bayes_oracle(
    model: &MpomdpModel,
    prev: &Belief,
    action: &JointAction,
    obs: &JointObservation,
) -> Option<Vec<f64>> {
    let n = model.num_states();
    let nz = model.num_joint_observations();
    let mut joint = vec![vec![vec![0.0; nz]; n]; n];
    for (q, &pq) in prev.probs().iter().enumerate() {
        for q2 in 0..n {
            for z in 0..nz {
                joint[q][q2][z] = pq
                    * model.transition[q][action.joint][q2]
                    * model.observation_fn[q2][action.joint][z];
            }
        }
    }
    let mut conditioned = vec![0.0; n];
    let mut total = 0.0;
    for q in 0..n {
        for q2 in 0..n {
            conditioned[q2] += joint[q][q2][obs.joint];
            total += joint[q][q2][obs.joint];
        }
    }
    if total <= 1e-12 {
        return None;
    }
    Some(conditioned.into_iter().map(|p| p / total).collect())
}
