//! Multi-agent POMDP models and exact joint-belief filtering.
//!
//! A model is the tuple of agents, hidden states, initial state distribution,
//! per-agent action and observation sets, and dense transition / reward /
//! observation tables indexed by state and joint-action indices. Joint actions
//! and joint observations are mixed-radix encodings of the per-agent indices
//! with agent 0 most significant, so enumeration order is stable across runs.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on probability rows and simplex sums.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Cutoff below which an observation normalizer counts as zero likelihood.
pub const LIKELIHOOD_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    /// The received joint observation has (numerically) zero likelihood under
    /// the given prior belief and joint action, so no posterior exists.
    #[error("observation has zero likelihood ({likelihood:.3e}) under the given belief and action")]
    ImpossibleObservation { likelihood: f64 },

    #[error("model failed validation: {0:?}")]
    Invalid(Vec<Violation>),

    #[error("malformed model document: {0}")]
    Parse(String),

    #[error("vector of length {len} is not a probability distribution: {reason}")]
    NotADistribution { len: usize, reason: String },
}

/// A single defect found by [`MpomdpModel::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    EmptyAgents,
    EmptyStates,
    EmptyActionSet { agent: usize },
    EmptyObservationSet { agent: usize },
    InitialBeliefSum { sum: f64 },
    NegativeInitialBelief { state: usize, value: f64 },
    TransitionRowSum { state: usize, joint_action: usize, sum: f64 },
    NegativeTransition { state: usize, joint_action: usize, next_state: usize, value: f64 },
    ObservationRowSum { next_state: usize, joint_action: usize, sum: f64 },
    NegativeObservation { next_state: usize, joint_action: usize, joint_obs: usize, value: f64 },
    RewardNotFinite { state: usize, joint_action: usize },
    DimensionMismatch { table: &'static str, detail: String },
}

/// Joint action: per-agent action indices plus the dense mixed-radix index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointAction {
    pub joint: usize,
    pub per_agent: Vec<usize>,
}

/// Joint observation: per-agent observation indices plus the dense index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointObservation {
    pub joint: usize,
    pub per_agent: Vec<usize>,
}

/// Encode per-component indices into a dense index, component 0 most significant.
pub(crate) fn mixed_radix_encode(parts: &[usize], radices: &[usize]) -> usize {
    debug_assert_eq!(parts.len(), radices.len());
    let mut joint = 0;
    for (part, radix) in parts.iter().zip(radices) {
        debug_assert!(part < radix);
        joint = joint * radix + part;
    }
    joint
}

/// Decode a dense index into per-component indices, component 0 most significant.
pub(crate) fn mixed_radix_decode(mut joint: usize, radices: &[usize]) -> Vec<usize> {
    let mut parts = vec![0; radices.len()];
    for i in (0..radices.len()).rev() {
        parts[i] = joint % radices[i];
        joint /= radices[i];
    }
    debug_assert_eq!(joint, 0);
    parts
}

/// Probability vector over the hidden states (a point on the unit simplex).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Validates that `probs` is on the simplex within [`SIMPLEX_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        let len = probs.len();
        if len == 0 {
            return Err(ModelError::NotADistribution { len, reason: "empty".into() });
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0 + SIMPLEX_TOLERANCE).contains(p)) {
            return Err(ModelError::NotADistribution {
                len,
                reason: format!("entry {p} outside [0, 1]"),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(ModelError::NotADistribution { len, reason: format!("sum {sum} != 1") });
        }
        Ok(Belief(probs))
    }

    pub fn uniform(n: usize) -> Self {
        Belief(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, state: usize) -> Self {
        assert!(state < n, "point mass state out of range");
        let mut probs = vec![0.0; n];
        probs[state] = 1.0;
        Belief(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = ModelError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Belief::new(v)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Vec<f64> {
        b.0
    }
}

/// The full model tuple with dense tables.
///
/// Table layout: `transition[q][a][q']`, `reward[q][a]`,
/// `observation_fn[q'][a][z]` where `a` and `z` are joint indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MpomdpModel {
    pub agents: Vec<String>,
    pub states: Vec<String>,
    pub initial_belief: Vec<f64>,
    /// Per-agent action names; `actions[i]` belongs to `agents[i]`.
    pub actions: Vec<Vec<String>>,
    /// Per-agent observation names.
    pub observations: Vec<Vec<String>>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    pub observation_fn: Vec<Vec<Vec<f64>>>,
}

impl MpomdpModel {
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn action_radices(&self) -> Vec<usize> {
        self.actions.iter().map(|a| a.len()).collect()
    }

    pub fn observation_radices(&self) -> Vec<usize> {
        self.observations.iter().map(|z| z.len()).collect()
    }

    pub fn num_joint_actions(&self) -> usize {
        self.actions.iter().map(|a| a.len()).product()
    }

    pub fn num_joint_observations(&self) -> usize {
        self.observations.iter().map(|z| z.len()).product()
    }

    pub fn joint_action(&self, per_agent: Vec<usize>) -> JointAction {
        let joint = mixed_radix_encode(&per_agent, &self.action_radices());
        JointAction { joint, per_agent }
    }

    pub fn joint_action_from_index(&self, joint: usize) -> JointAction {
        JointAction { joint, per_agent: mixed_radix_decode(joint, &self.action_radices()) }
    }

    pub fn joint_observation(&self, per_agent: Vec<usize>) -> JointObservation {
        let joint = mixed_radix_encode(&per_agent, &self.observation_radices());
        JointObservation { joint, per_agent }
    }

    pub fn joint_observation_from_index(&self, joint: usize) -> JointObservation {
        JointObservation { joint, per_agent: mixed_radix_decode(joint, &self.observation_radices()) }
    }

    /// All joint actions in mixed-radix order (agent 0 most significant).
    pub fn enumerate_joint_actions(&self) -> Vec<JointAction> {
        (0..self.num_joint_actions()).map(|j| self.joint_action_from_index(j)).collect()
    }

    /// Checks every stochasticity and shape requirement; an empty list means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.agents.is_empty() {
            out.push(Violation::EmptyAgents);
        }
        if self.states.is_empty() {
            out.push(Violation::EmptyStates);
        }
        for (i, acts) in self.actions.iter().enumerate() {
            if acts.is_empty() {
                out.push(Violation::EmptyActionSet { agent: i });
            }
        }
        for (i, obs) in self.observations.iter().enumerate() {
            if obs.is_empty() {
                out.push(Violation::EmptyObservationSet { agent: i });
            }
        }
        if self.actions.len() != self.agents.len() {
            out.push(Violation::DimensionMismatch {
                table: "actions",
                detail: format!("{} action sets for {} agents", self.actions.len(), self.agents.len()),
            });
        }
        if self.observations.len() != self.agents.len() {
            out.push(Violation::DimensionMismatch {
                table: "observations",
                detail: format!(
                    "{} observation sets for {} agents",
                    self.observations.len(),
                    self.agents.len()
                ),
            });
        }
        if !out.is_empty() {
            // Shape errors make the index arithmetic below meaningless.
            return out;
        }

        let n = self.num_states();
        let na = self.num_joint_actions();
        let nz = self.num_joint_observations();

        if self.initial_belief.len() != n {
            out.push(Violation::DimensionMismatch {
                table: "initial_belief",
                detail: format!("length {} for {} states", self.initial_belief.len(), n),
            });
        } else {
            for (q, &p) in self.initial_belief.iter().enumerate() {
                if p < 0.0 {
                    out.push(Violation::NegativeInitialBelief { state: q, value: p });
                }
            }
            let sum: f64 = self.initial_belief.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                out.push(Violation::InitialBeliefSum { sum });
            }
        }

        if self.transition.len() != n
            || self.transition.iter().any(|rows| rows.len() != na)
            || self.transition.iter().flatten().any(|row| row.len() != n)
        {
            out.push(Violation::DimensionMismatch {
                table: "transition",
                detail: format!("expected [{n}][{na}][{n}]"),
            });
        } else {
            for (q, rows) in self.transition.iter().enumerate() {
                for (a, row) in rows.iter().enumerate() {
                    for (q2, &p) in row.iter().enumerate() {
                        if p < 0.0 {
                            out.push(Violation::NegativeTransition {
                                state: q,
                                joint_action: a,
                                next_state: q2,
                                value: p,
                            });
                        }
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                        out.push(Violation::TransitionRowSum { state: q, joint_action: a, sum });
                    }
                }
            }
        }

        if self.observation_fn.len() != n
            || self.observation_fn.iter().any(|rows| rows.len() != na)
            || self.observation_fn.iter().flatten().any(|row| row.len() != nz)
        {
            out.push(Violation::DimensionMismatch {
                table: "observation_fn",
                detail: format!("expected [{n}][{na}][{nz}]"),
            });
        } else {
            for (q2, rows) in self.observation_fn.iter().enumerate() {
                for (a, row) in rows.iter().enumerate() {
                    for (z, &p) in row.iter().enumerate() {
                        if p < 0.0 {
                            out.push(Violation::NegativeObservation {
                                next_state: q2,
                                joint_action: a,
                                joint_obs: z,
                                value: p,
                            });
                        }
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                        out.push(Violation::ObservationRowSum { next_state: q2, joint_action: a, sum });
                    }
                }
            }
        }

        if self.reward.len() != n || self.reward.iter().any(|row| row.len() != na) {
            out.push(Violation::DimensionMismatch {
                table: "reward",
                detail: format!("expected [{n}][{na}]"),
            });
        } else {
            for (q, row) in self.reward.iter().enumerate() {
                for (a, &r) in row.iter().enumerate() {
                    if !r.is_finite() {
                        out.push(Violation::RewardNotFinite { state: q, joint_action: a });
                    }
                }
            }
        }

        out
    }

    /// Parses and validates a JSON model document.
    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let model: MpomdpModel =
            serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        let violations = model.validate();
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    /// One exact Bayes step: condition the predicted state distribution on the
    /// received joint observation, then renormalize.
    pub fn belief_update(
        &self,
        prev: &Belief,
        action: &JointAction,
        obs: &JointObservation,
    ) -> Result<Belief, ModelError> {
        let n = self.num_states();
        let a = action.joint;
        let z = obs.joint;
        let mut unnormalized = vec![0.0; n];
        for q2 in 0..n {
            let mut predicted = 0.0;
            for (q, &p) in prev.probs().iter().enumerate() {
                predicted += self.transition[q][a][q2] * p;
            }
            unnormalized[q2] = self.observation_fn[q2][a][z] * predicted;
        }
        let normalizer: f64 = unnormalized.iter().sum();
        if normalizer <= LIKELIHOOD_CUTOFF {
            return Err(ModelError::ImpossibleObservation { likelihood: normalizer });
        }
        for p in &mut unnormalized {
            *p /= normalizer;
        }
        // Renormalize once more to absorb accumulated rounding.
        let sum: f64 = unnormalized.iter().sum();
        for p in &mut unnormalized {
            *p /= sum;
        }
        Ok(Belief(unnormalized))
    }

    /// Prediction-only posterior: the transition kernel applied to `prev` with
    /// the observation marginalized out. Used when no observation exists yet.
    pub fn predict(&self, prev: &Belief, action: &JointAction) -> Belief {
        let n = self.num_states();
        let a = action.joint;
        let mut predicted = vec![0.0; n];
        for (q, &p) in prev.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for q2 in 0..n {
                predicted[q2] += self.transition[q][a][q2] * p;
            }
        }
        let sum: f64 = predicted.iter().sum();
        for p in &mut predicted {
            *p /= sum;
        }
        Belief(predicted)
    }

    /// Marginal probability of receiving `obs` after taking `action` from `prev`.
    pub fn observation_likelihood(
        &self,
        prev: &Belief,
        action: &JointAction,
        obs: &JointObservation,
    ) -> f64 {
        let n = self.num_states();
        let a = action.joint;
        let z = obs.joint;
        let mut likelihood = 0.0;
        for q2 in 0..n {
            let mut predicted = 0.0;
            for (q, &p) in prev.probs().iter().enumerate() {
                predicted += self.transition[q][a][q2] * p;
            }
            likelihood += self.observation_fn[q2][a][z] * predicted;
        }
        likelihood
    }

    /// Expected immediate reward of `action` under `belief`.
    pub fn expected_reward(&self, belief: &Belief, action: &JointAction) -> f64 {
        belief
            .probs()
            .iter()
            .enumerate()
            .map(|(q, &p)| p * self.reward[q][action.joint])
            .sum()
    }

    /// Ground-truth simulation step: draws the next state from the transition
    /// row and the joint observation from the observation row.
    pub fn sample_step(
        &self,
        true_state: usize,
        action: &JointAction,
        rng: &mut impl Rng,
    ) -> (usize, JointObservation) {
        let next = sample_index(&self.transition[true_state][action.joint], rng);
        let z = sample_index(&self.observation_fn[next][action.joint], rng);
        (next, self.joint_observation_from_index(z))
    }
}

/// Draws an index from a probability row by inverse-CDF scan.
pub(crate) fn sample_index(row: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (i, &p) in row.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    // Rounding can leave the cumulative sum a hair under u; return the last
    // index with positive mass.
    row.iter().rposition(|&p| p > 0.0).expect("probability row with no mass")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// A 2-state, 1-agent model with identity dynamics and a configurable
    /// 2-symbol observation channel.
    fn two_state_model(o_q0_z0: f64, o_q1_z0: f64) -> MpomdpModel {
        MpomdpModel {
            agents: vec!["solo".into()],
            states: vec!["q0".into(), "q1".into()],
            initial_belief: vec![0.5, 0.5],
            actions: vec![vec!["stay".into()]],
            observations: vec![vec!["z0".into(), "z1".into()]],
            transition: vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            reward: vec![vec![0.0], vec![0.0]],
            observation_fn: vec![
                vec![vec![o_q0_z0, 1.0 - o_q0_z0]],
                vec![vec![o_q1_z0, 1.0 - o_q1_z0]],
            ],
        }
    }

    #[test]
    fn validate_accepts_well_formed_model() {
        let model = two_state_model(0.8, 0.2);
        assert!(model.validate().is_empty());
    }

    #[test]
    fn validate_flags_bad_transition_row() {
        let mut model = two_state_model(0.8, 0.2);
        model.transition[0][0] = vec![0.6, 0.3]; // sums to 0.9
        let violations = model.validate();
        assert_eq!(violations.len(), 1);
        match &violations[0] {
            Violation::TransitionRowSum { state: 0, joint_action: 0, sum } => {
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected violation {other:?}"),
        }
    }

    #[test]
    fn validate_flags_negative_observation_entry() {
        let mut model = two_state_model(0.8, 0.2);
        model.observation_fn[1][0] = vec![-0.1, 1.1];
        let violations = model.validate();
        assert!(violations.contains(&Violation::NegativeObservation {
            next_state: 1,
            joint_action: 0,
            joint_obs: 0,
            value: -0.1,
        }));
    }

    #[test]
    fn validate_flags_empty_sets() {
        let model = MpomdpModel {
            agents: vec![],
            states: vec![],
            initial_belief: vec![],
            actions: vec![],
            observations: vec![],
            transition: vec![],
            reward: vec![],
            observation_fn: vec![],
        };
        let violations = model.validate();
        assert!(violations.contains(&Violation::EmptyAgents));
        assert!(violations.contains(&Violation::EmptyStates));
    }

    #[test]
    fn three_agents_five_actions_each_gives_125_joint_actions() {
        let mut model = two_state_model(0.5, 0.5);
        model.agents = vec!["a".into(), "b".into(), "c".into()];
        let five: Vec<String> = (0..5).map(|i| format!("act{i}")).collect();
        model.actions = vec![five.clone(), five.clone(), five];
        model.observations = vec![vec!["z".into()], vec!["z".into()], vec!["z".into()]];
        assert_eq!(model.num_joint_actions(), 125);
        assert_eq!(model.enumerate_joint_actions().len(), 125);
    }

    #[test]
    fn singleton_team_enumerates_its_own_actions() {
        let mut model = two_state_model(0.5, 0.5);
        model.actions = vec![vec!["stay".into(), "go".into()]];
        let actions = model.enumerate_joint_actions();
        assert_eq!(actions.len(), 2);
        assert_eq!(actions[0].per_agent, vec![0]);
        assert_eq!(actions[1].per_agent, vec![1]);
    }

    #[test]
    fn two_agent_enumeration_is_lexicographic() {
        let mut model = two_state_model(0.5, 0.5);
        model.agents = vec!["a".into(), "b".into()];
        model.actions = vec![
            vec!["a0".into(), "a1".into()],
            vec!["b0".into(), "b1".into(), "b2".into()],
        ];
        model.observations = vec![vec!["z".into()], vec!["z".into()]];
        let actions = model.enumerate_joint_actions();
        // Exhaustive expectation for |A1|=2, |A2|=3.
        let expected: Vec<Vec<usize>> = vec![
            vec![0, 0],
            vec![0, 1],
            vec![0, 2],
            vec![1, 0],
            vec![1, 1],
            vec![1, 2],
        ];
        let got: Vec<Vec<usize>> = actions.iter().map(|a| a.per_agent.clone()).collect();
        assert_eq!(got, expected);
        for (i, a) in actions.iter().enumerate() {
            assert_eq!(a.joint, i);
        }
    }

    #[test]
    fn uninformative_observation_keeps_belief() {
        let model = two_state_model(0.5, 0.5);
        let prev = Belief::new(vec![0.3, 0.7]).unwrap();
        let action = model.joint_action_from_index(0);
        let obs = model.joint_observation_from_index(0);
        let post = model.belief_update(&prev, &action, &obs).unwrap();
        assert!((post.probs()[0] - 0.3).abs() < 1e-12);
        assert!((post.probs()[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn two_state_toy_matches_hand_computation() {
        // O(q0,z0)=0.8, O(q1,z0)=0.2, identity T, prev=[0.5,0.5], z=z0:
        // posterior = [0.8*0.5, 0.2*0.5] / 0.5 = [0.8, 0.2].
        let model = two_state_model(0.8, 0.2);
        let prev = Belief::new(vec![0.5, 0.5]).unwrap();
        let action = model.joint_action_from_index(0);
        let obs = model.joint_observation_from_index(0);
        let post = model.belief_update(&prev, &action, &obs).unwrap();
        assert!((post.probs()[0] - 0.8).abs() < 1e-12);
        assert!((post.probs()[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_belief_is_a_fixed_point() {
        let model = two_state_model(1.0, 0.0);
        let prev = Belief::point_mass(2, 0);
        let action = model.joint_action_from_index(0);
        let obs = model.joint_observation_from_index(0);
        let post = model.belief_update(&prev, &action, &obs).unwrap();
        assert_eq!(post.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn zero_likelihood_observation_is_an_error() {
        // O(q0, z1) = 0 and the belief is a point mass on q0.
        let model = two_state_model(1.0, 0.0);
        let prev = Belief::point_mass(2, 0);
        let action = model.joint_action_from_index(0);
        let obs = model.joint_observation_from_index(1);
        match model.belief_update(&prev, &action, &obs) {
            Err(ModelError::ImpossibleObservation { likelihood }) => {
                assert!(likelihood <= LIKELIHOOD_CUTOFF);
            }
            other => panic!("expected ImpossibleObservation, got {other:?}"),
        }
    }

    #[test]
    fn uniform_observation_likelihood_is_symmetric() {
        let mut model = two_state_model(0.25, 0.25);
        model.observations = vec![vec!["z0".into(), "z1".into(), "z2".into(), "z3".into()]];
        model.observation_fn =
            vec![vec![vec![0.25; 4]], vec![vec![0.25; 4]]];
        let prev = Belief::new(vec![0.4, 0.6]).unwrap();
        let action = model.joint_action_from_index(0);
        for z in 0..4 {
            let obs = model.joint_observation_from_index(z);
            let lik = model.observation_likelihood(&prev, &action, &obs);
            assert!((lik - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn observation_likelihood_matches_hand_computation() {
        let model = two_state_model(0.8, 0.2);
        let prev = Belief::new(vec![0.5, 0.5]).unwrap();
        let action = model.joint_action_from_index(0);
        let obs = model.joint_observation_from_index(0);
        // 0.8 * 0.5 + 0.2 * 0.5 = 0.5
        let lik = model.observation_likelihood(&prev, &action, &obs);
        assert!((lik - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deterministic_observation_has_likelihood_one() {
        let model = two_state_model(1.0, 1.0);
        let prev = Belief::new(vec![0.3, 0.7]).unwrap();
        let action = model.joint_action_from_index(0);
        let obs = model.joint_observation_from_index(0);
        let lik = model.observation_likelihood(&prev, &action, &obs);
        assert!((lik - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_reward_is_belief_independent() {
        let mut model = two_state_model(0.5, 0.5);
        model.reward = vec![vec![3.0], vec![3.0]];
        let action = model.joint_action_from_index(0);
        for belief in [Belief::uniform(2), Belief::new(vec![0.9, 0.1]).unwrap()] {
            assert!((model.expected_reward(&belief, &action) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn expected_reward_is_a_dot_product() {
        let mut model = two_state_model(0.5, 0.5);
        model.reward = vec![vec![4.0], vec![0.0]];
        let belief = Belief::new(vec![0.25, 0.75]).unwrap();
        let action = model.joint_action_from_index(0);
        assert!((model.expected_reward(&belief, &action) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_reward_reads_the_table() {
        let mut model = two_state_model(0.5, 0.5);
        model.reward = vec![vec![-2.5], vec![7.0]];
        let action = model.joint_action_from_index(0);
        let belief = Belief::point_mass(2, 0);
        assert_eq!(model.expected_reward(&belief, &action), -2.5);
    }

    #[test]
    fn deterministic_rows_sample_the_unique_outcome() {
        let model = two_state_model(1.0, 0.0);
        let action = model.joint_action_from_index(0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (next, obs) = model.sample_step(0, &action, &mut rng);
            assert_eq!(next, 0);
            assert_eq!(obs.joint, 0);
        }
    }

    #[test]
    fn sample_step_frequencies_match_the_row() {
        let mut model = two_state_model(0.5, 0.5);
        model.transition = vec![vec![vec![0.7, 0.3]], vec![vec![0.0, 1.0]]];
        let action = model.joint_action_from_index(0);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let trials = 100_000;
        let mut hits = 0usize;
        for _ in 0..trials {
            let (next, _) = model.sample_step(0, &action, &mut rng);
            if next == 0 {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        assert!((freq - 0.7).abs() < 0.01, "frequency {freq} too far from 0.7");
    }

    #[test]
    fn absorbing_state_stays_put() {
        let model = two_state_model(0.5, 0.5); // identity dynamics: both states absorbing
        let action = model.joint_action_from_index(0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (next, _) = model.sample_step(1, &action, &mut rng);
            assert_eq!(next, 1);
        }
    }

    #[test]
    fn degenerate_chain_propagates_point_mass() {
        // prev point mass at q0, T(q0,a,.) point mass at q1, O(q1,a,z0) > 0.
        let mut model = two_state_model(0.3, 0.6);
        model.transition = vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0]]];
        let prev = Belief::point_mass(2, 0);
        let action = model.joint_action_from_index(0);
        let obs = model.joint_observation_from_index(0);
        let post = model.belief_update(&prev, &action, &obs).unwrap();
        assert_eq!(post.probs(), &[0.0, 1.0]);
    }

    #[test]
    fn loader_rejects_invalid_document() {
        let model = two_state_model(0.8, 0.2);
        let mut doc = serde_json::to_value(&model).unwrap();
        doc["transition"][0][0] = serde_json::json!([0.5, 0.4]);
        let text = serde_json::to_string(&doc).unwrap();
        match MpomdpModel::from_json_str(&text) {
            Err(ModelError::Invalid(v)) => assert_eq!(v.len(), 1),
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn loader_round_trips_valid_document() {
        let model = two_state_model(0.8, 0.2);
        let text = serde_json::to_string(&model).unwrap();
        let loaded = MpomdpModel::from_json_str(&text).unwrap();
        assert_eq!(loaded.states, model.states);
        assert_eq!(loaded.transition, model.transition);
    }

    #[test]
    fn belief_rejects_off_simplex_vectors() {
        assert!(Belief::new(vec![0.5, 0.4]).is_err());
        assert!(Belief::new(vec![1.2, -0.2]).is_err());
        assert!(Belief::new(vec![]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mixed_radix_round_trips(radices in proptest::collection::vec(1usize..=6, 1..=4)) {
                let total: usize = radices.iter().product();
                for joint in 0..total {
                    let parts = mixed_radix_decode(joint, &radices);
                    prop_assert_eq!(parts.len(), radices.len());
                    for (p, r) in parts.iter().zip(&radices) {
                        prop_assert!(p < r);
                    }
                    prop_assert_eq!(mixed_radix_encode(&parts, &radices), joint);
                }
            }

            #[test]
            fn normalized_vectors_make_beliefs(raw in proptest::collection::vec(0.01f64..1.0, 1..8)) {
                let sum: f64 = raw.iter().sum();
                let probs: Vec<f64> = raw.iter().map(|x| x / sum).collect();
                let belief = Belief::new(probs).unwrap();
                prop_assert!((belief.probs().iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOLERANCE);
            }
        }
    }
}
