//! One-step greedy safe planners and the safety filter.
//!
//! Three per-step procedures share one candidate-evaluation engine:
//!
//! * [`safe_greedy_action`] scores every joint action, keeps those whose
//!   updated belief satisfies the barrier condition, and returns the safe
//!   action with the highest expected reward.
//! * [`per_agent_safe_greedy_action`] does the same but requires a separate
//!   condition per constrained agent, each on that agent's marginal belief.
//! * [`safety_filter_action`] passes a nominal policy's action through when
//!   its updated belief is safe, and otherwise substitutes the safe action
//!   whose expected reward deviates least (in squared difference) from the
//!   nominal one.
//!
//! Candidate posteriors reuse the observation actually received; the
//! posterior of the selected action becomes the committed belief for the next
//! step. Before the first action no observation exists, so the mission loop's
//! opening step scores candidates on prediction-only posteriors and commits
//! nothing.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dtbf::{BarrierSpec, KappaFn};
use crate::model::{Belief, JointAction, JointObservation, ModelError, MpomdpModel};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    /// No candidate joint action satisfies the barrier condition. Left
    /// explicit so callers choose a policy (abort or fall back) instead of
    /// silently executing an unsafe action.
    #[error("no joint action satisfies the barrier condition")]
    NoSafeAction,

    /// Every joint action gives the received observation zero likelihood, so
    /// no posterior can be formed at all.
    #[error("the received observation is impossible under every joint action")]
    ImpossibleObservationForAll,

    #[error("marginalizer groups must partition the state indices: {0}")]
    InvalidMarginalizer(String),
}

/// Whether a candidate action passed the safety check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SafetyVerdict {
    Safe,
    Unsafe,
    /// The received observation has zero likelihood under this action; no
    /// posterior exists, so the candidate is unsafe-by-infeasibility.
    Infeasible,
}

/// Evaluation record for one candidate joint action.
#[derive(Debug, Clone)]
pub struct CandidateOutcome<B> {
    pub action: JointAction,
    pub next_belief: Option<B>,
    pub verdict: SafetyVerdict,
    pub margin: Option<f64>,
    pub expected_reward: Option<f64>,
}

/// Outcome of one planning step.
#[derive(Debug, Clone)]
pub struct PlanDecision<B> {
    pub chosen: JointAction,
    /// Posterior of the chosen action; the belief committed for the next step.
    pub next_belief: B,
    pub candidates: Vec<CandidateOutcome<B>>,
    /// Filter only: the nominal action was rejected and a substitute returned.
    pub intervened: bool,
    /// Filter only: expected reward of the nominal action.
    pub nominal_reward: Option<f64>,
    /// The step was forced by the deadlock fallback rather than selected.
    pub forced_fallback: bool,
    pub expected_reward: f64,
    pub margin: f64,
}

/// A nominal joint policy: any total map from beliefs to joint actions.
pub trait NominalPolicy {
    fn action(&self, belief: &Belief) -> JointAction;
}

impl<F: Fn(&Belief) -> JointAction> NominalPolicy for F {
    fn action(&self, belief: &Belief) -> JointAction {
        self(belief)
    }
}

/// Projection of the joint belief onto the states relevant to one agent.
#[derive(Debug, Clone)]
pub enum Marginalizer {
    Identity,
    /// Disjoint groups of state indices covering the whole state set; the
    /// marginal assigns each group the summed probability.
    Partition(Vec<Vec<usize>>),
}

impl Marginalizer {
    /// Validates that `groups` partition `0..num_states`.
    pub fn partition(groups: Vec<Vec<usize>>, num_states: usize) -> Result<Self, PlanError> {
        let mut seen = vec![false; num_states];
        for group in &groups {
            for &q in group {
                if q >= num_states {
                    return Err(PlanError::InvalidMarginalizer(format!(
                        "index {q} out of range for {num_states} states"
                    )));
                }
                if seen[q] {
                    return Err(PlanError::InvalidMarginalizer(format!("index {q} repeated")));
                }
                seen[q] = true;
            }
        }
        if let Some(q) = seen.iter().position(|s| !s) {
            return Err(PlanError::InvalidMarginalizer(format!("index {q} not covered")));
        }
        Ok(Marginalizer::Partition(groups))
    }

    pub fn apply(&self, belief: &Belief) -> Belief {
        match self {
            Marginalizer::Identity => belief.clone(),
            Marginalizer::Partition(groups) => {
                let probs = groups
                    .iter()
                    .map(|group| group.iter().map(|&q| belief.probs()[q]).sum())
                    .collect();
                Belief::new(probs).expect("partition marginal stays on the simplex")
            }
        }
    }
}

/// Safety constraint for a single agent: its marginal, barrier, and gain.
pub struct AgentBarrier {
    pub agent: usize,
    pub marginalizer: Marginalizer,
    pub barrier: crate::dtbf::BarrierFn<Belief>,
    pub kappa: KappaFn,
}

// ---------------------------------------------------------------------------
// Candidate engine shared by the flat planners and the factored mission loop.
// ---------------------------------------------------------------------------

pub(crate) struct Candidate<B> {
    pub belief: Option<B>,
    pub verdict: SafetyVerdict,
    pub margin: Option<f64>,
    pub reward: Option<f64>,
}

/// Evaluates every candidate action: posterior, safety check, reward.
pub(crate) fn evaluate_candidates<B>(
    num_actions: usize,
    mut posterior: impl FnMut(usize) -> Option<B>,
    mut check: impl FnMut(&B) -> (bool, f64),
    mut reward: impl FnMut(usize, &B) -> f64,
) -> Vec<Candidate<B>> {
    (0..num_actions)
        .map(|i| match posterior(i) {
            None => Candidate { belief: None, verdict: SafetyVerdict::Infeasible, margin: None, reward: None },
            Some(belief) => {
                let (safe, margin) = check(&belief);
                let r = reward(i, &belief);
                let verdict = if safe { SafetyVerdict::Safe } else { SafetyVerdict::Unsafe };
                Candidate { belief: Some(belief), verdict, margin: Some(margin), reward: Some(r) }
            }
        })
        .collect()
}

/// Highest reward among safe candidates; ties go to the lowest action index.
pub(crate) fn select_greedy<B>(candidates: &[Candidate<B>]) -> Result<usize, PlanError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        if c.verdict != SafetyVerdict::Safe {
            continue;
        }
        let r = c.reward.expect("safe candidate has a reward");
        if best.map_or(true, |(_, best_r)| r > best_r) {
            best = Some((i, r));
        }
    }
    match best {
        Some((i, _)) => Ok(i),
        None if candidates.iter().all(|c| c.verdict == SafetyVerdict::Infeasible) => {
            Err(PlanError::ImpossibleObservationForAll)
        }
        None => Err(PlanError::NoSafeAction),
    }
}

/// Safe candidate minimizing squared reward deviation from `nominal_reward`;
/// ties go to the lowest action index.
pub(crate) fn select_min_deviation<B>(
    candidates: &[Candidate<B>],
    nominal_reward: f64,
) -> Result<usize, PlanError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        if c.verdict != SafetyVerdict::Safe {
            continue;
        }
        let dev = (c.reward.expect("safe candidate has a reward") - nominal_reward).powi(2);
        if best.map_or(true, |(_, best_dev)| dev < best_dev) {
            best = Some((i, dev));
        }
    }
    match best {
        Some((i, _)) => Ok(i),
        None if candidates.iter().all(|c| c.verdict == SafetyVerdict::Infeasible) => {
            Err(PlanError::ImpossibleObservationForAll)
        }
        None => Err(PlanError::NoSafeAction),
    }
}

fn into_outcomes<B: Clone>(
    model: &MpomdpModel,
    candidates: &[Candidate<B>],
) -> Vec<CandidateOutcome<B>> {
    candidates
        .iter()
        .enumerate()
        .map(|(i, c)| CandidateOutcome {
            action: model.joint_action_from_index(i),
            next_belief: c.belief.clone(),
            verdict: c.verdict,
            margin: c.margin,
            expected_reward: c.reward,
        })
        .collect()
}

fn decision_from_selection(
    model: &MpomdpModel,
    candidates: Vec<Candidate<Belief>>,
    chosen: usize,
    intervened: bool,
    nominal_reward: Option<f64>,
) -> PlanDecision<Belief> {
    let outcomes = into_outcomes(model, &candidates);
    let picked = &candidates[chosen];
    PlanDecision {
        chosen: model.joint_action_from_index(chosen),
        next_belief: picked.belief.clone().expect("selected candidate is feasible"),
        expected_reward: picked.reward.expect("selected candidate has a reward"),
        margin: picked.margin.expect("selected candidate has a margin"),
        candidates: outcomes,
        intervened,
        nominal_reward,
        forced_fallback: false,
    }
}

// ---------------------------------------------------------------------------
// The three per-step procedures on flat models.
// ---------------------------------------------------------------------------

/// Observation argument for candidate evaluation. `Received` is the normal
/// case; `None` scores candidates on prediction-only posteriors (used before
/// any observation exists).
enum ObsContext<'a> {
    Received(&'a JointObservation),
    None,
}

fn flat_candidates(
    model: &MpomdpModel,
    b_prev: &Belief,
    obs: ObsContext<'_>,
    mut check: impl FnMut(&Belief) -> (bool, f64),
) -> Vec<Candidate<Belief>> {
    evaluate_candidates(
        model.num_joint_actions(),
        |i| {
            let action = model.joint_action_from_index(i);
            match obs {
                ObsContext::Received(z) => match model.belief_update(b_prev, &action, z) {
                    Ok(b) => Some(b),
                    Err(ModelError::ImpossibleObservation { .. }) => None,
                    Err(e) => unreachable!("belief update on validated model: {e}"),
                },
                ObsContext::None => Some(model.predict(b_prev, &action)),
            }
        },
        &mut check,
        |i, b| model.expected_reward(b, &model.joint_action_from_index(i)),
    )
}

/// Safe action maximizing expected reward at the updated belief.
pub fn safe_greedy_action(
    model: &MpomdpModel,
    spec: &BarrierSpec<Belief>,
    b_prev: &Belief,
    obs: &JointObservation,
) -> Result<PlanDecision<Belief>, PlanError> {
    let candidates = flat_candidates(model, b_prev, ObsContext::Received(obs), |b| {
        let check = spec.condition(b_prev, b);
        (check.satisfied, check.margin)
    });
    let chosen = select_greedy(&candidates)?;
    Ok(decision_from_selection(model, candidates, chosen, false, None))
}

/// Variant requiring every agent's own condition on its marginal belief.
pub fn per_agent_safe_greedy_action(
    model: &MpomdpModel,
    barriers: &[AgentBarrier],
    b_prev: &Belief,
    obs: &JointObservation,
) -> Result<PlanDecision<Belief>, PlanError> {
    let prev_values: Vec<f64> =
        barriers.iter().map(|ab| (ab.barrier)(&ab.marginalizer.apply(b_prev))).collect();
    let candidates = flat_candidates(model, b_prev, ObsContext::Received(obs), |b| {
        per_agent_check(barriers, &prev_values, b)
    });
    let chosen = select_greedy(&candidates)?;
    Ok(decision_from_selection(model, candidates, chosen, false, None))
}

/// All per-agent conditions must hold; the reported margin is the tightest.
fn per_agent_check(barriers: &[AgentBarrier], prev_values: &[f64], next: &Belief) -> (bool, f64) {
    let mut all_safe = true;
    let mut min_margin = f64::INFINITY;
    for (ab, &h_prev) in barriers.iter().zip(prev_values) {
        let h_next = (ab.barrier)(&ab.marginalizer.apply(next));
        let check = crate::dtbf::condition_from_values(&ab.kappa, h_prev, h_next);
        all_safe &= check.satisfied;
        min_margin = min_margin.min(check.margin);
    }
    (all_safe, min_margin)
}

/// Passes the nominal action through when safe; otherwise substitutes the
/// safe action minimizing squared expected-reward deviation from the nominal.
pub fn safety_filter_action(
    model: &MpomdpModel,
    spec: &BarrierSpec<Belief>,
    nominal: &dyn NominalPolicy,
    b_prev: &Belief,
    obs: &JointObservation,
) -> Result<PlanDecision<Belief>, PlanError> {
    let nominal_action = nominal.action(b_prev);
    let nominal_posterior = match model.belief_update(b_prev, &nominal_action, obs) {
        Ok(b) => Some(b),
        Err(ModelError::ImpossibleObservation { .. }) => None,
        Err(e) => unreachable!("belief update on validated model: {e}"),
    };

    if let Some(post) = &nominal_posterior {
        let check = spec.condition(b_prev, post);
        if check.satisfied {
            let reward = model.expected_reward(post, &nominal_action);
            return Ok(PlanDecision {
                next_belief: post.clone(),
                candidates: vec![CandidateOutcome {
                    action: nominal_action.clone(),
                    next_belief: Some(post.clone()),
                    verdict: SafetyVerdict::Safe,
                    margin: Some(check.margin),
                    expected_reward: Some(reward),
                }],
                chosen: nominal_action,
                intervened: false,
                nominal_reward: Some(reward),
                forced_fallback: false,
                expected_reward: reward,
                margin: check.margin,
            });
        }
    }

    // The nominal reward anchors the substitution even when the nominal action
    // itself is unsafe; with an infeasible nominal posterior it falls back to
    // the prediction-only posterior.
    let nominal_reward = match &nominal_posterior {
        Some(post) => model.expected_reward(post, &nominal_action),
        None => model.expected_reward(&model.predict(b_prev, &nominal_action), &nominal_action),
    };

    let candidates = flat_candidates(model, b_prev, ObsContext::Received(obs), |b| {
        let check = spec.condition(b_prev, b);
        (check.satisfied, check.margin)
    });
    let chosen = select_min_deviation(&candidates, nominal_reward)?;
    Ok(decision_from_selection(model, candidates, chosen, true, Some(nominal_reward)))
}

// ---------------------------------------------------------------------------
// Closed-loop mission execution.
// ---------------------------------------------------------------------------

/// Which per-step procedure drives the mission.
pub enum PlannerKind<'a> {
    Greedy(&'a BarrierSpec<Belief>),
    PerAgent(&'a [AgentBarrier]),
    Filter { spec: &'a BarrierSpec<Belief>, nominal: &'a dyn NominalPolicy },
}

/// What to do when no candidate passes the safety check.
#[derive(Debug, Clone)]
pub enum DeadlockPolicy {
    /// End the mission with [`MissionOutcome::SafetyDeadlock`].
    Abort,
    /// Execute the given action anyway and flag the step.
    Fallback(JointAction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionOutcome {
    Success,
    Failure,
    HorizonExceeded,
    SafetyDeadlock,
}

pub struct MissionConfig<'a> {
    pub planner: PlannerKind<'a>,
    pub horizon: usize,
    pub deadlock: DeadlockPolicy,
    /// Judges the true state after each executed action; returning an outcome
    /// ends the mission.
    pub terminal: Option<&'a dyn Fn(usize) -> Option<MissionOutcome>>,
}

pub struct MissionResult {
    /// Committed belief trace: the initial belief plus one entry per planning
    /// step that folded an observation in.
    pub beliefs: Vec<Belief>,
    pub decisions: Vec<PlanDecision<Belief>>,
    /// True state trace including the initial state.
    pub states: Vec<usize>,
    /// Observation received after each executed action.
    pub observations: Vec<JointObservation>,
    pub outcome: MissionOutcome,
}

fn plan_step(
    model: &MpomdpModel,
    planner: &PlannerKind<'_>,
    b_prev: &Belief,
    obs: Option<&JointObservation>,
) -> Result<PlanDecision<Belief>, PlanError> {
    match (planner, obs) {
        (PlannerKind::Greedy(spec), Some(z)) => safe_greedy_action(model, spec, b_prev, z),
        (PlannerKind::PerAgent(barriers), Some(z)) => {
            per_agent_safe_greedy_action(model, barriers, b_prev, z)
        }
        (PlannerKind::Filter { spec, nominal }, Some(z)) => {
            safety_filter_action(model, spec, *nominal, b_prev, z)
        }
        // Opening step: no observation exists yet, so candidates are scored on
        // prediction-only posteriors and the result is not committed.
        (PlannerKind::Greedy(spec), None) => {
            let candidates = flat_candidates(model, b_prev, ObsContext::None, |b| {
                let check = spec.condition(b_prev, b);
                (check.satisfied, check.margin)
            });
            let chosen = select_greedy(&candidates)?;
            Ok(decision_from_selection(model, candidates, chosen, false, None))
        }
        (PlannerKind::PerAgent(barriers), None) => {
            let prev_values: Vec<f64> =
                barriers.iter().map(|ab| (ab.barrier)(&ab.marginalizer.apply(b_prev))).collect();
            let candidates = flat_candidates(model, b_prev, ObsContext::None, |b| {
                per_agent_check(barriers, &prev_values, b)
            });
            let chosen = select_greedy(&candidates)?;
            Ok(decision_from_selection(model, candidates, chosen, false, None))
        }
        (PlannerKind::Filter { spec, nominal }, None) => {
            let nominal_action = nominal.action(b_prev);
            let post = model.predict(b_prev, &nominal_action);
            let check = spec.condition(b_prev, &post);
            let reward = model.expected_reward(&post, &nominal_action);
            if check.satisfied {
                return Ok(PlanDecision {
                    next_belief: post.clone(),
                    candidates: vec![CandidateOutcome {
                        action: nominal_action.clone(),
                        next_belief: Some(post),
                        verdict: SafetyVerdict::Safe,
                        margin: Some(check.margin),
                        expected_reward: Some(reward),
                    }],
                    chosen: nominal_action,
                    intervened: false,
                    nominal_reward: Some(reward),
                    forced_fallback: false,
                    expected_reward: reward,
                    margin: check.margin,
                });
            }
            let candidates = flat_candidates(model, b_prev, ObsContext::None, |b| {
                let check = spec.condition(b_prev, b);
                (check.satisfied, check.margin)
            });
            let chosen = select_min_deviation(&candidates, reward)?;
            Ok(decision_from_selection(model, candidates, chosen, true, Some(reward)))
        }
    }
}

/// Forced decision for the deadlock fallback: the fallback action's posterior
/// is committed even though it failed the safety check.
fn forced_decision(
    model: &MpomdpModel,
    planner: &PlannerKind<'_>,
    b_prev: &Belief,
    obs: Option<&JointObservation>,
    fallback: &JointAction,
) -> Option<PlanDecision<Belief>> {
    let posterior = match obs {
        Some(z) => match model.belief_update(b_prev, fallback, z) {
            Ok(b) => b,
            Err(_) => return None,
        },
        None => model.predict(b_prev, fallback),
    };
    let margin = match planner {
        PlannerKind::Greedy(spec) | PlannerKind::Filter { spec, .. } => {
            spec.condition(b_prev, &posterior).margin
        }
        PlannerKind::PerAgent(barriers) => {
            let prev_values: Vec<f64> =
                barriers.iter().map(|ab| (ab.barrier)(&ab.marginalizer.apply(b_prev))).collect();
            per_agent_check(barriers, &prev_values, &posterior).1
        }
    };
    let reward = model.expected_reward(&posterior, fallback);
    Some(PlanDecision {
        chosen: fallback.clone(),
        next_belief: posterior,
        candidates: Vec::new(),
        intervened: true,
        nominal_reward: None,
        forced_fallback: true,
        expected_reward: reward,
        margin,
    })
}

/// Runs the observe/plan/act loop until the horizon, a terminal state, or a
/// safety deadlock. Fully deterministic given the random source's seed.
pub fn run_mission(
    model: &MpomdpModel,
    config: &MissionConfig<'_>,
    initial_belief: &Belief,
    initial_state: usize,
    rng: &mut impl Rng,
) -> MissionResult {
    let mut beliefs = vec![initial_belief.clone()];
    let mut states = vec![initial_state];
    let mut observations = Vec::new();
    let mut decisions = Vec::new();

    let mut belief = initial_belief.clone();
    let mut state = initial_state;
    let mut last_obs: Option<JointObservation> = None;
    let mut outcome = MissionOutcome::HorizonExceeded;

    for _ in 0..config.horizon {
        let decision = match plan_step(model, &config.planner, &belief, last_obs.as_ref()) {
            Ok(d) => d,
            Err(PlanError::NoSafeAction) | Err(PlanError::ImpossibleObservationForAll) => {
                match &config.deadlock {
                    DeadlockPolicy::Abort => {
                        outcome = MissionOutcome::SafetyDeadlock;
                        break;
                    }
                    DeadlockPolicy::Fallback(action) => {
                        match forced_decision(model, &config.planner, &belief, last_obs.as_ref(), action)
                        {
                            Some(d) => d,
                            None => {
                                outcome = MissionOutcome::SafetyDeadlock;
                                break;
                            }
                        }
                    }
                }
            }
            Err(e) => unreachable!("planning on validated inputs: {e}"),
        };

        // The opening step's prediction-only posterior is not committed; from
        // the first observation on, the chosen candidate's posterior is.
        if last_obs.is_some() {
            belief = decision.next_belief.clone();
            beliefs.push(belief.clone());
        }

        let (next_state, obs) = model.sample_step(state, &decision.chosen, rng);
        decisions.push(decision);
        states.push(next_state);
        observations.push(obs.clone());
        state = next_state;
        last_obs = Some(obs);

        if let Some(judge) = config.terminal {
            if let Some(end) = judge(state) {
                outcome = end;
                break;
            }
        }
    }

    MissionResult { beliefs, decisions, states, observations, outcome }
}
