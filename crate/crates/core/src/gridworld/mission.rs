//! Mission objective, safety barrier, nominal policy, and the closed
//! observe/plan/act loop over factored beliefs.
//!
//! The loop mirrors the flat mission runner: the opening step scores
//! candidates on prediction-only posteriors and commits nothing (no
//! observation exists yet); every later step folds the received observation
//! into each candidate posterior, checks the barrier condition against the
//! previously committed belief, and commits the chosen candidate's posterior.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dtbf::{condition_from_values, KappaFn};
use crate::model::JointAction;
use crate::planner::{
    evaluate_candidates, select_greedy, select_min_deviation, Candidate, MissionOutcome, PlanError,
};

use super::belief::{apply_observations, convolve_locations, expected_info_gain, FactoredBelief};
use super::{
    check_termination, step_world, AgentObservation, ExplorationScenario, MissionPhase, Robot,
    NUM_JOINT_ACTIONS,
};

/// Probability-weighted habitability of the Segway's cell, minus the safety
/// threshold: `h(b) = sum_c P(Segway at c) * P(c habitable) - theta`.
pub fn segway_safety_barrier(belief: &FactoredBelief, scenario: &ExplorationScenario) -> f64 {
    occupied_habitability(belief.location(Robot::Segway), &belief.habitability) - scenario.theta
}

/// Same barrier form for the Flipper, against its own threshold.
pub fn flipper_safety_barrier(belief: &FactoredBelief, theta: f64) -> f64 {
    occupied_habitability(belief.location(Robot::Flipper), &belief.habitability) - theta
}

fn occupied_habitability(location: &[f64], habitability: &[f64]) -> f64 {
    location.iter().zip(habitability).map(|(p, h)| p * h).sum()
}

/// Per-cell footprint sums of expected information gain, precomputed once per
/// set of cell beliefs and shared across all candidate actions.
pub(crate) struct RewardTables {
    /// Habitability information reachable by the Flipper sensing from each cell.
    ig_habitability: Vec<f64>,
    /// Sample information reachable by the UAV sensing from each cell.
    ig_sample: Vec<f64>,
}

pub(crate) fn reward_tables(
    scenario: &ExplorationScenario,
    habitability: &[f64],
    sample: &[f64],
) -> RewardTables {
    let uav = scenario.sensors[Robot::Uav as usize].expect("uav carries a sensor");
    let flipper = scenario.sensors[Robot::Flipper as usize].expect("flipper carries a sensor");
    let ig_hab_cell: Vec<f64> =
        habitability.iter().map(|&p| expected_info_gain(p, flipper.habitability_accuracy)).collect();
    let ig_smp_cell: Vec<f64> =
        sample.iter().map(|&p| expected_info_gain(p, uav.sample_accuracy)).collect();
    let n = scenario.num_cells();
    let mut ig_habitability = vec![0.0; n];
    let mut ig_sample = vec![0.0; n];
    for cell in 0..n {
        ig_habitability[cell] =
            scenario.dims.within_radius(cell, flipper.radius).iter().map(|&c| ig_hab_cell[c]).sum();
        ig_sample[cell] =
            scenario.dims.within_radius(cell, uav.radius).iter().map(|&c| ig_smp_cell[c]).sum();
    }
    RewardTables { ig_habitability, ig_sample }
}

pub(crate) fn reward_from_tables(
    scenario: &ExplorationScenario,
    tables: &RewardTables,
    locations: &[Vec<f64>; 3],
    habitability: &[f64],
    sample: &[f64],
) -> f64 {
    let w = &scenario.weights;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let segway = &locations[Robot::Segway as usize];
    let danger: f64 = segway.iter().zip(habitability).map(|(p, h)| p * (1.0 - h)).sum();
    w.info_habitability * dot(&locations[Robot::Flipper as usize], &tables.ig_habitability)
        + w.info_sample * dot(&locations[Robot::Uav as usize], &tables.ig_sample)
        + w.sample_attraction * dot(segway, sample)
        - w.danger * danger
}

/// Expected one-step reward of `action` from `belief`: information the
/// Flipper and UAV are positioned to gain, attraction of the Segway toward
/// likely sample cells, and penalty for Segway mass on dubious terrain, all
/// under the post-action location distributions.
pub fn exploration_reward(
    belief: &FactoredBelief,
    scenario: &ExplorationScenario,
    action: &JointAction,
) -> f64 {
    let locations = convolve_locations(belief, scenario, action);
    let tables = reward_tables(scenario, &belief.habitability, &belief.sample);
    reward_from_tables(scenario, &tables, &locations, &belief.habitability, &belief.sample)
}

// ---------------------------------------------------------------------------
// Nominal policy.
// ---------------------------------------------------------------------------

/// Deterministic baseline policy with no regard for the safety condition:
/// the Segway beelines toward the highest sample-belief cell (nearest peak,
/// ignoring habitability entirely), while the UAV and Flipper each take the
/// move whose sensing footprint promises the most information.
pub fn unsafe_nominal_policy(
    belief: &FactoredBelief,
    scenario: &ExplorationScenario,
) -> JointAction {
    let uav = info_greedy_component(belief, scenario, Robot::Uav);
    let flipper = info_greedy_component(belief, scenario, Robot::Flipper);
    let segway = sample_seeking_component(belief, scenario);
    scenario.joint_action([uav, flipper, segway])
}

fn info_greedy_component(
    belief: &FactoredBelief,
    scenario: &ExplorationScenario,
    robot: Robot,
) -> usize {
    let sensor = scenario.sensors[robot as usize].expect("info-greedy robot carries a sensor");
    let per_cell: Vec<f64> = match robot {
        Robot::Flipper => belief
            .habitability
            .iter()
            .map(|&p| expected_info_gain(p, sensor.habitability_accuracy))
            .collect(),
        _ => belief.sample.iter().map(|&p| expected_info_gain(p, sensor.sample_accuracy)).collect(),
    };
    let pos = belief.modal_cell(robot);
    let mut best = (0usize, f64::NEG_INFINITY);
    for action in 0..5 {
        let target = scenario.dims.intended(pos, action);
        let total: f64 =
            scenario.dims.within_radius(target, sensor.radius).iter().map(|&c| per_cell[c]).sum();
        if total > best.1 {
            best = (action, total);
        }
    }
    best.0
}

fn sample_seeking_component(belief: &FactoredBelief, scenario: &ExplorationScenario) -> usize {
    let pos = belief.modal_cell(Robot::Segway);
    let peak = belief.sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if belief.sample[pos] >= peak - 1e-12 {
        return 0; // standing on a peak already
    }
    // Nearest peak cell; ties to the lowest cell index.
    let mut target = None;
    for (cell, &p) in belief.sample.iter().enumerate() {
        if p >= peak - 1e-12 {
            let d = scenario.dims.manhattan(pos, cell);
            if target.map_or(true, |(_, best)| d < best) {
                target = Some((cell, d));
            }
        }
    }
    let (target, _) = target.expect("sample beliefs are nonempty");
    let mut best = (0usize, usize::MAX);
    for action in 0..5 {
        let d = scenario.dims.manhattan(scenario.dims.intended(pos, action), target);
        if d < best.1 {
            best = (action, d);
        }
    }
    best.0
}

// ---------------------------------------------------------------------------
// Mission loop.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmChoice {
    /// Safe action maximizing expected reward.
    Greedy,
    /// Safe action under per-agent conditions (Segway plus optional Flipper).
    PerAgent,
    /// Nominal policy filtered for safety.
    Filter,
    /// Nominal policy executed unchecked; margins are recorded, not enforced.
    Nominal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeadlockChoice {
    Abort,
    #[default]
    Stay,
}

#[derive(Debug, Clone, Copy)]
pub struct MissionSettings {
    pub algorithm: AlgorithmChoice,
    pub horizon: usize,
    pub deadlock: DeadlockChoice,
}

/// Terminal status attached to each step record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Continue,
    Success,
    Failure,
    SafetyDeadlock,
}

impl From<MissionPhase> for StepOutcome {
    fn from(phase: MissionPhase) -> Self {
        match phase {
            MissionPhase::Continue => StepOutcome::Continue,
            MissionPhase::Success => StepOutcome::Success,
            MissionPhase::Failure => StepOutcome::Failure,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MissionStepRecord {
    pub t: usize,
    /// `None` only on a terminal deadlock marker (nothing was executed).
    pub action: Option<JointAction>,
    /// Observations received after executing this step's action.
    pub observations: Vec<AgentObservation>,
    /// Barrier value of the committed belief as of this step.
    pub h_value: f64,
    /// Condition margin of the committed pair ending at this step; absent on
    /// the opening step and on deadlock markers.
    pub margin: Option<f64>,
    pub intervened: bool,
    pub forced_fallback: bool,
    pub expected_reward: Option<f64>,
    pub true_cells: [usize; 3],
    pub outcome: StepOutcome,
}

pub struct ExplorationMissionResult {
    pub steps: Vec<MissionStepRecord>,
    /// Committed belief trace: initial belief plus one entry per committed step.
    pub beliefs: Vec<FactoredBelief>,
    /// Segway barrier value of every committed belief.
    pub h_values: Vec<f64>,
    pub outcome: MissionOutcome,
    pub interventions: usize,
    pub forced_fallbacks: usize,
    /// Executed steps until success, when the mission succeeded.
    pub steps_to_success: Option<usize>,
}

impl ExplorationMissionResult {
    pub fn min_h(&self) -> f64 {
        self.h_values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

struct GridStep {
    chosen: JointAction,
    posterior: FactoredBelief,
    intervened: bool,
    forced_fallback: bool,
    expected_reward: f64,
}

/// Safety check shared by the planning algorithms: the Segway condition,
/// plus the Flipper condition when a flipper threshold is configured and the
/// per-agent algorithm is running.
struct GridChecker<'a> {
    scenario: &'a ExplorationScenario,
    kappa: &'a KappaFn,
    h_prev_segway: f64,
    h_prev_flipper: Option<f64>,
}

impl<'a> GridChecker<'a> {
    fn new(
        scenario: &'a ExplorationScenario,
        kappa: &'a KappaFn,
        belief: &FactoredBelief,
        per_agent: bool,
    ) -> Self {
        let h_prev_flipper = match (per_agent, scenario.flipper_theta) {
            (true, Some(theta)) => Some(flipper_safety_barrier(belief, theta)),
            _ => None,
        };
        GridChecker {
            scenario,
            kappa,
            h_prev_segway: segway_safety_barrier(belief, scenario),
            h_prev_flipper,
        }
    }

    fn check(&self, next: &FactoredBelief) -> (bool, f64) {
        let seg = condition_from_values(
            self.kappa,
            self.h_prev_segway,
            segway_safety_barrier(next, self.scenario),
        );
        let mut safe = seg.satisfied;
        let mut margin = seg.margin;
        if let Some(h_prev) = self.h_prev_flipper {
            let theta = self.scenario.flipper_theta.expect("flipper threshold configured");
            let flip = condition_from_values(
                self.kappa,
                h_prev,
                flipper_safety_barrier(next, theta),
            );
            safe &= flip.satisfied;
            margin = margin.min(flip.margin);
        }
        (safe, margin)
    }
}

fn plan_grid_step(
    scenario: &ExplorationScenario,
    belief: &FactoredBelief,
    observations: Option<&[AgentObservation]>,
    algorithm: AlgorithmChoice,
    kappa: &KappaFn,
) -> Result<GridStep, PlanError> {
    // The received observation updates cell beliefs identically for every
    // candidate; only the location prediction depends on the action.
    let (habitability, sample) = match observations {
        Some(obs) => apply_observations(belief, scenario, obs)
            .map_err(|_| PlanError::ImpossibleObservationForAll)?,
        None => (belief.habitability.clone(), belief.sample.clone()),
    };
    let tables = reward_tables(scenario, &habitability, &sample);

    let posterior_of = |action: &JointAction| FactoredBelief {
        locations: convolve_locations(belief, scenario, action),
        habitability: habitability.clone(),
        sample: sample.clone(),
    };
    let reward_of = |b: &FactoredBelief| {
        reward_from_tables(scenario, &tables, &b.locations, &b.habitability, &b.sample)
    };

    if algorithm == AlgorithmChoice::Nominal {
        let chosen = unsafe_nominal_policy(belief, scenario);
        let posterior = posterior_of(&chosen);
        let expected_reward = reward_of(&posterior);
        return Ok(GridStep {
            chosen,
            posterior,
            intervened: false,
            forced_fallback: false,
            expected_reward,
        });
    }

    let checker = GridChecker::new(
        scenario,
        kappa,
        belief,
        algorithm == AlgorithmChoice::PerAgent,
    );

    if algorithm == AlgorithmChoice::Filter {
        let nominal_action = unsafe_nominal_policy(belief, scenario);
        let nominal_posterior = posterior_of(&nominal_action);
        let nominal_reward = reward_of(&nominal_posterior);
        let (safe, _) = checker.check(&nominal_posterior);
        if safe {
            return Ok(GridStep {
                chosen: nominal_action,
                posterior: nominal_posterior,
                intervened: false,
                forced_fallback: false,
                expected_reward: nominal_reward,
            });
        }
        let candidates = grid_candidates(scenario, &checker, &posterior_of, &reward_of);
        let chosen = select_min_deviation(&candidates, nominal_reward)?;
        return Ok(grid_step_from(scenario, candidates, chosen, true));
    }

    let candidates = grid_candidates(scenario, &checker, &posterior_of, &reward_of);
    let chosen = select_greedy(&candidates)?;
    Ok(grid_step_from(scenario, candidates, chosen, false))
}

fn grid_candidates(
    scenario: &ExplorationScenario,
    checker: &GridChecker<'_>,
    posterior_of: &impl Fn(&JointAction) -> FactoredBelief,
    reward_of: &impl Fn(&FactoredBelief) -> f64,
) -> Vec<Candidate<FactoredBelief>> {
    evaluate_candidates(
        NUM_JOINT_ACTIONS,
        |i| Some(posterior_of(&scenario.joint_action_from_index(i))),
        |b| checker.check(b),
        |_, b| reward_of(b),
    )
}

fn grid_step_from(
    scenario: &ExplorationScenario,
    mut candidates: Vec<Candidate<FactoredBelief>>,
    chosen: usize,
    intervened: bool,
) -> GridStep {
    let picked = &mut candidates[chosen];
    GridStep {
        chosen: scenario.joint_action_from_index(chosen),
        posterior: picked.belief.take().expect("selected candidate is feasible"),
        intervened,
        forced_fallback: false,
        expected_reward: picked.reward.expect("selected candidate has a reward"),
    }
}

/// Deadlock fallback: commit the stay action's posterior even though it
/// failed the condition, and flag the step.
fn forced_grid_step(
    scenario: &ExplorationScenario,
    belief: &FactoredBelief,
    observations: Option<&[AgentObservation]>,
) -> Result<GridStep, PlanError> {
    let (habitability, sample) = match observations {
        Some(obs) => apply_observations(belief, scenario, obs)
            .map_err(|_| PlanError::ImpossibleObservationForAll)?,
        None => (belief.habitability.clone(), belief.sample.clone()),
    };
    let stay = scenario.joint_action([0, 0, 0]);
    let locations = convolve_locations(belief, scenario, &stay);
    let tables = reward_tables(scenario, &habitability, &sample);
    let expected_reward =
        reward_from_tables(scenario, &tables, &locations, &habitability, &sample);
    Ok(GridStep {
        chosen: stay,
        posterior: FactoredBelief { locations, habitability, sample },
        intervened: true,
        forced_fallback: true,
        expected_reward,
    })
}

/// Runs one seeded exploration mission to completion.
pub fn run_exploration_mission(
    scenario: &ExplorationScenario,
    initial_belief: &FactoredBelief,
    settings: &MissionSettings,
    seed: u64,
) -> ExplorationMissionResult {
    let kappa = KappaFn::constant(scenario.alpha0).expect("alpha0 validated at build");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut belief = initial_belief.clone();
    let mut h = segway_safety_barrier(&belief, scenario);
    let mut beliefs = vec![belief.clone()];
    let mut h_values = vec![h];
    let mut true_cells = scenario.starts;
    let mut last_obs: Option<Vec<AgentObservation>> = None;

    let mut steps: Vec<MissionStepRecord> = Vec::new();
    let mut interventions = 0;
    let mut forced_fallbacks = 0;
    let mut outcome = MissionOutcome::HorizonExceeded;
    let mut steps_to_success = None;

    for t in 0..settings.horizon {
        let planned =
            plan_grid_step(scenario, &belief, last_obs.as_deref(), settings.algorithm, &kappa);
        let step = match planned {
            Ok(step) => step,
            Err(_) => match settings.deadlock {
                DeadlockChoice::Stay => {
                    match forced_grid_step(scenario, &belief, last_obs.as_deref()) {
                        Ok(step) => step,
                        Err(_) => {
                            steps.push(deadlock_marker(t, h, true_cells));
                            outcome = MissionOutcome::SafetyDeadlock;
                            break;
                        }
                    }
                }
                DeadlockChoice::Abort => {
                    steps.push(deadlock_marker(t, h, true_cells));
                    outcome = MissionOutcome::SafetyDeadlock;
                    break;
                }
            },
        };

        // Opening step: prediction-only scoring, nothing committed.
        let margin = if last_obs.is_some() {
            let h_next = segway_safety_barrier(&step.posterior, scenario);
            let margin = condition_from_values(&kappa, h, h_next).margin;
            belief = step.posterior;
            h = h_next;
            beliefs.push(belief.clone());
            h_values.push(h);
            Some(margin)
        } else {
            None
        };

        let (next_cells, obs) = step_world(scenario, true_cells, &step.chosen, &mut rng);
        let phase = check_termination(next_cells, scenario);

        if step.intervened {
            interventions += 1;
        }
        if step.forced_fallback {
            forced_fallbacks += 1;
        }

        steps.push(MissionStepRecord {
            t,
            action: Some(step.chosen),
            observations: obs.clone(),
            h_value: h,
            margin,
            intervened: step.intervened,
            forced_fallback: step.forced_fallback,
            expected_reward: Some(step.expected_reward),
            true_cells: next_cells,
            outcome: phase.into(),
        });

        true_cells = next_cells;
        last_obs = Some(obs);

        match phase {
            MissionPhase::Success => {
                outcome = MissionOutcome::Success;
                steps_to_success = Some(t + 1);
                break;
            }
            MissionPhase::Failure => {
                outcome = MissionOutcome::Failure;
                break;
            }
            MissionPhase::Continue => {}
        }
    }

    ExplorationMissionResult {
        steps,
        beliefs,
        h_values,
        outcome,
        interventions,
        forced_fallbacks,
        steps_to_success,
    }
}

fn deadlock_marker(t: usize, h: f64, true_cells: [usize; 3]) -> MissionStepRecord {
    MissionStepRecord {
        t,
        action: None,
        observations: Vec::new(),
        h_value: h,
        margin: None,
        intervened: false,
        forced_fallback: false,
        expected_reward: None,
        true_cells,
        outcome: StepOutcome::SafetyDeadlock,
    }
}
