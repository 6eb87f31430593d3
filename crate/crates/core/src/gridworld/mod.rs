//! Heterogeneous-robot grid exploration scenario.
//!
//! Three robots share an `n x m` grid: a UAV that senses the sample well but
//! terrain poorly, a Flipper that senses terrain well but the sample poorly,
//! and a Segway that senses nothing and must retrieve the sample. Each cell
//! carries two hidden Bernoulli states (habitable for the Segway, contains
//! the sample) tracked as per-cell probabilities; robot locations are tracked
//! as per-robot distributions over cells. Motion reaches the intended cell
//! with probability `p_succ` and otherwise lands uniformly on one of the
//! eight cells adjacent to the intended cell, renormalized over in-grid
//! outcomes.

pub mod belief;
pub mod mission;

pub use belief::{update_factored_belief, FactoredBelief};
pub use mission::{
    exploration_reward, run_exploration_mission, segway_safety_barrier, unsafe_nominal_policy,
    AlgorithmChoice, DeadlockChoice, ExplorationMissionResult, MissionSettings, MissionStepRecord,
    StepOutcome,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{mixed_radix_decode, mixed_radix_encode, sample_index, JointAction};

/// The robot roster, in joint-index order (UAV most significant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Robot {
    Uav = 0,
    Flipper = 1,
    Segway = 2,
}

pub const ROBOTS: [Robot; 3] = [Robot::Uav, Robot::Flipper, Robot::Segway];

/// Per-agent action set shared by all three robots.
pub const ACTION_NAMES: [&str; 5] = ["stay", "forward", "backward", "left", "right"];

/// Number of joint actions: 5 per agent, three agents.
pub const NUM_JOINT_ACTIONS: usize = 125;

const ACTION_RADICES: [usize; 3] = [5, 5, 5];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),

    #[error("malformed scenario document: {0}")]
    Parse(String),
}

/// Grid geometry helper; cells are flat indices `row * cols + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub rows: usize,
    pub cols: usize,
}

impl GridDims {
    pub fn num_cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.cols, cell % self.cols)
    }

    /// The in-grid cells at Chebyshev distance exactly 1 from `cell`.
    pub fn adjacent8(&self, cell: usize) -> Vec<usize> {
        let (r, c) = self.coords(cell);
        let mut out = Vec::with_capacity(8);
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let nr = r as isize + dr;
                let nc = c as isize + dc;
                if nr >= 0 && nr < self.rows as isize && nc >= 0 && nc < self.cols as isize {
                    out.push(self.index(nr as usize, nc as usize));
                }
            }
        }
        out
    }

    /// In-grid cells within Chebyshev distance `radius` of `cell`, ascending.
    pub fn within_radius(&self, cell: usize, radius: usize) -> Vec<usize> {
        let (r, c) = self.coords(cell);
        let r_lo = r.saturating_sub(radius);
        let r_hi = (r + radius).min(self.rows - 1);
        let c_lo = c.saturating_sub(radius);
        let c_hi = (c + radius).min(self.cols - 1);
        let mut out = Vec::new();
        for nr in r_lo..=r_hi {
            for nc in c_lo..=c_hi {
                out.push(self.index(nr, nc));
            }
        }
        out
    }

    pub fn manhattan(&self, a: usize, b: usize) -> usize {
        let (ar, ac) = self.coords(a);
        let (br, bc) = self.coords(b);
        ar.abs_diff(br) + ac.abs_diff(bc)
    }

    /// Intended destination of an action, clipped at the grid boundary
    /// (moving into a wall stays put).
    pub fn intended(&self, cell: usize, action: usize) -> usize {
        let (r, c) = self.coords(cell);
        let (nr, nc) = match action {
            0 => (r, c),                        // stay
            1 => (r.saturating_sub(1), c),      // forward
            2 => ((r + 1).min(self.rows - 1), c), // backward
            3 => (r, c.saturating_sub(1)),      // left
            4 => (r, (c + 1).min(self.cols - 1)), // right
            other => panic!("action index {other} out of range"),
        };
        self.index(nr, nc)
    }
}

/// Binary-channel sensor: readings match the truth with the given accuracy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SensorProfile {
    pub radius: usize,
    pub habitability_accuracy: f64,
    pub sample_accuracy: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RewardWeights {
    pub info_habitability: f64,
    pub info_sample: f64,
    pub sample_attraction: f64,
    pub danger: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            info_habitability: 1.0,
            info_sample: 1.0,
            sample_attraction: 10.0,
            danger: 10.0,
        }
    }
}

/// One robot's sensor report: the cells it read and the binary detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentObservation {
    pub robot: Robot,
    pub readings: Vec<CellReading>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellReading {
    pub cell: usize,
    pub habitable: bool,
    pub sample: bool,
}

// ---------------------------------------------------------------------------
// Scenario document (the on-disk JSON shape).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// `[rows, cols]`.
    pub grid: [usize; 2],
    pub agents: AgentStarts,
    pub truth: TruthConfig,
    pub sensing: SensingConfig,
    pub motion: MotionConfig,
    pub safety: SafetyConfig,
    #[serde(default)]
    pub rewards: RewardWeights,
    pub planner: PlannerConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentStarts {
    pub uav: [usize; 2],
    pub flipper: [usize; 2],
    pub segway: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthConfig {
    /// One string per row; `.` marks a habitable cell, `x` an uninhabitable one.
    pub habitable: Vec<String>,
    pub sample_cell: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensingConfig {
    pub uav: SensorProfile,
    pub flipper: SensorProfile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotionConfig {
    pub p_succ: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SafetyConfig {
    pub theta: f64,
    pub alpha0: f64,
    /// Optional habitability threshold for a Flipper constraint, checked by
    /// the per-agent planner alongside the Segway's.
    #[serde(default)]
    pub flipper_theta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub algorithm: AlgorithmChoice,
    pub horizon: usize,
    #[serde(default)]
    pub deadlock_policy: DeadlockChoice,
    #[serde(default)]
    pub seed: u64,
    /// Nominal policy reference for the filter; `greedy-sample` is the only
    /// built-in.
    #[serde(default)]
    pub nominal: Option<String>,
}

// ---------------------------------------------------------------------------
// Built scenario.
// ---------------------------------------------------------------------------

/// Validated scenario with precomputed motion kernels.
#[derive(Debug, Clone)]
pub struct ExplorationScenario {
    pub dims: GridDims,
    /// Start cells indexed by [`Robot`].
    pub starts: [usize; 3],
    /// Ground-truth habitability per cell.
    pub habitable: Vec<bool>,
    /// Ground-truth sample location (exactly one cell).
    pub sample_cell: usize,
    /// Sensors indexed by [`Robot`]; the Segway carries none.
    pub sensors: [Option<SensorProfile>; 3],
    pub p_succ: f64,
    pub theta: f64,
    pub alpha0: f64,
    pub flipper_theta: Option<f64>,
    pub weights: RewardWeights,
    /// Sparse motion distribution for every (cell, action) pair.
    kernels: Vec<Vec<(usize, f64)>>,
}

impl ExplorationScenario {
    pub fn num_cells(&self) -> usize {
        self.dims.num_cells()
    }

    /// Motion outcome distribution for taking `action` from `cell`.
    pub fn motion_kernel(&self, cell: usize, action: usize) -> &[(usize, f64)] {
        &self.kernels[cell * 5 + action]
    }

    pub fn joint_action_from_index(&self, joint: usize) -> JointAction {
        JointAction { joint, per_agent: mixed_radix_decode(joint, &ACTION_RADICES) }
    }

    pub fn joint_action(&self, per_agent: [usize; 3]) -> JointAction {
        let per_agent = per_agent.to_vec();
        JointAction { joint: mixed_radix_encode(&per_agent, &ACTION_RADICES), per_agent }
    }

    pub fn action_names(&self, action: &JointAction) -> [String; 3] {
        [
            ACTION_NAMES[action.per_agent[0]].to_string(),
            ACTION_NAMES[action.per_agent[1]].to_string(),
            ACTION_NAMES[action.per_agent[2]].to_string(),
        ]
    }
}

fn check_probability(value: f64, name: &str) -> Result<(), ScenarioError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(ScenarioError::InvalidConfig(format!("{name} = {value} outside [0, 1]")));
    }
    Ok(())
}

/// Builds the validated scenario and the initial factored belief: known
/// point-mass locations and every cell state at 0.5.
pub fn build_scenario(
    config: &ScenarioConfig,
) -> Result<(ExplorationScenario, FactoredBelief), ScenarioError> {
    let [rows, cols] = config.grid;
    if rows < 2 || cols < 2 {
        return Err(ScenarioError::InvalidConfig(format!(
            "grid must be at least 2x2, got {rows}x{cols}"
        )));
    }
    let dims = GridDims { rows, cols };

    if config.truth.habitable.len() != rows {
        return Err(ScenarioError::InvalidConfig(format!(
            "habitable map has {} rows, grid has {rows}",
            config.truth.habitable.len()
        )));
    }
    let mut habitable = Vec::with_capacity(dims.num_cells());
    for (r, row) in config.truth.habitable.iter().enumerate() {
        if row.chars().count() != cols {
            return Err(ScenarioError::InvalidConfig(format!(
                "habitable row {r} has {} cells, grid has {cols}",
                row.chars().count()
            )));
        }
        for (c, ch) in row.chars().enumerate() {
            match ch {
                '.' => habitable.push(true),
                'x' => habitable.push(false),
                other => {
                    return Err(ScenarioError::InvalidConfig(format!(
                        "habitable map cell ({r},{c}) has unknown symbol {other:?}"
                    )))
                }
            }
        }
    }

    let cell_of = |coords: [usize; 2], name: &str| -> Result<usize, ScenarioError> {
        let [r, c] = coords;
        if r >= rows || c >= cols {
            return Err(ScenarioError::InvalidConfig(format!(
                "{name} cell ({r},{c}) outside the {rows}x{cols} grid"
            )));
        }
        Ok(dims.index(r, c))
    };

    let starts = [
        cell_of(config.agents.uav, "uav start")?,
        cell_of(config.agents.flipper, "flipper start")?,
        cell_of(config.agents.segway, "segway start")?,
    ];
    for (robot, &cell) in ROBOTS.iter().zip(&starts) {
        if !habitable[cell] {
            return Err(ScenarioError::InvalidConfig(format!(
                "{robot:?} start cell is uninhabitable"
            )));
        }
    }

    let sample_cell = cell_of(config.truth.sample_cell, "sample")?;
    if !habitable[sample_cell] {
        return Err(ScenarioError::InvalidConfig("sample cell must be habitable".into()));
    }

    let p_succ = config.motion.p_succ;
    if !(p_succ > 0.0 && p_succ <= 1.0) {
        return Err(ScenarioError::InvalidConfig(format!("p_succ = {p_succ} outside (0, 1]")));
    }
    let theta = config.safety.theta;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(ScenarioError::InvalidConfig(format!("theta = {theta} outside (0, 1)")));
    }
    let alpha0 = config.safety.alpha0;
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(ScenarioError::InvalidConfig(format!("alpha0 = {alpha0} outside (0, 1)")));
    }
    if let Some(ft) = config.safety.flipper_theta {
        if !(ft > 0.0 && ft < 1.0) {
            return Err(ScenarioError::InvalidConfig(format!(
                "flipper_theta = {ft} outside (0, 1)"
            )));
        }
    }
    for (profile, name) in [(&config.sensing.uav, "uav"), (&config.sensing.flipper, "flipper")] {
        check_probability(profile.habitability_accuracy, &format!("{name} habitability accuracy"))?;
        check_probability(profile.sample_accuracy, &format!("{name} sample accuracy"))?;
    }
    if let Some(nominal) = &config.planner.nominal {
        if nominal != "greedy-sample" {
            return Err(ScenarioError::InvalidConfig(format!(
                "unknown nominal policy {nominal:?}; the built-in is \"greedy-sample\""
            )));
        }
    }

    let kernels = build_motion_kernels(&dims, p_succ);

    let scenario = ExplorationScenario {
        dims,
        starts,
        habitable,
        sample_cell,
        sensors: [Some(config.sensing.uav), Some(config.sensing.flipper), None],
        p_succ,
        theta,
        alpha0,
        flipper_theta: config.safety.flipper_theta,
        weights: config.rewards,
        kernels,
    };

    let belief = FactoredBelief::initial(&scenario);
    Ok((scenario, belief))
}

/// Loads, parses, and builds a scenario from a JSON document.
pub fn scenario_from_json_str(
    text: &str,
) -> Result<(ScenarioConfig, ExplorationScenario, FactoredBelief), ScenarioError> {
    let config: ScenarioConfig =
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let (scenario, belief) = build_scenario(&config)?;
    Ok((config, scenario, belief))
}

/// Intended cell gets `p_succ`; each of its eight neighbors gets
/// `(1 - p_succ) / 8`; off-grid outcomes are dropped and the rest renormalized.
fn build_motion_kernels(dims: &GridDims, p_succ: f64) -> Vec<Vec<(usize, f64)>> {
    let mut kernels = Vec::with_capacity(dims.num_cells() * 5);
    for cell in 0..dims.num_cells() {
        for action in 0..5 {
            let target = dims.intended(cell, action);
            let mut entries = vec![(target, p_succ)];
            if p_succ < 1.0 {
                for adj in dims.adjacent8(target) {
                    entries.push((adj, (1.0 - p_succ) / 8.0));
                }
            }
            let total: f64 = entries.iter().map(|(_, p)| p).sum();
            for (_, p) in &mut entries {
                *p /= total;
            }
            kernels.push(entries);
        }
    }
    kernels
}

/// Simulates one world step: each robot moves under motion noise, then the
/// sensing robots read every cell in their footprint around their new cell.
pub fn step_world(
    scenario: &ExplorationScenario,
    true_cells: [usize; 3],
    action: &JointAction,
    rng: &mut impl Rng,
) -> ([usize; 3], Vec<AgentObservation>) {
    let mut next = [0usize; 3];
    for (k, &cell) in true_cells.iter().enumerate() {
        let kernel = scenario.motion_kernel(cell, action.per_agent[k]);
        let probs: Vec<f64> = kernel.iter().map(|(_, p)| *p).collect();
        next[k] = kernel[sample_index(&probs, rng)].0;
    }

    let mut observations = Vec::new();
    for (k, robot) in ROBOTS.iter().enumerate() {
        let Some(sensor) = scenario.sensors[k] else { continue };
        let mut readings = Vec::new();
        for cell in scenario.dims.within_radius(next[k], sensor.radius) {
            let hab_truth = scenario.habitable[cell];
            let sample_truth = cell == scenario.sample_cell;
            let habitable = if rng.random::<f64>() < sensor.habitability_accuracy {
                hab_truth
            } else {
                !hab_truth
            };
            let sample = if rng.random::<f64>() < sensor.sample_accuracy {
                sample_truth
            } else {
                !sample_truth
            };
            readings.push(CellReading { cell, habitable, sample });
        }
        observations.push(AgentObservation { robot: *robot, readings });
    }

    (next, observations)
}

/// Mission phase after a world step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionPhase {
    Continue,
    Success,
    Failure,
}

/// Failure (Segway on an uninhabitable cell) takes precedence over success
/// (Segway on the sample cell); the sample cell is habitable by construction,
/// so both cannot hold.
pub fn check_termination(true_cells: [usize; 3], scenario: &ExplorationScenario) -> MissionPhase {
    let segway = true_cells[Robot::Segway as usize];
    if !scenario.habitable[segway] {
        MissionPhase::Failure
    } else if segway == scenario.sample_cell {
        MissionPhase::Success
    } else {
        MissionPhase::Continue
    }
}

#[cfg(test)]
pub(crate) fn test_config() -> ScenarioConfig {
    ScenarioConfig {
        grid: [10, 10],
        agents: AgentStarts { uav: [2, 3], flipper: [2, 2], segway: [2, 2] },
        truth: TruthConfig {
            habitable: vec![
                "..........".into(),
                "..........".into(),
                "..........".into(),
                "..........".into(),
                "..........".into(),
                "..........".into(),
                "..........".into(),
                "......xx..".into(),
                "......xx..".into(),
                "..........".into(),
            ],
            sample_cell: [8, 2],
        },
        sensing: SensingConfig {
            uav: SensorProfile { radius: 2, habitability_accuracy: 0.6, sample_accuracy: 0.9 },
            flipper: SensorProfile { radius: 1, habitability_accuracy: 0.9, sample_accuracy: 0.6 },
        },
        motion: MotionConfig { p_succ: 0.85 },
        safety: SafetyConfig { theta: 0.95, alpha0: 0.2, flipper_theta: None },
        rewards: RewardWeights::default(),
        planner: PlannerConfig {
            algorithm: AlgorithmChoice::Filter,
            horizon: 60,
            deadlock_policy: DeadlockChoice::Stay,
            seed: 0,
            nominal: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_config_builds_125_joint_actions_and_half_beliefs() {
        let (scenario, belief) = build_scenario(&test_config()).unwrap();
        assert_eq!(NUM_JOINT_ACTIONS, 125);
        assert_eq!(scenario.joint_action_from_index(124).per_agent, vec![4, 4, 4]);
        assert!(belief.habitability.iter().all(|&p| p == 0.5));
        assert!(belief.sample.iter().all(|&p| p == 0.5));
        assert_eq!(scenario.theta, 0.95);
    }

    #[test]
    fn initial_locations_are_point_masses_at_starts() {
        let (scenario, belief) = build_scenario(&test_config()).unwrap();
        for (k, &start) in scenario.starts.iter().enumerate() {
            assert_eq!(belief.locations[k][start], 1.0);
            assert_eq!(belief.locations[k].iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn build_rejects_out_of_range_and_unhabitable_cells() {
        let mut config = test_config();
        config.agents.segway = [20, 0];
        assert!(build_scenario(&config).is_err());

        let mut config = test_config();
        config.truth.sample_cell = [7, 6]; // uninhabitable in the test map
        assert!(build_scenario(&config).is_err());

        let mut config = test_config();
        config.grid = [1, 10];
        config.truth.habitable = vec!["..........".into()];
        assert!(build_scenario(&config).is_err());
    }

    #[test]
    fn deterministic_stay_keeps_cells() {
        let mut config = test_config();
        config.motion.p_succ = 1.0;
        let (scenario, _) = build_scenario(&config).unwrap();
        let stay = scenario.joint_action([0, 0, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (next, _) = step_world(&scenario, scenario.starts, &stay, &mut rng);
        assert_eq!(next, scenario.starts);
    }

    #[test]
    fn motion_noise_frequencies_match_the_kernel() {
        let mut config = test_config();
        config.motion.p_succ = 0.9;
        let (scenario, _) = build_scenario(&config).unwrap();
        // Interior cell moving right: target (5,5) -> (5,6).
        let from = scenario.dims.index(5, 5);
        let target = scenario.dims.index(5, 6);
        let action = scenario.joint_action([4, 0, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 100_000;
        let mut target_hits = 0usize;
        let mut adjacent_hits = vec![0usize; 8];
        let adjacent = scenario.dims.adjacent8(target);
        for _ in 0..trials {
            let (next, _) = step_world(&scenario, [from, 0, 0], &action, &mut rng);
            if next[0] == target {
                target_hits += 1;
            } else if let Some(i) = adjacent.iter().position(|&c| c == next[0]) {
                adjacent_hits[i] += 1;
            } else {
                panic!("landed outside the kernel support");
            }
        }
        let target_freq = target_hits as f64 / trials as f64;
        assert!((target_freq - 0.9).abs() < 0.01, "target frequency {target_freq}");
        for hits in adjacent_hits {
            let freq = hits as f64 / trials as f64;
            assert!((freq - 0.0125).abs() < 0.005, "adjacent frequency {freq}");
        }
    }

    #[test]
    fn edge_kernels_renormalize_over_in_grid_cells() {
        let (scenario, _) = build_scenario(&test_config()).unwrap();
        let corner = scenario.dims.index(0, 0);
        for action in 0..5 {
            let total: f64 = scenario.motion_kernel(corner, action).iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12, "action {action} sums to {total}");
        }
    }

    #[test]
    fn sensing_footprints_respect_radius_and_roster() {
        let (scenario, _) = build_scenario(&test_config()).unwrap();
        let action = scenario.joint_action([0, 0, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let center = scenario.dims.index(5, 5);
        let (_, observations) = step_world(&scenario, [center, center, center], &action, &mut rng);
        assert_eq!(observations.len(), 2, "the Segway senses nothing");
        for obs in &observations {
            let radius = match obs.robot {
                Robot::Uav => 2,
                Robot::Flipper => 1,
                Robot::Segway => unreachable!(),
            };
            for reading in &obs.readings {
                let (r, c) = scenario.dims.coords(reading.cell);
                assert!(r.abs_diff(5) <= radius && c.abs_diff(5) <= radius);
            }
        }
    }

    #[test]
    fn termination_cases() {
        let (scenario, _) = build_scenario(&test_config()).unwrap();
        let sample = scenario.sample_cell;
        let bad = scenario.dims.index(7, 6);
        let plain = scenario.dims.index(0, 0);
        assert_eq!(check_termination([0, 0, sample], &scenario), MissionPhase::Success);
        assert_eq!(check_termination([0, 0, bad], &scenario), MissionPhase::Failure);
        assert_eq!(check_termination([0, 0, plain], &scenario), MissionPhase::Continue);
        // The other robots' cells are irrelevant.
        assert_eq!(check_termination([bad, bad, plain], &scenario), MissionPhase::Continue);
    }

    #[test]
    fn intended_moves_clip_at_walls() {
        let dims = GridDims { rows: 3, cols: 3 };
        let corner = dims.index(0, 0);
        assert_eq!(dims.intended(corner, 1), corner); // forward off-grid
        assert_eq!(dims.intended(corner, 3), corner); // left off-grid
        assert_eq!(dims.intended(corner, 2), dims.index(1, 0));
        assert_eq!(dims.intended(corner, 4), dims.index(0, 1));
    }
}
