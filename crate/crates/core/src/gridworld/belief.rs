//! Factored belief state: per-robot location distributions plus per-cell
//! Bernoulli beliefs over habitability and sample presence.
//!
//! The update is a Bayes step per factor: location distributions are
//! convolved with the motion kernel of the robot's own action component, and
//! every cell that appears in a sensor report is pushed through the binary
//! channel of the reporting robot's accuracy. Cells nobody read are left
//! untouched.

use serde::{Deserialize, Serialize};

use crate::model::{JointAction, ModelError, LIKELIHOOD_CUTOFF};

use super::{AgentObservation, ExplorationScenario, Robot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoredBelief {
    /// Location distribution per robot, indexed by [`Robot`].
    pub locations: [Vec<f64>; 3],
    /// Per-cell probability of being habitable.
    pub habitability: Vec<f64>,
    /// Per-cell probability of containing the sample.
    pub sample: Vec<f64>,
}

impl FactoredBelief {
    /// Known start locations; every cell state at 0.5.
    pub fn initial(scenario: &ExplorationScenario) -> Self {
        let n = scenario.num_cells();
        let mut locations = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (k, &start) in scenario.starts.iter().enumerate() {
            locations[k][start] = 1.0;
        }
        FactoredBelief { locations, habitability: vec![0.5; n], sample: vec![0.5; n] }
    }

    pub fn location(&self, robot: Robot) -> &[f64] {
        &self.locations[robot as usize]
    }

    /// Most likely cell for a robot; ties go to the lowest cell index.
    pub fn modal_cell(&self, robot: Robot) -> usize {
        let probs = self.location(robot);
        let mut best = 0;
        for (c, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = c;
            }
        }
        best
    }
}

/// Posterior of a Bernoulli state after one reading through a binary channel
/// with the given accuracy. Errors when the reading has zero likelihood.
pub fn binary_bayes(prior: f64, accuracy: f64, reading: bool) -> Result<f64, ModelError> {
    let (like_true, like_false) = if reading {
        (accuracy, 1.0 - accuracy)
    } else {
        (1.0 - accuracy, accuracy)
    };
    let numerator = like_true * prior;
    let denominator = numerator + like_false * (1.0 - prior);
    if denominator <= LIKELIHOOD_CUTOFF {
        return Err(ModelError::ImpossibleObservation { likelihood: denominator });
    }
    Ok(numerator / denominator)
}

/// Binary Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn cell_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Expected entropy reduction of a Bernoulli cell from one reading through a
/// channel with the given accuracy (the mutual information between the cell
/// state and the reading).
pub fn expected_info_gain(p: f64, accuracy: f64) -> f64 {
    let p_reading_true = accuracy * p + (1.0 - accuracy) * (1.0 - p);
    let mut expected_posterior_entropy = 0.0;
    for (reading, weight) in [(true, p_reading_true), (false, 1.0 - p_reading_true)] {
        if weight <= 0.0 {
            continue;
        }
        let posterior = binary_bayes(p, accuracy, reading).expect("positive-weight reading");
        expected_posterior_entropy += weight * cell_entropy(posterior);
    }
    // Clamp tiny negative rounding residue.
    (cell_entropy(p) - expected_posterior_entropy).max(0.0)
}

/// Location distributions after every robot applies its action component.
pub(crate) fn convolve_locations(
    belief: &FactoredBelief,
    scenario: &ExplorationScenario,
    action: &JointAction,
) -> [Vec<f64>; 3] {
    let n = scenario.num_cells();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for k in 0..3 {
        let prior = &belief.locations[k];
        let next = &mut out[k];
        for (cell, &p) in prior.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(dest, kp) in scenario.motion_kernel(cell, action.per_agent[k]) {
                next[dest] += p * kp;
            }
        }
        let total: f64 = next.iter().sum();
        for p in next.iter_mut() {
            *p /= total;
        }
    }
    out
}

/// Cell beliefs after folding in every reported reading. Reports are applied
/// in roster order, so repeated reads of the same cell stack multiplicatively.
pub(crate) fn apply_observations(
    belief: &FactoredBelief,
    scenario: &ExplorationScenario,
    observations: &[AgentObservation],
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let mut habitability = belief.habitability.clone();
    let mut sample = belief.sample.clone();
    for obs in observations {
        let sensor = scenario.sensors[obs.robot as usize]
            .expect("only sensing robots report observations");
        for reading in &obs.readings {
            habitability[reading.cell] = binary_bayes(
                habitability[reading.cell],
                sensor.habitability_accuracy,
                reading.habitable,
            )?;
            sample[reading.cell] =
                binary_bayes(sample[reading.cell], sensor.sample_accuracy, reading.sample)?;
        }
    }
    Ok((habitability, sample))
}

/// Full factored Bayes step: motion prediction per robot plus binary-channel
/// corrections on every observed cell.
pub fn update_factored_belief(
    belief: &FactoredBelief,
    scenario: &ExplorationScenario,
    action: &JointAction,
    observations: &[AgentObservation],
) -> Result<FactoredBelief, ModelError> {
    let locations = convolve_locations(belief, scenario, action);
    let (habitability, sample) = apply_observations(belief, scenario, observations)?;
    Ok(FactoredBelief { locations, habitability, sample })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{build_scenario, test_config, CellReading};

    #[test]
    fn prediction_only_step_diffuses_locations_and_keeps_cells() {
        let (scenario, belief) = build_scenario(&test_config()).unwrap();
        let action = scenario.joint_action([4, 4, 4]);
        let updated = update_factored_belief(&belief, &scenario, &action, &[]).unwrap();
        assert_eq!(updated.habitability, belief.habitability);
        assert_eq!(updated.sample, belief.sample);
        for k in 0..3 {
            let sum: f64 = updated.locations[k].iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            // Mass moved off the start under p_succ < 1.
            let start = scenario.starts[k];
            assert!(updated.locations[k][start] < 1.0);
        }
    }

    #[test]
    fn flipper_habitable_reading_lifts_a_half_cell_to_its_accuracy() {
        let (scenario, belief) = build_scenario(&test_config()).unwrap();
        let cell = scenario.dims.index(4, 4);
        let obs = vec![AgentObservation {
            robot: Robot::Flipper,
            readings: vec![CellReading { cell, habitable: true, sample: false }],
        }];
        let action = scenario.joint_action([0, 0, 0]);
        let updated = update_factored_belief(&belief, &scenario, &action, &obs).unwrap();
        // 0.9 * 0.5 / (0.9 * 0.5 + 0.1 * 0.5) = 0.9
        assert!((updated.habitability[cell] - 0.9).abs() < 1e-12);
        // Unobserved cells untouched.
        assert_eq!(updated.habitability[cell + 1], 0.5);
    }

    #[test]
    fn coin_flip_sensor_changes_nothing() {
        for prior in [0.2, 0.5, 0.85] {
            for reading in [true, false] {
                let post = binary_bayes(prior, 0.5, reading).unwrap();
                assert!((post - prior).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn binary_bayes_rejects_zero_likelihood_readings() {
        // Perfect sensor contradicting a certain belief.
        assert!(binary_bayes(1.0, 1.0, false).is_err());
        assert!(binary_bayes(0.0, 1.0, true).is_err());
    }

    #[test]
    fn accurate_readings_move_beliefs_toward_the_reading() {
        for prior in [0.1, 0.5, 0.9] {
            for accuracy in [0.6, 0.9, 0.99] {
                let up = binary_bayes(prior, accuracy, true).unwrap();
                let down = binary_bayes(prior, accuracy, false).unwrap();
                assert!(up > prior, "prior {prior} accuracy {accuracy}");
                assert!(down < prior, "prior {prior} accuracy {accuracy}");
            }
        }
    }

    #[test]
    fn info_gain_vanishes_on_known_cells_and_useless_sensors() {
        assert_eq!(expected_info_gain(0.0, 0.9), 0.0);
        assert_eq!(expected_info_gain(1.0, 0.9), 0.0);
        assert!(expected_info_gain(0.5, 0.5) < 1e-12);
        assert!(expected_info_gain(0.5, 0.9) > 0.1);
    }

    #[test]
    fn info_gain_peaks_at_maximum_uncertainty() {
        let mid = expected_info_gain(0.5, 0.8);
        assert!(mid > expected_info_gain(0.15, 0.8));
        assert!(mid > expected_info_gain(0.85, 0.8));
    }

    #[test]
    fn repeated_readings_stack() {
        let (scenario, belief) = build_scenario(&test_config()).unwrap();
        let cell = scenario.dims.index(4, 4);
        let reading = CellReading { cell, habitable: true, sample: false };
        let obs = vec![
            AgentObservation { robot: Robot::Flipper, readings: vec![reading] },
            AgentObservation { robot: Robot::Flipper, readings: vec![reading] },
        ];
        let (hab, _) = apply_observations(&belief, &scenario, &obs).unwrap();
        // Two 0.9-accuracy confirmations: odds 1 -> 81, p = 81/82.
        assert!((hab[cell] - 81.0 / 82.0).abs() < 1e-12);
    }
}
