//! Discrete-time barrier functions over arbitrary state types.
//!
//! A barrier specification bundles one or more scalar functions `h_i`, an
//! optional per-component negation, a Boolean composition (min for
//! conjunction, max for disjunction), and a gain function `alpha`. The
//! one-step condition between consecutive states is
//!
//! ```text
//! h(next) - h(prev) >= -alpha(h(prev))
//! ```
//!
//! evaluated on the composed value, with composition applied before
//! differencing. Satisfying the condition from a nonnegative start keeps the
//! composed value nonnegative forever; with the linear gain `alpha(r) =
//! alpha0 * r` the value additionally obeys the geometric floor
//! `(1 - alpha0)^t * h(start)`.
//!
//! The specification is generic over the state type so the same machinery
//! checks flat joint beliefs, factored beliefs, and raw value sequences.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::model::Belief;

/// Margins at or above this (negative) cutoff count as satisfying the
/// condition; raw margins are always reported so callers can tighten.
pub const MARGIN_TOLERANCE: f64 = 1e-12;

/// Slack allowed on the geometric decay floor and nonnegativity checks.
pub const DECAY_TOLERANCE: f64 = 1e-9;

/// Grid resolution used to sanity-check general gain functions.
const KAPPA_GRID_POINTS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum DtbfError {
    #[error("alpha0 must lie in (0, 1), got {0}")]
    Alpha0OutOfRange(f64),

    #[error("gain function must satisfy {property} (violated near r = {at})")]
    InvalidGain { property: &'static str, at: f64 },

    #[error("a barrier specification needs at least one component")]
    NoComponents,

    #[error("Single composition requires exactly one component, got {0}")]
    SingleArity(usize),
}

/// Gain function for the one-step condition.
///
/// `Constant(alpha0)` is the linear gain `alpha(r) = alpha0 * r`. General
/// gains are arbitrary callables checked at construction on a sampled grid
/// over `[0, r_max]`: zero at zero, strictly increasing, and `alpha(r) < r`
/// for sampled `r > 0`. Both kinds extend to negative arguments as odd
/// functions (`alpha(-r) = -alpha(r)`), which keeps the geometric bound valid
/// on both sides of zero; for the linear gain the extension is the formula
/// itself.
#[derive(Clone)]
pub struct KappaFn {
    kind: KappaKind,
}

#[derive(Clone)]
enum KappaKind {
    Constant(f64),
    General(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for KappaFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            KappaKind::Constant(a) => write!(f, "KappaFn::Constant({a})"),
            KappaKind::General(_) => write!(f, "KappaFn::General(..)"),
        }
    }
}

impl KappaFn {
    pub fn constant(alpha0: f64) -> Result<Self, DtbfError> {
        if !(alpha0 > 0.0 && alpha0 < 1.0) {
            return Err(DtbfError::Alpha0OutOfRange(alpha0));
        }
        Ok(KappaFn { kind: KappaKind::Constant(alpha0) })
    }

    /// Wraps an arbitrary gain after checking it on a 100-point grid over
    /// `[0, r_max]`.
    pub fn general(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        r_max: f64,
    ) -> Result<Self, DtbfError> {
        assert!(r_max > 0.0, "r_max must be positive");
        if f(0.0).abs() > 1e-12 {
            return Err(DtbfError::InvalidGain { property: "alpha(0) = 0", at: 0.0 });
        }
        let step = r_max / (KAPPA_GRID_POINTS - 1) as f64;
        let mut prev_value = f(0.0);
        for i in 1..KAPPA_GRID_POINTS {
            let r = step * i as f64;
            let value = f(r);
            if value <= prev_value {
                return Err(DtbfError::InvalidGain { property: "strict increase", at: r });
            }
            if value >= r {
                return Err(DtbfError::InvalidGain { property: "alpha(r) < r", at: r });
            }
            prev_value = value;
        }
        Ok(KappaFn { kind: KappaKind::General(Arc::new(f)) })
    }

    /// Evaluates the gain, extended to negative arguments as an odd function.
    pub fn apply(&self, r: f64) -> f64 {
        match &self.kind {
            KappaKind::Constant(alpha0) => alpha0 * r,
            KappaKind::General(f) => {
                if r >= 0.0 {
                    f(r)
                } else {
                    -f(-r)
                }
            }
        }
    }

    /// The slope when this is the linear gain.
    pub fn alpha0(&self) -> Option<f64> {
        match self.kind {
            KappaKind::Constant(a) => Some(a),
            KappaKind::General(_) => None,
        }
    }
}

/// How component values combine into the composed barrier value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Composition {
    Single,
    /// min over components; the composed safe set is the intersection.
    Conjunction,
    /// max over components; the composed safe set is the union.
    Disjunction,
}

/// Scalar barrier function over states of type `S`.
pub type BarrierFn<S> = Arc<dyn Fn(&S) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct BarrierComponent<S> {
    h: BarrierFn<S>,
    negated: bool,
}

impl<S> BarrierComponent<S> {
    pub fn new(h: BarrierFn<S>) -> Self {
        BarrierComponent { h, negated: false }
    }

    /// Component contributing `-h` to the composition.
    pub fn negated(h: BarrierFn<S>) -> Self {
        BarrierComponent { h, negated: true }
    }

    fn value(&self, state: &S) -> f64 {
        let v = (self.h)(state);
        if self.negated {
            -v
        } else {
            v
        }
    }
}

/// A composed barrier with its gain function.
#[derive(Clone)]
pub struct BarrierSpec<S> {
    components: Vec<BarrierComponent<S>>,
    composition: Composition,
    kappa: KappaFn,
}

impl<S> fmt::Debug for BarrierSpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BarrierSpec")
            .field("components", &self.components.len())
            .field("composition", &self.composition)
            .field("kappa", &self.kappa)
            .finish()
    }
}

/// Outcome of one condition evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub satisfied: bool,
    pub margin: f64,
}

impl<S> BarrierSpec<S> {
    pub fn single(h: BarrierFn<S>, kappa: KappaFn) -> Self {
        BarrierSpec {
            components: vec![BarrierComponent::new(h)],
            composition: Composition::Single,
            kappa,
        }
    }

    pub fn conjunction(
        components: Vec<BarrierComponent<S>>,
        kappa: KappaFn,
    ) -> Result<Self, DtbfError> {
        if components.is_empty() {
            return Err(DtbfError::NoComponents);
        }
        Ok(BarrierSpec { components, composition: Composition::Conjunction, kappa })
    }

    pub fn disjunction(
        components: Vec<BarrierComponent<S>>,
        kappa: KappaFn,
    ) -> Result<Self, DtbfError> {
        if components.is_empty() {
            return Err(DtbfError::NoComponents);
        }
        Ok(BarrierSpec { components, composition: Composition::Disjunction, kappa })
    }

    pub fn kappa(&self) -> &KappaFn {
        &self.kappa
    }

    pub fn composition(&self) -> Composition {
        self.composition
    }

    /// The composed barrier value at `state`.
    pub fn value(&self, state: &S) -> f64 {
        let mut values = self.components.iter().map(|c| c.value(state));
        match self.composition {
            Composition::Single => values.next().expect("Single spec has one component"),
            Composition::Conjunction => values.fold(f64::INFINITY, f64::min),
            Composition::Disjunction => values.fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// One-step condition between consecutive states. Composition is applied
    /// to each state before differencing.
    pub fn condition(&self, prev: &S, next: &S) -> ConditionCheck {
        condition_from_values(&self.kappa, self.value(prev), self.value(next))
    }

    /// Checks every adjacent pair of `trace` and, for the linear gain started
    /// at a nonnegative value, the geometric floor and nonnegativity at every
    /// point.
    pub fn verify_trace(&self, trace: &[S]) -> TraceReport {
        let values: Vec<f64> = trace.iter().map(|s| self.value(s)).collect();
        TraceReport::from_values(&self.kappa, values)
    }
}

/// The condition margin `h_next - h_prev + alpha(h_prev)` on precomputed
/// barrier values.
pub fn margin_from_values(kappa: &KappaFn, h_prev: f64, h_next: f64) -> f64 {
    h_next - h_prev + kappa.apply(h_prev)
}

/// Condition verdict on precomputed barrier values.
pub fn condition_from_values(kappa: &KappaFn, h_prev: f64, h_next: f64) -> ConditionCheck {
    let margin = margin_from_values(kappa, h_prev, h_next);
    ConditionCheck { satisfied: margin >= -MARGIN_TOLERANCE, margin }
}

/// Geometric floor `(1 - alpha0)^t * h0` implied by the linear gain.
pub fn decay_lower_bound(h0: f64, alpha0: f64, t: usize) -> f64 {
    (1.0 - alpha0).powi(t as i32) * h0
}

/// Step-by-step verdicts over a recorded trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    /// Composed barrier value at every trace point.
    pub barrier_values: Vec<f64>,
    /// Condition margin for each adjacent pair; length = trace length - 1.
    pub margins: Vec<f64>,
    /// Per-pair verdicts aligned with `margins`.
    pub condition_satisfied: Vec<bool>,
    /// Index `t` of the first violating pair `(t, t+1)`, if any.
    pub first_violation: Option<usize>,
    /// With a linear gain and nonnegative start: per-point verdicts of
    /// `h(t) >= (1-alpha0)^t h(0) - tol` and `h(t) >= -tol`.
    pub decay_satisfied: Option<Vec<bool>>,
}

impl TraceReport {
    /// Builds the report from precomputed barrier values.
    pub fn from_values(kappa: &KappaFn, barrier_values: Vec<f64>) -> TraceReport {
        let mut margins = Vec::new();
        let mut condition_satisfied = Vec::new();
        let mut first_violation = None;
        for t in 0..barrier_values.len().saturating_sub(1) {
            let check = condition_from_values(kappa, barrier_values[t], barrier_values[t + 1]);
            if !check.satisfied && first_violation.is_none() {
                first_violation = Some(t);
            }
            margins.push(check.margin);
            condition_satisfied.push(check.satisfied);
        }
        let decay_satisfied = match (kappa.alpha0(), barrier_values.first()) {
            (Some(alpha0), Some(&h0)) if h0 >= 0.0 => Some(
                barrier_values
                    .iter()
                    .enumerate()
                    .map(|(t, &h)| {
                        h >= decay_lower_bound(h0, alpha0, t) - DECAY_TOLERANCE
                            && h >= -DECAY_TOLERANCE
                    })
                    .collect(),
            ),
            _ => None,
        };
        TraceReport {
            barrier_values,
            margins,
            condition_satisfied,
            first_violation,
            decay_satisfied,
        }
    }

    /// True when no pair violates the condition.
    pub fn is_clean(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn violation_count(&self) -> usize {
        self.condition_satisfied.iter().filter(|s| !**s).count()
    }
}

/// Barrier `b[state] - threshold` over flat beliefs.
pub fn linear_threshold(state: usize, threshold: f64) -> BarrierFn<Belief> {
    Arc::new(move |b: &Belief| b.probs()[state] - threshold)
}

/// Barrier `sum_q weights[q] * b[q] - threshold` over flat beliefs.
pub fn weighted_probability(weights: Vec<f64>, threshold: f64) -> BarrierFn<Belief> {
    Arc::new(move |b: &Belief| {
        b.probs().iter().zip(&weights).map(|(p, w)| p * w).sum::<f64>() - threshold
    })
}
