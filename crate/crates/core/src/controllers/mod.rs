//! Scripted baselines: greedy distance descent and a linear policy tuned by
//! random search.

pub mod policy;
pub mod rollout;
pub mod search;

use nalgebra::Vector3;
use thiserror::Error;

use crate::metrics::{Metric, Pose};
use crate::sim::{integrate_pose, Action, Observation, SimError, SimState, ACTION_DIM};

pub use policy::{LinearPolicy, PolicyParseError};
pub use rollout::{rollout, run_episode, wilson_interval, RolloutSummary};
pub use search::{random_search, SearchConfig, SearchResult};

/// Anything that maps the current episode state to an action.
///
/// Implementations must be pure so that rollouts are reproducible by seed.
pub trait Controller: Sync {
    fn act(&self, s: &SimState, obs: &Observation) -> Result<Action, SimError>;
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid controller configuration: {0}")]
pub struct ControllerConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub metric: Metric,
    /// Finite-difference probe size per action dimension (meters or radians).
    pub probe_step: f64,
    /// Fraction of the estimated distance-to-zero covered per step.
    pub descent_gain: f64,
    /// Joint closure per step once any contact is sensed, radians.
    pub joint_close_rate: f64,
    pub action_translation_limit: f64,
    pub action_rotation_limit: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            metric: Metric::dq(),
            probe_step: 1e-3,
            descent_gain: 0.9,
            joint_close_rate: 0.05,
            action_translation_limit: 0.01,
            action_rotation_limit: 0.05,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControllerConfigError> {
        let limit = self.action_translation_limit.min(self.action_rotation_limit);
        if !(self.probe_step > 0.0 && self.probe_step <= limit) {
            return Err(ControllerConfigError(format!(
                "probe_step must be in (0, {limit}], got {}",
                self.probe_step
            )));
        }
        if !(self.descent_gain > 0.0 && self.descent_gain.is_finite()) {
            return Err(ControllerConfigError(format!("descent_gain must be > 0, got {}", self.descent_gain)));
        }
        if !(self.joint_close_rate >= 0.0 && self.joint_close_rate.is_finite()) {
            return Err(ControllerConfigError(format!(
                "joint_close_rate must be >= 0, got {}",
                self.joint_close_rate
            )));
        }
        Ok(())
    }
}

/// The pose the controller is trying to move and the pose it should reach,
/// as a function of the candidate palm pose.
enum Objective<'a> {
    Reach { target: &'a Pose },
    Carry { attach: &'a Pose, home: &'a Pose },
}

impl Objective<'_> {
    fn of(s: &SimState) -> Objective<'_> {
        match (&s.attachment, s.holding) {
            (Some(attach), true) => Objective::Carry { attach, home: &s.frames.home },
            _ => Objective::Reach { target: &s.frames.object_grasp },
        }
    }

    fn eval(&self, metric: &Metric, palm: &Pose) -> f64 {
        match self {
            Objective::Reach { target } => metric.distance(palm, target),
            Objective::Carry { attach, home } => metric.distance(&palm.compose(attach), home),
        }
    }
}

fn pose_step(palm: &Pose, v: &[f64; 6]) -> Pose {
    integrate_pose(palm, &Vector3::new(v[0], v[1], v[2]), &Vector3::new(v[3], v[4], v[5]))
}

/// One step of coordinate-probed descent on the configured metric.
///
/// Each of the six pose dimensions is probed at `±probe_step`; dimensions on
/// which neither probe improves are frozen. The remaining central differences
/// give a gradient along which a step of length `descent_gain · d / |g|` is
/// taken, halved until it improves; if no halving helps the best single probe
/// is used. Joints close at `joint_close_rate` while any sensor is in contact
/// or the object is held.
pub fn greedy_step(s: &SimState, cfg: &ControllerConfig) -> Result<Action, SimError> {
    if s.is_terminal() {
        return Err(SimError::Terminal(s.outcome));
    }
    let palm = &s.frames.hand_palm;
    let objective = Objective::of(s);
    let f = |v: &[f64; 6]| objective.eval(&cfg.metric, &pose_step(palm, v));
    let d0 = objective.eval(&cfg.metric, palm);
    let h = cfg.probe_step;

    let mut grad = [0.0; 6];
    let mut best_probe = ([0.0; 6], d0);
    for i in 0..6 {
        let mut plus = [0.0; 6];
        plus[i] = h;
        let mut minus = [0.0; 6];
        minus[i] = -h;
        let (dp, dm) = (f(&plus), f(&minus));
        if dp.min(dm) >= d0 {
            continue;
        }
        grad[i] = (dp - dm) / (2.0 * h);
        for (v, d) in [(plus, dp), (minus, dm)] {
            if d < best_probe.1 {
                best_probe = (v, d);
            }
        }
    }

    let g2: f64 = grad.iter().map(|g| g * g).sum();
    let mut chosen = [0.0; 6];
    if g2 > 0.0 {
        let limits = [cfg.action_translation_limit, cfg.action_rotation_limit];
        let mut step = grad.map(|g| -cfg.descent_gain * d0 * g / g2);
        for (i, v) in step.iter_mut().enumerate() {
            let lim = limits[i / 3];
            *v = v.clamp(-lim, lim);
        }
        let mut found = false;
        for _ in 0..=8 {
            if f(&step) < d0 {
                found = true;
                break;
            }
            step = step.map(|v| 0.5 * v);
        }
        chosen = if found { step } else { best_probe.0 };
    }

    let close = if s.contacts.count() > 0 || s.holding { cfg.joint_close_rate } else { 0.0 };
    let mut a = [0.0; ACTION_DIM];
    a[..6].copy_from_slice(&chosen);
    a[6..].fill(close);
    Ok(Action::from_array(&a))
}

/// Greedy descent as a [`Controller`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Greedy(pub ControllerConfig);

impl Controller for Greedy {
    fn act(&self, s: &SimState, _obs: &Observation) -> Result<Action, SimError> {
        greedy_step(s, &self.0)
    }
}
