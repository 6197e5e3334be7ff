//! Phased handover reward.
//!
//! Before the grasp the reward is `m_t · η_t · e^{−d_t} + c·w_c`, where `d_t`
//! is the palm-to-grasp-frame distance, `m_t ∈ {−1, +1}` rewards strict
//! progress made from a valid approach zone, and `η_t` shrinks with every
//! contact. Once the thumb and another finger touch the object the reward
//! switches to `α · e^{−d_TGT} + c·w_c`, with `d_TGT` the distance from the
//! object's grasp frame to the receiver's home pose. One-off bonuses are paid
//! on entering the manipulation phase and on reaching the home pose.

use std::fmt;

use crate::metrics::{Metric, Pose};

pub const CONTACT_COUNT: usize = 13;
pub const PALM: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Finger {
    Index = 0,
    Middle = 1,
    Ring = 2,
    Thumb = 3,
}

impl Finger {
    pub const ALL: [Finger; 4] = [Finger::Index, Finger::Middle, Finger::Ring, Finger::Thumb];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phalanx {
    Proximal = 0,
    Medial = 1,
    Distal = 2,
}

impl Phalanx {
    pub const ALL: [Phalanx; 3] = [Phalanx::Proximal, Phalanx::Medial, Phalanx::Distal];
}

/// Flag index of a finger phalanx: the palm is 0, then three entries per
/// finger in the order index, middle, ring, thumb.
pub const fn sensor_index(finger: Finger, phalanx: Phalanx) -> usize {
    1 + 3 * finger as usize + phalanx as usize
}

/// Default sensor weights: palm 0.28, and per finger 0.09 / 0.06 / 0.03 from
/// proximal to distal. They sum to 1.
pub const DEFAULT_CONTACT_WEIGHTS: [f64; CONTACT_COUNT] = [
    0.28, 0.09, 0.06, 0.03, 0.09, 0.06, 0.03, 0.09, 0.06, 0.03, 0.09, 0.06, 0.03,
];

/// Boolean touch sensors on the receiving hand and their reward weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactState {
    pub flags: [bool; CONTACT_COUNT],
    pub weights: [f64; CONTACT_COUNT],
}

impl Default for ContactState {
    fn default() -> Self {
        Self { flags: [false; CONTACT_COUNT], weights: DEFAULT_CONTACT_WEIGHTS }
    }
}

impl ContactState {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with(sensors: &[usize]) -> Self {
        let mut c = Self::default();
        for &i in sensors {
            c.flags[i] = true;
        }
        c
    }

    pub fn set(&mut self, index: usize, on: bool) {
        self.flags[index] = on;
    }

    pub fn finger(&self, finger: Finger, phalanx: Phalanx) -> bool {
        self.flags[sensor_index(finger, phalanx)]
    }

    pub fn palm(&self) -> bool {
        self.flags[PALM]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// `c · w_c`.
    pub fn weighted_sum(&self) -> f64 {
        self.flags.iter().zip(&self.weights).filter(|(f, _)| **f).map(|(_, w)| w).sum()
    }

    /// Bit `i` set iff sensor `i` fired.
    pub fn mask(&self) -> u16 {
        self.flags.iter().enumerate().fold(0, |m, (i, &f)| if f { m | (1 << i) } else { m })
    }

    pub fn from_mask(mask: u16) -> Self {
        let mut c = Self::default();
        for (i, f) in c.flags.iter_mut().enumerate() {
            *f = mask & (1 << i) != 0;
        }
        c
    }

    fn any_on(&self, finger: Finger) -> bool {
        Phalanx::ALL.iter().any(|&p| self.finger(finger, p))
    }
}

/// Checks the weight ordering used by the reward: non-negative, and
/// non-increasing from proximal to distal within each finger.
pub fn weights_are_ordered(weights: &[f64; CONTACT_COUNT]) -> bool {
    weights.iter().all(|w| *w >= 0.0 && w.is_finite())
        && Finger::ALL.iter().all(|&f| {
            let p = weights[sensor_index(f, Phalanx::Proximal)];
            let m = weights[sensor_index(f, Phalanx::Medial)];
            let d = weights[sensor_index(f, Phalanx::Distal)];
            p >= m && m >= d
        })
}

/// The poses behind every distance in the reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSet {
    pub hand_palm: Pose,
    pub hand_back: Pose,
    pub giver_palm: Pose,
    pub object_grasp: Pose,
    /// Receiver starting pose; the object's grasp frame is carried here.
    pub home: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub metric: Metric,
    pub eta0: f64,
    pub alpha: f64,
    pub grasp_bonus: f64,
    pub target_bonus: f64,
    /// `d_TGT` below which the object counts as delivered.
    pub target_tolerance: f64,
    /// Use translation-only distances for `d_ROBOTS` and `d_BACK`.
    pub maneuver_translation_only: bool,
    pub gamma: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            metric: Metric::dq(),
            eta0: 1.0,
            alpha: 12.0,
            grasp_bonus: 5.0,
            target_bonus: 10.0,
            target_tolerance: 0.05,
            maneuver_translation_only: false,
            gamma: 0.99,
        }
    }
}

impl RewardConfig {
    pub fn with_metric(metric: Metric) -> Self {
        Self { metric, ..Self::default() }
    }
}

/// Per-episode reward state, threaded through [`total_reward`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseState {
    /// Grasp indicator; never cleared within an episode.
    pub grasped: bool,
    pub prev_distance: Option<f64>,
    pub grasp_bonus_paid: bool,
    pub target_bonus_paid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Maneuver,
    Approach,
    Handover,
    Manipulation,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Maneuver => "maneuver",
            Phase::Approach => "approach",
            Phase::Handover => "handover",
            Phase::Manipulation => "manipulation",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManeuverDistances {
    pub d_t: f64,
    pub d_robots: f64,
    pub d_back: f64,
}

impl ManeuverDistances {
    pub fn measure(f: &FrameSet, metric: &Metric, translation_only: bool) -> Self {
        let side = |a: &Pose, b: &Pose| {
            if translation_only {
                metric.translation_distance(a, b)
            } else {
                metric.distance(a, b)
            }
        };
        Self {
            d_t: metric.distance(&f.hand_palm, &f.object_grasp),
            d_robots: side(&f.hand_palm, &f.giver_palm),
            d_back: side(&f.hand_back, &f.object_grasp),
        }
    }

    pub fn ok(&self) -> bool {
        self.d_robots > self.d_t && self.d_back > self.d_t
    }
}

/// The palm is closer to the object than to the giver, and the palm (not the
/// back of the hand) is the side facing the grasp frame.
pub fn maneuver_ok(f: &FrameSet, metric: &Metric) -> bool {
    ManeuverDistances::measure(f, metric, false).ok()
}

/// `+1` for strict progress from a valid zone, `−1` otherwise. With no
/// previous distance there is no progress.
pub fn step_modifier(d_t: f64, d_prev: Option<f64>, man_ok: bool) -> i32 {
    let improved = d_prev.is_some_and(|p| d_t < p);
    if improved && man_ok {
        1
    } else {
        -1
    }
}

/// `η₀ / (Σ c + 1)`.
pub fn contact_eta(c: &ContactState, eta0: f64) -> f64 {
    eta0 / (c.count() as f64 + 1.0)
}

/// `η · e^{−d_t}`.
pub fn base_reward(d_t: f64, c: &ContactState, eta0: f64) -> f64 {
    contact_eta(c, eta0) * (-d_t).exp()
}

/// Thumb plus at least one other finger in contact. The palm is not a finger.
pub fn grasp_trigger(c: &ContactState) -> bool {
    c.any_on(Finger::Thumb)
        && [Finger::Index, Finger::Middle, Finger::Ring].iter().any(|&f| c.any_on(f))
}

/// Everything that went into one step's reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardTerms {
    pub d_t: f64,
    pub d_tgt: f64,
    pub man_ok: bool,
    pub m_t: i32,
    pub eta: f64,
    pub contact_term: f64,
    pub bonus: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardStep {
    pub reward: f64,
    pub state: PhaseState,
    pub terms: RewardTerms,
}

pub fn total_reward(
    f: &FrameSet,
    c: &ContactState,
    s: &PhaseState,
    cfg: &RewardConfig,
) -> RewardStep {
    let dist = ManeuverDistances::measure(f, &cfg.metric, cfg.maneuver_translation_only);
    let man_ok = dist.ok();
    let d_t = dist.d_t;
    let d_tgt = cfg.metric.distance(&f.object_grasp, &f.home);
    let m_t = step_modifier(d_t, s.prev_distance, man_ok);
    let eta = contact_eta(c, cfg.eta0);
    let contact_term = c.weighted_sum();

    let mut next = *s;
    next.grasped = s.grasped || grasp_trigger(c);
    next.prev_distance = Some(d_t);

    let shaped = if next.grasped {
        cfg.alpha * (-d_tgt).exp()
    } else {
        m_t as f64 * eta * (-d_t).exp()
    };

    let mut bonus = 0.0;
    if next.grasped && !s.grasped && !next.grasp_bonus_paid {
        bonus += cfg.grasp_bonus;
        next.grasp_bonus_paid = true;
    }
    if next.grasped && d_tgt < cfg.target_tolerance && !next.target_bonus_paid {
        bonus += cfg.target_bonus;
        next.target_bonus_paid = true;
    }

    let phase = if next.grasped {
        Phase::Manipulation
    } else if c.count() > 0 {
        Phase::Handover
    } else if man_ok {
        Phase::Approach
    } else {
        Phase::Maneuver
    };

    RewardStep {
        reward: shaped + contact_term + bonus,
        state: next,
        terms: RewardTerms { d_t, d_tgt, man_ok, m_t, eta, contact_term, bonus, phase },
    }
}

/// `Σ γᵗ rₜ`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    const THUMB_PROX: usize = sensor_index(Finger::Thumb, Phalanx::Proximal);
    const INDEX_PROX: usize = sensor_index(Finger::Index, Phalanx::Proximal);
    const MIDDLE_PROX: usize = sensor_index(Finger::Middle, Phalanx::Proximal);

    fn at(x: f64) -> Pose {
        Pose::from_translation(Vector3::new(x, 0.0, 0.0))
    }

    #[test]
    fn default_weights() {
        let total: f64 = DEFAULT_CONTACT_WEIGHTS.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(weights_are_ordered(&DEFAULT_CONTACT_WEIGHTS));
        let mut bad = DEFAULT_CONTACT_WEIGHTS;
        bad[sensor_index(Finger::Ring, Phalanx::Distal)] = 0.5;
        assert!(!weights_are_ordered(&bad));
    }

    #[test]
    fn sensor_layout() {
        assert_eq!(sensor_index(Finger::Index, Phalanx::Proximal), 1);
        assert_eq!(sensor_index(Finger::Thumb, Phalanx::Distal), 12);
        let c = ContactState::with(&[PALM, THUMB_PROX]);
        assert_eq!(c.mask(), 1 | (1 << 10));
        assert_eq!(ContactState::from_mask(c.mask()), c);
    }

    #[test]
    fn maneuver_cases() {
        let m = Metric::dq();
        let good = FrameSet {
            hand_palm: at(0.0),
            hand_back: at(-0.5),
            giver_palm: at(2.0),
            object_grasp: at(0.0),
            home: at(-1.0),
        };
        assert!(maneuver_ok(&good, &m));

        // Back of the hand sits on the object while the palm is further away.
        let flipped = FrameSet { hand_palm: at(0.1), hand_back: at(0.0), ..good };
        assert!(!maneuver_ok(&flipped, &m));

        // Palm closer to the giver than to the object.
        let near_giver = FrameSet { hand_palm: at(1.5), hand_back: at(1.0), ..good };
        assert!(!maneuver_ok(&near_giver, &m));
    }

    #[test]
    fn step_modifier_cases() {
        assert_eq!(step_modifier(0.4, Some(0.5), true), 1);
        assert_eq!(step_modifier(0.5, Some(0.5), true), -1);
        assert_eq!(step_modifier(0.4, Some(0.5), false), -1);
        assert_eq!(step_modifier(0.4, None, true), -1);
    }

    #[test]
    fn eta_and_base_reward() {
        assert_eq!(contact_eta(&ContactState::none(), 1.0), 1.0);
        let three = ContactState::with(&[PALM, INDEX_PROX, MIDDLE_PROX]);
        assert_eq!(contact_eta(&three, 1.0), 0.25);
        let all = ContactState { flags: [true; CONTACT_COUNT], ..Default::default() };
        assert_eq!(contact_eta(&all, 1.0), 1.0 / 14.0);

        assert_eq!(base_reward(0.0, &ContactState::none(), 1.0), 1.0);
        assert!((base_reward(1.0, &ContactState::none(), 1.0) - 0.36788).abs() < 1e-5);
        assert_eq!(base_reward(0.0, &ContactState::with(&[PALM]), 1.0), 0.5);
    }

    #[test]
    fn grasp_trigger_cases() {
        assert!(grasp_trigger(&ContactState::with(&[THUMB_PROX, INDEX_PROX])));
        assert!(!grasp_trigger(&ContactState::with(&[INDEX_PROX, MIDDLE_PROX])));
        assert!(!grasp_trigger(&ContactState::with(&[THUMB_PROX])));
        assert!(!grasp_trigger(&ContactState::with(&[THUMB_PROX, PALM])));
    }

    #[test]
    fn total_reward_examples() {
        let cfg = RewardConfig::default();
        // dq distance of a pure translation is |t| / 2.
        let frames = FrameSet {
            hand_palm: at(0.0),
            hand_back: at(-1.0),
            giver_palm: at(4.0),
            object_grasp: at(0.8),
            home: at(-2.0),
        };
        let prev = PhaseState { prev_distance: Some(0.5), ..Default::default() };
        let out = total_reward(&frames, &ContactState::none(), &prev, &cfg);
        assert!((out.reward - (-0.4f64).exp()).abs() < 1e-12);
        assert!((out.reward - 0.67032).abs() < 1e-5);
        assert_eq!(out.state.prev_distance, Some(out.terms.d_t));

        let bad_zone = FrameSet { hand_back: at(0.7), ..frames };
        let out = total_reward(&bad_zone, &ContactState::none(), &prev, &cfg);
        assert!((out.reward + (-0.4f64).exp()).abs() < 1e-12);

        let delivered = FrameSet { object_grasp: at(-2.0), ..frames };
        let done = PhaseState {
            grasped: true,
            prev_distance: Some(1.0),
            grasp_bonus_paid: true,
            target_bonus_paid: true,
        };
        let out = total_reward(&delivered, &ContactState::none(), &done, &cfg);
        assert_eq!(out.reward, 12.0);
    }

    #[test]
    fn discounted_return_cases() {
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.0), 1.0);
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 1.0), 3.0);
        assert_eq!(discounted_return(&[1.0, 2.0, 3.0], 0.5), 2.75);
        assert_eq!(discounted_return(&[], 0.9), 0.0);
    }
}
