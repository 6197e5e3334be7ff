//! Physics-free handover environment.
//!
//! The receiver's palm pose is integrated directly from pose increments; the
//! giver holds the object until the receiver's grasp triggers, at which point
//! the giver opens and the object becomes rigidly attached to the receiver's
//! palm. A grasp that is lost while the giver is open leaves the object
//! falling, and the episode fails once it has fallen for `fall_window` steps.
//!
//! Lab layout: the receiver's home pose is the world origin with its palm
//! normal along `+x`; the giver's base sits 0.8 m further along `+x` and
//! presents the object around `handover_point`.

pub mod log;
pub mod objects;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use thiserror::Error;

use crate::metrics::{euler_to_quat, quat_to_euler, wrap_euler, DistanceBreakdown, Metric, Pose};
use crate::reward::{grasp_trigger, total_reward, ContactState, FrameSet, PhaseState, RewardConfig, RewardTerms};

pub use log::{classify_outcome, EpisodeLog, Outcome, StepRecord, CSV_HEADER, TRACE_HEADER};
pub use objects::{contact_proxy, ContactProxyConfig, ObjectKind, ObjectSpec, Shape};

pub const ACTION_DIM: usize = 9;
pub const OBS_DIM: usize = 15;

const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("episode already finished with outcome '{0}'")]
    Terminal(Outcome),
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite {quantity} at step {step}")]
    NonFinite { step: usize, quantity: &'static str },
}

/// Giver motion during the handover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    Off,
    /// Constant speeds along a random direction / about a random axis chosen at reset.
    Moving { linear_speed: f64, angular_speed: f64 },
}

impl Perturbation {
    pub const LINEAR_SPEED: f64 = 0.03;
    pub const ANGULAR_SPEED: f64 = 0.16;

    pub fn moving() -> Self {
        Perturbation::Moving { linear_speed: Self::LINEAR_SPEED, angular_speed: Self::ANGULAR_SPEED }
    }

    pub fn is_on(&self) -> bool {
        matches!(self, Perturbation::Moving { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub reset_cube_half_extent: f64,
    pub reset_rot_roll_yaw: f64,
    pub reset_rot_pitch: f64,
    pub max_steps: usize,
    pub action_translation_limit: f64,
    pub action_rotation_limit: f64,
    pub joint_limit: f64,
    pub joint_max: f64,
    pub perturbation: Perturbation,
    pub control_dt: f64,
    pub object: ObjectSpec,
    pub seed: u64,
    /// Nominal grasp-frame position, the center of the reset cube.
    pub handover_point: Vector3<f64>,
    /// Standard deviation of Gaussian noise added to observations; 0 disables it.
    pub observation_noise: f64,
    pub fall_window: usize,
    pub contact: ContactProxyConfig,
    pub reward: RewardConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            reset_cube_half_extent: 0.15,
            reset_rot_roll_yaw: 0.3,
            reset_rot_pitch: 0.6,
            max_steps: 500,
            action_translation_limit: 0.01,
            action_rotation_limit: 0.05,
            joint_limit: 0.05,
            joint_max: 1.6,
            perturbation: Perturbation::Off,
            control_dt: 1.0 / 30.0,
            object: ObjectKind::Prism.spec(),
            seed: 0,
            handover_point: Vector3::new(0.4, 0.0, 0.0),
            observation_noise: 0.0,
            fall_window: 15,
            contact: ContactProxyConfig::default(),
            reward: RewardConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("action_translation_limit", self.action_translation_limit),
            ("action_rotation_limit", self.action_rotation_limit),
            ("joint_limit", self.joint_limit),
            ("joint_max", self.joint_max),
            ("control_dt", self.control_dt),
            ("contact_epsilon", self.contact.epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("reset_cube_half_extent", self.reset_cube_half_extent),
            ("reset_rot_roll_yaw", self.reset_rot_roll_yaw),
            ("reset_rot_pitch", self.reset_rot_pitch),
            ("observation_noise", self.observation_noise),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.reset_rot_pitch >= std::f64::consts::FRAC_PI_2 {
            return Err(SimError::InvalidConfig("reset_rot_pitch must stay below pi/2".into()));
        }
        if self.max_steps == 0 {
            return Err(SimError::InvalidConfig("max_steps must be >= 1".into()));
        }
        if !self.object.is_valid() {
            return Err(SimError::InvalidConfig(format!("object '{}' has non-positive dimensions", self.object.name)));
        }
        if let Perturbation::Moving { linear_speed, angular_speed } = self.perturbation {
            if !(linear_speed > 0.0 && angular_speed > 0.0) {
                return Err(SimError::InvalidConfig("perturbation speeds must be > 0".into()));
            }
        }
        self.reward
            .metric
            .weights
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    /// Receiver starting pose: origin, palm normal along world `+x`, fingers up.
    pub fn home_pose(&self) -> Pose {
        Pose::from_matrix(Vector3::zeros(), &home_rotation())
    }

    /// Grasp-frame pose with zero reset randomization.
    pub fn nominal_grasp_pose(&self) -> Pose {
        Pose::new(self.handover_point, self.home_pose().rotation)
    }
}

fn home_rotation() -> Matrix3<f64> {
    // palm x → world y, palm y → world z, palm z → world x
    Matrix3::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0)
}

/// Back-of-hand frame relative to the palm frame: 4 cm behind the palm and
/// facing the opposite way.
pub fn back_offset() -> Pose {
    Pose::new(
        Vector3::new(0.0, 0.0, -0.04),
        crate::quat::Quaternion::from_axis_angle(&Vector3::x(), std::f64::consts::PI),
    )
}

/// Pose increments for the receiver's palm and increments for its three
/// global hand joints (proximal, medial, distal closure).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Action {
    pub d_translation: Vector3<f64>,
    pub d_euler: Vector3<f64>,
    pub d_joints: [f64; 3],
}

impl Action {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_array(a: &[f64; ACTION_DIM]) -> Self {
        Self {
            d_translation: Vector3::new(a[0], a[1], a[2]),
            d_euler: Vector3::new(a[3], a[4], a[5]),
            d_joints: [a[6], a[7], a[8]],
        }
    }

    pub fn to_array(&self) -> [f64; ACTION_DIM] {
        let (t, e, j) = (&self.d_translation, &self.d_euler, &self.d_joints);
        [t.x, t.y, t.z, e.x, e.y, e.z, j[0], j[1], j[2]]
    }

    /// Clamps every component to the configured per-step limits; NaN becomes 0.
    pub fn clamped(&self, cfg: &SimConfig) -> Self {
        let clip = |v: f64, lim: f64| if v.is_nan() { 0.0 } else { v.clamp(-lim, lim) };
        let mut a = self.to_array();
        for (i, v) in a.iter_mut().enumerate() {
            let lim = match i {
                0..=2 => cfg.action_translation_limit,
                3..=5 => cfg.action_rotation_limit,
                _ => cfg.joint_limit,
            };
            *v = clip(*v, lim);
        }
        Self::from_array(&a)
    }
}

/// Applies a pose increment: translation added in the world frame, rotation
/// increment composed on the left.
pub fn integrate_pose(pose: &Pose, d_translation: &Vector3<f64>, d_euler: &Vector3<f64>) -> Pose {
    Pose::new(pose.translation + d_translation, euler_to_quat(d_euler) * pose.rotation)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub receiver_translation: Vector3<f64>,
    pub receiver_euler: Vector3<f64>,
    /// Pose of the object's grasp frame.
    pub object_translation: Vector3<f64>,
    pub object_euler: Vector3<f64>,
    pub hand_joints: [f64; 3],
}

impl Observation {
    pub fn to_array(&self) -> [f64; OBS_DIM] {
        let mut out = [0.0; OBS_DIM];
        let parts = [
            &self.receiver_translation,
            &self.receiver_euler,
            &self.object_translation,
            &self.object_euler,
        ];
        for (k, v) in parts.iter().enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(v.as_slice());
        }
        out[12..].copy_from_slice(&self.hand_joints);
        out
    }
}

/// Giver motion bookkeeping, fixed at reset except for reflections at the
/// randomization bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiverMotion {
    pub direction: Vector3<f64>,
    pub axis: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub frames: FrameSet,
    pub hand_joints: [f64; 3],
    pub giver_open: bool,
    /// Object rigidly attached to the receiver's palm.
    pub holding: bool,
    /// Object grasp frame expressed in the palm frame while attached.
    pub attachment: Option<Pose>,
    /// Where the giver's hand holds the grasp frame; moves under perturbation.
    pub giver_hold: Pose,
    pub giver_motion: GiverMotion,
    pub falling_steps: usize,
    pub fall_speed: f64,
    pub step_index: usize,
    pub contacts: ContactState,
    pub phase: PhaseState,
    pub outcome: Outcome,
    pub rng: ChaCha8Rng,
}

impl SimState {
    pub fn is_terminal(&self) -> bool {
        self.outcome.is_terminal()
    }

    /// Perturbation of the held grasp frame relative to the nominal pose:
    /// translation offset and `(roll, pitch, yaw)` of the relative rotation.
    pub fn giver_offset(&self, cfg: &SimConfig) -> (Vector3<f64>, Vector3<f64>) {
        let nominal = cfg.nominal_grasp_pose();
        let rel = self.giver_hold.rotation * nominal.rotation.conj();
        (self.giver_hold.translation - nominal.translation, quat_to_euler(&rel))
    }
}

fn symmetric(rng: &mut ChaCha8Rng, half: f64) -> f64 {
    (2.0 * rng.random::<f64>() - 1.0) * half
}

/// Samples a fresh episode. Identical `(cfg, seed)` give identical states.
pub fn reset(cfg: &SimConfig, seed: u64) -> SimState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = cfg.reset_cube_half_extent;
    let offset = Vector3::new(symmetric(&mut rng, h), symmetric(&mut rng, h), symmetric(&mut rng, h));
    let roll = symmetric(&mut rng, cfg.reset_rot_roll_yaw);
    let pitch = symmetric(&mut rng, cfg.reset_rot_pitch);
    let yaw = symmetric(&mut rng, cfg.reset_rot_roll_yaw);
    let direction = Vector3::from(UnitSphere.sample(&mut rng));
    let axis = Vector3::from(UnitSphere.sample(&mut rng));

    let home = cfg.home_pose();
    let nominal = cfg.nominal_grasp_pose();
    let grasp = Pose::new(
        nominal.translation + offset,
        euler_to_quat(&Vector3::new(roll, pitch, yaw)) * nominal.rotation,
    );
    let frames = FrameSet {
        hand_palm: home,
        hand_back: home.compose(&back_offset()),
        giver_palm: cfg.object.giver_from_grasp(&grasp),
        object_grasp: grasp,
        home,
    };
    let hand_joints = [0.0; 3];
    let contacts = contact_proxy(&home, &hand_joints, &cfg.object, &grasp, &cfg.contact);
    SimState {
        frames,
        hand_joints,
        giver_open: false,
        holding: false,
        attachment: None,
        giver_hold: grasp,
        giver_motion: GiverMotion { direction, axis },
        falling_steps: 0,
        fall_speed: 0.0,
        step_index: 0,
        contacts,
        phase: PhaseState::default(),
        outcome: Outcome::Pending,
        rng,
    }
}

/// One step of the giver's motion, measured at the held grasp frame.
///
/// The translation reflects component-wise and the rotation reverses at the
/// reset bounds, so the per-step displacement keeps its exact magnitude.
fn move_giver(s: &mut SimState, cfg: &SimConfig, linear_speed: f64, angular_speed: f64) {
    let nominal = cfg.nominal_grasp_pose();
    let h = cfg.reset_cube_half_extent;
    let step_len = linear_speed * cfg.control_dt;
    let mut offset = s.giver_hold.translation - nominal.translation;
    for i in 0..3 {
        let next = offset[i] + s.giver_motion.direction[i] * step_len;
        if next.abs() > h {
            s.giver_motion.direction[i] = -s.giver_motion.direction[i];
            let reflected = offset[i] + s.giver_motion.direction[i] * step_len;
            if reflected.abs() > h {
                // Range narrower than one step.
                continue;
            }
        }
        offset[i] += s.giver_motion.direction[i] * step_len;
    }

    let angle = angular_speed * cfg.control_dt;
    let in_range = |q: &crate::quat::Quaternion| {
        let e = quat_to_euler(&(*q * nominal.rotation.conj()));
        e.x.abs() <= cfg.reset_rot_roll_yaw + 1e-12
            && e.y.abs() <= cfg.reset_rot_pitch + 1e-12
            && e.z.abs() <= cfg.reset_rot_roll_yaw + 1e-12
    };
    let turn = |axis: &Vector3<f64>| {
        crate::quat::Quaternion::from_axis_angle(axis, angle) * s.giver_hold.rotation
    };
    let mut rotation = turn(&s.giver_motion.axis);
    if !in_range(&rotation) {
        s.giver_motion.axis = -s.giver_motion.axis;
        rotation = turn(&s.giver_motion.axis);
        if !in_range(&rotation) {
            rotation = s.giver_hold.rotation;
        }
    }
    s.giver_hold = Pose::new(nominal.translation + offset, rotation);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub outcome: Outcome,
    pub terms: RewardTerms,
    pub record: StepRecord,
}

/// Advances the episode by one control step.
pub fn step(s: &mut SimState, action: &Action, cfg: &SimConfig) -> Result<Transition, SimError> {
    if s.is_terminal() {
        return Err(SimError::Terminal(s.outcome));
    }
    let a = action.clamped(cfg);

    let palm = integrate_pose(&s.frames.hand_palm, &a.d_translation, &a.d_euler);
    for (j, dj) in s.hand_joints.iter_mut().zip(a.d_joints) {
        *j = (*j + dj).clamp(0.0, cfg.joint_max);
    }

    if let Perturbation::Moving { linear_speed, angular_speed } = cfg.perturbation {
        move_giver(s, cfg, linear_speed, angular_speed);
    }

    let object_grasp = match (s.holding, s.attachment) {
        (true, Some(attach)) => palm.compose(&attach),
        _ if s.giver_open => {
            s.falling_steps += 1;
            s.fall_speed += GRAVITY * cfg.control_dt;
            let mut falling = s.frames.object_grasp;
            falling.translation.z -= s.fall_speed * cfg.control_dt;
            falling
        }
        _ => s.giver_hold,
    };

    s.frames = FrameSet {
        hand_palm: palm,
        hand_back: palm.compose(&back_offset()),
        giver_palm: cfg.object.giver_from_grasp(&s.giver_hold),
        object_grasp,
        home: s.frames.home,
    };
    s.contacts = contact_proxy(&palm, &s.hand_joints, &cfg.object, &object_grasp, &cfg.contact);

    let grip = grasp_trigger(&s.contacts);
    if !s.holding && grip {
        s.holding = true;
        s.attachment = Some(palm.inverse().compose(&object_grasp));
        s.giver_open = true;
        s.falling_steps = 0;
        s.fall_speed = 0.0;
    } else if s.holding && !grip {
        s.holding = false;
        s.attachment = None;
    }

    let out = total_reward(&s.frames, &s.contacts, &s.phase, &cfg.reward);
    s.phase = out.state;
    s.step_index += 1;

    let tol = cfg.reward.target_tolerance;
    s.outcome = if s.holding && out.terms.d_tgt < tol {
        Outcome::Success
    } else if s.falling_steps >= cfg.fall_window {
        Outcome::Fail
    } else if s.step_index >= cfg.max_steps {
        if s.falling_steps > 0 {
            Outcome::Fail
        } else {
            Outcome::Timeout
        }
    } else {
        Outcome::Pending
    };

    let dist = objective_distances(s, &cfg.reward.metric);
    for (quantity, v) in [("reward", out.reward), ("distance", dist.global), ("target distance", out.terms.d_tgt)] {
        if !v.is_finite() {
            return Err(SimError::NonFinite { step: s.step_index, quantity });
        }
    }
    let record = StepRecord {
        step: s.step_index,
        phase: out.terms.phase,
        d_global: dist.global,
        d_trans: dist.translation,
        d_rot: dist.rotation,
        reward: out.reward,
        m_t: out.terms.m_t,
        eta: out.terms.eta,
        contact_mask: s.contacts.mask(),
        grasped: s.phase.grasped,
        outcome: s.outcome,
        d_tgt: out.terms.d_tgt,
        holding: s.holding,
        falling_steps: s.falling_steps,
    };

    Ok(Transition {
        observation: observe(s, cfg),
        reward: out.reward,
        done: s.is_terminal(),
        outcome: s.outcome,
        terms: out.terms,
        record,
    })
}

/// Distances of the active objective: palm to grasp frame until the grasp
/// indicator is set, object grasp frame to home afterwards.
pub fn objective_distances(s: &SimState, metric: &Metric) -> DistanceBreakdown {
    if s.phase.grasped {
        metric.breakdown(&s.frames.object_grasp, &s.frames.home)
    } else {
        metric.breakdown(&s.frames.hand_palm, &s.frames.object_grasp)
    }
}

/// Current observation; draws from the state's generator only when noise is enabled.
pub fn observe(s: &mut SimState, cfg: &SimConfig) -> Observation {
    let palm = &s.frames.hand_palm;
    let obj = &s.frames.object_grasp;
    let mut o = Observation {
        receiver_translation: palm.translation,
        receiver_euler: palm.euler_xyz(),
        object_translation: obj.translation,
        object_euler: obj.euler_xyz(),
        hand_joints: s.hand_joints,
    };
    if cfg.observation_noise > 0.0 {
        let normal = Normal::new(0.0, cfg.observation_noise).expect("noise std validated");
        for v in [
            &mut o.receiver_translation,
            &mut o.receiver_euler,
            &mut o.object_translation,
            &mut o.object_euler,
        ] {
            for c in v.iter_mut() {
                *c += normal.sample(&mut s.rng);
            }
        }
        o.receiver_euler = wrap_euler(&o.receiver_euler);
        o.object_euler = wrap_euler(&o.object_euler);
    }
    o
}

/// Environment wrapper owning a configuration and the current state.
#[derive(Debug, Clone)]
pub struct HandoverEnv {
    cfg: SimConfig,
    state: SimState,
}

impl HandoverEnv {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let state = reset(&cfg, cfg.seed);
        Ok(Self { cfg, state })
    }

    pub fn reset(&mut self, seed: u64) -> Observation {
        self.state = reset(&self.cfg, seed);
        observe(&mut self.state, &self.cfg)
    }

    pub fn step(&mut self, action: &Action) -> Result<Transition, SimError> {
        step(&mut self.state, action, &self.cfg)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }
}
