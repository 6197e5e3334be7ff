//! Flat `key = value` configuration with one `[section]` per module.
//!
//! ```text
//! # comments run to the end of the line
//! [sim]
//! object = short_prism
//! [reward]
//! metric = euler
//! ```
//!
//! Every key has a default; a file and command-line overrides only replace
//! values. Unknown sections and keys are rejected with the offending line.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::controllers::{ControllerConfig, SearchConfig};
use crate::metrics::{Metric, MetricKind, MetricWeights};
use crate::reward::RewardConfig;
use crate::sim::{ContactProxyConfig, ObjectKind, Perturbation, SimConfig};

/// `(section, key, default)` in echo order.
const SCHEMA: &[(&str, &str, &str)] = &[
    ("sim", "object", "prism"),
    ("sim", "perturbation", "off"),
    ("sim", "giver_linear_speed", "0.03"),
    ("sim", "giver_angular_speed", "0.16"),
    ("sim", "reset_cube_half_extent", "0.15"),
    ("sim", "reset_rot_roll_yaw", "0.3"),
    ("sim", "reset_rot_pitch", "0.6"),
    ("sim", "max_steps", "500"),
    ("sim", "action_translation_limit", "0.01"),
    ("sim", "action_rotation_limit", "0.05"),
    ("sim", "joint_limit", "0.05"),
    ("sim", "joint_max", "1.6"),
    ("sim", "control_dt", "0.03333333333333333"),
    ("sim", "handover_x", "0.4"),
    ("sim", "handover_y", "0"),
    ("sim", "handover_z", "0"),
    ("sim", "observation_noise", "0"),
    ("sim", "fall_window", "15"),
    ("sim", "contact_epsilon", "0.01"),
    ("sim", "contact_threshold_proximal", "0.3"),
    ("sim", "contact_threshold_medial", "0.6"),
    ("sim", "contact_threshold_distal", "0.9"),
    ("reward", "metric", "dq"),
    ("reward", "psi", "2.1"),
    ("reward", "mu", "0.32"),
    ("reward", "beta", "0.32"),
    ("reward", "eta0", "1"),
    ("reward", "alpha", "12"),
    ("reward", "grasp_bonus", "5"),
    ("reward", "target_bonus", "10"),
    ("reward", "target_tolerance", "0.05"),
    ("reward", "maneuver_translation_only", "false"),
    ("reward", "gamma", "0.99"),
    ("controller", "kind", "greedy"),
    ("controller", "policy_file", ""),
    ("controller", "probe_step", "0.001"),
    ("controller", "descent_gain", "0.9"),
    ("controller", "joint_close_rate", "0.05"),
    ("run", "seed", "0"),
    ("run", "episodes", "100"),
    ("sweep", "metrics", "dq,euler"),
    ("sweep", "objects", "prism,short_prism,cylinder,short_cylinder"),
    ("sweep", "perturbations", "off,on"),
    ("optimize", "iterations", "200"),
    ("optimize", "population", "32"),
    ("optimize", "noise_scale", "0.01"),
    ("optimize", "eval_episodes", "8"),
    ("optimize", "translation_only", "true"),
    ("optimize", "init_policy", ""),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{origin}: {message}")]
pub struct ConfigError {
    /// `file:line` or `override 'text'`.
    pub origin: String,
    pub message: String,
}

impl ConfigError {
    fn new(origin: impl Into<String>, message: impl Into<String>) -> Self {
        Self { origin: origin.into(), message: message.into() }
    }
}

/// Raw values for every schema key.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    values: Vec<String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self { values: SCHEMA.iter().map(|(_, _, d)| d.to_string()).collect() }
    }
}

fn index_of(section: &str, key: &str) -> Option<usize> {
    SCHEMA.iter().position(|(s, k, _)| *s == section && *k == key)
}

impl RawConfig {
    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        index_of(section, key).map(|i| self.values[i].as_str())
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), String> {
        if !SCHEMA.iter().any(|(s, _, _)| *s == section) {
            return Err(format!("unknown section [{section}]"));
        }
        let i = index_of(section, key).ok_or_else(|| format!("unknown key '{key}' in section [{section}]"))?;
        self.values[i] = value.trim().to_string();
        Ok(())
    }

    /// Applies a config file's contents; `name` labels error messages.
    pub fn apply_text(&mut self, name: &str, text: &str) -> Result<(), ConfigError> {
        let mut section: Option<String> = None;
        for (n, line) in text.lines().enumerate() {
            let origin = format!("{name}:{}", n + 1);
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::new(&origin, format!("malformed section header '{line}'")))?
                    .trim();
                if !SCHEMA.iter().any(|(s, _, _)| *s == name) {
                    return Err(ConfigError::new(&origin, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(&origin, format!("expected 'key = value', found '{line}'")))?;
            let sec = section
                .as_deref()
                .ok_or_else(|| ConfigError::new(&origin, format!("key '{}' appears before any [section]", key.trim())))?;
            self.set(sec, key.trim(), value).map_err(|m| ConfigError::new(&origin, m))?;
        }
        Ok(())
    }

    /// Applies `key=value` or `section.key=value`; a bare key must be unique across sections.
    pub fn apply_override(&mut self, text: &str) -> Result<(), ConfigError> {
        let origin = format!("override '{text}'");
        let (lhs, value) =
            text.split_once('=').ok_or_else(|| ConfigError::new(&origin, "expected key=value"))?;
        let lhs = lhs.trim();
        let (section, key) = match lhs.split_once('.') {
            Some((s, k)) => (s.to_string(), k.to_string()),
            None => {
                let owners: Vec<&str> = SCHEMA.iter().filter(|(_, k, _)| *k == lhs).map(|(s, _, _)| *s).collect();
                match owners.as_slice() {
                    [s] => (s.to_string(), lhs.to_string()),
                    [] => return Err(ConfigError::new(&origin, format!("unknown key '{lhs}'"))),
                    _ => {
                        return Err(ConfigError::new(
                            &origin,
                            format!("key '{lhs}' is ambiguous; qualify it as section.{lhs}"),
                        ))
                    }
                }
            }
        };
        self.set(&section, &key, value).map_err(|m| ConfigError::new(&origin, m))
    }

    /// Every effective value, grouped by section, in a form [`RawConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for ((section, key, _), value) in SCHEMA.iter().zip(&self.values) {
            if *section != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                writeln!(out, "[{section}]").expect("writing to a String cannot fail");
                current = section;
            }
            writeln!(out, "{key} = {value}").expect("writing to a String cannot fail");
        }
        out
    }

    fn parse<T: FromStr>(&self, section: &str, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(section, key).expect("schema key");
        raw.parse::<T>()
            .map_err(|e| ConfigError::new(format!("{section}.{key}"), format!("invalid value '{raw}': {e}")))
    }

    fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Vec<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(section, key).expect("schema key");
        let items = raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| ConfigError::new(format!("{section}.{key}"), format!("invalid item '{s}': {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if items.is_empty() {
            return Err(ConfigError::new(format!("{section}.{key}"), "list must not be empty"));
        }
        Ok(items)
    }

    fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        let raw = self.get(section, key).expect("schema key");
        (!raw.is_empty()).then(|| PathBuf::from(raw))
    }

    pub fn resolve(&self) -> Result<Settings, ConfigError> {
        let metric_kind: MetricKind = self.parse("reward", "metric")?;
        let weights = MetricWeights::new(
            self.parse("reward", "psi")?,
            self.parse("reward", "mu")?,
            self.parse("reward", "beta")?,
        )
        .map_err(|e| ConfigError::new("reward", e.to_string()))?;
        let metric = Metric::new(metric_kind, weights);
        let reward = RewardConfig {
            metric,
            eta0: self.parse("reward", "eta0")?,
            alpha: self.parse("reward", "alpha")?,
            grasp_bonus: self.parse("reward", "grasp_bonus")?,
            target_bonus: self.parse("reward", "target_bonus")?,
            target_tolerance: self.parse("reward", "target_tolerance")?,
            maneuver_translation_only: self.parse("reward", "maneuver_translation_only")?,
            gamma: self.parse("reward", "gamma")?,
        };
        let object: ObjectKind = self.parse("sim", "object")?;
        let perturbation: Switch = self.parse("sim", "perturbation")?;
        let sim = SimConfig {
            reset_cube_half_extent: self.parse("sim", "reset_cube_half_extent")?,
            reset_rot_roll_yaw: self.parse("sim", "reset_rot_roll_yaw")?,
            reset_rot_pitch: self.parse("sim", "reset_rot_pitch")?,
            max_steps: self.parse("sim", "max_steps")?,
            action_translation_limit: self.parse("sim", "action_translation_limit")?,
            action_rotation_limit: self.parse("sim", "action_rotation_limit")?,
            joint_limit: self.parse("sim", "joint_limit")?,
            joint_max: self.parse("sim", "joint_max")?,
            perturbation: if perturbation.0 {
                Perturbation::Moving {
                    linear_speed: self.parse("sim", "giver_linear_speed")?,
                    angular_speed: self.parse("sim", "giver_angular_speed")?,
                }
            } else {
                Perturbation::Off
            },
            control_dt: self.parse("sim", "control_dt")?,
            object: object.spec(),
            seed: self.parse("run", "seed")?,
            handover_point: Vector3::new(
                self.parse("sim", "handover_x")?,
                self.parse("sim", "handover_y")?,
                self.parse("sim", "handover_z")?,
            ),
            observation_noise: self.parse("sim", "observation_noise")?,
            fall_window: self.parse("sim", "fall_window")?,
            contact: ContactProxyConfig {
                epsilon: self.parse("sim", "contact_epsilon")?,
                joint_thresholds: [
                    self.parse("sim", "contact_threshold_proximal")?,
                    self.parse("sim", "contact_threshold_medial")?,
                    self.parse("sim", "contact_threshold_distal")?,
                ],
            },
            reward,
        };
        sim.validate().map_err(|e| ConfigError::new("sim", e.to_string()))?;

        let controller = ControllerConfig {
            metric,
            probe_step: self.parse("controller", "probe_step")?,
            descent_gain: self.parse("controller", "descent_gain")?,
            joint_close_rate: self.parse("controller", "joint_close_rate")?,
            action_translation_limit: sim.action_translation_limit,
            action_rotation_limit: sim.action_rotation_limit,
        };
        controller.validate().map_err(|e| ConfigError::new("controller", e.to_string()))?;
        let controller_kind: ControllerKind = self.parse("controller", "kind")?;
        let policy_file = self.path("controller", "policy_file");
        if controller_kind == ControllerKind::Policy && policy_file.is_none() {
            return Err(ConfigError::new("controller.policy_file", "required when controller.kind = policy"));
        }

        let episodes: usize = self.parse("run", "episodes")?;
        if episodes == 0 {
            return Err(ConfigError::new("run.episodes", "must be >= 1"));
        }

        let optimize = OptimizeSettings {
            iterations: self.parse("optimize", "iterations")?,
            population: self.parse("optimize", "population")?,
            noise_scale: self.parse("optimize", "noise_scale")?,
            eval_episodes: self.parse("optimize", "eval_episodes")?,
            translation_only: self.parse("optimize", "translation_only")?,
            init_policy: self.path("optimize", "init_policy"),
        };
        if optimize.population == 0 || optimize.eval_episodes == 0 {
            return Err(ConfigError::new("optimize", "population and eval_episodes must be >= 1"));
        }
        if !(optimize.noise_scale >= 0.0 && optimize.noise_scale.is_finite()) {
            return Err(ConfigError::new("optimize.noise_scale", "must be >= 0"));
        }

        Ok(Settings {
            sim,
            controller,
            controller_kind,
            policy_file,
            seed: sim.seed,
            episodes,
            object,
            giver_speeds: (self.parse("sim", "giver_linear_speed")?, self.parse("sim", "giver_angular_speed")?),
            sweep: SweepGrid {
                metrics: self.list("sweep", "metrics")?,
                objects: self.list("sweep", "objects")?,
                perturbations: self.list::<Switch>("sweep", "perturbations")?.into_iter().map(|s| s.0).collect(),
            },
            optimize,
        })
    }
}

/// `on`/`off` (also `true`/`false`).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Switch(bool);

impl FromStr for Switch {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on" | "true" => Ok(Switch(true)),
            "off" | "false" => Ok(Switch(false)),
            _ => Err(format!("expected on or off, got '{s}'")),
        }
    }
}

pub fn perturbation_label(on: bool) -> &'static str {
    if on {
        "on"
    } else {
        "off"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Greedy,
    Policy,
}

impl FromStr for ControllerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(ControllerKind::Greedy),
            "policy" => Ok(ControllerKind::Policy),
            _ => Err(format!("expected greedy or policy, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub metrics: Vec<MetricKind>,
    pub objects: Vec<ObjectKind>,
    pub perturbations: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSettings {
    pub iterations: usize,
    pub population: usize,
    pub noise_scale: f64,
    pub eval_episodes: usize,
    pub translation_only: bool,
    pub init_policy: Option<PathBuf>,
}

impl OptimizeSettings {
    pub fn search_config(&self, seeds: Vec<u64>, rng_seed: u64) -> SearchConfig {
        SearchConfig {
            iterations: self.iterations,
            population: self.population,
            noise_scale: self.noise_scale,
            seeds,
            rng_seed,
            mask: self.translation_only.then(SearchConfig::translation_mask),
        }
    }
}

/// Typed, validated view of a [`RawConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub sim: SimConfig,
    pub controller: ControllerConfig,
    pub controller_kind: ControllerKind,
    pub policy_file: Option<PathBuf>,
    pub seed: u64,
    pub episodes: usize,
    pub object: ObjectKind,
    /// Giver speeds used whenever perturbation is on, m/s and rad/s.
    pub giver_speeds: (f64, f64),
    pub sweep: SweepGrid,
    pub optimize: OptimizeSettings,
}
