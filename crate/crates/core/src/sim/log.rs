//! Per-step episode records and their CSV form.

use std::fmt;
use std::io::{self, Write};

use crate::metrics::DistanceBreakdown;
use crate::reward::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Pending,
    Success,
    Fail,
    Timeout,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Pending => "pending",
            Outcome::Success => "success",
            Outcome::Fail => "fail",
            Outcome::Timeout => "timeout",
        }
    }

    pub fn is_terminal(self) -> bool {
        self != Outcome::Pending
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based index of the step that produced this record.
    pub step: usize,
    pub phase: Phase,
    /// Distances of the active objective: palm to grasp frame before the
    /// grasp, object grasp frame to home afterwards.
    pub d_global: f64,
    pub d_trans: f64,
    pub d_rot: f64,
    pub reward: f64,
    pub m_t: i32,
    pub eta: f64,
    pub contact_mask: u16,
    pub grasped: bool,
    pub outcome: Outcome,
    pub d_tgt: f64,
    pub holding: bool,
    /// Steps spent released and unsupported.
    pub falling_steps: usize,
}

pub const CSV_HEADER: &str =
    "step,phase,d_global,d_trans,d_rot,reward,m_t,eta,contact_mask,grasped,outcome";

pub const TRACE_HEADER: &str = "step,d_global,d_trans,d_rot";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeLog {
    pub seed: u64,
    /// Objective distances at reset, before the first step.
    pub initial: Option<DistanceBreakdown>,
    pub steps: Vec<StepRecord>,
}

impl EpisodeLog {
    pub fn new(seed: u64) -> Self {
        Self { seed, initial: None, steps: Vec::new() }
    }

    pub fn outcome(&self) -> Outcome {
        self.steps.last().map_or(Outcome::Pending, |s| s.outcome)
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Step at which the grasp indicator first switched on.
    pub fn grasp_step(&self) -> Option<usize> {
        self.steps.iter().find(|s| s.grasped).map(|s| s.step)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for s in &self.steps {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                s.step,
                s.phase,
                s.d_global,
                s.d_trans,
                s.d_rot,
                s.reward,
                s.m_t,
                s.eta,
                s.contact_mask,
                u8::from(s.grasped),
                s.outcome
            )?;
        }
        Ok(())
    }

    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for s in &self.steps {
            writeln!(w, "{},{},{},{}", s.step, s.d_global, s.d_trans, s.d_rot)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }
}

/// Classifies a finished episode: success once the held object is within
/// `target_tolerance` of home, fail if the object was ever released without
/// support, timeout otherwise.
pub fn classify_outcome(log: &EpisodeLog, target_tolerance: f64) -> Outcome {
    if log.steps.iter().any(|s| s.holding && s.d_tgt < target_tolerance) {
        Outcome::Success
    } else if log.steps.iter().any(|s| s.falling_steps > 0) {
        Outcome::Fail
    } else if log.is_empty() {
        Outcome::Pending
    } else {
        Outcome::Timeout
    }
}
