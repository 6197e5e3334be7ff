//! Linear observation-to-action policy and its plain-text checkpoint format.
//!
//! ```text
//! linear_policy 9 15
//! w00 w01 ... w0,14 b0
//! ...
//! w80 w81 ... w8,14 b8
//! ```
//!
//! The header gives rows (action dimensions) and columns (observation
//! dimensions); each following line holds one weight row and, last, its bias.
//! Values are written in shortest round-trip form, so a checkpoint reloads bit
//! for bit.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::Controller;
use crate::sim::{Action, Observation, SimError, SimState, ACTION_DIM, OBS_DIM};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("policy has shape {rows}x{cols}, expected {ACTION_DIM}x{OBS_DIM}")]
    Shape { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPolicy {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Default for LinearPolicy {
    fn default() -> Self {
        Self::zeros()
    }
}

impl LinearPolicy {
    pub fn zeros() -> Self {
        Self { weights: DMatrix::zeros(ACTION_DIM, OBS_DIM), bias: DVector::zeros(ACTION_DIM) }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }

    /// Number of trainable parameters: weights row-major, then bias.
    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for r in 0..self.weights.nrows() {
            p.extend(self.weights.row(r).iter());
        }
        p.extend(self.bias.iter());
        p
    }

    pub fn from_params(rows: usize, cols: usize, p: &[f64]) -> Self {
        assert_eq!(p.len(), rows * cols + rows, "parameter vector length");
        Self {
            weights: DMatrix::from_row_slice(rows, cols, &p[..rows * cols]),
            bias: DVector::from_column_slice(&p[rows * cols..]),
        }
    }

    /// Raw output; the simulator clamps it to the action limits.
    pub fn action(&self, obs: &Observation) -> Action {
        let x = DVector::from_column_slice(&obs.to_array());
        let y = &self.weights * x + &self.bias;
        let mut a = [0.0; ACTION_DIM];
        a.copy_from_slice(y.as_slice());
        Action::from_array(&a)
    }

    pub fn to_text(&self) -> String {
        let (rows, cols) = self.weights.shape();
        let mut out = format!("linear_policy {rows} {cols}\n");
        for r in 0..rows {
            let mut fields: Vec<String> = self.weights.row(r).iter().map(|v| format!("{v}")).collect();
            fields.push(format!("{}", self.bias[r]));
            writeln!(out, "{}", fields.join(" ")).expect("writing to a String cannot fail");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, PolicyParseError> {
        let malformed = |line: usize, message: String| PolicyParseError::Malformed { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or_else(|| malformed(1, "empty policy file".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (rows, cols) = match parts.as_slice() {
            ["linear_policy", r, c] => (
                r.parse::<usize>().map_err(|e| malformed(hline, format!("bad row count: {e}")))?,
                c.parse::<usize>().map_err(|e| malformed(hline, format!("bad column count: {e}")))?,
            ),
            _ => return Err(malformed(hline, "expected 'linear_policy <rows> <cols>'".into())),
        };
        if (rows, cols) != (ACTION_DIM, OBS_DIM) {
            return Err(PolicyParseError::Shape { rows, cols });
        }

        let mut weights = Vec::with_capacity(rows * cols);
        let mut bias = Vec::with_capacity(rows);
        for r in 0..rows {
            let (n, line) = lines.next().ok_or_else(|| malformed(hline + r + 1, format!("missing row {r}")))?;
            let values = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| malformed(n, format!("'{t}': {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != cols + 1 {
                return Err(malformed(n, format!("expected {} values, found {}", cols + 1, values.len())));
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(malformed(n, format!("non-finite value {v}")));
            }
            weights.extend_from_slice(&values[..cols]);
            bias.push(values[cols]);
        }
        if let Some((n, _)) = lines.next() {
            return Err(malformed(n, "trailing content after the last row".into()));
        }
        Ok(Self {
            weights: DMatrix::from_row_slice(rows, cols, &weights),
            bias: DVector::from_vec(bias),
        })
    }
}

impl Controller for LinearPolicy {
    fn act(&self, s: &SimState, obs: &Observation) -> Result<Action, SimError> {
        if s.is_terminal() {
            return Err(SimError::Terminal(s.outcome));
        }
        Ok(self.action(obs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LinearPolicy {
        let p: Vec<f64> = (0..ACTION_DIM * OBS_DIM + ACTION_DIM).map(|i| (i as f64 * 0.37).sin() / 3.0).collect();
        LinearPolicy::from_params(ACTION_DIM, OBS_DIM, &p)
    }

    #[test]
    fn text_round_trip_is_exact() {
        let p = sample();
        assert_eq!(LinearPolicy::parse(&p.to_text()).unwrap(), p);
        assert_eq!(LinearPolicy::parse(&LinearPolicy::zeros().to_text()).unwrap(), LinearPolicy::zeros());
    }

    #[test]
    fn params_round_trip() {
        let p = sample();
        assert_eq!(LinearPolicy::from_params(ACTION_DIM, OBS_DIM, &p.params()), p);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let mut lines: Vec<String> = sample().to_text().lines().map(String::from).collect();
        lines[1] = lines[1].replacen(' ', " x", 1);
        let text = lines.join("\n");
        assert!(matches!(LinearPolicy::parse(&text), Err(PolicyParseError::Malformed { line: 2, .. })));
        assert!(matches!(
            LinearPolicy::parse("linear_policy 2 2\n1 2 3\n4 5 6\n"),
            Err(PolicyParseError::Shape { rows: 2, cols: 2 })
        ));
        assert!(LinearPolicy::parse("").is_err());
    }

    #[test]
    fn action_is_affine() {
        let mut p = LinearPolicy::zeros();
        p.weights[(0, 6)] = 2.0;
        p.bias[1] = -0.5;
        let obs = Observation {
            receiver_translation: Default::default(),
            receiver_euler: Default::default(),
            object_translation: nalgebra::Vector3::new(0.25, 0.0, 0.0),
            object_euler: Default::default(),
            hand_joints: [0.0; 3],
        };
        let a = p.action(&obs).to_array();
        assert_eq!(a[0], 0.5);
        assert_eq!(a[1], -0.5);
    }
}
