//! Trajectory certainty scoring.
//!
//! Each time a trajectory is associated with a detection of score `s` at
//! frame `t`, its certainty grows by
//!
//! ```text
//! s·e^(−d) − d/s,    d = t − (k + 1)
//! ```
//!
//! where `k` is the frame of the previous association. Consecutive
//! observations (`d = 0`) add the full score; gaps decay the reward and add a
//! penalty that weighs more for weak detections. A trajectory is confirmed
//! once its certainty reaches `alpha_legit` and stays confirmed; scoring
//! stops at that point.
//!
//! Scores are floored at `s_min` so that the penalty keeps its sign for
//! detectors that emit zero or negative scores. The running total uses
//! compensated summation so that e.g. fifty observations of 0.4 reach 20.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ValidityError {
    #[error("observation at frame {frame} does not follow last observation at frame {last}")]
    OutOfOrder { frame: u32, last: u32 },
    #[error("alpha_legit and s_min must be positive (alpha_legit={alpha_legit}, s_min={s_min})")]
    InvalidConfig { alpha_legit: f64, s_min: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidityConfig {
    pub alpha_legit: f64,
    pub s_min: f64,
    /// When false every trajectory is confirmed at birth (ablation).
    pub enabled: bool,
}

impl Default for ValidityConfig {
    fn default() -> Self {
        ValidityConfig {
            alpha_legit: 20.0,
            s_min: 0.01,
            enabled: true,
        }
    }
}

impl ValidityConfig {
    pub fn validate(&self) -> Result<(), ValidityError> {
        if !(self.alpha_legit > 0.0 && self.s_min > 0.0) {
            return Err(ValidityError::InvalidConfig {
                alpha_legit: self.alpha_legit,
                s_min: self.s_min,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertaintyState {
    sum: f64,
    compensation: f64,
    last_obs_frame: u32,
    confirmed: bool,
}

impl CertaintyState {
    pub fn score(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn last_obs_frame(&self) -> u32 {
        self.last_obs_frame
    }

    pub fn is_confirmed(&self) -> bool {
        self.confirmed
    }

    /// Confirmed state used when scoring is disabled.
    pub fn confirmed_at(frame: u32) -> Self {
        CertaintyState {
            sum: 0.0,
            compensation: 0.0,
            last_obs_frame: frame,
            confirmed: true,
        }
    }

    // Neumaier summation.
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }
}

/// Increment contributed by one observation with effective score `s` after
/// an absence of `d` frames.
pub fn certainty_increment(s: f64, d: f64) -> f64 {
    s * (-d).exp() - d / s
}

fn effective_score(s: f64, cfg: &ValidityConfig) -> f64 {
    if s.is_nan() {
        cfg.s_min
    } else {
        s.max(cfg.s_min)
    }
}

pub fn init_certainty(s: f64, t: u32, cfg: &ValidityConfig) -> CertaintyState {
    let mut state = CertaintyState {
        sum: 0.0,
        compensation: 0.0,
        last_obs_frame: t,
        confirmed: false,
    };
    state.add(effective_score(s, cfg));
    state.confirmed = state.score() >= cfg.alpha_legit;
    state
}

/// Folds in an observation at frame `t`. Once confirmed, the score is frozen
/// and only the observation frame advances.
pub fn update_certainty(
    state: &CertaintyState,
    s: f64,
    t: u32,
    cfg: &ValidityConfig,
) -> Result<CertaintyState, ValidityError> {
    if t <= state.last_obs_frame {
        return Err(ValidityError::OutOfOrder {
            frame: t,
            last: state.last_obs_frame,
        });
    }
    let mut next = *state;
    next.last_obs_frame = t;
    if state.confirmed {
        return Ok(next);
    }
    let d = f64::from(t - state.last_obs_frame - 1);
    next.add(certainty_increment(effective_score(s, cfg), d));
    next.confirmed = next.score() >= cfg.alpha_legit;
    Ok(next)
}
