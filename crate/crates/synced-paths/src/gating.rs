//! Periodic binary gates that select the active path and enable the sync loops.
//!
//! A schedule is high for the first `active_fraction` of every period and low
//! for the rest. Intervals are half open, so a sample taken exactly at a
//! switch instant sees the post-switch value.

use crate::error::{Error, Result};

/// A periodic on/off schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateSchedule {
    /// Cycle length in seconds.
    pub period: f64,
    /// Fraction of each cycle spent high, in [0, 1].
    pub active_fraction: f64,
    /// Offset of the cycle start in seconds.
    pub phase: f64,
    /// A disabled gate is identically zero.
    pub enabled: bool,
}

impl GateSchedule {
    pub fn new(period: f64, active_fraction: f64, phase: f64, enabled: bool) -> Result<Self> {
        if !period.is_finite() || period <= 0.0 {
            return Err(Error::Config(format!(
                "gate period must be positive and finite, got {period}"
            )));
        }
        if !(0.0..=1.0).contains(&active_fraction) {
            return Err(Error::Config(format!(
                "gate active fraction must lie in [0, 1], got {active_fraction}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::Config(format!(
                "gate phase must be finite, got {phase}"
            )));
        }
        Ok(GateSchedule {
            period,
            active_fraction,
            phase,
            enabled,
        })
    }

    /// A copy of this schedule with the gate forced off.
    pub fn disabled(&self) -> GateSchedule {
        GateSchedule {
            enabled: false,
            ..*self
        }
    }

    /// Gate value at time t, either 0.0 or 1.0.
    pub fn value(&self, t: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let r = (t - self.phase).rem_euclid(self.period) / self.period;
        if r < self.active_fraction {
            1.0
        } else {
            0.0
        }
    }

    /// All switching instants strictly inside (t0, t1), in ascending order.
    ///
    /// A constant gate (disabled, or fraction 0 or 1) has none. The endpoints
    /// themselves are excluded so a window starting exactly on an edge does
    /// not report it.
    pub fn transitions_in(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if !self.enabled
            || self.active_fraction == 0.0
            || self.active_fraction == 1.0
            || !t0.is_finite()
            || !t1.is_finite()
            || t1 <= t0
        {
            return out;
        }
        let first_cycle = ((t0 - self.phase) / self.period).floor() as i64 - 1;
        let last_cycle = ((t1 - self.phase) / self.period).ceil() as i64 + 1;
        for k in first_cycle..=last_cycle {
            let rise = self.phase + k as f64 * self.period;
            let fall = rise + self.active_fraction * self.period;
            for edge in [rise, fall] {
                if edge > t0 && edge < t1 {
                    out.push(edge);
                }
            }
        }
        out
    }
}

/// The four gate values at one instant: the path selector pair (w, w_bar)
/// and the sync enable pair (u, u_bar).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateSet {
    pub w: f64,
    pub w_bar: f64,
    pub u: f64,
    pub u_bar: f64,
}

/// Samples both schedules. The selector complement is always 1 - w, while a
/// disabled sync gate zeroes both u and u_bar so no path receives a sync
/// drive.
pub fn gates_at(w_gate: &GateSchedule, u_gate: &GateSchedule, t: f64) -> GateSet {
    let w = w_gate.value(t);
    let (u, u_bar) = if u_gate.enabled {
        let u = u_gate.value(t);
        (u, 1.0 - u)
    } else {
        (0.0, 0.0)
    };
    GateSet {
        w,
        w_bar: 1.0 - w,
        u,
        u_bar,
    }
}
