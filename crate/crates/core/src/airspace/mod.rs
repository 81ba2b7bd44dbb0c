//! Shared domain types, horizontal geometry and safety-event predicates.
//!
//! Internal units are feet, seconds and feet per second. Advisory rate bands
//! are quoted in feet per minute and converted once in [`Advisory::band`].

mod advisory;
mod belief;
mod trace;

pub use advisory::{Advisory, RateBand, Sense};
pub use belief::BeliefState;
pub use trace::{AircraftTrack, EncounterTrace, EventFlags, KinematicState};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Vertical NMAC threshold, ft.
pub const NMAC_VERTICAL: f64 = 100.0;
/// Horizontal NMAC threshold, ft.
pub const NMAC_HORIZONTAL: f64 = 500.0;

/// State of the vertical MDP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerticalState {
    /// Intruder altitude minus ownship altitude, ft.
    pub h: f64,
    /// Ownship vertical rate, ft/s.
    pub hdot0: f64,
    /// Intruder vertical rate, ft/s.
    pub hdot1: f64,
    pub a_prev: Advisory,
    /// Time to loss of horizontal separation, whole seconds.
    pub tau: u32,
}

impl VerticalState {
    pub fn new(h: f64, hdot0: f64, hdot1: f64, a_prev: Advisory, tau: u32) -> Self {
        Self { h, hdot0, hdot1, a_prev, tau }
    }

    /// Negates altitudes and rates and swaps advisory senses.
    pub fn mirrored(&self) -> Self {
        Self { h: -self.h, hdot0: -self.hdot0, hdot1: -self.hdot1, a_prev: self.a_prev.mirrored(), tau: self.tau }
    }
}

/// Horizontal relative geometry in the ownship heading frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizontalGeometry {
    /// Horizontal range, ft.
    pub r: f64,
    /// Bearing of the intruder from the ownship heading, rad.
    pub theta: f64,
    /// Intruder heading relative to ownship heading, rad.
    pub psi: f64,
    /// Ownship ground speed, ft/s.
    pub v0: f64,
    /// Intruder ground speed, ft/s.
    pub v1: f64,
}

impl HorizontalGeometry {
    pub fn new(r: f64, theta: f64, psi: f64, v0: f64, v1: f64) -> Result<Self> {
        if !(r >= 0.0 && v0 >= 0.0 && v1 >= 0.0) {
            return Err(Error::Contract(format!("range and speeds must be non-negative (r={r}, v0={v0}, v1={v1})")));
        }
        if !(theta.is_finite() && psi.is_finite() && r.is_finite() && v0.is_finite() && v1.is_finite()) {
            return Err(Error::Contract("geometry must be finite".into()));
        }
        Ok(Self { r, theta: normalize_angle(theta), psi: normalize_angle(psi), v0, v1 })
    }

    /// Geometry of two aircraft from their kinematic states.
    pub fn from_states(own: &KinematicState, intr: &KinematicState) -> Self {
        let heading0 = heading_of(own.vx, own.vy);
        let heading1 = heading_of(intr.vx, intr.vy);
        let dx = intr.x - own.x;
        let dy = intr.y - own.y;
        let r = dx.hypot(dy);
        let theta = if r > 0.0 { dy.atan2(dx) - heading0 } else { 0.0 };
        Self {
            r,
            theta: normalize_angle(theta),
            psi: normalize_angle(heading1 - heading0),
            v0: own.vx.hypot(own.vy),
            v1: intr.vx.hypot(intr.vy),
        }
    }

    /// Intruder position relative to ownship, ownship heading frame.
    pub fn relative_position(&self) -> (f64, f64) {
        (self.r * self.theta.cos(), self.r * self.theta.sin())
    }

    /// Intruder velocity minus ownship velocity, ownship heading frame.
    pub fn relative_velocity(&self) -> (f64, f64) {
        (self.v1 * self.psi.cos() - self.v0, self.v1 * self.psi.sin())
    }
}

fn heading_of(vx: f64, vy: f64) -> f64 {
    if vx == 0.0 && vy == 0.0 {
        0.0
    } else {
        vy.atan2(vx)
    }
}

/// Wraps an angle into (-π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Time until the constant-velocity horizontal range first drops to
/// `separation_threshold`, or `None` if it never does.
pub fn horizontal_tau(g: &HorizontalGeometry, separation_threshold: f64) -> Result<Option<f64>> {
    if !(separation_threshold >= 0.0) {
        return Err(Error::Contract(format!("separation threshold must be non-negative, got {separation_threshold}")));
    }
    let (px, py) = g.relative_position();
    let (vx, vy) = g.relative_velocity();
    Ok(tau_from_relative(px, py, vx, vy, separation_threshold))
}

pub(crate) fn tau_from_relative(px: f64, py: f64, vx: f64, vy: f64, threshold: f64) -> Option<f64> {
    let range = px.hypot(py);
    if range <= threshold {
        return Some(0.0);
    }
    let speed2 = vx * vx + vy * vy;
    if speed2 == 0.0 {
        return None;
    }
    let closing = -(px * vx + py * vy);
    if closing <= 0.0 {
        return None;
    }
    let t_cpa = closing / speed2;
    let miss2 = {
        let mx = px + vx * t_cpa;
        let my = py + vy * t_cpa;
        mx * mx + my * my
    };
    // Rounding slack so that exactly collinear geometries reach a zero threshold.
    let slack = 1e-9 * range;
    let reach = threshold + slack;
    if miss2 > reach * reach {
        return None;
    }
    let inside = (threshold * threshold - miss2).max(0.0).sqrt();
    Some((t_cpa - inside / speed2.sqrt()).max(0.0))
}

/// Near mid-air collision: strictly less than 100 ft vertically and 500 ft
/// horizontally.
pub fn is_nmac(dz: f64, dxy: f64) -> Result<bool> {
    if !(dz >= 0.0 && dxy >= 0.0) {
        return Err(Error::Contract(format!("separations must be non-negative absolute values (dz={dz}, dxy={dxy})")));
    }
    Ok(dz < NMAC_VERTICAL && dxy < NMAC_HORIZONTAL)
}

/// Quantizes a continuous τ to whole seconds; `None` and anything beyond the
/// horizon map to `tau_max`.
pub fn quantize_tau(tau: Option<f64>, tau_max: u32) -> u32 {
    match tau {
        None => tau_max,
        Some(t) => {
            let q = t.round();
            if q >= tau_max as f64 {
                tau_max
            } else {
                q.max(0.0) as u32
            }
        }
    }
}

/// Assembles the vertical MDP state of the ownship against the intruder at
/// one step of a trace.
pub fn vertical_state_of(
    trace: &EncounterTrace,
    step: usize,
    a_prev: Advisory,
    separation_threshold: f64,
    tau_max: u32,
) -> Result<VerticalState> {
    let len = trace.len();
    if step >= len {
        return Err(Error::StepOutOfRange { step, len });
    }
    let own = &trace.ownship.states[step];
    let intr = &trace.intruder.states[step];
    let g = HorizontalGeometry::from_states(own, intr);
    let tau = horizontal_tau(&g, separation_threshold)?;
    Ok(VerticalState { h: intr.z - own.z, hdot0: own.vz, hdot1: intr.vz, a_prev, tau: quantize_tau(tau, tau_max) })
}
