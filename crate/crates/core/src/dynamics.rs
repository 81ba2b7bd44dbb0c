//! Point-mass vertical kinematics and pilot response models.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::airspace::{Advisory, RateBand};
use crate::{Error, Result, G_FT};

/// How a pilot responds to advisories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PilotModel {
    /// Per-step probability of beginning to comply.
    pub response_probability: f64,
    /// Vertical acceleration magnitude once complying, ft/s².
    pub acceleration: f64,
    /// Response delay assumed by deterministic projections, s.
    pub deterministic_delay: f64,
}

impl Default for PilotModel {
    fn default() -> Self {
        Self { response_probability: 1.0 / 6.0, acceleration: G_FT / 4.0, deterministic_delay: 5.0 }
    }
}

impl PilotModel {
    pub fn new(response_probability: f64, acceleration: f64, deterministic_delay: f64) -> Result<Self> {
        let m = Self { response_probability, acceleration, deterministic_delay };
        m.validate()?;
        Ok(m)
    }

    /// Pilot that always responds in the step the advisory is issued.
    pub fn immediate() -> Self {
        Self { response_probability: 1.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.response_probability > 0.0 && self.response_probability <= 1.0) {
            return Err(Error::Contract(format!(
                "response probability must be in (0, 1], got {}",
                self.response_probability
            )));
        }
        if !(self.acceleration > 0.0 && self.acceleration.is_finite()) {
            return Err(Error::Contract(format!("pilot acceleration must be positive, got {}", self.acceleration)));
        }
        if !(self.deterministic_delay >= 0.0 && self.deterministic_delay.is_finite()) {
            return Err(Error::Contract(format!(
                "deterministic delay must be non-negative, got {}",
                self.deterministic_delay
            )));
        }
        Ok(())
    }
}

/// Intruder vertical behavior: zero-mean Gaussian accelerations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntruderModel {
    /// Standard deviation of per-step vertical acceleration, ft/s².
    pub sigma_accel: f64,
}

impl Default for IntruderModel {
    fn default() -> Self {
        Self { sigma_accel: 3.0 }
    }
}

impl IntruderModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_accel >= 0.0 && self.sigma_accel.is_finite()) {
            return Err(Error::Contract(format!("sigma_accel must be non-negative, got {}", self.sigma_accel)));
        }
        Ok(())
    }
}

/// Advances one aircraft vertically by `dt`.
///
/// A complying pilot accelerates toward the nearest edge of the band and
/// stops exactly on it; otherwise the rate is held. Altitude integrates the
/// mean of the old and new rates.
pub fn step_vertical(
    z: f64,
    vz: f64,
    band: Option<RateBand>,
    complying: bool,
    pilot: &PilotModel,
    dt: f64,
) -> (f64, f64) {
    let vz_next = match band {
        Some(band) if complying => accelerate_toward(vz, band, pilot.acceleration * dt),
        _ => vz,
    };
    (z + 0.5 * (vz + vz_next) * dt, vz_next)
}

fn accelerate_toward(vz: f64, band: RateBand, dv: f64) -> f64 {
    if vz < band.lo {
        (vz + dv).min(band.lo)
    } else if vz > band.hi {
        (vz - dv).max(band.hi)
    } else {
        vz
    }
}

/// Steps until the pilot begins to comply: Geometric(p) on {0, 1, 2, ...}.
pub fn sample_response_delay<R: Rng + ?Sized>(pilot: &PilotModel, rng: &mut R) -> u32 {
    if pilot.response_probability >= 1.0 {
        return 0;
    }
    let geo = Geometric::new(pilot.response_probability).expect("validated response probability");
    geo.sample(rng).min(u32::MAX as u64) as u32
}

/// Vertical separation at `horizon` seconds when the ownship flies
/// `advisory` after the pilot model's deterministic delay and the intruder
/// holds its rate.
pub fn project_template(
    own: (f64, f64),
    intr: (f64, f64),
    advisory: Advisory,
    pilot: &PilotModel,
    horizon: f64,
) -> f64 {
    let horizon = horizon.max(0.0);
    let (mut z, mut vz) = own;
    let coast = pilot.deterministic_delay.min(horizon);
    z += vz * coast;
    let band = advisory.band();
    let mut remaining = horizon - coast;
    while remaining > 0.0 {
        let dt = remaining.min(1.0);
        (z, vz) = step_vertical(z, vz, band, true, pilot, dt);
        remaining -= dt;
    }
    let z_intr = intr.0 + intr.1 * horizon;
    (z_intr - z).abs()
}
