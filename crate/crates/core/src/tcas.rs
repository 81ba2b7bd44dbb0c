//! Simplified TCAS baseline.
//!
//! Threats are detected by constant-velocity extrapolation. Resolution is a
//! two-step template search: pick the sense whose standard maneuver gives the
//! larger separation at closest approach, then the weakest advisory of that
//! sense that still achieves ALIM.

use serde::{Deserialize, Serialize};

use crate::airspace::{Advisory, KinematicState, Sense};
use crate::dynamics::{project_template, PilotModel};
use crate::{Error, Result};

/// Feet per nautical mile.
pub const FT_PER_NMI: f64 = 6076.115;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TcasConfig {
    /// Time-to-CPA gate for traffic alerts, s.
    pub ta_tau: f64,
    /// Time-to-CPA gate for resolution advisories, s.
    pub ra_tau: f64,
    /// Projected horizontal miss distance gate, ft.
    pub miss_distance_threshold: f64,
    /// Projected vertical separation gate at CPA, ft.
    pub vertical_threshold: f64,
    /// Minimum required vertical separation at CPA, ft.
    pub alim: f64,
    /// Response model assumed by the template projections.
    pub pilot: PilotModel,
    /// Sense chosen when both templates give equal separation.
    pub sense_tie: Sense,
    /// Consecutive differing selections needed to replace an issued RA.
    pub hysteresis_steps: u32,
}

impl Default for TcasConfig {
    fn default() -> Self {
        Self {
            ta_tau: 40.0,
            ra_tau: 25.0,
            miss_distance_threshold: 1.2 * FT_PER_NMI,
            vertical_threshold: 850.0,
            alim: 400.0,
            pilot: PilotModel::default(),
            sense_tie: Sense::Down,
            hysteresis_steps: 2,
        }
    }
}

impl TcasConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ra_tau > 0.0 && self.ta_tau >= self.ra_tau) {
            return Err(Error::Contract(format!(
                "need ta_tau >= ra_tau > 0 (ta_tau={}, ra_tau={})",
                self.ta_tau, self.ra_tau
            )));
        }
        if !(self.alim > 0.0) {
            return Err(Error::Contract(format!("alim must be positive, got {}", self.alim)));
        }
        if !(self.miss_distance_threshold > 0.0 && self.vertical_threshold > 0.0) {
            return Err(Error::Contract("miss distance thresholds must be positive".into()));
        }
        self.pilot.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThreatLevel {
    None,
    Ta,
    Ra,
}

/// Constant-velocity closest point of approach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cpa {
    /// Time to horizontal CPA, s.
    pub time: f64,
    /// Horizontal miss distance at CPA, ft.
    pub horizontal_miss: f64,
    /// Vertical separation at CPA, ft.
    pub vertical_miss: f64,
}

/// Horizontal CPA of converging aircraft; `None` when diverging or when the
/// relative horizontal velocity is zero.
pub fn closest_approach(own: &KinematicState, intr: &KinematicState) -> Option<Cpa> {
    let (px, py) = (intr.x - own.x, intr.y - own.y);
    let (vx, vy) = (intr.vx - own.vx, intr.vy - own.vy);
    let speed2 = vx * vx + vy * vy;
    let closing = -(px * vx + py * vy);
    if speed2 == 0.0 || closing <= 0.0 {
        return None;
    }
    let t = closing / speed2;
    let horizontal_miss = (px + vx * t).hypot(py + vy * t);
    let vertical_miss = ((intr.z - own.z) + (intr.vz - own.vz) * t).abs();
    Some(Cpa { time: t, horizontal_miss, vertical_miss })
}

/// Classifies the intruder as no threat, a TA, or an RA.
pub fn assess_threat(own: &KinematicState, intr: &KinematicState, cfg: &TcasConfig) -> ThreatLevel {
    let Some(cpa) = closest_approach(own, intr) else {
        return ThreatLevel::None;
    };
    if cpa.horizontal_miss >= cfg.miss_distance_threshold || cpa.vertical_miss >= cfg.vertical_threshold {
        return ThreatLevel::None;
    }
    if cpa.time < cfg.ra_tau {
        ThreatLevel::Ra
    } else if cpa.time < cfg.ta_tau {
        ThreatLevel::Ta
    } else {
        ThreatLevel::None
    }
}

fn projection_horizon(own: &KinematicState, intr: &KinematicState) -> f64 {
    closest_approach(own, intr).map_or(0.0, |c| c.time)
}

/// Projected separations at CPA of the standard climb and descend templates,
/// as `(up, down)`.
pub fn sense_separations(own: &KinematicState, intr: &KinematicState, cfg: &TcasConfig) -> (f64, f64) {
    let horizon = projection_horizon(own, intr);
    let project = |a| project_template((own.z, own.vz), (intr.z, intr.vz), a, &cfg.pilot, horizon);
    (project(Advisory::Cl1500), project(Advisory::Des1500))
}

/// Step 1: the sense whose standard maneuver yields the larger separation.
pub fn select_sense(own: &KinematicState, intr: &KinematicState, cfg: &TcasConfig) -> Sense {
    let (up, down) = sense_separations(own, intr, cfg);
    if up > down {
        Sense::Up
    } else if down > up {
        Sense::Down
    } else {
        cfg.sense_tie
    }
}

/// Step 2: the weakest advisory of `sense` that achieves ALIM at CPA.
pub fn select_strength(own: &KinematicState, intr: &KinematicState, sense: Sense, cfg: &TcasConfig) -> Advisory {
    let horizon = projection_horizon(own, intr);
    let candidates: Vec<(Advisory, f64)> = Advisory::of_sense(sense)
        .into_iter()
        .map(|a| (a, project_template((own.z, own.vz), (intr.z, intr.vz), a, &cfg.pilot, horizon)))
        .collect();
    choose_min_strength(&candidates, cfg.alim)
}

/// Weakest candidate (listed weakest first) whose projected separation is at
/// least `alim`; the strongest when none qualifies.
pub fn choose_min_strength(candidates: &[(Advisory, f64)], alim: f64) -> Advisory {
    candidates.iter().find(|(_, sep)| *sep >= alim).or(candidates.last()).map_or(Advisory::Coc, |(a, _)| *a)
}

/// One intruder's resolution as input to arbitration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreatResolution {
    pub advisory: Advisory,
    /// Time to CPA with this intruder, s.
    pub time_to_cpa: f64,
}

/// Combines per-intruder resolutions into one advisory.
///
/// COC entries are ignored. One RA is issued as is; same-sense RAs resolve
/// to the strongest; mixed senses resolve to the most urgent intruder's RA.
pub fn arbitrate_multithreat(per_intruder: &[ThreatResolution]) -> Result<Advisory> {
    if per_intruder.is_empty() {
        return Err(Error::Empty("multithreat arbitration needs at least one intruder"));
    }
    let ras: Vec<&ThreatResolution> = per_intruder.iter().filter(|r| !r.advisory.is_coc()).collect();
    let Some(first) = ras.first() else {
        return Ok(Advisory::Coc);
    };
    let sense = first.advisory.sense();
    if ras.iter().all(|r| r.advisory.sense() == sense) {
        return Ok(ras.iter().map(|r| r.advisory).max_by_key(|a| a.strength()).unwrap());
    }
    let urgent = ras.iter().min_by(|a, b| a.time_to_cpa.total_cmp(&b.time_to_cpa)).unwrap();
    Ok(urgent.advisory)
}

/// Output of one TCAS update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcasOutput {
    pub advisory: Advisory,
    /// Highest threat level over all intruders.
    pub threat: ThreatLevel,
}

/// Per-aircraft TCAS state: the issued RA plus hysteresis bookkeeping.
#[derive(Debug, Clone)]
pub struct TcasUnit {
    cfg: TcasConfig,
    issued: Advisory,
    pending: Option<(Advisory, u32)>,
}

impl TcasUnit {
    pub fn new(cfg: TcasConfig) -> Self {
        Self { cfg, issued: Advisory::Coc, pending: None }
    }

    pub fn issued(&self) -> Advisory {
        self.issued
    }

    /// Re-runs selection against every intruder. `forced_sense` restricts the
    /// sense (coordination); an issued RA changes only after the new selection
    /// has differed for `hysteresis_steps` consecutive updates.
    pub fn update(
        &mut self,
        own: &KinematicState,
        intruders: &[KinematicState],
        forced_sense: Option<Sense>,
    ) -> TcasOutput {
        let mut threat = ThreatLevel::None;
        let mut resolutions = Vec::with_capacity(intruders.len());
        for intr in intruders {
            let level = assess_threat(own, intr, &self.cfg);
            threat = threat.max(level);
            if level == ThreatLevel::Ra {
                let sense = forced_sense.unwrap_or_else(|| select_sense(own, intr, &self.cfg));
                resolutions.push(ThreatResolution {
                    advisory: select_strength(own, intr, sense, &self.cfg),
                    time_to_cpa: projection_horizon(own, intr),
                });
            }
        }
        let selected = if resolutions.is_empty() {
            Advisory::Coc
        } else {
            arbitrate_multithreat(&resolutions).expect("non-empty")
        };
        self.apply(selected);
        TcasOutput { advisory: self.issued, threat }
    }

    fn apply(&mut self, selected: Advisory) {
        if selected == self.issued {
            self.pending = None;
            return;
        }
        if self.issued.is_coc() {
            self.issued = selected;
            self.pending = None;
            return;
        }
        let count = match self.pending {
            Some((a, c)) if a == selected => c + 1,
            _ => 1,
        };
        if count >= self.cfg.hysteresis_steps.max(1) {
            self.issued = selected;
            self.pending = None;
        } else {
            self.pending = Some((selected, count));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ac(x: f64, z: f64, vx: f64, vz: f64) -> KinematicState {
        KinematicState { x, y: 0.0, z, vx, vy: 0.0, vz }
    }

    /// Head-on pair with CPA `t` seconds ahead at 200 ft/s closure each.
    fn head_on(t: f64, own_z: f64, own_vz: f64, intr_z: f64, intr_vz: f64) -> (KinematicState, KinematicState) {
        (ac(0.0, own_z, 200.0, own_vz), ac(400.0 * t, intr_z, -200.0, intr_vz))
    }

    fn mirror(s: &KinematicState) -> KinematicState {
        KinematicState { z: -s.z, vz: -s.vz, ..*s }
    }

    #[test]
    fn diverging_is_no_threat() {
        let own = ac(0.0, 0.0, 200.0, 0.0);
        let intr = ac(-3000.0, 0.0, -200.0, 0.0);
        assert_eq!(assess_threat(&own, &intr, &TcasConfig::default()), ThreatLevel::None);
    }

    #[test]
    fn head_on_inside_ra_gate() {
        let (own, intr) = head_on(20.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(assess_threat(&own, &intr, &TcasConfig::default()), ThreatLevel::Ra);
    }

    #[test]
    fn between_gates_is_ta() {
        let (own, intr) = head_on(30.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(assess_threat(&own, &intr, &TcasConfig::default()), ThreatLevel::Ta);
        let (own, intr) = head_on(45.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(assess_threat(&own, &intr, &TcasConfig::default()), ThreatLevel::None);
    }

    #[test]
    fn level_intruder_above_gives_down() {
        let (own, intr) = head_on(20.0, 0.0, 0.0, 300.0, 0.0);
        assert_eq!(select_sense(&own, &intr, &TcasConfig::default()), Sense::Down);
        let (own, intr) = head_on(20.0, 0.0, 0.0, -300.0, 0.0);
        assert_eq!(select_sense(&own, &intr, &TcasConfig::default()), Sense::Up);
    }

    #[test]
    fn min_strength_rule() {
        let seps = [(Advisory::Dnc, 300.0), (Advisory::Des1500, 450.0), (Advisory::Des2500, 700.0)];
        assert_eq!(choose_min_strength(&seps, 400.0), Advisory::Des1500);
        let all = [(Advisory::Dnd, 500.0), (Advisory::Cl1500, 600.0), (Advisory::Cl2500, 700.0)];
        assert_eq!(choose_min_strength(&all, 400.0), Advisory::Dnd);
        let none = [(Advisory::Dnc, 10.0), (Advisory::Des1500, 20.0), (Advisory::Des2500, 30.0)];
        assert_eq!(choose_min_strength(&none, 400.0), Advisory::Des2500);
    }

    #[test]
    fn arbitration_rules() {
        let r = |a, t| ThreatResolution { advisory: a, time_to_cpa: t };
        assert_eq!(arbitrate_multithreat(&[r(Advisory::Des1500, 20.0)]).unwrap(), Advisory::Des1500);
        assert_eq!(
            arbitrate_multithreat(&[r(Advisory::Des1500, 20.0), r(Advisory::Des2500, 25.0)]).unwrap(),
            Advisory::Des2500
        );
        assert_eq!(
            arbitrate_multithreat(&[r(Advisory::Cl1500, 30.0), r(Advisory::Des1500, 10.0)]).unwrap(),
            Advisory::Des1500
        );
        assert_eq!(arbitrate_multithreat(&[r(Advisory::Coc, 5.0)]).unwrap(), Advisory::Coc);
        assert!(arbitrate_multithreat(&[]).is_err());
    }

    #[test]
    fn hysteresis_needs_two_consecutive_changes() {
        let mut unit = TcasUnit::new(TcasConfig::default());
        unit.apply(Advisory::Des1500);
        assert_eq!(unit.issued(), Advisory::Des1500);
        unit.apply(Advisory::Des2500);
        assert_eq!(unit.issued(), Advisory::Des1500);
        unit.apply(Advisory::Des1500);
        unit.apply(Advisory::Des2500);
        assert_eq!(unit.issued(), Advisory::Des1500);
        unit.apply(Advisory::Des2500);
        assert_eq!(unit.issued(), Advisory::Des2500);
        unit.apply(Advisory::Coc);
        unit.apply(Advisory::Coc);
        assert_eq!(unit.issued(), Advisory::Coc);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = TcasConfig { ta_tau: 10.0, ra_tau: 25.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(TcasConfig::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn sense_equivariant_under_mirror(
            t in 1.0f64..24.0, own_z in -500.0f64..500.0, own_vz in -40.0f64..40.0,
            intr_z in -500.0f64..500.0, intr_vz in -40.0f64..40.0,
        ) {
            let cfg = TcasConfig::default();
            let (own, intr) = head_on(t, own_z, own_vz, intr_z, intr_vz);
            let (up, down) = sense_separations(&own, &intr, &cfg);
            prop_assume!(up != down);
            let s = select_sense(&own, &intr, &cfg);
            let sm = select_sense(&mirror(&own), &mirror(&intr), &cfg);
            prop_assert_eq!(sm, s.opposite());
        }

        #[test]
        fn strength_keeps_sense(
            t in 1.0f64..24.0, own_vz in -40.0f64..40.0, intr_z in -800.0f64..800.0, up in any::<bool>(),
        ) {
            let cfg = TcasConfig::default();
            let (own, intr) = head_on(t, 0.0, own_vz, intr_z, 0.0);
            let sense = if up { Sense::Up } else { Sense::Down };
            prop_assert_eq!(select_strength(&own, &intr, sense, &cfg).sense(), Some(sense));
        }

        #[test]
        fn threat_monotone_in_time_to_cpa(t1 in 0.5f64..60.0, dt in 0.0f64..30.0, dz in -900.0f64..900.0) {
            let cfg = TcasConfig::default();
            let (o1, i1) = head_on(t1 + dt, 0.0, 0.0, dz, 0.0);
            let (o2, i2) = head_on(t1, 0.0, 0.0, dz, 0.0);
            prop_assert!(assess_threat(&o2, &i2, &cfg) >= assess_threat(&o1, &i1, &cfg));
        }
    }
}
