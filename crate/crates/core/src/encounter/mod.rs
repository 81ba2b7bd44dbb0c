//! Bayesian-network encounter models.
//!
//! A model pairs an initial-state network with a transition network.
//! Transition nodes named after an initial variable are evidence (the
//! current value); nodes named `d<var>` sample the per-step change of
//! `<var>`. Sampled encounters record every bin draw so their likelihood can
//! be re-evaluated under another model with the same bins.
//!
//! Correlated models sample the pair jointly from the variables `altitude`,
//! `vr0`, `vr1`, `closure`, `tau0`, `vmd` and `hmd`. Uncorrelated models
//! sample each aircraft from `altitude`, `vr` and `speed`, then place the
//! intruder so the two trajectories conflict.

mod bayesnet;
pub mod defaults;

pub use bayesnet::{DiscreteBayesNet, Draw, Node};

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::airspace::{Advisory, AircraftTrack, EncounterTrace, EventFlags, KinematicState};
use crate::{Error, Result};

const CORRELATED_VARS: [&str; 7] = ["altitude", "vr0", "vr1", "closure", "tau0", "vmd", "hmd"];
const UNCORRELATED_VARS: [&str; 3] = ["altitude", "vr", "speed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncounterMode {
    Correlated,
    Uncorrelated,
}

/// How independently sampled trajectories are combined into a conflict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Placement {
    /// Window for the time of minimum range, as fractions of the duration.
    pub earliest: f64,
    pub latest: f64,
    /// Horizontal miss distance is uniform in `[0, max_miss]`, ft.
    pub max_miss: f64,
    /// Vertical offset at minimum range is uniform in `±max_vertical_offset`, ft.
    pub max_vertical_offset: f64,
    pub retries: usize,
}

impl Default for Placement {
    fn default() -> Self {
        Self { earliest: 0.4, latest: 0.8, max_miss: 500.0, max_vertical_offset: 500.0, retries: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncounterModel {
    pub mode: EncounterMode,
    pub initial_net: DiscreteBayesNet,
    pub transition_net: DiscreteBayesNet,
    /// Encounter length, s.
    pub duration: f64,
    /// Time step, s.
    pub dt: f64,
    /// Ownship ground speed in correlated encounters, ft/s.
    #[serde(default = "default_ownship_speed")]
    pub ownship_speed: f64,
    #[serde(default)]
    pub placement: Placement,
}

fn default_ownship_speed() -> f64 {
    200.0
}

/// Nominal commands of one aircraft. Entry `k` of each series is the value
/// reached at the end of step `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPlan {
    pub initial: KinematicState,
    /// ft/s
    pub vertical_rate: Vec<f64>,
    /// rad/s
    pub turn_rate: Vec<f64>,
    /// ft/s
    pub speed: Vec<f64>,
}

/// Bin draws of one network chain (initial sample plus transitions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDraws {
    pub initial: Vec<usize>,
    pub transitions: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledEncounter {
    pub dt: f64,
    pub ownship: TrajectoryPlan,
    pub intruder: TrajectoryPlan,
    /// One chain for correlated encounters, two (ownship, intruder) for
    /// uncorrelated ones.
    pub chains: Vec<ChainDraws>,
    pub log_probability: f64,
}

/// Advances horizontal position and velocity by one step. Without turning,
/// the velocity direction is kept exactly.
pub fn step_horizontal(s: &KinematicState, turn_rate: f64, speed: f64, dt: f64) -> (f64, f64, f64, f64) {
    let cur = s.vx.hypot(s.vy);
    let (vx, vy) = if turn_rate == 0.0 && cur > 0.0 {
        (s.vx * (speed / cur), s.vy * (speed / cur))
    } else {
        let psi = s.vy.atan2(s.vx) + turn_rate * dt;
        (speed * psi.cos(), speed * psi.sin())
    };
    (s.x + 0.5 * (s.vx + vx) * dt, s.y + 0.5 * (s.vy + vy) * dt, vx, vy)
}

/// One step of nominal flight: commanded rate, turn rate and speed at the
/// end of the step; altitude and position integrate the step mean.
pub fn step_nominal(s: &KinematicState, vz_next: f64, turn_rate: f64, speed: f64, dt: f64) -> KinematicState {
    let (x, y, vx, vy) = step_horizontal(s, turn_rate, speed, dt);
    KinematicState { x, y, z: s.z + 0.5 * (s.vz + vz_next) * dt, vx, vy, vz: vz_next }
}

/// Initial values, per-step values, bin draws and log probability of one
/// chain.
type ChainRun = (Vec<f64>, Vec<Vec<f64>>, ChainDraws, f64);

impl TrajectoryPlan {
    pub fn steps(&self) -> usize {
        self.vertical_rate.len()
    }

    /// States at steps `0..=n` under the nominal commands.
    pub fn nominal_states(&self, dt: f64) -> Vec<KinematicState> {
        let mut out = Vec::with_capacity(self.steps() + 1);
        let mut s = self.initial;
        out.push(s);
        for k in 0..self.steps() {
            s = step_nominal(&s, self.vertical_rate[k], self.turn_rate[k], self.speed[k], dt);
            out.push(s);
        }
        out
    }
}

impl SampledEncounter {
    /// Unequipped trace: nominal kinematics, no advisories, no events.
    pub fn nominal_trace(&self) -> Result<EncounterTrace> {
        let own = self.ownship.nominal_states(self.dt);
        let intr = self.intruder.nominal_states(self.dt);
        let n = own.len();
        EncounterTrace::new(
            AircraftTrack::new(self.dt, own)?,
            AircraftTrack::new(self.dt, intr)?,
            vec![[Advisory::Coc; 2]; n],
            vec![EventFlags::empty(); n],
        )
    }
}

impl EncounterModel {
    /// Checks timing and that the networks carry the variables the mode needs.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite() && self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Contract("duration and dt must be positive".into()));
        }
        let ratio = self.duration / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Contract(format!("duration {} is not a multiple of dt {}", self.duration, self.dt)));
        }
        let required: &[&str] = match self.mode {
            EncounterMode::Correlated => &CORRELATED_VARS,
            EncounterMode::Uncorrelated => &UNCORRELATED_VARS,
        };
        if let Some(v) = required.iter().find(|v| self.initial_net.index_of(v).is_none()) {
            return Err(Error::InvalidNetwork(format!("initial network lacks variable `{v}`")));
        }
        for n in self.transition_net.nodes() {
            if self.initial_net.index_of(&n.name).is_some() {
                continue;
            }
            let target = n.name.strip_prefix('d').and_then(|v| self.initial_net.index_of(v));
            if target.is_none() {
                return Err(Error::InvalidNetwork(format!(
                    "transition node `{}` is neither an initial variable nor a `d<var>` change",
                    n.name
                )));
            }
        }
        if !(self.ownship_speed >= 0.0 && self.ownship_speed.is_finite()) {
            return Err(Error::Contract("ownship speed must be finite and >= 0".into()));
        }
        let p = &self.placement;
        if !(0.0 <= p.earliest && p.earliest <= p.latest && p.latest <= 1.0 && p.max_miss >= 0.0 && p.retries > 0) {
            return Err(Error::Contract("invalid placement parameters".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn is_fitted(&self) -> bool {
        self.initial_net.is_fitted() && self.transition_net.is_fitted()
    }

    /// Same structure and bins as `self`, so likelihood ratios are exact.
    pub fn same_bins(&self, other: &EncounterModel) -> bool {
        self.mode == other.mode
            && self.initial_net.structure() == other.initial_net.structure()
            && self.transition_net.structure() == other.transition_net.structure()
    }

    fn transition_evidence(&self) -> Vec<bool> {
        self.transition_net.nodes().iter().map(|n| self.initial_net.index_of(&n.name).is_some()).collect()
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw> {
        self.initial_net.sample(&vec![None; self.initial_net.len()], rng)
    }

    /// Next values of the initial variables (same layout as `current`) and
    /// the transition draw that produced them. Updated variables are clamped
    /// to their edge range.
    pub fn sample_transition<R: Rng + ?Sized>(&self, current: &[f64], rng: &mut R) -> Result<(Vec<f64>, Draw)> {
        if current.len() != self.initial_net.len() {
            return Err(Error::DataMismatch(format!(
                "current assignment has {} values, model has {} variables",
                current.len(),
                self.initial_net.len()
            )));
        }
        let evidence: Vec<Option<f64>> = self
            .transition_net
            .nodes()
            .iter()
            .map(|n| self.initial_net.index_of(&n.name).map(|i| current[i]))
            .collect();
        let draw = self.transition_net.sample(&evidence, rng)?;
        let mut next = current.to_vec();
        for (i, n) in self.transition_net.nodes().iter().enumerate() {
            if evidence[i].is_some() {
                continue;
            }
            if let Some(v) = n.name.strip_prefix('d').and_then(|v| self.initial_net.index_of(v)) {
                next[v] = self.initial_net.nodes()[v].clamp(current[v] + draw.values[i]);
            }
        }
        Ok((next, draw))
    }

    fn run_chain<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChainRun> {
        let init = self.sample_initial(rng)?;
        let mut lp = init.log_prob;
        let mut current = init.values.clone();
        let mut series = Vec::with_capacity(self.steps());
        let mut transitions = Vec::with_capacity(self.steps());
        for _ in 0..self.steps() {
            let (next, draw) = self.sample_transition(&current, rng)?;
            lp += draw.log_prob;
            transitions.push(draw.bins);
            series.push(next.clone());
            current = next;
        }
        Ok((init.values, series, ChainDraws { initial: init.bins, transitions }, lp))
    }

    fn var(&self, name: &str) -> usize {
        self.initial_net.index_of(name).expect("validated variable")
    }

    /// Samples one encounter. Ownship draws always precede intruder draws.
    pub fn build_encounter<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampledEncounter> {
        self.validate()?;
        match self.mode {
            EncounterMode::Correlated => self.build_correlated(rng),
            EncounterMode::Uncorrelated => self.build_uncorrelated(rng),
        }
    }

    fn build_correlated<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampledEncounter> {
        let (init, series, chain, lp) = self.run_chain(rng)?;
        let n = self.steps();
        let v = |name: &str| init[self.var(name)];
        let (alt, vr0, vr1) = (v("altitude"), v("vr0"), v("vr1"));
        let closure = v("closure");
        // The closest approach is placed on a step boundary.
        let t_cpa = (v("tau0") / self.dt).round() * self.dt;
        let own = KinematicState { x: 0.0, y: 0.0, z: alt, vx: self.ownship_speed, vy: 0.0, vz: vr0 };
        let intr = KinematicState {
            x: closure * t_cpa,
            y: v("hmd"),
            z: alt + v("vmd") - (vr1 - vr0) * t_cpa,
            vx: self.ownship_speed - closure,
            vy: 0.0,
            vz: vr1,
        };
        let (i0, i1) = (self.var("vr0"), self.var("vr1"));
        let plan = |s: KinematicState, idx: usize| TrajectoryPlan {
            initial: s,
            vertical_rate: series.iter().map(|x| x[idx]).collect(),
            turn_rate: vec![0.0; n],
            speed: vec![s.vx.hypot(s.vy); n],
        };
        Ok(SampledEncounter {
            dt: self.dt,
            ownship: plan(own, i0),
            intruder: plan(intr, i1),
            chains: vec![chain],
            log_probability: lp,
        })
    }

    fn build_uncorrelated<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampledEncounter> {
        let n = self.steps();
        let (ia, iv, is) = (self.var("altitude"), self.var("vr"), self.var("speed"));
        let (own_init, own_series, own_chain, lp0) = self.run_chain(rng)?;
        let (int_init, int_series, int_chain, lp1) = self.run_chain(rng)?;
        let rates = |s: &[Vec<f64>]| s.iter().map(|x| x[iv]).collect::<Vec<_>>();
        let speeds = |s: &[Vec<f64>]| s.iter().map(|x| x[is]).collect::<Vec<_>>();
        let own = TrajectoryPlan {
            initial: KinematicState { z: own_init[ia], vx: own_init[is], vz: own_init[iv], ..Default::default() },
            vertical_rate: rates(&own_series),
            turn_rate: vec![0.0; n],
            speed: speeds(&own_series),
        };
        let own_states = own.nominal_states(self.dt);
        let p = self.placement;
        let k_lo = (p.earliest * n as f64).ceil() as usize;
        let k_hi = ((p.latest * n as f64).floor() as usize).clamp(k_lo, n);
        for _ in 0..p.retries {
            let psi = rng.random_range(0.0..2.0 * PI);
            let k_star = rng.random_range(k_lo..=k_hi);
            let miss = p.max_miss * rng.random::<f64>();
            let dz = p.max_vertical_offset * (2.0 * rng.random::<f64>() - 1.0);
            let speed0 = int_init[is];
            let mut plan = TrajectoryPlan {
                initial: KinematicState {
                    vx: speed0 * psi.cos(),
                    vy: speed0 * psi.sin(),
                    vz: int_init[iv],
                    ..Default::default()
                },
                vertical_rate: rates(&int_series),
                turn_rate: vec![0.0; n],
                speed: speeds(&int_series),
            };
            // Relative track of the unplaced intruder against the ownship.
            let unplaced = plan.nominal_states(self.dt);
            let rel = |k: usize| (unplaced[k].x - own_states[k].x, unplaced[k].y - own_states[k].y);
            let (vx, vy) = {
                let a = rel(k_star.saturating_sub(1));
                let b = rel((k_star + 1).min(n));
                (b.0 - a.0, b.1 - a.1)
            };
            let vnorm = vx.hypot(vy);
            if vnorm < 1e-6 {
                continue;
            }
            let (nx, ny) = (-vy / vnorm, vx / vnorm);
            // Shift so that at k* the intruder sits `miss` off the ownship,
            // perpendicular to the relative track.
            plan.initial.x = own_states[k_star].x + miss * nx - unplaced[k_star].x;
            plan.initial.y = own_states[k_star].y + miss * ny - unplaced[k_star].y;
            plan.initial.z = own_states[k_star].z + dz - (unplaced[k_star].z - unplaced[0].z);
            let placed = plan.nominal_states(self.dt);
            let range0 = own_states[0].horizontal_distance(&placed[0]);
            let min_range =
                (0..=n).map(|k| own_states[k].horizontal_distance(&placed[k])).fold(f64::INFINITY, f64::min);
            if range0 <= p.max_miss.max(crate::airspace::NMAC_HORIZONTAL) || min_range > p.max_miss + 1e-6 {
                continue;
            }
            return Ok(SampledEncounter {
                dt: self.dt,
                ownship: own,
                intruder: plan,
                chains: vec![own_chain, int_chain],
                log_probability: lp0 + lp1,
            });
        }
        Err(Error::PlacementFailed(p.retries))
    }

    /// Bin-level log likelihood of the encounter's draws. Returns −∞ when a
    /// draw has zero probability under this model.
    pub fn trace_log_likelihood(&self, enc: &SampledEncounter) -> Result<f64> {
        let chains = match self.mode {
            EncounterMode::Correlated => 1,
            EncounterMode::Uncorrelated => 2,
        };
        if enc.chains.len() != chains {
            return Err(Error::DataMismatch(format!(
                "encounter has {} chains, model expects {chains}",
                enc.chains.len()
            )));
        }
        let init_evidence = vec![false; self.initial_net.len()];
        let trans_evidence = self.transition_evidence();
        let mut lp = 0.0;
        for c in &enc.chains {
            if c.transitions.len() != self.steps() {
                return Err(Error::DataMismatch(format!(
                    "encounter has {} transitions, model expects {}",
                    c.transitions.len(),
                    self.steps()
                )));
            }
            lp += self.initial_net.log_prob(&c.initial, &init_evidence)?;
            for t in &c.transitions {
                lp += self.transition_net.log_prob(t, &trans_evidence)?;
            }
        }
        Ok(lp)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::defaults;
    use super::*;
    use crate::airspace::{horizontal_tau, HorizontalGeometry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn series_length_matches_duration() {
        let m = defaults::correlated();
        let e = m.build_encounter(&mut rng(1)).unwrap();
        assert_eq!(e.ownship.steps(), 60);
        assert_eq!(e.intruder.steps(), 60);
        assert_eq!(e.chains[0].transitions.len(), 60);
    }

    #[test]
    fn log_probability_matches_likelihood() {
        for m in [defaults::correlated(), defaults::conflict_forced(), defaults::uncorrelated(), defaults::toy()] {
            for seed in 0..20 {
                let e = m.build_encounter(&mut rng(seed)).unwrap();
                let ll = m.trace_log_likelihood(&e).unwrap();
                assert!((ll - e.log_probability).abs() < 1e-9, "{ll} vs {}", e.log_probability);
                assert!(ll.exp() > 0.0 && ll.exp() <= 1.0);
            }
        }
    }

    #[test]
    fn degenerate_model_is_deterministic() {
        let m = defaults::degenerate();
        let a = m.build_encounter(&mut rng(1)).unwrap();
        let b = m.build_encounter(&mut rng(2)).unwrap();
        assert_eq!(a.chains, b.chains);
        assert_eq!(a.log_probability, 0.0);
        assert_eq!(m.trace_log_likelihood(&a).unwrap(), 0.0);
    }

    #[test]
    fn zero_probability_bin_is_negative_infinity() {
        let m = defaults::degenerate();
        let mut e = m.build_encounter(&mut rng(3)).unwrap();
        let hmd = m.initial_net.index_of("hmd").unwrap();
        e.chains[0].initial[hmd] = 1 - e.chains[0].initial[hmd];
        assert_eq!(m.trace_log_likelihood(&e).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn identity_transition_keeps_state() {
        let m = defaults::degenerate();
        let init = m.sample_initial(&mut rng(4)).unwrap();
        let (next, _) = m.sample_transition(&init.values, &mut rng(5)).unwrap();
        for (a, b) in init.values.iter().zip(&next) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_mean_rate_change_has_no_drift() {
        let m = defaults::symmetric_random_walk();
        let mut r = rng(6);
        let iv = m.initial_net.index_of("vr0").unwrap();
        let mut start = m.sample_initial(&mut r).unwrap().values;
        start[iv] = 0.0;
        let steps = 10_000;
        let total: f64 = (0..steps).map(|_| m.sample_transition(&start, &mut r).unwrap().0[iv] - start[iv]).sum();
        assert!((total / steps as f64).abs() < 0.05, "mean change {}", total / steps as f64);
    }

    #[test]
    fn always_climb_gives_monotone_altitude() {
        let m = defaults::always_climb();
        let e = m.build_encounter(&mut rng(7)).unwrap();
        let states = e.ownship.nominal_states(e.dt);
        assert!(states.windows(2).all(|w| w[1].z > w[0].z));
    }

    #[test]
    fn correlated_cpa_matches_sampled_geometry() {
        let m = defaults::toy();
        let e = m.build_encounter(&mut rng(8)).unwrap();
        let t = e.nominal_trace().unwrap();
        let min = (0..t.len())
            .map(|k| t.ownship.states[k].horizontal_distance(&t.intruder.states[k]))
            .fold(f64::INFINITY, f64::min);
        let hmd = e.intruder.initial.y;
        assert!((min - hmd).abs() < 1e-6, "{min} vs {hmd}");
    }

    #[test]
    fn uncorrelated_placement_forces_conflict() {
        let m = defaults::uncorrelated();
        for seed in 0..50 {
            let e = m.build_encounter(&mut rng(seed)).unwrap();
            let t = e.nominal_trace().unwrap();
            let reached = (0..t.len()).any(|k| {
                let g = HorizontalGeometry::from_states(&t.ownship.states[k], &t.intruder.states[k]);
                horizontal_tau(&g, 500.0).unwrap().is_some_and(|tau| tau <= 40.0)
            });
            assert!(reached);
        }
    }

    #[test]
    fn uncorrelated_ownship_independent_of_intruder() {
        let a = defaults::uncorrelated();
        let e1 = a.build_encounter(&mut rng(9)).unwrap();
        let mut b = a.clone();
        b.placement.max_vertical_offset = 100.0;
        let e2 = b.build_encounter(&mut rng(9)).unwrap();
        assert_eq!(e1.ownship, e2.ownship);
        assert_eq!(e1.chains[0], e2.chains[0]);
    }

    #[test]
    fn json_round_trip() {
        let m = defaults::correlated();
        let back = EncounterModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn bad_timing_rejected() {
        let mut m = defaults::correlated();
        m.duration = 60.5;
        assert!(m.validate().is_err());
    }
}
