use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::airspace::{
    horizontal_tau, is_nmac, quantize_tau, Advisory, AircraftTrack, EncounterTrace, EventFlags, HorizontalGeometry,
    KinematicState, VerticalState, NMAC_HORIZONTAL,
};
use crate::dynamics::{sample_response_delay, step_vertical, PilotModel};
use crate::encounter::{step_nominal, SampledEncounter};
use crate::optimizer::{LogicTable, DECISION_PERIOD};
use crate::qmdp::{
    apply_online_costs, belief_action_values, coordinate, select_action, synthesize_belief, BeliefNoise, Coordination,
    OnlineContext,
};
use crate::tcas::{TcasConfig, TcasUnit, ThreatLevel};
use crate::{Error, Result};

/// Identifier of the ownship; the lower identifier leads coordination.
pub const OWNSHIP_ID: u32 = 0x100;
pub const INTRUDER_ID: u32 = 0x200;

/// Logic table plus everything needed to run it online.
#[derive(Debug, Clone)]
pub struct TableLogic {
    pub table: LogicTable,
    pub online: OnlineContext,
    pub belief: BeliefNoise,
    /// Horizontal range that defines τ, ft.
    pub separation_threshold: f64,
}

impl TableLogic {
    pub fn new(table: LogicTable) -> Self {
        Self {
            table,
            online: OnlineContext::default(),
            belief: BeliefNoise::default(),
            separation_threshold: NMAC_HORIZONTAL,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub enum Logic {
    #[default]
    None,
    Tcas(TcasConfig),
    Table(Arc<TableLogic>),
}

#[derive(Debug, Clone, Default)]
pub struct AircraftEquipage {
    pub logic: Logic,
    pub pilot: PilotModel,
}

#[derive(Debug, Clone, Default)]
pub struct Equipage {
    pub ownship: AircraftEquipage,
    pub intruder: AircraftEquipage,
}

impl Equipage {
    pub fn unequipped() -> Self {
        Self::default()
    }

    pub fn ownship_only(logic: Logic, pilot: PilotModel) -> Self {
        Self { ownship: AircraftEquipage { logic, pilot }, intruder: AircraftEquipage::default() }
    }

    fn any_equipped(&self) -> bool {
        !matches!(self.ownship.logic, Logic::None) || !matches!(self.intruder.logic, Logic::None)
    }
}

/// Independent random streams of one encounter.
#[derive(Debug, Clone)]
pub struct EncounterStreams {
    pub encounter: ChaCha8Rng,
    pub pilot: ChaCha8Rng,
    pub belief: ChaCha8Rng,
}

impl EncounterStreams {
    /// Streams derived from `root_seed` and the encounter index. Encounter
    /// generation never shares a stream with pilot or belief sampling, so
    /// equipping an aircraft cannot change the sampled encounter.
    pub fn new(root_seed: u64, index: u64) -> Self {
        let stream = |kind: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(root_seed);
            r.set_stream(index.wrapping_mul(4).wrapping_add(kind));
            r
        };
        Self { encounter: stream(0), pilot: stream(1), belief: stream(2) }
    }
}

struct AircraftSim<'a> {
    equip: &'a AircraftEquipage,
    tcas: Option<TcasUnit>,
    advisory: Advisory,
    /// Steps left before the pilot starts following the advisory.
    delay: u32,
    /// Off the nominal profile because of an earlier advisory.
    deviated: bool,
}

impl<'a> AircraftSim<'a> {
    fn new(equip: &'a AircraftEquipage) -> Self {
        let tcas = match &equip.logic {
            Logic::Tcas(cfg) => Some(TcasUnit::new(*cfg)),
            _ => None,
        };
        Self { equip, tcas, advisory: Advisory::Coc, delay: 0, deviated: false }
    }

    fn decide(
        &mut self,
        own: &KinematicState,
        intr: &KinematicState,
        constraint: Option<Coordination>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Advisory, ThreatLevel)> {
        match &self.equip.logic {
            Logic::None => Ok((Advisory::Coc, ThreatLevel::None)),
            Logic::Tcas(_) => {
                let forced = constraint.map(|c| c.forbidden_sense().opposite());
                let out = self.tcas.as_mut().expect("tcas unit").update(own, std::slice::from_ref(intr), forced);
                Ok((out.advisory, out.threat))
            }
            Logic::Table(t) => {
                let g = HorizontalGeometry::from_states(own, intr);
                let Some(tau) = horizontal_tau(&g, t.separation_threshold)? else {
                    return Ok((Advisory::Coc, ThreatLevel::None));
                };
                let truth = VerticalState::new(
                    intr.z - own.z,
                    own.vz,
                    intr.vz,
                    self.advisory,
                    quantize_tau(Some(tau), t.table.grid().tau_max()),
                );
                let belief = synthesize_belief(&truth, &t.belief, rng)?;
                let values = belief_action_values(&t.table, &belief)?;
                let ctx =
                    OnlineContext { own_altitude_agl: Some(own.z), coordination_constraint: constraint, ..t.online };
                let a = select_action(&apply_online_costs(&values, &ctx));
                let level = if a.is_coc() { ThreatLevel::None } else { ThreatLevel::Ra };
                Ok((a, level))
            }
        }
    }

    fn set_advisory(&mut self, a: Advisory, rng: &mut ChaCha8Rng) {
        if a != self.advisory && !a.is_coc() {
            self.delay = sample_response_delay(&self.equip.pilot, rng);
            self.deviated = true;
        }
        self.advisory = a;
    }

    /// Vertical rate at the end of the step. Before responding the pilot
    /// holds the current rate; once responding the aircraft accelerates into
    /// the advisory band, then follows the nominal command clipped to it.
    /// After clear of conflict it rejoins the nominal profile.
    fn next_rate(&mut self, vz: f64, cmd: f64, dt: f64) -> f64 {
        let pilot = &self.equip.pilot;
        match self.advisory.band() {
            Some(_) if self.delay > 0 => {
                self.delay -= 1;
                vz
            }
            Some(band) if band.contains(vz) => band.clamp(cmd),
            Some(band) => step_vertical(0.0, vz, Some(band), true, pilot, dt).1,
            None if self.deviated => {
                let dv = pilot.acceleration * dt;
                let next = if (cmd - vz).abs() <= dv { cmd } else { vz + dv.copysign(cmd - vz) };
                self.deviated = next != cmd;
                next
            }
            None => cmd,
        }
    }
}

fn change_flags(prev: Advisory, now: Advisory) -> EventFlags {
    let mut f = EventFlags::empty();
    if prev.is_coc() && !now.is_coc() {
        f |= EventFlags::RA;
    }
    if now.strengthens(prev) {
        f |= EventFlags::STRENGTHEN;
    }
    if now.reverses(prev) {
        f |= EventFlags::REVERSAL;
    }
    f
}

/// Closed-loop simulation of one encounter.
///
/// Every step, the leader (ownship) decides first and sends its
/// coordination message; the follower then decides under it. Advisories
/// override nominal vertical commands through the pilot model.
pub fn simulate_encounter(
    enc: &SampledEncounter,
    eq: &Equipage,
    streams: &mut EncounterStreams,
) -> Result<EncounterTrace> {
    if eq.any_equipped() && (enc.dt - DECISION_PERIOD).abs() > 1e-12 {
        return Err(Error::DtMismatch { expected: DECISION_PERIOD, found: enc.dt });
    }
    let n = enc.ownship.steps();
    if enc.intruder.steps() != n {
        return Err(Error::Contract("ownship and intruder command series differ in length".into()));
    }
    let dt = enc.dt;
    let mut own = AircraftSim::new(&eq.ownship);
    let mut intr = AircraftSim::new(&eq.intruder);
    let mut s0 = enc.ownship.initial;
    let mut s1 = enc.intruder.initial;
    let mut own_states = Vec::with_capacity(n + 1);
    let mut intr_states = Vec::with_capacity(n + 1);
    let mut advisories = Vec::with_capacity(n + 1);
    let mut events = Vec::with_capacity(n + 1);
    let mut prev_h = s1.z - s0.z;
    let mut prev_any_ra = false;

    for k in 0..=n {
        let mut flags = EventFlags::empty();
        if is_nmac((s1.z - s0.z).abs(), s0.horizontal_distance(&s1))? {
            flags |= EventFlags::NMAC;
        }
        let prev = [own.advisory, intr.advisory];
        let (a0, t0) = own.decide(&s0, &s1, None, &mut streams.belief)?;
        let constraint = coordinate(a0, OWNSHIP_ID, INTRUDER_ID)?.map(|m| m.constraint);
        let (a1, t1) = intr.decide(&s1, &s0, constraint, &mut streams.belief)?;
        own.set_advisory(a0, &mut streams.pilot);
        intr.set_advisory(a1, &mut streams.pilot);
        if t0.max(t1) >= ThreatLevel::Ta && (own.tcas.is_some() || intr.tcas.is_some()) {
            flags |= EventFlags::TA;
        }
        flags |= change_flags(prev[0], a0) | change_flags(prev[1], a1);
        let h = s1.z - s0.z;
        let any_ra = !a0.is_coc() || !a1.is_coc();
        if k > 0 && prev_h * h < 0.0 && (any_ra || prev_any_ra) {
            flags |= EventFlags::CROSSING;
        }
        prev_h = h;
        prev_any_ra = any_ra;

        own_states.push(s0);
        intr_states.push(s1);
        advisories.push([a0, a1]);
        events.push(flags);

        if k < n {
            let v0 = own.next_rate(s0.vz, enc.ownship.vertical_rate[k], dt);
            let v1 = intr.next_rate(s1.vz, enc.intruder.vertical_rate[k], dt);
            s0 = step_nominal(&s0, v0, enc.ownship.turn_rate[k], enc.ownship.speed[k], dt);
            s1 = step_nominal(&s1, v1, enc.intruder.turn_rate[k], enc.intruder.speed[k], dt);
        }
    }
    EncounterTrace::new(AircraftTrack::new(dt, own_states)?, AircraftTrack::new(dt, intr_states)?, advisories, events)
}
