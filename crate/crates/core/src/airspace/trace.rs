use std::fmt::Write as _;
use std::io::{BufRead, Write};

use bitflags::bitflags;
use serde::{Deserialize, Serialize};

use super::Advisory;
use crate::{Error, Result};

/// Position (ft) and velocity (ft/s) of one aircraft at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl KinematicState {
    fn is_finite(&self) -> bool {
        [self.x, self.y, self.z, self.vx, self.vy, self.vz].iter().all(|v| v.is_finite())
    }

    pub fn horizontal_distance(&self, other: &KinematicState) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

/// Uniformly sampled time series of one aircraft.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftTrack {
    pub dt: f64,
    pub states: Vec<KinematicState>,
}

impl AircraftTrack {
    pub fn new(dt: f64, states: Vec<KinematicState>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Contract(format!("track time step must be positive, got {dt}")));
        }
        if let Some(k) = states.iter().position(|s| !s.is_finite()) {
            return Err(Error::Contract(format!("non-finite kinematic state at step {k}")));
        }
        Ok(Self { dt, states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

bitflags! {
    /// Per-step safety and alerting events.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct EventFlags: u8 {
        const TA = 1;
        const RA = 1 << 1;
        const STRENGTHEN = 1 << 2;
        const REVERSAL = 1 << 3;
        const CROSSING = 1 << 4;
        const NMAC = 1 << 5;
    }
}

impl EventFlags {
    fn to_field(self) -> String {
        self.iter_names().map(|(n, _)| n).collect::<Vec<_>>().join("|")
    }

    fn from_field(field: &str) -> Option<Self> {
        let mut flags = EventFlags::empty();
        for name in field.split('|').filter(|s| !s.is_empty()) {
            flags |= EventFlags::from_name(name)?;
        }
        Some(flags)
    }
}

/// Time-indexed kinematics of an ownship/intruder pair with per-step
/// advisories and events.
#[derive(Debug, Clone, PartialEq)]
pub struct EncounterTrace {
    pub ownship: AircraftTrack,
    pub intruder: AircraftTrack,
    /// `[ownship, intruder]` advisory in force at each step.
    pub advisories: Vec<[Advisory; 2]>,
    pub events: Vec<EventFlags>,
}

const HEADER: &str = "t,x0,y0,z0,vx0,vy0,vz0,x1,y1,z1,vx1,vy1,vz1,adv0,adv1,events";

impl EncounterTrace {
    pub fn new(
        ownship: AircraftTrack,
        intruder: AircraftTrack,
        advisories: Vec<[Advisory; 2]>,
        events: Vec<EventFlags>,
    ) -> Result<Self> {
        let n = ownship.len();
        if intruder.len() != n || advisories.len() != n || events.len() != n {
            return Err(Error::Contract(format!(
                "trace series lengths differ: ownship {n}, intruder {}, advisories {}, events {}",
                intruder.len(),
                advisories.len(),
                events.len()
            )));
        }
        if ownship.dt != intruder.dt {
            return Err(Error::DtMismatch { expected: ownship.dt, found: intruder.dt });
        }
        Ok(Self { ownship, intruder, advisories, events })
    }

    pub fn len(&self) -> usize {
        self.ownship.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ownship.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.ownship.dt
    }

    pub fn any_event(&self, flag: EventFlags) -> bool {
        self.events.iter().any(|e| e.contains(flag))
    }

    /// Writes the trace as CSV with a leading `# dt=<seconds>` comment.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = String::new();
        writeln!(buf, "# dt={}", self.dt()).unwrap();
        writeln!(buf, "{HEADER}").unwrap();
        for k in 0..self.len() {
            let o = &self.ownship.states[k];
            let i = &self.intruder.states[k];
            let [a0, a1] = self.advisories[k];
            writeln!(
                buf,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                k as f64 * self.dt(),
                o.x,
                o.y,
                o.z,
                o.vx,
                o.vy,
                o.vz,
                i.x,
                i.y,
                i.z,
                i.vx,
                i.vy,
                i.vz,
                a0,
                a1,
                self.events[k].to_field()
            )
            .unwrap();
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut dt = None;
        let mut saw_header = false;
        let mut own = Vec::new();
        let mut intr = Vec::new();
        let mut advisories = Vec::new();
        let mut events = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let err = |msg: String| Error::TraceFormat { line: lineno, msg };
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("dt=") {
                    dt = Some(v.trim().parse::<f64>().map_err(|e| err(format!("bad dt: {e}")))?);
                }
                continue;
            }
            if !saw_header {
                if line != HEADER {
                    return Err(err(format!("unexpected header `{line}`")));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 16 {
                return Err(err(format!("expected 16 fields, found {}", fields.len())));
            }
            let num = |j: usize| fields[j].parse::<f64>().map_err(|e| err(format!("field {j}: {e}")));
            own.push(KinematicState { x: num(1)?, y: num(2)?, z: num(3)?, vx: num(4)?, vy: num(5)?, vz: num(6)? });
            intr.push(KinematicState { x: num(7)?, y: num(8)?, z: num(9)?, vx: num(10)?, vy: num(11)?, vz: num(12)? });
            advisories.push([fields[13].parse()?, fields[14].parse()?]);
            events.push(EventFlags::from_field(fields[15]).ok_or_else(|| err(format!("bad events `{}`", fields[15])))?);
        }
        let dt = dt.ok_or(Error::TraceFormat { line: 1, msg: "missing `# dt=` line".into() })?;
        Self::new(AircraftTrack::new(dt, own)?, AircraftTrack::new(dt, intr)?, advisories, events)
    }
}
