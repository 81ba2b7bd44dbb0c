//! Online execution of a logic table: interpolation, belief-weighted action
//! values, online costs, leader/follower coordination and max-min fusion.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::airspace::{Advisory, BeliefState, Sense, VerticalState};
use crate::optimizer::{best_action, LogicTable};
use crate::{Error, Result};

/// Value of each advisory on a fixed advisory axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionValues {
    pub advisories: Vec<Advisory>,
    pub values: Vec<f64>,
}

impl ActionValues {
    pub fn new(advisories: Vec<Advisory>, values: Vec<f64>) -> Result<Self> {
        if advisories.len() != values.len() {
            return Err(Error::AxisMismatch);
        }
        Ok(Self { advisories, values })
    }

    pub fn get(&self, a: Advisory) -> Option<f64> {
        self.advisories.iter().position(|x| *x == a).map(|i| self.values[i])
    }
}

/// Multilinear interpolation of the action values at `s`.
///
/// Continuous coordinates are clamped to the grid hull, τ is clamped to
/// `tau_max`, and an `a_prev` missing from the table is read as COC.
pub fn interpolate(table: &LogicTable, s: &VerticalState) -> ActionValues {
    let g = table.grid();
    let n = g.advisories().len();
    let tau = s.tau.min(g.tau_max());
    let ia = g.advisory_index(s.a_prev).or_else(|| g.advisory_index(Advisory::Coc)).unwrap();
    let mut values = vec![0.0; n];
    for (k, w) in g.corners(s.h, s.hdot0, s.hdot1).iter() {
        let q = table.action_values(g.state_index(tau, ia, k));
        for (v, qa) in values.iter_mut().zip(q) {
            *v += w * qa;
        }
    }
    ActionValues { advisories: g.advisories().to_vec(), values }
}

/// Belief-weighted average of interpolated action values.
pub fn belief_action_values(table: &LogicTable, belief: &BeliefState) -> Result<ActionValues> {
    if !belief.is_normalized() {
        return Err(Error::InvalidBelief("belief weights must sum to 1".into()));
    }
    let n = table.advisories().len();
    let mut values = vec![0.0; n];
    for (s, w) in belief.particles() {
        for (v, q) in values.iter_mut().zip(interpolate(table, s).values) {
            *v += w * q;
        }
    }
    Ok(ActionValues { advisories: table.advisories().to_vec(), values })
}

/// Constraint a follower receives from the leader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coordination {
    DoNotClimb,
    DoNotDescend,
}

impl Coordination {
    /// The sense this constraint rules out.
    pub fn forbidden_sense(self) -> Sense {
        match self {
            Coordination::DoNotClimb => Sense::Up,
            Coordination::DoNotDescend => Sense::Down,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoordinationMessage {
    pub constraint: Coordination,
    pub leader_id: u32,
    pub follower_id: u32,
}

/// Per-decision context for online costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnlineContext {
    /// Ownship height above ground, ft; `None` disables the descend inhibit.
    pub own_altitude_agl: Option<f64>,
    pub coordination_constraint: Option<Coordination>,
    /// Down-sense advisories are penalized below this height, ft.
    pub inhibit_altitude: f64,
    /// Penalty added to disallowed advisories.
    pub cost_magnitude: f64,
}

impl Default for OnlineContext {
    fn default() -> Self {
        Self { own_altitude_agl: None, coordination_constraint: None, inhibit_altitude: 1000.0, cost_magnitude: -1e6 }
    }
}

impl OnlineContext {
    /// The penalty must dominate every table value, so it has to lie below
    /// the collision cost.
    pub fn validate(&self, collision_cost: f64) -> Result<()> {
        if !(self.cost_magnitude.is_finite() && self.cost_magnitude < collision_cost) {
            return Err(Error::Contract(format!(
                "cost_magnitude {} must be finite and below the collision cost {collision_cost}",
                self.cost_magnitude
            )));
        }
        if !self.inhibit_altitude.is_finite() {
            return Err(Error::Contract("inhibit_altitude must be finite".into()));
        }
        Ok(())
    }
}

/// Adds `cost_magnitude` to advisories disallowed by the descend inhibit or
/// the coordination constraint. COC is never penalized by coordination.
pub fn apply_online_costs(values: &ActionValues, ctx: &OnlineContext) -> ActionValues {
    let low = ctx.own_altitude_agl.is_some_and(|alt| alt < ctx.inhibit_altitude);
    let forbidden = ctx.coordination_constraint.map(Coordination::forbidden_sense);
    let adjusted = values
        .advisories
        .iter()
        .zip(&values.values)
        .map(|(a, v)| {
            let mut v = *v;
            if low && a.sense() == Some(Sense::Down) {
                v += ctx.cost_magnitude;
            }
            if forbidden.is_some() && a.sense() == forbidden {
                v += ctx.cost_magnitude;
            }
            v
        })
        .collect();
    ActionValues { advisories: values.advisories.clone(), values: adjusted }
}

/// Highest-valued advisory with the canonical tie-break.
pub fn select_action(values: &ActionValues) -> Advisory {
    best_action(&values.advisories, &values.values)
}

/// Max-min fusion: each advisory takes its worst value over intruders.
pub fn fuse_multithreat(per_intruder: &[ActionValues]) -> Result<ActionValues> {
    let (first, rest) = per_intruder.split_first().ok_or(Error::Empty("fusion needs at least one intruder"))?;
    let mut fused = first.clone();
    for v in rest {
        if v.advisories != fused.advisories {
            return Err(Error::AxisMismatch);
        }
        for (f, x) in fused.values.iter_mut().zip(&v.values) {
            *f = f.min(*x);
        }
    }
    Ok(fused)
}

/// Message from the leader (lower identifier) telling the follower to
/// take the opposite sense; `None` when the leader selected COC.
pub fn coordinate(leader_action: Advisory, own_id: u32, intruder_id: u32) -> Result<Option<CoordinationMessage>> {
    if own_id >= intruder_id {
        return Err(Error::NotLeader { own: own_id, intruder: intruder_id });
    }
    let constraint = match leader_action.sense() {
        None => return Ok(None),
        Some(Sense::Down) => Coordination::DoNotDescend,
        Some(Sense::Up) => Coordination::DoNotClimb,
    };
    Ok(Some(CoordinationMessage { constraint, leader_id: own_id, follower_id: intruder_id }))
}

/// Noise used to build a particle belief around a true state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeliefNoise {
    /// Standard deviation of relative altitude, ft.
    pub sigma_h: f64,
    /// Standard deviation of each vertical rate, ft/s.
    pub sigma_rate: f64,
    pub particles: usize,
}

impl Default for BeliefNoise {
    fn default() -> Self {
        Self { sigma_h: 25.0, sigma_rate: 1.0, particles: 20 }
    }
}

impl BeliefNoise {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_h >= 0.0 && self.sigma_rate >= 0.0 && self.sigma_h.is_finite() && self.sigma_rate.is_finite()) {
            return Err(Error::Contract("belief noise deviations must be finite and >= 0".into()));
        }
        if self.particles == 0 {
            return Err(Error::Contract("belief needs at least one particle".into()));
        }
        Ok(())
    }
}

/// Equal-weight particles drawn from Gaussian perturbations of `truth`.
pub fn synthesize_belief<R: Rng + ?Sized>(
    truth: &VerticalState,
    noise: &BeliefNoise,
    rng: &mut R,
) -> Result<BeliefState> {
    noise.validate()?;
    let nh = Normal::new(0.0, noise.sigma_h).expect("validated");
    let nr = Normal::new(0.0, noise.sigma_rate).expect("validated");
    let states = (0..noise.particles)
        .map(|_| VerticalState {
            h: truth.h + nh.sample(rng),
            hdot0: truth.hdot0 + nr.sample(rng),
            hdot1: truth.hdot1 + nr.sample(rng),
            ..*truth
        })
        .collect();
    BeliefState::uniform(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::Grid;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Table whose value is an affine function of the vertex coordinates, so
    /// interpolation must reproduce it exactly.
    fn affine_table() -> LogicTable {
        let g = Grid::new(
            vec![-200.0, -50.0, 0.0, 50.0, 200.0],
            vec![-20.0, 0.0, 10.0],
            vec![-10.0, 5.0, 30.0],
            Advisory::ALL.to_vec(),
            3,
        )
        .unwrap();
        let mut values = Vec::new();
        for idx in 0..g.num_states() {
            let s = g.vertex(idx);
            for ia in 0..7 {
                values.push(ia as f64 + 0.01 * s.h - 0.3 * s.hdot0 + 0.7 * s.hdot1 - s.tau as f64);
            }
        }
        LogicTable::new(g, values).unwrap()
    }

    fn av(values: [f64; 7]) -> ActionValues {
        ActionValues::new(Advisory::ALL.to_vec(), values.to_vec()).unwrap()
    }

    #[test]
    fn vertex_lookup_is_exact() {
        let t = affine_table();
        let g = t.grid();
        for idx in [0, 5, 77, g.num_states() - 1] {
            assert_eq!(interpolate(&t, &g.vertex(idx)).values, t.action_values(idx).to_vec());
        }
    }

    #[test]
    fn off_hull_clamps() {
        let t = affine_table();
        let far = VerticalState::new(9000.0, 99.0, -99.0, Advisory::Coc, 50);
        let edge = VerticalState::new(200.0, 10.0, -10.0, Advisory::Coc, 3);
        assert_eq!(interpolate(&t, &far), interpolate(&t, &edge));
    }

    #[test]
    fn online_costs() {
        let v = av([0.0; 7]);
        assert_eq!(apply_online_costs(&v, &OnlineContext::default()), v);
        let climb = OnlineContext { coordination_constraint: Some(Coordination::DoNotClimb), ..Default::default() };
        let out = apply_online_costs(&v, &climb);
        for (a, x) in out.advisories.iter().zip(&out.values) {
            assert_eq!(*x, if a.sense() == Some(Sense::Up) { -1e6 } else { 0.0 });
        }
        let low = OnlineContext { own_altitude_agl: Some(200.0), ..Default::default() };
        let out = apply_online_costs(&v, &low);
        for (a, x) in out.advisories.iter().zip(&out.values) {
            assert_eq!(*x, if a.sense() == Some(Sense::Down) { -1e6 } else { 0.0 });
        }
    }

    #[test]
    fn selection_rules() {
        assert_eq!(select_action(&av([0.0; 7])), Advisory::Coc);
        assert_eq!(select_action(&av([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0])), Advisory::Cl1500);
    }

    #[test]
    fn coordination_messages() {
        let m = coordinate(Advisory::Des1500, 1, 2).unwrap().unwrap();
        assert_eq!(m.constraint, Coordination::DoNotDescend);
        assert_eq!((m.leader_id, m.follower_id), (1, 2));
        assert_eq!(coordinate(Advisory::Cl2500, 1, 2).unwrap().unwrap().constraint, Coordination::DoNotClimb);
        assert_eq!(coordinate(Advisory::Coc, 1, 2).unwrap(), None);
        assert!(matches!(coordinate(Advisory::Dnc, 3, 2), Err(Error::NotLeader { .. })));
    }

    #[test]
    fn fusion_errors() {
        assert!(fuse_multithreat(&[]).is_err());
        let short = ActionValues::new(vec![Advisory::Coc], vec![0.0]).unwrap();
        assert!(matches!(fuse_multithreat(&[av([0.0; 7]), short]), Err(Error::AxisMismatch)));
    }

    #[test]
    fn belief_is_centered_on_truth() {
        let truth = VerticalState::new(300.0, 2.0, -4.0, Advisory::Dnc, 12);
        let noise = BeliefNoise { particles: 20_000, ..Default::default() };
        let b = synthesize_belief(&truth, &noise, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(b.is_normalized());
        let mean_h: f64 = b.particles().iter().map(|(s, w)| w * s.h).sum();
        assert!((mean_h - 300.0).abs() < 1.0);
        assert!(b.particles().iter().all(|(s, _)| s.tau == 12 && s.a_prev == Advisory::Dnc));
    }

    fn arb_state() -> impl Strategy<Value = VerticalState> {
        (-200.0f64..200.0, -20.0f64..10.0, -10.0f64..30.0, 0usize..7, 0u32..=3)
            .prop_map(|(h, v0, v1, ia, tau)| VerticalState::new(h, v0, v1, Advisory::ALL[ia], tau))
    }

    proptest! {
        #[test]
        fn affine_values_reproduced(s in arb_state()) {
            let t = affine_table();
            let v = interpolate(&t, &s);
            for (ia, x) in v.values.iter().enumerate() {
                let expect = ia as f64 + 0.01 * s.h - 0.3 * s.hdot0 + 0.7 * s.hdot1 - s.tau as f64;
                prop_assert!((x - expect).abs() < 1e-9);
            }
        }

        #[test]
        fn duplicated_particles_leave_values_unchanged(s1 in arb_state(), s2 in arb_state(), w in 0.05f64..0.95) {
            let t = affine_table();
            let b = BeliefState::new(vec![(s1, w), (s2, 1.0 - w)]).unwrap();
            let split = BeliefState::new(vec![(s1, w / 2.0), (s2, 1.0 - w), (s1, w / 2.0)]).unwrap();
            let a = belief_action_values(&t, &b).unwrap();
            let c = belief_action_values(&t, &split).unwrap();
            for (x, y) in a.values.iter().zip(&c.values) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn shift_invariant_selection(v in proptest::array::uniform7(-5.0f64..5.0), c in -100.0f64..100.0) {
            let shifted = v.map(|x| x + c);
            let a = select_action(&av(v));
            let b = select_action(&av(shifted));
            // Shifting can merge nearly equal values through rounding, so only
            // compare when the maximum is well separated.
            let mut sorted = v;
            sorted.sort_by(|x, y| y.total_cmp(x));
            prop_assume!(sorted[0] - sorted[1] > 1e-9);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn fusion_is_min_and_order_free(a in proptest::array::uniform7(-5.0f64..5.0), b in proptest::array::uniform7(-5.0f64..5.0)) {
            let ab = fuse_multithreat(&[av(a), av(b)]).unwrap();
            let ba = fuse_multithreat(&[av(b), av(a)]).unwrap();
            prop_assert_eq!(&ab, &ba);
            prop_assert_eq!(fuse_multithreat(&[av(a), av(a)]).unwrap(), av(a));
            for i in 0..7 {
                prop_assert!(ab.values[i] <= a[i] && ab.values[i] <= b[i]);
            }
        }

        #[test]
        fn constrained_follower_keeps_sense(v in proptest::array::uniform7(-1.0f64..0.0), up in any::<bool>()) {
            let c = if up { Coordination::DoNotDescend } else { Coordination::DoNotClimb };
            let ctx = OnlineContext { coordination_constraint: Some(c), ..Default::default() };
            let a = select_action(&apply_online_costs(&av(v), &ctx));
            prop_assert_ne!(a.sense(), Some(c.forbidden_sense()));
        }
    }
}
