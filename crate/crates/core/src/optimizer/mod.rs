//! Vertical collision-avoidance MDP on a discretized grid, solved by
//! backward induction over τ.
//!
//! States are `(h, hdot0, hdot1, a_prev, τ)`. The continuous coordinates live
//! on a rectilinear grid; continuous successors are spread onto the
//! surrounding vertices with multilinear weights. Value layout is row-major
//! `[τ][a_prev][h][hdot0][hdot1][action]`.

mod grid;
mod slice;
pub mod table_file;

pub use grid::{Corners, Grid};
pub use slice::{policy_slice, PolicySlice, SliceLabels};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::airspace::{Advisory, VerticalState};
use crate::dynamics::{step_vertical, IntruderModel, PilotModel};
use crate::{Error, Result};

/// Decision period of the MDP, s.
pub const DECISION_PERIOD: f64 = 1.0;

/// Costs of the MDP. All are non-positive rewards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardParams {
    /// Charged at τ = 0 when |h| < `nmac_vertical`.
    pub collision_cost: f64,
    /// Charged when an advisory is issued from COC.
    pub alert_cost: f64,
    /// Charged when an advisory is strengthened within its sense.
    pub strengthen_cost: f64,
    /// Charged when the advisory sense flips.
    pub reversal_cost: f64,
    /// Vertical extent of the collision region, ft.
    pub nmac_vertical: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            collision_cost: -1.0,
            alert_cost: -0.01,
            strengthen_cost: -0.005,
            reversal_cost: -0.02,
            nmac_vertical: 100.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        let costs = [self.collision_cost, self.alert_cost, self.strengthen_cost, self.reversal_cost];
        if costs.iter().any(|c| !(c.is_finite() && *c <= 0.0)) {
            return Err(Error::Contract(format!("reward costs must be finite and <= 0, got {costs:?}")));
        }
        if self.collision_cost > self.alert_cost {
            return Err(Error::Contract("collision cost must not exceed the alert cost".into()));
        }
        if !(self.nmac_vertical > 0.0) {
            return Err(Error::Contract(format!("nmac_vertical must be positive, got {}", self.nmac_vertical)));
        }
        Ok(())
    }

    /// Most negative cost a single step can incur apart from collision.
    pub fn min_step_cost(&self) -> f64 {
        self.alert_cost.min(self.strengthen_cost).min(self.reversal_cost)
    }
}

/// Immediate reward of taking `a` in `s`.
pub fn reward(s: &VerticalState, a: Advisory, params: &RewardParams) -> f64 {
    let mut r = 0.0;
    if s.tau == 0 && s.h.abs() < params.nmac_vertical {
        r += params.collision_cost;
    }
    if !a.is_coc() && s.a_prev.is_coc() {
        r += params.alert_cost;
    }
    if a.strengthens(s.a_prev) {
        r += params.strengthen_cost;
    }
    if a.reverses(s.a_prev) {
        r += params.reversal_cost;
    }
    r
}

/// Whether the pilot of a state with `a_prev` is already flying `a`.
fn continuing(a: Advisory, a_prev: Advisory) -> bool {
    a.is_coc() || a == a_prev
}

/// Continuous successors `([h, hdot0, hdot1], probability)` after one
/// decision period.
///
/// A newly issued advisory is followed with probability `p` this period;
/// a continued advisory is followed with certainty. Intruder acceleration
/// takes the three sigma points `{-√3σ, 0, +√3σ}` with weights
/// `{1/6, 2/3, 1/6}`, which reproduce the Gaussian's mean and variance.
pub fn kinematic_successors(
    h: f64,
    hdot0: f64,
    hdot1: f64,
    a: Advisory,
    fresh: bool,
    pilot: &PilotModel,
    intruder: &IntruderModel,
) -> Vec<([f64; 3], f64)> {
    let dt = DECISION_PERIOD;
    let p = pilot.response_probability;
    let compliance: &[(bool, f64)] = if a.is_coc() {
        &[(false, 1.0)]
    } else if !fresh || p >= 1.0 {
        &[(true, 1.0)]
    } else {
        &[(true, p), (false, 1.0 - p)]
    };
    let s = 3f64.sqrt() * intruder.sigma_accel;
    let sigma: &[(f64, f64)] =
        if s == 0.0 { &[(0.0, 1.0)] } else { &[(-s, 1.0 / 6.0), (0.0, 2.0 / 3.0), (s, 1.0 / 6.0)] };
    let band = a.band();
    let mut out = Vec::with_capacity(compliance.len() * sigma.len());
    for &(complying, pc) in compliance {
        let (dz0, v0) = step_vertical(0.0, hdot0, band, complying, pilot, dt);
        for &(acc, ps) in sigma {
            let v1 = hdot1 + acc * dt;
            let dz1 = 0.5 * (hdot1 + v1) * dt;
            out.push(([h + dz1 - dz0, v0, v1], pc * ps));
        }
    }
    out
}

/// Distribution over grid states one period after taking `a` in `s`.
///
/// Entries are `(state index, probability)`, sorted by index, without
/// duplicates or zero weights. Successors outside the hull are clamped.
pub fn transition_distribution(
    s: &VerticalState,
    a: Advisory,
    pilot: &PilotModel,
    intruder: &IntruderModel,
    grid: &Grid,
) -> Result<Vec<(usize, f64)>> {
    if s.tau == 0 {
        return Err(Error::TerminalState);
    }
    if s.tau > grid.tau_max() {
        return Err(Error::OffGrid { axis: "tau", value: s.tau as f64 });
    }
    let ia = grid.advisory_index(a).ok_or_else(|| Error::Contract(format!("advisory {a} is not on the grid")))?;
    let fresh = !continuing(a, s.a_prev);
    let mut out = Vec::new();
    for (x, p) in kinematic_successors(s.h, s.hdot0, s.hdot1, a, fresh, pilot, intruder) {
        for (k, w) in grid.corners(x[0], x[1], x[2]).iter() {
            out.push((grid.state_index(s.tau - 1, ia, k), p * w));
        }
    }
    Ok(merge_sparse(out))
}

fn merge_sparse(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (i, w) in entries {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 += w,
            _ => out.push((i, w)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

/// Optimized state-action value table.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicTable {
    grid: Grid,
    values: Vec<f64>,
}

impl LogicTable {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let expected = grid.num_states() * grid.advisories().len();
        if values.len() != expected {
            return Err(Error::Contract(format!("value array has {} entries, grid needs {expected}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("non-finite table value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn advisories(&self) -> &[Advisory] {
        self.grid.advisories()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Action values stored at a grid state.
    pub fn action_values(&self, state_index: usize) -> &[f64] {
        let n = self.advisories().len();
        &self.values[state_index * n..(state_index + 1) * n]
    }

    pub fn value(&self, state_index: usize, a: Advisory) -> Option<f64> {
        self.grid.advisory_index(a).map(|ia| self.action_values(state_index)[ia])
    }
}

/// Sparse successor lists of every (kinematic vertex, action, freshness)
/// triple, shared by all τ layers.
struct TransitionCache {
    offsets: Vec<usize>,
    entries: Vec<(u32, f64)>,
}

impl TransitionCache {
    fn build(grid: &Grid, pilot: &PilotModel, intruder: &IntruderModel) -> Self {
        let n_adv = grid.advisories().len();
        let lists: Vec<Vec<(u32, f64)>> = (0..grid.kinematic_len() * n_adv * 2)
            .into_par_iter()
            .map(|slot| {
                let fresh = slot % 2 == 1;
                let ia = (slot / 2) % n_adv;
                let k = slot / 2 / n_adv;
                let [h, v0, v1] = grid.kinematic_vertex(k);
                let a = grid.advisories()[ia];
                let mut out = Vec::new();
                for (x, p) in kinematic_successors(h, v0, v1, a, fresh, pilot, intruder) {
                    for (kk, w) in grid.corners(x[0], x[1], x[2]).iter() {
                        out.push((kk, p * w));
                    }
                }
                merge_sparse(out).into_iter().map(|(i, w)| (i as u32, w)).collect()
            })
            .collect();
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut entries = Vec::new();
        for l in lists {
            entries.extend(l);
            offsets.push(entries.len());
        }
        Self { offsets, entries }
    }

    fn successors(&self, n_adv: usize, k: usize, ia: usize, fresh: bool) -> &[(u32, f64)] {
        let slot = (k * n_adv + ia) * 2 + fresh as usize;
        &self.entries[self.offsets[slot]..self.offsets[slot + 1]]
    }
}

/// Solves the MDP by backward induction from τ = 0 to `grid.tau_max()`.
///
/// Each τ layer depends only on the layer below it and is evaluated in
/// parallel.
pub fn backward_induction(
    grid: Grid,
    pilot: &PilotModel,
    intruder: &IntruderModel,
    params: &RewardParams,
) -> Result<LogicTable> {
    pilot.validate()?;
    intruder.validate()?;
    params.validate()?;
    let advisories = grid.advisories().to_vec();
    let n_adv = advisories.len();
    let n_kin = grid.kinematic_len();
    let layer = n_adv * n_kin * n_adv;
    let cache = TransitionCache::build(&grid, pilot, intruder);
    let mut values = vec![0.0; layer * (grid.tau_max() as usize + 1)];
    // best[ia_prev * n_kin + k]: max over actions in the previous layer.
    let mut best = vec![0.0; n_adv * n_kin];

    for tau in 0..=grid.tau_max() {
        let start = tau as usize * layer;
        let out = &mut values[start..start + layer];
        out.par_chunks_mut(n_adv).enumerate().for_each(|(row, q)| {
            let ia_prev = row / n_kin;
            let k = row % n_kin;
            let [h, v0, v1] = grid.kinematic_vertex(k);
            let a_prev = advisories[ia_prev];
            let s = VerticalState::new(h, v0, v1, a_prev, tau);
            for (ia, &a) in advisories.iter().enumerate() {
                let mut v = reward(&s, a, params);
                if tau > 0 {
                    let fresh = !continuing(a, a_prev);
                    let next = &best[ia * n_kin..(ia + 1) * n_kin];
                    v +=
                        cache.successors(n_adv, k, ia, fresh).iter().map(|&(kk, w)| w * next[kk as usize]).sum::<f64>();
                }
                q[ia] = v;
            }
        });
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow { tau: tau as usize });
        }
        best.par_iter_mut().enumerate().for_each(|(row, b)| {
            *b = out[row * n_adv..(row + 1) * n_adv].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        });
    }
    LogicTable::new(grid, values)
}

/// Highest-valued advisory; ties go to the earliest advisory in canonical
/// order (COC, then weaker before stronger, down before up).
pub fn best_action(advisories: &[Advisory], values: &[f64]) -> Advisory {
    let mut best: Option<(Advisory, f64)> = None;
    for (&a, &v) in advisories.iter().zip(values) {
        best = match best {
            Some((ba, bv)) if bv > v || (bv == v && ba < a) => Some((ba, bv)),
            _ => Some((a, v)),
        };
    }
    best.map_or(Advisory::Coc, |(a, _)| a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::FPM;
    use proptest::prelude::*;

    fn micro_grid() -> Grid {
        Grid::new(
            vec![-200.0, -100.0, 0.0, 100.0, 200.0],
            vec![-25.0, 0.0, 25.0],
            vec![-25.0, 0.0, 25.0],
            Advisory::ALL.to_vec(),
            4,
        )
        .unwrap()
    }

    fn quiet() -> (PilotModel, IntruderModel) {
        (PilotModel::immediate(), IntruderModel { sigma_accel: 0.0 })
    }

    #[test]
    fn level_flight_coc_is_deterministic() {
        let g = micro_grid();
        let (p, i) = quiet();
        let s = VerticalState::new(100.0, 0.0, 0.0, Advisory::Coc, 3);
        let d = transition_distribution(&s, Advisory::Coc, &p, &i, &g).unwrap();
        assert_eq!(d, vec![(g.state_index(2, 0, g.kinematic_index(3, 1, 1)), 1.0)]);
    }

    #[test]
    fn terminal_state_rejected() {
        let g = micro_grid();
        let (p, i) = quiet();
        let s = VerticalState::new(0.0, 0.0, 0.0, Advisory::Coc, 0);
        assert!(matches!(transition_distribution(&s, Advisory::Coc, &p, &i, &g), Err(Error::TerminalState)));
    }

    #[test]
    fn immediate_descent_mass_at_one_rate() {
        let g = Grid::new(
            vec![-400.0, 0.0, 400.0],
            vec![-2.0 * G_ACC, -G_ACC, 0.0, G_ACC],
            vec![-30.0, 0.0, 30.0],
            Advisory::ALL.to_vec(),
            3,
        )
        .unwrap();
        let p = PilotModel::new(1.0, G_ACC, 5.0).unwrap();
        let i = IntruderModel::default();
        let s = VerticalState::new(0.0, 0.0, 0.0, Advisory::Coc, 2);
        let d = transition_distribution(&s, Advisory::Des1500, &p, &i, &g).unwrap();
        for (idx, _) in d {
            let (_, _, _, i0, _) = g.decode(idx);
            assert_eq!(g.hdot0()[i0], -G_ACC);
        }
    }

    const G_ACC: f64 = 8.0;

    #[test]
    fn reward_components() {
        let p = RewardParams::default();
        let collide = VerticalState::new(0.0, 0.0, 0.0, Advisory::Coc, 0);
        assert_eq!(reward(&collide, Advisory::Coc, &p), p.collision_cost);
        let quiet = VerticalState::new(3000.0, 0.0, 0.0, Advisory::Coc, 5);
        assert_eq!(reward(&quiet, Advisory::Coc, &p), 0.0);
        assert_eq!(reward(&quiet, Advisory::Dnc, &p), p.alert_cost);
        let climbing = VerticalState::new(3000.0, 0.0, 0.0, Advisory::Cl1500, 5);
        assert_eq!(reward(&climbing, Advisory::Des1500, &p), p.reversal_cost);
        assert_eq!(reward(&climbing, Advisory::Cl2500, &p), p.strengthen_cost);
        assert_eq!(reward(&climbing, Advisory::Cl1500, &p), 0.0);
    }

    #[test]
    fn zero_rewards_give_zero_values() {
        let params = RewardParams {
            collision_cost: 0.0,
            alert_cost: 0.0,
            strengthen_cost: 0.0,
            reversal_cost: 0.0,
            nmac_vertical: 100.0,
        };
        let t = backward_induction(micro_grid(), &PilotModel::default(), &IntruderModel::default(), &params).unwrap();
        assert!(t.values().iter().all(|v| *v == 0.0));
    }

    /// h = 0 at τ = 1; descending at 1500 ft/min for one second clears a
    /// 10 ft collision slab, holding level does not.
    #[test]
    fn descent_avoids_toy_collision() {
        let g = Grid::new(
            vec![-20.0, -10.0, 0.0, 10.0, 20.0],
            vec![-25.0, 0.0, 25.0],
            vec![-25.0, 0.0, 25.0],
            Advisory::ALL.to_vec(),
            1,
        )
        .unwrap();
        let params = RewardParams {
            collision_cost: -1.0,
            alert_cost: 0.0,
            strengthen_cost: 0.0,
            reversal_cost: 0.0,
            nmac_vertical: 10.0,
        };
        let pilot = PilotModel::new(1.0, 400.0, 0.0).unwrap();
        let t = backward_induction(g.clone(), &pilot, &IntruderModel { sigma_accel: 0.0 }, &params).unwrap();
        let s = g.state_index(1, 0, g.kinematic_index(2, 1, 1));
        assert_eq!(t.value(s, Advisory::Coc), Some(-1.0));
        assert_eq!(t.value(s, Advisory::Des1500), Some(0.0));
    }

    #[test]
    fn value_bounds_hold() {
        let params = RewardParams::default();
        let g = micro_grid();
        let t = backward_induction(g.clone(), &PilotModel::default(), &IntruderModel::default(), &params).unwrap();
        let lo = params.collision_cost + (g.tau_max() as f64 + 1.0) * params.min_step_cost();
        assert!(t.values().iter().all(|v| *v <= 0.0 && *v >= lo - 1e-12));
    }

    #[test]
    fn mirror_symmetry() {
        let g = micro_grid();
        let t =
            backward_induction(g.clone(), &PilotModel::default(), &IntruderModel::default(), &RewardParams::default())
                .unwrap();
        for idx in 0..g.num_states() {
            let s = g.vertex(idx);
            let m = s.mirrored();
            let midx = g.vertex_index(&m).unwrap();
            for &a in g.advisories() {
                let v = t.value(idx, a).unwrap();
                let mv = t.value(midx, a.mirrored()).unwrap();
                assert!((v - mv).abs() < 1e-9, "{s:?} {a}: {v} vs {mv}");
            }
        }
    }

    #[test]
    fn cheaper_collisions_never_lower_values() {
        let g = micro_grid();
        let (p, i) = (PilotModel::default(), IntruderModel::default());
        let mild = backward_induction(g.clone(), &p, &i, &RewardParams::default()).unwrap();
        let harsh =
            backward_induction(g, &p, &i, &RewardParams { collision_cost: -5.0, ..Default::default() }).unwrap();
        assert!(harsh.values().iter().zip(mild.values()).all(|(h, m)| h <= m));
    }

    #[test]
    fn best_action_tie_break() {
        let all = Advisory::ALL;
        assert_eq!(best_action(&all, &[0.0; 7]), Advisory::Coc);
        let mut v = [0.0; 7];
        v[5] = 1.0;
        assert_eq!(best_action(&all, &v), Advisory::Des2500);
        let mut rev: Vec<Advisory> = all.to_vec();
        rev.reverse();
        assert_eq!(best_action(&rev, &[-1.0, -1.0, 0.0, 0.0, -1.0, -1.0, -1.0]), Advisory::Des1500);
    }

    #[test]
    fn default_rates_are_quoted_in_fpm() {
        let g = Grid::default();
        assert_eq!(g.hdot0().len(), 13);
        assert!((g.hdot0()[12] - 2500.0 * FPM).abs() < 1e-12);
        assert_eq!(g.h().len(), 33);
    }

    proptest! {
        #[test]
        fn transition_is_a_distribution(
            h in -300.0f64..300.0, v0 in -40.0f64..40.0, v1 in -40.0f64..40.0,
            ia in 0usize..7, ip in 0usize..7, tau in 1u32..=4, p in 0.05f64..=1.0, sigma in 0.0f64..10.0,
        ) {
            let g = micro_grid();
            let pilot = PilotModel::new(p, 8.0, 5.0).unwrap();
            let s = VerticalState::new(h, v0, v1, Advisory::ALL[ip], tau);
            let d = transition_distribution(&s, Advisory::ALL[ia], &pilot, &IntruderModel { sigma_accel: sigma }, &g).unwrap();
            let total: f64 = d.iter().map(|e| e.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(d.iter().all(|e| e.1 > 0.0));
            prop_assert!(d.windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(d.iter().all(|e| g.decode(e.0).0 == tau - 1 && g.decode(e.0).1 == ia));
        }
    }
}
