//! Built-in encounter models. The CPTs are hand-set plausible values, not
//! fitted to surveillance data.

use super::{DiscreteBayesNet, EncounterMode, EncounterModel, Node, Placement};

const VR_EDGES: [f64; 6] = [-40.0, -10.0, -1.0, 1.0, 10.0, 40.0];
const DVR_EDGES: [f64; 6] = [-3.0, -1.0, -0.25, 0.25, 1.0, 3.0];
const ALT_EDGES: [f64; 4] = [1000.0, 3000.0, 10000.0, 18000.0];

/// Per-step rate changes given the current rate bin: mostly steady, with a
/// slight pull back toward level flight.
fn dvr_rows() -> Vec<Vec<f64>> {
    vec![
        vec![0.02, 0.05, 0.75, 0.12, 0.06],
        vec![0.02, 0.06, 0.82, 0.07, 0.03],
        vec![0.02, 0.06, 0.84, 0.06, 0.02],
        vec![0.03, 0.07, 0.82, 0.06, 0.02],
        vec![0.06, 0.12, 0.75, 0.05, 0.02],
    ]
}

fn vr_rows() -> Vec<Vec<f64>> {
    vec![vec![0.12, 0.15, 0.46, 0.15, 0.12], vec![0.1, 0.15, 0.5, 0.15, 0.1], vec![0.05, 0.1, 0.7, 0.1, 0.05]]
}

/// Marginal `(edges, probabilities)` of one root variable.
pub(crate) type Marginal<'a> = (&'a [f64], &'a [f64]);

pub(crate) struct CorrelatedSpec<'a> {
    pub altitude: Marginal<'a>,
    pub vr_edges: &'a [f64],
    /// One row per altitude bin.
    pub vr_rows: Vec<Vec<f64>>,
    pub closure: Marginal<'a>,
    pub tau0: Marginal<'a>,
    pub vmd: Marginal<'a>,
    pub hmd: Marginal<'a>,
    pub dvr_edges: &'a [f64],
    /// One row per rate bin.
    pub dvr_rows: Vec<Vec<f64>>,
}

fn root(name: &str, m: Marginal) -> Node {
    Node::new(name, &[], m.0).with_cpt(vec![m.1.to_vec()])
}

fn uniform_rows(rows: usize, bins: usize) -> Vec<Vec<f64>> {
    vec![vec![1.0 / bins as f64; bins]; rows]
}

pub(crate) fn correlated_from(spec: CorrelatedSpec) -> EncounterModel {
    let initial = DiscreteBayesNet::new(vec![
        root("altitude", spec.altitude),
        Node::new("vr0", &[0], spec.vr_edges).with_cpt(spec.vr_rows.clone()),
        Node::new("vr1", &[0], spec.vr_edges).with_cpt(spec.vr_rows),
        root("closure", spec.closure),
        root("tau0", spec.tau0),
        root("vmd", spec.vmd),
        root("hmd", spec.hmd),
    ])
    .expect("valid initial network");
    let nvr = spec.vr_edges.len() - 1;
    let transition = DiscreteBayesNet::new(vec![
        Node::new("vr0", &[], spec.vr_edges).with_cpt(uniform_rows(1, nvr)),
        Node::new("vr1", &[], spec.vr_edges).with_cpt(uniform_rows(1, nvr)),
        Node::new("dvr0", &[0], spec.dvr_edges).with_cpt(spec.dvr_rows.clone()),
        Node::new("dvr1", &[1], spec.dvr_edges).with_cpt(spec.dvr_rows),
    ])
    .expect("valid transition network");
    EncounterModel {
        mode: EncounterMode::Correlated,
        initial_net: initial,
        transition_net: transition,
        duration: 60.0,
        dt: 1.0,
        ownship_speed: 200.0,
        placement: Placement::default(),
    }
}

/// General correlated model: a minority of encounters come close.
pub fn correlated() -> EncounterModel {
    correlated_from(CorrelatedSpec {
        altitude: (&ALT_EDGES, &[0.3, 0.4, 0.3]),
        vr_edges: &VR_EDGES,
        vr_rows: vr_rows(),
        closure: (&[100.0, 300.0, 500.0, 800.0], &[0.3, 0.5, 0.2]),
        tau0: (&[30.0, 40.0, 50.0], &[0.5, 0.5]),
        vmd: (&[-1000.0, -300.0, -100.0, 100.0, 300.0, 1000.0], &[0.15, 0.15, 0.4, 0.15, 0.15]),
        hmd: (&[0.0, 500.0, 2000.0, 6000.0], &[0.4, 0.35, 0.25]),
        dvr_edges: &DVR_EDGES,
        dvr_rows: dvr_rows(),
    })
}

/// Correlated model whose nominal trajectories pass within NMAC range
/// horizontally and within 150 ft vertically at closest approach.
pub fn conflict_forced() -> EncounterModel {
    correlated_from(CorrelatedSpec {
        altitude: (&[2000.0, 5000.0, 10000.0, 18000.0], &[0.3, 0.4, 0.3]),
        vr_edges: &VR_EDGES,
        vr_rows: vr_rows(),
        closure: (&[100.0, 300.0, 500.0, 800.0], &[0.3, 0.5, 0.2]),
        tau0: (&[30.0, 40.0, 50.0], &[0.5, 0.5]),
        vmd: (&[-150.0, -50.0, 50.0, 150.0], &[0.25, 0.5, 0.25]),
        hmd: (&[0.0, 250.0, 500.0], &[0.5, 0.5]),
        dvr_edges: &DVR_EDGES,
        dvr_rows: dvr_rows(),
    })
}

/// Uncorrelated model: each aircraft independently from altitude, vertical
/// rate and speed.
pub fn uncorrelated() -> EncounterModel {
    let initial = DiscreteBayesNet::new(vec![
        root("altitude", (&ALT_EDGES, &[0.3, 0.4, 0.3])),
        Node::new("vr", &[0], &VR_EDGES).with_cpt(vr_rows()),
        root("speed", (&[100.0, 200.0, 300.0, 450.0], &[0.3, 0.5, 0.2])),
    ])
    .expect("valid initial network");
    let transition = DiscreteBayesNet::new(vec![
        Node::new("vr", &[], &VR_EDGES).with_cpt(uniform_rows(1, 5)),
        Node::new("dvr", &[0], &DVR_EDGES).with_cpt(dvr_rows()),
    ])
    .expect("valid transition network");
    EncounterModel {
        mode: EncounterMode::Uncorrelated,
        initial_net: initial,
        transition_net: transition,
        duration: 60.0,
        dt: 1.0,
        ownship_speed: 200.0,
        placement: Placement::default(),
    }
}

/// Two-bin level-flight model with an enumerable NMAC probability.
///
/// Vertical miss is `[0, 100)` ft with probability `p_vertical`, else
/// `[100, 1000)`; horizontal miss is `[0, 500)` ft with probability
/// `p_horizontal`, else `[500, 3000)`. Rates are effectively zero and the
/// closest approach falls on a step, so an NMAC occurs exactly when both
/// misses are in their first bin.
pub fn toy_with(p_vertical: f64, p_horizontal: f64) -> EncounterModel {
    let flat: &[f64] = &[-1e-6, 1e-6];
    correlated_from(CorrelatedSpec {
        altitude: (&[5000.0, 6000.0], &[1.0]),
        vr_edges: flat,
        vr_rows: vec![vec![1.0]],
        closure: (&[150.0, 250.0], &[1.0]),
        tau0: (&[30.0, 40.0], &[1.0]),
        vmd: (&[0.0, 100.0, 1000.0], &[p_vertical, 1.0 - p_vertical]),
        hmd: (&[0.0, 500.0, 3000.0], &[p_horizontal, 1.0 - p_horizontal]),
        dvr_edges: &[-1e-9, 1e-9],
        dvr_rows: vec![vec![1.0]],
    })
}

/// Nominal toy: NMAC probability 0.02 × 0.05 = 0.001.
pub fn toy() -> EncounterModel {
    toy_with(0.02, 0.05)
}

/// Single-bin everything except the misses, which are point masses.
#[cfg(test)]
pub(crate) fn degenerate() -> EncounterModel {
    toy_with(1.0, 0.0)
}

#[cfg(test)]
pub(crate) fn symmetric_random_walk() -> EncounterModel {
    let mut m = correlated();
    let rows = vec![vec![0.1, 0.2, 0.4, 0.2, 0.1]; 5];
    let nodes: Vec<Node> = m
        .transition_net
        .nodes()
        .iter()
        .map(|n| if n.name.starts_with('d') { n.clone().with_cpt(rows.clone()) } else { n.clone() })
        .collect();
    m.transition_net = DiscreteBayesNet::new(nodes).unwrap();
    m
}

#[cfg(test)]
pub(crate) fn always_climb() -> EncounterModel {
    correlated_from(CorrelatedSpec {
        altitude: (&[5000.0, 6000.0], &[1.0]),
        vr_edges: &[0.0, 1.0, 40.0],
        vr_rows: vec![vec![1.0, 0.0]],
        closure: (&[150.0, 250.0], &[1.0]),
        tau0: (&[30.0, 40.0], &[1.0]),
        vmd: (&[0.0, 1000.0], &[1.0]),
        hmd: (&[0.0, 3000.0], &[1.0]),
        dvr_edges: &[0.5, 1.0],
        dvr_rows: vec![vec![1.0], vec![1.0]],
    })
}
