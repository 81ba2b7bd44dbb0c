//! Closed-loop simulation and statistical estimation of safety metrics.

mod sampling;
mod sim;

pub use sampling::{cross_entropy_adapt, is_estimate, CrossEntropyParams};
pub use sim::{
    simulate_encounter, AircraftEquipage, EncounterStreams, Equipage, Logic, TableLogic, INTRUDER_ID, OWNSHIP_ID,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::airspace::{EncounterTrace, EventFlags, NMAC_HORIZONTAL, NMAC_VERTICAL};
use crate::encounter::EncounterModel;
use crate::{Error, Result};

/// Per-encounter indicators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncounterOutcome {
    pub nmac: bool,
    pub alert: bool,
    pub strengthen: bool,
    pub reversal: bool,
    pub crossing: bool,
    /// Minimum over steps of `max(dz / 100 ft, dxy / 500 ft)`; below one
    /// exactly when an NMAC occurs.
    pub severity: f64,
}

impl EncounterOutcome {
    pub fn from_trace(trace: &EncounterTrace) -> Self {
        let severity = trace
            .ownship
            .states
            .iter()
            .zip(&trace.intruder.states)
            .map(|(o, i)| ((i.z - o.z).abs() / NMAC_VERTICAL).max(o.horizontal_distance(i) / NMAC_HORIZONTAL))
            .fold(f64::INFINITY, f64::min);
        Self {
            nmac: trace.any_event(EventFlags::NMAC),
            alert: trace.any_event(EventFlags::RA),
            strengthen: trace.any_event(EventFlags::STRENGTHEN),
            reversal: trace.any_event(EventFlags::REVERSAL),
            crossing: trace.any_event(EventFlags::CROSSING),
            severity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub p_nmac: f64,
    pub p_nmac_se: f64,
    pub alert_rate: f64,
    pub strengthen_rate: f64,
    pub reversal_rate: f64,
    pub crossing_rate: f64,
    /// `(Σw)² / Σw²` for importance-sampled runs.
    pub effective_sample_size: Option<f64>,
    /// Encounters with an NMAC that have zero probability under the nominal
    /// model.
    pub support_violations: usize,
}

impl MetricsReport {
    /// Plain Monte Carlo aggregation.
    pub fn from_outcomes(outcomes: &[EncounterOutcome]) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Empty("metrics need at least one encounter"));
        }
        let n = outcomes.len() as f64;
        let rate = |f: fn(&EncounterOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / n;
        let p = rate(|o| o.nmac);
        Ok(Self {
            n: outcomes.len(),
            p_nmac: p,
            p_nmac_se: (p * (1.0 - p) / n).sqrt(),
            alert_rate: rate(|o| o.alert),
            strengthen_rate: rate(|o| o.strengthen),
            reversal_rate: rate(|o| o.reversal),
            crossing_rate: rate(|o| o.crossing),
            effective_sample_size: None,
            support_violations: 0,
        })
    }

    /// Importance-sampled aggregation. NMAC probability uses the unbiased
    /// `Σ w·1[NMAC] / n`; the other rates are self-normalized.
    pub fn from_weighted(outcomes: &[EncounterOutcome], weights: &[f64]) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Empty("metrics need at least one encounter"));
        }
        if outcomes.len() != weights.len() {
            return Err(Error::DataMismatch("one weight per outcome required".into()));
        }
        let n = outcomes.len() as f64;
        let wsum: f64 = weights.iter().sum();
        let w2sum: f64 = weights.iter().map(|w| w * w).sum();
        let terms: Vec<f64> = outcomes.iter().zip(weights).map(|(o, w)| if o.nmac { *w } else { 0.0 }).collect();
        let p = terms.iter().sum::<f64>() / n;
        let var =
            if outcomes.len() > 1 { terms.iter().map(|t| (t - p) * (t - p)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let rate = |f: fn(&EncounterOutcome) -> bool| {
            if wsum > 0.0 {
                (outcomes.iter().zip(weights).filter(|(o, _)| f(o)).map(|(_, w)| w).sum::<f64>() / wsum).clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        Ok(Self {
            n: outcomes.len(),
            p_nmac: p,
            p_nmac_se: (var / n).sqrt(),
            alert_rate: rate(|o| o.alert),
            strengthen_rate: rate(|o| o.strengthen),
            reversal_rate: rate(|o| o.reversal),
            crossing_rate: rate(|o| o.crossing),
            effective_sample_size: Some(if w2sum > 0.0 { wsum * wsum / w2sum } else { 0.0 }),
            support_violations: 0,
        })
    }
}

/// Samples and simulates encounters `0..n` in parallel; results are in
/// index order.
pub fn run_encounters(
    model: &EncounterModel,
    eq: &Equipage,
    n: usize,
    seed: u64,
) -> Result<Vec<(crate::encounter::SampledEncounter, EncounterTrace)>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut streams = EncounterStreams::new(seed, i);
            let enc = model.build_encounter(&mut streams.encounter)?;
            let trace = simulate_encounter(&enc, eq, &mut streams)?;
            Ok((enc, trace))
        })
        .collect()
}

/// Monte Carlo estimate over `n` independent encounters.
pub fn estimate_metrics(model: &EncounterModel, eq: &Equipage, n: usize, seed: u64) -> Result<MetricsReport> {
    if n == 0 {
        return Err(Error::Empty("metrics need at least one encounter"));
    }
    let outcomes: Vec<EncounterOutcome> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut streams = EncounterStreams::new(seed, i);
            let enc = model.build_encounter(&mut streams.encounter)?;
            Ok(EncounterOutcome::from_trace(&simulate_encounter(&enc, eq, &mut streams)?))
        })
        .collect::<Result<_>>()?;
    MetricsReport::from_outcomes(&outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskRatio {
    pub ratio: f64,
    /// Delta-method standard error, treating the two estimates as independent.
    pub se: f64,
}

/// P(NMAC | equipped) / P(NMAC | unequipped).
pub fn risk_ratio(equipped: &MetricsReport, unequipped: &MetricsReport) -> Result<RiskRatio> {
    let (pe, pu) = (equipped.p_nmac, unequipped.p_nmac);
    if !(pu > 0.0) {
        return Err(Error::InsufficientUnequippedNmacs);
    }
    let (se, su) = (equipped.p_nmac_se, unequipped.p_nmac_se);
    let var = se * se / (pu * pu) + pe * pe * su * su / pu.powi(4);
    Ok(RiskRatio { ratio: pe / pu, se: var.sqrt() })
}
