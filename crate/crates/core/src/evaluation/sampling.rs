use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate_encounter, EncounterOutcome, EncounterStreams, Equipage, MetricsReport};
use crate::encounter::{EncounterModel, SampledEncounter};
use crate::{Error, Result};

struct WeightedRun {
    encounter: SampledEncounter,
    outcome: EncounterOutcome,
    weight: f64,
    support_violation: bool,
}

fn weighted_runs(
    nominal: &EncounterModel,
    proposal: &EncounterModel,
    eq: &Equipage,
    n: usize,
    seed: u64,
    first_index: u64,
) -> Result<Vec<WeightedRun>> {
    if !nominal.same_bins(proposal) {
        return Err(Error::Contract("proposal must share structure and bins with the nominal model".into()));
    }
    (first_index..first_index + n as u64)
        .into_par_iter()
        .map(|i| {
            let mut streams = EncounterStreams::new(seed, i);
            let encounter = proposal.build_encounter(&mut streams.encounter)?;
            let trace = simulate_encounter(&encounter, eq, &mut streams)?;
            let outcome = EncounterOutcome::from_trace(&trace);
            let ln_nominal = nominal.trace_log_likelihood(&encounter)?;
            let ln_proposal = proposal.trace_log_likelihood(&encounter)?;
            let weight = (ln_nominal - ln_proposal).exp();
            let support_violation = ln_nominal == f64::NEG_INFINITY && outcome.nmac;
            Ok(WeightedRun { encounter, outcome, weight, support_violation })
        })
        .collect()
}

/// Importance-sampling estimate: encounters come from `proposal` and are
/// reweighted by the nominal/proposal likelihood ratio.
pub fn is_estimate(
    nominal: &EncounterModel,
    proposal: &EncounterModel,
    eq: &Equipage,
    n: usize,
    seed: u64,
) -> Result<MetricsReport> {
    if n == 0 {
        return Err(Error::Empty("metrics need at least one encounter"));
    }
    let runs = weighted_runs(nominal, proposal, eq, n, seed, 0)?;
    let outcomes: Vec<_> = runs.iter().map(|r| r.outcome).collect();
    let weights: Vec<_> = runs.iter().map(|r| r.weight).collect();
    let mut report = MetricsReport::from_weighted(&outcomes, &weights)?;
    report.support_violations = runs.iter().filter(|r| r.support_violation).count();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossEntropyParams {
    pub iterations: usize,
    pub samples_per_iteration: usize,
    pub elite_fraction: f64,
    /// Laplace prior used when refitting the proposal.
    pub prior_count: f64,
}

impl Default for CrossEntropyParams {
    fn default() -> Self {
        Self { iterations: 3, samples_per_iteration: 2000, elite_fraction: 0.1, prior_count: 1.0 }
    }
}

/// Cross-entropy adaptation of an importance-sampling proposal.
///
/// Each iteration samples from the current proposal, ranks encounters (NMACs
/// first by descending nominal weight, then by ascending severity), and
/// refits every CPT on the elite set.
pub fn cross_entropy_adapt(
    nominal: &EncounterModel,
    proposal: &EncounterModel,
    eq: &Equipage,
    params: &CrossEntropyParams,
    seed: u64,
) -> Result<EncounterModel> {
    let n = params.samples_per_iteration;
    if !(params.elite_fraction > 0.0 && params.elite_fraction <= 1.0) {
        return Err(Error::Contract(format!("elite fraction must be in (0, 1], got {}", params.elite_fraction)));
    }
    let elite = (params.elite_fraction * n as f64).floor() as usize;
    if elite == 0 {
        return Err(Error::EmptyElite { n, fraction: params.elite_fraction });
    }
    let mut current = proposal.clone();
    for it in 0..params.iterations {
        let mut runs = weighted_runs(nominal, &current, eq, n, seed, (it * n) as u64)?;
        runs.sort_by(|a, b| match (a.outcome.nmac, b.outcome.nmac) {
            (true, false) => std::cmp::Ordering::Less,
            (false, true) => std::cmp::Ordering::Greater,
            (true, true) => b.weight.total_cmp(&a.weight),
            (false, false) => a.outcome.severity.total_cmp(&b.outcome.severity),
        });
        let chosen = &runs[..elite];
        let initial: Vec<Vec<usize>> =
            chosen.iter().flat_map(|r| r.encounter.chains.iter().map(|c| c.initial.clone())).collect();
        let transitions: Vec<Vec<usize>> =
            chosen.iter().flat_map(|r| r.encounter.chains.iter().flat_map(|c| c.transitions.iter().cloned())).collect();
        current = EncounterModel {
            initial_net: current.initial_net.structure().fit_cpts(&initial, params.prior_count)?,
            transition_net: current.transition_net.structure().fit_cpts(&transitions, params.prior_count)?,
            ..current
        };
    }
    Ok(current)
}
