use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use acaslab::airspace::Advisory;
use acaslab::encounter::{defaults, DiscreteBayesNet, EncounterModel};
use acaslab::evaluation::{
    cross_entropy_adapt, estimate_metrics, is_estimate, risk_ratio, simulate_encounter, AircraftEquipage,
    EncounterOutcome, EncounterStreams, Equipage, Logic, MetricsReport, RiskRatio, TableLogic,
};
use acaslab::optimizer::{backward_induction, policy_slice, table_file, LogicTable, SliceLabels};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{LogicKind, RunConfig};
use crate::error::CliError;

pub fn load_model(spec: &str) -> Result<EncounterModel, CliError> {
    match spec {
        "correlated" => return Ok(defaults::correlated()),
        "conflict-forced" => return Ok(defaults::conflict_forced()),
        "uncorrelated" => return Ok(defaults::uncorrelated()),
        "toy" => return Ok(defaults::toy()),
        _ => {}
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input("E_MODEL_NOT_FOUND", format!("{}: {e}", path.display())))?;
    EncounterModel::from_json(&text).map_err(|e| CliError::input("E_MODEL_FORMAT", format!("{}: {e}", path.display())))
}

fn load_table(cfg: &RunConfig) -> Result<LogicTable, CliError> {
    let path = cfg.paths.table_path();
    if !path.is_file() {
        return Err(CliError::input("E_TABLE_NOT_FOUND", format!("logic table not found: {}", path.display())));
    }
    table_file::load(&path).map_err(|e| CliError::input("E_TABLE_FORMAT", format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes the effective configuration beside the command's outputs.
pub fn write_effective_config(cfg: &RunConfig) -> Result<(), CliError> {
    write_file(&cfg.paths.out.join("effective_config.toml"), cfg.to_toml().as_bytes())
}

fn equipage(cfg: &RunConfig) -> Result<Equipage, CliError> {
    let pilot = cfg.simulation_pilot();
    let needs_table = cfg.evaluation.ownship == LogicKind::Table || cfg.evaluation.intruder == LogicKind::Table;
    let table = if needs_table {
        let mut logic = TableLogic::new(load_table(cfg)?);
        logic.online = cfg.online;
        logic.belief = cfg.belief;
        Some(Arc::new(logic))
    } else {
        None
    };
    let logic = |kind: LogicKind| match kind {
        LogicKind::None => Logic::None,
        LogicKind::Tcas => Logic::Tcas(cfg.tcas),
        LogicKind::Table => Logic::Table(table.clone().expect("table loaded")),
    };
    Ok(Equipage {
        ownship: AircraftEquipage { logic: logic(cfg.evaluation.ownship), pilot },
        intruder: AircraftEquipage { logic: logic(cfg.evaluation.intruder), pilot },
    })
}

/// Reads a numeric CSV whose header names network nodes and returns bin
/// indices in node order.
fn read_bins(path: &Path, net: &DiscreteBayesNet) -> Result<Vec<Vec<usize>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input("E_DATA_NOT_FOUND", format!("{}: {e}", path.display())))?;
    let bad = |msg: String| CliError::input("E_DATA_FORMAT", format!("{}: {msg}", path.display()));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty file".into()))?.split(',').map(str::trim).collect();
    let columns: Vec<usize> = net
        .nodes()
        .iter()
        .map(|n| header.iter().position(|h| *h == n.name).ok_or_else(|| bad(format!("missing column `{}`", n.name))))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(bad(format!("row {} has {} fields, header has {}", i + 1, fields.len(), header.len())));
        }
        let row = net
            .nodes()
            .iter()
            .zip(&columns)
            .map(|(node, &c)| {
                let v: f64 =
                    fields[c].parse().map_err(|_| bad(format!("row {}: `{}` is not a number", i + 1, fields[c])))?;
                Ok(node.bin_of(v))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn fit(cfg: &RunConfig, initial: &Path, transitions: Option<&Path>, prior: f64) -> Result<PathBuf, CliError> {
    let mut model = load_model(&cfg.paths.model)?;
    let data = read_bins(initial, &model.initial_net)?;
    model.initial_net = model.initial_net.structure().fit_cpts(&data, prior)?;
    if let Some(path) = transitions {
        let data = read_bins(path, &model.transition_net)?;
        model.transition_net = model.transition_net.structure().fit_cpts(&data, prior)?;
    }
    let out = cfg.paths.out.join("model.json");
    write_file(&out, model.to_json()?.as_bytes())?;
    Ok(out)
}

pub fn sample(cfg: &RunConfig, count: usize) -> Result<PathBuf, CliError> {
    let seed = cfg.seed()?;
    let model = load_model(&cfg.paths.model)?;
    let dir = cfg.paths.out.join("encounters");
    let traces = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let enc = model.build_encounter(&mut EncounterStreams::new(seed, i).encounter)?;
            let mut csv = Vec::new();
            enc.nominal_trace()?.write_csv(&mut csv)?;
            Ok((enc.log_probability, csv))
        })
        .collect::<acaslab::Result<Vec<_>>>()?;
    let mut summary = String::from("index,log_probability\n");
    for (i, (lp, csv)) in traces.iter().enumerate() {
        write_file(&dir.join(format!("encounter_{i:05}.csv")), csv)?;
        writeln!(summary, "{i},{lp}").unwrap();
    }
    write_file(&dir.join("summary.csv"), summary.as_bytes())?;
    Ok(dir)
}

pub fn optimize(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let table = backward_induction(cfg.grid.build()?, &cfg.pilot, &cfg.intruder, &cfg.rewards)?;
    let path = cfg.paths.table_path();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    table_file::save(&table, &path)?;
    Ok(path)
}

pub fn simulate(cfg: &RunConfig, index: u64) -> Result<PathBuf, CliError> {
    let seed = cfg.seed()?;
    let model = load_model(&cfg.paths.model)?;
    let eq = equipage(cfg)?;
    let mut streams = EncounterStreams::new(seed, index);
    let enc = model.build_encounter(&mut streams.encounter)?;
    let trace = simulate_encounter(&enc, &eq, &mut streams)?;
    let path = cfg.paths.out.join("trace.csv");
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    trace.write_csv(BufWriter::new(file))?;
    Ok(path)
}

#[derive(Debug, Serialize)]
struct EvaluationOutput {
    metrics: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    risk_ratio: Option<RiskRatio>,
}

pub fn evaluate(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let seed = cfg.seed()?;
    let ev = &cfg.evaluation;
    let nominal = load_model(&cfg.paths.model)?;
    let eq = equipage(cfg)?;
    let mut proposal = ev.proposal.as_ref().map(|p| load_model(&p.to_string_lossy())).transpose()?;
    if let Some(ce) = &ev.cross_entropy {
        let start = proposal.clone().unwrap_or_else(|| nominal.clone());
        let adapted = cross_entropy_adapt(&nominal, &start, &eq, ce, seed)?;
        write_file(&cfg.paths.out.join("proposal.json"), adapted.to_json()?.as_bytes())?;
        proposal = Some(adapted);
    }
    let estimate = |eq: &Equipage| match &proposal {
        Some(p) => is_estimate(&nominal, p, eq, ev.n, seed),
        None => estimate_metrics(&nominal, eq, ev.n, seed),
    };
    let metrics = estimate(&eq)?;
    if metrics.support_violations > 0 {
        eprintln!("warning: {} NMAC encounters lie outside the nominal model's support", metrics.support_violations);
    }
    let (baseline, ratio) = if ev.compare_unequipped {
        let base = estimate(&Equipage::unequipped())?;
        let ratio = risk_ratio(&metrics, &base)?;
        (Some(base), Some(ratio))
    } else {
        (None, None)
    };
    if ev.per_encounter_csv {
        let sampler = proposal.as_ref().unwrap_or(&nominal);
        let csv = per_encounter_csv(&nominal, sampler, &eq, ev.n, seed)?;
        write_file(&cfg.paths.out.join("encounters.csv"), csv.as_bytes())?;
    }
    let out = EvaluationOutput { metrics, baseline, risk_ratio: ratio };
    let path = cfg.paths.out.join("metrics.json");
    let json = serde_json::to_string_pretty(&out).map_err(acaslab::Error::from)?;
    write_file(&path, format!("{json}\n").as_bytes())?;
    Ok(path)
}

fn per_encounter_csv(
    nominal: &EncounterModel,
    sampler: &EncounterModel,
    eq: &Equipage,
    n: usize,
    seed: u64,
) -> acaslab::Result<String> {
    let rows = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut streams = EncounterStreams::new(seed, i);
            let enc = sampler.build_encounter(&mut streams.encounter)?;
            let o = EncounterOutcome::from_trace(&simulate_encounter(&enc, eq, &mut streams)?);
            let w = (nominal.trace_log_likelihood(&enc)? - sampler.trace_log_likelihood(&enc)?).exp();
            Ok(format!(
                "{i},{},{},{},{},{},{},{w}\n",
                o.nmac as u8, o.alert as u8, o.strengthen as u8, o.reversal as u8, o.crossing as u8, o.severity
            ))
        })
        .collect::<acaslab::Result<Vec<_>>>()?;
    Ok(std::iter::once("index,nmac,alert,strengthen,reversal,crossing,severity,weight\n".to_string())
        .chain(rows)
        .collect())
}

pub fn slice(
    cfg: &RunConfig,
    hdot0: f64,
    hdot1: f64,
    a_prev: Advisory,
    labels: SliceLabels,
) -> Result<PathBuf, CliError> {
    let table = load_table(cfg)?;
    let s = policy_slice(&table, hdot0, hdot1, a_prev)?;
    let path = cfg.paths.out.join("slice.csv");
    write_file(&path, s.to_csv(labels).as_bytes())?;
    Ok(path)
}
