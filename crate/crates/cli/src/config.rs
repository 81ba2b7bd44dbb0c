use std::path::{Path, PathBuf};

use acaslab::airspace::Advisory;
use acaslab::dynamics::{IntruderModel, PilotModel};
use acaslab::evaluation::CrossEntropyParams;
use acaslab::optimizer::{Grid, RewardParams};
use acaslab::qmdp::{BeliefNoise, OnlineContext};
use acaslab::tcas::TcasConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub rewards: RewardParams,
    #[serde(default)]
    pub pilot: PilotModel,
    #[serde(default)]
    pub intruder: IntruderModel,
    #[serde(default)]
    pub tcas: TcasConfig,
    #[serde(default)]
    pub online: OnlineContext,
    #[serde(default)]
    pub belief: BeliefNoise,
    #[serde(default)]
    pub evaluation: EvaluationSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            paths: Paths::default(),
            grid: GridSpec::default(),
            rewards: RewardParams::default(),
            pilot: PilotModel::default(),
            intruder: IntruderModel::default(),
            tcas: TcasConfig::default(),
            online: OnlineContext::default(),
            belief: BeliefNoise::default(),
            evaluation: EvaluationSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Built-in model name (`correlated`, `conflict-forced`, `uncorrelated`,
    /// `toy`) or a JSON model file.
    pub model: String,
    /// Logic table; defaults to `table.acxt` in the output directory.
    pub table: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self { model: "correlated".into(), table: None, out: PathBuf::from("out") }
    }
}

impl Paths {
    pub fn table_path(&self) -> PathBuf {
        self.table.clone().unwrap_or_else(|| self.out.join("table.acxt"))
    }
}

/// Grid cut points. Rates are in ft/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub h: Vec<f64>,
    pub hdot0: Vec<f64>,
    pub hdot1: Vec<f64>,
    pub advisories: Vec<Advisory>,
    pub tau_max: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        let g = Grid::default();
        Self {
            h: g.h().to_vec(),
            hdot0: g.hdot0().to_vec(),
            hdot1: g.hdot1().to_vec(),
            advisories: g.advisories().to_vec(),
            tau_max: g.tau_max(),
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> acaslab::Result<Grid> {
        Grid::new(self.h.clone(), self.hdot0.clone(), self.hdot1.clone(), self.advisories.clone(), self.tau_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogicKind {
    None,
    Tcas,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSpec {
    pub n: usize,
    pub seed: Option<u64>,
    pub ownship: LogicKind,
    pub intruder: LogicKind,
    /// Pilot used in simulation; falls back to `[pilot]`.
    pub pilot: Option<PilotModel>,
    /// Importance-sampling proposal model (JSON).
    pub proposal: Option<PathBuf>,
    /// Adapts the proposal by cross-entropy before estimating.
    pub cross_entropy: Option<CrossEntropyParams>,
    /// Also runs the unequipped baseline and reports the risk ratio.
    pub compare_unequipped: bool,
    pub per_encounter_csv: bool,
}

impl Default for EvaluationSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: None,
            ownship: LogicKind::None,
            intruder: LogicKind::None,
            pilot: None,
            proposal: None,
            cross_entropy: None,
            compare_unequipped: false,
            per_encounter_csv: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input("E_CONFIG_NOT_FOUND", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::input("E_CONFIG", e.message().to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::input(
                "E_CONFIG_VERSION",
                format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |e: acaslab::Error| CliError::input("E_CONFIG", e.to_string());
        self.grid.build().map_err(invalid)?;
        self.rewards.validate().map_err(invalid)?;
        self.pilot.validate().map_err(invalid)?;
        self.intruder.validate().map_err(invalid)?;
        self.tcas.validate().map_err(invalid)?;
        self.online.validate(self.rewards.collision_cost).map_err(invalid)?;
        self.belief.validate().map_err(invalid)?;
        if let Some(p) = &self.evaluation.pilot {
            p.validate().map_err(invalid)?;
        }
        if self.evaluation.n == 0 {
            return Err(CliError::input("E_CONFIG", "evaluation.n must be at least 1"));
        }
        Ok(())
    }

    pub fn simulation_pilot(&self) -> PilotModel {
        self.evaluation.pilot.unwrap_or(self.pilot)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.evaluation.seed.ok_or_else(|| {
            CliError::input("E_SEED_REQUIRED", "this command is stochastic; pass --seed or set evaluation.seed")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn populated_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.paths.table = Some("t.acxt".into());
        cfg.evaluation.seed = Some(42);
        cfg.evaluation.ownship = LogicKind::Table;
        cfg.evaluation.pilot = Some(PilotModel::immediate());
        cfg.evaluation.cross_entropy = Some(CrossEntropyParams::default());
        cfg.online.own_altitude_agl = Some(500.0);
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn minimal_document_uses_defaults() {
        let cfg = RunConfig::parse("schema_version = 1\n[evaluation]\nseed = 3\n").unwrap();
        assert_eq!(cfg.evaluation.seed, Some(3));
        assert_eq!(cfg.grid, GridSpec::default());
    }

    #[test]
    fn unknown_keys_and_versions_rejected() {
        assert_eq!(RunConfig::parse("schema_version = 1\nbogus = 2\n").unwrap_err().code, "E_CONFIG");
        assert_eq!(RunConfig::parse("schema_version = 9\n").unwrap_err().code, "E_CONFIG_VERSION");
        assert_eq!(RunConfig::parse("").unwrap_err().code, "E_CONFIG");
    }
}
