use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::amp::DiscriminatorConfig;
use crate::distill::DistillConfig;
use crate::dynamics::RobotModel;
use crate::error::{Error, Result};
use crate::nets::NetworkTable;
use crate::ppo::PpoConfig;
use crate::rewards::{RewardConfig, RewardSet, RewardTerm};
use crate::terrain::{TerrainType, MAX_LEVEL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Robot {
    Hexapod,
    Quadruped,
}

impl Robot {
    pub fn model(self) -> RobotModel {
        match self {
            Robot::Hexapod => RobotModel::hexapod(),
            Robot::Quadruped => RobotModel::quadruped(),
        }
    }
}

/// What a run does; each subcommand runs exactly one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStage {
    I,
    II,
    #[serde(rename = "distill")]
    Distill,
    #[serde(rename = "eval")]
    Eval,
    #[serde(rename = "record")]
    Record,
    #[serde(rename = "plot")]
    Plot,
    #[serde(rename = "inspect")]
    Inspect,
}

impl RunStage {
    pub fn label(self) -> &'static str {
        match self {
            RunStage::I => "I",
            RunStage::II => "II",
            RunStage::Distill => "distill",
            RunStage::Eval => "eval",
            RunStage::Record => "record",
            RunStage::Plot => "plot",
            RunStage::Inspect => "inspect",
        }
    }

    fn default_reward_mode(self) -> RewardSet {
        match self {
            RunStage::I | RunStage::Record => RewardSet::BasicGait,
            _ => RewardSet::BasicExperience,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Experience dataset: read by Stage II, written by `record`.
    pub dataset: Option<PathBuf>,
    /// Policy checkpoint read by `record` (Stage I), `distill` and `eval` (Stage II).
    pub checkpoint: Option<PathBuf>,
    /// Student checkpoint read by `eval`.
    pub student: Option<PathBuf>,
    /// Run log read by `plot`.
    pub log: Option<PathBuf>,
    /// Directory for logs, checkpoints and plots.
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainConfig {
    /// Starting curriculum level of Stage II and distillation.
    pub initial_level: u8,
}

impl Default for TerrainConfig {
    fn default() -> Self {
        Self { initial_level: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Control steps per terrain.
    pub steps: usize,
    pub level: u8,
    pub terrains: Vec<TerrainType>,
    /// Terrain whose first env is traced step by step for plotting.
    pub trace_terrain: Option<TerrainType>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { steps: 500, level: 5, terrains: TerrainType::ALL.to_vec(), trace_terrain: Some(TerrainType::StairsUp) }
    }
}

/// One run of one subcommand, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub robot: Robot,
    /// Checked against the subcommand when present.
    pub stage: Option<RunStage>,
    /// Defaults to BR+GR for Stage I and recording, BR+ER otherwise.
    pub reward_mode: Option<RewardSet>,
    pub seeds: Vec<u64>,
    pub num_envs: usize,
    pub iterations: usize,
    /// Deterministic mode drops wall-clock fields from logs.
    pub deterministic: bool,
    /// Locks reward scales, network widths and the style scale to the table.
    pub paper_repro: bool,
    pub paths: Paths,
    pub ppo: PpoConfig,
    pub discriminator: DiscriminatorConfig,
    pub distill: DistillConfig,
    pub networks: NetworkTable,
    /// Per-term reward scale overrides, keyed by term name.
    pub reward_scales: BTreeMap<String, f64>,
    /// Style-reward scales to sweep in Stage II; empty means the table value.
    pub style_scales: Vec<f64>,
    pub terrain: TerrainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            robot: Robot::Hexapod,
            stage: None,
            reward_mode: None,
            seeds: vec![1],
            num_envs: 64,
            iterations: 500,
            deterministic: false,
            paper_repro: false,
            paths: Paths { out: PathBuf::from("runs"), ..Paths::default() },
            ppo: PpoConfig::default(),
            discriminator: DiscriminatorConfig::default(),
            distill: DistillConfig::default(),
            networks: NetworkTable::paper(),
            reward_scales: BTreeMap::new(),
            style_scales: Vec::new(),
            terrain: TerrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub deterministic: bool,
    pub paper_repro: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seeds = vec![s];
        }
        if let Some(out) = &o.out {
            self.paths.out = out.clone();
        }
        self.deterministic |= o.deterministic;
        self.paper_repro |= o.paper_repro;
    }

    pub fn reward_mode_for(&self, stage: RunStage) -> RewardSet {
        self.reward_mode.unwrap_or(stage.default_reward_mode())
    }

    /// Table rewards for `model` with this run's overrides applied.
    pub fn reward_config(&self, model: &RobotModel) -> Result<RewardConfig> {
        let mut r = RewardConfig::paper(model);
        for (name, v) in &self.reward_scales {
            let term = RewardTerm::parse(name).ok_or_else(|| Error::Config(format!("unknown reward term '{name}'")))?;
            r.set_scale(term, *v);
        }
        r.validate()?;
        Ok(r)
    }

    /// The sweep list, or the table style scale alone.
    pub fn style_sweep(&self) -> Vec<f64> {
        if self.style_scales.is_empty() {
            vec![RewardTerm::DiscriminatorScore.table_scale()]
        } else {
            self.style_scales.clone()
        }
    }

    /// Effective PPO settings: env count follows the run.
    pub fn ppo_config(&self) -> PpoConfig {
        PpoConfig { num_envs: self.num_envs, ..self.ppo.clone() }
    }

    /// Rejects everything that would fail later, before any compute.
    pub fn validate(&self, stage: RunStage) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if let Some(s) = self.stage {
            if s != stage {
                return bad(format!("config is for stage {} but the subcommand runs {}", s.label(), stage.label()));
            }
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.num_envs == 0 {
            return bad("num_envs must be positive".into());
        }
        let trains = matches!(stage, RunStage::I | RunStage::II | RunStage::Distill);
        if trains && self.iterations == 0 {
            return bad("iterations must be positive".into());
        }
        self.ppo_config().validate()?;
        self.discriminator.validate()?;
        self.distill.validate()?;
        let model = self.robot.model();
        self.reward_config(&model)?;
        if self.terrain.initial_level > MAX_LEVEL || self.eval.level > MAX_LEVEL {
            return bad(format!("terrain levels must lie in 0..={MAX_LEVEL}"));
        }
        let mode = self.reward_mode_for(stage);
        match stage {
            RunStage::I | RunStage::Record if mode.uses_style() => {
                return bad("BR+ER needs a recorded dataset and is only valid for Stage II".into());
            }
            RunStage::II if mode.uses_style() => match &self.paths.dataset {
                None => return bad("reward mode BR+ER requires paths.dataset".into()),
                Some(p) if !p.is_file() => return bad(format!("dataset {} does not exist", p.display())),
                _ => {}
            },
            _ => {}
        }
        if !self.style_scales.is_empty() && !(stage == RunStage::II && mode.uses_style()) {
            return bad("style_scales only applies to Stage II with BR+ER".into());
        }
        if self.style_scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("style scales must be finite and non-negative".into());
        }
        if matches!(stage, RunStage::Record | RunStage::Distill | RunStage::Eval) {
            match &self.paths.checkpoint {
                None => return bad(format!("stage {} requires paths.checkpoint", stage.label())),
                Some(p) if !p.is_file() => return bad(format!("checkpoint {} does not exist", p.display())),
                _ => {}
            }
        }
        let need = |p: &Option<PathBuf>, what: &str| match p {
            None => Err(Error::Config(format!("stage {} requires paths.{what}", stage.label()))),
            Some(p) if !p.is_file() => Err(Error::Config(format!("{} does not exist", p.display()))),
            _ => Ok(()),
        };
        match stage {
            RunStage::Plot => need(&self.paths.log, "log")?,
            RunStage::Inspect => need(&self.paths.dataset, "dataset")?,
            _ => {}
        }
        if let Some(p) = &self.paths.student {
            if stage == RunStage::Eval && !p.is_file() {
                return bad(format!("student checkpoint {} does not exist", p.display()));
            }
        }
        if self.paper_repro {
            self.check_table_constants()?;
        }
        Ok(())
    }

    fn check_table_constants(&self) -> Result<()> {
        let mut broken = Vec::new();
        if self.networks != NetworkTable::paper() {
            broken.push("networks".to_string());
        }
        for (name, v) in &self.reward_scales {
            if RewardTerm::parse(name).is_some_and(|t| t.table_scale() != *v) {
                broken.push(format!("reward_scales.{name}"));
            }
        }
        let style = RewardTerm::DiscriminatorScore.table_scale();
        if self.style_scales.iter().any(|s| *s != style) {
            broken.push("style_scales".into());
        }
        if self.robot != Robot::Hexapod {
            broken.push("robot".into());
        }
        if broken.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("--paper-repro forbids overriding table constants: {}", broken.join(", "))))
        }
    }
}
