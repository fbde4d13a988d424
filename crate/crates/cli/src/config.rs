//! Experiment configuration, read from TOML. Every field except `task`,
//! `game` and `trials` has a default, and [`ExperimentConfig::resolve`]
//! fills them in before any trial runs; the resolved form is what the
//! summary records.

use std::path::{Path, PathBuf};

use defense_games::data::{isqrt, next_level, DataConfig, DataMitigator};
use defense_games::detectors::BaselineDetector;
use defense_games::game::{Allowance, GameParams, PartyBudgets};
use defense_games::time::TimeConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    ToyClassification,
    Ldata,
    Ltime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameChoice {
    Dbd,
    Dbm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChallengerKind {
    Nature,
    #[default]
    Attacker,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Option<TaskKind>,
    pub game: Option<GameChoice>,
    #[serde(default)]
    pub challenger: ChallengerKind,
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    /// Seed of the task instance; defaults to `seed`.
    pub instance_seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub budgets: BudgetsSection,
    #[serde(default)]
    pub agents: AgentsSection,
    #[serde(default)]
    pub instance: InstanceSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub n: u32,
    pub epsilon: f64,
    pub delta: f64,
    /// Batch size; 32 for the toy task, 1 otherwise.
    pub q: Option<usize>,
    /// Soundness violations are counted above `violation_factor · ε`;
    /// 7 for the toy task, 1 otherwise.
    pub violation_factor: Option<f64>,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self {
            n: 128,
            epsilon: 0.1,
            delta: 0.1,
            q: None,
            violation_factor: None,
        }
    }
}

/// Per-party allowances. Unset entries get task-specific defaults; unset
/// step budgets outside the time task mean "not metered".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetsSection {
    pub trainer_samples: Option<u64>,
    pub trainer_steps: Option<u64>,
    pub challenger_samples: Option<u64>,
    pub challenger_steps: Option<u64>,
    pub defender_samples: Option<u64>,
    pub defender_steps: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentsSection {
    /// Level cap of the data trainer.
    pub k: u64,
    /// Step horizon of the time trainer.
    pub t_train: u64,
    pub detector: Option<String>,
    /// Threshold of the `level-threshold` detector.
    pub theta: Option<u64>,
    pub mitigator: Option<String>,
}

impl Default for AgentsSection {
    fn default() -> Self {
        Self {
            k: 16,
            t_train: 256,
            detector: None,
            theta: None,
            mitigator: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceSection {
    pub cap: u64,
    pub width: usize,
    pub eta: f64,
    /// Toy support size, uniform weights.
    pub support: usize,
}

impl Default for InstanceSection {
    fn default() -> Self {
        Self {
            cap: 512,
            width: 256,
            eta: 0.5,
            support: 8,
        }
    }
}

pub const TOY_DETECTORS: [&str; 2] = ["toy", "from-mitigator"];
pub const TOY_MITIGATORS: [&str; 2] = ["guessing", "from-detector"];

/// A configuration with every default applied and every name checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub task: TaskKind,
    pub game: GameChoice,
    pub challenger: ChallengerKind,
    pub trials: u64,
    pub seed: u64,
    pub instance_seed: u64,
    pub params: GameParams,
    pub violation_threshold: f64,
    pub budgets: PartyBudgets,
    pub k: u64,
    pub t_train: u64,
    /// Detector name (detection game) or mitigator name (mitigation game).
    pub defender: String,
    pub theta: Option<u64>,
    pub instance: InstanceSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn data_config(&self) -> DataConfig {
        DataConfig {
            n: self.params.n,
            cap: self.instance.cap,
            width: self.instance.width,
        }
    }

    pub fn time_config(&self) -> TimeConfig {
        TimeConfig {
            n: self.params.n,
            horizon: self.agents.t_train,
            cap: self.instance.cap,
            width: self.instance.width,
            eta: self.instance.eta,
            ..TimeConfig::default()
        }
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let task = self
            .task
            .ok_or_else(|| CliError::Config("missing field `task`".into()))?;
        let game = self
            .game
            .ok_or_else(|| CliError::Config("missing field `game`".into()))?;
        let trials = self
            .trials
            .ok_or_else(|| CliError::Config("missing field `trials`".into()))?;
        if trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        let toy = task == TaskKind::ToyClassification;
        let q = self.params.q.unwrap_or(if toy { 32 } else { 1 });
        let params = GameParams::new(self.params.n, self.params.epsilon, self.params.delta, q)?;
        let factor = self.params.violation_factor.unwrap_or(if toy { 7.0 } else { 1.0 });
        if !(factor.is_finite() && factor > 0.0) {
            return Err(CliError::Config(format!(
                "violation_factor must be positive, got {factor}"
            )));
        }
        match task {
            TaskKind::Ldata => self.data_config().validate()?,
            TaskKind::Ltime => self.time_config().validate()?,
            TaskKind::ToyClassification if self.instance.support == 0 => {
                return Err(CliError::Config("support must be positive".into()))
            }
            TaskKind::ToyClassification => {}
        }
        let (k, t) = (self.agents.k, self.agents.t_train);
        if task == TaskKind::Ldata && k == 0 {
            return Err(CliError::Config("k must be positive".into()));
        }

        let defender = match game {
            GameChoice::Dbd => {
                let name = self
                    .agents
                    .detector
                    .clone()
                    .unwrap_or_else(|| if toy { "toy" } else { "never-flag" }.into());
                if toy {
                    check_name(&name, &TOY_DETECTORS, "detector")?;
                } else {
                    BaselineDetector::from_name(&name, self.agents.theta)?;
                }
                name
            }
            GameChoice::Dbm => {
                let name = self
                    .agents
                    .mitigator
                    .clone()
                    .unwrap_or_else(|| if toy { "guessing" } else { "extend" }.into());
                check_name(
                    &name,
                    if toy { &TOY_MITIGATORS[..] } else { &["extend"][..] },
                    "mitigator",
                )?;
                name
            }
        };

        let b = &self.budgets;
        let attacker = self.challenger == ChallengerKind::Attacker;
        let dbm = game == GameChoice::Dbm;
        let (trainer_samples, trainer_steps) = match task {
            TaskKind::ToyClassification => (b.trainer_samples.unwrap_or(64), b.trainer_steps),
            TaskKind::Ldata => (b.trainer_samples.unwrap_or(4 * k), b.trainer_steps),
            TaskKind::Ltime => (b.trainer_samples.unwrap_or(0), Some(b.trainer_steps.unwrap_or(t))),
        };
        let challenger_samples = b.challenger_samples.unwrap_or(match (task, attacker) {
            (_, false) | (TaskKind::ToyClassification, true) => q as u64,
            _ => defense_games::data::DEFAULT_ATTACK_SAMPLES,
        });
        let challenger_steps = match task {
            TaskKind::Ltime => Some(b.challenger_steps.unwrap_or(2 * isqrt(t))),
            _ => b.challenger_steps,
        };
        let defender_samples = b.defender_samples.unwrap_or(match task {
            TaskKind::Ldata if dbm => DataMitigator { k }.suggested_samples(),
            _ => 0,
        });
        let defender_steps = match task {
            TaskKind::Ltime => Some(b.defender_steps.unwrap_or({
                let top = next_level(self.instance.cap)
                    .map_err(CliError::from)?
                    .max(next_level(t.max(1))?);
                q as u64 * isqrt(top)
            })),
            _ => b.defender_steps,
        };

        let required: [(&str, bool, u64); 4] = [
            ("trainer_samples", task != TaskKind::Ltime, trainer_samples),
            ("trainer_steps", task == TaskKind::Ltime, trainer_steps.unwrap_or(0)),
            ("challenger_samples", true, challenger_samples),
            ("defender_samples", task == TaskKind::Ldata && dbm, defender_samples),
        ];
        for (name, needed, value) in required {
            if needed && value == 0 {
                return Err(CliError::Config(format!(
                    "budget {name} must be positive for this experiment"
                )));
            }
        }
        if task == TaskKind::Ltime && dbm && defender_steps == Some(0) {
            return Err(CliError::Config(
                "budget defender_steps must be positive for this experiment".into(),
            ));
        }

        let allowance = |samples, steps: Option<u64>| Allowance { samples, steps };
        Ok(Resolved {
            task,
            game,
            challenger: self.challenger,
            trials,
            seed: self.seed,
            instance_seed: self.instance_seed.unwrap_or(self.seed),
            params,
            violation_threshold: factor * params.epsilon,
            budgets: PartyBudgets {
                trainer: allowance(trainer_samples, trainer_steps),
                challenger: allowance(challenger_samples, challenger_steps),
                defender: allowance(defender_samples, defender_steps),
            },
            k,
            t_train: t,
            defender,
            theta: self.agents.theta,
            instance: self.instance.clone(),
        })
    }
}

fn check_name(name: &str, allowed: &[&str], what: &str) -> Result<()> {
    if allowed.contains(&name) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "unknown {what} {name:?}; expected one of {allowed:?}"
        )))
    }
}
