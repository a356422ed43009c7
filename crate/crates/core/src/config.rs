//! Experiment configuration: algorithm selection, training
//! hyper-parameters, simulator knobs and evaluation settings, loadable
//! from TOML with unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{GdplError, Result};
use crate::policy::PpoConfig;
use crate::reward::{RewardDelivery, RewardLoss};
use crate::simulator::SimulatorConfig;

/// Training algorithm. The learned-reward variants differ in how the
/// estimator is trained and when its reward reaches the policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    /// Learned per-turn reward, direct objective.
    Gdpl,
    /// Handcrafted terminal reward, no estimator.
    PpoHandcrafted,
    /// Discriminator-trained estimator, session-level reward.
    Aldm,
    /// Direct objective, session-level reward.
    GdplSess,
    /// Discriminator-trained estimator, per-turn reward.
    GdplDiscr,
}

impl Algo {
    pub const ALL: [Algo; 5] = [
        Algo::Gdpl,
        Algo::PpoHandcrafted,
        Algo::Aldm,
        Algo::GdplSess,
        Algo::GdplDiscr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Gdpl => "gdpl",
            Algo::PpoHandcrafted => "ppo-handcrafted",
            Algo::Aldm => "aldm",
            Algo::GdplSess => "gdpl-sess",
            Algo::GdplDiscr => "gdpl-discr",
        }
    }

    pub fn parse(s: &str) -> Result<Algo> {
        Algo::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                GdplError::Usage(format!(
                    "unknown algorithm `{s}` (expected one of: {})",
                    Algo::ALL.map(|a| a.as_str()).join(", ")
                ))
            })
    }

    /// Estimator loss and reward delivery; None for the handcrafted
    /// baseline.
    pub fn reward_mode(self) -> Option<(RewardLoss, RewardDelivery)> {
        match self {
            Algo::Gdpl => Some((RewardLoss::Direct, RewardDelivery::Turn)),
            Algo::GdplSess => Some((RewardLoss::Direct, RewardDelivery::Session)),
            Algo::GdplDiscr => Some((RewardLoss::Bce, RewardDelivery::Turn)),
            Algo::Aldm => Some((RewardLoss::Bce, RewardDelivery::Session)),
            Algo::PpoHandcrafted => None,
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_iterations() -> usize {
    200
}
fn default_episodes() -> usize {
    32
}
fn default_hidden() -> usize {
    100
}
fn default_lr() -> f64 {
    1e-4
}
fn default_weight_decay() -> f64 {
    1e-5
}
fn default_pretrain_epochs() -> usize {
    5
}
fn default_checkpoint_every() -> usize {
    50
}

/// Training section.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub algo: Algo,
    pub seed: u64,
    pub iterations: usize,
    pub episodes_per_iter: usize,
    /// Hidden width of the two-hidden-layer policy and critic.
    pub hidden_policy: usize,
    /// Hidden width of the one-hidden-layer estimator nets.
    pub hidden_reward: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub clip_eps: f64,
    pub lr_policy: f64,
    pub lr_critic: f64,
    pub lr_estimator: f64,
    pub weight_decay_estimator: f64,
    pub minibatch: usize,
    pub ppo_epochs: usize,
    /// Minibatched passes over each iteration's policy turns when
    /// fitting the reward estimator.
    pub estimator_epochs: usize,
    /// Demonstration sessions drawn per iteration as the estimator's
    /// positive pool; larger pools smooth out subset-to-subset jitter
    /// in the learned reward.
    pub demo_sessions_per_iter: usize,
    /// Estimator passes over one behavior-cloned rollout batch before
    /// reinforcement starts, so the learned reward is already
    /// discriminative at the first policy update; 0 skips the warm-up.
    pub estimator_warmup_epochs: usize,
    /// Estimator updates pause while mean demonstration f exceeds mean
    /// policy f by more than this margin, keeping the two sides of the
    /// adversarial game in step; `inf` removes the brake.
    pub estimator_gap_cap: f64,
    pub grad_clip: f64,
    /// Imitation epochs before reinforcement starts.
    pub pretrain_epochs: usize,
    pub checkpoint_every: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let ppo = PpoConfig::default();
        TrainingConfig {
            algo: Algo::Gdpl,
            seed: 0,
            iterations: default_iterations(),
            episodes_per_iter: default_episodes(),
            hidden_policy: default_hidden(),
            hidden_reward: default_hidden(),
            gamma: ppo.gamma,
            lambda: ppo.lambda,
            clip_eps: ppo.clip_eps,
            lr_policy: default_lr(),
            lr_critic: default_lr(),
            lr_estimator: default_lr(),
            weight_decay_estimator: default_weight_decay(),
            minibatch: ppo.minibatch,
            ppo_epochs: ppo.epochs,
            estimator_epochs: 1,
            demo_sessions_per_iter: 128,
            estimator_warmup_epochs: 4,
            estimator_gap_cap: 1.0,
            grad_clip: ppo.grad_clip,
            pretrain_epochs: default_pretrain_epochs(),
            checkpoint_every: default_checkpoint_every(),
        }
    }
}

impl TrainingConfig {
    pub fn ppo(&self) -> PpoConfig {
        PpoConfig {
            gamma: self.gamma,
            lambda: self.lambda,
            clip_eps: self.clip_eps,
            lr: self.lr_policy,
            minibatch: self.minibatch,
            epochs: self.ppo_epochs,
            grad_clip: self.grad_clip,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ppo().validate()?;
        if self.iterations == 0 || self.episodes_per_iter == 0 {
            return Err(GdplError::Validation(
                "iterations and episodes_per_iter must be positive".into(),
            ));
        }
        if self.hidden_policy == 0 || self.hidden_reward == 0 {
            return Err(GdplError::Validation(
                "hidden layer widths must be positive".into(),
            ));
        }
        if self.lr_critic <= 0.0 || self.lr_estimator <= 0.0 {
            return Err(GdplError::Validation(
                "learning rates must be positive".into(),
            ));
        }
        if self.weight_decay_estimator < 0.0 {
            return Err(GdplError::Validation(
                "weight decay must be nonnegative".into(),
            ));
        }
        if self.estimator_epochs == 0 {
            return Err(GdplError::Validation(
                "estimator_epochs must be positive".into(),
            ));
        }
        if self.demo_sessions_per_iter == 0 {
            return Err(GdplError::Validation(
                "demo_sessions_per_iter must be positive".into(),
            ));
        }
        if !(self.estimator_gap_cap > 0.0) {
            return Err(GdplError::Validation(
                "estimator_gap_cap must be positive".into(),
            ));
        }
        if self.checkpoint_every == 0 {
            return Err(GdplError::Validation(
                "checkpoint_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn default_eval_goals() -> usize {
    1000
}

/// Evaluation section.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub goals: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            goals: default_eval_goals(),
            seed: 1_000_003,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.goals == 0 {
            return Err(GdplError::Validation("eval goals must be positive".into()));
        }
        Ok(())
    }
}

/// Input/output locations.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub bundle: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

/// Full experiment configuration file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub paths: PathsConfig,
    pub simulator: SimulatorConfig,
    pub training: TrainingConfig,
    pub evaluation: EvalConfig,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.simulator.validate()?;
        self.training.validate()?;
        self.evaluation.validate()
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| GdplError::io(path, e))?;
        let config: Config = toml::from_str(&text).map_err(|e| {
            GdplError::Validation(format!("malformed config {}: {e}", path.display()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| GdplError::Runtime(format!("config serialization: {e}")))?;
        std::fs::write(path, text).map_err(|e| GdplError::io(path, e))
    }
}
