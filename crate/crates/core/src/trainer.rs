//! Training loop: alternate reward-estimator updates with
//! clipped-surrogate policy updates on freshly collected simulator
//! rollouts, then evaluate greedily on held-out goals.
//!
//! Before the first iteration the estimator is warmed up on one batch
//! of behavior-cloned rollouts, so the entropy bonus in the learned
//! reward never pays for aimless turns. Per iteration: sample
//! demonstration sessions, collect one batch of policy episodes, fit
//! the estimator with minibatched passes over the batch, label the
//! batch with the updated estimator (or the handcrafted terminal
//! reward), compute advantages and run the policy/critic update. All
//! randomness is drawn from streams keyed by (seed, purpose, index), so
//! a resumed run continues exactly where the original would have gone.

use std::io::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::{Algo, TrainingConfig};
use crate::corpus::Corpus;
use crate::dialog::{sparse_to_dense, DialogEngine, Session};
use crate::domain::{sample_goal, Bundle};
use crate::error::{GdplError, Result};
use crate::metrics::{aggregate, evaluate_session, AggregateMetrics, SessionMetrics};
use crate::nn::{Adam, Mlp};
use crate::policy::{
    fill_gae_and_returns, imitation_pretrain, normalize_advantages, ppo_update, PolicyActor,
    Transition,
};
use crate::reward::{
    estimator_epoch, handcrafted_reward, label_rewards, EstimatorConfig, FPoint, RewardEstimator,
};
use crate::rng;
use crate::simulator::SimulatorConfig;
use crate::tracker::state_dim;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// Full training state; everything needed to resume bit-exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub algo: Algo,
    /// Completed training iterations.
    pub iteration: usize,
    pub seed: u64,
    pub bundle_hash: u64,
    pub policy: Mlp,
    pub critic: Mlp,
    pub estimator: Option<RewardEstimator>,
    pub policy_opt: Adam,
    pub critic_opt: Adam,
    pub g_opt: Option<Adam>,
    pub h_opt: Option<Adam>,
    pub skipped_policy_steps: usize,
    pub skipped_estimator_steps: usize,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)
            .map_err(|e| GdplError::Runtime(format!("checkpoint serialization: {e}")))?;
        std::fs::write(path, text).map_err(|e| GdplError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let text = std::fs::read_to_string(path).map_err(|e| GdplError::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| {
            GdplError::Validation(format!("malformed checkpoint {}: {e}", path.display()))
        })?;
        if ckpt.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(GdplError::Validation(format!(
                "unsupported checkpoint schema_version {} (expected {CHECKPOINT_SCHEMA_VERSION})",
                ckpt.schema_version
            )));
        }
        Ok(ckpt)
    }

    pub fn check_bundle(&self, bundle: &Bundle) -> Result<()> {
        if self.bundle_hash != bundle.content_hash() {
            return Err(GdplError::Validation(
                "checkpoint was trained against a different world bundle".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the per-iteration metrics table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: usize,
    /// mean_demo f - mean_policy f after the estimator step.
    pub f_gap: f64,
    pub estimator_loss: f64,
    /// Mean labeled reward per exchange in the batch.
    pub mean_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub success_rate: f64,
    pub inform_f1: f64,
    pub match_rate: f64,
    pub mean_turns: f64,
}

impl IterationRow {
    pub const TSV_HEADER: &'static str = "iteration\tf_gap\testimator_loss\tmean_reward\tpolicy_loss\tvalue_loss\tsuccess_rate\tinform_f1\tmatch_rate\tmean_turns";

    pub fn tsv(&self) -> String {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.4}\t{:.4}\t{:.4}\t{:.3}",
            self.iteration,
            self.f_gap,
            self.estimator_loss,
            self.mean_reward,
            self.policy_loss,
            self.value_loss,
            self.success_rate,
            self.inform_f1,
            self.match_rate,
            self.mean_turns
        )
    }
}

fn log_enabled() -> bool {
    static LEVEL: OnceLock<bool> = OnceLock::new();
    *LEVEL.get_or_init(|| {
        std::env::var("GDPL_LOG")
            .map(|v| v != "off" && v != "0")
            .unwrap_or(true)
    })
}

macro_rules! info {
    ($($arg:tt)*) => {
        if log_enabled() {
            eprintln!($($arg)*);
        }
    };
}

/// Behavior-clone a fresh policy on the corpus and pair it with a fresh
/// critic. Independent of the algorithm, so identical seeds yield
/// identical starting points for every variant.
pub fn pretrain_policy(
    bundle: &Bundle,
    corpus: &Corpus,
    cfg: &TrainingConfig,
) -> Result<(Mlp, Mlp)> {
    cfg.validate()?;
    let dim = state_dim(&bundle.ontology);
    let vocab = bundle.ontology.vocab_size();
    let mut policy = Mlp::new(
        &[dim, cfg.hidden_policy, cfg.hidden_policy, vocab],
        &mut rng::stream(cfg.seed, "init/policy"),
    )?;
    let critic = Mlp::new(
        &[dim, cfg.hidden_policy, cfg.hidden_policy, 1],
        &mut rng::stream(cfg.seed, "init/critic"),
    )?;
    if cfg.pretrain_epochs > 0 {
        let pairs = corpus.state_action_pairs();
        let mut opt = Adam::new(cfg.lr_policy, 0.0, policy.param_count());
        let loss = imitation_pretrain(
            &mut policy,
            &mut opt,
            &pairs,
            cfg.pretrain_epochs,
            cfg.minibatch,
            cfg.grad_clip,
            &mut rng::stream(cfg.seed, "pretrain"),
        )?;
        info!("pretrain: {} pairs, final epoch nll {loss:.4}", pairs.len());
    }
    Ok((policy, critic))
}

/// Assemble a fresh checkpoint around a (possibly pretrained) policy.
pub fn fresh_checkpoint(
    bundle: &Bundle,
    cfg: &TrainingConfig,
    policy: Mlp,
    critic: Mlp,
) -> Result<Checkpoint> {
    cfg.validate()?;
    let dim = state_dim(&bundle.ontology);
    let vocab = bundle.ontology.vocab_size();
    let (estimator, g_opt, h_opt) = if cfg.algo.reward_mode().is_some() {
        let est = RewardEstimator::new(
            dim,
            vocab,
            cfg.hidden_reward,
            cfg.gamma,
            &mut rng::stream(cfg.seed, "init/estimator"),
        )?;
        let g_opt = Adam::new(cfg.lr_estimator, cfg.weight_decay_estimator, est.g.param_count());
        let h_opt = Adam::new(cfg.lr_estimator, cfg.weight_decay_estimator, est.h.param_count());
        (Some(est), Some(g_opt), Some(h_opt))
    } else {
        (None, None, None)
    };
    let policy_opt = Adam::new(cfg.lr_policy, 0.0, policy.param_count());
    let critic_opt = Adam::new(cfg.lr_critic, 0.0, critic.param_count());
    Ok(Checkpoint {
        schema_version: CHECKPOINT_SCHEMA_VERSION,
        algo: cfg.algo,
        iteration: 0,
        seed: cfg.seed,
        bundle_hash: bundle.content_hash(),
        policy,
        critic,
        estimator,
        policy_opt,
        critic_opt,
        g_opt,
        h_opt,
        skipped_policy_steps: 0,
        skipped_estimator_steps: 0,
    })
}

/// Convenience: pretrain + assemble in one go.
pub fn init_checkpoint(bundle: &Bundle, corpus: &Corpus, cfg: &TrainingConfig) -> Result<Checkpoint> {
    let (policy, critic) = pretrain_policy(bundle, corpus, cfg)?;
    fresh_checkpoint(bundle, cfg, policy, critic)
}

/// A collected rollout batch with its episode structure.
struct Batch {
    transitions: Vec<Transition>,
    sessions: Vec<Session>,
    per_session: Vec<SessionMetrics>,
}

fn collect_batch(
    engine: &DialogEngine<'_>,
    bundle: &Bundle,
    ckpt: &Checkpoint,
    cfg: &TrainingConfig,
    label: &str,
    iteration: usize,
) -> Result<Batch> {
    let mut transitions = Vec::new();
    let mut sessions = Vec::with_capacity(cfg.episodes_per_iter);
    let mut per_session = Vec::with_capacity(cfg.episodes_per_iter);
    let mut actor = PolicyActor::sampling(&ckpt.policy, &ckpt.critic);
    for e in 0..cfg.episodes_per_iter {
        let episode = (iteration * cfg.episodes_per_iter + e) as u64;
        let mut r = rng::stream_indexed(ckpt.seed, label, episode);
        let goal = sample_goal(&bundle.ontology, &bundle.database, &bundle.goal_stats, &mut r)?;
        let session = engine.run_episode(goal, &mut actor, &mut r)?;
        let log = actor.take_log();
        if log.len() != session.turns.len() {
            return Err(GdplError::Runtime(format!(
                "actor log ({}) and session turns ({}) misaligned",
                log.len(),
                session.turns.len()
            )));
        }
        for (turn, sampled) in session.turns.iter().zip(log) {
            transitions.push(Transition {
                state: turn.state.clone(),
                action: sampled.action,
                log_prob: sampled.log_prob,
                value: sampled.value,
                reward: 0.0,
                advantage: 0.0,
                ret: 0.0,
                terminal: turn.terminal,
            });
        }
        per_session.push(evaluate_session(bundle, &session)?);
        sessions.push(session);
    }
    Ok(Batch {
        transitions,
        sessions,
        per_session,
    })
}

/// Expand an in-order turn sequence (one episode, or a whole rollout
/// whose episodes each end in a terminal turn) into estimator points;
/// the successor of each non-terminal turn is the next turn's state.
fn session_points(
    dim: usize,
    vocab: usize,
    turns: impl Iterator<Item = (Vec<u32>, Vec<usize>, f64, bool)>,
) -> Vec<FPoint> {
    let raw: Vec<(Vec<f64>, Vec<f64>, f64, bool)> = turns
        .map(|(sparse, acts, log_prob, terminal)| {
            let state = sparse_to_dense(&sparse, dim);
            let mut action = vec![0.0; vocab];
            for a in acts {
                action[a] = 1.0;
            }
            (state, action, log_prob, terminal)
        })
        .collect();
    let mut points = Vec::with_capacity(raw.len());
    for i in 0..raw.len() {
        let terminal = raw[i].3;
        let next_state = if terminal {
            None
        } else {
            raw.get(i + 1).map(|n| n.0.clone())
        };
        points.push(FPoint {
            state: raw[i].0.clone(),
            action: raw[i].1.clone(),
            next_state,
            log_prob: raw[i].2,
        });
    }
    points
}

/// Draw up to `count` demonstration sessions without replacement and
/// flatten them into estimator points, refreshing each point's density
/// under the current policy when the estimator loss needs it.
fn demo_points_batch(
    corpus: &Corpus,
    policy: &Mlp,
    dim: usize,
    vocab: usize,
    count: usize,
    needs_log_prob: bool,
    rng: &mut rng::Rng,
) -> Vec<FPoint> {
    let mut idx: Vec<usize> = (0..corpus.sessions.len()).collect();
    idx.shuffle(rng);
    idx.truncate(count.min(corpus.sessions.len()));
    idx.iter()
        .flat_map(|&s| {
            let session = &corpus.sessions[s];
            session_points(
                dim,
                vocab,
                session
                    .turns
                    .iter()
                    .map(|t| (t.state.clone(), t.act_indices.clone(), 0.0, t.terminal)),
            )
        })
        .map(|mut p| {
            if needs_log_prob {
                let logits = policy.forward(&p.state);
                let action: Vec<bool> = p.action.iter().map(|a| *a != 0.0).collect();
                p.log_prob = crate::policy::action_log_prob(&logits, &action);
            }
            p
        })
        .collect()
}

fn policy_points_of(dim: usize, vocab: usize, transitions: &[Transition]) -> Vec<FPoint> {
    session_points(
        dim,
        vocab,
        transitions
            .iter()
            .map(|t| (t.state.clone(), t.action.clone(), t.log_prob, t.terminal)),
    )
}

/// Run `iterations` additional training iterations, appending rows to
/// `metrics.tsv` in `out_dir` and checkpointing periodically.
pub fn train(
    bundle: &Bundle,
    corpus: &Corpus,
    sim: SimulatorConfig,
    cfg: &TrainingConfig,
    ckpt: &mut Checkpoint,
    out_dir: &Path,
    iterations: usize,
) -> Result<Vec<IterationRow>> {
    cfg.validate()?;
    ckpt.check_bundle(bundle)?;
    if ckpt.algo != cfg.algo {
        return Err(GdplError::Validation(format!(
            "checkpoint algo {} does not match configured {}",
            ckpt.algo, cfg.algo
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| GdplError::io(out_dir, e))?;
    let engine = DialogEngine::new(bundle, sim)?;
    let dim = state_dim(&bundle.ontology);
    let vocab = bundle.ontology.vocab_size();
    let metrics_path = out_dir.join("metrics.tsv");
    let mut metrics_file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&metrics_path)
        .map_err(|e| GdplError::io(&metrics_path, e))?;
    if ckpt.iteration == 0 {
        writeln!(metrics_file, "{}", IterationRow::TSV_HEADER)
            .map_err(|e| GdplError::io(&metrics_path, e))?;
    }

    let est_cfg = cfg.algo.reward_mode().map(|(loss, delivery)| {
        (
            EstimatorConfig {
                lr: cfg.lr_estimator,
                weight_decay: cfg.weight_decay_estimator,
                grad_clip: cfg.grad_clip,
                loss,
                gap_cap: cfg.estimator_gap_cap,
            },
            delivery,
        )
    });

    if ckpt.iteration == 0 && iterations > 0 && cfg.estimator_warmup_epochs > 0 {
        if let Some((est_config, _)) = &est_cfg {
            let batch = collect_batch(&engine, bundle, ckpt, cfg, "warmup/episode", 0)?;
            let mut warm_rng = rng::stream(ckpt.seed, "warmup/demo");
            let needs_log_prob = est_config.loss == crate::reward::RewardLoss::Bce;
            let demo_points = demo_points_batch(
                corpus,
                &ckpt.policy,
                dim,
                vocab,
                cfg.demo_sessions_per_iter,
                needs_log_prob,
                &mut warm_rng,
            );
            let policy_points = policy_points_of(dim, vocab, &batch.transitions);
            let est = ckpt.estimator.as_mut().ok_or_else(|| {
                GdplError::Runtime("checkpoint estimator does not match algorithm".into())
            })?;
            let stats = estimator_epoch(
                est,
                ckpt.g_opt.as_mut().expect("estimator optimizer"),
                ckpt.h_opt.as_mut().expect("estimator optimizer"),
                &demo_points,
                &policy_points,
                cfg.minibatch,
                cfg.estimator_warmup_epochs,
                est_config,
                &mut warm_rng,
            )?;
            ckpt.skipped_estimator_steps += stats.skipped_steps;
            info!(
                "[{}] estimator warm-up: {} epochs, f_gap {:+.3}",
                cfg.algo, cfg.estimator_warmup_epochs, stats.f_gap
            );
        }
    }

    let mut rows = Vec::with_capacity(iterations);
    let start = ckpt.iteration;
    for it in start..start + iterations {
        let mut batch = collect_batch(&engine, bundle, ckpt, cfg, "train/episode", it)?;

        let (f_gap, est_loss) = match (&est_cfg, ckpt.estimator.as_mut()) {
            (Some((est_config, delivery)), Some(est)) => {
                // Fresh demonstration pool, drawn without replacement.
                let mut demo_rng = rng::stream_indexed(ckpt.seed, "train/demo", it as u64);
                let needs_log_prob = est_config.loss == crate::reward::RewardLoss::Bce;
                let demo_points = demo_points_batch(
                    corpus,
                    &ckpt.policy,
                    dim,
                    vocab,
                    cfg.demo_sessions_per_iter,
                    needs_log_prob,
                    &mut demo_rng,
                );
                let policy_points = policy_points_of(dim, vocab, &batch.transitions);

                let stats = estimator_epoch(
                    est,
                    ckpt.g_opt.as_mut().expect("estimator optimizer"),
                    ckpt.h_opt.as_mut().expect("estimator optimizer"),
                    &demo_points,
                    &policy_points,
                    cfg.minibatch,
                    cfg.estimator_epochs,
                    est_config,
                    &mut demo_rng,
                )?;
                ckpt.skipped_estimator_steps += stats.skipped_steps;

                label_rewards(est, &policy_points, &mut batch.transitions, *delivery)?;
                crate::policy::normalize_rewards(&mut batch.transitions);
                (stats.f_gap, stats.loss)
            }
            (None, None) => {
                let mut offset = 0;
                for (session, metrics) in batch.sessions.iter().zip(&batch.per_session) {
                    let n = session.turns.len();
                    for (k, t) in batch.transitions[offset..offset + n].iter_mut().enumerate() {
                        t.reward =
                            handcrafted_reward(k + 1 == n, metrics.success, sim.max_turns);
                    }
                    offset += n;
                }
                (0.0, 0.0)
            }
            _ => {
                return Err(GdplError::Runtime(
                    "checkpoint estimator does not match algorithm".into(),
                ))
            }
        };

        if batch.transitions.iter().any(|t| !t.reward.is_finite()) {
            return Err(GdplError::Runtime(format!(
                "non-finite reward labels at iteration {it}"
            )));
        }
        let mean_reward = batch.transitions.iter().map(|t| t.reward).sum::<f64>()
            / batch.transitions.len() as f64;

        fill_gae_and_returns(&mut batch.transitions, cfg.gamma, cfg.lambda);
        normalize_advantages(&mut batch.transitions);
        let stats = ppo_update(
            &mut ckpt.policy,
            &mut ckpt.critic,
            &mut ckpt.policy_opt,
            &mut ckpt.critic_opt,
            &batch.transitions,
            &cfg.ppo(),
            &mut rng::stream_indexed(ckpt.seed, "train/ppo", it as u64),
        )?;
        ckpt.skipped_policy_steps += stats.skipped_steps;

        let agg = aggregate(&batch.per_session)?;
        let row = IterationRow {
            iteration: it + 1,
            f_gap,
            estimator_loss: est_loss,
            mean_reward,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            success_rate: agg.success_rate,
            inform_f1: agg.inform_f1,
            match_rate: agg.match_rate,
            mean_turns: agg.mean_turns,
        };
        writeln!(metrics_file, "{}", row.tsv()).map_err(|e| GdplError::io(&metrics_path, e))?;
        if (it + 1) % 10 == 0 {
            info!(
                "[{}] iter {:>4} success {:.3} f1 {:.3} match {:.3} turns {:.1} f_gap {:+.3}",
                cfg.algo, it + 1, row.success_rate, row.inform_f1, row.match_rate,
                row.mean_turns, row.f_gap
            );
        }
        rows.push(row);
        ckpt.iteration = it + 1;

        if (it + 1) % cfg.checkpoint_every == 0 {
            ckpt.save(&out_dir.join("checkpoint.json"))?;
        }
    }
    ckpt.save(&out_dir.join("checkpoint.json"))?;
    metrics_file
        .flush()
        .map_err(|e| GdplError::io(&metrics_path, e))?;
    Ok(rows)
}

/// Greedy evaluation on fresh goals, with estimated (or handcrafted)
/// per-session returns and per-turn reward traces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalOutput {
    pub aggregate: AggregateMetrics,
    pub per_session: Vec<SessionMetrics>,
    /// Discount-free per-session return of the labeled rewards.
    pub returns: Vec<f64>,
    /// Per-session per-turn learned rewards; empty without an estimator.
    pub reward_traces: Vec<Vec<f64>>,
}

pub fn evaluate(
    bundle: &Bundle,
    ckpt: &Checkpoint,
    sim: SimulatorConfig,
    goals: usize,
    seed: u64,
) -> Result<EvalOutput> {
    if goals == 0 {
        return Err(GdplError::Validation("eval goals must be positive".into()));
    }
    let engine = DialogEngine::new(bundle, sim)?;
    let dim = state_dim(&bundle.ontology);
    let vocab = bundle.ontology.vocab_size();
    let mut per_session = Vec::with_capacity(goals);
    let mut returns = Vec::with_capacity(goals);
    let mut traces = Vec::new();

    let mut actor = PolicyActor::greedy(&ckpt.policy);
    for i in 0..goals {
        let mut r = rng::stream_indexed(seed, "eval/episode", i as u64);
        let goal = sample_goal(&bundle.ontology, &bundle.database, &bundle.goal_stats, &mut r)?;
        let session = engine.run_episode(goal, &mut actor, &mut r)?;
        let log = actor.take_log();
        let metrics = evaluate_session(bundle, &session)?;

        match &ckpt.estimator {
            Some(est) => {
                let points = session_points(
                    dim,
                    vocab,
                    session
                        .turns
                        .iter()
                        .zip(&log)
                        .map(|(t, s)| {
                            (t.state.clone(), s.action.clone(), s.log_prob, t.terminal)
                        }),
                );
                let rewards = crate::reward::estimated_turn_rewards(est, &points);
                returns.push(rewards.iter().sum());
                traces.push(rewards);
            }
            None => {
                let n = session.turns.len();
                let total: f64 = (0..n)
                    .map(|k| handcrafted_reward(k + 1 == n, metrics.success, sim.max_turns))
                    .sum();
                returns.push(total);
            }
        }
        per_session.push(metrics);
    }

    Ok(EvalOutput {
        aggregate: aggregate(&per_session)?,
        per_session,
        returns,
        reward_traces: traces,
    })
}

/// One greedy policy session with its per-turn reward labels:
/// estimated rewards when the checkpoint carries an estimator, the
/// handcrafted schedule otherwise.
pub fn policy_trace(
    bundle: &Bundle,
    ckpt: &Checkpoint,
    sim: SimulatorConfig,
    goal: crate::domain::UserGoal,
    seed: u64,
) -> Result<(Session, Vec<f64>)> {
    let engine = DialogEngine::new(bundle, sim)?;
    let mut actor = PolicyActor::greedy(&ckpt.policy);
    let mut r = rng::stream(seed, "trace/policy");
    let session = engine.run_episode(goal, &mut actor, &mut r)?;
    let log = actor.take_log();
    let rewards = match &ckpt.estimator {
        Some(est) => {
            let dim = state_dim(&bundle.ontology);
            let vocab = bundle.ontology.vocab_size();
            let points = session_points(
                dim,
                vocab,
                session
                    .turns
                    .iter()
                    .zip(&log)
                    .map(|(t, s)| (t.state.clone(), s.action.clone(), s.log_prob, t.terminal)),
            );
            crate::reward::estimated_turn_rewards(est, &points)
        }
        None => {
            let metrics = evaluate_session(bundle, &session)?;
            let n = session.turns.len();
            (0..n)
                .map(|k| handcrafted_reward(k + 1 == n, metrics.success, sim.max_turns))
                .collect()
        }
    };
    Ok((session, rewards))
}

/// Per-turn learned rewards along one expert-driven session, scoring
/// the expert's acts with the checkpoint's policy density. Used for
/// reward-trace inspection on scripted dialogs.
pub fn expert_trace(
    bundle: &Bundle,
    ckpt: &Checkpoint,
    sim: SimulatorConfig,
    goal: crate::domain::UserGoal,
    epsilon: f64,
    seed: u64,
) -> Result<(Session, Vec<f64>)> {
    let est = ckpt
        .estimator
        .as_ref()
        .ok_or_else(|| GdplError::Validation("checkpoint has no reward estimator".into()))?;
    let engine = DialogEngine::new(bundle, sim)?;
    let mut expert = crate::corpus::ExpertPolicy::new(epsilon)?;
    let mut r = rng::stream(seed, "trace/expert");
    let session = engine.run_episode(goal, &mut expert, &mut r)?;
    let dim = state_dim(&bundle.ontology);
    let vocab = bundle.ontology.vocab_size();
    let points = session_points(
        dim,
        vocab,
        session.turns.iter().map(|t| {
            (t.state.clone(), t.act_indices.clone(), 0.0, t.terminal)
        }),
    )
    .into_iter()
    .map(|mut p| {
        let logits = ckpt.policy.forward(&p.state);
        let action: Vec<bool> = p.action.iter().map(|a| *a != 0.0).collect();
        p.log_prob = crate::policy::action_log_prob(&logits, &action);
        p
    })
    .collect::<Vec<_>>();
    let rewards = crate::reward::estimated_turn_rewards(est, &points);
    Ok((session, rewards))
}
