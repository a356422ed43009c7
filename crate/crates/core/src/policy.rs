//! Dialog policy and critic: a multi-label Bernoulli head over the act
//! vocabulary, generalized advantage estimation, the clipped-surrogate
//! policy update and imitation pretraining.
//!
//! The policy samples each act independently from sigmoid logits; the
//! log probability of an act set is the sum of per-act Bernoulli terms.
//! An empty sample is executed as the generic acknowledge act while the
//! recorded action stays the empty set, so importance ratios are always
//! computed against what was actually drawn.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dialog::{sparse_to_dense, SystemActor, SystemDecision, TurnView};
use crate::error::{GdplError, Result};
use crate::nn::{clip_global_norm, sigmoid, softplus, Adam, Mlp};
use crate::rng::Rng;

/// Log probability of a multi-hot act set under the logits:
/// sum over acts of log sigmoid(z) or log(1 - sigmoid(z)).
pub fn action_log_prob(logits: &[f64], action: &[bool]) -> f64 {
    debug_assert_eq!(logits.len(), action.len());
    logits
        .iter()
        .zip(action.iter())
        .map(|(z, a)| if *a { -softplus(-z) } else { -softplus(*z) })
        .sum()
}

/// d log prob / d logits for a multi-hot act set: a_i - sigmoid(z_i).
pub fn action_log_prob_grad(logits: &[f64], action: &[bool]) -> Vec<f64> {
    logits
        .iter()
        .zip(action.iter())
        .map(|(z, a)| f64::from(*a) - sigmoid(*z))
        .collect()
}

/// One policy-environment interaction, as used for learning.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Transition {
    /// Sparse 1-entries of the binary state vector.
    pub state: Vec<u32>,
    /// Sampled act indices (may be empty; the executed fallback act is
    /// environment-side).
    pub action: Vec<usize>,
    /// Behavior log probability at sampling time.
    pub log_prob: f64,
    /// Critic value at sampling time.
    pub value: f64,
    pub reward: f64,
    pub advantage: f64,
    /// Discounted Monte-Carlo return of the labeled rewards.
    pub ret: f64,
    pub terminal: bool,
}

/// Fill advantages (GAE) and Monte-Carlo return targets in place.
/// Transitions must be ordered, episodes delimited by `terminal`.
pub fn fill_gae_and_returns(transitions: &mut [Transition], gamma: f64, lambda: f64) {
    let mut start = 0;
    for i in 0..transitions.len() {
        if transitions[i].terminal || i + 1 == transitions.len() {
            let episode = &mut transitions[start..=i];
            let mut next_value = 0.0;
            let mut next_adv = 0.0;
            let mut next_ret = 0.0;
            for t in episode.iter_mut().rev() {
                let delta = t.reward + gamma * next_value - t.value;
                t.advantage = delta + gamma * lambda * next_adv;
                t.ret = t.reward + gamma * next_ret;
                next_value = t.value;
                next_adv = t.advantage;
                next_ret = t.ret;
            }
            start = i + 1;
        }
    }
}

/// Standardize rewards across the whole batch, then clip to three
/// standard deviations. Learned rewards carry no natural scale and
/// drift as the estimator updates; standardizing keeps the critic's
/// target range fixed and makes the batch-mean turn reward zero, so
/// padding an episode with extra turns earns nothing in expectation.
/// The clip bounds the density term's surprise spikes: a rare
/// off-policy sample would otherwise be paid handsomely for its own
/// unlikeliness.
pub fn normalize_rewards(transitions: &mut [Transition]) {
    let n = transitions.len();
    if n < 2 {
        return;
    }
    let mean = transitions.iter().map(|t| t.reward).sum::<f64>() / n as f64;
    let var = transitions
        .iter()
        .map(|t| (t.reward - mean).powi(2))
        .sum::<f64>()
        / n as f64;
    let std = var.sqrt().max(1e-8);
    for t in transitions.iter_mut() {
        t.reward = ((t.reward - mean) / std).clamp(-3.0, 3.0);
    }
}

/// Standardize advantages across the whole batch (applied once, before
/// the update epochs).
pub fn normalize_advantages(transitions: &mut [Transition]) {
    let n = transitions.len();
    if n < 2 {
        return;
    }
    let mean = transitions.iter().map(|t| t.advantage).sum::<f64>() / n as f64;
    let var = transitions
        .iter()
        .map(|t| (t.advantage - mean).powi(2))
        .sum::<f64>()
        / n as f64;
    let std = var.sqrt().max(1e-8);
    for t in transitions.iter_mut() {
        t.advantage = (t.advantage - mean) / std;
    }
}

/// Scalar clipped-surrogate objective for one transition; exposed for
/// oracle tests.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps);
    (ratio * advantage).min(clipped * advantage)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip_eps: f64,
    pub lr: f64,
    pub minibatch: usize,
    pub epochs: usize,
    pub grad_clip: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            lambda: 0.95,
            clip_eps: 0.2,
            lr: 1e-4,
            minibatch: 32,
            epochs: 4,
            grad_clip: 10.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.lambda) {
            return Err(GdplError::Validation(
                "gamma and lambda must lie in [0,1]".into(),
            ));
        }
        if self.clip_eps <= 0.0 || self.lr <= 0.0 || self.grad_clip <= 0.0 {
            return Err(GdplError::Validation(
                "clip_eps, lr and grad_clip must be positive".into(),
            ));
        }
        if self.minibatch == 0 || self.epochs == 0 {
            return Err(GdplError::Validation(
                "minibatch and epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one policy/critic update over a rollout.
#[derive(Clone, Copy, Debug, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    /// Minibatch steps skipped because a gradient went non-finite.
    pub skipped_steps: usize,
}

/// Run the clipped-surrogate update: `epochs` passes of shuffled
/// minibatches, one optimizer step each for policy and critic.
#[allow(clippy::too_many_arguments)]
pub fn ppo_update(
    policy: &mut Mlp,
    critic: &mut Mlp,
    policy_opt: &mut Adam,
    critic_opt: &mut Adam,
    transitions: &[Transition],
    config: &PpoConfig,
    rng: &mut Rng,
) -> Result<UpdateStats> {
    config.validate()?;
    if transitions.is_empty() {
        return Err(GdplError::Runtime("empty rollout in policy update".into()));
    }
    let dim = policy.n_in();
    let vocab = policy.n_out();
    let mut order: Vec<usize> = (0..transitions.len()).collect();
    let mut stats = UpdateStats::default();
    let mut batches = 0usize;

    for _ in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(config.minibatch) {
            let mut policy_grads = vec![0.0; policy.param_count()];
            let mut critic_grads = vec![0.0; critic.param_count()];
            let mut policy_loss = 0.0;
            let mut value_loss = 0.0;
            let scale = 1.0 / chunk.len() as f64;

            for &i in chunk {
                let t = &transitions[i];
                let state = sparse_to_dense(&t.state, dim);
                let mut action = vec![false; vocab];
                for a in &t.action {
                    action[*a] = true;
                }

                let acts = policy.forward_cached(&state);
                let logits = acts.output().to_vec();
                let log_prob = action_log_prob(&logits, &action);
                let ratio = (log_prob - t.log_prob).exp();
                policy_loss -= scale * clipped_surrogate(ratio, t.advantage, config.clip_eps);

                // Gradient flows only while the unclipped branch is the
                // active minimum; a strictly smaller clipped branch has
                // zero derivative in the ratio.
                let surr_unclipped = ratio * t.advantage;
                let surr_clipped =
                    ratio.clamp(1.0 - config.clip_eps, 1.0 + config.clip_eps) * t.advantage;
                if surr_unclipped <= surr_clipped {
                    let coeff = -scale * t.advantage * ratio;
                    let d_logits: Vec<f64> = action_log_prob_grad(&logits, &action)
                        .into_iter()
                        .map(|g| coeff * g)
                        .collect();
                    policy.backprop(&state, &acts, &d_logits, &mut policy_grads);
                }

                let v_acts = critic.forward_cached(&state);
                let v = v_acts.output()[0];
                let err = v - t.ret;
                value_loss += scale * err * err;
                critic.backprop(&state, &v_acts, &[scale * 2.0 * err], &mut critic_grads);
            }

            clip_global_norm(&mut policy_grads, config.grad_clip);
            clip_global_norm(&mut critic_grads, config.grad_clip);
            let finite = policy_grads.iter().chain(critic_grads.iter()).all(|g| g.is_finite());
            if finite {
                policy_opt.step(&mut policy.params, &policy_grads);
                critic_opt.step(&mut critic.params, &critic_grads);
                stats.policy_loss += policy_loss;
                stats.value_loss += value_loss;
                batches += 1;
            } else {
                stats.skipped_steps += 1;
            }
        }
    }
    if batches > 0 {
        stats.policy_loss /= batches as f64;
        stats.value_loss /= batches as f64;
    }
    Ok(stats)
}

/// Behavior-clone the policy on demonstration (state, act set) pairs:
/// `epochs` passes of shuffled minibatches minimizing the mean negative
/// log likelihood. Returns the final-epoch mean loss.
pub fn imitation_pretrain(
    policy: &mut Mlp,
    opt: &mut Adam,
    pairs: &[(&[u32], &[usize])],
    epochs: usize,
    minibatch: usize,
    grad_clip: f64,
    rng: &mut Rng,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(GdplError::Validation("no demonstration pairs".into()));
    }
    if minibatch == 0 || epochs == 0 {
        return Err(GdplError::Validation(
            "minibatch and epochs must be positive".into(),
        ));
    }
    let dim = policy.n_in();
    let vocab = policy.n_out();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut last_epoch_loss = 0.0;

    for _ in 0..epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(minibatch) {
            let mut grads = vec![0.0; policy.param_count()];
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let (sparse, act_indices) = pairs[i];
                let state = sparse_to_dense(sparse, dim);
                let mut action = vec![false; vocab];
                for a in act_indices {
                    action[*a] = true;
                }
                let acts = policy.forward_cached(&state);
                let logits = acts.output().to_vec();
                epoch_loss -= action_log_prob(&logits, &action) / pairs.len() as f64;
                let d_logits: Vec<f64> = action_log_prob_grad(&logits, &action)
                    .into_iter()
                    .map(|g| -scale * g)
                    .collect();
                policy.backprop(&state, &acts, &d_logits, &mut grads);
            }
            clip_global_norm(&mut grads, grad_clip);
            if grads.iter().all(|g| g.is_finite()) {
                opt.step(&mut policy.params, &grads);
            }
        }
        last_epoch_loss = epoch_loss;
    }
    Ok(last_epoch_loss)
}

/// Per-turn sampling metadata kept by the policy actor, aligned with
/// the engine's turn records.
#[derive(Clone, Debug)]
pub struct SampledTurn {
    /// Sampled act indices, possibly empty (fallback executed instead).
    pub action: Vec<usize>,
    pub log_prob: f64,
    pub value: f64,
}

/// Drives the system side with the learned policy.
pub struct PolicyActor<'a> {
    policy: &'a Mlp,
    critic: Option<&'a Mlp>,
    /// Sample acts (training) or threshold at 0.5 (evaluation).
    greedy: bool,
    log: Vec<SampledTurn>,
}

impl<'a> PolicyActor<'a> {
    pub fn sampling(policy: &'a Mlp, critic: &'a Mlp) -> PolicyActor<'a> {
        PolicyActor {
            policy,
            critic: Some(critic),
            greedy: false,
            log: Vec::new(),
        }
    }

    pub fn greedy(policy: &'a Mlp) -> PolicyActor<'a> {
        PolicyActor {
            policy,
            critic: None,
            greedy: true,
            log: Vec::new(),
        }
    }

    /// Per-turn sampling log for the episodes driven so far.
    pub fn take_log(&mut self) -> Vec<SampledTurn> {
        std::mem::take(&mut self.log)
    }
}

impl SystemActor for PolicyActor<'_> {
    fn act(&mut self, view: &TurnView<'_>, rng: &mut Rng) -> Result<SystemDecision> {
        let logits = self.policy.forward(view.state);
        let mut sampled = Vec::new();
        let mut action = vec![false; logits.len()];
        if self.greedy {
            for (i, z) in logits.iter().enumerate() {
                if *z > 0.0 {
                    sampled.push(i);
                    action[i] = true;
                }
            }
        } else {
            for (i, z) in logits.iter().enumerate() {
                if rng.gen_bool(sigmoid(*z)) {
                    sampled.push(i);
                    action[i] = true;
                }
            }
        }
        let log_prob = action_log_prob(&logits, &action);
        let value = self
            .critic
            .map(|c| c.forward(view.state)[0])
            .unwrap_or(0.0);

        let executed = if sampled.is_empty() {
            vec![view.bundle.ontology.ack_index()]
        } else {
            sampled.clone()
        };
        self.log.push(SampledTurn {
            action: sampled,
            log_prob,
            value,
        });
        Ok(SystemDecision {
            act_indices: executed,
            log_prob,
            value,
        })
    }
}
