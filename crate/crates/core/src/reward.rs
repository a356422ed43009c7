//! Learned per-turn reward estimation, trained adversarially against
//! the policy, plus the handcrafted terminal-reward baseline.
//!
//! The estimator decomposes as f(s, a, s') = g(s, a) + gamma*h(s') -
//! h(s): g scores the act choice, h is a potential whose telescoping
//! difference cannot change the optimal policy. Terminal transitions
//! treat the successor as an absorbing state with zero potential. The
//! estimator either directly maximizes the mean-f gap between
//! demonstrations and policy rollouts or trains as a logistic
//! discriminator on the logit f - log pi; rewards are delivered per
//! turn (f - log pi each exchange) or as one session-level sum at the
//! end.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{GdplError, Result};
use crate::nn::{sigmoid, softplus, Adam, Mlp};
use crate::policy::Transition;
use crate::rng::Rng;

/// How the estimator is trained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardLoss {
    /// Maximize E_demo[f] - E_policy[f] directly.
    Direct,
    /// Logistic discriminator on the logit f - log pi.
    Bce,
}

/// When the learned reward reaches the policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardDelivery {
    /// r_t = f_t - log pi_t every exchange.
    Turn,
    /// One terminal reward equal to the session sum of f_t - log pi_t.
    Session,
}

/// One (s, a, s') evaluation point for the estimator.
#[derive(Clone, Debug)]
pub struct FPoint {
    pub state: Vec<f64>,
    /// Multi-hot action over the act vocabulary.
    pub action: Vec<f64>,
    /// None for terminal transitions (absorbing successor).
    pub next_state: Option<Vec<f64>>,
    /// log pi(a|s) under the current policy (behavior value for policy
    /// points, freshly evaluated for demonstration points).
    pub log_prob: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RewardEstimator {
    /// Act scorer over [state; action multi-hot].
    pub g: Mlp,
    /// State potential.
    pub h: Mlp,
    pub gamma: f64,
}

impl RewardEstimator {
    pub fn new(state_dim: usize, vocab: usize, hidden: usize, gamma: f64, rng: &mut Rng) -> Result<RewardEstimator> {
        Ok(RewardEstimator {
            g: Mlp::new(&[state_dim + vocab, hidden, 1], rng)?,
            h: Mlp::new(&[state_dim, hidden, 1], rng)?,
            gamma,
        })
    }

    fn g_input(&self, state: &[f64], action: &[f64]) -> Vec<f64> {
        let mut input = Vec::with_capacity(state.len() + action.len());
        input.extend_from_slice(state);
        input.extend_from_slice(action);
        input
    }

    /// f(s, a, s') = g(s, a) + gamma*h(s') - h(s).
    pub fn f_value(&self, point: &FPoint) -> f64 {
        let g = self.g.forward(&self.g_input(&point.state, &point.action))[0];
        let h_s = self.h.forward(&point.state)[0];
        let h_next = point
            .next_state
            .as_ref()
            .map(|s| self.h.forward(s)[0])
            .unwrap_or(0.0);
        g + self.gamma * h_next - h_s
    }

    /// Accumulate c * df/dparams into the gradient buffers.
    pub fn accumulate(&self, point: &FPoint, c: f64, g_grads: &mut [f64], h_grads: &mut [f64]) {
        let g_in = self.g_input(&point.state, &point.action);
        let acts = self.g.forward_cached(&g_in);
        self.g.backprop(&g_in, &acts, &[c], g_grads);
        let h_acts = self.h.forward_cached(&point.state);
        self.h.backprop(&point.state, &h_acts, &[-c], h_grads);
        if let Some(next) = &point.next_state {
            let n_acts = self.h.forward_cached(next);
            self.h.backprop(next, &n_acts, &[self.gamma * c], h_grads);
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub grad_clip: f64,
    pub loss: RewardLoss,
    /// Epoch passes are skipped while mean demo f minus mean policy f
    /// already exceeds this margin.
    pub gap_cap: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            lr: 1e-4,
            weight_decay: 1e-5,
            grad_clip: 10.0,
            loss: RewardLoss::Direct,
            gap_cap: f64::INFINITY,
        }
    }
}

/// Adversarial-objective diagnostics for one update.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct EstimatorStats {
    /// mean_demo f - mean_policy f.
    pub f_gap: f64,
    /// Training loss under the configured objective.
    pub loss: f64,
    pub skipped_steps: usize,
}

/// One estimator gradient step on a demonstration batch and a policy
/// batch. Gradients of g and h are clipped by their joint global norm.
pub fn estimator_update(
    est: &mut RewardEstimator,
    g_opt: &mut Adam,
    h_opt: &mut Adam,
    demo: &[FPoint],
    policy: &[FPoint],
    config: &EstimatorConfig,
) -> Result<EstimatorStats> {
    if demo.is_empty() || policy.is_empty() {
        return Err(GdplError::Runtime(
            "estimator update needs both demonstration and policy batches".into(),
        ));
    }
    let mut g_grads = vec![0.0; est.g.param_count()];
    let mut h_grads = vec![0.0; est.h.param_count()];
    let mut stats = EstimatorStats::default();
    let (nd, np) = (demo.len() as f64, policy.len() as f64);

    let mut demo_f_sum = 0.0;
    for p in demo {
        let f = est.f_value(p);
        demo_f_sum += f;
        let coeff = match config.loss {
            // Minimize -E_demo[f].
            RewardLoss::Direct => -1.0 / nd,
            // Minimize softplus(-(f - log pi)) on demonstrations.
            RewardLoss::Bce => {
                let u = f - p.log_prob;
                stats.loss += softplus(-u) / nd;
                -sigmoid(-u) / nd
            }
        };
        est.accumulate(p, coeff, &mut g_grads, &mut h_grads);
    }
    let mut policy_f_sum = 0.0;
    for p in policy {
        let f = est.f_value(p);
        policy_f_sum += f;
        let coeff = match config.loss {
            // Minimize +E_policy[f].
            RewardLoss::Direct => 1.0 / np,
            // Minimize softplus(f - log pi) on policy samples.
            RewardLoss::Bce => {
                let u = f - p.log_prob;
                stats.loss += softplus(u) / np;
                sigmoid(u) / np
            }
        };
        est.accumulate(p, coeff, &mut g_grads, &mut h_grads);
    }
    stats.f_gap = demo_f_sum / nd - policy_f_sum / np;
    if config.loss == RewardLoss::Direct {
        stats.loss = -stats.f_gap;
    }

    // Joint clip: scale both nets by the combined norm.
    let joint: f64 = g_grads
        .iter()
        .chain(h_grads.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if joint > config.grad_clip && joint > 0.0 {
        let scale = config.grad_clip / joint;
        for g in g_grads.iter_mut().chain(h_grads.iter_mut()) {
            *g *= scale;
        }
    }

    let finite = g_grads.iter().chain(h_grads.iter()).all(|g| g.is_finite());
    if finite {
        g_opt.step(&mut est.g.params, &g_grads);
        h_opt.step(&mut est.h.params, &h_grads);
    } else {
        stats.skipped_steps += 1;
    }
    Ok(stats)
}

/// Minibatched passes over the policy pairs: each shuffled policy chunk
/// is paired with a uniform draw of equally many demonstration pairs
/// and takes one gradient step. A pass is skipped outright, counted in
/// `skipped_steps`, when the f gap measured on the full pools already
/// exceeds `config.gap_cap`. The returned loss is the step mean; the
/// f gap is re-measured on the full pools after the last step.
pub fn estimator_epoch(
    est: &mut RewardEstimator,
    g_opt: &mut Adam,
    h_opt: &mut Adam,
    demo: &[FPoint],
    policy: &[FPoint],
    minibatch: usize,
    epochs: usize,
    config: &EstimatorConfig,
    rng: &mut Rng,
) -> Result<EstimatorStats> {
    if minibatch == 0 || epochs == 0 {
        return Err(GdplError::Validation(
            "estimator epoch needs a positive minibatch and epoch count".into(),
        ));
    }
    if demo.is_empty() || policy.is_empty() {
        return Err(GdplError::Runtime(
            "estimator update needs both demonstration and policy batches".into(),
        ));
    }
    let pool_gap = |est: &RewardEstimator| {
        let mean_f = |points: &[FPoint]| {
            points.iter().map(|p| est.f_value(p)).sum::<f64>() / points.len() as f64
        };
        mean_f(demo) - mean_f(policy)
    };
    let mut agg = EstimatorStats::default();
    let mut steps = 0usize;
    let mut order: Vec<usize> = (0..policy.len()).collect();
    for _ in 0..epochs {
        if pool_gap(est) > config.gap_cap {
            agg.skipped_steps += order.chunks(minibatch).len();
            continue;
        }
        order.shuffle(rng);
        for chunk in order.chunks(minibatch) {
            let pol: Vec<FPoint> = chunk.iter().map(|&i| policy[i].clone()).collect();
            let dem: Vec<FPoint> = (0..chunk.len())
                .map(|_| demo[rng.gen_range(0..demo.len())].clone())
                .collect();
            let stats = estimator_update(est, g_opt, h_opt, &dem, &pol, config)?;
            agg.loss += stats.loss;
            agg.skipped_steps += stats.skipped_steps;
            steps += 1;
        }
    }
    if steps > 0 {
        agg.loss /= steps as f64;
    }
    agg.f_gap = pool_gap(est);
    Ok(agg)
}

/// Per-turn estimated rewards f_t - log pi_t for a sequence of policy
/// transitions (one episode or a whole rollout in order).
pub fn estimated_turn_rewards(
    est: &RewardEstimator,
    points: &[FPoint],
) -> Vec<f64> {
    points.iter().map(|p| est.f_value(p) - p.log_prob).collect()
}

/// Write learned rewards into the transitions under the chosen
/// delivery. `points` must align one-to-one with `transitions`.
pub fn label_rewards(
    est: &RewardEstimator,
    points: &[FPoint],
    transitions: &mut [Transition],
    delivery: RewardDelivery,
) -> Result<()> {
    if points.len() != transitions.len() {
        return Err(GdplError::Runtime(format!(
            "reward labeling misalignment: {} points vs {} transitions",
            points.len(),
            transitions.len()
        )));
    }
    let rewards = estimated_turn_rewards(est, points);
    match delivery {
        RewardDelivery::Turn => {
            for (t, r) in transitions.iter_mut().zip(rewards) {
                t.reward = r;
            }
        }
        RewardDelivery::Session => {
            let mut start = 0;
            for i in 0..transitions.len() {
                if transitions[i].terminal || i + 1 == transitions.len() {
                    let sum: f64 = rewards[start..=i].iter().sum();
                    for t in transitions[start..=i].iter_mut() {
                        t.reward = 0.0;
                    }
                    transitions[i].reward = sum;
                    start = i + 1;
                }
            }
        }
    }
    Ok(())
}

/// Terminal-only handcrafted baseline: -1 per non-terminal exchange;
/// the terminal exchange scores +2L on success and -L on failure,
/// where L is the turn cap.
pub fn handcrafted_reward(terminal: bool, success: bool, max_turns: usize) -> f64 {
    let l = max_turns as f64;
    if !terminal {
        -1.0
    } else if success {
        2.0 * l
    } else {
        -l
    }
}
