//! Advantages, value targets and the clipped policy update.

use serde::{Deserialize, Serialize};

use super::net::Mlp;
use super::policy::{log_prob, squash, squash_slope, Agent, PolicyParams};
use super::PpoConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: Vec<bool>,
    /// Log-probability of `a` under the policy that sampled it.
    pub log_prob: f64,
    /// Reward as used for learning (normalized).
    pub r: f64,
    pub s_next: Vec<f64>,
}

/// `Â_n = Σ_{i≥n} (γζ)^{i−n} (r_i + γ V(s_{i+1}) − V(s_i))` over the batch.
pub fn gae_from(rewards: &[f64], values: &[f64], next_values: &[f64], gamma: f64, zeta: f64) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if values.len() != rewards.len() || next_values.len() != rewards.len() {
        return Err(Error::ShapeMismatch("rewards and values differ in length".into()));
    }
    let mut adv = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for i in (0..rewards.len()).rev() {
        let td = rewards[i] + gamma * next_values[i] - values[i];
        acc = td + gamma * zeta * acc;
        adv[i] = acc;
    }
    Ok(adv)
}

pub fn gae(batch: &[Transition], params: &PolicyParams, cfg: &PpoConfig) -> Result<Vec<f64>> {
    let rewards: Vec<f64> = batch.iter().map(|t| t.r).collect();
    let values: Vec<f64> = batch.iter().map(|t| params.value(&t.s)).collect();
    let next: Vec<f64> = batch.iter().map(|t| params.value(&t.s_next)).collect();
    gae_from(&rewards, &values, &next, cfg.discount, cfg.trace_decay)
}

/// Discounted reward-to-go inside the batch.
pub fn value_targets_from(rewards: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for i in (0..rewards.len()).rev() {
        acc = rewards[i] + gamma * acc;
        out[i] = acc;
    }
    Ok(out)
}

pub fn value_targets(batch: &[Transition], cfg: &PpoConfig) -> Result<Vec<f64>> {
    let rewards: Vec<f64> = batch.iter().map(|t| t.r).collect();
    value_targets_from(&rewards, cfg.discount)
}

pub fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// Mean of `min(ρ Â, clip(ρ, 1 − ε, 1 + ε) Â)`.
pub fn clipped_objective(ratios: &[f64], adv: &[f64], eps: f64) -> f64 {
    let n = ratios.len() as f64;
    ratios
        .iter()
        .zip(adv)
        .map(|(&r, &a)| (r * a).min(clip(r, 1.0 - eps, 1.0 + eps) * a))
        .sum::<f64>()
        / n
}

/// Clipped surrogate of the actor on a minibatch and its gradient with
/// respect to the actor parameters.
pub fn surrogate_with_grad(actor: &Mlp, batch: &[Transition], adv: &[f64], eps: f64) -> (f64, Vec<f64>) {
    let n = batch.len() as f64;
    let mut grad = vec![0.0; actor.params.len()];
    let mut total = 0.0;
    for (t, &a_hat) in batch.iter().zip(adv) {
        let trace = actor.trace(&t.s);
        let logits = trace.output();
        let p: Vec<f64> = logits.iter().map(|&o| squash(o)).collect();
        let ratio = (log_prob(&p, &t.a) - t.log_prob).exp();
        let clipped = clip(ratio, 1.0 - eps, 1.0 + eps);
        total += (ratio * a_hat).min(clipped * a_hat);
        // The clipped branch is flat in the parameters.
        let flat = (a_hat > 0.0 && ratio > 1.0 + eps) || (a_hat < 0.0 && ratio < 1.0 - eps);
        if flat {
            continue;
        }
        let scale = a_hat * ratio / n;
        let dout: Vec<f64> = logits
            .iter()
            .zip(&p)
            .zip(&t.a)
            .map(|((&o, &p), &a)| {
                let target = if a { 1.0 } else { 0.0 };
                scale * (target - p) / (p * (1.0 - p)) * squash_slope(o)
            })
            .collect();
        actor.backward(&trace, &dout, &mut grad);
    }
    (total / n, grad)
}

/// Mean squared error of the critic and its gradient.
pub fn value_loss_with_grad(critic: &Mlp, batch: &[Transition], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = batch.len() as f64;
    let mut grad = vec![0.0; critic.params.len()];
    let mut total = 0.0;
    for (t, &y) in batch.iter().zip(targets) {
        let trace = critic.trace(&t.s);
        let err = trace.output()[0] - y;
        total += err * err;
        critic.backward(&trace, &[2.0 * err / n], &mut grad);
    }
    (total / n, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub surrogate: f64,
    pub value_loss: f64,
}

/// One Adam step on each network. Parameters are left untouched if either
/// loss is not finite.
pub fn ppo_update(
    agent: &mut Agent,
    minibatch: &[Transition],
    adv: &[f64],
    targets: &[f64],
    cfg: &PpoConfig,
) -> Result<LossReport> {
    if minibatch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if adv.len() != minibatch.len() || targets.len() != minibatch.len() {
        return Err(Error::ShapeMismatch("advantages or targets misaligned with minibatch".into()));
    }
    let (surrogate, mut g_actor) = surrogate_with_grad(&agent.params.actor, minibatch, adv, cfg.clip);
    let (value_loss, g_critic) = value_loss_with_grad(&agent.params.critic, minibatch, targets);
    if !surrogate.is_finite() || g_actor.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss("actor surrogate"));
    }
    if !value_loss.is_finite() || g_critic.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss("critic loss"));
    }
    // Ascend the surrogate.
    g_actor.iter_mut().for_each(|g| *g = -*g);
    agent.actor_opt.step(&mut agent.params.actor.params, &g_actor);
    agent.critic_opt.step(&mut agent.params.critic.params, &g_critic);
    Ok(LossReport { surrogate, value_loss })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_examples() {
        assert_eq!(clip(1.5, 0.8, 1.2), 1.2);
        assert_eq!(clip(0.5, 0.8, 1.2), 0.8);
        assert_eq!(clip(1.0, 0.8, 1.2), 1.0);
    }

    #[test]
    fn single_transition_gae_is_td() {
        let a = gae_from(&[2.0], &[0.5], &[1.5], 0.9, 0.95).unwrap();
        assert_eq!(a, vec![2.0 + 0.9 * 1.5 - 0.5]);
    }

    #[test]
    fn targets_examples() {
        assert_eq!(value_targets_from(&[3.0], 0.99).unwrap(), vec![3.0]);
        assert_eq!(value_targets_from(&[1.0, 2.0, 3.0], 0.0).unwrap(), vec![1.0, 2.0, 3.0]);
        let v = value_targets_from(&[1.0, 1.0], 0.99).unwrap();
        assert!((v[0] - 1.99).abs() < 1e-15 && v[1] == 1.0);
    }

    #[test]
    fn empty_batches_are_rejected() {
        assert!(matches!(gae_from(&[], &[], &[], 0.9, 0.9), Err(Error::EmptyBatch)));
        assert!(matches!(value_targets_from(&[], 0.9), Err(Error::EmptyBatch)));
    }
}
