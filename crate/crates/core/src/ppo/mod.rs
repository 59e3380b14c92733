//! Cache placement controller trained with clipped policy optimization.

pub mod checkpoint;
mod net;
mod policy;
mod train;
mod update;

use serde::{Deserialize, Serialize};

pub use net::{Adam, Mlp, Trace};
pub use policy::{
    encode_state, greedy_action, log_prob, proc_act, request_indicators, sample_action, squash, squash_slope, Agent,
    PolicyParams, PROB_FLOOR,
};
pub use train::{moving_average, train, train_agent, Environment, StepOutcome, TrainOutput};
pub use update::{
    clip, clipped_objective, gae, gae_from, ppo_update, surrogate_with_grad, value_loss_with_grad, value_targets,
    value_targets_from, LossReport, Transition,
};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub lr_actor: f64,
    pub lr_critic: f64,
    /// `N_B`.
    pub minibatch: usize,
    pub discount: f64,
    /// GAE trace decay `ζ`.
    pub trace_decay: f64,
    pub clip: f64,
    /// Passes over the rollout per outer iteration.
    pub iter_mb: usize,
    pub iter_max: usize,
    /// Slots per rollout `T`.
    pub horizon: usize,
    pub hidden: Vec<usize>,
    /// Listed with the other hyper-parameters but not used by the algorithm.
    pub soft_update_lr: f64,
    /// Infeasible slots cost this multiple of the median feasible cost.
    pub penalty_factor: f64,
    /// Penalty cost before any feasible slot has been seen.
    pub fallback_penalty_cost: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            lr_actor: 3e-4,
            lr_critic: 3e-4,
            minibatch: 32,
            discount: 0.99,
            trace_decay: 0.95,
            clip: 0.2,
            iter_mb: 8,
            iter_max: 500,
            horizon: 32,
            hidden: vec![256, 128],
            soft_update_lr: 5e-3,
            penalty_factor: 5.0,
            fallback_penalty_cost: 1.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.discount) || !open_unit(self.trace_decay) {
            return Err(Error::InvalidConfig("discount and trace_decay must lie in (0, 1)".into()));
        }
        if !(self.clip > 0.0) || !(self.lr_actor > 0.0) || !(self.lr_critic > 0.0) {
            return Err(Error::InvalidConfig("clip and learning rates must be positive".into()));
        }
        if self.minibatch == 0 || self.horizon == 0 {
            return Err(Error::InvalidConfig("minibatch and horizon must be positive".into()));
        }
        if !(self.penalty_factor > 0.0) || !(self.fallback_penalty_cost > 0.0) {
            return Err(Error::InvalidConfig("penalties must be positive".into()));
        }
        Ok(())
    }
}
