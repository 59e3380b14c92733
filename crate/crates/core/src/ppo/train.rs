//! Rollout and optimization loop.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::policy::{proc_act, sample_action, Agent, PolicyParams};
use super::update::{gae, ppo_update, value_targets, LossReport, Transition};
use super::PpoConfig;
use crate::rng::{substream, Purpose};
use crate::traffic::CachePlacement;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    /// Weighted power cost of the slot, `None` if a subproblem was infeasible.
    pub cost: Option<f64>,
}

/// Slot-level simulator driven by cache placements.
pub trait Environment {
    fn haps(&self) -> usize;
    fn contents(&self) -> usize;
    fn n_sto(&self) -> usize;
    /// Starts episode `episode` and returns its first state.
    fn reset(&mut self, episode: u64) -> Result<Vec<f64>>;
    /// Applies the next placement and advances one slot.
    fn step(&mut self, z_next: &CachePlacement) -> Result<StepOutcome>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutput {
    pub agent: Agent,
    /// Mean unnormalized reward per outer iteration, penalties included.
    pub curve: Vec<f64>,
    pub infeasible_slots: usize,
    pub last_loss: Option<LossReport>,
}

/// Learning-side reward bookkeeping: infeasible-slot penalty and running
/// reward statistics.
#[derive(Debug, Clone, Default)]
struct RewardShaper {
    feasible_costs: Vec<f64>,
    count: usize,
    mean: f64,
    m2: f64,
}

impl RewardShaper {
    fn penalty_cost(&self, cfg: &PpoConfig) -> f64 {
        if self.feasible_costs.is_empty() {
            return cfg.fallback_penalty_cost;
        }
        let mut v = self.feasible_costs.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        cfg.penalty_factor * median
    }

    fn observe(&mut self, r: f64) {
        self.count += 1;
        let d = r - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (r - self.mean);
    }

    /// `(r − mean) / std` over every reward seen so far. Centering matters:
    /// the critic cannot see the slot index, so an offset in the rewards
    /// turns into an advantage bias that grows toward the start of a chunk.
    fn normalize(&self, r: f64) -> f64 {
        let var = if self.count > 1 { self.m2 / (self.count - 1) as f64 } else { 0.0 };
        let scale = if var > 0.0 { var.sqrt() } else { self.mean.abs().max(1.0) };
        (r - self.mean) / scale
    }
}

pub fn train<E: Environment + ?Sized>(env: &mut E, cfg: &PpoConfig, seed: u64) -> Result<TrainOutput> {
    cfg.validate()?;
    let mut init_rng = substream(seed, Purpose::Init, 0);
    let params = PolicyParams::init(env.haps(), env.contents(), &cfg.hidden, &mut init_rng);
    train_agent(Agent::new(params, cfg), env, cfg, seed)
}

/// Runs `cfg.iter_max` outer iterations starting from `agent`.
pub fn train_agent<E: Environment + ?Sized>(mut agent: Agent, env: &mut E, cfg: &PpoConfig, seed: u64) -> Result<TrainOutput> {
    cfg.validate()?;
    let (k, c, n_sto) = (env.haps(), env.contents(), env.n_sto());
    let mut shaper = RewardShaper::default();
    let mut curve = Vec::with_capacity(cfg.iter_max);
    let mut infeasible_slots = 0;
    let mut last_loss = None;

    for iter in 0..cfg.iter_max {
        let mut policy_rng = substream(seed, Purpose::Policy, iter as u64);
        let mut batch_rng = substream(seed, Purpose::Minibatch, iter as u64);
        let mut s = env.reset(iter as u64)?;
        let mut raw = Vec::with_capacity(cfg.horizon);
        let mut batch = Vec::with_capacity(cfg.horizon);
        for _ in 0..cfg.horizon {
            let (a, log_prob) = sample_action(&agent.params, &s, &mut policy_rng)?;
            let z_next = proc_act(&a, k, c, n_sto)?;
            let out = env.step(&z_next)?;
            raw.push(out.cost);
            if let Some(cost) = out.cost {
                shaper.feasible_costs.push(cost);
            }
            batch.push(Transition {
                s: std::mem::replace(&mut s, out.state.clone()),
                a,
                log_prob,
                r: 0.0,
                s_next: out.state,
            });
        }
        let penalty = shaper.penalty_cost(cfg);
        let rewards: Vec<f64> = raw
            .iter()
            .map(|cost| match cost {
                Some(cost) => -cost,
                None => {
                    infeasible_slots += 1;
                    -penalty
                }
            })
            .collect();
        for &r in &rewards {
            shaper.observe(r);
        }
        for (t, &r) in batch.iter_mut().zip(&rewards) {
            t.r = shaper.normalize(r);
        }
        curve.push(rewards.iter().sum::<f64>() / rewards.len() as f64);

        let chunks: Vec<&[Transition]> = batch.chunks(cfg.minibatch).collect();
        let mut prepared = Vec::with_capacity(chunks.len());
        for chunk in &chunks {
            prepared.push((gae(chunk, &agent.params, cfg)?, value_targets(chunk, cfg)?));
        }
        let mut order: Vec<usize> = (0..chunks.len()).collect();
        for _ in 0..cfg.iter_mb {
            order.shuffle(&mut batch_rng);
            for &i in &order {
                let (adv, targets) = &prepared[i];
                last_loss = Some(ppo_update(&mut agent, chunks[i], adv, targets, cfg)?);
            }
        }
    }
    Ok(TrainOutput {
        agent,
        curve,
        infeasible_slots,
        last_loss,
    })
}

/// Trailing moving average with window `w` (shorter at the start).
pub fn moving_average(xs: &[f64], w: usize) -> Vec<f64> {
    let w = w.max(1);
    (0..xs.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            xs[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::encode_state;

    /// Cost is the number of uncached contents in the next placement; the
    /// state is constant.
    struct Counter {
        k: usize,
        c: usize,
        steps: usize,
    }

    impl Environment for Counter {
        fn haps(&self) -> usize {
            self.k
        }
        fn contents(&self) -> usize {
            self.c
        }
        fn n_sto(&self) -> usize {
            self.c
        }
        fn reset(&mut self, _: u64) -> Result<Vec<f64>> {
            encode_state(&CachePlacement::empty(self.k, self.c), &vec![true; self.k * self.c])
        }
        fn step(&mut self, z: &CachePlacement) -> Result<StepOutcome> {
            self.steps += 1;
            let missing = z.z.iter().filter(|b| !**b).count() as f64;
            Ok(StepOutcome {
                state: self.reset(0)?,
                cost: Some(1.0 + missing),
            })
        }
    }

    fn small_cfg() -> PpoConfig {
        PpoConfig {
            hidden: vec![16, 8],
            horizon: 8,
            minibatch: 8,
            iter_mb: 4,
            lr_actor: 3e-3,
            lr_critic: 3e-3,
            ..PpoConfig::default()
        }
    }

    #[test]
    fn zero_iterations_keep_initial_params() {
        let mut env = Counter { k: 1, c: 3, steps: 0 };
        let cfg = PpoConfig {
            iter_max: 0,
            ..small_cfg()
        };
        let out = train(&mut env, &cfg, 7).unwrap();
        let init = PolicyParams::init(1, 3, &cfg.hidden, &mut substream(7, Purpose::Init, 0));
        assert_eq!(out.agent.params, init);
        assert!(out.curve.is_empty());
        assert_eq!(env.steps, 0);
    }

    #[test]
    fn rollout_length_is_horizon() {
        let mut env = Counter { k: 1, c: 3, steps: 0 };
        let cfg = PpoConfig {
            iter_max: 3,
            ..small_cfg()
        };
        train(&mut env, &cfg, 1).unwrap();
        assert_eq!(env.steps, 3 * cfg.horizon);
    }

    #[test]
    fn learns_to_fill_the_cache() {
        let mut env = Counter { k: 1, c: 3, steps: 0 };
        let cfg = PpoConfig {
            iter_max: 150,
            ..small_cfg()
        };
        let out = train(&mut env, &cfg, 2).unwrap();
        let ma = moving_average(&out.curve, 10);
        assert!(ma.last().unwrap() > &(out.curve[0] + 0.5), "{:?}", &ma[ma.len() - 3..]);
    }

    /// Cost counts bits that differ from a fixed target placement; requests
    /// are random noise in the state.
    struct Target {
        z: CachePlacement,
        rng: rand_chacha::ChaCha8Rng,
    }

    impl Target {
        fn state(&mut self) -> Result<Vec<f64>> {
            use rand::Rng;
            let req: Vec<bool> = (0..15).map(|_| self.rng.random_bool(0.5)).collect();
            encode_state(&self.z, &req)
        }
    }

    impl Environment for Target {
        fn haps(&self) -> usize {
            3
        }
        fn contents(&self) -> usize {
            5
        }
        fn n_sto(&self) -> usize {
            2
        }
        fn reset(&mut self, _: u64) -> Result<Vec<f64>> {
            self.z = CachePlacement::empty(3, 5);
            self.state()
        }
        fn step(&mut self, z: &CachePlacement) -> Result<StepOutcome> {
            let miss = (0..15).filter(|&i| z.z[i] != (i % 5 >= 3)).count() as f64;
            self.z = z.clone();
            Ok(StepOutcome {
                state: self.state()?,
                cost: Some(10.0 + miss),
            })
        }
    }

    // Regression: with uncentered rewards the chunk-position bias of the
    // value targets drowned this signal at the default discount.
    #[test]
    fn learns_a_target_placement_with_default_hyperparameters() {
        use rand::SeedableRng;
        let cfg = PpoConfig {
            horizon: 16,
            iter_max: 50,
            ..PpoConfig::default()
        };
        for seed in 0..2 {
            let mut env = Target {
                z: CachePlacement::empty(3, 5),
                rng: rand_chacha::ChaCha8Rng::seed_from_u64(seed),
            };
            let out = train(&mut env, &cfg, seed).unwrap();
            let ma = moving_average(&out.curve, 10);
            assert!(*ma.last().unwrap() > out.curve[0] + 3.0, "seed {seed}: {} -> {}", out.curve[0], ma.last().unwrap());
        }
    }

    #[test]
    fn moving_average_window() {
        assert_eq!(moving_average(&[1.0, 3.0, 5.0], 2), vec![1.0, 2.0, 4.0]);
    }
}
