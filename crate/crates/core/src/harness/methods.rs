//! The proposed controller and the four baselines.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::env::{Scenario, SlotEnv, EVAL_EPISODE_BASE};
use super::record::RunRecord;
use crate::ppo::{greedy_action, proc_act, train, Environment, PolicyParams, TrainOutput};
use crate::rng::{substream, Purpose};
use crate::routing::RoutingMode;
use crate::traffic::{CachePlacement, RequestMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Learned caching, network-coded multicast routing.
    Proposed,
    /// Learned caching, unicast routing.
    B1,
    /// Oracle top-`N_sto` caching by the upcoming slot's requests.
    B2,
    /// Uniformly random full caches.
    B3,
    /// No caching.
    B4,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Proposed, Method::B1, Method::B2, Method::B3, Method::B4];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::B1 => "b1",
            Method::B2 => "b2",
            Method::B3 => "b3",
            Method::B4 => "b4",
        }
    }

    pub fn routing_mode(self) -> RoutingMode {
        match self {
            Method::B1 => RoutingMode::Unicast,
            _ => RoutingMode::Multicast,
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, Method::Proposed | Method::B1)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Trains the policy of a learned method on the scenario's training episodes.
pub fn train_method(scenario: &Scenario, method: Method) -> Result<TrainOutput> {
    if !method.is_learned() {
        return Err(Error::InvalidConfig(format!("{method} has no policy to train")));
    }
    let mut env = SlotEnv::new(scenario, method.routing_mode());
    train(&mut env, &scenario.cfg.ppo, scenario.seed)
}

/// Per HAP, the `n_sto` contents with most requests; ties favour contents
/// already cached, then lower index.
pub fn top_requested(requests: &RequestMatrix, scenario: &Scenario, z_now: &CachePlacement) -> CachePlacement {
    let (k, c) = (scenario.haps(), scenario.contents());
    let mut counts = vec![0usize; k * c];
    for (u, user) in scenario.topology.users.iter().enumerate() {
        counts[user.hap * c + requests.choice[u]] += 1;
    }
    let mut z = CachePlacement::empty(k, c);
    for kk in 0..k {
        let mut order: Vec<usize> = (0..c).collect();
        order.sort_by_key(|&cc| (std::cmp::Reverse(counts[kk * c + cc]), !z_now.get(kk, cc), cc));
        for &cc in order.iter().take(scenario.cfg.n_sto) {
            z.set(kk, cc, true);
        }
    }
    z
}

/// `n_sto` distinct contents per HAP, uniformly at random.
pub fn random_full(scenario: &Scenario, episode: u64, slot: usize) -> CachePlacement {
    let (k, c) = (scenario.haps(), scenario.contents());
    let mut rng = substream(scenario.seed, Purpose::Baseline, (episode << 20) | slot as u64);
    let mut z = CachePlacement::empty(k, c);
    for kk in 0..k {
        for cc in sample(&mut rng, c, scenario.cfg.n_sto) {
            z.set(kk, cc, true);
        }
    }
    z
}

/// Scores a method on the evaluation episodes. Learned methods act greedily
/// with `policy`.
pub fn evaluate(scenario: &Scenario, method: Method, policy: Option<&PolicyParams>) -> Result<Vec<super::env::SlotRecord>> {
    if method.is_learned() && policy.is_none() {
        return Err(Error::InvalidConfig(format!("{method} needs a trained policy")));
    }
    let (k, c, n_sto) = (scenario.haps(), scenario.contents(), scenario.cfg.n_sto);
    let mut env = SlotEnv::new(scenario, method.routing_mode());
    env.episode_offset = EVAL_EPISODE_BASE;
    env.keep_records = true;
    for e in 0..scenario.cfg.eval_episodes as u64 {
        let mut state = env.reset(e)?;
        for _ in 0..scenario.cfg.ppo.horizon {
            let z_next = match method {
                Method::Proposed | Method::B1 => {
                    let a = greedy_action(policy.expect("checked above"), &state);
                    proc_act(&a, k, c, n_sto)?
                }
                Method::B2 => top_requested(&env.peek_next_requests(), scenario, &env.z),
                Method::B3 => random_full(scenario, env.episode, env.slot),
                Method::B4 => CachePlacement::empty(k, c),
            };
            state = env.step(&z_next)?.state;
        }
    }
    Ok(env.records)
}

/// Trains if needed, evaluates, and packages a sealed record.
pub fn run_method(scenario: &Scenario, method: Method) -> Result<(RunRecord, Option<TrainOutput>)> {
    let start = Instant::now();
    let trained = if method.is_learned() {
        Some(train_method(scenario, method)?)
    } else {
        None
    };
    let slots = evaluate(scenario, method, trained.as_ref().map(|t| &t.agent.params))?;
    let record = RunRecord {
        method: method.name().into(),
        config_hash: scenario.cfg.hash(),
        seed: scenario.seed,
        omega: scenario.cfg.omega,
        n_sto: scenario.cfg.n_sto,
        slots,
        learning_curve: trained.as_ref().map(|t| t.curve.clone()).unwrap_or_default(),
        infeasible_training_slots: trained.as_ref().map_or(0, |t| t.infeasible_slots),
        wall_clock_s: start.elapsed().as_secs_f64(),
        digest: String::new(),
    }
    .seal();
    Ok((record, trained))
}

/// One baseline (or the proposed method) on the evaluation episodes.
pub fn run_baseline(scenario: &Scenario, method: Method) -> Result<RunRecord> {
    Ok(run_method(scenario, method)?.0)
}
