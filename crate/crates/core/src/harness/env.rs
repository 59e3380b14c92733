//! One slot of the network: demands, sessions, routing, beamforming, cost.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;
use crate::beamforming::{extract_beams, solve_sdp, BeamformingProblem};
use crate::channel::{sample_fso, sample_rf, FsoLinkState, RfChannelState};
use crate::ppo::{encode_state, request_indicators, Environment, StepOutcome};
use crate::rng::{substream, Purpose};
use crate::routing::{check_feasibility, solve_with, RoutingMode, RoutingProblem};
use crate::conic::BarrierSolver;
use crate::topology::{build_topology, NetworkTopology};
use crate::traffic::{build_sessions, demand_profile, sample_requests, CachePlacement, Catalog, RequestMatrix};
use crate::{Error, Result};

/// Episodes at or above this index are reserved for evaluation.
pub const EVAL_EPISODE_BASE: u64 = 1 << 32;

/// Routing feasibility tolerance used when recording slots.
pub const VERIFY_TOL: f64 = 1e-6;

/// Random inputs of one slot; identical for every method under a seed.
#[derive(Debug, Clone)]
pub struct SlotInputs {
    pub episode: u64,
    pub slot: usize,
    pub requests: RequestMatrix,
    pub fso: Vec<FsoLinkState>,
    pub rf: RfChannelState,
}

impl SlotInputs {
    pub fn key(&self) -> u64 {
        slot_key(self.episode, self.slot)
    }

    /// Short digest of the channel realization.
    pub fn channel_digest(&self) -> String {
        let mut h = Sha256::new();
        for s in &self.fso {
            h.update(s.g.to_le_bytes());
        }
        for z in self.rf.h.iter().flatten() {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

fn slot_key(episode: u64, slot: usize) -> u64 {
    (episode << 20) | slot as u64
}

/// Cost components of one slot, in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotCost {
    pub p_dc: f64,
    pub p_hap: f64,
    pub p_rf: f64,
    pub pc: f64,
    pub routing_objective: f64,
    /// Largest residual of the independent routing check.
    pub routing_violation: f64,
    pub sessions: usize,
}

/// `p_dc + ω (p_hap + p_rf)`.
pub fn power_cost(p_dc: f64, p_hap: f64, p_rf: f64, omega: f64) -> f64 {
    p_dc + omega * (p_hap + p_rf)
}

/// A configured network for one seed: fixed geometry and popularity, with
/// per-slot requests and channels drawn from keyed substreams.
#[derive(Debug)]
pub struct Scenario {
    pub cfg: ScenarioConfig,
    pub seed: u64,
    pub topology: NetworkTopology,
    pub catalog: Catalog,
    /// RF power per slot key; access power does not depend on caching.
    rf_memo: RefCell<HashMap<u64, std::result::Result<f64, String>>>,
}

impl Scenario {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        // Separate streams keep the catalog fixed when the user count changes.
        let topology = build_topology(&cfg.geometry, &mut substream(seed, Purpose::Scenario, 0))?;
        let catalog = Catalog::generate(&cfg.catalog, topology.num_haps(), &mut substream(seed, Purpose::Scenario, 1))?;
        Ok(Self {
            cfg: cfg.clone(),
            seed,
            topology,
            catalog,
            rf_memo: RefCell::new(HashMap::new()),
        })
    }

    pub fn haps(&self) -> usize {
        self.topology.num_haps()
    }

    pub fn contents(&self) -> usize {
        self.catalog.contents
    }

    pub fn requests(&self, episode: u64, slot: usize) -> RequestMatrix {
        sample_requests(
            &self.catalog,
            &self.topology,
            &mut substream(self.seed, Purpose::Requests, slot_key(episode, slot)),
        )
    }

    pub fn inputs(&self, episode: u64, slot: usize) -> SlotInputs {
        let key = slot_key(episode, slot);
        SlotInputs {
            episode,
            slot,
            requests: self.requests(episode, slot),
            fso: sample_fso(&self.topology, &self.cfg.fso, &mut substream(self.seed, Purpose::Channels, key)),
            rf: sample_rf(&self.topology, &self.cfg.rf, &mut substream(self.seed, Purpose::RfChannels, key)),
        }
    }

    pub fn state(&self, z: &CachePlacement, inputs: &SlotInputs) -> Result<Vec<f64>> {
        encode_state(z, &request_indicators(&inputs.requests, &self.topology))
    }

    fn rf_power(&self, inputs: &SlotInputs) -> Result<f64> {
        let key = inputs.key();
        if let Some(hit) = self.rf_memo.borrow().get(&key) {
            return hit.clone().map_err(Error::Infeasible);
        }
        let computed = (|| {
            let problem = BeamformingProblem::from_requests(
                &self.topology,
                &inputs.requests,
                &inputs.rf,
                &self.cfg.rf,
                self.catalog.mu_acc,
                self.cfg.omega,
            )?;
            let sdp = solve_sdp(&problem)?;
            let mut rng = substream(self.seed, Purpose::Randomization, key);
            Ok(extract_beams(&sdp, &problem, &mut rng, self.cfg.candidates)?.p_rf)
        })();
        let stored = match &computed {
            Ok(p) => Ok(*p),
            Err(e @ (Error::Infeasible(_) | Error::RandomizationFailed { .. })) => Err(e.to_string()),
            Err(_) => return computed,
        };
        self.rf_memo.borrow_mut().insert(key, stored);
        computed
    }

    /// Cost of a slot that starts in `z_now` and moves to `z_next`.
    pub fn run_slot(
        &self,
        z_now: &CachePlacement,
        z_next: &CachePlacement,
        inputs: &SlotInputs,
        mode: RoutingMode,
    ) -> Result<SlotCost> {
        for z in [z_now, z_next] {
            if !z.within_capacity(self.cfg.n_sto) {
                return Err(Error::InvalidConfig(format!("placement exceeds capacity {}", self.cfg.n_sto)));
            }
        }
        let demand = demand_profile(z_now, z_next, &inputs.requests, &self.catalog, &self.topology)?;
        let sessions = build_sessions(z_now, &demand, &self.topology, &self.catalog)?;
        let gains: Vec<f64> = inputs.fso.iter().map(|s| s.g).collect();
        let problem = RoutingProblem::new(&self.topology, &sessions, &gains, &self.cfg.fso, self.cfg.omega);
        let routing = solve_with(&problem, mode, &BarrierSolver::default())?;
        let report = check_feasibility(&problem, &routing, VERIFY_TOL);
        let p_rf = self.rf_power(inputs)?;
        Ok(SlotCost {
            p_dc: routing.p_fso_dc,
            p_hap: routing.p_fso_hap,
            p_rf,
            pc: power_cost(routing.p_fso_dc, routing.p_fso_hap, p_rf, self.cfg.omega),
            routing_objective: routing.objective,
            routing_violation: report.max_violation(),
            sessions: sessions.len(),
        })
    }
}

/// Errors that make a slot infeasible rather than aborting the run.
pub fn is_slot_infeasibility(e: &Error) -> bool {
    matches!(
        e,
        Error::Infeasible(_) | Error::Unreachable { .. } | Error::RandomizationFailed { .. }
    )
}

/// One recorded slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub episode: u64,
    pub slot: usize,
    /// Placement in force during the slot, one string of 0/1 per HAP.
    pub placement: Vec<String>,
    pub next_placement: Vec<String>,
    pub requests: Vec<usize>,
    pub channel_digest: String,
    pub feasible: bool,
    pub cost: Option<SlotCost>,
    pub reward: Option<f64>,
    pub error: Option<String>,
}

pub fn placement_rows(z: &CachePlacement) -> Vec<String> {
    (0..z.haps)
        .map(|k| (0..z.contents).map(|c| if z.get(k, c) { '1' } else { '0' }).collect())
        .collect()
}

/// Drives a scenario slot by slot. Used both for training and evaluation.
#[derive(Debug)]
pub struct SlotEnv<'a> {
    pub scenario: &'a Scenario,
    pub mode: RoutingMode,
    pub episode: u64,
    /// Added to the episode index passed to `reset`.
    pub episode_offset: u64,
    pub slot: usize,
    pub z: CachePlacement,
    pub inputs: SlotInputs,
    pub records: Vec<SlotRecord>,
    pub keep_records: bool,
}

impl<'a> SlotEnv<'a> {
    pub fn new(scenario: &'a Scenario, mode: RoutingMode) -> Self {
        Self {
            scenario,
            mode,
            episode: 0,
            episode_offset: 0,
            slot: 0,
            z: CachePlacement::empty(scenario.haps(), scenario.contents()),
            inputs: scenario.inputs(0, 0),
            records: Vec::new(),
            keep_records: false,
        }
    }

    /// Requests of the upcoming slot, as seen by the oracle baseline.
    pub fn peek_next_requests(&self) -> RequestMatrix {
        self.scenario.requests(self.episode, self.slot + 1)
    }

    pub fn current_state(&self) -> Result<Vec<f64>> {
        self.scenario.state(&self.z, &self.inputs)
    }
}

impl Environment for SlotEnv<'_> {
    fn haps(&self) -> usize {
        self.scenario.haps()
    }

    fn contents(&self) -> usize {
        self.scenario.contents()
    }

    fn n_sto(&self) -> usize {
        self.scenario.cfg.n_sto
    }

    fn reset(&mut self, episode: u64) -> Result<Vec<f64>> {
        self.episode = episode + self.episode_offset;
        self.slot = 0;
        self.z = CachePlacement::empty(self.haps(), self.contents());
        self.inputs = self.scenario.inputs(self.episode, 0);
        self.current_state()
    }

    fn step(&mut self, z_next: &CachePlacement) -> Result<StepOutcome> {
        let outcome = self.scenario.run_slot(&self.z, z_next, &self.inputs, self.mode);
        let (cost, error) = match outcome {
            Ok(c) => (Some(c), None),
            Err(e) if is_slot_infeasibility(&e) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        if self.keep_records {
            self.records.push(SlotRecord {
                episode: self.episode,
                slot: self.slot,
                placement: placement_rows(&self.z),
                next_placement: placement_rows(z_next),
                requests: self.inputs.requests.choice.clone(),
                channel_digest: self.inputs.channel_digest(),
                feasible: cost.is_some(),
                cost,
                reward: cost.map(|c| -c.pc),
                error,
            });
        }
        self.slot += 1;
        self.z = z_next.clone();
        self.inputs = self.scenario.inputs(self.episode, self.slot);
        Ok(StepOutcome {
            state: self.current_state()?,
            cost: cost.map(|c| c.pc),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_sum() {
        assert_eq!(power_cost(2.0, 3.0, 4.0, 1.0), 9.0);
        assert_eq!(power_cost(2.0, 3.0, 4.0, 0.0), 2.0);
    }

    #[test]
    fn inputs_are_common_random_numbers() {
        let s = Scenario::new(&ScenarioConfig::desk(), 3).unwrap();
        let a = s.inputs(4, 2);
        let b = s.inputs(4, 2);
        assert_eq!(a.requests, b.requests);
        assert_eq!(a.channel_digest(), b.channel_digest());
        assert_ne!(a.channel_digest(), s.inputs(4, 3).channel_digest());
    }

    #[test]
    fn full_cache_without_updates_costs_only_rf() {
        let mut cfg = ScenarioConfig::desk();
        cfg.n_sto = cfg.catalog.contents;
        let s = Scenario::new(&cfg, 1).unwrap();
        let z = CachePlacement::full(s.haps(), s.contents());
        let c = s.run_slot(&z, &z, &s.inputs(0, 0), RoutingMode::Multicast).unwrap();
        assert_eq!((c.p_dc, c.p_hap, c.sessions), (0.0, 0.0, 0));
        assert!(c.p_rf > 0.0);
        assert!((c.pc - cfg.omega * c.p_rf).abs() <= 1e-12 * c.pc);
    }

    #[test]
    fn zero_omega_leaves_dc_power() {
        let mut cfg = ScenarioConfig::desk();
        cfg.omega = 0.0;
        let s = Scenario::new(&cfg, 2).unwrap();
        let z = CachePlacement::empty(s.haps(), s.contents());
        let c = s.run_slot(&z, &z, &s.inputs(0, 0), RoutingMode::Multicast).unwrap();
        assert!(c.p_dc > 0.0);
        assert_eq!(c.pc, c.p_dc);
    }
}
