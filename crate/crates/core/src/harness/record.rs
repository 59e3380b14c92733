//! Run records: per-slot accounting, digests and re-verification.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;
use super::env::{power_cost, SlotRecord};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub config_hash: String,
    pub seed: u64,
    pub omega: f64,
    pub n_sto: usize,
    pub slots: Vec<SlotRecord>,
    /// Mean training reward per outer iteration; empty for untrained methods.
    pub learning_curve: Vec<f64>,
    pub infeasible_training_slots: usize,
    pub wall_clock_s: f64,
    /// SHA-256 over everything above except the wall clock.
    pub digest: String,
}

#[derive(Serialize)]
struct DigestView<'a> {
    method: &'a str,
    config_hash: &'a str,
    seed: u64,
    omega: f64,
    n_sto: usize,
    slots: &'a [SlotRecord],
    learning_curve: &'a [f64],
    infeasible_training_slots: usize,
}

impl RunRecord {
    pub fn compute_digest(&self) -> String {
        let view = DigestView {
            method: &self.method,
            config_hash: &self.config_hash,
            seed: self.seed,
            omega: self.omega,
            n_sto: self.n_sto,
            slots: &self.slots,
            learning_curve: &self.learning_curve,
            infeasible_training_slots: self.infeasible_training_slots,
        };
        hex::encode(Sha256::digest(serde_json::to_vec(&view).expect("record serializes")))
    }

    pub fn seal(mut self) -> Self {
        self.digest = self.compute_digest();
        self
    }

    pub fn summary(&self) -> Summary {
        let feasible: Vec<_> = self.slots.iter().filter_map(|s| s.cost).collect();
        let n = feasible.len() as f64;
        let mean = |f: fn(&super::env::SlotCost) -> f64| {
            if feasible.is_empty() {
                f64::NAN
            } else {
                feasible.iter().map(f).sum::<f64>() / n
            }
        };
        Summary {
            mean_pc: mean(|c| c.pc),
            mean_p_dc: mean(|c| c.p_dc),
            mean_p_hap: mean(|c| c.p_hap),
            mean_p_rf: mean(|c| c.p_rf),
            feasibility: if self.slots.is_empty() {
                0.0
            } else {
                n / self.slots.len() as f64
            },
            slots: self.slots.len(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean_pc: f64,
    pub mean_p_dc: f64,
    pub mean_p_hap: f64,
    pub mean_p_rf: f64,
    pub feasibility: f64,
    pub slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Re-checks the invariants a stored record must satisfy. `config`, when
/// given, must be the configuration the record was produced from.
pub fn verify(record: &RunRecord, config: Option<&ScenarioConfig>) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check {
            name: name.into(),
            passed,
            detail,
        })
    };

    let digest = record.compute_digest();
    push("digest", digest == record.digest, format!("stored {} recomputed {digest}", record.digest));

    let mut worst = 0.0f64;
    let mut reward_ok = true;
    let mut flags_ok = true;
    for s in &record.slots {
        match s.cost {
            Some(c) => {
                let pc = power_cost(c.p_dc, c.p_hap, c.p_rf, record.omega);
                worst = worst.max((pc - c.pc).abs() / pc.abs().max(f64::MIN_POSITIVE));
                reward_ok &= s.reward == Some(-c.pc);
                flags_ok &= s.feasible && s.error.is_none();
            }
            None => flags_ok &= !s.feasible && s.reward.is_none() && s.error.is_some(),
        }
    }
    push("power accounting", worst <= 1e-9, format!("worst relative mismatch {worst:.3e}"));
    push("reward is negative cost", reward_ok, String::new());
    push("feasibility flags", flags_ok, String::new());

    let over: Vec<String> = record
        .slots
        .iter()
        .flat_map(|s| s.placement.iter().chain(&s.next_placement))
        .filter(|row| row.chars().filter(|&ch| ch == '1').count() > record.n_sto)
        .cloned()
        .collect();
    push("cache capacity", over.is_empty(), format!("{} rows over capacity", over.len()));

    let chained = record.slots.windows(2).all(|w| {
        w[0].episode != w[1].episode || (w[1].slot == w[0].slot + 1 && w[1].placement == w[0].next_placement)
    });
    push("placement chaining", chained, String::new());

    if let Some(cfg) = config {
        let hash = cfg.hash();
        push("config hash", hash == record.config_hash, format!("record {} config {hash}", record.config_hash));
    }
    checks
}
