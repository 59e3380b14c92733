//! State encoding, action projection and the Bernoulli policy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{Adam, Mlp};
use super::PpoConfig;
use crate::topology::NetworkTopology;
use crate::traffic::{CachePlacement, RequestMatrix};
use crate::{Error, Result};

/// Lowest and highest action probability, `ε` and `1 − ε`.
pub const PROB_FLOOR: f64 = 1e-6;

/// Indicator per `(HAP, content)` that some user of the HAP requests it.
pub fn request_indicators(requests: &RequestMatrix, topology: &NetworkTopology) -> Vec<bool> {
    let c = requests.contents;
    let mut out = vec![false; topology.num_haps() * c];
    for (u, user) in topology.users.iter().enumerate() {
        out[user.hap * c + requests.choice[u]] = true;
    }
    out
}

/// `[z_{1,1} … z_{K,C}, request indicators]`, length `2KC`.
pub fn encode_state(z: &CachePlacement, requested: &[bool]) -> Result<Vec<f64>> {
    let kc = z.haps * z.contents;
    if requested.len() != kc {
        return Err(Error::ShapeMismatch(format!(
            "request block of length {}, expected {kc}",
            requested.len()
        )));
    }
    Ok(z.z
        .iter()
        .chain(requested)
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect())
}

/// Keeps the first `n_sto` set bits of each HAP's row.
pub fn proc_act(a: &[bool], haps: usize, contents: usize, n_sto: usize) -> Result<CachePlacement> {
    if a.len() != haps * contents {
        return Err(Error::ShapeMismatch(format!(
            "action of length {}, expected {}",
            a.len(),
            haps * contents
        )));
    }
    let mut z = CachePlacement::empty(haps, contents);
    for k in 0..haps {
        let mut kept = 0;
        for c in 0..contents {
            if a[k * contents + c] && kept < n_sto {
                z.set(k, c, true);
                kept += 1;
            }
        }
    }
    Ok(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub critic: Mlp,
}

impl PolicyParams {
    pub fn init<R: Rng + ?Sized>(haps: usize, contents: usize, hidden: &[usize], rng: &mut R) -> Self {
        let kc = haps * contents;
        let mut sizes = vec![2 * kc];
        sizes.extend_from_slice(hidden);
        let mut actor_sizes = sizes.clone();
        actor_sizes.push(kc);
        sizes.push(1);
        Self {
            // A small output layer starts the policy near p = 0.5.
            actor: Mlp::init(&actor_sizes, 0.01, rng),
            critic: Mlp::init(&sizes, 1.0, rng),
        }
    }

    pub fn state_width(&self) -> usize {
        self.actor.input_width()
    }

    pub fn is_finite(&self) -> bool {
        self.actor.params.iter().chain(&self.critic.params).all(|p| p.is_finite())
    }

    pub fn probabilities(&self, s: &[f64]) -> Vec<f64> {
        self.actor.forward(s).into_iter().map(squash).collect()
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        self.critic.forward(s)[0]
    }
}

/// `ε + (1 − 2ε)·σ(o)`.
pub fn squash(o: f64) -> f64 {
    (PROB_FLOOR + (1.0 - 2.0 * PROB_FLOOR) * sigmoid(o)).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// `∂ squash / ∂o`.
pub fn squash_slope(o: f64) -> f64 {
    let s = sigmoid(o);
    (1.0 - 2.0 * PROB_FLOOR) * s * (1.0 - s)
}

fn sigmoid(o: f64) -> f64 {
    if o >= 0.0 {
        1.0 / (1.0 + (-o).exp())
    } else {
        let e = o.exp();
        e / (1.0 + e)
    }
}

pub fn log_prob(p: &[f64], a: &[bool]) -> f64 {
    p.iter()
        .zip(a)
        .map(|(&p, &a)| if a { p.ln() } else { (1.0 - p).ln() })
        .sum()
}

pub fn sample_action<R: Rng + ?Sized>(params: &PolicyParams, s: &[f64], rng: &mut R) -> Result<(Vec<bool>, f64)> {
    if s.len() != params.state_width() {
        return Err(Error::ShapeMismatch(format!(
            "state of length {}, expected {}",
            s.len(),
            params.state_width()
        )));
    }
    let p = params.probabilities(s);
    let a: Vec<bool> = p.iter().map(|&p| rng.random::<f64>() < p).collect();
    let lp = log_prob(&p, &a);
    Ok((a, lp))
}

/// Most likely action: every bit whose probability exceeds one half.
pub fn greedy_action(params: &PolicyParams, s: &[f64]) -> Vec<bool> {
    params.probabilities(s).into_iter().map(|p| p > 0.5).collect()
}

/// Parameters plus optimizer state; what a checkpoint stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub params: PolicyParams,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

impl Agent {
    pub fn new(params: PolicyParams, cfg: &PpoConfig) -> Self {
        Self {
            actor_opt: Adam::new(params.actor.params.len(), cfg.lr_actor),
            critic_opt: Adam::new(params.critic.params.len(), cfg.lr_critic),
            params,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn proc_act_examples() {
        let z = proc_act(&[true, true, true], 1, 3, 2).unwrap();
        assert_eq!(z.z, vec![true, true, false]);
        let z = proc_act(&[false; 6], 2, 3, 2).unwrap();
        assert!(z.z.iter().all(|b| !b));
        let z = proc_act(&[false, true, true, true], 2, 2, 1).unwrap();
        assert_eq!(z.z, vec![false, true, true, false]);
    }

    #[test]
    fn state_examples() {
        let z = CachePlacement::empty(2, 3);
        assert_eq!(encode_state(&z, &[false; 6]).unwrap(), vec![0.0; 12]);
        let full = CachePlacement::full(2, 3);
        let s = encode_state(&full, &[false; 6]).unwrap();
        assert!(s[..6].iter().all(|&v| v == 1.0));
        let big = CachePlacement::empty(7, 30);
        assert_eq!(encode_state(&big, &[false; 210]).unwrap().len(), 420);
        assert!(encode_state(&z, &[false; 5]).is_err());
    }

    #[test]
    fn half_probabilities_give_kc_ln_half() {
        let p = vec![0.5; 6];
        let a = [true, false, true, true, false, false];
        assert!((log_prob(&p, &a) - 6.0 * 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic_and_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = PolicyParams::init(1, 3, &[8], &mut rng);
        let s = vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        let a1 = sample_action(&params, &s, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let a2 = sample_action(&params, &s, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a1, a2);

        let mut tilted = params.clone();
        // Bias the output layer so the probabilities differ from one half.
        let n = tilted.actor.params.len();
        tilted.actor.params[n - 3..].copy_from_slice(&[-1.0, 0.0, 2.0]);
        let p = tilted.probabilities(&s);
        let mut counts = [0usize; 3];
        let draws = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..draws {
            let (a, lp) = sample_action(&tilted, &s, &mut rng).unwrap();
            assert!(lp.is_finite());
            for (c, b) in counts.iter_mut().zip(a) {
                *c += usize::from(b);
            }
        }
        for (c, p) in counts.iter().zip(&p) {
            let mean = *c as f64 / draws as f64;
            assert!((mean - p).abs() <= 0.02 * p, "{mean} vs {p}");
        }
    }

    #[test]
    fn squash_stays_inside_the_floor() {
        for o in [-1e3, -50.0, 0.0, 50.0, 1e3] {
            let p = squash(o);
            assert!((PROB_FLOOR..=1.0 - PROB_FLOOR).contains(&p));
            assert!(p.ln().is_finite() && (1.0 - p).ln().is_finite());
        }
    }
}
