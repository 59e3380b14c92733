//! Binary parameter blob plus a JSON sidecar.
//!
//! Blob layout, little endian: magic `HAPCKPT\0`, `u32` version, then four
//! sections (actor, critic, actor optimizer, critic optimizer). A network
//! section is `u32` layer count, the widths as `u64`, `u64` parameter count
//! and the parameters as `f64`. An optimizer section is `lr, beta1, beta2,
//! eps` as `f64`, `u64` step, `u64` length, then `m` and `v`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::net::{Adam, Mlp};
use super::policy::{Agent, PolicyParams};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"HAPCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub version: u32,
    pub config_hash: String,
    pub iteration: usize,
    pub seed: u64,
    /// SHA-256 of the blob.
    pub blob_sha256: String,
}

fn sidecar_path(blob: &Path) -> PathBuf {
    blob.with_extension("json")
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_mlp(out: &mut Vec<u8>, net: &Mlp) {
    put_u32(out, net.sizes.len() as u32);
    for &s in &net.sizes {
        put_u64(out, s as u64);
    }
    put_u64(out, net.params.len() as u64);
    put_f64s(out, &net.params);
}

fn put_adam(out: &mut Vec<u8>, opt: &Adam) {
    put_f64s(out, &[opt.lr, opt.beta1, opt.beta2, opt.eps]);
    put_u64(out, opt.t);
    put_u64(out, opt.m.len() as u64);
    put_f64s(out, &opt.m);
    put_f64s(out, &opt.v);
}

pub fn encode(agent: &Agent) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION);
    put_mlp(&mut out, &agent.params.actor);
    put_mlp(&mut out, &agent.params.critic);
    put_adam(&mut out, &agent.actor_opt);
    put_adam(&mut out, &agent.critic_opt);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() < n {
            return Err(Error::Checkpoint("truncated blob".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        // Every counted item takes at least eight bytes.
        if n > (self.buf.len() / 8) as u64 {
            return Err(Error::Checkpoint(format!("implausible length {n}")));
        }
        Ok(n as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(8 * n)?
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect())
    }

    fn mlp(&mut self) -> Result<Mlp> {
        let layers = self.u32()? as usize;
        if !(2..=64).contains(&layers) {
            return Err(Error::Checkpoint(format!("{layers} layer widths")));
        }
        let sizes = (0..layers).map(|_| self.len()).collect::<Result<Vec<_>>>()?;
        let n = self.len()?;
        if n != Mlp::param_count(&sizes) {
            return Err(Error::Checkpoint(format!("{n} parameters for widths {sizes:?}")));
        }
        Ok(Mlp {
            sizes,
            params: self.f64s(n)?,
        })
    }

    fn adam(&mut self) -> Result<Adam> {
        let h = self.f64s(4)?;
        let t = self.u64()?;
        let n = self.len()?;
        Ok(Adam {
            lr: h[0],
            beta1: h[1],
            beta2: h[2],
            eps: h[3],
            t,
            m: self.f64s(n)?,
            v: self.f64s(n)?,
        })
    }
}

pub fn decode(bytes: &[u8]) -> Result<Agent> {
    let mut r = Reader { buf: bytes };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let params = PolicyParams {
        actor: r.mlp()?,
        critic: r.mlp()?,
    };
    let actor_opt = r.adam()?;
    let critic_opt = r.adam()?;
    if !r.buf.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", r.buf.len())));
    }
    if actor_opt.m.len() != params.actor.params.len() || critic_opt.m.len() != params.critic.params.len() {
        return Err(Error::Checkpoint("optimizer state does not match the networks".into()));
    }
    if params.actor.input_width() != params.critic.input_width() || params.critic.output_width() != 1 {
        return Err(Error::Checkpoint("actor and critic shapes disagree".into()));
    }
    Ok(Agent {
        params,
        actor_opt,
        critic_opt,
    })
}

/// Writes `path` and the sidecar next to it with a `.json` extension.
pub fn save(path: &Path, agent: &Agent, config_hash: &str, iteration: usize, seed: u64) -> Result<CheckpointMeta> {
    let blob = encode(agent);
    let meta = CheckpointMeta {
        version: CHECKPOINT_VERSION,
        config_hash: config_hash.to_string(),
        iteration,
        seed,
        blob_sha256: hex::encode(Sha256::digest(&blob)),
    };
    std::fs::File::create(path)?.write_all(&blob)?;
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(meta)
}

pub fn load(path: &Path) -> Result<(Agent, CheckpointMeta)> {
    let mut blob = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut blob)?;
    let meta: CheckpointMeta = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    if hex::encode(Sha256::digest(&blob)) != meta.blob_sha256 {
        return Err(Error::Checkpoint("blob does not match its sidecar digest".into()));
    }
    Ok((decode(&blob)?, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::PpoConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn agent() -> Agent {
        let params = PolicyParams::init(2, 3, &[5, 4], &mut ChaCha8Rng::seed_from_u64(0));
        let mut a = Agent::new(params, &PpoConfig::default());
        a.actor_opt.t = 7;
        a.actor_opt.m[3] = 0.25;
        a
    }

    #[test]
    fn round_trip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.bin");
        let a = agent();
        let meta = save(&path, &a, "abc", 12, 3).unwrap();
        let (b, meta2) = load(&path).unwrap();
        assert_eq!(a, b);
        assert_eq!(meta, meta2);
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.bin");
        save(&path, &agent(), "abc", 0, 0).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load(&path), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn truncated_blob_is_rejected() {
        let bytes = encode(&agent());
        for cut in [0, 8, 12, bytes.len() / 2, bytes.len() - 1] {
            assert!(decode(&bytes[..cut]).is_err(), "cut {cut}");
        }
    }
}
