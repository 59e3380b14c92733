//! Content requests, demand rates and bi-rate multicast sessions.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::topology::{NetworkTopology, Node};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    pub contents: usize,
    /// Caching rate requirement in bit/s.
    pub mu_cac: f64,
    /// Access rate requirement in bit/s.
    pub mu_acc: f64,
    pub zipf_min: f64,
    pub zipf_max: f64,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        Self {
            contents: 30,
            mu_cac: 10e6,
            mu_acc: 4e6,
            zipf_min: 0.5,
            zipf_max: 4.0,
        }
    }
}

impl CatalogConfig {
    pub fn validate(&self) -> Result<()> {
        if self.contents == 0 {
            return Err(Error::InvalidConfig("catalog needs at least one content".into()));
        }
        if !(self.mu_cac > 0.0 && self.mu_acc > 0.0 && self.mu_cac.is_finite() && self.mu_acc.is_finite()) {
            return Err(Error::InvalidConfig("rate requirements must be positive".into()));
        }
        if !(self.zipf_min > 0.0 && self.zipf_min <= self.zipf_max && self.zipf_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "invalid Zipf skew range [{}, {}]",
                self.zipf_min, self.zipf_max
            )));
        }
        Ok(())
    }
}

/// Content catalog with the per-HAP popularity laws fixed for an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub contents: usize,
    pub mu_cac: f64,
    pub mu_acc: f64,
    pub zipf_skews: Vec<f64>,
    /// `ranking[k][r]` is the content of popularity rank `r` under HAP `k`.
    pub ranking: Vec<Vec<usize>>,
}

impl Catalog {
    /// Draws one skew per HAP uniformly from the configured range and a
    /// random rank permutation per HAP.
    pub fn generate<R: Rng + ?Sized>(cfg: &CatalogConfig, haps: usize, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let zipf_skews = (0..haps)
            .map(|_| rng.random_range(cfg.zipf_min..=cfg.zipf_max))
            .collect();
        let ranking = (0..haps)
            .map(|_| {
                let mut p: Vec<usize> = (0..cfg.contents).collect();
                p.shuffle(rng);
                p
            })
            .collect();
        Ok(Self {
            contents: cfg.contents,
            mu_cac: cfg.mu_cac,
            mu_acc: cfg.mu_acc,
            zipf_skews,
            ranking,
        })
    }

    /// Catalog with explicit skews and identity rankings.
    pub fn with_skews(contents: usize, mu_cac: f64, mu_acc: f64, zipf_skews: Vec<f64>) -> Self {
        let ranking = vec![(0..contents).collect(); zipf_skews.len()];
        Self {
            contents,
            mu_cac,
            mu_acc,
            zipf_skews,
            ranking,
        }
    }
}

/// Binary `K × C` cache placement, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CachePlacement {
    pub haps: usize,
    pub contents: usize,
    pub z: Vec<bool>,
}

impl CachePlacement {
    pub fn empty(haps: usize, contents: usize) -> Self {
        Self {
            haps,
            contents,
            z: vec![false; haps * contents],
        }
    }

    pub fn full(haps: usize, contents: usize) -> Self {
        Self {
            haps,
            contents,
            z: vec![true; haps * contents],
        }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Self {
        let contents = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == contents), "ragged placement rows");
        Self {
            haps: rows.len(),
            contents,
            z: rows.concat(),
        }
    }

    pub fn get(&self, k: usize, c: usize) -> bool {
        self.z[k * self.contents + c]
    }

    pub fn set(&mut self, k: usize, c: usize, v: bool) {
        self.z[k * self.contents + c] = v;
    }

    pub fn row_count(&self, k: usize) -> usize {
        self.z[k * self.contents..(k + 1) * self.contents].iter().filter(|&&b| b).count()
    }

    /// Storage constraint: at most `n_sto` contents per HAP.
    pub fn within_capacity(&self, n_sto: usize) -> bool {
        (0..self.haps).all(|k| self.row_count(k) <= n_sto)
    }

    fn check_shape(&self, haps: usize, contents: usize) -> Result<()> {
        if self.haps != haps || self.contents != contents || self.z.len() != haps * contents {
            return Err(Error::ShapeMismatch(format!(
                "placement is {}x{}, expected {haps}x{contents}",
                self.haps, self.contents
            )));
        }
        Ok(())
    }
}

/// One requested content per user; `alpha(u, c)` is the binary indicator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RequestMatrix {
    pub contents: usize,
    pub choice: Vec<usize>,
}

impl RequestMatrix {
    pub fn alpha(&self, u: usize, c: usize) -> u8 {
        u8::from(self.choice[u] == c)
    }

    pub fn users(&self) -> usize {
        self.choice.len()
    }

    pub fn to_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.users())
            .map(|u| (0..self.contents).map(|c| self.alpha(u, c)).collect())
            .collect()
    }
}

/// Each user draws a popularity rank from its serving HAP's Zipf law.
pub fn sample_requests<R: Rng + ?Sized>(catalog: &Catalog, topology: &NetworkTopology, rng: &mut R) -> RequestMatrix {
    let laws: Vec<Zipf<f64>> = catalog
        .zipf_skews
        .iter()
        .map(|&s| Zipf::new(catalog.contents as f64, s).expect("skew validated positive"))
        .collect();
    let choice = topology
        .users
        .iter()
        .map(|user| {
            let rank = laws[user.hap].sample(rng) as usize;
            catalog.ranking[user.hap][rank.clamp(1, catalog.contents) - 1]
        })
        .collect();
    RequestMatrix {
        contents: catalog.contents,
        choice,
    }
}

/// Per-slot demand rates, each `K × C` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    pub haps: usize,
    pub contents: usize,
    pub beta: Vec<f64>,
    pub f_cac: Vec<f64>,
    pub f_acc: Vec<f64>,
}

impl DemandProfile {
    pub fn idx(&self, k: usize, c: usize) -> usize {
        k * self.contents + c
    }
}

/// Caching demand: `mu_cac` wherever a content is newly inserted.
pub fn caching_demand(z_now: &CachePlacement, z_next: &CachePlacement, catalog: &Catalog) -> Result<Vec<f64>> {
    z_next.check_shape(z_now.haps, z_now.contents)?;
    z_now.check_shape(z_now.haps, catalog.contents)?;
    Ok(z_now
        .z
        .iter()
        .zip(&z_next.z)
        .map(|(&now, &next)| if next && !now { catalog.mu_cac } else { 0.0 })
        .collect())
}

/// Access demand `beta` and its backhaul part `f_acc = (1 − z)·beta`.
pub fn access_demand(
    z: &CachePlacement,
    alpha: &RequestMatrix,
    catalog: &Catalog,
    topology: &NetworkTopology,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = topology.num_haps();
    z.check_shape(k, catalog.contents)?;
    if alpha.users() != topology.num_users() || alpha.contents != catalog.contents {
        return Err(Error::ShapeMismatch(format!(
            "requests cover {} users x {} contents, expected {} x {}",
            alpha.users(),
            alpha.contents,
            topology.num_users(),
            catalog.contents
        )));
    }
    let mut beta = vec![0.0; k * catalog.contents];
    for (u, user) in topology.users.iter().enumerate() {
        if user.hap >= k {
            return Err(Error::ShapeMismatch(format!("user {u} served by unknown HAP {}", user.hap)));
        }
        beta[user.hap * catalog.contents + alpha.choice[u]] = catalog.mu_acc;
    }
    let f_acc = beta
        .iter()
        .zip(&z.z)
        .map(|(&b, &cached)| if cached { 0.0 } else { b })
        .collect();
    Ok((beta, f_acc))
}

/// Full demand profile for a transition `z_now → z_next` under requests `alpha`.
pub fn demand_profile(
    z_now: &CachePlacement,
    z_next: &CachePlacement,
    alpha: &RequestMatrix,
    catalog: &Catalog,
    topology: &NetworkTopology,
) -> Result<DemandProfile> {
    let f_cac = caching_demand(z_now, z_next, catalog)?;
    let (beta, f_acc) = access_demand(z_now, alpha, catalog, topology)?;
    Ok(DemandProfile {
        haps: z_now.haps,
        contents: z_now.contents,
        beta,
        f_cac,
        f_acc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticastSession {
    pub content: usize,
    pub sources: Vec<Node>,
    pub dest_cac: Vec<usize>,
    pub dest_acc: Vec<usize>,
    pub mu_cac: f64,
    pub mu_acc: f64,
}

impl MulticastSession {
    /// Every destination with its required rate, caching destinations first.
    pub fn destinations(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.dest_cac
            .iter()
            .map(|&k| (k, self.mu_cac))
            .chain(self.dest_acc.iter().map(|&k| (k, self.mu_acc)))
    }

    pub fn is_source(&self, n: Node) -> bool {
        self.sources.contains(&n)
    }
}

/// Groups the demand into one bi-rate session per content with any demand.
pub fn build_sessions(
    z: &CachePlacement,
    demand: &DemandProfile,
    topology: &NetworkTopology,
    catalog: &Catalog,
) -> Result<Vec<MulticastSession>> {
    let k_count = topology.num_haps();
    z.check_shape(k_count, catalog.contents)?;
    if demand.haps != k_count || demand.contents != catalog.contents {
        return Err(Error::ShapeMismatch("demand profile does not match the placement".into()));
    }
    let mut sessions = Vec::new();
    for c in 0..catalog.contents {
        let mut dest_cac = Vec::new();
        let mut dest_acc = Vec::new();
        for k in 0..k_count {
            let i = demand.idx(k, c);
            let (fc, fa) = (demand.f_cac[i], demand.f_acc[i]);
            if z.get(k, c) && fa > 0.0 {
                return Err(Error::DemandInconsistent(format!(
                    "HAP {k} caches content {c} but has backhaul access demand"
                )));
            }
            let m = fc.max(fa);
            if m <= 0.0 {
                continue;
            }
            if z.get(k, c) {
                return Err(Error::DemandInconsistent(format!(
                    "HAP {k} is both a source and a destination of content {c}"
                )));
            }
            if m == catalog.mu_cac {
                dest_cac.push(k);
            } else if m == catalog.mu_acc {
                dest_acc.push(k);
            } else {
                return Err(Error::DemandInconsistent(format!(
                    "HAP {k} content {c} has rate {m} matching neither requirement"
                )));
            }
        }
        if dest_cac.is_empty() && dest_acc.is_empty() {
            continue;
        }
        let sources = (0..k_count)
            .filter(|&k| z.get(k, c))
            .map(Node::Hap)
            .chain((0..topology.num_dcs()).map(Node::Dc))
            .collect();
        sessions.push(MulticastSession {
            content: c,
            sources,
            dest_cac,
            dest_acc,
            mu_cac: catalog.mu_cac,
            mu_acc: catalog.mu_acc,
        });
    }
    Ok(sessions)
}
