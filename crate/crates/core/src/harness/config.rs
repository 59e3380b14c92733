//! Scenario configuration, named profiles and sweep overrides.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{FsoParams, RfParams};
use crate::ppo::PpoConfig;
use crate::topology::GeometryConfig;
use crate::traffic::CatalogConfig;
use crate::{Error, Result};

/// FSO receiver noise variance that puts backhaul and access power on a
/// comparable scale at the default geometry.
pub const CALIBRATED_FSO_NOISE: f64 = 1e-31;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub geometry: GeometryConfig,
    pub catalog: CatalogConfig,
    /// Cache capacity per HAP, `N_sto`.
    pub n_sto: usize,
    /// Weight of HAP-side power, `ω`.
    pub omega: f64,
    pub fso: FsoParams,
    pub rf: RfParams,
    pub ppo: PpoConfig,
    /// Episodes of `ppo.horizon` slots used to score every method.
    pub eval_episodes: usize,
    /// Gaussian randomization draws per HAP.
    pub candidates: usize,
    pub seeds: Vec<u64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl ScenarioConfig {
    /// Full-scale evaluation setting.
    pub fn full() -> Self {
        Self {
            name: "full".into(),
            geometry: GeometryConfig::default(),
            catalog: CatalogConfig::default(),
            n_sto: 10,
            omega: 1.0,
            fso: FsoParams {
                noise_var: CALIBRATED_FSO_NOISE,
                ..FsoParams::default()
            },
            rf: RfParams::default(),
            ppo: PpoConfig::default(),
            eval_episodes: 2,
            candidates: crate::beamforming::DEFAULT_CANDIDATES,
            seeds: vec![0, 1, 2],
        }
    }

    /// Small setting that trains in seconds.
    pub fn desk() -> Self {
        let mut cfg = Self::full();
        cfg.name = "desk".into();
        cfg.geometry.haps = 3;
        cfg.geometry.dcs = 1;
        cfg.geometry.users = 12;
        cfg.catalog.contents = 5;
        cfg.rf.antennas = 3;
        cfg.n_sto = 2;
        cfg.ppo.horizon = 16;
        cfg.ppo.iter_max = 50;
        cfg.eval_episodes = 16;
        cfg
    }

    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "full" => Ok(Self::full()),
            "desk" => Ok(Self::desk()),
            other => Err(Error::InvalidConfig(format!("unknown profile {other:?} (expected full or desk)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.catalog.validate()?;
        self.fso.validate()?;
        self.rf.validate()?;
        self.ppo.validate()?;
        if self.n_sto > self.catalog.contents {
            return Err(Error::InvalidConfig(format!(
                "n_sto = {} exceeds the catalog of {} contents",
                self.n_sto, self.catalog.contents
            )));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidConfig(format!("omega must be nonnegative, got {}", self.omega)));
        }
        if self.eval_episodes == 0 {
            return Err(Error::InvalidConfig("eval_episodes must be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Copy with one axis set to `value`.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidConfig(format!("{axis} needs a whole number, got {v}")))
            }
        };
        match axis {
            Axis::Contents => cfg.catalog.contents = count(value)?,
            Axis::Users => cfg.geometry.users = count(value)?,
            Axis::MuCac => cfg.catalog.mu_cac = value,
            Axis::MuAcc => cfg.catalog.mu_acc = value,
            Axis::NSto => cfg.n_sto = count(value)?,
            Axis::BFso => cfg.fso.bandwidth_hz = value,
            Axis::BRf => cfg.rf.bandwidth_hz = value,
            Axis::Visibility => cfg.fso.visibility_km = value,
            Axis::Omega => cfg.omega = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Contents,
    Users,
    MuCac,
    MuAcc,
    NSto,
    BFso,
    BRf,
    Visibility,
    Omega,
}

impl Axis {
    pub const ALL: [Axis; 9] = [
        Axis::Contents,
        Axis::Users,
        Axis::MuCac,
        Axis::MuAcc,
        Axis::NSto,
        Axis::BFso,
        Axis::BRf,
        Axis::Visibility,
        Axis::Omega,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Contents => "contents",
            Axis::Users => "users",
            Axis::MuCac => "mu_cac",
            Axis::MuAcc => "mu_acc",
            Axis::NSto => "n_sto",
            Axis::BFso => "b_fso",
            Axis::BRf => "b_rf",
            Axis::Visibility => "visibility",
            Axis::Omega => "omega",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown axis {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_defaults() {
        let c = ScenarioConfig::full();
        assert_eq!((c.geometry.dcs, c.geometry.haps, c.rf.antennas), (2, 7, 6));
        assert_eq!((c.geometry.users, c.catalog.contents), (105, 30));
        assert_eq!(c.omega, 1.0);
        assert_eq!((c.fso.bandwidth_hz, c.rf.bandwidth_hz), (10e9, 10e6));
        assert_eq!((c.catalog.mu_cac, c.catalog.mu_acc), (10e6, 4e6));
        assert_eq!((c.fso.weibull_phi, c.fso.weibull_shape, c.fso.weibull_scale), (3.21, 1.25, 0.94));
        assert_eq!((c.fso.sigma0, c.fso.beamwidth, c.fso.aperture_radius), (0.02, 0.04, 0.4));
        assert_eq!((c.fso.wavelength_nm, c.fso.responsivity, c.rf.rician_k), (1550.0, 0.6, 5.0));
        c.validate().unwrap();
    }

    #[test]
    fn desk_profile() {
        let c = ScenarioConfig::desk();
        assert_eq!((c.geometry.haps, c.geometry.dcs, c.geometry.users), (3, 1, 12));
        assert_eq!((c.catalog.contents, c.rf.antennas, c.n_sto), (5, 3, 2));
        assert_eq!((c.ppo.horizon, c.ppo.iter_max), (16, 50));
        c.validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let c = ScenarioConfig::desk();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
        let partial = ScenarioConfig::from_toml("n_sto = 3\n[catalog]\ncontents = 8\n").unwrap();
        assert_eq!((partial.n_sto, partial.catalog.contents, partial.geometry.haps), (3, 8, 7));
        assert!(ScenarioConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn axis_overrides() {
        let c = ScenarioConfig::desk();
        assert_eq!(c.with_axis(Axis::Visibility, 2.5).unwrap().fso.visibility_km, 2.5);
        assert_eq!(c.with_axis(Axis::Users, 20.0).unwrap().geometry.users, 20);
        assert!(c.with_axis(Axis::Users, 2.5).is_err());
        assert!(c.with_axis(Axis::NSto, 9.0).is_err());
        for a in Axis::ALL {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
        }
        assert_ne!(c.hash(), c.with_axis(Axis::Omega, 2.0).unwrap().hash());
    }
}
