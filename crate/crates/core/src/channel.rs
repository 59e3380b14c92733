//! FSO backhaul and RF access channel models, plus the conversions between
//! link rate, time fraction and transmit power.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::topology::NetworkTopology;
use crate::{Error, Result};

const BOLTZMANN: f64 = 1.380_649e-23;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FsoParams {
    /// Visibility in km.
    pub visibility_km: f64,
    pub wavelength_nm: f64,
    /// Photodetector responsivity in A/W.
    pub responsivity: f64,
    /// Receiver noise variance.
    pub noise_var: f64,
    /// Exponentiated-Weibull shape `φ`.
    pub weibull_phi: f64,
    /// Exponentiated-Weibull shape `ς`.
    pub weibull_shape: f64,
    /// Exponentiated-Weibull scale `ε`.
    pub weibull_scale: f64,
    /// Angular pointing-error standard deviation in rad.
    pub sigma0: f64,
    /// Angular beamwidth in rad.
    pub beamwidth: f64,
    /// Receiver aperture radius in m.
    pub aperture_radius: f64,
    pub bandwidth_hz: f64,
    /// Maximum FSO transmit power in W; `None` leaves links uncapped.
    pub p_max: Option<f64>,
}

impl Default for FsoParams {
    fn default() -> Self {
        Self {
            visibility_km: 10.0,
            wavelength_nm: 1550.0,
            responsivity: 0.6,
            noise_var: 1e-14,
            weibull_phi: 3.21,
            weibull_shape: 1.25,
            weibull_scale: 0.94,
            sigma0: 0.02,
            beamwidth: 0.04,
            aperture_radius: 0.4,
            bandwidth_hz: 10e9,
            p_max: None,
        }
    }
}

impl FsoParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("visibility_km", self.visibility_km),
            ("wavelength_nm", self.wavelength_nm),
            ("responsivity", self.responsivity),
            ("noise_var", self.noise_var),
            ("weibull_phi", self.weibull_phi),
            ("weibull_shape", self.weibull_shape),
            ("weibull_scale", self.weibull_scale),
            ("sigma0", self.sigma0),
            ("beamwidth", self.beamwidth),
            ("aperture_radius", self.aperture_radius),
            ("bandwidth_hz", self.bandwidth_hz),
            ("p_max", self.p_max.unwrap_or(1.0)),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("fso.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Exponent of the pointing-loss power law, `ϑ²/σ0²`.
    pub fn pointing_exponent(&self) -> f64 {
        (self.beamwidth / self.sigma0).powi(2)
    }

    /// Upper end of the pointing-loss support at distance `upsilon`.
    pub fn pointing_max(&self, upsilon: f64) -> f64 {
        self.aperture_radius.powi(2) / (2.0 * self.beamwidth.powi(2) * upsilon.powi(2))
    }
}

/// Kruse visibility coefficient.
pub fn kruse_coefficient(visibility_km: f64) -> Result<f64> {
    if !(visibility_km > 0.0 && visibility_km.is_finite()) {
        return Err(Error::InvalidConfig(format!("visibility must be positive, got {visibility_km}")));
    }
    Ok(if visibility_km > 50.0 {
        1.6
    } else if visibility_km >= 6.0 {
        1.3
    } else {
        0.585 * visibility_km.cbrt()
    })
}

/// Atmospheric attenuation over `d` meters.
pub fn attenuation(d: f64, p: &FsoParams) -> f64 {
    let kappa = kruse_coefficient(p.visibility_km).expect("visibility validated");
    (-(0.0009 / p.visibility_km) * (p.wavelength_nm / 550.0).powf(kappa) * d).exp()
}

/// Exponentiated-Weibull density of the turbulence loss.
pub fn turbulence_pdf(h: f64, p: &FsoParams) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    let (phi, vs, eps) = (p.weibull_phi, p.weibull_shape, p.weibull_scale);
    let x = (h / eps).powf(vs);
    let cdf_base = -(-x).exp_m1();
    phi * vs / eps * (h / eps).powf(vs - 1.0) * (-x).exp() * cdf_base.powf(phi - 1.0)
}

/// Inverse CDF of the exponentiated-Weibull law.
pub fn turbulence_from_uniform(u: f64, p: &FsoParams) -> f64 {
    let inner = -(-u.powf(1.0 / p.weibull_phi)).ln_1p();
    p.weibull_scale * inner.powf(1.0 / p.weibull_shape)
}

pub fn sample_turbulence<R: Rng + ?Sized>(p: &FsoParams, rng: &mut R) -> f64 {
    turbulence_from_uniform(rng.sample(Open01), p)
}

/// Pointing-loss density: a power law with exponent `ϑ²/σ0² − 1` on
/// `[0, h_max)`.
pub fn pointing_pdf(h: f64, p: &FsoParams, upsilon: f64) -> f64 {
    let hmax = p.pointing_max(upsilon);
    if !(0.0..hmax).contains(&h) {
        return 0.0;
    }
    let k = p.pointing_exponent();
    k / hmax * (h / hmax).powf(k - 1.0)
}

pub fn pointing_from_uniform(u: f64, p: &FsoParams, upsilon: f64) -> f64 {
    p.pointing_max(upsilon) * u.powf(1.0 / p.pointing_exponent())
}

pub fn sample_pointing<R: Rng + ?Sized>(p: &FsoParams, upsilon: f64, rng: &mut R) -> f64 {
    pointing_from_uniform(rng.sample(Open01), p, upsilon)
}

/// `g = e·ϱ²·h²/(2π σ²)`.
pub fn gain_factor(h: f64, p: &FsoParams) -> f64 {
    std::f64::consts::E * p.responsivity.powi(2) * h * h / (2.0 * PI * p.noise_var)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsoLinkState {
    pub h_al: f64,
    pub h_at: f64,
    pub h_pl: f64,
    pub h: f64,
    pub g: f64,
}

impl FsoLinkState {
    pub fn new(h_al: f64, h_at: f64, h_pl: f64, p: &FsoParams) -> Self {
        let h = h_al * h_at * h_pl;
        Self {
            h_al,
            h_at,
            h_pl,
            h,
            g: gain_factor(h, p),
        }
    }
}

/// Draws one state per link of the topology.
pub fn sample_fso<R: Rng + ?Sized>(topology: &NetworkTopology, p: &FsoParams, rng: &mut R) -> Vec<FsoLinkState> {
    topology
        .links
        .iter()
        .map(|link| {
            let h_al = attenuation(link.distance, p);
            let h_at = sample_turbulence(p, rng);
            let h_pl = sample_pointing(p, link.upsilon, rng);
            FsoLinkState::new(h_al, h_at, h_pl, p)
        })
        .collect()
}

/// Minimum slot-average transmit power delivering rate `gamma` within time
/// fraction `tau`.
pub fn fso_power_for_rate(gamma: f64, tau: f64, g: f64, p: &FsoParams) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(0.0);
    }
    if tau <= 0.0 {
        return Err(Error::Infeasible(format!("rate {gamma} with zero time fraction")));
    }
    if g <= 0.0 {
        return Err(Error::Infeasible("rate on a link with zero gain".into()));
    }
    let x = 2.0 * LN_2 * gamma / (p.bandwidth_hz * tau);
    Ok((tau * tau / g * x.exp_m1()).sqrt())
}

/// Rate achieved with slot-average power `power` over time fraction `tau`.
pub fn rate_for_power(power: f64, tau: f64, g: f64, p: &FsoParams) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    tau * p.bandwidth_hz / (2.0 * LN_2) * (g * (power / tau).powi(2)).ln_1p()
}

/// High-SNR perspective power `τ·exp(γ ln2/(B τ))/√g`.
pub fn approx_link_power(gamma: f64, tau: f64, g: f64, p: &FsoParams) -> f64 {
    if gamma == 0.0 || tau == 0.0 {
        return 0.0;
    }
    tau * (gamma * LN_2 / (p.bandwidth_hz * tau)).exp() / g.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfParams {
    /// Antennas per HAP.
    pub antennas: usize,
    pub carrier_hz: f64,
    /// Rician factor; `inf` gives pure line of sight.
    pub rician_k: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Overrides the thermal noise power when set.
    pub noise_power: Option<f64>,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            antennas: 6,
            carrier_hz: 2e9,
            rician_k: 5.0,
            bandwidth_hz: 10e6,
            noise_figure_db: 7.0,
            noise_power: None,
        }
    }
}

impl RfParams {
    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::InvalidConfig("rf.antennas must be at least 1".into()));
        }
        for (name, v) in [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_power", self.noise_power.unwrap_or(1.0)),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("rf.{name} must be positive, got {v}")));
            }
        }
        if !(self.rician_k >= 0.0) || !self.noise_figure_db.is_finite() {
            return Err(Error::InvalidConfig("rf.rician_k must be nonnegative".into()));
        }
        Ok(())
    }

    /// Thermal noise at 290 K over the bandwidth, scaled by the noise figure.
    pub fn noise(&self) -> f64 {
        self.noise_power
            .unwrap_or_else(|| BOLTZMANN * 290.0 * self.bandwidth_hz * 10f64.powf(self.noise_figure_db / 10.0))
    }

    pub fn path_loss(&self, d: f64) -> f64 {
        (SPEED_OF_LIGHT / (4.0 * PI * self.carrier_hz * d)).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfChannelState {
    pub antennas: usize,
    pub noise_power: f64,
    /// Channel of each user from its serving HAP.
    pub h: Vec<Vec<Complex64>>,
}

/// Free-space path loss times Rician fading over a half-wavelength ULA
/// aligned with the x axis.
pub fn sample_rf<R: Rng + ?Sized>(topology: &NetworkTopology, p: &RfParams, rng: &mut R) -> RfChannelState {
    let m = p.antennas;
    let (w_los, w_nlos) = if p.rician_k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((p.rician_k / (p.rician_k + 1.0)).sqrt(), (1.0 / (p.rician_k + 1.0)).sqrt())
    };
    let h = topology
        .users
        .iter()
        .map(|user| {
            let hap = topology.haps[user.hap].position;
            let delta = [
                user.position[0] - hap[0],
                user.position[1] - hap[1],
                user.position[2] - hap[2],
            ];
            let d = (delta[0].powi(2) + delta[1].powi(2) + delta[2].powi(2)).sqrt();
            let amp = p.path_loss(d).sqrt();
            let sin_theta = delta[0] / d;
            (0..m)
                .map(|i| {
                    let los = Complex64::from_polar(1.0, PI * i as f64 * sin_theta);
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let nlos = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                    (los * w_los + nlos * w_nlos) * amp
                })
                .collect()
        })
        .collect();
    RfChannelState {
        antennas: m,
        noise_power: p.noise(),
        h,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_topology, GeometryConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kruse_branches() {
        assert_eq!(kruse_coefficient(60.0).unwrap(), 1.6);
        assert_eq!(kruse_coefficient(10.0).unwrap(), 1.3);
        assert_eq!(kruse_coefficient(6.0).unwrap(), 1.3);
        assert_eq!(kruse_coefficient(50.0).unwrap(), 1.3);
        assert_eq!(kruse_coefficient(1.0).unwrap(), 0.585);
        assert!(kruse_coefficient(0.0).is_err());
        assert!(kruse_coefficient(-3.0).is_err());
    }

    #[test]
    fn attenuation_decays() {
        let p = FsoParams::default();
        assert_eq!(attenuation(0.0, &p), 1.0);
        assert!(attenuation(1000.0, &p) > attenuation(2000.0, &p));
    }

    #[test]
    fn plain_weibull_median_point() {
        let p = FsoParams {
            weibull_phi: 1.0,
            ..Default::default()
        };
        let u = 1.0 - (-1.0f64).exp();
        assert!((turbulence_from_uniform(u, &p) - p.weibull_scale).abs() < 1e-12);
        assert!(turbulence_from_uniform(1e-300, &p) < 1e-50);
    }

    #[test]
    fn pointing_support() {
        let p = FsoParams::default();
        let hmax = p.pointing_max(50e3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let h = sample_pointing(&p, 50e3, &mut rng);
            assert!((0.0..hmax).contains(&h));
        }
        let near = pointing_from_uniform(1.0 - 1e-15, &p, 50e3);
        assert!(near < hmax && near > hmax * (1.0 - 1e-12));
    }

    #[test]
    fn power_rate_round_trip_and_tau_monotone() {
        let p = FsoParams::default();
        assert_eq!(fso_power_for_rate(0.0, 0.5, 1.0, &p).unwrap(), 0.0);
        assert!(fso_power_for_rate(1e6, 0.0, 1.0, &p).is_err());
        let g = 3.7;
        let gamma = 2.5e9;
        let pw = fso_power_for_rate(gamma, 0.4, g, &p).unwrap();
        let back = rate_for_power(pw, 0.4, g, &p);
        assert!((back - gamma).abs() <= 1e-9 * gamma);
        // Power falls with τ once 2·ln2·γ/(B·τ) exceeds about 1.59.
        let fast = 2e10;
        assert!(fso_power_for_rate(fast, 1.0, g, &p).unwrap() < fso_power_for_rate(fast, 0.5, g, &p).unwrap());
    }

    #[test]
    fn composite_gain_product() {
        let p = FsoParams::default();
        let s = FsoLinkState::new(0.3, 0.9, 1e-3, &p);
        assert_eq!(s.h, 0.3 * 0.9 * 1e-3);
        assert_eq!(s.g, gain_factor(s.h, &p));
    }

    #[test]
    fn rf_pure_los_has_deterministic_magnitudes() {
        let cfg = GeometryConfig {
            haps: 2,
            dcs: 0,
            users: 4,
            ..Default::default()
        };
        let t = build_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let p = RfParams {
            rician_k: f64::INFINITY,
            ..Default::default()
        };
        let a = sample_rf(&t, &p, &mut ChaCha8Rng::seed_from_u64(1));
        let b = sample_rf(&t, &p, &mut ChaCha8Rng::seed_from_u64(2));
        for (ha, hb) in a.h.iter().zip(&b.h) {
            for (x, y) in ha.iter().zip(hb) {
                assert!((x - y).norm() < 1e-18);
            }
        }
    }

    #[test]
    fn thermal_noise_default() {
        let p = RfParams::default();
        let expect = 1.380_649e-23 * 290.0 * 10e6 * 10f64.powf(0.7);
        assert!((p.noise() - expect).abs() < 1e-25);
    }
}
