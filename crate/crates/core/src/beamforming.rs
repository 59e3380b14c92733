//! Multigroup multicast beamforming at each HAP: semidefinite relaxation,
//! rank-one extraction and Gaussian randomization.
//!
//! Every user belongs to exactly one group (the content it requests) at its
//! serving HAP. HAPs do not interfere with each other, so each HAP is an
//! independent program.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{RfChannelState, RfParams};
use crate::conic::{herm_from_params, herm_params_len, BarrierSolver, ConicProgram, ConicSolver, SolveStatus, SolverError};
use crate::topology::NetworkTopology;
use crate::traffic::RequestMatrix;
use crate::{Error, Result};

/// Eigenvalue ratio `λ2/λ1` below which a relaxed matrix counts as rank one.
pub const RANK_ONE_TOL: f64 = 1e-6;
pub const DEFAULT_CANDIDATES: usize = 100;

/// SINR target that sustains `rate` over `bandwidth`.
pub fn sinr_target(rate: f64, bandwidth: f64) -> f64 {
    (rate / bandwidth * std::f64::consts::LN_2).exp_m1()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub content: usize,
    pub users: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingProblem {
    pub antennas: usize,
    pub noise_power: f64,
    pub omega: f64,
    /// SINR target per content.
    pub delta: Vec<f64>,
    /// Nonempty groups per HAP.
    pub groups: Vec<Vec<Group>>,
    /// Channel vector per user, indexed by global user id.
    pub channels: Vec<Vec<Complex64>>,
}

impl BeamformingProblem {
    /// Groups users by serving HAP and requested content.
    pub fn from_requests(
        topology: &NetworkTopology,
        requests: &RequestMatrix,
        rf: &RfChannelState,
        params: &RfParams,
        mu_acc: f64,
        omega: f64,
    ) -> Result<Self> {
        if requests.users() != topology.num_users() || rf.h.len() != topology.num_users() {
            return Err(Error::ShapeMismatch(format!(
                "{} users in topology, {} requests, {} channels",
                topology.num_users(),
                requests.users(),
                rf.h.len()
            )));
        }
        let c = requests.contents;
        let mut groups = vec![Vec::new(); topology.num_haps()];
        for (k, hap_groups) in groups.iter_mut().enumerate() {
            for content in 0..c {
                let users: Vec<usize> = topology.users_of(k).filter(|&u| requests.choice[u] == content).collect();
                if !users.is_empty() {
                    hap_groups.push(Group { content, users });
                }
            }
        }
        let problem = Self {
            antennas: rf.antennas,
            noise_power: rf.noise_power,
            omega,
            delta: vec![sinr_target(mu_acc, params.bandwidth_hz); c],
            groups,
            channels: rf.h.clone(),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidConfig("SINR targets must be positive".into()));
        }
        if !(self.noise_power > 0.0) || !(self.omega >= 0.0) {
            return Err(Error::InvalidConfig("noise power must be positive and omega nonnegative".into()));
        }
        if let Some(h) = self.channels.iter().find(|h| h.len() != self.antennas) {
            return Err(Error::ShapeMismatch(format!("channel of length {} with {} antennas", h.len(), self.antennas)));
        }
        for g in self.groups.iter().flatten() {
            if g.users.is_empty() {
                return Err(Error::InvalidConfig(format!("empty group for content {}", g.content)));
            }
            if g.content >= self.delta.len() || g.users.iter().any(|&u| u >= self.channels.len()) {
                return Err(Error::ShapeMismatch("group refers to unknown content or user".into()));
            }
        }
        Ok(())
    }

    /// `H_i = h_i h_iᴴ`.
    pub fn outer(&self, user: usize) -> DMatrix<Complex64> {
        let h = &self.channels[user];
        DMatrix::from_fn(self.antennas, self.antennas, |a, b| h[a] * h[b].conj())
    }

    fn channel_norm_sqr(&self, user: usize) -> f64 {
        self.channels[user].iter().map(|z| z.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct HapSdp {
    /// One relaxed covariance per group, in group order.
    pub w: Vec<DMatrix<Complex64>>,
    pub power: f64,
    pub lower_bound: f64,
    /// Set when the relaxation had no strict interior.
    pub relaxed: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub haps: Vec<HapSdp>,
    /// `Σ tr(W)` over all HAPs.
    pub power: f64,
    pub lower_bound: f64,
}

impl SdpSolution {
    pub fn objective(&self, omega: f64) -> f64 {
        omega * self.power
    }
}

/// Linear coefficients of `tr(W H)` in the parameters of `W`.
fn trace_coeffs(h: &DMatrix<Complex64>) -> Vec<f64> {
    let m = h.nrows();
    let mut out = Vec::with_capacity(herm_params_len(m));
    for i in 0..m {
        out.push(h[(i, i)].re);
    }
    for i in 0..m {
        for j in (i + 1)..m {
            out.push(2.0 * h[(i, j)].re);
            out.push(2.0 * h[(i, j)].im);
        }
    }
    out
}

pub fn solve_sdp(problem: &BeamformingProblem) -> Result<SdpSolution> {
    solve_sdp_with(problem, &BarrierSolver { tol: 1e-9, ..Default::default() })
}

pub fn solve_sdp_with(problem: &BeamformingProblem, solver: &dyn ConicSolver) -> Result<SdpSolution> {
    problem.validate()?;
    let haps = (0..problem.groups.len())
        .map(|k| solve_hap(problem, k, solver))
        .collect::<Result<Vec<_>>>()?;
    Ok(SdpSolution {
        power: haps.iter().map(|h| h.power).sum(),
        lower_bound: haps.iter().map(|h| h.lower_bound).sum(),
        haps,
    })
}

fn solve_hap(problem: &BeamformingProblem, k: usize, solver: &dyn ConicSolver) -> Result<HapSdp> {
    let groups = &problem.groups[k];
    let m = problem.antennas;
    if groups.is_empty() {
        return Ok(HapSdp {
            w: Vec::new(),
            power: 0.0,
            lower_bound: 0.0,
            relaxed: None,
        });
    }
    let block = herm_params_len(m);
    let sigma2 = problem.noise_power;
    // Work in units of the costliest single-user matched-filter power.
    let scale = groups
        .iter()
        .flat_map(|g| g.users.iter().map(move |&u| problem.delta[g.content] * sigma2 / problem.channel_norm_sqr(u)))
        .fold(0.0, f64::max);

    let mut prog = ConicProgram::new(groups.len() * block);
    for gi in 0..groups.len() {
        for i in 0..m {
            prog.c[gi * block + i] = 1.0;
        }
    }
    for (gi, g) in groups.iter().enumerate() {
        let inv_delta = 1.0 / problem.delta[g.content];
        for &u in &g.users {
            let coeffs = trace_coeffs(&(problem.outer(u) * Complex64::from(scale / sigma2)));
            let mut row = Vec::with_capacity(groups.len() * block);
            for li in 0..groups.len() {
                let f = if li == gi { -inv_delta } else { 1.0 };
                row.extend(coeffs.iter().enumerate().map(|(j, &v)| (li * block + j, f * v)));
            }
            prog.add_le(row, -1.0);
        }
    }
    let trace_row = (0..groups.len())
        .flat_map(|gi| (0..m).map(move |i| (gi * block + i, 1.0)))
        .collect();
    prog.add_le(trace_row, 1e6 * groups.len() as f64);
    for gi in 0..groups.len() {
        prog.add_psd_block(gi * block, m);
    }

    let sol = solver.solve(&prog).map_err(|err| match err {
        SolverError::Infeasible { violation } => Error::Infeasible(format!(
            "SINR targets at HAP {k} cannot be met (violation {violation:.3e})"
        )),
        other => Error::Solver(other),
    })?;
    let w: Vec<_> = (0..groups.len())
        .map(|gi| herm_from_params(m, &sol.x[gi * block..(gi + 1) * block]) * Complex64::from(scale))
        .collect();
    for (gi, wi) in w.iter().enumerate() {
        let eig = wi.clone().symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        if lo < -1e-8 * hi.max(scale) {
            return Err(Error::Solver(SolverError::Numerical(format!(
                "HAP {k} group {gi}: relaxed beamformer not PSD (eigenvalue {lo:.3e})"
            ))));
        }
    }
    Ok(HapSdp {
        power: w.iter().map(|w| w.trace().re).sum(),
        lower_bound: sol.lower_bound().max(0.0) * scale,
        relaxed: match sol.status {
            SolveStatus::Optimal => None,
            SolveStatus::OptimalRelaxed { slack } => Some(slack),
        },
        w,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HapBeams {
    /// One beamformer per group, in group order.
    pub w: Vec<Vec<Complex64>>,
    pub group_power: Vec<f64>,
    pub randomized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamVectors {
    pub haps: Vec<HapBeams>,
    /// Achieved SINR per user; NaN for users not in any group.
    pub sinr: Vec<f64>,
    pub p_rf: f64,
}

/// `|w_cᴴ h_i|² / (Σ_{c̃≠c} |w_c̃ᴴ h_i|² + σ²)` for every user of every group
/// at one HAP. The result is parallel to `groups[..].users`.
pub fn compute_sinr(w: &[Vec<Complex64>], groups: &[Group], channels: &[Vec<Complex64>], noise: f64) -> Vec<Vec<f64>> {
    groups
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            g.users
                .iter()
                .map(|&u| {
                    let rx: Vec<f64> = w.iter().map(|wc| inner(wc, &channels[u]).norm_sqr()).collect();
                    let interference: f64 = rx.iter().enumerate().filter(|&(l, _)| l != gi).map(|(_, p)| p).sum();
                    rx[gi] / (interference + noise)
                })
                .collect()
        })
        .collect()
}

/// `wᴴ h`.
fn inner(w: &[Complex64], h: &[Complex64]) -> Complex64 {
    w.iter().zip(h).map(|(a, b)| a.conj() * b).sum()
}

/// Smallest common factor `s` on the powers of `w` with every SINR at its
/// target, or `None` if some user stays interference limited.
fn rescale_factor(w: &[Vec<Complex64>], groups: &[Group], problem: &BeamformingProblem) -> Option<f64> {
    let mut s = 0.0f64;
    for (gi, g) in groups.iter().enumerate() {
        let delta = problem.delta[g.content];
        for &u in &g.users {
            let h = &problem.channels[u];
            let mut signal = 0.0;
            let mut interference = 0.0;
            for (l, wl) in w.iter().enumerate() {
                let p = inner(wl, h).norm_sqr();
                if l == gi {
                    signal = p;
                } else {
                    interference += p;
                }
            }
            let margin = signal - delta * interference;
            if !(margin > 0.0) {
                return None;
            }
            s = s.max(delta * problem.noise_power / margin);
        }
    }
    Some(s)
}

fn scaled(w: &[Vec<Complex64>], s: f64) -> Vec<Vec<Complex64>> {
    let f = s.sqrt();
    w.iter().map(|v| v.iter().map(|z| z * f).collect()).collect()
}

fn power(w: &[Vec<Complex64>]) -> f64 {
    w.iter().flatten().map(|z| z.norm_sqr()).sum()
}

/// Eigenpairs sorted by decreasing eigenvalue, negatives clipped to zero.
fn eigen_desc(w: &DMatrix<Complex64>) -> (Vec<f64>, Vec<DVector<Complex64>>) {
    let eig = w.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    (values, vectors)
}

pub fn extract_beams<R: Rng + ?Sized>(
    sdp: &SdpSolution,
    problem: &BeamformingProblem,
    rng: &mut R,
    n_candidates: usize,
) -> Result<BeamVectors> {
    if sdp.haps.len() != problem.groups.len() {
        return Err(Error::ShapeMismatch("SDP solution and problem disagree on HAP count".into()));
    }
    let mut haps = Vec::with_capacity(sdp.haps.len());
    let mut sinr = vec![f64::NAN; problem.channels.len()];
    for (k, hap) in sdp.haps.iter().enumerate() {
        let groups = &problem.groups[k];
        let beams = extract_hap(k, hap, groups, problem, rng, n_candidates)?;
        let table = compute_sinr(&beams.w, groups, &problem.channels, problem.noise_power);
        for (g, row) in groups.iter().zip(table) {
            for (&u, v) in g.users.iter().zip(row) {
                sinr[u] = v;
            }
        }
        haps.push(beams);
    }
    Ok(BeamVectors {
        p_rf: haps.iter().flat_map(|h| &h.group_power).sum(),
        haps,
        sinr,
    })
}

fn extract_hap<R: Rng + ?Sized>(
    k: usize,
    hap: &HapSdp,
    groups: &[Group],
    problem: &BeamformingProblem,
    rng: &mut R,
    n_candidates: usize,
) -> Result<HapBeams> {
    let finish = |w: Vec<Vec<Complex64>>, randomized| HapBeams {
        group_power: w.iter().map(|v| v.iter().map(|z| z.norm_sqr()).sum()).collect(),
        w,
        randomized,
    };
    if groups.is_empty() {
        return Ok(finish(Vec::new(), false));
    }
    let eig: Vec<_> = hap.w.iter().map(eigen_desc).collect();
    let principal: Vec<Vec<Complex64>> = eig
        .iter()
        .map(|(vals, vecs)| vecs[0].iter().map(|z| z * vals[0].sqrt()).collect())
        .collect();
    let rank_one = eig
        .iter()
        .all(|(vals, _)| vals.len() < 2 || vals[1] <= RANK_ONE_TOL * vals[0]);
    if rank_one {
        // Truncating the tail may shave the SINRs; top up if needed.
        let s = rescale_factor(&principal, groups, problem).ok_or(Error::RandomizationFailed { hap: k })?;
        let w = if s > 1.0 { scaled(&principal, s) } else { principal };
        return Ok(finish(w, false));
    }

    let mut best: Option<(f64, Vec<Vec<Complex64>>)> = None;
    let mut consider = |w: Vec<Vec<Complex64>>| {
        if let Some(s) = rescale_factor(&w, groups, problem) {
            let p = s * power(&w);
            if best.as_ref().is_none_or(|(bp, _)| p < *bp) {
                best = Some((p, scaled(&w, s)));
            }
        }
    };
    consider(principal);
    for _ in 0..n_candidates {
        let w = eig
            .iter()
            .map(|(vals, vecs)| {
                let mut v = DVector::<Complex64>::zeros(problem.antennas);
                for (lambda, u) in vals.iter().zip(vecs) {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    v += u * (Complex64::new(re, im) * (lambda * 0.5).sqrt());
                }
                v.iter().copied().collect()
            })
            .collect();
        consider(w);
    }
    best.map(|(_, w)| finish(w, true))
        .ok_or(Error::RandomizationFailed { hap: k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_user(h: Vec<Complex64>) -> BeamformingProblem {
        BeamformingProblem {
            antennas: h.len(),
            noise_power: 2e-13,
            omega: 1.0,
            delta: vec![0.5],
            groups: vec![vec![Group { content: 0, users: vec![0] }]],
            channels: vec![h],
        }
    }

    #[test]
    fn sinr_target_inverts_shannon() {
        let d = sinr_target(4e6, 10e6);
        assert!((10e6 * (1.0 + d).log2() - 4e6).abs() < 1e-6);
    }

    #[test]
    fn trace_coeffs_match_dense_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = 3;
        let rand_herm = |rng: &mut ChaCha8Rng| {
            let a = DMatrix::from_fn(m, m, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            &a + a.adjoint()
        };
        let w = rand_herm(&mut rng);
        let h = rand_herm(&mut rng);
        let p = crate::conic::params_from_herm(&w);
        let lin: f64 = trace_coeffs(&h).iter().zip(&p).map(|(a, b)| a * b).sum();
        assert!((lin - (&w * &h).trace().re).abs() < 1e-12);
    }

    #[test]
    fn single_user_closed_form() {
        let h = vec![c(3e-7, 1e-7), c(-2e-7, 5e-7), c(1e-7, -4e-7)];
        let p = single_user(h.clone());
        let sdp = solve_sdp(&p).unwrap();
        let hn: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let expect = 0.5 * 2e-13 / hn;
        assert!((sdp.power - expect).abs() <= 1e-6 * expect, "{} vs {expect}", sdp.power);
        let beams = extract_beams(&sdp, &p, &mut ChaCha8Rng::seed_from_u64(0), 100).unwrap();
        assert!(!beams.haps[0].randomized);
        assert!(beams.sinr[0] >= 0.5 * (1.0 - 1e-6));
    }

    #[test]
    fn empty_hap_is_free() {
        let mut p = single_user(vec![c(1.0, 0.0)]);
        p.groups = vec![Vec::new()];
        let sdp = solve_sdp(&p).unwrap();
        assert_eq!(sdp.power, 0.0);
        let b = extract_beams(&sdp, &p, &mut ChaCha8Rng::seed_from_u64(0), 10).unwrap();
        assert_eq!(b.p_rf, 0.0);
        assert!(b.sinr[0].is_nan());
    }

    #[test]
    fn single_group_sinr_has_no_interference() {
        let h = vec![vec![c(1.0, 2.0), c(0.5, -1.0)]];
        let w = vec![vec![c(0.3, 0.1), c(-0.2, 0.4)]];
        let groups = [Group { content: 0, users: vec![0] }];
        let s = compute_sinr(&w, &groups, &h, 0.1);
        let expect = inner(&w[0], &h[0]).norm_sqr() / 0.1;
        assert!((s[0][0] - expect).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_beam_adds_no_interference() {
        let h = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
        let w = vec![vec![c(2.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(3.0, 0.0)]];
        let groups = [Group { content: 0, users: vec![0] }, Group { content: 1, users: vec![1] }];
        let s = compute_sinr(&w, &groups, &h, 1.0);
        assert!((s[0][0] - 4.0).abs() < 1e-12);
        assert!((s[1][0] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_when_channels_coincide() {
        // Two groups on the same single-antenna channel with δ > 1 cannot both
        // reach their target.
        let p = BeamformingProblem {
            antennas: 1,
            noise_power: 1.0,
            omega: 1.0,
            delta: vec![2.0, 2.0],
            groups: vec![vec![Group { content: 0, users: vec![0] }, Group { content: 1, users: vec![1] }]],
            channels: vec![vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]],
        };
        assert!(matches!(solve_sdp(&p), Err(Error::Infeasible(_))));
    }
}
