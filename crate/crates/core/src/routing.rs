//! Per-slot backhaul power minimisation over network-coded multicast
//! sessions, its unicast counterpart, and an independent feasibility check.
//!
//! Variables per active session `s`: conceptual flows `e[s, k', l]` for every
//! destination `k'`, and actual flows `η[s, class, l]` for the caching and
//! access classes. Per link: time fraction `τ_l` and an epigraph variable
//! `q_l ≥ τ_l·exp(a·Σ η/τ_l)`, so that `q_l/√g_l` is the perspective power.
//! Rates are expressed in units of the largest session rate inside the
//! program.

use std::collections::VecDeque;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{approx_link_power, FsoParams};
use crate::conic::{BarrierSolver, ConicProgram, ConicSolver, SolveStatus, SolverError};
use crate::topology::{NetworkTopology, Node};
use crate::traffic::MulticastSession;
use crate::{Error, Result};

/// Flows at or below this fraction of `mu_acc` count as zero.
pub const ZERO_FLOW: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoutingMode {
    /// Actual flow is the maximum of the conceptual flows.
    Multicast,
    /// Actual flow is the sum of the conceptual flows.
    Unicast,
}

#[derive(Debug, Clone)]
pub struct RoutingProblem<'a> {
    pub topology: &'a NetworkTopology,
    pub sessions: &'a [MulticastSession],
    /// Gain factor `g` per link.
    pub gains: &'a [f64],
    pub fso: &'a FsoParams,
    pub omega: f64,
    /// Optional per-link rate caps in bit/s; a zero cap removes the link.
    pub rate_caps: Option<&'a [f64]>,
}

impl<'a> RoutingProblem<'a> {
    pub fn new(
        topology: &'a NetworkTopology,
        sessions: &'a [MulticastSession],
        gains: &'a [f64],
        fso: &'a FsoParams,
        omega: f64,
    ) -> Self {
        Self {
            topology,
            sessions,
            gains,
            fso,
            omega,
            rate_caps: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let l = self.topology.num_links();
        if self.gains.len() != l {
            return Err(Error::ShapeMismatch(format!("{} gains for {l} links", self.gains.len())));
        }
        if let Some(caps) = self.rate_caps {
            if caps.len() != l {
                return Err(Error::ShapeMismatch(format!("{} rate caps for {l} links", caps.len())));
            }
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidConfig(format!("omega must be nonnegative, got {}", self.omega)));
        }
        for s in self.sessions {
            if s.sources.is_empty() {
                return Err(Error::Infeasible(format!("content {} has no source", s.content)));
            }
            if !(s.mu_cac > 0.0 && s.mu_acc > 0.0) {
                return Err(Error::InvalidConfig("session rates must be positive".into()));
            }
            for (k, _) in s.destinations() {
                if k >= self.topology.num_haps() {
                    return Err(Error::ShapeMismatch(format!("destination HAP {k} does not exist")));
                }
            }
        }
        Ok(())
    }

    /// Power weight of link `l`: 1 for DC feeders, `ω` for HAP links.
    pub fn weight(&self, l: usize) -> f64 {
        if self.topology.is_feeder(l) {
            1.0
        } else {
            self.omega
        }
    }

    fn link_active(&self, l: usize) -> bool {
        let g = self.gains[l];
        let capped_out = self.rate_caps.is_some_and(|c| c[l] <= 0.0);
        g > 0.0 && g.is_finite() && !capped_out
    }

    /// Whether session `s` may route flow for destination `dest` over `l`.
    fn usable(&self, s: &MulticastSession, dest: usize, l: usize) -> bool {
        let link = &self.topology.links[l];
        self.link_active(l) && !s.is_source(link.dst) && link.src != Node::Hap(dest)
    }

    fn rate_unit(&self) -> f64 {
        self.sessions
            .iter()
            .map(|s| {
                let cac = if s.dest_cac.is_empty() { 0.0 } else { s.mu_cac };
                let acc = if s.dest_acc.is_empty() { 0.0 } else { s.mu_acc };
                cac.max(acc)
            })
            .fold(0.0, f64::max)
    }
}

/// Conceptual flow of one (link, content, destination) triple in bit/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptualFlow {
    pub link: usize,
    pub content: usize,
    pub dest: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingSolution {
    pub mode: RoutingMode,
    pub contents: usize,
    pub e: Vec<ConceptualFlow>,
    /// Actual caching flows, `L × C` row-major, bit/s.
    pub eta_cac: Vec<f64>,
    pub eta_acc: Vec<f64>,
    pub tau: Vec<f64>,
    pub gamma: Vec<f64>,
    pub p_tilde: Vec<f64>,
    pub objective: f64,
    pub p_fso_dc: f64,
    pub p_fso_hap: f64,
    /// Certified lower bound on the optimal objective.
    pub lower_bound: f64,
    /// Set when the feasible set had no interior and the program was solved
    /// with this relaxation.
    pub relaxed: Option<f64>,
}

impl RoutingSolution {
    /// All-zero solution shaped for `problem`.
    pub fn zero(problem: &RoutingProblem, mode: RoutingMode) -> Self {
        let l = problem.topology.num_links();
        let c = problem.sessions.iter().map(|s| s.content + 1).max().unwrap_or(0);
        Self {
            mode,
            contents: c,
            e: Vec::new(),
            eta_cac: vec![0.0; l * c],
            eta_acc: vec![0.0; l * c],
            tau: vec![0.0; l],
            gamma: vec![0.0; l],
            p_tilde: vec![0.0; l],
            objective: 0.0,
            p_fso_dc: 0.0,
            p_fso_hap: 0.0,
            lower_bound: 0.0,
            relaxed: None,
        }
    }

    /// Recomputes rates, powers and sums from `e`, `η` and `τ`.
    fn finalize(&mut self, problem: &RoutingProblem) {
        let l_count = problem.topology.num_links();
        self.p_fso_dc = 0.0;
        self.p_fso_hap = 0.0;
        for l in 0..l_count {
            let row = l * self.contents..(l + 1) * self.contents;
            self.gamma[l] = self.eta_cac[row.clone()].iter().sum::<f64>() + self.eta_acc[row].iter().sum::<f64>();
            if self.gamma[l] == 0.0 {
                self.tau[l] = 0.0;
            }
            self.p_tilde[l] = approx_link_power(self.gamma[l], self.tau[l], problem.gains[l], problem.fso);
            if problem.topology.is_feeder(l) {
                self.p_fso_dc += self.p_tilde[l];
            } else {
                self.p_fso_hap += self.p_tilde[l];
            }
        }
        self.objective = self.p_fso_dc + problem.omega * self.p_fso_hap;
    }
}

/// Variable indices of the assembled program.
struct Layout {
    /// `e[s][j][l]` for the `j`-th destination of session `s`.
    e: Vec<Vec<Vec<Option<usize>>>>,
    /// `eta[s][class][l]`, class 0 caching and 1 access.
    eta: Vec<[Vec<Option<usize>>; 2]>,
    tau: Vec<Option<usize>>,
    q: Vec<Option<usize>>,
    nvars: usize,
}

/// Links that lie on some source-to-`dest` path of the usable graph. Links
/// outside this set could only carry circulations and are left out.
fn flow_mask(problem: &RoutingProblem, s: &MulticastSession, dest: usize) -> Vec<bool> {
    let topo = problem.topology;
    let nodes = topo.num_haps() + topo.num_dcs();
    let usable: Vec<bool> = (0..topo.num_links()).map(|l| problem.usable(s, dest, l)).collect();
    let search = |starts: Vec<usize>, forward: bool| {
        let mut seen = vec![false; nodes];
        let mut queue: VecDeque<usize> = starts.into_iter().collect();
        for &n in &queue {
            seen[n] = true;
        }
        while let Some(n) = queue.pop_front() {
            let links = if forward { &topo.out_links[n] } else { &topo.in_links[n] };
            for &l in links {
                if !usable[l] {
                    continue;
                }
                let link = &topo.links[l];
                let m = topo.node_id(if forward { link.dst } else { link.src });
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    };
    let from_sources = search(s.sources.iter().map(|&n| topo.node_id(n)).collect(), true);
    let to_dest = search(vec![dest], false);
    topo.links
        .iter()
        .enumerate()
        .map(|(l, link)| usable[l] && from_sources[topo.node_id(link.src)] && to_dest[topo.node_id(link.dst)])
        .collect()
}

fn build_program(problem: &RoutingProblem, mode: RoutingMode) -> Result<(ConicProgram, Layout)> {
    let topo = problem.topology;
    let l_count = topo.num_links();
    let unit = problem.rate_unit();
    let a = unit * LN_2 / problem.fso.bandwidth_hz;
    let mut next = 0usize;
    let mut alloc = || {
        next += 1;
        next - 1
    };

    let mut e = Vec::with_capacity(problem.sessions.len());
    let mut eta = Vec::with_capacity(problem.sessions.len());
    let mut link_used = vec![false; l_count];
    for s in problem.sessions {
        let dests: Vec<(usize, f64)> = s.destinations().collect();
        let mut per_dest = Vec::with_capacity(dests.len());
        let mut class_used = [vec![false; l_count], vec![false; l_count]];
        for (j, &(k, _)) in dests.iter().enumerate() {
            let class = usize::from(j >= s.dest_cac.len());
            let mask = flow_mask(problem, s, k);
            if !mask.iter().any(|&m| m) {
                return Err(Error::Unreachable { content: s.content, hap: k });
            }
            let vars: Vec<Option<usize>> = (0..l_count)
                .map(|l| {
                    mask[l].then(|| {
                        class_used[class][l] = true;
                        link_used[l] = true;
                        alloc()
                    })
                })
                .collect();
            per_dest.push(vars);
        }
        let eta_s = class_used.map(|used| used.iter().map(|&u| u.then(&mut alloc)).collect());
        e.push(per_dest);
        eta.push(eta_s);
    }
    let tau: Vec<Option<usize>> = link_used.iter().map(|&u| u.then(&mut alloc)).collect();
    let q: Vec<Option<usize>> = link_used.iter().map(|&u| u.then(&mut alloc)).collect();
    let layout = Layout {
        e,
        eta,
        tau,
        q,
        nvars: next,
    };

    let mut prog = ConicProgram::new(layout.nvars);
    let rel = |rate: f64| rate / unit;

    // Linear inequalities first so they share one orthant block.
    for (si, s) in problem.sessions.iter().enumerate() {
        let dests: Vec<(usize, f64)> = s.destinations().collect();
        // Loose but finite: keeps the feasible set bounded without touching the optimum.
        let class_bound = [
            2.0 * rel(s.mu_cac) * s.dest_cac.len() as f64,
            2.0 * rel(s.mu_acc) * s.dest_acc.len() as f64,
        ];
        for (j, &(k, mu)) in dests.iter().enumerate() {
            let vars = &layout.e[si][j];
            let class = usize::from(j >= s.dest_cac.len());
            // QoS at the destination.
            let inflow: Vec<(usize, f64)> = topo.in_links[k].iter().filter_map(|&l| vars[l].map(|v| (v, -1.0))).collect();
            prog.add_le(inflow, -rel(mu));
            // Source outflow.
            let outflow: Vec<(usize, f64)> = s
                .sources
                .iter()
                .flat_map(|&n| topo.out_links(n).iter())
                .filter_map(|&l| vars[l].map(|v| (v, -1.0)))
                .collect();
            prog.add_le(outflow, -rel(mu));
            for l in 0..l_count {
                let Some(v) = vars[l] else { continue };
                prog.add_le(vec![(v, -1.0)], 0.0);
                if mode == RoutingMode::Multicast {
                    let w = layout.eta[si][class][l].expect("eta exists where e does");
                    prog.add_le(vec![(v, 1.0), (w, -1.0)], 0.0);
                }
            }
        }
        for class in 0..2 {
            for l in 0..l_count {
                let Some(w) = layout.eta[si][class][l] else { continue };
                prog.add_le(vec![(w, 1.0)], class_bound[class]);
                if mode == RoutingMode::Unicast {
                    let mut row: Vec<(usize, f64)> = vec![(w, -1.0)];
                    for (j, _) in dests.iter().enumerate() {
                        if usize::from(j >= s.dest_cac.len()) == class {
                            if let Some(v) = layout.e[si][j][l] {
                                row.push((v, 1.0));
                            }
                        }
                    }
                    prog.add_le(row, 0.0);
                }
            }
        }
    }

    // Per-link rate caps, power cap and epigraph bound.
    let mut link_rate: Vec<Vec<(usize, f64)>> = vec![Vec::new(); l_count];
    for eta_s in &layout.eta {
        for class in eta_s {
            for l in 0..l_count {
                if let Some(w) = class[l] {
                    link_rate[l].push((w, 1.0));
                }
            }
        }
    }
    for l in 0..l_count {
        let (Some(t), Some(qv)) = (layout.tau[l], layout.q[l]) else { continue };
        let g = problem.gains[l];
        let rate_bound: f64 = problem
            .sessions
            .iter()
            .map(|s| 2.0 * (rel(s.mu_cac) * s.dest_cac.len() as f64 + rel(s.mu_acc) * s.dest_acc.len() as f64))
            .sum();
        prog.add_le(vec![(qv, 1.0)], 2.0 * (a * rate_bound).min(600.0).exp() + 1.0);
        if let Some(pmax) = problem.fso.p_max {
            let mut row = link_rate[l].clone();
            row.push((t, -(g * pmax * pmax).ln_1p() / (2.0 * a)));
            prog.add_le(row, 0.0);
            prog.add_le(vec![(qv, 1.0), (t, -g.sqrt() * pmax)], 0.0);
        }
        if let Some(caps) = problem.rate_caps {
            if caps[l].is_finite() {
                prog.add_le(link_rate[l].clone(), rel(caps[l]));
            }
        }
    }

    // Conservation at intermediate HAPs.
    for (si, s) in problem.sessions.iter().enumerate() {
        for (j, (k, _)) in s.destinations().enumerate() {
            let vars = &layout.e[si][j];
            for n in 0..topo.num_haps() {
                if n == k || s.is_source(Node::Hap(n)) {
                    continue;
                }
                let mut row: Vec<(usize, f64)> = topo.in_links[n].iter().filter_map(|&l| vars[l].map(|v| (v, 1.0))).collect();
                row.extend(topo.out_links[n].iter().filter_map(|&l| vars[l].map(|v| (v, -1.0))));
                if !row.is_empty() {
                    prog.add_equality(row, 0.0);
                }
            }
        }
    }

    // Scheduling.
    for n in 0..topo.num_haps() + topo.num_dcs() {
        let row: Vec<(usize, f64)> = topo.in_links[n]
            .iter()
            .chain(&topo.out_links[n])
            .filter_map(|&l| layout.tau[l].map(|t| (t, 1.0)))
            .collect();
        if !row.is_empty() {
            prog.add_le(row, 1.0);
        }
    }

    // Perspective epigraphs.
    for l in 0..l_count {
        let (Some(t), Some(qv)) = (layout.tau[l], layout.q[l]) else { continue };
        let u: Vec<(usize, f64)> = link_rate[l].iter().map(|&(w, _)| (w, a)).collect();
        prog.add_exp_cone([(u, 0.0), (vec![(t, 1.0)], 0.0), (vec![(qv, 1.0)], 0.0)]);
        prog.c[qv] = problem.weight(l) / problem.gains[l].sqrt();
    }
    Ok((prog, layout))
}

/// Solves the multicast routing program with the default solver.
pub fn solve_routing(problem: &RoutingProblem) -> Result<RoutingSolution> {
    solve_with(problem, RoutingMode::Multicast, &BarrierSolver::default())
}

/// Same program with sum coupling: one flow copy per destination.
pub fn solve_unicast_routing(problem: &RoutingProblem) -> Result<RoutingSolution> {
    solve_with(problem, RoutingMode::Unicast, &BarrierSolver::default())
}

pub fn solve_with(problem: &RoutingProblem, mode: RoutingMode, solver: &dyn ConicSolver) -> Result<RoutingSolution> {
    problem.validate()?;
    let mut sol = RoutingSolution::zero(problem, mode);
    if problem.sessions.is_empty() {
        return Ok(sol);
    }
    let (prog, layout) = build_program(problem, mode)?;
    let raw = solver.solve(&prog).map_err(|err| match err {
        SolverError::Infeasible { violation } => Error::Infeasible(format!(
            "backhaul cannot carry the demand ({} sessions, violation {violation:.3e})",
            problem.sessions.len()
        )),
        other => Error::Solver(other),
    })?;

    let unit = problem.rate_unit();
    let c = sol.contents;
    let zero_below = ZERO_FLOW * problem.sessions.iter().map(|s| s.mu_acc).fold(f64::INFINITY, f64::min);
    let clean = |v: f64| {
        let r = v * unit;
        if r <= zero_below {
            0.0
        } else {
            r
        }
    };
    for (si, s) in problem.sessions.iter().enumerate() {
        for (j, (k, _)) in s.destinations().enumerate() {
            for (l, v) in layout.e[si][j].iter().enumerate() {
                if let Some(v) = *v {
                    let rate = clean(raw.x[v]);
                    if rate > 0.0 {
                        sol.e.push(ConceptualFlow {
                            link: l,
                            content: s.content,
                            dest: k,
                            rate,
                        });
                    }
                }
            }
        }
        for (class, target) in [&mut sol.eta_cac, &mut sol.eta_acc].into_iter().enumerate() {
            for (l, v) in layout.eta[si][class].iter().enumerate() {
                if let Some(v) = *v {
                    target[l * c + s.content] += clean(raw.x[v]);
                }
            }
        }
    }
    for (l, t) in layout.tau.iter().enumerate() {
        if let Some(t) = *t {
            sol.tau[l] = raw.x[t].clamp(0.0, 1.0);
        }
    }
    sol.finalize(problem);
    sol.lower_bound = raw.lower_bound().min(sol.objective);
    if let SolveStatus::OptimalRelaxed { slack } = raw.status {
        sol.relaxed = Some(slack);
    }
    Ok(sol)
}

/// Largest violation per constraint family. Rates are measured relative to
/// the largest session rate, time fractions absolutely and powers relative to
/// `p_max`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub qos: f64,
    pub conservation: f64,
    pub coupling: f64,
    pub capacity: f64,
    pub scheduling: f64,
    pub power_cap: f64,
    pub nonnegativity: f64,
}

impl FeasibilityReport {
    pub fn families(&self) -> [(&'static str, f64); 7] {
        [
            ("qos", self.qos),
            ("conservation", self.conservation),
            ("coupling", self.coupling),
            ("capacity", self.capacity),
            ("scheduling", self.scheduling),
            ("power_cap", self.power_cap),
            ("nonnegativity", self.nonnegativity),
        ]
    }

    pub fn max_violation(&self) -> f64 {
        self.families().iter().map(|f| f.1).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.families().iter().all(|&(_, v)| v <= tol)
    }
}

/// Re-checks a solution against the constraint families using only the
/// topology, sessions and the reported flows.
pub fn check_feasibility(problem: &RoutingProblem, sol: &RoutingSolution, _tol: f64) -> FeasibilityReport {
    let topo = problem.topology;
    let l_count = topo.num_links();
    let unit = problem.rate_unit().max(f64::MIN_POSITIVE);
    let mut r = FeasibilityReport::default();
    let bump = |slot: &mut f64, v: f64| {
        if v.is_nan() {
            *slot = f64::INFINITY;
        } else if v > *slot {
            *slot = v;
        }
    };
    let c = sol.contents;
    let shape_ok = sol.tau.len() == l_count
        && sol.gamma.len() == l_count
        && sol.p_tilde.len() == l_count
        && sol.eta_cac.len() == l_count * c
        && sol.eta_acc.len() == l_count * c
        && problem.sessions.iter().all(|s| s.content < c.max(1))
        && sol.e.iter().all(|f| f.link < l_count);
    if !shape_ok {
        let inf = f64::INFINITY;
        return FeasibilityReport {
            qos: inf,
            conservation: inf,
            coupling: inf,
            capacity: inf,
            scheduling: inf,
            power_cap: inf,
            nonnegativity: inf,
        };
    }
    let flow = |content: usize, dest: usize, l: usize| -> f64 {
        sol.e
            .iter()
            .filter(|f| f.content == content && f.dest == dest && f.link == l)
            .map(|f| f.rate)
            .sum()
    };

    for f in &sol.e {
        bump(&mut r.nonnegativity, -f.rate / unit);
        if !problem.sessions.iter().any(|s| s.content == f.content && s.destinations().any(|(k, _)| k == f.dest)) {
            // Flow for a destination that does not exist.
            bump(&mut r.conservation, f.rate.abs() / unit);
        }
    }
    for v in sol.eta_cac.iter().chain(&sol.eta_acc) {
        bump(&mut r.nonnegativity, -v / unit);
    }
    for l in 0..l_count {
        bump(&mut r.nonnegativity, -sol.tau[l]);
        bump(&mut r.nonnegativity, sol.tau[l] - 1.0);
        bump(&mut r.nonnegativity, -sol.p_tilde[l]);
    }

    for s in problem.sessions {
        for (k, mu) in s.destinations() {
            let is_cac = s.dest_cac.contains(&k);
            // Net inflow at the destination.
            let inflow: f64 = topo.in_links[k].iter().map(|&l| flow(s.content, k, l)).sum();
            let outflow: f64 = topo.out_links[k].iter().map(|&l| flow(s.content, k, l)).sum();
            bump(&mut r.qos, (mu - (inflow - outflow)) / unit);
            // Source outflow.
            let src_out: f64 = s
                .sources
                .iter()
                .flat_map(|&n| topo.out_links(n).iter())
                .map(|&l| flow(s.content, k, l))
                .sum();
            bump(&mut r.qos, (mu - src_out) / unit);
            for n in 0..topo.num_haps() {
                if n == k || s.is_source(Node::Hap(n)) {
                    continue;
                }
                let fin: f64 = topo.in_links[n].iter().map(|&l| flow(s.content, k, l)).sum();
                let fout: f64 = topo.out_links[n].iter().map(|&l| flow(s.content, k, l)).sum();
                bump(&mut r.conservation, (fin - fout).abs() / unit);
            }
            if mode_is_multicast(sol) {
                let eta = if is_cac { &sol.eta_cac } else { &sol.eta_acc };
                for l in 0..l_count {
                    bump(&mut r.coupling, (flow(s.content, k, l) - eta[l * c + s.content]) / unit);
                }
            }
        }
        if !mode_is_multicast(sol) {
            for (dests, eta) in [(&s.dest_cac, &sol.eta_cac), (&s.dest_acc, &sol.eta_acc)] {
                for l in 0..l_count {
                    let total: f64 = dests.iter().map(|&k| flow(s.content, k, l)).sum();
                    bump(&mut r.coupling, (total - eta[l * c + s.content]) / unit);
                }
            }
        }
    }

    for l in 0..l_count {
        let row = l * c..(l + 1) * c;
        let carried: f64 = sol.eta_cac[row.clone()].iter().sum::<f64>() + sol.eta_acc[row].iter().sum::<f64>();
        bump(&mut r.capacity, (carried - sol.gamma[l]) / unit);
        if sol.gamma[l] > ZERO_FLOW * unit && sol.tau[l] <= 0.0 {
            bump(&mut r.capacity, sol.gamma[l] / unit);
        }
        if !problem.link_active(l) {
            bump(&mut r.capacity, sol.gamma[l] / unit);
        }
        if let Some(caps) = problem.rate_caps {
            bump(&mut r.capacity, (sol.gamma[l] - caps[l]) / unit);
        }
        if let Some(pmax) = problem.fso.p_max {
            let g = problem.gains[l];
            let cap = problem.fso.bandwidth_hz * sol.tau[l] / (2.0 * LN_2) * (g * pmax * pmax).ln_1p();
            bump(&mut r.capacity, (sol.gamma[l] - cap) / unit);
            bump(&mut r.power_cap, (sol.p_tilde[l] - sol.tau[l] * pmax) / pmax);
        }
    }

    for n in 0..topo.num_haps() + topo.num_dcs() {
        let total: f64 = topo.in_links[n].iter().chain(&topo.out_links[n]).map(|&l| sol.tau[l]).sum();
        bump(&mut r.scheduling, total - 1.0);
    }
    r
}

fn mode_is_multicast(sol: &RoutingSolution) -> bool {
    sol.mode == RoutingMode::Multicast
}
