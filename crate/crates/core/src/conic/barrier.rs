//! Two-phase primal log-barrier path-following solver.
//!
//! Phase I minimises a scalar relaxation `t` such that `h − Gx + t·d ∈ K`
//! along a fixed interior direction `d`. A negative optimum yields a strictly
//! feasible start; an optimum within `feas_tol` of zero means the feasible set
//! has no interior, in which case phase II runs on the program relaxed by a
//! slack just above the phase-I value; anything larger is reported infeasible.

use nalgebra::{DMatrix, DVector};

use super::{Cone, ConicProgram, ConicSolution, ConicSolver, SolveStatus, SolverError, SparseRows};

#[derive(Debug, Clone)]
pub struct BarrierSolver {
    /// Relative duality-gap target of phase II.
    pub tol: f64,
    /// Phase-I optimum above which the program is declared infeasible.
    pub feas_tol: f64,
    /// Barrier weight growth per outer iteration.
    pub mu: f64,
    /// Budget of Newton steps across both phases.
    pub max_newton: usize,
}

impl Default for BarrierSolver {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            feas_tol: 1e-7,
            mu: 50.0,
            max_newton: 4000,
        }
    }
}

/// Program data in the shape the path follower consumes.
struct Stage<'a> {
    c: Vec<f64>,
    a: &'a DMatrix<f64>,
    b: &'a [f64],
    g: &'a SparseRows,
    h: Vec<f64>,
    cones: &'a [Cone],
    offsets: Vec<usize>,
    nu: f64,
}

impl<'a> Stage<'a> {
    fn new(
        c: Vec<f64>,
        a: &'a DMatrix<f64>,
        b: &'a [f64],
        g: &'a SparseRows,
        h: Vec<f64>,
        cones: &'a [Cone],
    ) -> Self {
        let mut offsets = Vec::with_capacity(cones.len());
        let mut off = 0;
        for cone in cones {
            offsets.push(off);
            off += cone.dim();
        }
        let nu = cones.iter().map(Cone::degree).sum();
        Self {
            c,
            a,
            b,
            g,
            h,
            cones,
            offsets,
            nu,
        }
    }

    fn n(&self) -> usize {
        self.c.len()
    }

    fn slack(&self, x: &[f64]) -> Vec<f64> {
        self.h
            .iter()
            .enumerate()
            .map(|(i, h)| h - self.g.row_dot(i, x))
            .collect()
    }

    fn interior(&self, s: &[f64]) -> bool {
        self.cones
            .iter()
            .zip(&self.offsets)
            .all(|(cone, &off)| cone.is_interior(&s[off..off + cone.dim()]))
    }

    /// `t·cᵀx + F(h − Gx)`, or `None` outside the domain.
    fn merit(&self, t: f64, x: &[f64]) -> Option<f64> {
        let s = self.slack(x);
        let mut f = t * dot(&self.c, x);
        for (cone, &off) in self.cones.iter().zip(&self.offsets) {
            f += cone.barrier(&s[off..off + cone.dim()])?;
        }
        Some(f)
    }

    /// Gradient and Hessian of the merit function.
    fn derivatives(&self, t: f64, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n();
        let s = self.slack(x);
        let mut grad = DVector::from_iterator(n, self.c.iter().map(|c| t * c));
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for (cone, &off) in self.cones.iter().zip(&self.offsets) {
            match *cone {
                Cone::NonNeg(k) => {
                    for r in off..off + k {
                        let inv = 1.0 / s[r];
                        let row = &self.g.rows[r];
                        // ∂F/∂x = −Gᵀ ∇F(s), ∇F(s)_r = −1/s_r
                        for &(j, v) in row {
                            grad[j] += v * inv;
                        }
                        let w = inv * inv;
                        for &(i, vi) in row {
                            for &(j, vj) in row {
                                hess[(i, j)] += w * vi * vj;
                            }
                        }
                    }
                }
                _ => {
                    let dim = cone.dim();
                    let (gs, hs) = cone.grad_hess(&s[off..off + dim]);
                    for p in 0..dim {
                        for &(j, v) in &self.g.rows[off + p] {
                            grad[j] -= v * gs[p];
                        }
                    }
                    for p in 0..dim {
                        let rp = &self.g.rows[off + p];
                        for q in 0..dim {
                            let w = hs[(p, q)];
                            if w == 0.0 {
                                continue;
                            }
                            let rq = &self.g.rows[off + q];
                            for &(i, vi) in rp {
                                for &(j, vj) in rq {
                                    hess[(i, j)] += w * vi * vj;
                                }
                            }
                        }
                    }
                }
            }
        }
        (grad, hess)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the equality-constrained Newton system
/// `[H Aᵀ; A 0] [dx; w] = [−g; −r]`.
fn newton_direction(
    hess: DMatrix<f64>,
    grad: &DVector<f64>,
    a: &DMatrix<f64>,
    resid: &DVector<f64>,
) -> Option<DVector<f64>> {
    let n = hess.nrows();
    let p = a.nrows();
    let scale = (0..n).map(|i| hess[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    if p == 0 {
        let mut reg = 0.0;
        for _ in 0..6 {
            let mut h = hess.clone();
            for i in 0..n {
                h[(i, i)] += reg;
            }
            if let Some(ch) = h.cholesky() {
                return Some(ch.solve(&(-grad)));
            }
            reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
        }
        return None;
    }
    let mut reg = 0.0;
    for _ in 0..6 {
        let mut kkt = DMatrix::<f64>::zeros(n + p, n + p);
        kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
        for i in 0..n {
            kkt[(i, i)] += reg;
        }
        kkt.view_mut((n, 0), (p, n)).copy_from(a);
        kkt.view_mut((0, n), (n, p)).copy_from(&a.transpose());
        let mut rhs = DVector::<f64>::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&(-grad));
        rhs.rows_mut(n, p).copy_from(&(-resid));
        if let Some(sol) = kkt.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                return Some(sol.rows(0, n).into_owned());
            }
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    None
}

impl BarrierSolver {
    /// Minimises the merit function at fixed `t` by damped Newton steps.
    fn center(
        &self,
        stage: &Stage,
        t: f64,
        x: &mut Vec<f64>,
        steps: &mut usize,
    ) -> Result<(), SolverError> {
        let avec = stage.a;
        for _ in 0..200 {
            if *steps >= self.max_newton {
                return Err(SolverError::Numerical("Newton step budget exhausted".into()));
            }
            *steps += 1;
            let (grad, hess) = stage.derivatives(t, x);
            let xv = DVector::from_column_slice(x);
            let resid = if avec.nrows() > 0 {
                avec * &xv - DVector::from_column_slice(stage.b)
            } else {
                DVector::zeros(0)
            };
            let dx = newton_direction(hess, &grad, avec, &resid)
                .ok_or_else(|| SolverError::Numerical("singular Newton system".into()))?;
            let slope = grad.dot(&dx);
            let decrement = -slope;
            if decrement.abs() / 2.0 <= 1e-10 {
                return Ok(());
            }
            let f0 = stage
                .merit(t, x)
                .ok_or_else(|| SolverError::Numerical("iterate left the cone".into()))?;
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..80 {
                let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(x, d)| x + alpha * d).collect();
                if let Some(f) = stage.merit(t, &trial) {
                    if f <= f0 + 0.01 * alpha * slope || (slope >= 0.0 && f <= f0) {
                        *x = trial;
                        accepted = Some(f);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                // Precision limit: no further progress is possible at this t.
                None => return Ok(()),
                Some(f) if f0 - f <= 1e-13 * f0.abs().max(1.0) && decrement < 1e-6 => return Ok(()),
                Some(_) if alpha < 1e-12 => return Ok(()),
                Some(_) => {}
            }
        }
        Ok(())
    }

    fn follow_path(
        &self,
        stage: &Stage,
        x: &mut Vec<f64>,
        steps: &mut usize,
        mut stop: impl FnMut(&[f64], f64) -> bool,
    ) -> Result<f64, SolverError> {
        let mut t = 1.0;
        loop {
            self.center(stage, t, x, steps)?;
            let gap = stage.nu / t;
            if stop(x, gap) {
                return Ok(gap);
            }
            if t > 1e18 {
                return Ok(gap);
            }
            t *= self.mu;
        }
    }
}

/// Selects a maximal linearly independent subset of the rows of `A`.
fn independent_rows(a: &SparseRows) -> Vec<usize> {
    let n = a.ncols;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for (i, row) in a.rows.iter().enumerate() {
        let mut v = DVector::<f64>::zeros(n);
        for &(j, val) in row {
            v[j] = val;
        }
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-10 * norm0 {
            basis.push(v / norm);
            keep.push(i);
        }
    }
    keep
}

fn dense_rows(a: &SparseRows, rows: &[usize]) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(rows.len(), a.ncols);
    for (k, &i) in rows.iter().enumerate() {
        for &(j, v) in &a.rows[i] {
            m[(k, j)] = v;
        }
    }
    m
}

impl ConicSolver for BarrierSolver {
    fn solve(&self, prog: &ConicProgram) -> Result<ConicSolution, SolverError> {
        prog.validate()?;
        let n = prog.nvars();
        if prog.g.nrows() == 0 {
            return Err(SolverError::Malformed("no cone constraints; feasible set unbounded".into()));
        }

        // Equalities: drop dependent rows, start from the least-norm solution.
        let keep = independent_rows(&prog.a);
        let a_red = dense_rows(&prog.a, &keep);
        let b_red: Vec<f64> = keep.iter().map(|&i| prog.b[i]).collect();
        let x0: Vec<f64> = if keep.is_empty() {
            vec![0.0; n]
        } else {
            let aat = &a_red * a_red.transpose();
            let y = aat
                .cholesky()
                .ok_or_else(|| SolverError::Numerical("equality Gram matrix singular".into()))?
                .solve(&DVector::from_column_slice(&b_red));
            (a_red.transpose() * y).iter().cloned().collect()
        };
        let resid = prog
            .a
            .mul_vec(&x0)
            .iter()
            .zip(&prog.b)
            .map(|(ax, b)| (ax - b).abs())
            .fold(0.0, f64::max);
        let bnorm = prog.b.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        if resid > 1e-9 * (1.0 + bnorm) {
            return Err(SolverError::InconsistentEqualities { residual: resid });
        }

        let direction: Vec<f64> = prog.cones.iter().flat_map(|c| c.interior_direction()).collect();
        let mut steps = 0usize;

        // Phase I unless x0 is already strictly feasible.
        let base = Stage::new(prog.c.clone(), &a_red, &b_red, &prog.g, prog.h.clone(), &prog.cones);
        let s0 = base.slack(&x0);
        let (x_start, slack) = if base.interior(&s0) {
            (x0, 0.0)
        } else {
            self.phase_one(prog, &a_red, &b_red, &direction, x0, &s0, &mut steps)?
        };

        let cmax = prog.c.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let status = if slack > 0.0 {
            SolveStatus::OptimalRelaxed { slack }
        } else {
            SolveStatus::Optimal
        };
        if cmax == 0.0 {
            return Ok(ConicSolution {
                objective: 0.0,
                x: x_start,
                gap: 0.0,
                status,
                newton_steps: steps,
            });
        }
        // Scale so the starting objective is of order one; coefficient
        // magnitudes can span many decades.
        let start_obj = prog.objective(&x_start).abs();
        let cscale = if start_obj > 0.0 { start_obj } else { cmax };

        let c_norm: Vec<f64> = prog.c.iter().map(|c| c / cscale).collect();
        let h_relaxed: Vec<f64> = prog
            .h
            .iter()
            .zip(&direction)
            .map(|(h, d)| h + slack * d)
            .collect();
        let stage = Stage::new(c_norm, &a_red, &b_red, &prog.g, h_relaxed, &prog.cones);
        let mut x = x_start;
        let tol = self.tol;
        let gap = self.follow_path(&stage, &mut x, &mut steps, |x, gap| {
            let obj = dot(&stage.c, x).abs();
            gap <= tol * obj || gap <= 1e-300
        })?;
        let objective = prog.objective(&x);
        Ok(ConicSolution {
            x,
            objective,
            gap: gap * cscale,
            status,
            newton_steps: steps,
        })
    }
}

impl BarrierSolver {
    /// Returns a start point and the relaxation slack it requires (zero when
    /// strictly feasible).
    #[allow(clippy::too_many_arguments)]
    fn phase_one(
        &self,
        prog: &ConicProgram,
        a_red: &DMatrix<f64>,
        b_red: &[f64],
        direction: &[f64],
        x0: Vec<f64>,
        s0: &[f64],
        steps: &mut usize,
    ) -> Result<(Vec<f64>, f64), SolverError> {
        let n = prog.nvars();
        let mut depth = f64::NEG_INFINITY;
        let mut off = 0;
        for cone in &prog.cones {
            depth = depth.max(cone.interior_depth(&s0[off..off + cone.dim()]));
            off += cone.dim();
        }
        let t0 = depth.max(0.0) + 1.0;

        // Variables (x, t): h − Gx + t·d ∈ K and 1 + t ≥ 0.
        let mut g1 = SparseRows::new(n + 1);
        for (row, &d) in prog.g.rows.iter().zip(direction) {
            let mut r = row.clone();
            if d != 0.0 {
                r.push((n, -d));
            }
            g1.rows.push(r);
        }
        g1.rows.push(vec![(n, -1.0)]);
        let mut h1 = prog.h.clone();
        h1.push(1.0);
        let mut cones1 = prog.cones.clone();
        cones1.push(Cone::NonNeg(1));
        let mut a1 = DMatrix::<f64>::zeros(a_red.nrows(), n + 1);
        a1.view_mut((0, 0), (a_red.nrows(), n)).copy_from(a_red);
        let mut c1 = vec![0.0; n + 1];
        c1[n] = 1.0;
        let stage = Stage::new(c1, &a1, b_red, &g1, h1, &cones1);

        let mut x = x0;
        x.push(t0);
        let target = self.feas_tol * 1e-2;
        let gap = self.follow_path(&stage, &mut x, steps, |x, gap| x[n] < -1e-4 || gap <= target)?;
        let t_cur = x[n];
        x.truncate(n);
        if t_cur < 0.0 {
            return Ok((x, 0.0));
        }
        if t_cur - gap > self.feas_tol {
            return Err(SolverError::Infeasible {
                violation: t_cur - gap,
            });
        }
        Ok((x, t_cur + 1e-9))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::herm_from_params;

    #[test]
    fn solves_small_lp() {
        // min −x − y  s.t. x + 2y ≤ 4, 3x + y ≤ 6, x, y ≥ 0  → (1.6, 1.2)
        let mut p = ConicProgram::new(2);
        p.c = vec![-1.0, -1.0];
        p.add_le(vec![(0, 1.0), (1, 2.0)], 4.0);
        p.add_le(vec![(0, 3.0), (1, 1.0)], 6.0);
        p.add_le(vec![(0, -1.0)], 0.0);
        p.add_le(vec![(1, -1.0)], 0.0);
        let sol = BarrierSolver::default().solve(&p).unwrap();
        assert!((sol.x[0] - 1.6).abs() < 1e-6);
        assert!((sol.x[1] - 1.2).abs() < 1e-6);
        assert_eq!(sol.status, SolveStatus::Optimal);
    }

    #[test]
    fn equality_constrained_lp_needs_phase_one() {
        // min x0 + 2 x1 + 3 x2  s.t. x0 + x1 + x2 = 1, x1 ≥ 0.5, x ≥ 0, x ≤ 10
        let mut p = ConicProgram::new(3);
        p.c = vec![1.0, 2.0, 3.0];
        p.add_equality(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 1.0);
        p.add_le(vec![(1, -1.0)], -0.5);
        for j in 0..3 {
            p.add_le(vec![(j, -1.0)], 0.0);
            p.add_le(vec![(j, 1.0)], 10.0);
        }
        let sol = BarrierSolver::default().solve(&p).unwrap();
        assert!((sol.objective - 1.5).abs() < 1e-6, "{}", sol.objective);
    }

    #[test]
    fn detects_infeasibility() {
        let mut p = ConicProgram::new(1);
        p.c = vec![1.0];
        p.add_le(vec![(0, 1.0)], 1.0);
        p.add_le(vec![(0, -1.0)], -2.0);
        match BarrierSolver::default().solve(&p) {
            Err(SolverError::Infeasible { violation }) => assert!(violation > 0.4),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn handles_empty_interior() {
        // x ≤ 1 and x ≥ 1: feasible set is a single point.
        let mut p = ConicProgram::new(1);
        p.c = vec![1.0];
        p.add_le(vec![(0, 1.0)], 1.0);
        p.add_le(vec![(0, -1.0)], -1.0);
        let sol = BarrierSolver::default().solve(&p).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-7);
        assert!(matches!(sol.status, SolveStatus::OptimalRelaxed { .. }));
    }

    #[test]
    fn exp_cone_minimises_perspective() {
        // min w  s.t. (u, v, w) ∈ K_exp, u = 1, v = 1  →  w = e
        let mut p = ConicProgram::new(3);
        p.c = vec![0.0, 0.0, 1.0];
        p.add_equality(vec![(0, 1.0)], 1.0);
        p.add_equality(vec![(1, 1.0)], 1.0);
        p.add_exp_cone([(vec![(0, 1.0)], 0.0), (vec![(1, 1.0)], 0.0), (vec![(2, 1.0)], 0.0)]);
        p.add_le(vec![(2, 1.0)], 100.0);
        let sol = BarrierSolver::default().solve(&p).unwrap();
        assert!((sol.x[2] - 1f64.exp()).abs() < 1e-6, "{:?}", sol.x);
    }

    #[test]
    fn exp_cone_free_time_share() {
        // min w  s.t. (a, v, w) ∈ K_exp, 0 ≤ v ≤ 1: optimum v = a, w = e·a for a < 1.
        let a = 0.3;
        let mut p = ConicProgram::new(2);
        p.c = vec![0.0, 1.0];
        p.add_exp_cone([(vec![], a), (vec![(0, 1.0)], 0.0), (vec![(1, 1.0)], 0.0)]);
        p.add_le(vec![(0, 1.0)], 1.0);
        p.add_le(vec![(1, 1.0)], 100.0);
        let sol = BarrierSolver::default().solve(&p).unwrap();
        assert!((sol.x[1] - std::f64::consts::E * a).abs() < 1e-6);
        assert!((sol.x[0] - a).abs() < 1e-3);
    }

    #[test]
    fn psd_minimum_trace_with_linear_constraint() {
        // min tr W  s.t. tr(W H) ≥ 1 with H = h hᴴ: optimum 1/‖h‖².
        let m = 2;
        let hv = [num_complex::Complex64::new(1.0, 0.5), num_complex::Complex64::new(-0.3, 2.0)];
        let hmat = nalgebra::DMatrix::from_fn(m, m, |i, j| hv[i] * hv[j].conj());
        let n = 4;
        let mut p = ConicProgram::new(n);
        p.c = vec![1.0, 1.0, 0.0, 0.0];
        // tr(W H) = W00 H00 + W11 H11 + 2 (re Re H01 + im Im H01)
        let row = vec![
            (0, -hmat[(0, 0)].re),
            (1, -hmat[(1, 1)].re),
            (2, -2.0 * hmat[(0, 1)].re),
            (3, -2.0 * hmat[(0, 1)].im),
        ];
        p.add_le(row, -1.0);
        p.add_le(vec![(0, 1.0), (1, 1.0)], 1e3);
        p.add_psd_block(0, m);
        let sol = BarrierSolver::default().solve(&p).unwrap();
        let hn2: f64 = hv.iter().map(|z| z.norm_sqr()).sum();
        assert!((sol.objective - 1.0 / hn2).abs() < 1e-7 * (1.0 / hn2));
        let w = herm_from_params(m, &sol.x);
        let eig = w.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        assert!(lo / hi < 1e-6);
    }
}
