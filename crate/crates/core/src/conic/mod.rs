//! Conic programs in inequality form and a pluggable solver interface.
//!
//! A program reads
//!
//! ```text
//! minimize    cᵀx
//! subject to  A x = b
//!             h − G x ∈ K
//! ```
//!
//! where `K` is a product of nonnegative orthants, exponential cones and
//! Hermitian positive semidefinite cones. The rows of `G` and `h` are
//! partitioned by [`ConicProgram::cones`] in order.
//!
//! The default backend is [`BarrierSolver`], a two-phase primal log-barrier
//! path-following method. The feasible set is expected to be bounded; problem
//! builders add explicit bounds where the natural formulation is not.

mod barrier;
mod cones;

pub use barrier::BarrierSolver;
pub use cones::{herm_from_params, herm_params_len, params_from_herm};

use thiserror::Error;

/// Row-major sparse matrix with a fixed column count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRows {
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            rows: Vec::new(),
        }
    }

    /// Appends a row; duplicate column entries are summed, zeros dropped.
    pub fn push(&mut self, mut entries: Vec<(usize, f64)>) -> usize {
        entries.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (j, v) in entries {
            debug_assert!(j < self.ncols, "column {j} out of range");
            match merged.last_mut() {
                Some((lj, lv)) if *lj == j => *lv += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        self.rows.push(merged);
        self.rows.len() - 1
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, v)| v * x[j]).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.row_dot(i, x)).collect()
    }
}

/// One factor of the product cone `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// `n` nonnegative scalars.
    NonNeg(usize),
    /// Closure of `{(u, v, w) : v > 0, v·exp(u/v) ≤ w}`.
    Exp,
    /// `m × m` Hermitian positive semidefinite matrices, stored as `m²`
    /// real parameters (see [`herm_from_params`]).
    HermitianPsd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::NonNeg(n) => n,
            Cone::Exp => 3,
            Cone::HermitianPsd(m) => herm_params_len(m),
        }
    }

    /// Barrier parameter of the standard self-concordant barrier.
    pub fn degree(&self) -> f64 {
        match *self {
            Cone::NonNeg(n) => n as f64,
            Cone::Exp => 3.0,
            Cone::HermitianPsd(m) => m as f64,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    pub c: Vec<f64>,
    pub a: SparseRows,
    pub b: Vec<f64>,
    pub g: SparseRows,
    pub h: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConicProgram {
    pub fn new(nvars: usize) -> Self {
        Self {
            c: vec![0.0; nvars],
            a: SparseRows::new(nvars),
            b: Vec::new(),
            g: SparseRows::new(nvars),
            h: Vec::new(),
            cones: Vec::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.c.len()
    }

    pub fn add_equality(&mut self, entries: Vec<(usize, f64)>, rhs: f64) {
        self.a.push(entries);
        self.b.push(rhs);
    }

    /// Adds `Σ coef·x ≤ rhs` as a one-row nonnegative cone.
    pub fn add_le(&mut self, entries: Vec<(usize, f64)>, rhs: f64) {
        self.g.push(entries);
        self.h.push(rhs);
        match self.cones.last_mut() {
            Some(Cone::NonNeg(n)) => *n += 1,
            _ => self.cones.push(Cone::NonNeg(1)),
        }
    }

    /// Adds `(u, v, w) ∈ K_exp` where each component is `offset + Σ coef·x`.
    pub fn add_exp_cone(&mut self, components: [(Vec<(usize, f64)>, f64); 3]) {
        for (entries, offset) in components {
            let negated = entries.into_iter().map(|(j, v)| (j, -v)).collect();
            self.g.push(negated);
            self.h.push(offset);
        }
        self.cones.push(Cone::Exp);
    }

    /// Constrains the `m²` consecutive variables starting at `first` to be the
    /// parameters of a Hermitian PSD matrix.
    pub fn add_psd_block(&mut self, first: usize, m: usize) {
        for k in 0..herm_params_len(m) {
            self.g.push(vec![(first + k, -1.0)]);
            self.h.push(0.0);
        }
        self.cones.push(Cone::HermitianPsd(m));
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    pub(crate) fn validate(&self) -> Result<(), SolverError> {
        let n = self.nvars();
        let cone_rows: usize = self.cones.iter().map(Cone::dim).sum();
        if self.a.ncols != n || self.g.ncols != n {
            return Err(SolverError::Malformed("column count mismatch".into()));
        }
        if self.a.nrows() != self.b.len() || self.g.nrows() != self.h.len() {
            return Err(SolverError::Malformed("row count mismatch".into()));
        }
        if cone_rows != self.g.nrows() {
            return Err(SolverError::Malformed(format!(
                "cones cover {cone_rows} rows but G has {}",
                self.g.nrows()
            )));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.c) || !finite(&self.b) || !finite(&self.h) {
            return Err(SolverError::Malformed("non-finite program data".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveStatus {
    Optimal,
    /// The feasible set has no strict interior; the program was solved with
    /// every cone constraint relaxed by `slack` along the interior direction.
    OptimalRelaxed { slack: f64 },
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Certified bound on `objective − optimum`.
    pub gap: f64,
    pub status: SolveStatus,
    pub newton_steps: usize,
}

impl ConicSolution {
    pub fn lower_bound(&self) -> f64 {
        self.objective - self.gap
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error("program is infeasible (minimal cone violation {violation:.3e})")]
    Infeasible { violation: f64 },
    #[error("equality constraints are inconsistent (residual {residual:.3e})")]
    InconsistentEqualities { residual: f64 },
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Backend capable of solving a [`ConicProgram`].
pub trait ConicSolver {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution, SolverError>;
}
