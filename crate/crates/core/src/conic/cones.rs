//! Self-concordant barriers for the supported cones.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::Cone;

/// Number of real parameters of an `m × m` Hermitian matrix.
pub fn herm_params_len(m: usize) -> usize {
    m * m
}

/// Parameter layout: the `m` diagonal entries, then for every `i < j` in
/// row-major order the real and imaginary part of entry `(i, j)`.
pub fn herm_from_params(m: usize, p: &[f64]) -> DMatrix<Complex64> {
    debug_assert_eq!(p.len(), herm_params_len(m));
    let mut w = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        w[(i, i)] = Complex64::new(p[i], 0.0);
    }
    let mut k = m;
    for i in 0..m {
        for j in (i + 1)..m {
            let z = Complex64::new(p[k], p[k + 1]);
            w[(i, j)] = z;
            w[(j, i)] = z.conj();
            k += 2;
        }
    }
    w
}

pub fn params_from_herm(w: &DMatrix<Complex64>) -> Vec<f64> {
    let m = w.nrows();
    let mut p = Vec::with_capacity(herm_params_len(m));
    for i in 0..m {
        p.push(w[(i, i)].re);
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let z = (w[(i, j)] + w[(j, i)].conj()) * 0.5;
            p.push(z.re);
            p.push(z.im);
        }
    }
    p
}

/// Basis matrix `E_a` of parameter `a` as a list of `(row, col, coef)`.
fn herm_basis(m: usize) -> Vec<Vec<(usize, usize, Complex64)>> {
    let one = Complex64::new(1.0, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);
    let mut basis = Vec::with_capacity(herm_params_len(m));
    for i in 0..m {
        basis.push(vec![(i, i, one)]);
    }
    for i in 0..m {
        for j in (i + 1)..m {
            basis.push(vec![(i, j, one), (j, i, one)]);
            basis.push(vec![(i, j, i_unit), (j, i, -i_unit)]);
        }
    }
    basis
}

impl Cone {
    pub(crate) fn interior_direction(&self) -> Vec<f64> {
        match *self {
            Cone::NonNeg(n) => vec![1.0; n],
            Cone::Exp => vec![-1.0, 1.0, 1.0],
            Cone::HermitianPsd(m) => {
                let mut d = vec![0.0; herm_params_len(m)];
                d[..m].iter_mut().for_each(|x| *x = 1.0);
                d
            }
        }
    }

    pub(crate) fn is_interior(&self, s: &[f64]) -> bool {
        match *self {
            Cone::NonNeg(_) => s.iter().all(|&x| x > 0.0),
            Cone::Exp => exp_psi(s).is_some_and(|psi| psi > 0.0),
            Cone::HermitianPsd(m) => herm_log_det(m, s).is_some(),
        }
    }

    /// Barrier value; `None` outside the interior.
    pub(crate) fn barrier(&self, s: &[f64]) -> Option<f64> {
        match *self {
            Cone::NonNeg(_) => {
                let mut acc = 0.0;
                for &x in s {
                    if x <= 0.0 {
                        return None;
                    }
                    acc -= x.ln();
                }
                Some(acc)
            }
            Cone::Exp => {
                let psi = exp_psi(s)?;
                if psi <= 0.0 {
                    return None;
                }
                Some(-psi.ln() - s[1].ln() - s[2].ln())
            }
            Cone::HermitianPsd(m) => Some(-herm_log_det(m, s)?),
        }
    }

    /// Gradient and Hessian of the barrier at an interior point.
    /// Not used for `NonNeg`, which the solver handles row by row.
    pub(crate) fn grad_hess(&self, s: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        match *self {
            Cone::NonNeg(_) => {
                let g = DVector::from_iterator(s.len(), s.iter().map(|x| -1.0 / x));
                let h = DMatrix::from_diagonal(&DVector::from_iterator(
                    s.len(),
                    s.iter().map(|x| 1.0 / (x * x)),
                ));
                (g, h)
            }
            Cone::Exp => exp_grad_hess(s),
            Cone::HermitianPsd(m) => psd_grad_hess(m, s),
        }
    }

    /// A `t` such that `s + t'·d` lies in the interior for every `t' > t`,
    /// `d` being [`Cone::interior_direction`].
    pub(crate) fn interior_depth(&self, s: &[f64]) -> f64 {
        match *self {
            Cone::NonNeg(_) => s.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(-x)),
            Cone::Exp => {
                let d = self.interior_direction();
                let shifted = |t: f64| [s[0] + t * d[0], s[1] + t * d[1], s[2] + t * d[2]];
                if self.is_interior(&s[..3]) {
                    return 0.0;
                }
                let mut t = (-s[1]).max(-s[2]).max(0.0) + 1e-3;
                while !self.is_interior(&shifted(t)) {
                    t = 2.0 * t + 1.0;
                }
                t
            }
            Cone::HermitianPsd(m) => {
                let w = herm_from_params(m, s);
                let eig = w.symmetric_eigenvalues();
                -eig.iter().cloned().fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// `ln det W` for positive definite `W`, else `None`. Goes through the real
/// embedding `[Re −Im; Im Re]`: complex Cholesky in nalgebra takes complex
/// square roots and so does not reject indefinite matrices.
pub(crate) fn herm_log_det(m: usize, s: &[f64]) -> Option<f64> {
    let w = herm_from_params(m, s);
    let real = DMatrix::<f64>::from_fn(2 * m, 2 * m, |i, j| {
        let z = w[(i % m, j % m)];
        match (i < m, j < m) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let chol = real.cholesky()?;
    let l = chol.l_dirty();
    // det of the embedding is (det W)².
    Some((0..2 * m).map(|i| l[(i, i)].ln()).sum::<f64>())
}

fn exp_psi(s: &[f64]) -> Option<f64> {
    let (u, v, w) = (s[0], s[1], s[2]);
    if v <= 0.0 || w <= 0.0 {
        return None;
    }
    Some(v * (w / v).ln() - u)
}

fn exp_grad_hess(s: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let (u, v, w) = (s[0], s[1], s[2]);
    let lr = (w / v).ln();
    let psi = v * lr - u;
    let dpsi = [-1.0, lr - 1.0, v / w];
    let mut grad = DVector::zeros(3);
    for i in 0..3 {
        grad[i] = -dpsi[i] / psi;
    }
    grad[1] -= 1.0 / v;
    grad[2] -= 1.0 / w;

    let mut hess = DMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            hess[(i, j)] = dpsi[i] * dpsi[j] / (psi * psi);
        }
    }
    // −∇²ψ/ψ with ψ_vv = −1/v, ψ_vw = 1/w, ψ_ww = −v/w².
    hess[(1, 1)] += 1.0 / (v * psi) + 1.0 / (v * v);
    hess[(1, 2)] -= 1.0 / (w * psi);
    hess[(2, 1)] -= 1.0 / (w * psi);
    hess[(2, 2)] += v / (w * w * psi) + 1.0 / (w * w);
    (grad, hess)
}

fn psd_grad_hess(m: usize, s: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let w = herm_from_params(m, s);
    let inv = w
        .cholesky()
        .map(|c| c.inverse())
        .expect("PSD barrier evaluated outside the interior");
    let basis = herm_basis(m);
    let n = basis.len();
    let mut grad = DVector::zeros(n);
    for (a, ea) in basis.iter().enumerate() {
        // tr(V E_a) = Σ coef · V[col, row]
        let tr: Complex64 = ea.iter().map(|&(p, q, c)| c * inv[(q, p)]).sum();
        grad[a] = -tr.re;
    }
    let mut hess = DMatrix::zeros(n, n);
    for (a, ea) in basis.iter().enumerate() {
        for (b, eb) in basis.iter().enumerate().skip(a) {
            // tr(V E_a V E_b) = Σ α β V[s, p] V[q, r] for E_a ∋ (p, q, α), E_b ∋ (r, s, β)
            let mut acc = Complex64::new(0.0, 0.0);
            for &(p, q, alpha) in ea {
                for &(r, s_, beta) in eb {
                    acc += alpha * beta * inv[(s_, p)] * inv[(q, r)];
                }
            }
            hess[(a, b)] = acc.re;
            hess[(b, a)] = acc.re;
        }
    }
    (grad, hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_grad(cone: Cone, s: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..s.len())
            .map(|i| {
                let mut p = s.to_vec();
                let mut q = s.to_vec();
                p[i] += h;
                q[i] -= h;
                (cone.barrier(&p).unwrap() - cone.barrier(&q).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn exp_barrier_derivatives_match_finite_differences() {
        let s = [0.3, 1.2, 2.5];
        let (g, h) = Cone::Exp.grad_hess(&s);
        let ng = numeric_grad(Cone::Exp, &s);
        for i in 0..3 {
            assert!((g[i] - ng[i]).abs() < 1e-6, "grad {i}: {} vs {}", g[i], ng[i]);
        }
        let eps = 1e-6;
        for j in 0..3 {
            let mut p = s;
            p[j] += eps;
            let (gp, _) = Cone::Exp.grad_hess(&p);
            for i in 0..3 {
                let fd = (gp[i] - g[i]) / eps;
                assert!((h[(i, j)] - fd).abs() < 1e-4 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn psd_barrier_derivatives_match_finite_differences() {
        let m = 3;
        let w = DMatrix::<Complex64>::from_fn(m, m, |i, j| {
            if i == j {
                Complex64::new(2.0 + i as f64, 0.0)
            } else if i < j {
                Complex64::new(0.3, 0.2 * (j as f64))
            } else {
                Complex64::new(0.3, -0.2 * (i as f64))
            }
        });
        let s = params_from_herm(&w);
        let cone = Cone::HermitianPsd(m);
        let (g, h) = cone.grad_hess(&s);
        let ng = numeric_grad(cone, &s);
        for i in 0..s.len() {
            assert!((g[i] - ng[i]).abs() < 1e-6);
        }
        let eps = 1e-6;
        for j in 0..s.len() {
            let mut p = s.clone();
            p[j] += eps;
            let (gp, _) = cone.grad_hess(&p);
            for i in 0..s.len() {
                let fd = (gp[i] - g[i]) / eps;
                assert!((h[(i, j)] - fd).abs() < 1e-4 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn indefinite_hermitian_is_outside() {
        let cone = Cone::HermitianPsd(2);
        // Eigenvalues 3 and −1.
        let s = [1.0, 1.0, 0.0, 2.0];
        assert!(!cone.is_interior(&s) && cone.barrier(&s).is_none());
        // Complex off-diagonal with a tiny negative eigenvalue.
        let s = [1.0, 1.0, 0.6, 0.8 + 1e-9];
        assert!(!cone.is_interior(&s) && cone.barrier(&s).is_none());
        let s = [2.0, 1.0, 0.3, -0.4];
        let det: f64 = 2.0 - 0.25;
        assert!((cone.barrier(&s).unwrap() + det.ln()).abs() < 1e-12);
    }

    #[test]
    fn herm_params_round_trip() {
        let p: Vec<f64> = (0..16).map(|i| i as f64 * 0.1 - 0.4).collect();
        let w = herm_from_params(4, &p);
        assert_eq!(params_from_herm(&w), p);
    }

    #[test]
    fn interior_depth_moves_into_cone() {
        for s in [[1.0, -0.5, 0.2], [5.0, 1.0, 1.0], [-1.0, 1.0, 1.0]] {
            let t = Cone::Exp.interior_depth(&s);
            let d = Cone::Exp.interior_direction();
            let shifted: Vec<f64> = (0..3).map(|i| s[i] + (t + 1e-9) * d[i]).collect();
            assert!(Cone::Exp.is_interior(&shifted), "{s:?} depth {t}");
        }
    }
}
