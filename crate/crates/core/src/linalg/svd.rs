//! One-sided Jacobi SVD.
//!
//! nalgebra's complex bidiagonal SVD can return factors that do not
//! reconstruct rank-deficient inputs (errors of order one were observed on
//! random rank-3 matrices of shape 11×121). Hestenes' method only ever applies
//! unitary rotations to column pairs, so `A = U Σ V^dag` holds to rounding for
//! every rank, and small singular values keep high relative accuracy.

use nalgebra::{DMatrix, DVector};

use super::{c, C64};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `m = U diag(s) V^dag` with `s` descending; returns `(U, s, V^dag)`.
pub(crate) fn jacobi_svd(m: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    if m.nrows() < m.ncols() {
        let (u, s, v_t) = tall_svd(m.adjoint());
        return (v_t.adjoint(), s, u.adjoint());
    }
    tall_svd(m.clone())
}

fn tall_svd(mut a: DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    let (rows, n) = a.shape();
    let mut v = DMatrix::<C64>::identity(n, n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // real rotation of (a_p, a_q e^{-iφ}) where γ = |γ| e^{iφ}
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate(&mut a, p, q, cs, sn, phase);
                rotate(&mut v, p, q, cs, sn, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let floor = norms.iter().copied().fold(0.0, f64::max) * f64::EPSILON * rows.max(n) as f64;
    let mut u = DMatrix::<C64>::zeros(rows, n);
    let mut s = vec![0.0; n];
    let mut filled = 0;
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > floor {
            u.set_column(k, &(a.column(j) / c(norms[j], 0.0)));
            s[k] = norms[j];
            filled = k + 1;
        }
    }
    // left vectors for zero singular values: any orthonormal completion
    let mut e = 0;
    while filled < n {
        let mut x = DVector::<C64>::zeros(rows);
        x[e] = c(1.0, 0.0);
        e += 1;
        for _ in 0..2 {
            for k in 0..filled {
                let p = u.column(k).dotc(&x);
                x -= u.column(k) * p;
            }
        }
        let norm = x.norm();
        if norm > 1e-3 {
            u.set_column(filled, &(x / c(norm, 0.0)));
            filled += 1;
        }
    }
    let v_t = DMatrix::from_fn(n, n, |k, col| v[(col, order[k])].conj());
    (u, s, v_t)
}

/// Columns `(x_p, x_q) ← (c x_p − s ē x_q, s x_p + c ē x_q)`.
fn rotate(x: &mut DMatrix<C64>, p: usize, q: usize, cs: f64, sn: f64, phase: C64) {
    let conj_phase = phase.conj();
    for r in 0..x.nrows() {
        let xp = x[(r, p)];
        let xq = x[(r, q)] * conj_phase;
        x[(r, p)] = xp * cs - xq * sn;
        x[(r, q)] = xp * sn + xq * cs;
    }
}
