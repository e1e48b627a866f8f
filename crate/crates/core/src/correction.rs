//! Recovery isometries applied by B to everything except the reference `R`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, fidelity_sq, polar_factor, svd_sorted, LinearMap, PureState, C64, TOL_NORM};
use crate::states::R;

/// Maximum `‖ρ_R(post) - ρ_R(target)‖_1` for an exact correction to exist.
pub const TOL_EXACT: f64 = 1e-8;
/// Singular values at or below this are treated as zero when pairing vectors.
const PAIR_EPS: f64 = 1e-10;

/// Basis order used to complete a partial isometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Completion {
    #[default]
    Canonical,
    Reversed,
}

/// An isometry from the non-`R` factors of a branch state onto the non-`R`
/// factors of the target, with the fidelity it achieves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorrectionResult {
    pub isometry: LinearMap,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
    pub achieved_fidelity_sq: f64,
    pub exact: bool,
}

impl CorrectionResult {
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        PureState::from_ket(state.apply(&self.isometry, &self.input_labels, &self.output_labels)?)
    }
}

/// Rows indexed by `R`, columns by the remaining factors in signature order.
fn split(state: &PureState) -> Result<(DMatrix<C64>, Vec<String>, Vec<usize>)> {
    let (m, _, cols) = state.as_matrix(&[R])?;
    Ok((m, cols.labels().to_vec(), cols.dims().to_vec()))
}

fn check_shapes(post: &PureState, target: &PureState) -> Result<()> {
    let (dp, dt) = (post.signature().dim_of(R)?, target.signature().dim_of(R)?);
    if dp != dt {
        return Err(Error::DimensionMismatch(format!("reference dimensions {dp} and {dt} differ")));
    }
    let dom = post.signature().total() / dp;
    let cod = target.signature().total() / dt;
    if cod < dom {
        return Err(Error::DimensionMismatch(format!("no isometry from dimension {dom} into {cod}")));
    }
    Ok(())
}

/// Extends `known` (orthonormal columns) to an orthonormal basis of `C^n` by
/// Gram–Schmidt over the computational basis in the requested order.
fn complete_basis(known: &[DVector<C64>], n: usize, order: Completion) -> Result<Vec<DVector<C64>>> {
    let mut basis: Vec<DVector<C64>> = known.to_vec();
    let indices: Vec<usize> = match order {
        Completion::Canonical => (0..n).collect(),
        Completion::Reversed => (0..n).rev().collect(),
    };
    for i in indices {
        if basis.len() == n {
            break;
        }
        let mut v = DVector::<C64>::zeros(n);
        v[i] = c(1.0, 0.0);
        for _ in 0..2 {
            for b in &basis {
                let p = b.dotc(&v);
                v -= b * p;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / c(norm, 0.0));
        }
    }
    if basis.len() != n {
        return Err(Error::Invalid("basis completion failed".into()));
    }
    Ok(basis)
}

/// `V = Σ_i |w_i><u_i|` extended to a full isometry `C^dom → C^cod`.
fn isometry_from_pairs(
    u: &[DVector<C64>],
    w: &[DVector<C64>],
    dom: usize,
    cod: usize,
    order: Completion,
) -> Result<DMatrix<C64>> {
    let us = complete_basis(u, dom, order)?;
    let ws = complete_basis(w, cod, order)?;
    let mut v = DMatrix::<C64>::zeros(cod, dom);
    for (ui, wi) in us.iter().zip(&ws) {
        v += wi * ui.adjoint();
    }
    Ok(v)
}

fn finish(
    v: DMatrix<C64>,
    post: &PureState,
    target: &PureState,
    (input_labels, in_dims): (Vec<String>, Vec<usize>),
    (output_labels, out_dims): (Vec<String>, Vec<usize>),
    exact: bool,
) -> Result<CorrectionResult> {
    let isometry = LinearMap::new(v, in_dims, out_dims)?;
    let residual = isometry.isometry_residual();
    if residual > TOL_NORM {
        return Err(Error::NotIsometry { residual });
    }
    let image = post.apply(&isometry, &input_labels, &output_labels)?;
    let f = fidelity_sq(&PureState::from_ket(image)?, target)?;
    Ok(CorrectionResult { isometry, input_labels, output_labels, achieved_fidelity_sq: f, exact })
}

pub fn solve_exact_correction(post: &PureState, target: &PureState) -> Result<Option<CorrectionResult>> {
    solve_exact_correction_with(post, target, Completion::Canonical)
}

/// An isometry `V` with `(1_R ⊗ V)|post> = |target>`, or `None` when the
/// reductions on `R` differ by more than [`TOL_EXACT`].
pub fn solve_exact_correction_with(
    post: &PureState,
    target: &PureState,
    order: Completion,
) -> Result<Option<CorrectionResult>> {
    check_shapes(post, target)?;
    let rho_post = post.partial_trace(&[R])?;
    let rho_target = target.partial_trace(&[R])?;
    if rho_post.trace_distance(&rho_target)? > TOL_EXACT {
        return Ok(None);
    }
    let (cm, in_labels, in_dims) = split(post)?;
    let (tm, out_labels, out_dims) = split(target)?;
    // |post> = Σ_r |r>|c_r> with c_r the r-th row of cm; likewise t_r
    let c_cols = cm.transpose();
    let t_cols = tm.transpose();
    let (u, s, w_t) = svd_sorted(&c_cols);
    let rank = s.iter().filter(|&&x| x > PAIR_EPS).count();
    let dom_vecs: Vec<DVector<C64>> = (0..rank).map(|i| u.column(i).into_owned()).collect();
    // V u_i = T w_i / σ_i, re-orthonormalized against rounding
    let images = DMatrix::from_fn(t_cols.nrows(), rank, |r, i| {
        let wi = w_t.row(i).adjoint();
        (&t_cols * wi)[r] / c(s[i], 0.0)
    });
    let images = if rank > 0 { polar_factor(&images) } else { images };
    let cod_vecs: Vec<DVector<C64>> = (0..rank).map(|i| images.column(i).into_owned()).collect();
    let v = isometry_from_pairs(&dom_vecs, &cod_vecs, c_cols.nrows(), t_cols.nrows(), order)?;
    finish(v, post, target, (in_labels, in_dims), (out_labels, out_dims), true).map(Some)
}

/// The isometry maximizing `|<target|(1_R ⊗ V)|post>|^2`.
///
/// With `X = Σ_r |c_r><t_r|` (domain by codomain) the maximum of
/// `|tr(V X)|` is `‖X‖_1`, attained by `V = Σ_i |w_i><u_i|` for `X = Σ_i σ_i |u_i><w_i|`.
pub fn optimal_recovery_fidelity(post: &PureState, target: &PureState) -> Result<CorrectionResult> {
    check_shapes(post, target)?;
    let (cm, in_labels, in_dims) = split(post)?;
    let (tm, out_labels, out_dims) = split(target)?;
    let x = cm.transpose() * tm.map(|z| z.conj());
    let (u, s, w_t) = svd_sorted(&x);
    let rank = s.iter().filter(|&&v| v > PAIR_EPS).count();
    let us: Vec<DVector<C64>> = (0..rank).map(|i| u.column(i).into_owned()).collect();
    let ws: Vec<DVector<C64>> = (0..rank).map(|i| w_t.row(i).adjoint()).collect();
    let v = isometry_from_pairs(&us, &ws, x.nrows(), x.ncols(), Completion::Canonical)?;
    let res = finish(v, post, target, (in_labels, in_dims), (out_labels, out_dims), false)?;
    let exact = res.achieved_fidelity_sq >= 1.0 - 1e-9;
    Ok(CorrectionResult { exact, ..res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Signature;
    use crate::states::{phi_k, pauli_x, B, B_PRIME};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(sig: Signature, rng: &mut ChaCha8Rng) -> PureState {
        let n = sig.total();
        let v = DVector::from_fn(n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let norm = v.norm();
        PureState::new(sig, v / c(norm, 0.0)).unwrap()
    }

    fn random_isometry(dom: usize, cod: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
        let g = DMatrix::from_fn(cod, dom, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        polar_factor(&g)
    }

    fn sig(parts: &[(&str, usize)]) -> Signature {
        Signature::new(parts.iter().map(|&(l, d)| (l, d))).unwrap()
    }

    #[test]
    fn identity_case() {
        let t = phi_k(2, R, B).unwrap();
        let res = solve_exact_correction(&t, &t).unwrap().unwrap();
        assert!(res.exact);
        assert!((res.achieved_fidelity_sq - 1.0).abs() < 1e-12);
        assert!(res.isometry.max_abs_diff(&LinearMap::identity(2)) < 1e-12);
    }

    #[test]
    fn pauli_correction() {
        let target = phi_k(2, R, B).unwrap();
        let post = PureState::from_ket(target.apply(&pauli_x(2), &[B], &[B]).unwrap()).unwrap();
        let res = solve_exact_correction(&post, &target).unwrap().unwrap();
        assert!((res.achieved_fidelity_sq - 1.0).abs() < 1e-12);
        assert!(res.isometry.max_abs_diff(&pauli_x(2)) < 1e-12);
        let opt = optimal_recovery_fidelity(&post, &target).unwrap();
        assert!((opt.achieved_fidelity_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_reductions_have_no_exact_correction() {
        let target = phi_k(2, R, B).unwrap();
        let post = PureState::basis(sig(&[(R, 2), (B, 2)]), &[0, 0]).unwrap();
        assert!(solve_exact_correction(&post, &target).unwrap().is_none());
    }

    #[test]
    fn disjoint_reference_support_gives_zero() {
        let post = PureState::basis(sig(&[(R, 2), (B, 2)]), &[0, 0]).unwrap();
        let target = PureState::basis(sig(&[(R, 2), (B_PRIME, 2)]), &[1, 0]).unwrap();
        let res = optimal_recovery_fidelity(&post, &target).unwrap();
        assert!(res.achieved_fidelity_sq < 1e-15);
        assert!(res.isometry.is_isometry(1e-12));
    }

    #[test]
    fn embedding_into_larger_codomain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let post = random_state(sig(&[(R, 3), (B, 3)]), &mut rng);
        let v = random_isometry(3, 6, &mut rng);
        let map = LinearMap::new(v, vec![3], vec![2, 3]).unwrap();
        let target = PureState::from_ket(post.apply(&map, &[B], &[B_PRIME, B]).unwrap()).unwrap();
        for order in [Completion::Canonical, Completion::Reversed] {
            let res = solve_exact_correction_with(&post, &target, order).unwrap().unwrap();
            assert!((res.achieved_fidelity_sq - 1.0).abs() < 1e-10);
            assert_eq!(res.output_labels, vec![B_PRIME.to_string(), B.to_string()]);
        }
    }

    #[test]
    fn shrinking_codomain_is_rejected() {
        let post = PureState::basis(sig(&[(R, 2), (B, 4)]), &[0, 0]).unwrap();
        let target = PureState::basis(sig(&[(R, 2), (B, 2)]), &[0, 0]).unwrap();
        assert!(optimal_recovery_fidelity(&post, &target).is_err());
    }

    /// Brute force over `U(2)` modulo global phase: a coarse grid followed by
    /// coordinate refinement.
    fn brute_force_2x2(post: &PureState, target: &PureState) -> f64 {
        let (cm, _, _) = post.as_matrix(&[R]).unwrap();
        let (tm, _, _) = target.as_matrix(&[R]).unwrap();
        let eval = |th: f64, b: f64, g: f64| {
            let (s, co) = th.sin_cos();
            let u = DMatrix::from_row_slice(
                2,
                2,
                &[crate::linalg::cis(b) * co, crate::linalg::cis(g) * s, -crate::linalg::cis(-g) * s, crate::linalg::cis(-b) * co],
            );
            let mut acc = c(0.0, 0.0);
            for r in 0..2 {
                let cr = cm.row(r).transpose();
                let tr = tm.row(r).transpose();
                acc += tr.dotc(&(&u * cr));
            }
            acc.norm_sqr()
        };
        let n = 48;
        let mut best = (0.0, 0.0, 0.0, -1.0);
        for i in 0..=n {
            let th = std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
            for j in 0..2 * n {
                let b = std::f64::consts::PI * j as f64 / n as f64;
                for k in 0..2 * n {
                    let g = std::f64::consts::PI * k as f64 / n as f64;
                    let f = eval(th, b, g);
                    if f > best.3 {
                        best = (th, b, g, f);
                    }
                }
            }
        }
        let mut step = std::f64::consts::PI / n as f64;
        while step > 1e-7 {
            let mut improved = false;
            for d in 0..3 {
                for sgn in [1.0, -1.0] {
                    let mut p = [best.0, best.1, best.2];
                    p[d] += sgn * step;
                    let f = eval(p[0], p[1], p[2]);
                    if f > best.3 {
                        best = (p[0], p[1], p[2], f);
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        best.3
    }

    #[test]
    fn matches_brute_force_on_two_qubit_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let post = random_state(sig(&[(R, 2), (B, 2)]), &mut rng);
            let target = random_state(sig(&[(R, 2), (B_PRIME, 2)]), &mut rng);
            let ours = optimal_recovery_fidelity(&post, &target).unwrap().achieved_fidelity_sq;
            let oracle = brute_force_2x2(&post, &target);
            assert!((ours - oracle).abs() < 1e-3, "{ours} vs {oracle}");
            assert!(ours >= oracle - 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn optimum_dominates_random_isometries(seed in any::<u64>(), dr in 1usize..4, db in 1usize..4, extra in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let post = random_state(sig(&[(R, dr), (B, db)]), &mut rng);
            let target = random_state(sig(&[(R, dr), (B_PRIME, db + extra)]), &mut rng);
            let opt = optimal_recovery_fidelity(&post, &target).unwrap();
            prop_assert!(opt.isometry.is_isometry(1e-10));
            prop_assert!((0.0..=1.0).contains(&opt.achieved_fidelity_sq));
            for _ in 0..50 {
                let v = LinearMap::new(random_isometry(db, db + extra, &mut rng), vec![db], vec![db + extra]).unwrap();
                let img = PureState::from_ket(post.apply(&v, &[B], &[B_PRIME]).unwrap()).unwrap();
                prop_assert!(fidelity_sq(&img, &target).unwrap() <= opt.achieved_fidelity_sq + 1e-10);
            }
        }

        #[test]
        fn exactness_iff_reductions_match(seed in any::<u64>(), perturb in proptest::bool::ANY) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let post = random_state(sig(&[(R, 2), (B, 3)]), &mut rng);
            let v = LinearMap::new(random_isometry(3, 4, &mut rng), vec![3], vec![4]).unwrap();
            let mut target = PureState::from_ket(post.apply(&v, &[B], &[B_PRIME]).unwrap()).unwrap();
            if perturb {
                let other = random_state(sig(&[(B_PRIME, 4), (R, 2)]), &mut rng);
                target = target.as_ket().scale(c(0.9, 0.0)).add(&other.scale(c(0.3, 0.0))).unwrap().normalized().unwrap();
            }
            let gap = post.partial_trace(&[R]).unwrap().trace_distance(&target.partial_trace(&[R]).unwrap()).unwrap();
            let res = solve_exact_correction(&post, &target).unwrap();
            prop_assert_eq!(res.is_some(), gap <= TOL_EXACT);
            if let Some(r) = res {
                prop_assert!(r.isometry.is_isometry(1e-10));
                prop_assert!((r.achieved_fidelity_sq - 1.0).abs() < 1e-9);
            }
        }
    }
}
