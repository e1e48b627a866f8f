//! Dense complex linear algebra over small labeled tensor-product spaces.
//!
//! Every vector and operator carries a [`Signature`]: an ordered list of
//! subsystem labels with their dimensions. Reshapes, partial traces and local
//! maps are all driven by labels, so callers never track factor order by hand.

mod map;
mod signature;
mod state;
mod svd;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub use map::LinearMap;
pub use signature::Signature;
pub use state::{DensityOperator, Ket, PureState};

pub(crate) use map::kron;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Normalization / Hermiticity tolerance.
pub const TOL_NORM: f64 = 1e-10;
/// Singular values above this count towards the Schmidt rank.
pub const RANK_EPS: f64 = 1e-9;
/// Eigenvalues below this are treated as zero in entropies.
pub const EIG_FLOOR: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Kronecker product with dimensions concatenated in argument order.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl Tensor for LinearMap {
    fn tensor(&self, other: &Self) -> Result<Self> {
        LinearMap::new(
            kron(self.matrix(), other.matrix()),
            self.domain().iter().chain(other.domain()).copied().collect(),
            self.codomain().iter().chain(other.codomain()).copied().collect(),
        )
    }
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Result<Self> {
        PureState::tensor(self, other)
    }
}

impl Tensor for Ket {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ket::tensor(self, other)
    }
}

impl Tensor for DensityOperator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        DensityOperator::tensor(self, other)
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// Concatenates coordinates: `a` fills the first `a.len()` slots, `b` the rest.
pub fn direct_sum(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Embeds a `C^2 ⊕ C^9` pair into `C^11`: coordinates 0–1 from `v2`, 2–10 from `v9`.
pub fn direct_sum_embed(v2: &DVector<C64>, v9: &DVector<C64>) -> Result<DVector<C64>> {
    if v2.len() != 2 || v9.len() != 9 {
        return Err(Error::DimensionMismatch(format!(
            "direct sum expects fragments of dimension 2 and 9, got {} and {}",
            v2.len(),
            v9.len()
        )));
    }
    Ok(direct_sum(v2, v9))
}

pub fn partial_trace<S: AsRef<str>>(rho: &DensityOperator, keep: &[S]) -> Result<DensityOperator> {
    rho.partial_trace(keep)
}

/// Real eigenvalues of a Hermitian matrix (the anti-Hermitian part is dropped).
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.iter().copied().collect()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), idx.len(), |r, k| eig.eigenvectors[(r, idx[k])]);
    (vals, vecs)
}

/// `a * b` through one real product of the block forms `[[Re, -Im], [Im, Re]]`,
/// which runs on nalgebra's optimized real kernel.
pub fn complex_matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    assert_eq!(k, b.nrows(), "inner dimensions differ");
    let block = DMatrix::<f64>::from_fn(2 * m, 2 * k, |r, q| {
        let z = a[(r % m, q % k)];
        match (r < m, q < k) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let stacked = DMatrix::<f64>::from_fn(2 * k, n, |r, q| if r < k { b[(r, q)].re } else { b[(r - k, q)].im });
    let p = block * stacked;
    DMatrix::from_fn(m, n, |r, q| c(p[(r, q)], p[(r + m, q)]))
}

/// Thin SVD `m = U diag(s) V^dag` with singular values in descending order.
pub fn svd_sorted(m: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    svd::jacobi_svd(m)
}

/// Unitary (or co-isometric) polar factor `U V^dag` of `m`.
pub fn polar_factor(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (u, _, v_t) = svd_sorted(m);
    u * v_t
}

/// Sum of singular values.
pub fn trace_norm(m: &DMatrix<C64>) -> f64 {
    svd::jacobi_svd(m).1.iter().sum()
}

/// Schmidt decomposition across the cut `left | rest`.
#[derive(Debug, Clone)]
pub struct Schmidt {
    pub coefficients: Vec<f64>,
    pub left: Vec<DVector<C64>>,
    pub right: Vec<DVector<C64>>,
    pub left_signature: Signature,
    pub right_signature: Signature,
}

impl Schmidt {
    pub fn rank(&self) -> usize {
        self.coefficients.iter().filter(|&&x| x > RANK_EPS).count()
    }

    /// `Σ_i c_i |l_i> ⊗ |r_i>` in the layout `left ‖ right`.
    pub fn reconstruct(&self) -> Result<Ket> {
        let sig = self.left_signature.concat(&self.right_signature)?;
        let mut amps = DVector::zeros(sig.total());
        for ((&coef, l), r) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            amps += l.kronecker(r) * c(coef, 0.0);
        }
        Ket::new(sig, amps)
    }
}

pub fn schmidt<S: AsRef<str>>(psi: &PureState, left: &[S]) -> Result<Schmidt> {
    let (m, left_signature, right_signature) = psi.as_matrix(left)?;
    let (u, s, v_t) = svd_sorted(&m);
    let left = (0..s.len()).map(|k| u.column(k).into_owned()).collect();
    let right = (0..s.len()).map(|k| v_t.row(k).transpose()).collect();
    Ok(Schmidt { coefficients: s, left, right, left_signature, right_signature })
}

/// Either kind of state accepted by [`fidelity_sq`].
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a PureState),
    Mixed(&'a DensityOperator),
}

impl<'a> From<&'a PureState> for StateRef<'a> {
    fn from(p: &'a PureState) -> Self {
        StateRef::Pure(p)
    }
}

impl<'a> From<&'a DensityOperator> for StateRef<'a> {
    fn from(d: &'a DensityOperator) -> Self {
        StateRef::Mixed(d)
    }
}

/// `<target| state |target>`, with factor order aligned by label.
pub fn fidelity_sq<'a>(state: impl Into<StateRef<'a>>, target: &PureState) -> Result<f64> {
    let f = match state.into() {
        StateRef::Pure(p) => target.inner(p)?.norm_sqr(),
        StateRef::Mixed(rho) => {
            let r = rho.reordered(target.labels())?;
            if r.signature() != target.signature() {
                return Err(Error::DimensionMismatch("fidelity between different spaces".into()));
            }
            let t = target.amplitudes();
            (t.adjoint() * r.matrix() * t)[(0, 0)].re
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Base-2 von Neumann entropy.
pub fn entropy(rho: &DensityOperator) -> Result<f64> {
    let eig = hermitian_eigenvalues(rho.matrix());
    if let Some(&min) = eig.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -TOL_NORM {
            return Err(Error::NotDensity(format!("negative eigenvalue {min:.3e}")));
        }
    }
    Ok(eig.into_iter().filter(|&l| l > EIG_FLOOR).map(|l| -l * l.log2()).sum::<f64>() + 0.0)
}

/// `H(A|B) = H(AB) - H(B)` for the reductions of a pure state.
pub fn cond_entropy<S: AsRef<str>, T: AsRef<str>>(psi: &PureState, a: &[S], b: &[T]) -> Result<f64> {
    let mut ab: Vec<String> = a.iter().map(|l| l.as_ref().to_string()).collect();
    ab.extend(b.iter().map(|l| l.as_ref().to_string()));
    let h_ab = entropy(&psi.partial_trace(&ab)?)?;
    let h_b = entropy(&psi.partial_trace(b)?)?;
    Ok(h_ab - h_b)
}

#[cfg(test)]
mod tests;
