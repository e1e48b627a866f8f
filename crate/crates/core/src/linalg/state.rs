use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::map::LinearMap;
use super::signature::{permutation_table, Signature};
use super::{c, C64, TOL_NORM};
use crate::error::{Error, Result};

/// A labeled amplitude vector with no normalization requirement.
///
/// Unnormalized vectors show up as Kraus branches before renormalization and as
/// direct-sum fragments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TensorJson", try_from = "TensorJson")]
pub struct Ket {
    sig: Signature,
    amps: DVector<C64>,
}

impl Ket {
    pub fn new(sig: Signature, amps: DVector<C64>) -> Result<Self> {
        if sig.total() != amps.len() {
            return Err(Error::DimensionMismatch(format!(
                "signature {:?} has {} entries, vector has {}",
                sig.dims(),
                sig.total(),
                amps.len()
            )));
        }
        Ok(Self { sig, amps })
    }

    pub fn zeros(sig: Signature) -> Self {
        let n = sig.total();
        Self { sig, amps: DVector::zeros(n) }
    }

    /// Computational basis vector given one index per factor.
    pub fn basis(sig: Signature, index: &[usize]) -> Result<Self> {
        if index.len() != sig.len() {
            return Err(Error::DimensionMismatch("basis index length".into()));
        }
        let mut flat = 0;
        for (&i, &d) in index.iter().zip(sig.dims()) {
            if i >= d {
                return Err(Error::DimensionMismatch(format!("basis index {i} >= dimension {d}")));
            }
            flat = flat * d + i;
        }
        let mut k = Self::zeros(sig);
        k.amps[flat] = c(1.0, 0.0);
        Ok(k)
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn labels(&self) -> &[String] {
        self.sig.labels()
    }

    pub fn dims(&self) -> &[usize] {
        self.sig.dims()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn scale(&self, s: C64) -> Ket {
        Ket { sig: self.sig.clone(), amps: &self.amps * s }
    }

    /// Reorders the factors; `labels` must be a permutation of the current labels.
    pub fn reordered<S: AsRef<str>>(&self, labels: &[S]) -> Result<Ket> {
        let order = self.sig.order_exact(labels)?;
        Ok(self.permute(&order))
    }

    pub(crate) fn permute(&self, order: &[usize]) -> Ket {
        if order.iter().enumerate().all(|(i, &p)| i == p) {
            return self.clone();
        }
        let table = permutation_table(self.sig.dims(), order);
        let amps = DVector::from_iterator(table.len(), table.iter().map(|&o| self.amps[o]));
        Ket { sig: self.sig.permuted(order), amps }
    }

    /// Reshapes into a matrix whose rows index `rows` (in that order) and whose
    /// columns index the remaining factors in signature order.
    pub fn as_matrix<S: AsRef<str>>(&self, rows: &[S]) -> Result<(DMatrix<C64>, Signature, Signature)> {
        let order = self.sig.order_with_front(rows)?;
        let p = self.permute(&order);
        let row_sig = self.sig.select(rows)?;
        let col_sig = self.sig.select(&self.sig.complement(rows))?;
        let (r, cols) = (row_sig.total(), col_sig.total());
        let m = DMatrix::from_fn(r, cols, |i, j| p.amps[i * cols + j]);
        Ok((m, row_sig, col_sig))
    }

    fn from_matrix(m: &DMatrix<C64>, row_sig: Signature, col_sig: Signature) -> Result<Ket> {
        let (r, cols) = m.shape();
        let amps = DVector::from_fn(r * cols, |k, _| m[(k / cols, k % cols)]);
        Ket::new(row_sig.concat(&col_sig)?, amps)
    }

    /// Applies `map` to the factors `on` (in that order); the image factors are
    /// labeled `out` and placed first, followed by the untouched factors.
    pub fn apply<S: AsRef<str>, T: AsRef<str>>(&self, map: &LinearMap, on: &[S], out: &[T]) -> Result<Ket> {
        let in_sig = self.sig.select(on)?;
        if in_sig.dims() != map.domain() {
            return Err(Error::DimensionMismatch(format!(
                "map domain {:?} does not match factors {:?}",
                map.domain(),
                in_sig.dims()
            )));
        }
        if out.len() != map.codomain().len() {
            return Err(Error::DimensionMismatch(format!(
                "{} output labels for codomain {:?}",
                out.len(),
                map.codomain()
            )));
        }
        let (m, _, col_sig) = self.as_matrix(on)?;
        let image = map.matrix() * m;
        let out_sig = Signature::new(out.iter().map(|l| l.as_ref().to_string()).zip(map.codomain().iter().copied()))?;
        Ket::from_matrix(&image, out_sig, col_sig)
    }

    pub fn relabeled(&self, from: &str, to: &str) -> Result<Ket> {
        Ok(Ket { sig: self.sig.relabel(from, to)?, amps: self.amps.clone() })
    }

    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        Ket::new(self.sig.concat(&other.sig)?, self.amps.kronecker(&other.amps))
    }

    /// `<self|other>` after aligning `other` to this factor order.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        let o = other.aligned_to(&self.sig)?;
        Ok(self.amps.dotc(&o.amps))
    }

    pub fn add(&self, other: &Ket) -> Result<Ket> {
        let o = other.aligned_to(&self.sig)?;
        Ok(Ket { sig: self.sig.clone(), amps: &self.amps + &o.amps })
    }

    pub(crate) fn aligned_to(&self, sig: &Signature) -> Result<Ket> {
        let k = self.reordered(sig.labels())?;
        if k.sig != *sig {
            return Err(Error::DimensionMismatch(format!(
                "signatures differ: {:?} vs {:?}",
                k.sig.dims(),
                sig.dims()
            )));
        }
        Ok(k)
    }

    pub fn normalized(&self) -> Result<PureState> {
        let n = self.amps.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(PureState(Ket { sig: self.sig.clone(), amps: &self.amps / c(n, 0.0) }))
    }

    /// `tr_{rest} |self><self|` without normalization.
    pub fn reduced<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityOperator> {
        let (m, row_sig, _) = self.as_matrix(keep)?;
        Ok(DensityOperator { sig: row_sig, matrix: &m * m.adjoint() })
    }

    pub fn max_abs_diff(&self, other: &Ket) -> Result<f64> {
        let o = other.aligned_to(&self.sig)?;
        Ok((&self.amps - &o.amps).iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

/// A normalized labeled state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TensorJson", try_from = "TensorJson")]
pub struct PureState(Ket);

impl PureState {
    pub fn new(sig: Signature, amps: DVector<C64>) -> Result<Self> {
        Self::from_ket(Ket::new(sig, amps)?)
    }

    /// Wraps `ket` after checking it is normalized within `TOL_NORM`.
    pub fn from_ket(ket: Ket) -> Result<Self> {
        let n = ket.norm_sqr();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        if (n - 1.0).abs() > TOL_NORM {
            return Err(Error::NotNormalized(n));
        }
        Ok(PureState(ket))
    }

    pub fn basis(sig: Signature, index: &[usize]) -> Result<Self> {
        Ok(PureState(Ket::basis(sig, index)?))
    }

    pub fn as_ket(&self) -> &Ket {
        &self.0
    }

    pub fn into_ket(self) -> Ket {
        self.0
    }

    pub fn reordered<S: AsRef<str>>(&self, labels: &[S]) -> Result<PureState> {
        Ok(PureState(self.0.reordered(labels)?))
    }

    pub fn relabeled(&self, from: &str, to: &str) -> Result<PureState> {
        Ok(PureState(self.0.relabeled(from, to)?))
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        Ok(PureState(self.0.tensor(&other.0)?))
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            sig: self.sig.clone(),
            matrix: &self.amps * self.amps.adjoint(),
        }
    }

    /// Reduced density operator on `keep`.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityOperator> {
        self.0.reduced(keep)
    }
}

impl Deref for PureState {
    type Target = Ket;

    fn deref(&self) -> &Ket {
        &self.0
    }
}

impl From<PureState> for Ket {
    fn from(p: PureState) -> Ket {
        p.0
    }
}

/// A labeled density operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TensorJson", try_from = "TensorJson")]
pub struct DensityOperator {
    sig: Signature,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity within `TOL_NORM`.
    pub fn new(sig: Signature, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::unchecked(sig, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn unchecked(sig: Signature, matrix: DMatrix<C64>) -> Result<Self> {
        let n = sig.total();
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "density matrix is {:?}, signature needs {n}x{n}",
                matrix.shape()
            )));
        }
        Ok(Self { sig, matrix })
    }

    pub fn maximally_mixed(sig: Signature) -> Self {
        let n = sig.total();
        Self { sig, matrix: DMatrix::identity(n, n) / c(n as f64, 0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > TOL_NORM {
            return Err(Error::NotDensity(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = self.matrix.trace();
        if (tr - c(1.0, 0.0)).norm() > TOL_NORM {
            return Err(Error::NotDensity(format!("trace is {tr}")));
        }
        let min = super::hermitian_eigenvalues(&self.matrix).into_iter().fold(f64::INFINITY, f64::min);
        if min < -TOL_NORM {
            return Err(Error::NotDensity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn labels(&self) -> &[String] {
        self.sig.labels()
    }

    pub fn dims(&self) -> &[usize] {
        self.sig.dims()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub(crate) fn permute(&self, order: &[usize]) -> DensityOperator {
        let table = permutation_table(self.sig.dims(), order);
        let n = table.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| self.matrix[(table[i], table[j])]);
        DensityOperator { sig: self.sig.permuted(order), matrix }
    }

    pub fn reordered<S: AsRef<str>>(&self, labels: &[S]) -> Result<DensityOperator> {
        let order = self.sig.order_exact(labels)?;
        Ok(self.permute(&order))
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator {
            sig: self.sig.concat(&other.sig)?,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// Traces out every factor not listed in `keep`; the result follows the order of `keep`.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityOperator> {
        let order = self.sig.order_with_front(keep)?;
        let p = self.permute(&order);
        let keep_sig = self.sig.select(keep)?;
        let k = keep_sig.total();
        let rest = self.sig.total() / k;
        let matrix = DMatrix::from_fn(k, k, |i, j| {
            (0..rest).map(|t| p.matrix[(i * rest + t, j * rest + t)]).sum::<C64>()
        });
        Ok(DensityOperator { sig: keep_sig, matrix })
    }

    pub fn scale(&self, s: f64) -> DensityOperator {
        DensityOperator { sig: self.sig.clone(), matrix: &self.matrix * c(s, 0.0) }
    }

    /// Largest entrywise deviation from `other` after aligning factor order.
    pub fn max_abs_diff(&self, other: &DensityOperator) -> Result<f64> {
        let o = other.reordered(self.sig.labels())?;
        if o.sig != self.sig {
            return Err(Error::DimensionMismatch("density signatures differ".into()));
        }
        Ok((&self.matrix - &o.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Trace norm `||self - other||_1`.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        let o = other.reordered(self.sig.labels())?;
        if o.sig != self.sig {
            return Err(Error::DimensionMismatch("density signatures differ".into()));
        }
        let d = &self.matrix - &o.matrix;
        let h = (&d + d.adjoint()) * c(0.5, 0.0);
        Ok(super::hermitian_eigenvalues(&h).iter().map(|l| l.abs()).sum())
    }
}

/// Wire form shared by states and density operators: row-major `re`/`im` arrays.
#[derive(Serialize, Deserialize)]
struct TensorJson {
    dims: Vec<usize>,
    labels: Vec<String>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TensorJson {
    fn from_entries<'a>(sig: &Signature, entries: impl Iterator<Item = &'a C64>) -> Self {
        let (re, im) = entries.map(|z| (z.re, z.im)).unzip();
        TensorJson { dims: sig.dims().to_vec(), labels: sig.labels().to_vec(), re, im }
    }

    fn entries(&self) -> Result<(Signature, Vec<C64>)> {
        if self.re.len() != self.im.len() {
            return Err(Error::DimensionMismatch("re and im lengths differ".into()));
        }
        let sig = Signature::from_parts(self.labels.clone(), self.dims.clone())?;
        Ok((sig, self.re.iter().zip(&self.im).map(|(&r, &i)| c(r, i)).collect()))
    }
}

impl From<Ket> for TensorJson {
    fn from(k: Ket) -> Self {
        TensorJson::from_entries(&k.sig, k.amps.iter())
    }
}

impl TryFrom<TensorJson> for Ket {
    type Error = Error;

    fn try_from(j: TensorJson) -> Result<Self> {
        let (sig, v) = j.entries()?;
        Ket::new(sig, DVector::from_vec(v))
    }
}

impl From<PureState> for TensorJson {
    fn from(p: PureState) -> Self {
        p.0.into()
    }
}

impl TryFrom<TensorJson> for PureState {
    type Error = Error;

    fn try_from(j: TensorJson) -> Result<Self> {
        PureState::from_ket(Ket::try_from(j)?)
    }
}

impl From<DensityOperator> for TensorJson {
    fn from(d: DensityOperator) -> Self {
        let n = d.sig.total();
        let rows: Vec<C64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| d.matrix[(i, j)]).collect();
        TensorJson::from_entries(&d.sig, rows.iter())
    }
}

impl TryFrom<TensorJson> for DensityOperator {
    type Error = Error;

    fn try_from(j: TensorJson) -> Result<Self> {
        let (sig, v) = j.entries()?;
        let n = sig.total();
        if v.len() != n * n {
            return Err(Error::DimensionMismatch("density entries".into()));
        }
        DensityOperator::new(sig, DMatrix::from_row_slice(n, n, &v))
    }
}
