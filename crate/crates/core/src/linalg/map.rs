use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{c, C64};
use crate::error::{Error, Result};

/// A matrix between tensor-product spaces with explicit factor dimensions.
///
/// An empty `codomain` (or `domain`) stands for the trivial one-dimensional space,
/// so rank-one bras `<phi|` are stored as `1 x d` maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MapJson", try_from = "MapJson")]
pub struct LinearMap {
    matrix: DMatrix<C64>,
    domain: Vec<usize>,
    codomain: Vec<usize>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<C64>, domain: Vec<usize>, codomain: Vec<usize>) -> Result<Self> {
        let rows: usize = codomain.iter().product();
        let cols: usize = domain.iter().product();
        if matrix.nrows() != rows || matrix.ncols() != cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but signature needs {rows}x{cols}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, domain, codomain })
    }

    /// Square operator on a single factor of dimension `matrix.nrows()`.
    pub fn operator(matrix: DMatrix<C64>) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(matrix, vec![d], vec![d])
    }

    pub fn identity(d: usize) -> Self {
        Self { matrix: DMatrix::identity(d, d), domain: vec![d], codomain: vec![d] }
    }

    /// The bra `<v|` as a map to the trivial space. Coefficients are conjugated.
    pub fn bra(v: &DVector<C64>) -> Self {
        let matrix = DMatrix::from_row_slice(1, v.len(), v.conjugate().as_slice());
        Self { matrix, domain: vec![v.len()], codomain: vec![] }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn domain(&self) -> &[usize] {
        &self.domain
    }

    pub fn codomain(&self) -> &[usize] {
        &self.codomain
    }

    pub fn with_dims(mut self, domain: Vec<usize>, codomain: Vec<usize>) -> Result<Self> {
        let m = std::mem::replace(&mut self.matrix, DMatrix::zeros(0, 0));
        Self::new(m, domain, codomain)
    }

    pub fn adjoint(&self) -> LinearMap {
        LinearMap {
            matrix: self.matrix.adjoint(),
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
        }
    }

    /// `self * other`, i.e. `other` acts first.
    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap> {
        if self.matrix.ncols() != other.matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}x{} after {}x{}",
                self.matrix.nrows(),
                self.matrix.ncols(),
                other.matrix.nrows(),
                other.matrix.ncols()
            )));
        }
        LinearMap::new(&self.matrix * &other.matrix, other.domain.clone(), self.codomain.clone())
    }

    pub fn scale(&self, s: C64) -> LinearMap {
        LinearMap { matrix: &self.matrix * s, ..self.clone() }
    }

    pub fn apply_vec(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} into map with {} columns",
                v.len(),
                self.matrix.ncols()
            )));
        }
        Ok(&self.matrix * v)
    }

    /// `max |V^dag V - I|` entrywise.
    pub fn isometry_residual(&self) -> f64 {
        let n = self.matrix.ncols();
        let g = self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(n, n);
        g.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_isometry(&self, tol: f64) -> bool {
        self.isometry_residual() <= tol
    }

    /// Block-diagonal direct sum `self ⊕ other` on single-factor spaces.
    pub fn direct_sum(&self, other: &LinearMap) -> LinearMap {
        let (r1, c1) = self.matrix.shape();
        let (r2, c2) = other.matrix.shape();
        let mut m = DMatrix::zeros(r1 + r2, c1 + c2);
        m.view_mut((0, 0), (r1, c1)).copy_from(&self.matrix);
        m.view_mut((r1, c1), (r2, c2)).copy_from(&other.matrix);
        LinearMap { matrix: m, domain: vec![c1 + c2], codomain: vec![r1 + r2] }
    }

    pub fn pow(&self, n: u32) -> Result<LinearMap> {
        if self.matrix.nrows() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch("power of a non-square map".into()));
        }
        let mut acc = LinearMap {
            matrix: DMatrix::identity(self.matrix.nrows(), self.matrix.ncols()),
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
        };
        for _ in 0..n {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }

    pub fn max_abs_diff(&self, other: &LinearMap) -> f64 {
        if self.matrix.shape() != other.matrix.shape() {
            return f64::INFINITY;
        }
        (&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct MapJson {
    domain_dims: Vec<usize>,
    codomain_dims: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<LinearMap> for MapJson {
    fn from(m: LinearMap) -> Self {
        let (rows, cols) = m.matrix.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m.matrix[(i, j)].re);
                im.push(m.matrix[(i, j)].im);
            }
        }
        MapJson { domain_dims: m.domain, codomain_dims: m.codomain, re, im }
    }
}

impl TryFrom<MapJson> for LinearMap {
    type Error = Error;

    fn try_from(j: MapJson) -> Result<Self> {
        let rows: usize = j.codomain_dims.iter().product();
        let cols: usize = j.domain_dims.iter().product();
        if j.re.len() != rows * cols || j.im.len() != rows * cols {
            return Err(Error::DimensionMismatch("re/im length does not match dims".into()));
        }
        let matrix = DMatrix::from_fn(rows, cols, |i, k| c(j.re[i * cols + k], j.im[i * cols + k]));
        LinearMap::new(matrix, j.domain_dims, j.codomain_dims)
    }
}
