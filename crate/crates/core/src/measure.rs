//! Kraus measurements and the explicit families used by the two-way protocol.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cis, direct_sum_embed, Ket, LinearMap, PureState, C64};
use crate::states::{pauli_x, GammaParams, A, B, LOCAL_DIM};

/// Completeness tolerance for `Σ M^dag M = I`.
pub const TOL_COMPLETE: f64 = 1e-10;
/// Branches with probability below this are kept in the books but not renormalized.
pub const PROB_FLOOR: f64 = 1e-14;

/// An ordered list of Kraus operators acting on the factors `acts_on` and
/// producing the factors `outputs` (empty when the measured system is consumed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KrausFamily {
    acts_on: Vec<String>,
    outputs: Vec<String>,
    operators: Vec<LinearMap>,
    outcome_labels: Vec<usize>,
}

impl KrausFamily {
    pub fn new<S: Into<String>, T: Into<String>>(
        operators: Vec<LinearMap>,
        acts_on: impl IntoIterator<Item = S>,
        outputs: impl IntoIterator<Item = T>,
    ) -> Result<Self> {
        let acts_on: Vec<String> = acts_on.into_iter().map(Into::into).collect();
        let outputs: Vec<String> = outputs.into_iter().map(Into::into).collect();
        let first = operators
            .first()
            .ok_or_else(|| Error::Invalid("a Kraus family needs at least one operator".into()))?;
        for op in &operators {
            if op.domain() != first.domain() || op.codomain() != first.codomain() {
                return Err(Error::DimensionMismatch("Kraus operators have different shapes".into()));
            }
        }
        if first.domain().len() != acts_on.len() || first.codomain().len() != outputs.len() {
            return Err(Error::DimensionMismatch(format!(
                "operators map {:?} -> {:?} but labels are {:?} -> {:?}",
                first.domain(),
                first.codomain(),
                acts_on,
                outputs
            )));
        }
        let outcome_labels = (0..operators.len()).collect();
        Ok(KrausFamily { acts_on, outputs, operators, outcome_labels })
    }

    /// Rank-one family `{<v_k|}` consuming the single factor `on`.
    pub fn from_bras(vectors: &[DVector<C64>], on: &str) -> Result<Self> {
        KrausFamily::new(vectors.iter().map(LinearMap::bra).collect(), [on], Vec::<String>::new())
    }

    pub fn operators(&self) -> &[LinearMap] {
        &self.operators
    }

    pub fn acts_on(&self) -> &[String] {
        &self.acts_on
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn outcome_labels(&self) -> &[usize] {
        &self.outcome_labels
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// `max |Σ M^dag M - I|` entrywise.
    pub fn completeness_residual(&self) -> f64 {
        let n = self.operators[0].matrix().ncols();
        let mut acc = DMatrix::<C64>::zeros(n, n);
        for m in &self.operators {
            acc += m.matrix().adjoint() * m.matrix();
        }
        (acc - DMatrix::<C64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_complete(&self) -> (bool, f64) {
        let r = self.completeness_residual();
        (r <= TOL_COMPLETE, r)
    }

    /// `(M_k ⊗ I)|state>` without renormalization.
    pub fn branch(&self, k: usize, state: &Ket) -> Result<Ket> {
        let op = self
            .operators
            .get(k)
            .ok_or(Error::InvalidOutcome { outcome: k, count: self.operators.len() })?;
        state.apply(op, &self.acts_on, &self.outputs)
    }

    /// Born-rule probability of outcome `k` and the renormalized post-state, if
    /// the probability clears [`PROB_FLOOR`].
    pub fn apply(&self, k: usize, state: &PureState) -> Result<(f64, Option<PureState>)> {
        let b = self.branch(k, state)?;
        let p = b.norm_sqr();
        if p > PROB_FLOOR {
            Ok((p, Some(b.normalized()?)))
        } else {
            Ok((p, None))
        }
    }

    /// Right-multiplies every operator by `u` (acting before the measurement).
    pub fn precompose(&self, u: &LinearMap) -> Result<KrausFamily> {
        let ops = self.operators.iter().map(|m| m.compose(u)).collect::<Result<Vec<_>>>()?;
        KrausFamily::new(ops, self.acts_on.clone(), self.outputs.clone())
    }
}

/// B's three-outcome measurement on `C^2 ⊕ C^9`: a uniform split of the qubit
/// block and projectors onto `{3j, 3j+1, 3j+2}` of the nine-dimensional block.
pub fn build_b_measurement() -> Result<KrausFamily> {
    let w = c((1.0f64 / 3.0).sqrt(), 0.0);
    let ops = (0..3)
        .map(|j| {
            let mut m = DMatrix::<C64>::zeros(LOCAL_DIM, LOCAL_DIM);
            m[(0, 0)] = w;
            m[(1, 1)] = w;
            for i in 3 * j..3 * j + 3 {
                m[(2 + i, 2 + i)] = c(1.0, 0.0);
            }
            LinearMap::operator(m)
        })
        .collect::<Result<Vec<_>>>()?;
    KrausFamily::new(ops, [B], [B])
}

/// Index triples of the nine-dimensional block carrying the Fourier vectors.
pub const FOURIER_TRIPLES: [[usize; 3]; 3] = [[0, 4, 8], [1, 5, 6], [2, 3, 7]];

/// `ω_n^{(t)} = 3^{-1/2} Σ_m exp(2πi nm/3) |t_m>` for each triple `t` and
/// `n ∈ {0,1,2}`, triple-major.
pub fn fourier_vectors() -> Vec<DVector<C64>> {
    let amp = 1.0 / 3f64.sqrt();
    let mut out = Vec::with_capacity(9);
    for triple in FOURIER_TRIPLES {
        for n in 0..3 {
            let mut v = DVector::zeros(9);
            for (m, &idx) in triple.iter().enumerate() {
                v[idx] = cis(2.0 * PI * (n * m) as f64 / 3.0) * amp;
            }
            out.push(v);
        }
    }
    out
}

/// The 33 vectors `φ_{k|0} ∈ C^2 ⊕ C^9`; A's outcome `k` is the bra `<φ_{k|0}|`.
pub fn a_measurement_vectors(g: &GammaParams) -> Result<Vec<DVector<C64>>> {
    g.validate().map_err(Error::InvalidGammas)?;
    let tail = -g.gamma2.conj();
    let w2 = (3.0f64 / 36.0).sqrt();
    let w9 = (1.0f64 / 36.0).sqrt();
    let mut out = Vec::with_capacity(33);
    // triple (x, y, z) of the nine-dimensional block, one group of eight per j-block
    for (x, y, z) in [(0, 4, 6), (1, 5, 7), (2, 3, 8)] {
        for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            for sign in [1.0, -1.0] {
                let mut v2 = DVector::zeros(2);
                v2[if sx > 0.0 { 0 } else { 1 }] = c(sign * w2, 0.0);
                let mut v9 = DVector::zeros(9);
                v9[x] = c(sx * w9, 0.0);
                v9[y] = c(sy * w9, 0.0);
                v9[z] = tail * w9;
                out.push(direct_sum_embed(&v2, &v9)?);
            }
        }
    }
    let w = (28.0f64 / 36.0).sqrt();
    for omega in fourier_vectors() {
        out.push(direct_sum_embed(&DVector::zeros(2), &(omega * c(w, 0.0)))?);
    }
    Ok(out)
}

/// `1 ⊕ X_9^{-3j}`, the shift that conditions A's measurement on B's outcome.
pub fn conditioning_shift(j: usize) -> Result<LinearMap> {
    let shift = (9 - (3 * j) % 9) % 9;
    Ok(LinearMap::identity(2).direct_sum(&pauli_x(9).pow(shift as u32)?))
}

/// A's 33-outcome measurement after B reported `j`; A's system is consumed.
pub fn build_a_measurement(j: usize, g: &GammaParams) -> Result<KrausFamily> {
    if j >= 3 {
        return Err(Error::InvalidOutcome { outcome: j, count: 3 });
    }
    let base = KrausFamily::from_bras(&a_measurement_vectors(g)?, A)?;
    if j == 0 {
        Ok(base)
    } else {
        base.precompose(&conditioning_shift(j)?)
    }
}
