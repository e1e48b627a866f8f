//! The concrete objects being merged: generalized Paulis, maximally entangled
//! states, the three-state family on `C^11 ⊗ C^11` and the tripartite state
//! purifying it with a reference `R`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cis, Ket, LinearMap, PureState, Signature, C64, TOL_NORM};

pub const R: &str = "R";
pub const A: &str = "A";
pub const B: &str = "B";
/// B's register that receives A's share.
pub const B_PRIME: &str = "B'";
/// A's half of the shared maximally entangled resource.
pub const A_BAR: &str = "Abar";
/// B's half of the shared maximally entangled resource.
pub const B_BAR: &str = "Bbar";

/// Dimension of each local system of the family.
pub const LOCAL_DIM: usize = 11;
/// Number of mutually orthogonal states in the family.
pub const FAMILY_SIZE: usize = 3;

/// Shift `X_k |l> = |l+1 mod k>`.
pub fn pauli_x(k: usize) -> LinearMap {
    let m = DMatrix::from_fn(k, k, |i, j| if i == (j + 1) % k { c(1.0, 0.0) } else { c(0.0, 0.0) });
    LinearMap::operator(m).expect("square")
}

/// Clock `Z_k |l> = exp(i 2π l / k) |l>`.
pub fn pauli_z(k: usize) -> LinearMap {
    let diag = DVector::from_fn(k, |l, _| cis(2.0 * PI * l as f64 / k as f64));
    LinearMap::operator(DMatrix::from_diagonal(&diag)).expect("square")
}

/// `|Φ_K> = K^{-1/2} Σ_l |l>|l>` on the factors `left`, `right`.
pub fn phi_k(k: usize, left: &str, right: &str) -> Result<PureState> {
    if k == 0 {
        return Err(Error::Invalid("Schmidt rank must be positive".into()));
    }
    let sig = Signature::new([(left, k), (right, k)])?;
    let amp = c(1.0 / (k as f64).sqrt(), 0.0);
    let v = DVector::from_fn(k * k, |i, _| if i / k == i % k { amp } else { c(0.0, 0.0) });
    PureState::new(sig, v)
}

/// The two phases entering the family. Both must be nonreal with unit modulus,
/// and `gamma2 != ±i gamma1^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub gamma1: C64,
    pub gamma2: C64,
}

impl Default for GammaParams {
    fn default() -> Self {
        let g = cis(PI / 4.0);
        GammaParams { gamma1: g, gamma2: g }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GammaViolation {
    NotUnitModulus { which: u8, modulus: f64 },
    Nonreal { which: u8 },
    ForbiddenRelation { sign: i8 },
}

impl fmt::Display for GammaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaViolation::NotUnitModulus { which, modulus } => {
                write!(f, "gamma{which} must have unit modulus (|gamma{which}| = {modulus})")
            }
            GammaViolation::Nonreal { which } => write!(f, "gamma{which} must be nonreal"),
            GammaViolation::ForbiddenRelation { sign } => {
                let s = if *sign > 0 { '+' } else { '-' };
                write!(f, "gamma2 must differ from {s}i*gamma1^2")
            }
        }
    }
}

impl GammaParams {
    pub fn new(gamma1: C64, gamma2: C64) -> Self {
        GammaParams { gamma1, gamma2 }
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<GammaViolation>> {
        validate_gammas(self)
    }

    fn ensure_valid(&self) -> Result<()> {
        self.validate().map_err(Error::InvalidGammas)
    }
}

/// Checks every constraint and reports all violations at once.
pub fn validate_gammas(g: &GammaParams) -> std::result::Result<(), Vec<GammaViolation>> {
    let mut out = Vec::new();
    for (which, gamma) in [(1u8, g.gamma1), (2u8, g.gamma2)] {
        if (gamma.norm() - 1.0).abs() > TOL_NORM {
            out.push(GammaViolation::NotUnitModulus { which, modulus: gamma.norm() });
        }
        if gamma.im.abs() <= TOL_NORM {
            out.push(GammaViolation::Nonreal { which });
        }
    }
    let i_g1_sq = c(0.0, 1.0) * g.gamma1 * g.gamma1;
    if (g.gamma2 - i_g1_sq).norm() <= TOL_NORM {
        out.push(GammaViolation::ForbiddenRelation { sign: 1 });
    }
    if (g.gamma2 + i_g1_sq).norm() <= TOL_NORM {
        out.push(GammaViolation::ForbiddenRelation { sign: -1 });
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Coefficient matrix (rows A, columns B) of `(O2 ⊗ 1)|Φ_2> ⊕ (O9 ⊗ 1)|Φ_9>`
/// with the block weights `sqrt(2/11)` and `sqrt(9/11)`.
fn block_state(o2: &LinearMap, o9: &LinearMap) -> Result<PureState> {
    let w2 = (2.0f64 / 11.0).sqrt() / 2f64.sqrt();
    let w9 = (9.0f64 / 11.0).sqrt() / 3.0;
    let m = o2.scale(c(w2, 0.0)).direct_sum(&o9.scale(c(w9, 0.0)));
    let n = LOCAL_DIM;
    let mat = m.matrix();
    let v = DVector::from_fn(n * n, |k, _| mat[(k / n, k % n)]);
    PureState::new(Signature::new([(A, n), (B, n)])?, v)
}

/// The three mutually orthogonal states on `A ⊗ B = C^11 ⊗ C^11`.
pub fn build_family(g: &GammaParams) -> Result<Vec<PureState>> {
    g.ensure_valid()?;
    let x9 = pauli_x(9);
    let id2 = LinearMap::identity(2);
    Ok(vec![
        block_state(&id2, &LinearMap::identity(9))?,
        block_state(&pauli_x(2).scale(g.gamma1), &x9.pow(3)?)?,
        block_state(&pauli_z(2).scale(g.gamma2), &x9.pow(6)?)?,
    ])
}

/// A family of orthonormal bipartite states together with the tripartite state
/// `D^{-1/2} Σ_l |l>_R ⊗ |ψ_l>_AB` that purifies their uniform mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeInstance {
    pub psi: PureState,
    pub family: Vec<PureState>,
    pub gammas: Option<GammaParams>,
    #[serde(rename = "D")]
    pub d: usize,
}

impl MergeInstance {
    /// Builds the purification of an orthonormal family on factors `A`, `B`.
    pub fn from_family(family: Vec<PureState>) -> Result<Self> {
        let d = family.len();
        if d == 0 {
            return Err(Error::Invalid("empty family".into()));
        }
        let sig = Signature::new([(A, family[0].signature().dim_of(A)?), (B, family[0].signature().dim_of(B)?)])?;
        let family = family
            .into_iter()
            .map(|s| s.reordered(&[A, B]))
            .collect::<Result<Vec<_>>>()?;
        for (i, a) in family.iter().enumerate() {
            if a.signature() != &sig {
                return Err(Error::DimensionMismatch("family members live on different spaces".into()));
            }
            for (j, b) in family.iter().enumerate().skip(i + 1) {
                let o = a.inner(b)?.norm();
                if o > TOL_NORM {
                    return Err(Error::Invalid(format!("family members {i} and {j} overlap by {o:.3e}")));
                }
            }
        }
        let r_sig = Signature::new([(R, d)])?;
        let mut psi = Ket::zeros(r_sig.concat(&sig)?);
        let w = c(1.0 / (d as f64).sqrt(), 0.0);
        for (l, member) in family.iter().enumerate() {
            let term = Ket::basis(r_sig.clone(), &[l])?.tensor(member)?;
            psi = psi.add(&term.scale(w))?;
        }
        Ok(MergeInstance { psi: PureState::from_ket(psi)?, family, gammas: None, d })
    }

    /// The merged state `|ψ>^{R B' B}`.
    pub fn target(&self) -> Result<PureState> {
        self.psi.relabeled(A, B_PRIME)?.reordered(&[R, B_PRIME, B])
    }

    pub fn gram(&self) -> Result<DMatrix<C64>> {
        let n = self.family.len();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = self.family[i].inner(&self.family[j])?;
            }
        }
        Ok(g)
    }

    /// `Σ_l α_l |ψ_l>^{AB}`; `alpha` must have unit norm.
    pub fn superposition(&self, alpha: &[C64]) -> Result<PureState> {
        if alpha.len() != self.family.len() {
            return Err(Error::InvalidAlpha(format!("expected {} coefficients, got {}", self.family.len(), alpha.len())));
        }
        let n: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidAlpha(format!("coefficients have squared norm {n}")));
        }
        let mut acc = Ket::zeros(self.family[0].signature().clone());
        for (a, member) in alpha.iter().zip(&self.family) {
            acc = acc.add(&member.scale(*a))?;
        }
        PureState::from_ket(acc)
    }
}

/// The tripartite state built from the γ-twisted family.
pub fn build_instance(g: &GammaParams) -> Result<MergeInstance> {
    let family = build_family(g)?;
    let mut inst = MergeInstance::from_family(family)?;
    inst.gammas = Some(*g);
    Ok(inst)
}

/// `D^{-1/2} Σ_l |l>_R |0>_A |l>_B`: A holds nothing correlated with R.
pub fn easy_instance() -> Result<MergeInstance> {
    let family = (0..FAMILY_SIZE)
        .map(|l| PureState::basis(Signature::new([(A, 2), (B, FAMILY_SIZE)])?, &[0, l]))
        .collect::<Result<Vec<_>>>()?;
    MergeInstance::from_family(family)
}

/// `{|00>, |01>, |1+>}`: locally distinguishable only by eliminating candidates.
pub fn elimination_instance() -> Result<MergeInstance> {
    let sig = Signature::new([(A, 2), (B, 2)])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = PureState::new(sig.clone(), DVector::from_vec(vec![c(0., 0.), c(0., 0.), c(h, 0.), c(h, 0.)]))?;
    MergeInstance::from_family(vec![PureState::basis(sig.clone(), &[0, 0])?, PureState::basis(sig, &[0, 1])?, plus])
}
