//! Block decomposition of `|ψ>^{RAB}` into flagged pieces, each of which keeps
//! the full correlation with `R`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, Ket, LinearMap, PureState, Signature, C64, TOL_NORM};
use crate::states::{GammaParams, A, B, R};

/// A's flag register.
pub const A_FLAG: &str = "a0";
/// A's block-local register correlated with `R`.
pub const A_REST: &str = "aR";
/// B's flag register.
pub const B_FLAG: &str = "b0";
/// B's block-local register correlated with `R`.
pub const B_REST: &str = "bR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KIBlock {
    pub prob: f64,
    /// Redundant part shared by A and B; one-dimensional for every block built here.
    pub omega: PureState,
    /// Part carrying the correlation with `R`, on `R ⊗ aR ⊗ bR`.
    pub phi: PureState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KIDecomposition {
    pub blocks: Vec<KIBlock>,
    /// `U^A: A → a0 ⊗ aR`.
    pub embed_a: LinearMap,
    /// `U^B: B → b0 ⊗ bR`.
    pub embed_b: LinearMap,
    pub flag_dim: usize,
}

/// Outcome of [`verify_ki`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KICheck {
    pub ok: bool,
    pub residual: f64,
    pub isometry_residual: f64,
}

fn trivial_state() -> PureState {
    PureState::new(Signature::empty(), DVector::from_element(1, c(1.0, 0.0))).expect("unit scalar")
}

/// Embedding of `C^2 ⊕ C^9` into `C^4 ⊗ C^3`: the qubit block goes to flag 0
/// (rest coordinates 0, 1); coordinate `s + 3t` of the nine-dimensional block
/// goes to flag `s + 1`, rest coordinate `t`.
pub fn block_embedding() -> LinearMap {
    let mut m = DMatrix::<C64>::zeros(12, 11);
    for i in 0..11 {
        let row = if i < 2 {
            i
        } else {
            let n = i - 2;
            (n % 3 + 1) * 3 + n / 3
        };
        m[(row, i)] = c(1.0, 0.0);
    }
    LinearMap::new(m, vec![11], vec![4, 3]).expect("shape")
}

/// The decomposition of the merge instance built from `g`: four blocks with
/// weights `2/11, 3/11, 3/11, 3/11`, rest registers padded to dimension 3.
pub fn build_ki_psi(g: &GammaParams) -> Result<KIDecomposition> {
    g.validate().map_err(Error::InvalidGammas)?;
    let sig = Signature::new([(R, 3), (A_REST, 3), (B_REST, 3)])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s3 = 1.0 / 3f64.sqrt();
    // two-qubit states (1, X ⊗ 1, Z ⊗ 1)|Φ_2> with phases 1, γ1, γ2 in the 3 ⊗ 3 padding
    let qubit_terms: [Vec<(usize, usize, C64)>; 3] = [
        vec![(0, 0, c(h, 0.0)), (1, 1, c(h, 0.0))],
        vec![(1, 0, g.gamma1 * h), (0, 1, g.gamma1 * h)],
        vec![(0, 0, g.gamma2 * h), (1, 1, -g.gamma2 * h)],
    ];
    let mut v0 = DVector::<C64>::zeros(27);
    for (l, terms) in qubit_terms.iter().enumerate() {
        for &(a, b, amp) in terms {
            v0[l * 9 + a * 3 + b] += amp * s3;
        }
    }
    let mut v1 = DVector::<C64>::zeros(27);
    for l in 0..3 {
        for m in 0..3 {
            v1[l * 9 + ((l + m) % 3) * 3 + m] = c(1.0 / 3.0, 0.0);
        }
    }
    let phi0 = PureState::new(sig.clone(), v0)?;
    let phi1 = PureState::new(sig, v1)?;
    let mut blocks = vec![KIBlock { prob: 2.0 / 11.0, omega: trivial_state(), phi: phi0 }];
    for _ in 1..4 {
        blocks.push(KIBlock { prob: 3.0 / 11.0, omega: trivial_state(), phi: phi1.clone() });
    }
    let e = block_embedding();
    Ok(KIDecomposition { blocks, embed_a: e.clone(), embed_b: e, flag_dim: 4 })
}

impl KIDecomposition {
    /// `Σ_j √p(j) |j>^{a0} |j>^{b0} |ω_j> |φ_j>`.
    pub fn reconstruct(&self) -> Result<Ket> {
        let flags_a = Signature::new([(A_FLAG, self.flag_dim)])?;
        let flags_b = Signature::new([(B_FLAG, self.flag_dim)])?;
        let mut acc: Option<Ket> = None;
        for (j, blk) in self.blocks.iter().enumerate() {
            let term = Ket::basis(flags_a.clone(), &[j])?
                .tensor(&Ket::basis(flags_b.clone(), &[j])?)?
                .tensor(&blk.omega)?
                .tensor(&blk.phi)?
                .scale(c(blk.prob.max(0.0).sqrt(), 0.0));
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term)?,
            });
        }
        acc.ok_or_else(|| Error::Invalid("decomposition has no blocks".into()))
    }
}

/// Compares `(U^A ⊗ U^B)|ψ>` against the block form; also checks that the
/// embeddings are isometries and that the weights sum to one.
pub fn verify_ki(psi: &PureState, ki: &KIDecomposition) -> Result<KICheck> {
    let mapped = psi.apply(&ki.embed_a, &[A], &[A_FLAG, A_REST])?.apply(&ki.embed_b, &[B], &[B_FLAG, B_REST])?;
    let rebuilt = ki.reconstruct()?;
    let residual = rebuilt.max_abs_diff(&mapped)?;
    let isometry_residual = ki.embed_a.isometry_residual().max(ki.embed_b.isometry_residual());
    let weight: f64 = ki.blocks.iter().map(|b| b.prob).sum();
    let ok = residual <= TOL_NORM && isometry_residual <= TOL_NORM && (weight - 1.0).abs() <= TOL_NORM;
    Ok(KICheck { ok, residual, isometry_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DensityOperator;
    use crate::states::build_instance;

    #[test]
    fn shipped_decomposition_verifies() {
        let g = GammaParams::default();
        let ki = build_ki_psi(&g).unwrap();
        let inst = build_instance(&g).unwrap();
        let chk = verify_ki(&inst.psi, &ki).unwrap();
        assert!(chk.ok, "{chk:?}");
        assert!(chk.residual <= 1e-10);
        assert!((ki.blocks[0].prob - 2.0 / 11.0).abs() < 1e-15);
        assert_eq!(ki.flag_dim, 4);
        assert_eq!(ki.blocks[0].phi.signature().dim_of(A_REST).unwrap(), 3);
        assert!(ki.blocks.iter().all(|b| b.omega.amplitudes().len() == 1));
    }

    #[test]
    fn perturbed_weight_fails() {
        let g = GammaParams::default();
        let mut ki = build_ki_psi(&g).unwrap();
        ki.blocks[0].prob += 1e-3;
        let inst = build_instance(&g).unwrap();
        assert!(!verify_ki(&inst.psi, &ki).unwrap().ok);
    }

    #[test]
    fn trivial_decomposition_of_product_state() {
        let sig = Signature::new([(R, 1), (A, 1), (B, 1)]).unwrap();
        let psi = PureState::basis(sig, &[0, 0, 0]).unwrap();
        let phi = PureState::basis(Signature::new([(R, 1), (A_REST, 1), (B_REST, 1)]).unwrap(), &[0, 0, 0]).unwrap();
        let id = LinearMap::new(DMatrix::identity(1, 1), vec![1], vec![1, 1]).unwrap();
        let ki = KIDecomposition {
            blocks: vec![KIBlock { prob: 1.0, omega: trivial_state(), phi }],
            embed_a: id.clone(),
            embed_b: id,
            flag_dim: 1,
        };
        assert!(verify_ki(&psi, &ki).unwrap().ok);
    }

    #[test]
    fn every_block_leaves_reference_maximally_mixed() {
        let ki = build_ki_psi(&GammaParams::new(crate::linalg::cis(0.7), crate::linalg::cis(2.1))).unwrap();
        let third = DensityOperator::maximally_mixed(Signature::new([(R, 3)]).unwrap());
        for blk in &ki.blocks {
            let r = blk.phi.partial_trace(&[R]).unwrap();
            assert!(r.max_abs_diff(&third).unwrap() < 1e-12);
        }
        assert!(ki.embed_a.is_isometry(1e-12) && ki.embed_b.is_isometry(1e-12));
        let inst = build_instance(&GammaParams::new(crate::linalg::cis(0.7), crate::linalg::cis(2.1))).unwrap();
        assert!(verify_ki(&inst.psi, &ki).unwrap().ok);
    }

    #[test]
    fn json_mirrors_fields() {
        let ki = build_ki_psi(&GammaParams::default()).unwrap();
        let v = serde_json::to_value(&ki).unwrap();
        assert_eq!(v["flagDim"], 4);
        assert_eq!(v["blocks"].as_array().unwrap().len(), 4);
        assert!(v["embedA"]["re"].is_array());
    }
}
