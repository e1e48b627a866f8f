use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::build::initial_state;
use super::engine::{enumerate, score};
use super::Protocol;
use crate::error::{Error, Result};
use crate::linalg::{PureState, C64};
use crate::states::{MergeInstance, A, B, B_PRIME};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecodeReport {
    pub min_fidelity_sq: f64,
    pub avg_fidelity_sq: f64,
    pub total_prob: f64,
}

/// Runs `p` on `Σ_l α_l |ψ_l>^{AB}` (no reference) and compares every branch
/// with `Σ_l α_l |ψ_l>^{B'B}`.
pub fn decode_superposition(p: &Protocol, inst: &MergeInstance, alpha: &[C64]) -> Result<DecodeReport> {
    p.validate()?;
    let input = inst.superposition(alpha)?;
    let target = input.relabeled(A, B_PRIME)?.reordered(&[B_PRIME, B])?;
    let en = enumerate(&p.steps, initial_state(p, input.as_ket())?)?;
    let scored = en
        .leaves
        .into_par_iter()
        .map(|leaf| Ok((leaf.ket.norm_sqr(), score(&leaf.ket.normalized()?, &target)?.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecodeReport {
        min_fidelity_sq: scored.iter().map(|s| s.1).fold(1.0, f64::min),
        avg_fidelity_sq: scored.iter().map(|s| s.0 * s.1).sum(),
        total_prob: scored.iter().map(|s| s.0).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Discrimination {
    pub input: usize,
    pub outcome: usize,
    pub probability: f64,
    /// Probabilities of each candidate followed by the complement outcome.
    pub probabilities: Vec<f64>,
}

/// Runs `p` on `|ψ_l>^{AB}` and lets B project the result onto
/// `{|ψ_m>^{B'B}}` plus the complement.
pub fn discriminate(p: &Protocol, inst: &MergeInstance, l: usize) -> Result<Discrimination> {
    p.validate()?;
    let d = inst.family.len();
    if l >= d {
        return Err(Error::InvalidOutcome { outcome: l, count: d });
    }
    let candidates = inst
        .family
        .iter()
        .map(|s| s.relabeled(A, B_PRIME)?.reordered(&[B_PRIME, B]))
        .collect::<Result<Vec<PureState>>>()?;
    let en = enumerate(&p.steps, initial_state(p, inst.family[l].as_ket())?)?;
    let per_leaf = en
        .leaves
        .into_par_iter()
        .map(|leaf| {
            let w = leaf.ket.norm_sqr();
            let s = leaf.ket.normalized()?;
            candidates.iter().map(|c| Ok(w * score(&s, c)?.0)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut probabilities = vec![0.0; d + 1];
    let mut total = 0.0;
    for row in &per_leaf {
        for (m, p) in row.iter().enumerate() {
            probabilities[m] += p;
        }
    }
    for p in &probabilities[..d] {
        total += p;
    }
    probabilities[d] = (1.0 - total).max(0.0);
    let (outcome, probability) = probabilities
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::MIN), |best, (m, p)| if p > best.1 { (m, p) } else { best });
    Ok(Discrimination { input: l, outcome, probability, probabilities })
}
