use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify, build::initial_state, Direction, Protocol, Step};
use crate::error::{Error, Result};
use crate::linalg::{fidelity_sq, DensityOperator, Ket, PureState, Signature};
use crate::measure::PROB_FLOOR;
use crate::states::{MergeInstance, R};

/// A leaf of the branch tree: the unnormalized final vector and, when the last
/// step is a correction, the vector it was applied to.
pub(crate) struct Leaf {
    pub transcript: Vec<usize>,
    pub ket: Ket,
    pub before_last: Option<Ket>,
}

pub(crate) struct Enumeration {
    pub leaves: Vec<Leaf>,
    pub pruned_prob: f64,
}

/// Depth-first enumeration of every transcript whose probability clears
/// [`PROB_FLOOR`]; leaves come back in lexicographic transcript order.
pub(crate) fn enumerate(steps: &[Step], initial: Ket) -> Result<Enumeration> {
    let (leaves, pruned_prob) = walk(steps, 0, initial, Vec::new(), None)?;
    Ok(Enumeration { leaves, pruned_prob })
}

fn walk(
    steps: &[Step],
    idx: usize,
    ket: Ket,
    transcript: Vec<usize>,
    before_last: Option<Ket>,
) -> Result<(Vec<Leaf>, f64)> {
    let Some(step) = steps.get(idx) else {
        return Ok((vec![Leaf { transcript, ket, before_last }], 0.0));
    };
    match step {
        Step::Message { .. } => walk(steps, idx + 1, ket, transcript, before_last),
        Step::Correct { op, .. } => {
            let o = op.resolve(&transcript)?;
            let next = ket.apply(&o.map, &o.acts_on, &o.outputs)?;
            let keep = (idx + 1 == steps.len()).then(|| ket.clone()).or(before_last);
            walk(steps, idx + 1, next, transcript, keep)
        }
        Step::Measure { family, .. } => {
            let fam = family.resolve(&transcript)?;
            let parts = (0..fam.len())
                .into_par_iter()
                .map(|k| {
                    let branch = fam.branch(k, &ket)?;
                    let p = branch.norm_sqr();
                    if p <= PROB_FLOOR {
                        return Ok((Vec::new(), p));
                    }
                    let mut t = transcript.clone();
                    t.push(k);
                    walk(steps, idx + 1, branch, t, before_last.clone())
                })
                .collect::<Result<Vec<_>>>()?;
            let mut leaves = Vec::new();
            let mut pruned = 0.0;
            for (l, p) in parts {
                leaves.extend(l);
                pruned += p;
            }
            Ok((leaves, pruned))
        }
    }
}

/// Fidelity of a normalized final state with `target` and the purity of its
/// reduction to the target registers. Target registers the state lacks are
/// taken to be in `|0>`; registers outside the target are traced out.
pub(crate) fn score(state: &PureState, target: &PureState) -> Result<(f64, f64)> {
    let mut ket = state.as_ket().clone();
    for (l, &d) in target.labels().iter().zip(target.dims()) {
        if !ket.signature().contains(l) {
            ket = ket.tensor(&Ket::basis(Signature::new([(l.as_str(), d)])?, &[0])?)?;
        }
    }
    let full = PureState::from_ket(ket)?;
    if full.labels().len() == target.labels().len() {
        return Ok((fidelity_sq(&full, target)?, 1.0));
    }
    let rho = full.partial_trace(target.labels())?;
    Ok((fidelity_sq(&rho, target)?, rho.purity()))
}

/// Max entrywise distance of the reference reduction from `I/d`.
pub(crate) fn reference_deviation(state: &PureState) -> Result<Option<f64>> {
    if !state.signature().contains(R) {
        return Ok(None);
    }
    let rho = state.partial_trace(&[R])?;
    let mixed = DensityOperator::maximally_mixed(rho.signature().clone());
    Ok(Some(rho.max_abs_diff(&mixed)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Branch {
    pub transcript: Vec<usize>,
    pub probability: f64,
    pub fidelity_sq: f64,
    /// Purity of the final state restricted to the target registers.
    pub purity: f64,
    /// Distance of the reference reduction from maximally mixed just before
    /// the final correction, when the protocol ends with one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference_deviation: Option<f64>,
    #[serde(skip)]
    pub final_state: Option<PureState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub protocol: String,
    pub resource_k: usize,
    pub cost_bits: f64,
    pub direction: Direction,
    pub branch_count: usize,
    pub total_prob: f64,
    pub pruned_prob: f64,
    pub min_fidelity_sq: f64,
    pub avg_fidelity_sq: f64,
    pub epsilon_achieved: f64,
    pub min_purity: f64,
    pub max_reference_deviation: Option<f64>,
    pub branches: Vec<Branch>,
}

/// Runs `p` on the instance's `|ψ>^{RAB}` (with the resource attached) and
/// scores every branch against `|ψ>^{RB'B}`.
pub fn simulate(p: &Protocol, instance: &MergeInstance) -> Result<RunReport> {
    p.validate()?;
    let initial = initial_state(p, instance.psi.as_ket())?;
    if initial.signature() != &p.initial_layout {
        return Err(Error::DimensionMismatch(format!(
            "protocol expects {:?} {:?}, instance provides {:?} {:?}",
            p.initial_layout.labels(),
            p.initial_layout.dims(),
            initial.labels(),
            initial.dims()
        )));
    }
    let target = instance.target()?.reordered(&p.target_labels)?;
    simulate_from(p, initial, &target)
}

/// Runs `p` on an explicit initial vector and scores against `target`.
pub fn simulate_from(p: &Protocol, initial: Ket, target: &PureState) -> Result<RunReport> {
    let en = enumerate(&p.steps, initial)?;
    let branches = en
        .leaves
        .into_par_iter()
        .map(|leaf| {
            let probability = leaf.ket.norm_sqr();
            let state = leaf.ket.normalized()?;
            let (fidelity_sq, purity) = score(&state, target)?;
            let reference_deviation = match &leaf.before_last {
                Some(k) => reference_deviation(&k.normalized()?)?,
                None => None,
            };
            Ok(Branch {
                transcript: leaf.transcript,
                probability,
                fidelity_sq,
                purity,
                reference_deviation,
                final_state: Some(state),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_prob: f64 = branches.iter().map(|b| b.probability).sum();
    let min_fidelity_sq = branches.iter().map(|b| b.fidelity_sq).fold(1.0, f64::min);
    let avg_fidelity_sq = branches.iter().map(|b| b.probability * b.fidelity_sq).sum();
    let min_purity = branches.iter().map(|b| b.purity).fold(1.0, f64::min);
    let max_reference_deviation =
        branches.iter().filter_map(|b| b.reference_deviation).fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
    Ok(RunReport {
        protocol: p.name.clone(),
        resource_k: p.resource_k,
        cost_bits: p.cost_bits(),
        direction: classify(p),
        branch_count: branches.len(),
        total_prob,
        pruned_prob: en.pruned_prob,
        min_fidelity_sq,
        avg_fidelity_sq,
        epsilon_achieved: (1.0 - min_fidelity_sq).max(0.0).sqrt(),
        min_purity,
        max_reference_deviation,
        branches,
    })
}
