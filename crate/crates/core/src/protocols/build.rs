use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::engine::enumerate;
use super::{Keyed, LocalOp, Party, Protocol, Step};
use crate::correction::{optimal_recovery_fidelity, solve_exact_correction_with, Completion};
use crate::error::{Error, Result};
use crate::koashi_imoto::{build_ki_psi, A_FLAG, A_REST, B_FLAG, B_REST};
use crate::linalg::{c, cis, Ket, PureState, Signature, C64};
use crate::measure::{build_a_measurement, build_b_measurement, KrausFamily};
use crate::states::{build_instance, phi_k, GammaParams, MergeInstance, A, A_BAR, B, B_BAR, B_PRIME, R};

/// `|Φ_K>` shared on the resource registers.
pub fn resource_state(k: usize) -> Result<PureState> {
    phi_k(k, A_BAR, B_BAR)
}

/// `input ⊗ |Φ_K>`, or `input` alone when `K = 1`.
pub fn initial_state(p: &Protocol, input: &Ket) -> Result<Ket> {
    if p.resource_k > 1 {
        input.tensor(resource_state(p.resource_k)?.as_ket())
    } else {
        Ok(input.clone())
    }
}

fn target_labels() -> Vec<String> {
    [R, B_PRIME, B].iter().map(|s| s.to_string()).collect()
}

fn owners(resource: bool) -> BTreeMap<String, Party> {
    let mut m = BTreeMap::from([(A.to_string(), Party::A), (B.to_string(), Party::B)]);
    if resource {
        m.insert(A_BAR.to_string(), Party::A);
        m.insert(B_BAR.to_string(), Party::B);
    }
    m
}

/// Appends a correction by B, keyed on every earlier outcome, solved branch by
/// branch with `solve` on the normalized pre-correction state.
fn close_with_corrections(
    mut p: Protocol,
    initial: Ket,
    target: &PureState,
    solve: impl Fn(&[usize], &PureState, &PureState) -> Result<LocalOp>,
) -> Result<Protocol> {
    let measured = p.steps.iter().filter(|s| matches!(s, Step::Measure { .. })).count();
    let en = enumerate(&p.steps, initial)?;
    let mut table = BTreeMap::new();
    for leaf in en.leaves {
        let post = leaf.ket.normalized()?;
        let op = solve(&leaf.transcript, &post, target)?;
        table.insert(leaf.transcript, op);
    }
    p.steps.push(Step::Correct { party: Party::B, op: Keyed::by_transcript((0..measured).collect(), table) });
    Ok(p)
}

fn exact_solver(order: Completion) -> impl Fn(&[usize], &PureState, &PureState) -> Result<LocalOp> {
    move |transcript, post, target| {
        let res = solve_exact_correction_with(post, target, order)?
            .filter(|r| r.achieved_fidelity_sq >= 1.0 - 1e-9)
            .ok_or_else(|| Error::NoExactCorrection(transcript.to_vec()))?;
        LocalOp::new(res.isometry, res.input_labels, res.output_labels)
    }
}

pub fn build_two_way(g: &GammaParams) -> Result<Protocol> {
    build_two_way_with(g, Completion::Canonical)
}

/// B measures `{M_j}`, tells A; A measures `{M_{k|j}}`, tells B; B corrects by
/// an isometry depending on `(j, k)`. No entanglement is consumed.
pub fn build_two_way_with(g: &GammaParams, order: Completion) -> Result<Protocol> {
    let inst = build_instance(g)?;
    let a_families = (0..3).map(|j| Ok((vec![j], build_a_measurement(j, g)?))).collect::<Result<BTreeMap<_, _>>>()?;
    let p = Protocol {
        name: "two-way".into(),
        resource_k: 1,
        initial_layout: inst.psi.signature().clone(),
        owners: owners(false),
        steps: vec![
            Step::Measure { party: Party::B, family: Keyed::fixed(build_b_measurement()?) },
            Step::Message { from: Party::B, to: Party::A },
            Step::Measure { party: Party::A, family: Keyed::by_transcript(vec![0], a_families) },
            Step::Message { from: Party::A, to: Party::B },
        ],
        target_labels: target_labels(),
    };
    let target = inst.target()?;
    close_with_corrections(p, inst.psi.as_ket().clone(), &target, exact_solver(order))
}

/// Bell vectors `(1/√2) Σ_a (-1)^{za} |a, a⊕x>` on the qubit corner of
/// `aR ⊗ Abar`, indexed `2x + z`, followed by `|2, 0>` and `|2, 1>`.
fn flag_zero_vectors() -> Vec<DVector<C64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(6);
    for x in 0..2 {
        for z in 0..2 {
            let mut v = DVector::zeros(6);
            for a in 0..2usize {
                let sign = if z * a == 1 { -1.0 } else { 1.0 };
                v[a * 2 + (a ^ x)] = c(sign * h, 0.0);
            }
            out.push(v);
        }
    }
    for b in 0..2 {
        let mut v = DVector::zeros(6);
        v[4 + b] = c(1.0, 0.0);
        out.push(v);
    }
    out
}

/// A's flag-controlled measurement on `a0 ⊗ aR ⊗ Abar`, keeping the flag:
/// flag 0 selects the Bell-type basis, flags 1–3 the computational basis of
/// `aR ⊗ Abar`. Six outcomes for every flag.
pub fn flag_measurement(flag_dim: usize, rest_dim: usize) -> Result<KrausFamily> {
    let inner = rest_dim * 2;
    if inner != 6 {
        return Err(Error::DimensionMismatch(format!("rest register of dimension {rest_dim}, expected 3")));
    }
    let bell = flag_zero_vectors();
    let ops = (0..inner)
        .map(|o| {
            let mut m = DMatrix::<C64>::zeros(flag_dim, flag_dim * inner);
            for f in 0..flag_dim {
                for i in 0..inner {
                    let coeff = if f == 0 { bell[o][i] } else if i == o { c(1.0, 0.0) } else { c(0.0, 0.0) };
                    m[(f, f * inner + i)] = coeff.conj();
                }
            }
            crate::linalg::LinearMap::new(m, vec![flag_dim, rest_dim, 2], vec![flag_dim])
        })
        .collect::<Result<Vec<_>>>()?;
    KrausFamily::new(ops, [A_FLAG, A_REST, A_BAR], [A_FLAG])
}

/// Fourier-basis measurement consuming the flag register.
pub fn flag_fourier_measurement(flag_dim: usize) -> Result<KrausFamily> {
    let amp = 1.0 / (flag_dim as f64).sqrt();
    let vecs: Vec<DVector<C64>> = (0..flag_dim)
        .map(|n| DVector::from_fn(flag_dim, |j, _| cis(2.0 * PI * (n * j) as f64 / flag_dim as f64) * amp))
        .collect();
    KrausFamily::from_bras(&vecs, A_FLAG)
}

pub fn build_one_way(g: &GammaParams) -> Result<Protocol> {
    build_one_way_with(g, Completion::Canonical)
}

/// Both parties map into flag ⊗ block form; A teleports the qubit block through
/// one shared ebit while measuring the other blocks in the computational basis,
/// erases the flag by a Fourier measurement and sends everything to B, who
/// corrects. Consumes `|Φ_2>`.
pub fn build_one_way_with(g: &GammaParams, order: Completion) -> Result<Protocol> {
    let inst = build_instance(g)?;
    let ki = build_ki_psi(g)?;
    let rest_dim = ki.blocks[0].phi.signature().dim_of(A_REST)?;
    let resource = resource_state(2)?;
    let initial = inst.psi.as_ket().tensor(&resource)?;
    let p = Protocol {
        name: "one-way".into(),
        resource_k: 2,
        initial_layout: initial.signature().clone(),
        owners: owners(true),
        steps: vec![
            Step::Correct { party: Party::A, op: Keyed::fixed(LocalOp::new(ki.embed_a.clone(), [A], [A_FLAG, A_REST])?) },
            Step::Correct { party: Party::B, op: Keyed::fixed(LocalOp::new(ki.embed_b.clone(), [B], [B_FLAG, B_REST])?) },
            Step::Measure { party: Party::A, family: Keyed::fixed(flag_measurement(ki.flag_dim, rest_dim)?) },
            Step::Measure { party: Party::A, family: Keyed::fixed(flag_fourier_measurement(ki.flag_dim)?) },
            Step::Message { from: Party::A, to: Party::B },
        ],
        target_labels: target_labels(),
    };
    let target = inst.target()?;
    close_with_corrections(p, initial, &target, exact_solver(order))
}

/// A measures with the bras `<v_a|` (consuming A) and sends `a`; B applies the
/// fidelity-optimal isometry for that branch. Consumes no entanglement.
pub fn build_measure_and_decode(inst: &MergeInstance, bras: &[DVector<C64>], name: &str) -> Result<Protocol> {
    let family = KrausFamily::from_bras(bras, A)?;
    let p = Protocol {
        name: name.to_string(),
        resource_k: 1,
        initial_layout: inst.psi.signature().clone(),
        owners: owners(false),
        steps: vec![
            Step::Measure { party: Party::A, family: Keyed::fixed(family) },
            Step::Message { from: Party::A, to: Party::B },
        ],
        target_labels: target_labels(),
    };
    let target = inst.target()?;
    close_with_corrections(p, inst.psi.as_ket().clone(), &target, |_, post, target| {
        let res = optimal_recovery_fidelity(post, target)?;
        LocalOp::new(res.isometry, res.input_labels, res.output_labels)
    })
}

/// Computational-basis measurement by A followed by B's best decoder: rules out
/// candidates, which suffices to discriminate but not to merge.
pub fn build_elimination(inst: &MergeInstance) -> Result<Protocol> {
    let d = Signature::dim_of(inst.psi.signature(), A)?;
    let bras: Vec<DVector<C64>> = (0..d)
        .map(|i| DVector::from_fn(d, |r, _| if r == i { c(1.0, 0.0) } else { c(0.0, 0.0) }))
        .collect();
    build_measure_and_decode(inst, &bras, "elimination")
}
