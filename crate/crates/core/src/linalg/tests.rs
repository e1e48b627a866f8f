use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn sig(parts: &[(&str, usize)]) -> Signature {
    Signature::new(parts.iter().map(|&(l, d)| (l, d))).unwrap()
}

fn random_ket(rng: &mut ChaCha8Rng, s: Signature) -> PureState {
    let n = s.total();
    let v = DVector::from_fn(n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    Ket::new(s, v).unwrap().normalized().unwrap()
}

fn random_density(rng: &mut ChaCha8Rng, s: Signature) -> DensityOperator {
    let n = s.total();
    let g = DMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityOperator::new(s, m / tr).unwrap()
}

fn phi2(a: &str, b: &str) -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    PureState::new(sig(&[(a, 2), (b, 2)]), DVector::from_vec(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]))
        .unwrap()
}

#[test]
fn identity_tensor_identity() {
    let i4 = LinearMap::identity(2).tensor(&LinearMap::identity(2)).unwrap();
    assert_eq!(i4.matrix(), &DMatrix::<C64>::identity(4, 4));
    assert_eq!(i4.domain(), &[2, 2]);
}

#[test]
fn basis_tensor_bookkeeping() {
    let zero = PureState::basis(sig(&[("A", 2)]), &[0]).unwrap();
    let one = PureState::basis(sig(&[("B", 2)]), &[1]).unwrap();
    let k = tensor(&zero, &one).unwrap();
    assert_eq!(k.labels(), &["A".to_string(), "B".to_string()]);
    let nz: Vec<usize> = k.amplitudes().iter().enumerate().filter(|(_, z)| z.norm() > 0.0).map(|(i, _)| i).collect();
    assert_eq!(nz, vec![1]);
}

#[test]
fn pauli_product_on_bell_state_matches_hand_expansion() {
    let x = LinearMap::operator(DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])).unwrap();
    let z = LinearMap::operator(DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])).unwrap();
    let xz = x.tensor(&z).unwrap();
    let out = phi2("A", "B").apply(&xz, &["A", "B"], &["A", "B"]).unwrap();
    // X|0>⊗Z|0> = |10>, X|1>⊗Z|1> = -|01>
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let expected = [c(0., 0.), c(-h, 0.), c(h, 0.), c(0., 0.)];
    for (a, b) in out.amplitudes().iter().zip(expected) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn direct_sum_embed_examples() {
    let e0 = DVector::from_vec(vec![c(1., 0.), c(0., 0.)]);
    let out = direct_sum_embed(&e0, &DVector::zeros(9)).unwrap();
    assert_eq!(out[0], c(1., 0.));
    assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);

    let mut f0 = DVector::zeros(9);
    f0[0] = c(1., 0.);
    let out = direct_sum_embed(&DVector::zeros(2), &f0).unwrap();
    assert_eq!(out[2], c(1., 0.));
    assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);

    assert!(direct_sum_embed(&DVector::zeros(3), &DVector::zeros(9)).is_err());
    assert!(direct_sum_embed(&DVector::zeros(2), &DVector::zeros(8)).is_err());
}

#[test]
fn partial_trace_examples() {
    let rho = phi2("A", "B").density();
    let red = partial_trace(&rho, &["A"]).unwrap();
    let half = DensityOperator::maximally_mixed(sig(&[("A", 2)]));
    assert!(red.max_abs_diff(&half).unwrap() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let r = random_density(&mut rng, sig(&[("B", 3)]));
    let zero = PureState::basis(sig(&[("A", 2)]), &[0]).unwrap().density();
    let joint = zero.tensor(&r).unwrap();
    assert!(joint.partial_trace(&["B"]).unwrap().max_abs_diff(&r).unwrap() < 1e-15);

    assert!(matches!(joint.partial_trace(&["Q"]), Err(Error::UnknownLabel(_))));
}

#[test]
fn schmidt_examples() {
    for k in [1usize, 2, 5] {
        let s = sig(&[("A", k), ("B", k)]);
        let v = DVector::from_fn(k * k, |i, _| if i / k == i % k { c(1.0 / (k as f64).sqrt(), 0.) } else { c(0., 0.) });
        let phi = PureState::new(s, v).unwrap();
        let sd = schmidt(&phi, &["A"]).unwrap();
        assert_eq!(sd.rank(), k);
        for &x in &sd.coefficients[..k] {
            assert!((x - 1.0 / (k as f64).sqrt()).abs() < 1e-12);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_ket(&mut rng, sig(&[("A", 3)]));
    let b = random_ket(&mut rng, sig(&[("B", 4)]));
    let prod = a.tensor(&b).unwrap();
    let sd = schmidt(&prod, &["A"]).unwrap();
    assert_eq!(sd.rank(), 1);
    assert!((sd.coefficients[0] - 1.0).abs() < 1e-12);
}

#[test]
fn fidelity_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let psi = random_ket(&mut rng, sig(&[("A", 3), ("B", 2)]));
    assert!((fidelity_sq(&psi, &psi).unwrap() - 1.0).abs() < 1e-12);

    let zero = PureState::basis(sig(&[("A", 2)]), &[0]).unwrap();
    let one = PureState::basis(sig(&[("A", 2)]), &[1]).unwrap();
    assert_eq!(fidelity_sq(&zero, &one).unwrap(), 0.0);

    let mixed = DensityOperator::maximally_mixed(sig(&[("A", 2)]));
    assert!((fidelity_sq(&mixed, &zero).unwrap() - 0.5).abs() < 1e-15);

    let other = PureState::basis(sig(&[("A", 3)]), &[0]).unwrap();
    assert!(fidelity_sq(&other, &zero).is_err());
}

#[test]
fn fidelity_aligns_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let psi = random_ket(&mut rng, sig(&[("A", 3), ("B", 2)]));
    let swapped = psi.reordered(&["B", "A"]).unwrap();
    assert!((fidelity_sq(&swapped, &psi).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn entropy_examples() {
    for k in [1usize, 2, 3, 11] {
        let m = DensityOperator::maximally_mixed(sig(&[("A", k)]));
        assert!((entropy(&m).unwrap() - (k as f64).log2()).abs() < 1e-12);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let psi = random_ket(&mut rng, sig(&[("A", 4)]));
    assert!(entropy(&psi.density()).unwrap().abs() < 1e-9);
}

#[test]
fn entropy_rejects_negative_operator() {
    let bad = DensityOperator::unchecked(sig(&[("A", 2)]), DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.5, 0.), c(-0.5, 0.)]))).unwrap();
    assert!(entropy(&bad).is_err());
    assert!(bad.validate().is_err());
}

#[test]
fn pure_state_rejects_zero_and_unnormalized() {
    assert!(matches!(PureState::new(sig(&[("A", 2)]), DVector::zeros(2)), Err(Error::ZeroNorm)));
    let v = DVector::from_vec(vec![c(1., 0.), c(1., 0.)]);
    assert!(matches!(PureState::new(sig(&[("A", 2)]), v.clone()), Err(Error::NotNormalized(_))));
    assert!(PureState::new(sig(&[("A", 3)]), v).is_err());
}

#[test]
fn state_json_schema_shape() {
    let zero = PureState::basis(sig(&[("R", 1), ("A", 2)]), &[0, 1]).unwrap();
    let v: serde_json::Value = serde_json::to_value(&zero).unwrap();
    assert_eq!(v["dims"], serde_json::json!([1, 2]));
    assert_eq!(v["labels"], serde_json::json!(["R", "A"]));
    assert_eq!(v["re"], serde_json::json!([0.0, 1.0]));
    let back: PureState = serde_json::from_value(v).unwrap();
    assert_eq!(back, zero);
}

#[test]
fn apply_places_outputs_first() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let psi = random_ket(&mut rng, sig(&[("R", 2), ("A", 3), ("B", 2)]));
    let bra = LinearMap::bra(&DVector::from_vec(vec![c(1., 0.), c(0., 0.), c(0., 0.)]));
    let out = psi.apply(&bra, &["A"], &[] as &[&str]).unwrap();
    assert_eq!(out.labels(), &["R".to_string(), "B".to_string()]);
    // <0|_A picks amplitudes with A = 0
    for r in 0..2 {
        for b in 0..2 {
            assert_eq!(out.amplitudes()[r * 2 + b], psi.amplitudes()[r * 6 + b]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn tensor_concatenates_dims(da in 1usize..4, db in 1usize..4, dc in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_ket(&mut rng, sig(&[("A", da), ("B", db)]));
        let b = random_ket(&mut rng, sig(&[("C", dc)]));
        let t = tensor(&a, &b).unwrap();
        prop_assert_eq!(t.dims(), &[da, db, dc]);
    }

    #[test]
    fn partial_trace_of_product(da in 1usize..4, db in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(&mut rng, sig(&[("A", da)]));
        let sigma = random_density(&mut rng, sig(&[("B", db)])).scale(0.7);
        let joint = rho.tensor(&sigma).unwrap();
        let red = joint.partial_trace(&["A"]).unwrap();
        prop_assert!(red.max_abs_diff(&rho.scale(0.7)).unwrap() <= 1e-10);
    }

    #[test]
    fn schmidt_reconstructs(dl in 1usize..5, dr in 1usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_ket(&mut rng, sig(&[("L", dl), ("R", dr)]));
        let sd = schmidt(&psi, &["L"]).unwrap();
        let back = sd.reconstruct().unwrap();
        prop_assert!(back.max_abs_diff(&psi).unwrap() <= 1e-10);
        let total: f64 = sd.coefficients.iter().map(|x| x * x).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
        prop_assert!(sd.coefficients.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn fidelity_symmetric_and_phase_invariant(d in 2usize..6, theta in 0.0f64..6.3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_ket(&mut rng, sig(&[("A", d)]));
        let b = random_ket(&mut rng, sig(&[("A", d)]));
        let fab = fidelity_sq(&a, &b).unwrap();
        prop_assert!((fab - fidelity_sq(&b, &a).unwrap()).abs() <= 1e-12);
        let rotated = PureState::from_ket(a.scale(cis(theta))).unwrap();
        prop_assert!((fab - fidelity_sq(&rotated, &b).unwrap()).abs() <= 1e-12);
        prop_assert!((fab - fidelity_sq(&a.density(), &b).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn entropy_of_both_sides_agree(dl in 1usize..5, dr in 1usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_ket(&mut rng, sig(&[("L", dl), ("R", dr)]));
        let hl = entropy(&psi.partial_trace(&["L"]).unwrap()).unwrap();
        let hr = entropy(&psi.partial_trace(&["R"]).unwrap()).unwrap();
        prop_assert!((hl - hr).abs() <= 1e-9);
    }
}

#[test]
fn complex_matmul_matches_nalgebra() {
    let a = DMatrix::from_fn(4, 3, |i, j| c(i as f64 - 1.5, (j * i) as f64 * 0.25));
    let b = DMatrix::from_fn(3, 5, |i, j| c((i + j) as f64 * 0.5, 1.0 - j as f64));
    let d = complex_matmul(&a, &b) - &a * &b;
    assert!(d.iter().all(|z| z.norm() < 1e-14));
}
