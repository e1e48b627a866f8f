//! Numerical search over zero-cost one-way protocols.
//!
//! A measures with rank-one Kraus operators `<e_a|` (consuming A) where the
//! `e_a` are the columns of a `d_A × N` matrix `E` with `E E^dag = I`, sends
//! `a`, and B applies the best isometry for that branch. The average merging
//! fidelity of such a protocol is `Σ_a ‖C_a S‖_1²` with `C_a` the branch
//! coefficient matrix and `S = (T^dag T)^{1/2}` built from the target. The
//! objective is convex in `E`, so maximizing its linearization over the
//! constraint set (a polar decomposition) never decreases it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, complex_matmul, hermitian_eigen, polar_factor, svd_sorted, C64};
use crate::measure::KrausFamily;
use crate::protocols::{build_measure_and_decode, Protocol};
use crate::states::{MergeInstance, A, B, R};

/// Iterations between objective samples in a restart's history.
const HISTORY_STRIDE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_kraus: usize,
    pub iterations: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { restarts: 100, max_kraus: 121, iterations: 2000, seed: 0, tolerance: 1e-12 }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Invalid("restarts must be at least 1".into()));
        }
        if self.max_kraus == 0 {
            return Err(Error::Invalid("maxKraus must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::Invalid("tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RestartTrace {
    pub restart: usize,
    pub initial_fidelity_sq: f64,
    pub best_fidelity_sq: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest drop of the objective between consecutive iterations (0 when monotone).
    pub max_decrease: f64,
    /// Objective at iteration 0 and every 100th iteration after, plus the last.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchReport {
    pub config: SearchConfig,
    /// Number of Kraus operators actually used; at least `d_A`.
    pub outcomes: usize,
    pub best_fidelity_sq: f64,
    pub gap_estimate: f64,
    pub best_restart: usize,
    pub per_restart: Vec<RestartTrace>,
    /// A's measurement in the best protocol; B decodes each outcome optimally.
    pub best_measurement: KrausFamily,
}

impl SearchReport {
    /// The full protocol (measurement, message, per-outcome decoders).
    pub fn best_protocol(&self, inst: &MergeInstance) -> Result<Protocol> {
        let bras: Vec<DVector<C64>> = self
            .best_measurement
            .operators()
            .iter()
            .map(|m| m.matrix().row(0).adjoint())
            .collect();
        build_measure_and_decode(inst, &bras, "search-best")
    }
}

/// The instance in the shape the objective needs.
struct Model {
    d_a: usize,
    /// Column `i` is `vec(A_i S)` with `A_i[b, r] = ψ[r, i, b]`, row-major over `(b, r)`.
    weighted: DMatrix<C64>,
    /// Column `i` is `vec(A_i)`.
    slices: DMatrix<C64>,
    s: DMatrix<C64>,
    d_b: usize,
    d_r: usize,
}

impl Model {
    fn new(inst: &MergeInstance) -> Result<Self> {
        let psi = inst.psi.reordered(&[R, A, B])?;
        let dims = psi.dims();
        let (d_r, d_a, d_b) = (dims[0], dims[1], dims[2]);
        let amp = psi.amplitudes();
        let at = |r: usize, i: usize, b: usize| amp[(r * d_a + i) * d_b + b];
        // target columns t_r = ψ[r, ·, ·]; T^dag T is their Gram matrix
        let gram = DMatrix::from_fn(d_r, d_r, |r, q| {
            let mut acc = c(0.0, 0.0);
            for i in 0..d_a {
                for b in 0..d_b {
                    acc += at(r, i, b).conj() * at(q, i, b);
                }
            }
            acc
        });
        let (vals, vecs) = hermitian_eigen(&gram);
        let root = DMatrix::from_diagonal(&DVector::from_iterator(d_r, vals.iter().map(|&l| c(l.max(0.0).sqrt(), 0.0))));
        let s = &vecs * root * vecs.adjoint();
        let mut slices = DMatrix::zeros(d_b * d_r, d_a);
        for i in 0..d_a {
            for b in 0..d_b {
                for r in 0..d_r {
                    slices[(b * d_r + r, i)] = at(r, i, b);
                }
            }
        }
        let mut weighted = DMatrix::zeros(d_b * d_r, d_a);
        for i in 0..d_a {
            let a_i = DMatrix::from_fn(d_b, d_r, |b, r| slices[(b * d_r + r, i)]);
            let w = a_i * &s;
            for b in 0..d_b {
                for r in 0..d_r {
                    weighted[(b * d_r + r, i)] = w[(b, r)];
                }
            }
        }
        Ok(Model { d_a, weighted, slices, s, d_b, d_r })
    }

    /// Objective and ascent direction at `e` (columns are A's bra vectors).
    fn step(&self, e: &DMatrix<C64>) -> (f64, DMatrix<C64>) {
        let (n, d_b, d_r) = (e.ncols(), self.d_b, self.d_r);
        let branches = complex_matmul(&self.weighted, &e.map(|z| z.conj()));
        let mut objective = 0.0;
        let mut polar_s = DMatrix::<C64>::zeros(d_b * d_r, n);
        let mut norms = vec![0.0; n];
        for a in 0..n {
            let m = DMatrix::from_fn(d_b, d_r, |b, r| branches[(b * d_r + r, a)]);
            let (tn, root_inv) = trace_norm_and_root(&m);
            norms[a] = tn;
            objective += tn * tn;
            let ps = match root_inv {
                Some(k) => &m * (k * &self.s),
                None => {
                    let (u, _, v_t) = svd_sorted(&m);
                    u * (v_t * &self.s)
                }
            };
            for b in 0..d_b {
                for r in 0..d_r {
                    polar_s[(b * d_r + r, a)] = ps[(b, r)];
                }
            }
        }
        let mut g = complex_matmul(&self.slices.transpose(), &polar_s.map(|z| z.conj()));
        for (a, &tn) in norms.iter().enumerate() {
            g.column_mut(a).scale_mut(tn);
        }
        (objective, g)
    }

    fn objective(&self, e: &DMatrix<C64>) -> f64 {
        self.step(e).0
    }
}

/// `Σ_a ‖C_a S‖_1²` for the rank-one family `{<v_a|}`: the average fidelity
/// of measuring A with it and decoding optimally.
pub fn evaluate_family(inst: &MergeInstance, bras: &[DVector<C64>]) -> Result<f64> {
    let model = Model::new(inst)?;
    if bras.iter().any(|v| v.len() != model.d_a) {
        return Err(Error::DimensionMismatch("bra length differs from dim A".into()));
    }
    let e = DMatrix::from_fn(model.d_a, bras.len(), |i, a| bras[a][i]);
    let (ok, residual) = KrausFamily::from_bras(bras, A)?.is_complete();
    if !ok {
        return Err(Error::IncompleteFamily { residual });
    }
    Ok(model.objective(&e))
}

/// `‖M‖_1` together with `(M^dag M)^{-1/2}`, so that the polar factor is
/// `M (M^dag M)^{-1/2}`. The inverse root is `None` when `M^dag M` is badly
/// conditioned; square roots of tiny eigenvalues amplify rounding noise, so
/// the norm then comes from an SVD instead.
fn trace_norm_and_root(m: &DMatrix<C64>) -> (f64, Option<DMatrix<C64>>) {
    let d = m.ncols();
    let eig = SymmetricEigen::new(m.adjoint() * m);
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    let well_conditioned = lo > 1e-8 * hi;
    if !well_conditioned {
        return (svd_sorted(m).1.iter().sum(), None);
    }
    let w = &eig.eigenvectors;
    let root_inv = DMatrix::from_fn(d, d, |r, q| {
        (0..d).map(|k| w[(r, k)] * (1.0 / eig.eigenvalues[k].sqrt()) * w[(q, k)].conj()).sum::<C64>()
    });
    (eig.eigenvalues.iter().map(|l| l.sqrt()).sum(), Some(root_inv))
}

/// Co-isometric polar factor of a wide matrix through its Gram matrix,
/// `(G G^dag)^{-1/2} G`; falls back to the SVD when `G` is badly conditioned.
fn wide_polar(g: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(complex_matmul(g, &g.adjoint()));
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    let well_conditioned = lo > 1e-4 * hi;
    if !well_conditioned {
        return polar_factor(g);
    }
    let w = &eig.eigenvectors;
    let d = g.nrows();
    let root_inv = DMatrix::from_fn(d, d, |r, q| {
        (0..d).map(|k| w[(r, k)] * (1.0 / eig.eigenvalues[k].sqrt()) * w[(q, k)].conj()).sum()
    });
    complex_matmul(&root_inv, g)
}

fn run_restart(model: &Model, cfg: &SearchConfig, n: usize, restart: usize) -> (RestartTrace, DMatrix<C64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let gauss = DMatrix::from_fn(model.d_a, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        c(re, im)
    });
    let mut e = polar_factor(&gauss);
    let (mut current, mut g) = model.step(&e);
    let initial = current;
    let mut best = (current, e.clone());
    let mut history = vec![current];
    let mut max_decrease = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.iterations {
        e = wide_polar(&g);
        let (next, next_g) = model.step(&e);
        iterations = it;
        max_decrease = max_decrease.max(current - next);
        let improvement = next - current;
        current = next;
        g = next_g;
        if current > best.0 {
            best = (current, e.clone());
        }
        if it % HISTORY_STRIDE == 0 {
            history.push(current);
        }
        if improvement.abs() <= cfg.tolerance {
            converged = true;
            break;
        }
    }
    if iterations % HISTORY_STRIDE != 0 {
        history.push(current);
    }
    let trace = RestartTrace {
        restart,
        initial_fidelity_sq: initial,
        best_fidelity_sq: best.0.min(1.0),
        iterations,
        converged,
        max_decrease,
        history,
    };
    (trace, best.1)
}

/// Multi-restart search; restarts run in parallel but each is sequential and
/// seeded independently, so the report does not depend on scheduling.
pub fn optimize_one_way_zero_cost(inst: &MergeInstance, cfg: &SearchConfig) -> Result<SearchReport> {
    cfg.validate()?;
    let model = Model::new(inst)?;
    let n = cfg.max_kraus.max(model.d_a);
    let runs: Vec<(RestartTrace, DMatrix<C64>)> =
        (0..cfg.restarts).into_par_iter().map(|r| run_restart(&model, cfg, n, r)).collect();
    let mut best_idx = 0;
    for (i, (t, _)) in runs.iter().enumerate() {
        if t.best_fidelity_sq > runs[best_idx].0.best_fidelity_sq {
            best_idx = i;
        }
    }
    let best_e = &runs[best_idx].1;
    let bras: Vec<DVector<C64>> = (0..n).map(|a| best_e.column(a).into_owned()).collect();
    let best_measurement = KrausFamily::from_bras(&bras, A)?;
    let best_fidelity_sq = runs[best_idx].0.best_fidelity_sq;
    Ok(SearchReport {
        config: *cfg,
        outcomes: n,
        best_fidelity_sq,
        gap_estimate: 1.0 - best_fidelity_sq,
        best_restart: best_idx,
        per_restart: runs.into_iter().map(|(t, _)| t).collect(),
        best_measurement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::a_measurement_vectors;
    use crate::protocols::simulate;
    use crate::states::{build_instance, easy_instance, elimination_instance, GammaParams};

    fn quick(restarts: usize, iterations: usize) -> SearchConfig {
        SearchConfig { restarts, max_kraus: 121, iterations, seed: 7, tolerance: 1e-12 }
    }

    #[test]
    fn easy_instance_reaches_one() {
        let inst = easy_instance().unwrap();
        let rep = optimize_one_way_zero_cost(&inst, &SearchConfig { max_kraus: 4, ..quick(2, 50) }).unwrap();
        assert!(rep.best_fidelity_sq >= 1.0 - 1e-6);
    }

    #[test]
    fn elimination_instance_has_a_gap() {
        let inst = elimination_instance().unwrap();
        let rep = optimize_one_way_zero_cost(&inst, &SearchConfig { max_kraus: 4, ..quick(8, 500) }).unwrap();
        assert!(rep.best_fidelity_sq < 1.0 - 1e-3);
        // the computational-basis family scores 5/9
        assert!(rep.best_fidelity_sq >= 5.0 / 9.0 - 1e-9);
    }

    #[test]
    fn objective_matches_simulated_protocol() {
        let inst = build_instance(&GammaParams::default()).unwrap();
        let rep = optimize_one_way_zero_cost(&inst, &SearchConfig { max_kraus: 16, ..quick(1, 30) }).unwrap();
        let p = rep.best_protocol(&inst).unwrap();
        let run = simulate(&p, &inst).unwrap();
        assert!((run.avg_fidelity_sq - rep.best_fidelity_sq).abs() < 1e-9, "{} vs {}", run.avg_fidelity_sq, rep.best_fidelity_sq);
        assert!(rep.best_measurement.is_complete().0);
    }

    #[test]
    fn ascent_is_monotone() {
        let inst = build_instance(&GammaParams::default()).unwrap();
        let rep = optimize_one_way_zero_cost(&inst, &quick(3, 200)).unwrap();
        for t in &rep.per_restart {
            assert!(t.max_decrease <= 1e-12, "restart {} dropped by {}", t.restart, t.max_decrease);
            assert!(t.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        }
    }

    #[test]
    fn unconditioned_two_way_measurement_falls_short() {
        let g = GammaParams::default();
        let inst = build_instance(&g).unwrap();
        let f = evaluate_family(&inst, &a_measurement_vectors(&g).unwrap()).unwrap();
        assert!(f < 1.0 - 1e-3, "{f}");
    }

    #[test]
    fn seeded_search_is_reproducible() {
        let inst = elimination_instance().unwrap();
        let cfg = SearchConfig { max_kraus: 4, ..quick(3, 100) };
        let a = serde_json::to_string(&optimize_one_way_zero_cost(&inst, &cfg).unwrap()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| serde_json::to_string(&optimize_one_way_zero_cost(&inst, &cfg).unwrap()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn gram_polar_matches_svd_polar() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = DMatrix::from_fn(5, 17, |_, _| {
            c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let (a, b) = (wide_polar(&g), polar_factor(&g));
        assert!((a - b).iter().all(|z| z.norm() < 1e-12));
        // rank-deficient input takes the SVD path
        let mut low = g.clone();
        low.row_mut(4).fill(c(0.0, 0.0));
        assert_eq!(wide_polar(&low), polar_factor(&low));
    }

    #[test]
    fn config_is_validated() {
        let inst = easy_instance().unwrap();
        assert!(optimize_one_way_zero_cost(&inst, &SearchConfig { restarts: 0, ..Default::default() }).is_err());
        assert!(optimize_one_way_zero_cost(&inst, &SearchConfig { max_kraus: 0, ..Default::default() }).is_err());
    }
}
