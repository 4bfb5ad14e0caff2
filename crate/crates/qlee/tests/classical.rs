//! Validation of the classical reference machinery itself: matrix
//! exponentials, the Krylov propagator, the power-iteration norm, and the
//! forward-Euler stepper with its divergence detection.

use num_complex::Complex64;

use qlee::classical::{expm_apply, expm_dense, fdm_evolve, operator_norm};
use qlee::dense::DenseOperator;
use qlee::diffops::{BoundaryCondition, GridSpec};
use qlee::lee::{center_cell, lee_generator, source_field, LeeParams, LeeScheme};
use qlee::sparse::SparseOperator;
use qlee::RegisterLayout;

fn small_generator() -> SparseOperator {
    let params = LeeParams::new(GridSpec::new(2, 2, 0.25).unwrap(), 1.0, 1.0, -1.0).unwrap();
    lee_generator(
        &params,
        LeeScheme::Central,
        BoundaryCondition::Dirichlet,
        None,
    )
    .unwrap()
}

fn initial_state(params: &LeeParams) -> Vec<Complex64> {
    let layout = RegisterLayout::with_ancillas(params.grid.n_x, params.grid.n_y).unwrap();
    let field = source_field(&[(center_cell(&params.grid).unwrap(), 0.5)], &params.grid).unwrap();
    let (state, _) = field.to_state(&layout).unwrap();
    state.amplitudes().to_vec()
}

#[test]
fn expm_dense_satisfies_the_semigroup_property() {
    let a = DenseOperator::from_sparse(&small_generator().scale_re(0.03)).unwrap();
    let single = expm_dense(&a);
    let double = expm_dense(&a.add(&a).unwrap());
    let squared = single.matmul(&single).unwrap();
    let err = squared.sub(&double).unwrap().max_abs_entry();
    assert!(err < 1e-12, "exp(A)^2 differs from exp(2A) by {err}");
    // And exp(0) is the identity.
    let zero = DenseOperator::zeros(8);
    assert!(
        expm_dense(&zero)
            .sub(&DenseOperator::identity(8))
            .unwrap()
            .max_abs_entry()
            < 1e-15
    );
}

#[test]
fn krylov_propagator_matches_a_taylor_expansion_at_small_times() {
    // Register big enough to force the iterative path rather than the
    // dense fallback.
    let params = LeeParams::new(GridSpec::new(4, 3, 0.25).unwrap(), 1.0, 1.0, -1.0).unwrap();
    let a = lee_generator(
        &params,
        LeeScheme::Central,
        BoundaryCondition::Dirichlet,
        None,
    )
    .unwrap();
    assert_eq!(a.dim(), 512);
    let f0 = initial_state(&params);
    let t = 1e-3;
    let propagated = expm_apply(&a, &f0, t).unwrap();

    // Fourth-order Taylor reference: (I + tA + t^2 A^2/2 + t^3 A^3/6 +
    // t^4 A^4/24) f0. The neglected tail is far below the tolerance.
    let mut reference = f0.clone();
    let mut term = f0.clone();
    for k in 1..=4 {
        term = a.matvec(&term).unwrap();
        let coef = t.powi(k) / (1..=k).product::<i32>() as f64;
        for (r, v) in reference.iter_mut().zip(&term) {
            *r += coef * v;
        }
    }
    let worst = propagated
        .iter()
        .zip(&reference)
        .map(|(p, r)| (p - r).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-10, "Krylov result differs from Taylor by {worst}");
}

#[test]
fn krylov_propagator_satisfies_the_semigroup_property() {
    let params = LeeParams::new(GridSpec::new(4, 3, 0.25).unwrap(), 1.0, 1.0, -1.0).unwrap();
    let a = lee_generator(
        &params,
        LeeScheme::Central,
        BoundaryCondition::Dirichlet,
        None,
    )
    .unwrap();
    let f0 = initial_state(&params);
    let t = 0.05;
    let two_hops = expm_apply(&a, &expm_apply(&a, &f0, t).unwrap(), t).unwrap();
    let one_jump = expm_apply(&a, &f0, 2.0 * t).unwrap();
    let worst = two_hops
        .iter()
        .zip(&one_jump)
        .map(|(p, r)| (p - r).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "semigroup violation {worst}");
}

#[test]
fn operator_norm_reproduces_known_values() {
    let nilpotent = DenseOperator::from_sparse(
        &SparseOperator::from_real_entries(2, vec![(0, 1, 2.0)]).unwrap(),
    )
    .unwrap();
    assert!((operator_norm(&nilpotent).unwrap() - 2.0).abs() < 1e-6);

    let rotation = DenseOperator::from_sparse(
        &SparseOperator::from_real_entries(2, vec![(0, 1, -3.0), (1, 0, 3.0)]).unwrap(),
    )
    .unwrap();
    assert!((operator_norm(&rotation).unwrap() - 3.0).abs() < 1e-6);

    // Exponentials of antisymmetric matrices are orthogonal: norm one.
    let u = expm_dense(&DenseOperator::from_sparse(&small_generator().scale_re(0.1)).unwrap());
    assert!((operator_norm(&u).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn forward_euler_is_first_order_accurate() {
    let params = LeeParams::new(GridSpec::new(2, 2, 0.25).unwrap(), 1.0, 1.0, -1.0).unwrap();
    let a = small_generator();
    let f0 = initial_state(&params);
    let horizon = 0.1;
    let exact = expm_apply(&a, &f0, horizon).unwrap();
    let global_error = |steps: usize| -> f64 {
        let run = fdm_evolve(&a, &f0, horizon / steps as f64, steps, 0).unwrap();
        assert_eq!(run.diverged_at, None);
        let (_, last) = run.snapshots.last().unwrap();
        last.iter()
            .zip(&exact)
            .map(|(p, r)| (p - r).norm())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (global_error(50), global_error(100));
    let ratio = e1 / e2;
    assert!(
        (1.8..=2.2).contains(&ratio),
        "halving tau scaled the global error by {ratio}, expected ~2"
    );
}

#[test]
fn forward_euler_diverges_at_the_coarse_step_and_survives_the_fine_one() {
    // The explicit stepper amplifies every mode of a skew generator, so on
    // the reference comparison configuration it must blow up at the
    // quantum-sized step and stay finite at a tenth of it.
    let params = LeeParams::new(GridSpec::new(5, 5, 0.25).unwrap(), 1.0, 1.0, -1.0).unwrap();
    let a = lee_generator(
        &params,
        LeeScheme::Central,
        BoundaryCondition::Dirichlet,
        None,
    )
    .unwrap();
    let f0 = initial_state(&params);

    let coarse = fdm_evolve(&a, &f0, 0.05, 20_000, 0).unwrap();
    assert!(
        coarse.diverged_at.is_some(),
        "coarse forward Euler failed to diverge"
    );
    // Norms race towards the blow-up (the very last entries may saturate
    // to infinity when the squared sum overflows first).
    let n = coarse.norms.len();
    assert!(coarse.norms[n - 1] >= coarse.norms[n - 2]);
    assert!(coarse.norms[n - 1] > 1e100);

    let fine = fdm_evolve(&a, &f0, 0.005, 400, 0).unwrap();
    assert_eq!(fine.diverged_at, None);
    let growth = fine.norms.last().unwrap() / fine.norms.first().unwrap();
    assert!(
        growth < 2.5,
        "fine forward Euler grew by {growth} over the comparison horizon"
    );
}

#[test]
fn fdm_snapshot_schedule_matches_the_request() {
    let a = small_generator();
    let params = LeeParams::new(GridSpec::new(2, 2, 0.25).unwrap(), 1.0, 1.0, -1.0).unwrap();
    let f0 = initial_state(&params);
    let run = fdm_evolve(&a, &f0, 0.001, 5, 2).unwrap();
    let steps: Vec<usize> = run.snapshots.iter().map(|(k, _)| *k).collect();
    assert_eq!(steps, vec![0, 2, 4, 5]);
    assert_eq!(run.norms.len(), 6);
}
