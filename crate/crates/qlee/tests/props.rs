//! Property-based tests: randomized circuits, states, fields and masks
//! exercise the simulator kernels, the gate decomposition, the register
//! layout and the obstacle decomposition across their whole input space.

use num_complex::Complex64;
use proptest::prelude::*;

use qlee::decompose::decompose;
use qlee::obstacles::{decompose_mask, Mask};
use qlee::statevector::{extract_field, FieldGrid};
use qlee::{dense_unitary, Circuit, Component, DenseOperator, Gate, RegisterLayout, StateVector};

const QUBITS: usize = 3;

fn arb_gate() -> impl Strategy<Value = Gate> {
    (
        0..10usize,
        any::<prop::sample::Index>(),
        any::<prop::sample::Index>(),
        -1.5f64..1.5f64,
    )
        .prop_map(|(kind, i1, i2, angle)| {
            let q1 = i1.index(QUBITS);
            let q2 = (q1 + 1 + i2.index(QUBITS - 1)) % QUBITS;
            let q3 = (0..QUBITS)
                .find(|q| *q != q1 && *q != q2)
                .expect("three qubits leave one free");
            match kind {
                0 => Gate::x(q1),
                1 => Gate::h(q1),
                2 => Gate::p(angle, q1).unwrap(),
                3 => Gate::rz(angle, q1).unwrap(),
                4 => Gate::ry(angle, q1).unwrap(),
                5 => Gate::rzz(angle, q1, q2).unwrap(),
                6 => Gate::cnot(q1, q2).unwrap(),
                7 => Gate::mcrz(angle, vec![q2, q3], q1).unwrap(),
                8 => Gate::mcrzz(angle, vec![q3], q1, q2).unwrap(),
                _ => Gate::cry(angle, q1, q2).unwrap(),
            }
        })
}

fn arb_circuit() -> impl Strategy<Value = Circuit> {
    prop::collection::vec(arb_gate(), 1..12).prop_map(|gates| {
        let mut c = Circuit::new(QUBITS);
        for g in gates {
            c.push(g).unwrap();
        }
        c
    })
}

fn max_abs_diff(a: &DenseOperator, b: &DenseOperator) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..a.dim() {
        for c in 0..a.dim() {
            worst = worst.max((a.get(r, c) - b.get(r, c)).norm());
        }
    }
    worst
}

proptest! {
    #[test]
    fn circuits_are_unitary(c in arb_circuit()) {
        let u = dense_unitary(&c).unwrap();
        let ud = dense_unitary(&c.dagger()).unwrap();
        let prod = u.matmul(&ud).unwrap();
        let err = max_abs_diff(&prod, &DenseOperator::identity(1 << QUBITS));
        prop_assert!(err < 1e-10, "U * U^dagger differs from I by {err}");
    }

    #[test]
    fn statevector_kernels_match_the_dense_unitary(
        c in arb_circuit(),
        raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << QUBITS),
    ) {
        let norm_sq: f64 = raw.iter().map(|(re, im)| re * re + im * im).sum();
        prop_assume!(norm_sq > 1e-3);
        let amps: Vec<Complex64> = raw
            .iter()
            .map(|&(re, im)| Complex64::new(re, im) / norm_sq.sqrt())
            .collect();
        let mut state = StateVector::from_amplitudes(amps.clone()).unwrap();
        state.apply_circuit(&c).unwrap();

        let u = dense_unitary(&c).unwrap();
        let expected = u.matvec(&amps).unwrap();
        let worst = state
            .amplitudes()
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        prop_assert!(worst < 1e-10, "kernel and matrix route differ by {worst}");
    }

    #[test]
    fn decomposition_preserves_the_unitary_exactly(c in arb_circuit()) {
        let direct = dense_unitary(&c).unwrap();
        let rewritten = decompose(&c);
        for g in rewritten.gates() {
            let base = matches!(
                g.kind(),
                qlee::GateKind::X
                    | qlee::GateKind::H
                    | qlee::GateKind::P
                    | qlee::GateKind::RZ
                    | qlee::GateKind::RY
                    | qlee::GateKind::CNOT
            );
            prop_assert!(base, "decomposed circuit contains {:?}", g.kind());
        }
        let via = dense_unitary(&rewritten).unwrap();
        let err = max_abs_diff(&direct, &via);
        prop_assert!(err < 1e-9, "decomposition changed the unitary by {err}");
    }

    #[test]
    fn layout_indices_round_trip(
        n_x in 1usize..=4,
        n_y in 1usize..=4,
        component in 0usize..4,
        xi in any::<prop::sample::Index>(),
        yi in any::<prop::sample::Index>(),
    ) {
        let layout = RegisterLayout::with_ancillas(n_x, n_y).unwrap();
        let x = xi.index(1 << n_x);
        let y = yi.index(1 << n_y);
        let comp = [Component::P, Component::U, Component::V, Component::Zero][component];
        let idx = layout.index(comp, x, y).unwrap();
        prop_assert_eq!(idx & ((1 << n_y) - 1), y);
        prop_assert_eq!((idx >> n_y) & ((1 << n_x) - 1), x);
        prop_assert_eq!(idx >> (n_x + n_y), comp.code());
        prop_assert!(idx < layout.dim());
    }

    #[test]
    fn field_encoding_round_trips(
        p in prop::collection::vec(-2.0f64..2.0, 16),
        u in prop::collection::vec(-2.0f64..2.0, 16),
        v in prop::collection::vec(-2.0f64..2.0, 16),
    ) {
        let total: f64 = p.iter().chain(&u).chain(&v).map(|a| a * a).sum();
        prop_assume!(total > 1e-3);
        let mut field = FieldGrid::zeros(4, 4);
        field.p = p;
        field.u = u;
        field.v = v;
        let layout = RegisterLayout::with_ancillas(2, 2).unwrap();
        let (state, norm_factor) = field.to_state(&layout).unwrap();
        prop_assert!((state.norm() - 1.0).abs() < 1e-12);
        let back = extract_field(&state, &layout, norm_factor).unwrap();
        for i in 0..16 {
            prop_assert!((back.p[i] - field.p[i]).abs() < 1e-12);
            prop_assert!((back.u[i] - field.u[i]).abs() < 1e-12);
            prop_assert!((back.v[i] - field.v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn mask_decomposition_round_trips(bits in prop::collection::vec(any::<bool>(), 64)) {
        let mut text = String::new();
        for y in 0..8 {
            for x in 0..8 {
                text.push(if bits[y * 8 + x] { '1' } else { '0' });
            }
            text.push('\n');
        }
        let mask = Mask::parse(&text, 3, 3).unwrap();
        let spec = decompose_mask(&mask).unwrap();
        let back = spec.to_mask(3, 3).unwrap();
        prop_assert_eq!(back.export(), mask.export());
    }
}
