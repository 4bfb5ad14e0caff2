//! Quantum circuit construction and classical validation for the 2D
//! linearized Euler equations.
//!
//! The library builds Trotterized evolution circuits for acoustic fields
//! with a uniform background flow on a `2^n_x x 2^n_y` grid — including
//! hard-walled obstacles realized as generator corrections — simulates them
//! on a dense statevector, and checks every construction against classical
//! references: sparse generators, matrix exponentials, and an explicit
//! finite-difference stepper.
//!
//! Module map:
//!
//! * [`sparse`], [`dense`] — minimal complex matrix types.
//! * [`classical`] — matrix exponentials, spectral norms, forward-Euler FDM.
//! * [`layout`] — component/coordinate to qubit mapping.
//! * [`statevector`] — in-place gate kernels and field extraction.
//! * [`circuit`] — gate IR, the `U_j` basis-change block, counting, export.
//! * [`decompose`] — exact rewrite into `{CNOT, RZ, RY, H, P, X}`.
//! * [`diffops`] — shift/difference generators and their evolution circuits.
//! * [`obstacles`] — binary-cell regions, mask quadtree, correction terms.
//! * [`lee`] — flow generator, Trotter steps, error bound, splitting,
//!   sources and time evolution.

pub mod circuit;
pub mod classical;
pub mod decompose;
pub mod dense;
pub mod diffops;
pub mod error;
pub mod layout;
pub mod lee;
pub mod obstacles;
pub mod sparse;
pub mod statevector;

pub use circuit::{count, dense_unitary, u_bell, Circuit, Gate, GateCount, GateKind};
pub use dense::DenseOperator;
pub use error::{Error, Result};
pub use layout::{Axis, Component, RegisterLayout};
pub use sparse::SparseOperator;
pub use statevector::{extract_field, l2_distance, FieldGrid, StateVector};
