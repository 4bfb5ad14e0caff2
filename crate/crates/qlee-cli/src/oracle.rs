//! Classical reference plumbing shared by `simulate` and `compare`:
//! the size guard for oracle comparisons, incremental exact propagation,
//! and L2 distances in field units.

use num_complex::Complex64;
use qlee::classical::expm_apply;
use qlee::statevector::FieldGrid;
use qlee::{Component, RegisterLayout, Result, SparseOperator};

use crate::report::{L2Entry, OracleStatus};

/// Largest register for which dense-unitary comparisons are allowed.
pub const DENSE_QUBIT_LIMIT: usize = 12;
/// Largest register for which the Krylov vector oracle is allowed.
pub const KRYLOV_QUBIT_LIMIT: usize = 20;

/// What kind of classical reference the register size permits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleTier {
    Dense,
    Krylov,
    Disabled,
}

pub fn oracle_tier(num_qubits: usize) -> OracleTier {
    if num_qubits <= DENSE_QUBIT_LIMIT {
        OracleTier::Dense
    } else if num_qubits <= KRYLOV_QUBIT_LIMIT {
        OracleTier::Krylov
    } else {
        OracleTier::Disabled
    }
}

impl OracleTier {
    pub fn status(self, requested: bool, num_qubits: usize) -> OracleStatus {
        if !requested {
            return OracleStatus {
                mode: "off".into(),
                note: None,
            };
        }
        match self {
            OracleTier::Dense => OracleStatus {
                mode: "dense".into(),
                note: None,
            },
            OracleTier::Krylov => OracleStatus {
                mode: "krylov".into(),
                note: None,
            },
            OracleTier::Disabled => OracleStatus {
                mode: "disabled".into(),
                note: Some(format!(
                    "{num_qubits} qubits exceeds the {KRYLOV_QUBIT_LIMIT}-qubit oracle guard; \
                     invariant checks only"
                )),
            },
        }
    }
}

/// Exact propagation along a sequence of times, reusing the previous state
/// so each call only spans the increment.
pub struct ReferenceEvolution<'a> {
    generator: &'a SparseOperator,
    state: Vec<Complex64>,
    time: f64,
}

impl<'a> ReferenceEvolution<'a> {
    pub fn new(generator: &'a SparseOperator, initial: Vec<Complex64>) -> Self {
        Self {
            generator,
            state: initial,
            time: 0.0,
        }
    }

    /// The exact state at `time >=` the previous query time.
    pub fn at(&mut self, time: f64) -> Result<&[Complex64]> {
        let dt = time - self.time;
        if dt != 0.0 {
            self.state = expm_apply(self.generator, &self.state, dt)?;
            self.time = time;
        }
        Ok(&self.state)
    }
}

fn component_l2<F, G>(layout: &RegisterLayout, component: Component, a: F, b: G) -> Result<f64>
where
    F: Fn(usize, usize, usize) -> f64,
    G: Fn(usize, usize, usize) -> f64,
{
    let mut sum = 0.0;
    for x in 0..layout.points_x() {
        for y in 0..layout.points_y() {
            let i = layout.index(component, x, y)?;
            let d = a(i, x, y) - b(i, x, y);
            sum += d * d;
        }
    }
    Ok(sum)
}

fn entry_from_sums(p: f64, u: f64, v: f64) -> L2Entry {
    L2Entry {
        p: p.sqrt(),
        u: u.sqrt(),
        v: v.sqrt(),
        total: (p + u + v).sqrt(),
    }
}

/// L2 distance between a real field snapshot and a raw complex state, in
/// field units (`norm_factor` scales the state's real parts).
pub fn l2_field_vs_state(
    field: &FieldGrid,
    state: &[Complex64],
    layout: &RegisterLayout,
    norm_factor: f64,
) -> Result<L2Entry> {
    let mut sums = [0.0f64; 3];
    for (slot, component) in [Component::P, Component::U, Component::V].iter().enumerate() {
        let values = field.component(*component)?;
        sums[slot] = component_l2(
            layout,
            *component,
            |_, x, y| values[x * field.ny_points + y],
            |i, _, _| state[i].re * norm_factor,
        )?;
    }
    Ok(entry_from_sums(sums[0], sums[1], sums[2]))
}

/// L2 distance between two raw complex states over the physical sectors,
/// in field units.
pub fn l2_state_vs_state(
    a: &[Complex64],
    b: &[Complex64],
    layout: &RegisterLayout,
    norm_factor: f64,
) -> Result<L2Entry> {
    let mut sums = [0.0f64; 3];
    for (slot, component) in [Component::P, Component::U, Component::V].iter().enumerate() {
        sums[slot] = component_l2(
            layout,
            *component,
            |i, _, _| a[i].re * norm_factor,
            |i, _, _| b[i].re * norm_factor,
        )?;
    }
    Ok(entry_from_sums(sums[0], sums[1], sums[2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tier_boundaries() {
        assert_eq!(oracle_tier(12), OracleTier::Dense);
        assert_eq!(oracle_tier(13), OracleTier::Krylov);
        assert_eq!(oracle_tier(20), OracleTier::Krylov);
        assert_eq!(oracle_tier(21), OracleTier::Disabled);
    }

    #[test]
    fn field_state_distance_matches_hand_value() {
        // 1 qubit per axis with ancillas: 4 qubits, dim 16.
        let layout = RegisterLayout::with_ancillas(1, 1).unwrap();
        let mut field = FieldGrid::zeros(2, 2);
        field.p[0] = 3.0; // (x, y) = (0, 0)
        let mut state = vec![Complex64::new(0.0, 0.0); 16];
        let idx = layout.index(Component::P, 0, 0).unwrap();
        state[idx] = Complex64::new(0.5, 0.0);
        // field 3.0 vs state 0.5 * norm_factor 2 = 1.0 -> distance 2.
        let l2 = l2_field_vs_state(&field, &state, &layout, 2.0).unwrap();
        assert!((l2.p - 2.0).abs() < 1e-15);
        assert_eq!(l2.u, 0.0);
        assert!((l2.total - 2.0).abs() < 1e-15);
    }

    #[test]
    fn reference_evolution_is_incremental() {
        // Generator diag(1): state grows like e^t.
        let a = SparseOperator::from_real_entries(2, vec![(0, 0, 1.0)]).unwrap();
        let mut r = ReferenceEvolution::new(&a, vec![Complex64::new(1.0, 0.0); 2]);
        let s1 = r.at(1.0).unwrap()[0].re;
        assert!((s1 - 1f64.exp()).abs() < 1e-10);
        let s2 = r.at(2.0).unwrap()[0].re;
        assert!((s2 - 2f64.exp()).abs() < 1e-9);
    }
}
