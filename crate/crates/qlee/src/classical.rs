//! Classical reference computations: matrix exponentials, spectral norms and
//! an explicit finite-difference time stepper.
//!
//! These are the oracles every circuit construction is validated against, so
//! they are written for verifiable accuracy rather than speed: dense
//! scaling-and-squaring for small dimensions, restarted Arnoldi applied to
//! vectors for large ones, and a plain power iteration for spectral norms.

use num_complex::Complex64;

use crate::dense::DenseOperator;
use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

/// Largest dimension `expm_apply` accepts at all (Krylov path).
pub const KRYLOV_DIM_GUARD: usize = 1 << 20;

/// Dimensions up to this use the dense exponential directly inside
/// [`expm_apply`]; larger ones go through the Arnoldi path.
pub const EXPM_DENSE_CUTOFF: usize = 256;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Matrix exponential `exp(M)` by scaling and squaring with a truncated
/// Taylor series. The input is scaled down until its 1-norm is at most 1/2,
/// where the series converges to machine precision in ~20 terms, then the
/// result is squared back up.
pub fn expm_dense(m: &DenseOperator) -> DenseOperator {
    let norm = m.one_norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = m.scale(Complex64::new(1.0 / 2f64.powi(s as i32), 0.0));
    let mut result = DenseOperator::identity(m.dim());
    let mut term = DenseOperator::identity(m.dim());
    for k in 1..=64 {
        term = term
            .matmul(&b)
            .expect("dims equal")
            .scale(Complex64::new(1.0 / k as f64, 0.0));
        result = result.add(&term).expect("dims equal");
        if term.one_norm() <= 1e-18 * result.one_norm().max(1.0) {
            break;
        }
    }
    let mut out = result;
    for _ in 0..s {
        out = out.matmul(&out).expect("dims equal");
    }
    out
}

/// `exp(t * A) * f0` for sparse `A`.
///
/// Small problems materialize `exp(tA)` densely; larger ones use restarted
/// Arnoldi with substeps short enough (`|t_sub| * ||A||_1 <= 1`) that a
/// 30-dimensional Krylov space is converged far below the target accuracy.
pub fn expm_apply(a: &SparseOperator, f0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    if f0.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: f0.len(),
        });
    }
    if a.dim() > KRYLOV_DIM_GUARD {
        return Err(Error::GuardExceeded {
            what: "Krylov exponential",
            limit: KRYLOV_DIM_GUARD,
            requested: a.dim(),
        });
    }
    if t == 0.0 {
        return Ok(f0.to_vec());
    }
    if a.dim() <= EXPM_DENSE_CUTOFF {
        let dense = a.to_dense()?.scale(Complex64::new(t, 0.0));
        return expm_dense(&dense).matvec(f0);
    }
    krylov_apply(a, f0, t)
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn krylov_apply(a: &SparseOperator, f0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let m_max = 30.min(a.dim());
    let anorm = a.one_norm();
    if anorm == 0.0 {
        return Ok(f0.to_vec());
    }
    let mut v = f0.to_vec();
    let total = t.abs();
    let sign = t.signum();
    let mut done = 0.0;
    while done < total {
        let dt = (total - done).min(1.0 / anorm);
        let beta = vec_norm(&v);
        if beta == 0.0 {
            return Ok(v);
        }
        // Arnoldi with one full re-orthogonalization pass.
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m_max + 1);
        basis.push(v.iter().map(|x| x / beta).collect());
        let mut h = vec![vec![ZERO; m_max]; m_max + 1];
        let mut m_eff = m_max;
        for j in 0..m_max {
            let mut w = a.matvec(&basis[j])?;
            for i in 0..=j {
                let hij = dot(&basis[i], &w);
                for (wk, bk) in w.iter_mut().zip(&basis[i]) {
                    *wk -= hij * bk;
                }
                h[i][j] = hij;
            }
            for i in 0..=j {
                let corr = dot(&basis[i], &w);
                for (wk, bk) in w.iter_mut().zip(&basis[i]) {
                    *wk -= corr * bk;
                }
                h[i][j] += corr;
            }
            let hn = vec_norm(&w);
            h[j + 1][j] = Complex64::new(hn, 0.0);
            if hn <= 1e-14 * anorm.max(1.0) {
                // Invariant subspace reached: the projected exponential is exact.
                m_eff = j + 1;
                break;
            }
            basis.push(w.iter().map(|x| x / hn).collect());
        }
        // exp(sign * dt * H) e1, on the m_eff x m_eff head of H.
        let mut hm = DenseOperator::zeros(m_eff);
        for (i, row) in h.iter().take(m_eff).enumerate() {
            for (j, &val) in row.iter().take(m_eff).enumerate() {
                hm.set(i, j, val * Complex64::new(sign * dt, 0.0));
            }
        }
        let e = expm_dense(&hm);
        let mut next = vec![ZERO; a.dim()];
        for (i, b) in basis.iter().take(m_eff).enumerate() {
            let coeff = e.get(i, 0) * beta;
            for (nk, bk) in next.iter_mut().zip(b) {
                *nk += coeff * bk;
            }
        }
        v = next;
        done += dt;
    }
    Ok(v)
}

/// Spectral norm by power iteration on `M^dagger M`.
///
/// The start vector is a fixed pseudo-random vector so results are
/// reproducible. Converges when successive estimates agree to a relative
/// 1e-8; failing to converge within the iteration cap is an error carrying
/// the last relative residual.
pub fn operator_norm(m: &DenseOperator) -> Result<f64> {
    const RTOL: f64 = 1e-8;
    const MAX_ITER: usize = 20_000;
    let n = m.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut rnd = || {
        // SplitMix64; only used to seed the start vector.
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z = z ^ (z >> 31);
        (z as f64 / u64::MAX as f64) * 2.0 - 1.0
    };
    let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rnd(), rnd())).collect();
    let nv = vec_norm(&v);
    for x in &mut v {
        *x /= nv;
    }
    let mut sigma_prev = -1.0f64;
    let mut residual = f64::INFINITY;
    for it in 0..MAX_ITER {
        let w = m.matvec(&v)?;
        let z = m.adjoint_matvec(&w)?;
        let zn = vec_norm(&z);
        if zn < 1e-300 {
            // v is (numerically) annihilated by M^dagger M; since v was a
            // full-support random vector this means the norm itself is ~0.
            return Ok(0.0);
        }
        let sigma = zn.sqrt();
        residual = (sigma - sigma_prev).abs() / sigma.max(1e-300);
        if it > 0 && residual <= RTOL {
            return Ok(sigma);
        }
        sigma_prev = sigma;
        for (vi, zi) in v.iter_mut().zip(&z) {
            *vi = zi / zn;
        }
    }
    Err(Error::PowerIterationDiverged {
        residual,
        iterations: MAX_ITER,
    })
}

/// Result of an explicit forward-Euler evolution.
///
/// The run is *not* renormalized and divergence is data, not an error:
/// `diverged_at` records the first step that produced a non-finite value and
/// the snapshots collected up to that point are kept.
#[derive(Debug, Clone)]
pub struct FdmRun {
    /// `(step index, state)` pairs: step 0, every `snapshot_every`-th step,
    /// and the final step reached.
    pub snapshots: Vec<(usize, Vec<Complex64>)>,
    /// Vector 2-norm after each completed step, starting with the initial
    /// state (so `norms.len() == completed_steps + 1`).
    pub norms: Vec<f64>,
    pub diverged_at: Option<usize>,
}

/// Forward-Euler time stepping `f_{k+1} = f_k + tau * A f_k`.
pub fn fdm_evolve(
    a: &SparseOperator,
    f0: &[Complex64],
    tau: f64,
    steps: usize,
    snapshot_every: usize,
) -> Result<FdmRun> {
    if f0.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: f0.len(),
        });
    }
    let mut f = f0.to_vec();
    let mut run = FdmRun {
        snapshots: vec![(0, f.clone())],
        norms: vec![vec_norm(&f)],
        diverged_at: None,
    };
    for step in 1..=steps {
        let af = a.matvec(&f)?;
        for (fi, d) in f.iter_mut().zip(&af) {
            *fi += Complex64::new(tau, 0.0) * d;
        }
        if f.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            run.diverged_at = Some(step);
            break;
        }
        run.norms.push(vec_norm(&f));
        let is_snapshot = snapshot_every != 0 && step % snapshot_every == 0;
        if is_snapshot || step == steps {
            run.snapshots.push((step, f.clone()));
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm_of_diagonal() {
        // exp(t * diag(1,-1)) applied to (1,1) at t=1 is (e, 1/e).
        let a = SparseOperator::from_real_entries(2, vec![(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        let out = expm_apply(&a, &[c(1.0, 0.0), c(1.0, 0.0)], 1.0).unwrap();
        assert!((out[0].re - 1f64.exp()).abs() < 1e-12);
        assert!((out[1].re - (-1f64).exp()).abs() < 1e-12);
        assert!(out[0].im.abs() < 1e-15 && out[1].im.abs() < 1e-15);
    }

    #[test]
    fn expm_dense_of_pauli_x_rotation() {
        // exp(i * theta * X) = cos(theta) I + i sin(theta) X.
        let theta = 0.7;
        let mut m = DenseOperator::zeros(2);
        m.set(0, 1, c(0.0, theta));
        m.set(1, 0, c(0.0, theta));
        let e = expm_dense(&m);
        assert!((e.get(0, 0) - c(theta.cos(), 0.0)).norm() < 1e-14);
        assert!((e.get(0, 1) - c(0.0, theta.sin())).norm() < 1e-14);
    }

    #[test]
    fn antisymmetric_generator_preserves_norm() {
        let a = SparseOperator::from_real_entries(
            4,
            vec![
                (0, 1, 2.0),
                (1, 0, -2.0),
                (1, 2, -0.7),
                (2, 1, 0.7),
                (2, 3, 1.3),
                (3, 2, -1.3),
            ],
        )
        .unwrap();
        let f0 = vec![c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)];
        let out = expm_apply(&a, &f0, 3.0).unwrap();
        assert!((vec_norm(&out) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn krylov_path_matches_dense_path() {
        // A block-diagonal operator big enough to force the Arnoldi path,
        // compared against the dense exponential of the same matrix.
        let dim = 512;
        let mut entries = Vec::new();
        let mut state = 1u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for k in 0..dim - 1 {
            let v = rnd();
            entries.push((k, k + 1, v));
            entries.push((k + 1, k, -v));
        }
        let a = SparseOperator::from_real_entries(dim, entries).unwrap();
        let f0: Vec<Complex64> = (0..dim).map(|_| c(rnd(), rnd())).collect();
        let via_krylov = krylov_apply(&a, &f0, 0.9).unwrap();
        let dense = a.to_dense().unwrap().scale(c(0.9, 0.0));
        let via_dense = expm_dense(&dense).matvec(&f0).unwrap();
        let err: f64 = via_krylov
            .iter()
            .zip(&via_dense)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10 * vec_norm(&via_dense), "err = {err:e}");
    }

    #[test]
    fn operator_norm_matches_known_singular_value() {
        // [[0, 3], [0, 0]] has spectral norm 3.
        let mut m = DenseOperator::zeros(2);
        m.set(0, 1, c(3.0, 0.0));
        assert!((operator_norm(&m).unwrap() - 3.0).abs() < 1e-7);
    }

    #[test]
    fn operator_norm_of_zero_matrix() {
        let m = DenseOperator::zeros(8);
        assert_eq!(operator_norm(&m).unwrap(), 0.0);
    }

    #[test]
    fn fdm_keeps_partial_results_on_divergence() {
        // f' = 10^150 f overflows after a couple of steps.
        let a = SparseOperator::from_real_entries(1, vec![(0, 0, 1e150)]).unwrap();
        let run = fdm_evolve(&a, &[c(1.0, 0.0)], 1e150, 10, 1).unwrap();
        assert!(run.diverged_at.is_some());
        assert!(!run.snapshots.is_empty());
        assert!(!run.norms.is_empty());
    }

    #[test]
    fn fdm_snapshot_schedule() {
        let a = SparseOperator::zeros(2);
        let run = fdm_evolve(&a, &[c(1.0, 0.0), c(0.0, 0.0)], 0.1, 5, 2).unwrap();
        let steps: Vec<usize> = run.snapshots.iter().map(|s| s.0).collect();
        assert_eq!(steps, vec![0, 2, 4, 5]);
        // snapshot_every = 0 keeps only the endpoints.
        let run0 = fdm_evolve(&a, &[c(1.0, 0.0), c(0.0, 0.0)], 0.1, 0, 0).unwrap();
        let steps0: Vec<usize> = run0.snapshots.iter().map(|s| s.0).collect();
        assert_eq!(steps0, vec![0]);
    }
}
