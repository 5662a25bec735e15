//! Time evolution `ψ(t) = e^{-i s H t} ψ(0)` with `s = N^{-1/3}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::hamiltonian::SparseMatrix;
use super::{dot, norm, FockSpace};
use crate::error::{Error, Result};

/// Largest dimension for which the dense propagator is built.
pub const DENSE_LIMIT: usize = 2000;

/// Norm drift that aborts a propagation.
const MAX_NORM_DRIFT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagator {
    /// Lanczos exponentiation with error-controlled substeps.
    Krylov,
    /// Full eigendecomposition; only for `dim ≤ DENSE_LIMIT`.
    Dense,
    /// Dense below `DENSE_LIMIT`, Krylov above.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub max_dim: usize,
    /// Bound on the estimated error of each accepted substep.
    pub tolerance: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { max_dim: 30, tolerance: 1e-13 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FockTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    /// `max_t |‖ψ_t‖ - ‖ψ_0‖|`.
    pub norm_drift: f64,
    /// `max_t |⟨H⟩_t - ⟨H⟩_0|`.
    pub energy_drift: f64,
    pub energies: Vec<f64>,
    /// Number of Krylov substeps taken (0 for the dense propagator).
    pub substeps: usize,
}

#[derive(Debug, Clone)]
enum Method {
    Krylov(KrylovOptions),
    Dense { values: Vec<f64>, vectors: DMatrix<f64> },
}

/// A propagator bound to one Hamiltonian.
#[derive(Debug, Clone)]
pub struct Evolution<'h> {
    h: &'h SparseMatrix,
    scale: f64,
    method: Method,
}

impl<'h> Evolution<'h> {
    pub fn new(space: &FockSpace, h: &'h SparseMatrix, propagator: Propagator) -> Result<Self> {
        Self::with_options(space, h, propagator, KrylovOptions::default())
    }

    pub fn with_options(
        space: &FockSpace,
        h: &'h SparseMatrix,
        propagator: Propagator,
        options: KrylovOptions,
    ) -> Result<Self> {
        let dense = match propagator {
            Propagator::Dense => {
                if h.dim() > DENSE_LIMIT {
                    return Err(Error::BudgetExceeded { dim: h.dim(), budget: DENSE_LIMIT });
                }
                true
            }
            Propagator::Krylov => false,
            Propagator::Auto => h.dim() <= DENSE_LIMIT,
        };
        let method = if dense {
            let eig = SymmetricEigen::new(h.to_dense());
            Method::Dense { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
        } else {
            Method::Krylov(options)
        };
        Ok(Evolution { h, scale: space.time_scale(), method })
    }

    /// `e^{-i s H t} ψ`; returns the state and the number of substeps.
    pub fn advance(&self, psi: &[Complex64], t: f64) -> Result<(Vec<Complex64>, usize)> {
        match &self.method {
            Method::Dense { values, vectors } => Ok((dense_apply(values, vectors, self.scale * t, psi), 0)),
            Method::Krylov(opts) => krylov_advance(self.h, self.scale * t.signum(), psi, t.abs(), opts),
        }
    }

    /// Samples at `0, Δ, 2Δ, …, t_final`; `t_final` must be a multiple of `Δ`.
    pub fn propagate(&self, psi0: &[Complex64], t_final: f64, sample_interval: f64) -> Result<FockTrajectory> {
        let count = sample_count(t_final, sample_interval)?;
        let n0 = norm(psi0);
        let e0 = self.h.expectation(psi0);
        let mut traj = FockTrajectory {
            times: vec![0.0],
            states: vec![psi0.to_vec()],
            energies: vec![e0],
            ..Default::default()
        };
        let mut psi = psi0.to_vec();
        for i in 1..=count {
            let (next, steps) = self.advance(&psi, sample_interval)?;
            psi = next;
            traj.substeps += steps;
            let drift = (norm(&psi) - n0).abs();
            if !drift.is_finite() || drift > MAX_NORM_DRIFT {
                return Err(Error::NormDrift(drift));
            }
            let e = self.h.expectation(&psi);
            traj.norm_drift = traj.norm_drift.max(drift);
            traj.energy_drift = traj.energy_drift.max((e - e0).abs());
            traj.energies.push(e);
            traj.times.push(i as f64 * sample_interval);
            traj.states.push(psi.clone());
        }
        Ok(traj)
    }
}

fn sample_count(t_final: f64, interval: f64) -> Result<usize> {
    if !(interval > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "need t_final ≥ 0 and a positive sample interval, got {t_final} and {interval}"
        )));
    }
    let count = (t_final / interval).round();
    if (count * interval - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidParams(format!(
            "t_final {t_final} is not a multiple of the sample interval {interval}"
        )));
    }
    Ok(count as usize)
}

fn dense_apply(values: &[f64], vectors: &DMatrix<f64>, t: f64, psi: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut coeffs: Vec<Complex64> = (0..n)
        .map(|c| (0..n).map(|r| psi[r] * vectors[(r, c)]).sum::<Complex64>())
        .collect();
    for (c, &l) in coeffs.iter_mut().zip(values) {
        *c *= Complex64::from_polar(1.0, -l * t);
    }
    (0..n)
        .map(|r| (0..n).map(|c| coeffs[c] * vectors[(r, c)]).sum())
        .collect()
}

/// Lanczos basis with full reorthogonalization.
struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// True when the Krylov space is invariant (exact exponentiation).
    invariant: bool,
}

fn lanczos(h: &SparseMatrix, scale: f64, v0: &[Complex64], beta0: f64, max_dim: usize) -> Lanczos {
    let dim = v0.len();
    let mut basis: Vec<Vec<Complex64>> = vec![v0.iter().map(|v| v / beta0).collect()];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let breakdown = 1e-14 * (scale.abs() * h.norm_bound()).max(1.0);
    let mut invariant = false;
    for j in 0..max_dim.min(dim) {
        h.matvec(&basis[j], &mut w);
        w.iter_mut().for_each(|x| *x *= scale);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let nb = norm(&w);
        beta.push(nb);
        if nb < breakdown || j + 1 == dim {
            invariant = true;
            break;
        }
        if j + 1 < max_dim {
            basis.push(w.iter().map(|x| x / nb).collect());
        }
    }
    Lanczos { basis, alpha, beta, invariant }
}

/// `exp(-i τ T) e_1` for the tridiagonal `T`.
fn tridiagonal_exp(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    let first: DVector<Complex64> = DVector::from_fn(m, |c, _| {
        Complex64::from_polar(q[(0, c)], -eig.eigenvalues[c] * tau)
    });
    (0..m).map(|r| (0..m).map(|c| first[c] * q[(r, c)]).sum()).collect()
}

fn krylov_advance(
    h: &SparseMatrix,
    scale: f64,
    psi: &[Complex64],
    t: f64,
    opts: &KrylovOptions,
) -> Result<(Vec<Complex64>, usize)> {
    let mut v = psi.to_vec();
    let mut remaining = t;
    let mut steps = 0;
    let mut tau = t;
    while remaining > 0.0 {
        let beta0 = norm(&v);
        if beta0 == 0.0 {
            return Ok((v, steps));
        }
        let lz = lanczos(h, scale, &v, beta0, opts.max_dim);
        let m = lz.basis.len();
        let (alpha, beta) = (&lz.alpha[..m], &lz.beta[..m]);
        tau = tau.min(remaining).max(remaining * 1e-12);
        let mut halvings = 0;
        let y = loop {
            let y = tridiagonal_exp(alpha, beta, tau);
            let err = if lz.invariant { 0.0 } else { beta0 * beta[m - 1] * y[m - 1].norm() };
            if err <= opts.tolerance {
                break y;
            }
            halvings += 1;
            if halvings > 60 || !err.is_finite() {
                return Err(Error::Krylov(err));
            }
            tau /= 2.0;
        };
        let mut next = vec![Complex64::new(0.0, 0.0); v.len()];
        for (b, c) in lz.basis.iter().zip(&y) {
            let c = c * beta0;
            for (o, x) in next.iter_mut().zip(b) {
                *o += c * x;
            }
        }
        v = next;
        remaining = if tau >= remaining { 0.0 } else { remaining - tau };
        steps += 1;
        if halvings == 0 {
            tau *= 2.0;
        }
    }
    Ok((v, steps))
}
