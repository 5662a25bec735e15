//! Numerical checks of the antisymmetry estimates, the rotated-projector
//! identities, and the field Ehrenfest equation on the truncated model.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::basis::FockBasis;
use super::hamiltonian::SparseMatrix;
use super::ops::{apply_field, density_mode_expectation, field_expectation, one_body_matrix};
use super::propagate::FockTrajectory;
use super::{dot, norm, FockSpace};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, random_complex_matrix};
use crate::model::{dot3, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma5Report {
    pub trials: usize,
    /// `max |⟨Ψ, A_1 Ψ'⟩| / ((N-j)^{-1} ‖A‖_Tr ‖Ψ‖ ‖Ψ'‖)`
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
}

/// All permutations of `0..n` with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    if n == 0 {
        return vec![(vec![], 1.0)];
    }
    let mut out = Vec::new();
    for (perm, sign) in permutations(n - 1) {
        // insert n-1 at every position; moving it left by s places costs s swaps
        for pos in 0..n {
            let mut p = perm.clone();
            p.insert(pos, n - 1);
            let swaps = n - 1 - pos;
            out.push((p, if swaps % 2 == 0 { sign } else { -sign }));
        }
    }
    out
}

/// Antisymmetrize a first-quantized tensor (`n` slots of dimension `m`,
/// slot 0 most significant, trailing factor `extra`) over the given slots.
pub fn antisymmetrize(t: &[Complex64], m: usize, n: usize, extra: usize, slots: &[usize]) -> Vec<Complex64> {
    let perms = permutations(slots.len());
    let scale = 1.0 / perms.len() as f64;
    let total = m.pow(n as u32);
    let mut out = vec![Complex64::new(0.0, 0.0); t.len()];
    let mut digits = vec![0usize; n];
    for idx in 0..total {
        let mut rem = idx;
        for s in (0..n).rev() {
            digits[s] = rem % m;
            rem /= m;
        }
        for (perm, sign) in &perms {
            let mut permuted = digits.clone();
            for (k, &src) in perm.iter().enumerate() {
                permuted[slots[k]] = digits[slots[src]];
            }
            let pidx = permuted.iter().fold(0, |acc, &d| acc * m + d);
            for e in 0..extra {
                out[idx * extra + e] += t[pidx * extra + e] * (sign * scale);
            }
        }
    }
    out
}

/// `A ⊗ 1` acting on slot 0.
fn apply_first_slot(a: &DMatrix<Complex64>, t: &[Complex64], m: usize, n: usize, extra: usize) -> Vec<Complex64> {
    let block = m.pow(n as u32 - 1) * extra;
    let mut out = vec![Complex64::new(0.0, 0.0); t.len()];
    for i in 0..m {
        for k in 0..m {
            let c = a[(i, k)];
            for r in 0..block {
                out[i * block + r] += c * t[k * block + r];
            }
        }
    }
    out
}

fn random_vector(len: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    random_complex_matrix(len, 1, rng).iter().copied().collect()
}

/// Randomized check of `|⟨Ψ, A_1 Ψ'⟩| ≤ (N-j)^{-1} ‖A‖_Tr ‖Ψ‖ ‖Ψ'‖` for
/// states antisymmetric in slot 0 and all but `j` other slots.
///
/// Half of the trials use the near-extremal partner `Ψ ∝ P_K A_1 Ψ'` and a
/// third use rank-one `A`, where the bound is tightest.
pub fn lemma5_check(trials: usize, m: usize, n: usize, extra: usize, seed: u64) -> Result<Lemma5Report> {
    if n == 0 || m < n || extra == 0 {
        return Err(Error::InvalidParams(format!(
            "need 1 ≤ N ≤ M and a nonempty boson factor, got N={n}, M={m}, extra={extra}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = m.pow(n as u32) * extra;
    let mut ratios = Vec::with_capacity(trials);
    for trial in 0..trials {
        let j = rng.random_range(0..n);
        let mut others: Vec<usize> = (1..n).collect();
        for _ in 0..j {
            let pick = rng.random_range(0..others.len());
            others.remove(pick);
        }
        let mut slots = vec![0];
        slots.extend(others);
        let a = if trial % 3 == 0 {
            let u = random_complex_matrix(m, 1, &mut rng);
            let v = random_complex_matrix(m, 1, &mut rng);
            &u * v.adjoint()
        } else {
            random_complex_matrix(m, m, &mut rng)
        };
        let tr_norm: f64 = a.clone().svd(false, false).singular_values.sum();
        let psi_p = antisymmetrize(&random_vector(len, &mut rng), m, n, extra, &slots);
        let psi = if trial % 2 == 0 {
            antisymmetrize(&apply_first_slot(&a, &psi_p, m, n, extra), m, n, extra, &slots)
        } else {
            antisymmetrize(&random_vector(len, &mut rng), m, n, extra, &slots)
        };
        let lhs = dot(&psi, &apply_first_slot(&a, &psi_p, m, n, extra)).norm();
        let bound = tr_norm * norm(&psi) * norm(&psi_p) / slots.len() as f64;
        ratios.push(if bound > 0.0 { lhs / bound } else { 0.0 });
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(Lemma5Report { trials, max_ratio, ratios })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma6Report {
    /// `max_{j,k} ‖[Q^{χ_j}, Q^{χ_k}]‖_max`
    pub max_commutator: f64,
    /// `‖Σ_j Q^{χ_j} - Σ_m q_m‖_max`
    pub sum_identity_error: f64,
    /// `max_j ‖(P^{χ_j})² - P^{χ_j}‖_max`
    pub idempotency_error: f64,
}

/// Checks the rotated-projector identities on the fermion configurations of
/// `basis`. `coeffs` holds the orbitals φ_j as rows (orthonormal); the
/// χ-family is `rotation · coeffs`.
pub fn lemma6_check(basis: &FockBasis, coeffs: &DMatrix<Complex64>, rotation: &DMatrix<Complex64>) -> Lemma6Report {
    let n = coeffs.nrows();
    let dim = basis.fermion_dim();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let chi = rotation * coeffs;
    let projector = |row: usize, c: &DMatrix<Complex64>| {
        let v = c.row(row).transpose();
        &v * v.adjoint()
    };
    let p_chi: Vec<DMatrix<Complex64>> = (0..n).map(|j| one_body_matrix(basis, &projector(j, &chi))).collect();
    let q_chi: Vec<DMatrix<Complex64>> = p_chi.iter().map(|p| &id - p).collect();

    let mut max_commutator: f64 = 0.0;
    for a in &q_chi {
        for b in &q_chi {
            max_commutator = max_commutator.max(max_abs(&(a * b - b * a)));
        }
    }
    let p_phi = coeffs.transpose() * coeffs.map(|v| v.conj());
    let sum_q_phi = &id * Complex64::new(n as f64, 0.0) - one_body_matrix(basis, &p_phi);
    let sum_q_chi = q_chi.iter().fold(DMatrix::zeros(dim, dim), |acc, q| acc + q);
    let idempotency_error = p_chi.iter().map(|p| max_abs(&(p * p - p))).fold(0.0, f64::max);
    Lemma6Report { max_commutator, sum_identity_error: max_abs(&(sum_q_chi - sum_q_phi)), idempotency_error }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EhrenfestRow {
    pub time: f64,
    /// Max over points of |LHS - RHS|, LHS using a central difference in time.
    pub residual: f64,
    /// Max over points of |RHS|.
    pub rhs_scale: f64,
    /// Max over points of the gap between the exact truncated second
    /// derivative and the untruncated prediction.
    pub truncation_defect: f64,
}

/// Field Ehrenfest equation
/// `∂_t²⟨Φ̂(x)⟩ + N^{-2/3}δ_N²(-Δ+m²)⟨Φ̂(x)⟩ = -N^{-2/3}δ_N(2π)^{-d} Σ_κ Δk^d e^{-ik·x} ⟨ρ̂_κ⟩`
/// at interior samples of an equally spaced trajectory.
pub fn ehrenfest_check(
    space: &FockSpace,
    h: &SparseMatrix,
    traj: &FockTrajectory,
    points: &[Vec3],
) -> Result<Vec<EhrenfestRow>> {
    let count = traj.states.len();
    if count < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: count });
    }
    let spacing = traj.times[1] - traj.times[0];
    let params = space.model().params();
    let d = params.dim as f64;
    let s = space.time_scale();
    let delta = params.delta_n;
    let weight = space.model().mode_weight();
    let fields: Vec<Vec<f64>> = traj.states.iter().map(|psi| field_expectation(space, psi, points)).collect();

    let mut rows = Vec::with_capacity(count - 2);
    for i in 1..count - 1 {
        let psi = &traj.states[i];
        let a: Vec<Complex64> = (0..space.coupling().len())
            .map(|k| dot(psi, &super::ops::apply_annihilation(space, psi, k)))
            .collect();
        let rho: Vec<Complex64> =
            (0..space.coupling().len()).map(|k| density_mode_expectation(space, psi, k)).collect();
        let hpsi = h.apply(psi);
        let h2psi = h.apply(&hpsi);
        let mut row = EhrenfestRow { time: traj.times[i], residual: 0.0, rhs_scale: 0.0, truncation_defect: 0.0 };
        for (pi, x) in points.iter().enumerate() {
            let fd = (fields[i + 1][pi] - 2.0 * fields[i][pi] + fields[i - 1][pi]) / (spacing * spacing);
            let mut restoring = 0.0;
            let mut rhs = 0.0;
            for (k, &g) in space.coupling().iter().enumerate() {
                let w = space.omega()[k];
                let phase = Complex64::from_polar(1.0, dot3(&space.mode_k(k), x));
                restoring += 2.0 * g * w * w * (phase * a[k]).re;
                rhs += (phase.conj() * rho[k]).re * weight;
            }
            restoring *= s * s * delta * delta;
            rhs *= -s * s * delta * (2.0 * PI).powf(-d);
            row.residual = row.residual.max((fd + restoring - rhs).abs());
            row.rhs_scale = row.rhs_scale.max(rhs.abs());
            let phi_psi = apply_field(space, psi, x);
            let phi_hpsi = apply_field(space, &hpsi, x);
            let exact = -s * s * (2.0 * dot(&h2psi, &phi_psi).re - 2.0 * dot(&hpsi, &phi_hpsi).re);
            row.truncation_defect = row.truncation_defect.max((exact - (rhs - restoring)).abs());
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_signs() {
        let perms = permutations(3);
        assert_eq!(perms.len(), 6);
        let total: f64 = perms.iter().map(|p| p.1).sum();
        assert_eq!(total, 0.0);
        let id = perms.iter().find(|p| p.0 == vec![0, 1, 2]).unwrap();
        assert_eq!(id.1, 1.0);
        let swap = perms.iter().find(|p| p.0 == vec![1, 0, 2]).unwrap();
        assert_eq!(swap.1, -1.0);
        let cycle = perms.iter().find(|p| p.0 == vec![1, 2, 0]).unwrap();
        assert_eq!(cycle.1, 1.0);
    }

    #[test]
    fn antisymmetrizer_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_vector(27 * 2, &mut rng);
        let a = antisymmetrize(&t, 3, 3, 2, &[0, 1, 2]);
        let b = antisymmetrize(&a, 3, 3, 2, &[0, 1, 2]);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-14));
    }

    #[test]
    fn lemma5_small_suite() {
        let r = lemma5_check(30, 4, 3, 2, 7).unwrap();
        assert!(r.max_ratio <= 1.0 + 1e-10, "{}", r.max_ratio);
    }
}
