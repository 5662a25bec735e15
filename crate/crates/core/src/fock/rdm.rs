use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::{hop, occupied, parity_below};
use super::{dot, FockSpace};

/// Reduced density matrices of a normalized many-body state.
#[derive(Debug, Clone)]
pub struct ReducedDensities {
    /// `γ_f[p][q] = N^{-1} ⟨c†_q c_p⟩` in the momentum-mode basis, trace 1.
    pub gamma_f: DMatrix<Complex64>,
    /// Two-body density on antisymmetric pairs `p1 < p2` (see [`pair_list`]),
    /// `2 ⟨c†_{q1} c†_{q2} c_{p2} c_{p1}⟩ / (N(N-1))`, trace 1. Empty for N < 2.
    pub gamma_f2: DMatrix<Complex64>,
    /// Boson kernel `N^{-4/3} ⟨a†_{κ'} a_κ⟩ / Δk^d` at `[κ][κ']`.
    pub gamma_b: DMatrix<Complex64>,
}

/// Ordered pairs `(p1, p2)` with `p1 < p2`, in the row order of `gamma_f2`.
pub fn pair_list(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect()
}

pub fn reduced_densities(space: &FockSpace, psi: &[Complex64]) -> ReducedDensities {
    ReducedDensities {
        gamma_f: fermion_one_rdm(space, psi),
        gamma_f2: fermion_two_rdm(space, psi),
        gamma_b: boson_one_rdm(space, psi),
    }
}

fn fermion_one_rdm(space: &FockSpace, psi: &[Complex64]) -> DMatrix<Complex64> {
    let basis = space.basis();
    let m = basis.n_orbitals();
    let bd = basis.boson_dim();
    let n = basis.n_fermions();
    let mut out = DMatrix::zeros(m, m);
    if n == 0 {
        return out;
    }
    for (f, &mask) in basis.configs().iter().enumerate() {
        let src = &psi[f * bd..(f + 1) * bd];
        for p in occupied(mask) {
            for q in 0..m {
                if let Some((target, sign)) = hop(mask, p, q) {
                    let g = basis.config_index(target).expect("hop stays in sector");
                    out[(p, q)] += dot(&psi[g * bd..(g + 1) * bd], src) * sign;
                }
            }
        }
    }
    out / Complex64::new(n as f64, 0.0)
}

/// `c_{p2} c_{p1} |mask⟩`, if nonzero.
fn remove_pair(mask: u64, p1: usize, p2: usize) -> Option<(u64, f64)> {
    if mask & (1 << p1) == 0 || mask & (1 << p2) == 0 {
        return None;
    }
    let s1 = parity_below(mask, p1);
    let m1 = mask ^ (1 << p1);
    let s2 = parity_below(m1, p2);
    Some((m1 ^ (1 << p2), s1 * s2))
}

/// `c†_{q1} c†_{q2} |mask⟩`, if nonzero.
fn insert_pair(mask: u64, q1: usize, q2: usize) -> Option<(u64, f64)> {
    if mask & (1 << q1) != 0 || mask & (1 << q2) != 0 {
        return None;
    }
    let s2 = parity_below(mask, q2);
    let m2 = mask | (1 << q2);
    let s1 = parity_below(m2, q1);
    Some((m2 | (1 << q1), s1 * s2))
}

fn fermion_two_rdm(space: &FockSpace, psi: &[Complex64]) -> DMatrix<Complex64> {
    let basis = space.basis();
    let n = basis.n_fermions();
    if n < 2 {
        return DMatrix::zeros(0, 0);
    }
    let m = basis.n_orbitals();
    let bd = basis.boson_dim();
    let pairs = pair_list(m);
    let norm = 2.0 / (n * (n - 1)) as f64;
    // row P = (p1, p2) holds ⟨c†_Q c_P⟩ for every Q; rows are independent
    let rows: Vec<Vec<Complex64>> = pairs
        .par_iter()
        .map(|&(p1, p2)| {
            let mut row = vec![Complex64::new(0.0, 0.0); pairs.len()];
            for (f, &mask) in basis.configs().iter().enumerate() {
                let Some((rest, s_remove)) = remove_pair(mask, p1, p2) else { continue };
                let src = &psi[f * bd..(f + 1) * bd];
                for (qi, &(q1, q2)) in pairs.iter().enumerate() {
                    if let Some((target, s_insert)) = insert_pair(rest, q1, q2) {
                        let g = basis.config_index(target).expect("pair hop stays in sector");
                        row[qi] += dot(&psi[g * bd..(g + 1) * bd], src) * (s_remove * s_insert * norm);
                    }
                }
            }
            row
        })
        .collect();
    DMatrix::from_fn(pairs.len(), pairs.len(), |i, j| rows[i][j])
}

fn boson_one_rdm(space: &FockSpace, psi: &[Complex64]) -> DMatrix<Complex64> {
    let basis = space.basis();
    let modes = basis.n_modes();
    let params = space.model().params();
    let scale = params.n_pow(-4.0 / 3.0) / space.model().mode_weight();
    let lowered: Vec<Vec<Complex64>> =
        (0..modes).map(|k| super::ops::apply_annihilation(space, psi, k)).collect();
    // ⟨a†_{κ'} a_κ⟩ = ⟨a_{κ'} ψ, a_κ ψ⟩
    DMatrix::from_fn(modes, modes, |k, kp| dot(&lowered[kp], &lowered[k]) * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::prepare_slater_coherent;
    use crate::linalg::max_abs;
    use crate::model::{FieldAmplitude, Model, ModelParams};

    #[test]
    fn slater_vacuum_densities() {
        let params = ModelParams { n_fermions: 3, grid_points: 8, fock_n_max: 1, ..ModelParams::default() };
        let s = FockSpace::new(&Model::new(params).unwrap(), 1_000_000).unwrap();
        let fb = s.model().fermi_ball().unwrap();
        let prep = prepare_slater_coherent(&s, &fb, &FieldAmplitude::zeros(s.basis().n_modes()), 1e-6).unwrap();
        let rd = reduced_densities(&s, &prep.state);
        let c = &prep.coefficients;
        // p[a][b] = Σ_j c_ja conj(c_jb)
        let p = c.transpose() * c.map(|v| v.conj());
        assert!(max_abs(&(&rd.gamma_f - p / Complex64::new(3.0, 0.0))) < 1e-14);
        assert!(max_abs(&rd.gamma_b) == 0.0);
        assert!((rd.gamma_f2.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }
}
