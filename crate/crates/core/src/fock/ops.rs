use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::{hop, occupied, FockBasis};
use super::{dot, FockSpace};
use crate::model::{dot3, Vec3};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `a_κ ψ`.
pub fn apply_annihilation(space: &FockSpace, psi: &[Complex64], mode: usize) -> Vec<Complex64> {
    let basis = space.basis();
    let stride = basis.boson_stride(mode);
    let n_max = basis.n_max();
    (0..psi.len())
        .into_par_iter()
        .map(|i| {
            let (_, b) = basis.split(i);
            let n = basis.occupation(b, mode);
            if n < n_max {
                psi[i + stride] * ((n + 1) as f64).sqrt()
            } else {
                ZERO
            }
        })
        .collect()
}

/// `a†_κ ψ` on the truncated space, together with the squared norm that the
/// truncation discarded (the weight pushed above `n_max`).
pub fn apply_creation(space: &FockSpace, psi: &[Complex64], mode: usize) -> (Vec<Complex64>, f64) {
    let basis = space.basis();
    let stride = basis.boson_stride(mode);
    let n_max = basis.n_max();
    let out = (0..psi.len())
        .into_par_iter()
        .map(|i| {
            let (_, b) = basis.split(i);
            let n = basis.occupation(b, mode);
            if n > 0 {
                psi[i - stride] * (n as f64).sqrt()
            } else {
                ZERO
            }
        })
        .collect();
    let lost = psi
        .iter()
        .enumerate()
        .filter(|(i, _)| basis.occupation(basis.split(*i).1, mode) == n_max)
        .map(|(_, v)| v.norm_sqr() * (n_max + 1) as f64)
        .sum();
    (out, lost)
}

/// Second quantization `dΓ(A) ψ` of a one-particle matrix `A` (M × M).
pub fn apply_one_body(space: &FockSpace, psi: &[Complex64], a: &DMatrix<Complex64>) -> Vec<Complex64> {
    let basis = space.basis();
    let bd = basis.boson_dim();
    let m = basis.n_orbitals();
    let mut out = vec![ZERO; psi.len()];
    for (f, &mask) in basis.configs().iter().enumerate() {
        let src = &psi[f * bd..(f + 1) * bd];
        for p in occupied(mask) {
            for q in 0..m {
                let coeff = a[(q, p)];
                if coeff == ZERO {
                    continue;
                }
                if let Some((target, sign)) = hop(mask, p, q) {
                    let g = basis.config_index(target).expect("hop stays in sector");
                    let c = coeff * sign;
                    for (o, v) in out[g * bd..(g + 1) * bd].iter_mut().zip(src) {
                        *o += c * v;
                    }
                }
            }
        }
    }
    out
}

/// Dense matrix of `dΓ(A)` on the fermion configurations of `basis`.
pub fn one_body_matrix(basis: &FockBasis, a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = basis.fermion_dim();
    let mut out = DMatrix::zeros(dim, dim);
    for (f, &mask) in basis.configs().iter().enumerate() {
        for p in occupied(mask) {
            for q in 0..basis.n_orbitals() {
                if let Some((target, sign)) = hop(mask, p, q) {
                    let g = basis.config_index(target).expect("hop stays in sector");
                    out[(g, f)] += a[(q, p)] * sign;
                }
            }
        }
    }
    out
}

/// `⟨ρ̂_κ⟩` with `ρ̂_κ = Σ_j e^{ik_κ·x_j} = Σ_p c†_{p+κ} c_p`.
pub fn density_mode_expectation(space: &FockSpace, psi: &[Complex64], mode: usize) -> Complex64 {
    let basis = space.basis();
    let bd = basis.boson_dim();
    let shift = space.shift_up(mode);
    let mut acc = ZERO;
    for (f, &mask) in basis.configs().iter().enumerate() {
        let src = &psi[f * bd..(f + 1) * bd];
        for p in occupied(mask) {
            if let Some((target, sign)) = hop(mask, p, shift[p]) {
                let g = basis.config_index(target).expect("hop stays in sector");
                acc += dot(&psi[g * bd..(g + 1) * bd], src) * sign;
            }
        }
    }
    acc
}

/// `Φ̂(x) ψ = Σ_κ g_κ (e^{ik·x} a_κ + e^{-ik·x} a†_κ) ψ`.
pub fn apply_field(space: &FockSpace, psi: &[Complex64], x: &Vec3) -> Vec<Complex64> {
    let mut out = vec![ZERO; psi.len()];
    for (mode, &g) in space.coupling().iter().enumerate() {
        let phase = Complex64::from_polar(g, dot3(&space.mode_k(mode), x));
        let down = apply_annihilation(space, psi, mode);
        let (up, _) = apply_creation(space, psi, mode);
        for ((o, d), u) in out.iter_mut().zip(&down).zip(&up) {
            *o += phase * d + phase.conj() * u;
        }
    }
    out
}

/// `⟨a_κ⟩` for every mode.
pub fn mode_expectations(space: &FockSpace, psi: &[Complex64]) -> Vec<Complex64> {
    (0..space.coupling().len())
        .map(|mode| dot(psi, &apply_annihilation(space, psi, mode)))
        .collect()
}

/// `⟨Φ̂(x)⟩` at each of the given points.
pub fn field_expectation(space: &FockSpace, psi: &[Complex64], points: &[Vec3]) -> Vec<f64> {
    let a = mode_expectations(space, psi);
    points
        .iter()
        .map(|x| {
            a.iter()
                .enumerate()
                .map(|(mode, am)| {
                    2.0 * space.coupling()[mode] * (Complex64::from_polar(1.0, dot3(&space.mode_k(mode), x)) * am).re
                })
                .sum()
        })
        .collect()
}

/// `⟨𝒩⟩ = Σ_κ ⟨n_κ⟩`.
pub fn boson_number_expectation(space: &FockSpace, psi: &[Complex64]) -> f64 {
    let basis = space.basis();
    psi.iter()
        .enumerate()
        .map(|(i, v)| v.norm_sqr() * basis.boson_number(basis.split(i).1) as f64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Model, ModelParams};

    fn tiny() -> FockSpace {
        let params = ModelParams { n_fermions: 1, grid_points: 8, cutoff: 1.0, fock_n_max: 2, ..ModelParams::default() };
        FockSpace::new(&Model::new(params).unwrap(), 1_000_000).unwrap()
    }

    fn basis_vector(space: &FockSpace, f: usize, occ: &[usize]) -> Vec<Complex64> {
        let b = space.basis();
        let mut v = vec![ZERO; b.dim()];
        v[b.index(f, b.boson_index(occ))] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn ladder_action() {
        let s = tiny();
        let modes = s.coupling().len();
        let mut occ = vec![0; modes];
        occ[0] = 2;
        let v = basis_vector(&s, 0, &occ);
        let down = apply_annihilation(&s, &v, 0);
        occ[0] = 1;
        let idx = s.basis().index(0, s.basis().boson_index(&occ));
        assert!((down[idx].re - 2f64.sqrt()).abs() < 1e-15);
        assert!(apply_annihilation(&s, &basis_vector(&s, 0, &vec![0; modes]), 0).iter().all(|v| *v == ZERO));
        let (up, lost) = apply_creation(&s, &basis_vector(&s, 0, &{
            let mut o = vec![0; modes];
            o[0] = 2;
            o
        }), 0);
        assert!(up.iter().all(|v| *v == ZERO));
        assert!((lost - 3.0).abs() < 1e-15);
    }

    #[test]
    fn number_operator_of_fermions() {
        let s = tiny();
        let m = s.basis().n_orbitals();
        let id = DMatrix::<Complex64>::identity(m, m);
        let v = basis_vector(&s, 2, &vec![1; s.coupling().len()]);
        let out = apply_one_body(&s, &v, &id);
        assert!(out.iter().zip(&v).all(|(a, b)| (a - b).norm() < 1e-15));
    }
}
