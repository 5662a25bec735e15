use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::occupied;
use super::FockSpace;
use crate::error::{Error, Result};
use crate::model::{FieldAmplitude, OrbitalSet};

/// A prepared product state.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub state: Vec<Complex64>,
    /// `1 - Σ|coeff|²` of the truncated coherent factor before renormalization.
    pub truncation_weight: f64,
    /// Orbital coefficients in the momentum-mode basis, one row per orbital.
    pub coefficients: DMatrix<Complex64>,
    /// Coherent amplitudes `f_κ = N^{2/3} α_κ Δk^{d/2}`.
    pub coherent_amplitudes: Vec<Complex64>,
}

/// `c_jp = ⟨e_p, φ_j⟩` with `e_p = e^{ik_p·x}/L^{d/2}` on the grid.
pub fn orbital_coefficients(space: &FockSpace, orbitals: &OrbitalSet) -> DMatrix<Complex64> {
    let model = space.model();
    let grid = model.grid();
    let scale = grid.cell_volume() / grid.volume().sqrt();
    let m = grid.len();
    let mut c = DMatrix::zeros(orbitals.len(), m);
    for (j, phi) in orbitals.phi.iter().enumerate() {
        let mut buf = phi.clone();
        model.fft().forward(&mut buf);
        for (p, v) in buf.iter().enumerate() {
            c[(j, p)] = v * scale;
        }
    }
    c
}

/// Per-mode truncated coherent state `e^{-|f|²/2} f^n / √n!`, `n ≤ n_max`,
/// together with its squared norm.
pub fn coherent_coefficients(f: Complex64, n_max: usize) -> (Vec<Complex64>, f64) {
    let mut coeffs = Vec::with_capacity(n_max + 1);
    let mut c = Complex64::new((-f.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..=n_max {
        if n > 0 {
            c = c * f / (n as f64).sqrt();
        }
        coeffs.push(c);
    }
    let weight = coeffs.iter().map(|c| c.norm_sqr()).sum();
    (coeffs, weight)
}

/// `⋀_j φ_j ⊗ W(N^{2/3} α) Ω` on the truncated basis.
///
/// Fails with [`Error::Truncation`] when the discarded coherent weight exceeds
/// `threshold`, and with [`Error::NotOrthonormal`] when the orbitals are not
/// representable as a normalized Slater determinant.
pub fn prepare_slater_coherent(
    space: &FockSpace,
    orbitals: &OrbitalSet,
    alpha: &FieldAmplitude,
    threshold: f64,
) -> Result<Prepared> {
    let basis = space.basis();
    let params = space.model().params();
    if orbitals.len() != basis.n_fermions() {
        return Err(Error::InvalidParams(format!(
            "{} orbitals for {} fermions",
            orbitals.len(),
            basis.n_fermions()
        )));
    }
    if alpha.values.len() != basis.n_modes() {
        return Err(Error::InvalidParams(format!(
            "{} field amplitudes for {} modes",
            alpha.values.len(),
            basis.n_modes()
        )));
    }
    let dev = orbitals.gram_deviation();
    if dev > 1e-8 {
        return Err(Error::NotOrthonormal(dev));
    }
    let coefficients = orbital_coefficients(space, orbitals);

    let scale = params.n_pow(2.0 / 3.0) * space.model().mode_weight().sqrt();
    let coherent_amplitudes: Vec<Complex64> = alpha.values.iter().map(|a| a * scale).collect();
    let per_mode: Vec<(Vec<Complex64>, f64)> =
        coherent_amplitudes.iter().map(|&f| coherent_coefficients(f, basis.n_max())).collect();
    let kept: f64 = per_mode.iter().map(|(_, w)| w).product();
    let truncation_weight = 1.0 - kept;
    if truncation_weight > threshold {
        return Err(Error::Truncation { weight: truncation_weight, threshold });
    }
    let renorm = kept.sqrt().recip();
    let boson: Vec<Complex64> = (0..basis.boson_dim())
        .map(|b| {
            basis
                .occupations(b)
                .iter()
                .zip(&per_mode)
                .fold(Complex64::new(renorm, 0.0), |acc, (&n, (c, _))| acc * c[n])
        })
        .collect();

    let n = basis.n_fermions();
    let fermion: Vec<Complex64> = basis
        .configs()
        .par_iter()
        .map(|&mask| {
            let cols: Vec<usize> = occupied(mask).collect();
            let sub = DMatrix::from_fn(n, n, |j, i| coefficients[(j, cols[i])]);
            if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                sub.determinant()
            }
        })
        .collect();

    let bd = basis.boson_dim();
    let mut state = vec![Complex64::new(0.0, 0.0); basis.dim()];
    for (f, a) in fermion.iter().enumerate() {
        for (o, b) in state[f * bd..(f + 1) * bd].iter_mut().zip(&boson) {
            *o = a * b;
        }
    }
    Ok(Prepared { state, truncation_weight, coefficients, coherent_amplitudes })
}
