use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ops::apply_annihilation;
use super::rdm::{pair_list, reduced_densities, ReducedDensities};
use super::{dot, FockSpace};
use crate::linalg::{hermitian_eigen, trace_norm_hermitian};
use crate::model::FieldAmplitude;

/// Deviation of a many-body state from the product ansatz.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaReport {
    /// `1 - Tr(γ_f p)`
    pub beta_a1: f64,
    /// `N^{1/3} Tr(γ_f2 q⊗q)`
    pub beta_a2: f64,
    /// `N^{-1} Σ_κ ‖(a_κ - f_κ) ψ‖²`
    pub beta_b: f64,
    /// `N^{-1} ⟨W(f)* ψ, 𝒩 W(f)* ψ⟩` with the Weyl operator built on the
    /// truncated boson factor.
    pub beta_b_weyl: f64,
    pub beta_total: f64,
    /// `‖γ_f - p/N‖_Tr`
    pub tn_gamma_f: f64,
    /// `‖γ_b - |α⟩⟨α|‖_Tr`
    pub tn_gamma_b: f64,
    pub alpha_norm: f64,
    pub n_fermions: usize,
}

impl BetaReport {
    /// `|β^b - β^b_weyl|`, the truncation-induced disagreement of the two
    /// expressions.
    pub fn beta_b_gap(&self) -> f64 {
        (self.beta_b - self.beta_b_weyl).abs()
    }
}

pub fn beta_total(r: &BetaReport) -> f64 {
    r.beta_a1 + r.beta_a2 + r.beta_b
}

/// Slack of the two trace-distance chains; nonnegative when they hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma10Margins {
    /// `‖γ_f - p/N‖_Tr - 2β^{a,1}`
    pub fermion_lower: f64,
    /// `√(8β^{a,1}) - ‖γ_f - p/N‖_Tr`
    pub fermion_upper: f64,
    /// `3N^{-1/3}β^b + 6‖α‖√(N^{-1/3}β^b) - ‖γ_b - |α⟩⟨α|‖_Tr`
    pub boson_upper: f64,
}

impl Lemma10Margins {
    pub fn min(&self) -> f64 {
        self.fermion_lower.min(self.fermion_upper).min(self.boson_upper)
    }
}

pub fn lemma10_margins(r: &BetaReport) -> Lemma10Margins {
    let w = (r.n_fermions as f64).powf(-1.0 / 3.0);
    let bb = r.beta_b.max(0.0);
    Lemma10Margins {
        fermion_lower: r.tn_gamma_f - 2.0 * r.beta_a1,
        fermion_upper: (8.0 * r.beta_a1.max(0.0)).sqrt() - r.tn_gamma_f,
        boson_upper: 3.0 * w * bb + 6.0 * r.alpha_norm * (w * bb).sqrt() - r.tn_gamma_b,
    }
}

/// β-functionals of `psi` against the orbital coefficients `coeffs`
/// (one row per orbital, momentum-mode basis) and the field `alpha`.
pub fn beta_report(
    space: &FockSpace,
    psi: &[Complex64],
    coeffs: &DMatrix<Complex64>,
    alpha: &FieldAmplitude,
) -> BetaReport {
    let rd = reduced_densities(space, psi);
    beta_report_from(space, psi, &rd, coeffs, alpha)
}

fn beta_report_from(
    space: &FockSpace,
    psi: &[Complex64],
    rd: &ReducedDensities,
    coeffs: &DMatrix<Complex64>,
    alpha: &FieldAmplitude,
) -> BetaReport {
    let params = space.model().params();
    let n = params.n_fermions;
    let nf = n as f64;
    let m = space.basis().n_orbitals();
    let weight = space.model().mode_weight();

    let p = coeffs.transpose() * coeffs.map(|v| v.conj());
    let q = DMatrix::<Complex64>::identity(m, m) - &p;
    let beta_a1 = 1.0 - (&rd.gamma_f * &p).trace().re;

    let beta_a2 = if n < 2 {
        0.0
    } else {
        let pairs = pair_list(m);
        // (q⊗q) restricted to antisymmetric pairs
        let qq = DMatrix::from_fn(pairs.len(), pairs.len(), |i, j| {
            let (a1, a2) = pairs[i];
            let (b1, b2) = pairs[j];
            q[(a1, b1)] * q[(a2, b2)] - q[(a1, b2)] * q[(a2, b1)]
        });
        params.n_pow(1.0 / 3.0) * (&rd.gamma_f2 * qq).trace().re
    };

    let f_scale = params.n_pow(2.0 / 3.0) * weight.sqrt();
    let f: Vec<Complex64> = alpha.values.iter().map(|a| a * f_scale).collect();
    let mut fluct = 0.0;
    for (mode, fk) in f.iter().enumerate() {
        let mut v = apply_annihilation(space, psi, mode);
        for (x, y) in v.iter_mut().zip(psi) {
            *x -= fk * y;
        }
        fluct += dot(&v, &v).re;
    }
    let beta_b = fluct / nf;
    let beta_b_weyl = weyl_fluctuation(space, psi, &f) / nf;

    let tn_gamma_f = trace_norm_hermitian(&(&rd.gamma_f - &p / Complex64::new(nf, 0.0)));
    let modes = alpha.values.len();
    let aa = DMatrix::from_fn(modes, modes, |i, j| alpha.values[i] * alpha.values[j].conj());
    let tn_gamma_b = trace_norm_hermitian(&((&rd.gamma_b - aa) * Complex64::new(weight, 0.0)));

    BetaReport {
        beta_a1,
        beta_a2,
        beta_b,
        beta_b_weyl,
        beta_total: beta_a1 + beta_a2 + beta_b,
        tn_gamma_f,
        tn_gamma_b,
        alpha_norm: alpha.norm(weight),
        n_fermions: n,
    }
}

/// Dense `W(f) = exp(f a† - conj(f) a)` on `{0..=n_max}`.
pub(crate) fn weyl_matrix(f: Complex64, n_max: usize) -> DMatrix<Complex64> {
    let d = n_max + 1;
    // generator G = f a† - conj(f) a is anti-Hermitian; i G is Hermitian
    let g = DMatrix::from_fn(d, d, |r, c| {
        if r == c + 1 {
            f * (r as f64).sqrt()
        } else if c == r + 1 {
            -f.conj() * (c as f64).sqrt()
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let h = g * Complex64::new(0.0, 1.0);
    let (values, vectors) = hermitian_eigen(&h);
    // W = exp(G) = exp(-i H)
    let phases = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            Complex64::from_polar(1.0, -values[r])
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    &vectors * phases * vectors.adjoint()
}

/// `⟨W* ψ, 𝒩 W* ψ⟩` with `W = ⊗_κ W(f_κ)` acting on the boson factor.
fn weyl_fluctuation(space: &FockSpace, psi: &[Complex64], f: &[Complex64]) -> f64 {
    let basis = space.basis();
    let n_max = basis.n_max();
    let d = n_max + 1;
    let bd = basis.boson_dim();
    let mut phi = psi.to_vec();
    for (mode, &fk) in f.iter().enumerate() {
        let w_inv = weyl_matrix(-fk, n_max);
        let stride = basis.boson_stride(mode);
        let mut next = vec![Complex64::new(0.0, 0.0); phi.len()];
        for (i, o) in next.iter_mut().enumerate() {
            let b = i % bd;
            let n = basis.occupation(b, mode);
            let base = i - n * stride;
            *o = (0..d).map(|k| w_inv[(n, k)] * phi[base + k * stride]).sum();
        }
        phi = next;
    }
    phi.iter()
        .enumerate()
        .map(|(i, v)| v.norm_sqr() * basis.boson_number(i % bd) as f64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn weyl_is_unitary_and_displaces_vacuum() {
        let f = Complex64::new(0.2, -0.1);
        let w = weyl_matrix(f, 12);
        let id = DMatrix::<Complex64>::identity(13, 13);
        assert!(max_abs(&(&w.adjoint() * &w - id)) < 1e-13);
        let (coh, _) = crate::fock::coherent_coefficients(f, 12);
        for n in 0..6 {
            assert!((w[(n, 0)] - coh[n]).norm() < 1e-10);
        }
    }
}
