//! Exact dynamics of the truncated many-body model.
//!
//! The one-particle basis is the set of grid momentum modes (FFT slots), so
//! the kinetic energy is diagonal and `e^{ik·x}` is a cyclic momentum shift.
//! Each retained boson mode carries at most `n_max` quanta; the creation
//! operator maps `n_max` to zero.

mod basis;
mod beta;
mod checks;
mod hamiltonian;
mod ops;
mod prepare;
mod propagate;
mod rdm;

pub use basis::{binomial, hop, occupied, parity_below, FockBasis, DEFAULT_BUDGET};
pub use beta::{beta_report, beta_total, lemma10_margins, BetaReport, Lemma10Margins};
pub use checks::{
    antisymmetrize, ehrenfest_check, lemma5_check, lemma6_check, EhrenfestRow, Lemma5Report, Lemma6Report,
};
pub use hamiltonian::{build_hamiltonian, build_hamiltonian_scaled, SparseMatrix};
pub use ops::{
    apply_annihilation, apply_creation, apply_field, apply_one_body, boson_number_expectation, mode_expectations,
    density_mode_expectation, field_expectation, one_body_matrix,
};
pub use prepare::{coherent_coefficients, orbital_coefficients, prepare_slater_coherent, Prepared};
pub use propagate::{Evolution, FockTrajectory, KrylovOptions, Propagator, DENSE_LIMIT};
pub use rdm::{pair_list, reduced_densities, ReducedDensities};

use num_complex::Complex64;

use crate::error::Result;
use crate::model::{Model, Vec3};

/// A model together with its truncated Fock basis and the lookup tables the
/// operators need.
#[derive(Debug, Clone)]
pub struct FockSpace {
    model: Model,
    basis: FockBasis,
    /// `|k|²` per one-particle mode.
    kinetic: Vec<f64>,
    /// `Δk^{d/2} η̃(k_κ)` per boson mode.
    coupling: Vec<f64>,
    omega: Vec<f64>,
    /// `shift_up[κ][p]` = one-particle mode of `p + k_κ`.
    shift_up: Vec<Vec<usize>>,
    /// `shift_down[κ][p]` = one-particle mode of `p - k_κ`.
    shift_down: Vec<Vec<usize>>,
}

impl FockSpace {
    pub fn new(model: &Model, budget: usize) -> Result<Self> {
        let p = model.params();
        let grid = model.grid();
        let basis = FockBasis::new(grid.len(), p.n_fermions, model.modes().len(), p.fock_n_max, budget)?;
        let shift = |sign: i64| -> Vec<Vec<usize>> {
            model
                .modes()
                .iter()
                .map(|m| {
                    (0..grid.len())
                        .map(|s| {
                            let mut n = grid.fft_lattice(s);
                            for axis in 0..p.dim {
                                n[axis] += sign * m.lattice[axis];
                            }
                            grid.fft_slot(&n)
                        })
                        .collect()
                })
                .collect()
        };
        let half_weight = model.mode_weight().sqrt();
        Ok(FockSpace {
            kinetic: model.k_squared().to_vec(),
            coupling: model.modes().iter().map(|m| m.eta * half_weight).collect(),
            omega: model.modes().iter().map(|m| m.omega).collect(),
            shift_up: shift(1),
            shift_down: shift(-1),
            model: model.clone(),
            basis,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn kinetic(&self) -> &[f64] {
        &self.kinetic
    }

    pub fn shift_up(&self, mode: usize) -> &[usize] {
        &self.shift_up[mode]
    }

    pub fn shift_down(&self, mode: usize) -> &[usize] {
        &self.shift_down[mode]
    }

    /// Wavevector of boson mode `κ`.
    pub fn mode_k(&self, mode: usize) -> Vec3 {
        self.model.modes()[mode].k
    }

    /// Time scale of the generator, `N^{-1/3}`.
    pub fn time_scale(&self) -> f64 {
        self.model.params().n_pow(-1.0 / 3.0)
    }
}

pub fn norm(psi: &[Complex64]) -> f64 {
    psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a, b⟩`, summed in index order.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
