//! Periodic discretization of the Nelson model.
//!
//! Positions live on a uniform periodic grid of `grid_points^dim` sites in a
//! box of side `box_length`. Momenta live on the dual lattice
//! `k = 2π n / L`. Continuum integrals become lattice sums:
//! `∫ d^d x ↦ Σ_x Δx^d` and `∫ d^d k ↦ Σ_κ Δk^d`.
//!
//! The boson field is kept on the retained modes `{κ : |k_κ| ≤ Λ}`, with the
//! zero mode dropped when the field is massless (its form factor diverges).
//! Field amplitudes `α_κ` are samples of the continuum function `α(k)`; the
//! per-mode coherent amplitude used in Fock space is `α_κ Δk^{d/2}`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Lattice = [i64; 3];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Physical and numerical parameters. Units with ħ = c = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Number of fermions N.
    pub n_fermions: usize,
    /// UV cutoff Λ (≥ 1).
    pub cutoff: f64,
    /// Field-energy scaling δ_N.
    pub delta_n: f64,
    /// Boson mass m (≥ 0).
    pub boson_mass: f64,
    /// Spatial dimension d ∈ {1, 2, 3}.
    pub dim: usize,
    /// Side L of the periodic box.
    pub box_length: f64,
    /// Grid points per axis, a power of two.
    pub grid_points: usize,
    pub time_step: f64,
    /// Maximal occupation per boson mode in the Fock reference.
    pub fock_n_max: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            n_fermions: 2,
            cutoff: 2.0,
            delta_n: 1.0,
            boson_mass: 1.0,
            dim: 1,
            box_length: 2.0 * PI,
            grid_points: 16,
            time_step: 1e-3,
            fock_n_max: 2,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n_fermions == 0 {
            return bad("n_fermions must be positive".into());
        }
        if !(self.cutoff >= 1.0) || !self.cutoff.is_finite() {
            return bad(format!("cutoff must be finite and >= 1, got {}", self.cutoff));
        }
        if !(self.delta_n >= 0.0) || !self.delta_n.is_finite() {
            return bad(format!("delta_n must be finite and >= 0, got {}", self.delta_n));
        }
        if !(self.boson_mass >= 0.0) || !self.boson_mass.is_finite() {
            return bad(format!("boson_mass must be >= 0, got {}", self.boson_mass));
        }
        if !(1..=3).contains(&self.dim) {
            return bad(format!("dim must be 1, 2 or 3, got {}", self.dim));
        }
        if !(self.box_length > 0.0) || !self.box_length.is_finite() {
            return bad(format!("box_length must be positive, got {}", self.box_length));
        }
        if self.grid_points < 2 || !self.grid_points.is_power_of_two() {
            return bad(format!(
                "grid_points must be a power of two >= 2, got {}",
                self.grid_points
            ));
        }
        if !(self.time_step > 0.0) || !self.time_step.is_finite() {
            return bad(format!("time_step must be positive, got {}", self.time_step));
        }
        Ok(())
    }

    /// `N^{power}` as a float.
    pub fn n_pow(&self, power: f64) -> f64 {
        (self.n_fermions as f64).powf(power)
    }

    /// Lattice spacing of the momentum grid, `2π / L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Momentum cell volume `Δk^d`.
    pub fn mode_weight(&self) -> f64 {
        self.dk().powi(self.dim as i32)
    }
}

pub fn norm3(k: &Vec3) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `ω(k) = sqrt(|k|² + m²)`.
pub fn dispersion(k: &Vec3, mass: f64) -> f64 {
    (dot3(k, k) + mass * mass).sqrt()
}

/// Form factor `η̃(k) = (2π)^{-d/2} / sqrt(2ω(k))` inside the cutoff, zero outside.
pub fn form_factor(k: &Vec3, params: &ModelParams) -> Result<f64> {
    if norm3(k) > params.cutoff * (1.0 + 1e-12) {
        return Ok(0.0);
    }
    let omega = dispersion(k, params.boson_mass);
    if omega == 0.0 {
        return Err(Error::ExcludedMode);
    }
    Ok((2.0 * PI).powf(-(params.dim as f64) / 2.0) / (2.0 * omega).sqrt())
}

/// Uniform periodic position grid, row-major with the last axis fastest.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    pub points_per_axis: usize,
    pub dim: usize,
    pub box_length: f64,
    pub dx: f64,
}

impl SpatialGrid {
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Δx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    /// Per-axis integer coordinates of a flat index.
    pub fn axis_indices(&self, flat: usize) -> [usize; 3] {
        let g = self.points_per_axis;
        let mut out = [0usize; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rem % g;
            rem /= g;
        }
        out
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let g = self.points_per_axis;
        (0..self.dim).fold(0, |acc, axis| acc * g + idx[axis])
    }

    pub fn position(&self, flat: usize) -> Vec3 {
        let idx = self.axis_indices(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = idx[axis] as f64 * self.dx;
        }
        x
    }

    /// Signed lattice momentum of an FFT slot, in `[-G/2, G/2)`.
    pub fn fft_lattice(&self, flat: usize) -> Lattice {
        let g = self.points_per_axis as i64;
        let idx = self.axis_indices(flat);
        let mut n = [0i64; 3];
        for axis in 0..self.dim {
            let i = idx[axis] as i64;
            n[axis] = if i < g / 2 { i } else { i - g };
        }
        n
    }

    /// FFT slot of a lattice momentum, wrapping periodically.
    pub fn fft_slot(&self, n: &Lattice) -> usize {
        let g = self.points_per_axis as i64;
        let mut idx = [0usize; 3];
        for axis in 0..self.dim {
            idx[axis] = n[axis].rem_euclid(g) as usize;
        }
        self.flat_index(idx)
    }

    pub fn wavevector(&self, n: &Lattice) -> Vec3 {
        let dk = 2.0 * PI / self.box_length;
        let mut k = [0.0; 3];
        for axis in 0..self.dim {
            k[axis] = n[axis] as f64 * dk;
        }
        k
    }
}

/// One retained boson mode.
#[derive(Debug, Clone)]
pub struct BosonMode {
    pub lattice: Lattice,
    pub k: Vec3,
    pub omega: f64,
    pub eta: f64,
    /// FFT slot of `k` on the spatial grid.
    pub slot: usize,
    /// Index of the mode `-k` in the retained list.
    pub partner: usize,
}

/// d-dimensional complex FFT built from one-dimensional plans.
#[derive(Clone)]
pub struct FftNd {
    n: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("n", &self.n).field("dim", &self.dim).finish()
    }
}

impl FftNd {
    pub fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            n,
            dim,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// `F_n = Σ_j f_j e^{-2πi n·j/G}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
    }

    /// Unnormalized inverse, `f_j = Σ_n F_n e^{+2πi n·j/G}`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
    }

    /// Inverse transform divided by the number of points.
    pub fn inverse_normalized(&self, data: &mut [Complex64]) {
        self.inverse(data);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn apply(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let total = n.pow(self.dim as u32);
        assert_eq!(data.len(), total, "FFT buffer has wrong length");
        let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
        if self.dim == 1 {
            plan.process_with_scratch(data, &mut scratch);
            return;
        }
        let mut line = vec![ZERO; n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            for base in 0..total {
                if (base / stride) % n != 0 {
                    continue;
                }
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + i * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}

/// Field amplitude `α(k_κ)` on the retained modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldAmplitude {
    pub values: Vec<Complex64>,
}

impl FieldAmplitude {
    pub fn zeros(modes: usize) -> Self {
        FieldAmplitude { values: vec![ZERO; modes] }
    }

    /// `‖α‖ = (Σ_κ |α_κ|² Δk^d)^{1/2}`.
    pub fn norm(&self, mode_weight: f64) -> f64 {
        (self.values.iter().map(|a| a.norm_sqr()).sum::<f64>() * mode_weight).sqrt()
    }
}

/// N complex orbitals sampled on the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalSet {
    pub phi: Vec<Vec<Complex64>>,
    /// Cell volume `Δx^d` defining the inner product.
    pub cell_volume: f64,
}

impl OrbitalSet {
    pub fn new(phi: Vec<Vec<Complex64>>, cell_volume: f64) -> Self {
        OrbitalSet { phi, cell_volume }
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn inner(&self, i: usize, j: usize) -> Complex64 {
        inner(&self.phi[i], &self.phi[j], self.cell_volume)
    }

    /// `G_ij = ⟨φ_i, φ_j⟩`, accumulated in a fixed order.
    pub fn gram(&self) -> nalgebra::DMatrix<Complex64> {
        let n = self.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.inner(i, j))
    }

    /// `max_ij |G_ij - δ_ij|`.
    pub fn gram_deviation(&self) -> f64 {
        let g = self.gram();
        let mut dev: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((g[(i, j)] - target).norm());
            }
        }
        dev
    }

    pub fn is_finite(&self) -> bool {
        self.phi.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Orbitals `χ_i = Σ_j U_ij φ_j`.
    pub fn rotated(&self, u: &nalgebra::DMatrix<Complex64>) -> OrbitalSet {
        let n = self.len();
        let points = self.phi.first().map_or(0, |p| p.len());
        let phi = (0..n)
            .map(|i| {
                let mut out = vec![ZERO; points];
                for j in 0..n {
                    let c = u[(i, j)];
                    for (o, v) in out.iter_mut().zip(&self.phi[j]) {
                        *o += c * v;
                    }
                }
                out
            })
            .collect();
        OrbitalSet { phi, cell_volume: self.cell_volume }
    }
}

/// `⟨f, g⟩ = Σ_x conj(f) g Δx^d`.
pub fn inner(f: &[Complex64], g: &[Complex64], cell_volume: f64) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a.conj() * b).sum::<Complex64>() * cell_volume
}

/// The discretized model: parameters, grid, retained modes and FFT plans.
#[derive(Debug, Clone)]
pub struct Model {
    params: ModelParams,
    grid: SpatialGrid,
    modes: Vec<BosonMode>,
    fft: FftNd,
    /// `|k|²` per FFT slot.
    k_squared: Vec<f64>,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let g = params.grid_points;
        let grid = SpatialGrid {
            points_per_axis: g,
            dim: params.dim,
            box_length: params.box_length,
            dx: params.box_length / g as f64,
        };
        let modes = retained_modes(&params, &grid)?;
        let k_squared = (0..grid.len())
            .map(|s| {
                let k = grid.wavevector(&grid.fft_lattice(s));
                dot3(&k, &k)
            })
            .collect();
        Ok(Model { fft: FftNd::new(g, params.dim), params, grid, modes, k_squared })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn modes(&self) -> &[BosonMode] {
        &self.modes
    }

    pub fn fft(&self) -> &FftNd {
        &self.fft
    }

    /// `|k|²` for each FFT slot of the grid.
    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    pub fn mode_weight(&self) -> f64 {
        self.params.mode_weight()
    }

    /// `‖η̃‖` over the retained modes with weight `Δk^d`.
    pub fn form_factor_norm(&self) -> f64 {
        (self.modes.iter().map(|m| m.eta * m.eta).sum::<f64>() * self.mode_weight()).sqrt()
    }

    pub fn mode_index(&self, lattice: &Lattice) -> Option<usize> {
        self.modes.iter().position(|m| &m.lattice == lattice)
    }

    /// Normalized plane wave `e^{ik·x} / L^{d/2}` for lattice momentum `n`.
    pub fn plane_wave(&self, n: &Lattice) -> Vec<Complex64> {
        let k = self.grid.wavevector(n);
        let amp = self.grid.volume().sqrt().recip();
        (0..self.grid.len())
            .map(|s| Complex64::from_polar(amp, dot3(&k, &self.grid.position(s))))
            .collect()
    }

    /// Multiplication operator `e^{ik·x}` sampled on the grid.
    pub fn phase_field(&self, k: &Vec3) -> Vec<Complex64> {
        (0..self.grid.len())
            .map(|s| Complex64::from_polar(1.0, dot3(k, &self.grid.position(s))))
            .collect()
    }

    /// Real field `Φ(x) = Σ_κ Δk^d η̃(k_κ) (e^{ik·x} α_κ + e^{-ik·x} conj(α_κ))`.
    pub fn field_from_alpha(&self, alpha: &FieldAmplitude) -> Vec<f64> {
        let w = self.mode_weight();
        let mut coeffs = vec![ZERO; self.grid.len()];
        for (mode, a) in self.modes.iter().zip(&alpha.values) {
            let c = *a * (w * mode.eta);
            coeffs[mode.slot] += c;
            let neg = self.grid.fft_slot(&neg_lattice(&mode.lattice));
            coeffs[neg] += c.conj();
        }
        self.fft.inverse(&mut coeffs);
        coeffs.into_iter().map(|c| c.re).collect()
    }

    /// `F[f](k) = (2π)^{-d/2} Σ_x e^{-ik·x} f(x) Δx^d` on every FFT slot.
    pub fn fourier_full(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        let scale = (2.0 * PI).powf(-(self.params.dim as f64) / 2.0) * self.grid.cell_volume();
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }

    /// `F[ρ](k_κ)` on the retained modes.
    pub fn fourier_density(&self, rho: &[f64]) -> Vec<Complex64> {
        let full = self.fourier_full(rho);
        self.modes.iter().map(|m| full[m.slot]).collect()
    }

    /// Spectral gradient of a grid function, one component per axis.
    pub fn gradient(&self, f: &[Complex64]) -> Vec<Vec<Complex64>> {
        let mut spectrum = f.to_vec();
        self.fft.forward(&mut spectrum);
        (0..self.params.dim)
            .map(|axis| {
                let mut comp: Vec<Complex64> = spectrum
                    .iter()
                    .enumerate()
                    .map(|(s, v)| {
                        let k = self.grid.wavevector(&self.grid.fft_lattice(s));
                        v * Complex64::new(0.0, k[axis])
                    })
                    .collect();
                self.fft.inverse_normalized(&mut comp);
                comp
            })
            .collect()
    }

    /// `⟨φ, -Δφ⟩` via Parseval.
    pub fn kinetic_expectation(&self, f: &[Complex64]) -> f64 {
        let mut spectrum = f.to_vec();
        self.fft.forward(&mut spectrum);
        let scale = self.grid.cell_volume() / self.grid.len() as f64;
        spectrum
            .iter()
            .zip(&self.k_squared)
            .map(|(v, k2)| v.norm_sqr() * k2)
            .sum::<f64>()
            * scale
    }

    /// Fermi ball: the N plane waves of smallest `|k|`, ties broken by
    /// lexicographic order of the integer coordinates.
    pub fn fermi_ball(&self) -> Result<OrbitalSet> {
        let momenta = fermi_ball_momenta(&self.params)?;
        let phi = momenta.iter().map(|n| self.plane_wave(n)).collect();
        Ok(OrbitalSet::new(phi, self.grid.cell_volume()))
    }
}

/// ρ(x) = Σ_j |φ_j(x)|².
pub fn density(orbitals: &OrbitalSet) -> Vec<f64> {
    let points = orbitals.phi.first().map_or(0, |p| p.len());
    let mut rho = vec![0.0; points];
    for phi in &orbitals.phi {
        for (r, v) in rho.iter_mut().zip(phi) {
            *r += v.norm_sqr();
        }
    }
    rho
}

/// Parallel per-orbital map with deterministic output order.
pub fn map_orbitals<F>(orbitals: &mut OrbitalSet, f: F)
where
    F: Fn(&mut Vec<Complex64>) + Sync + Send,
{
    orbitals.phi.par_iter_mut().for_each(f);
}

pub fn neg_lattice(n: &Lattice) -> Lattice {
    [-n[0], -n[1], -n[2]]
}

/// Lattice momenta of the Fermi ball, in orbital order.
pub fn fermi_ball_momenta(params: &ModelParams) -> Result<Vec<Lattice>> {
    let g = params.grid_points as i64;
    let half = g / 2;
    let d = params.dim;
    let total = params.grid_points.pow(d as u32);
    if params.n_fermions > total {
        return Err(Error::InvalidParams(format!(
            "{} fermions do not fit on {} grid modes",
            params.n_fermions, total
        )));
    }
    let mut all: Vec<Lattice> = Vec::with_capacity(total);
    let range: Vec<i64> = (-half..half).collect();
    let ax = |a: usize| if a < d { range.clone() } else { vec![0] };
    for &a in &ax(0) {
        for &b in &ax(1) {
            for &c in &ax(2) {
                all.push([a, b, c]);
            }
        }
    }
    all.sort_by_key(|n| (n[0] * n[0] + n[1] * n[1] + n[2] * n[2], *n));
    all.truncate(params.n_fermions);
    Ok(all)
}

fn retained_modes(params: &ModelParams, grid: &SpatialGrid) -> Result<Vec<BosonMode>> {
    let dk = params.dk();
    let reach = (params.cutoff / dk * (1.0 + 1e-12)).floor() as i64;
    let half = (params.grid_points / 2) as i64;
    let range: Vec<i64> = (-reach..=reach).collect();
    let ax = |a: usize| if a < params.dim { range.clone() } else { vec![0] };
    let mut lattice = Vec::new();
    for &a in &ax(0) {
        for &b in &ax(1) {
            for &c in &ax(2) {
                let n = [a, b, c];
                let k = grid.wavevector(&n);
                if norm3(&k) > params.cutoff * (1.0 + 1e-12) {
                    continue;
                }
                if params.boson_mass == 0.0 && n == [0, 0, 0] {
                    continue;
                }
                if n.iter().any(|v| v.abs() >= half) {
                    return Err(Error::InvalidParams(format!(
                        "retained mode {:?} is not resolved by {} grid points; refine the grid",
                        &n[..params.dim],
                        params.grid_points
                    )));
                }
                lattice.push(n);
            }
        }
    }
    let mut modes: Vec<BosonMode> = lattice
        .iter()
        .map(|n| {
            let k = grid.wavevector(n);
            Ok(BosonMode {
                lattice: *n,
                k,
                omega: dispersion(&k, params.boson_mass),
                eta: form_factor(&k, params)?,
                slot: grid.fft_slot(n),
                partner: 0,
            })
        })
        .collect::<Result<_>>()?;
    for i in 0..modes.len() {
        let neg = neg_lattice(&modes[i].lattice);
        modes[i].partner = lattice.iter().position(|n| *n == neg).expect("mode set is symmetric");
    }
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params3d() -> ModelParams {
        ModelParams { dim: 3, cutoff: 1.0, boson_mass: 1.0, ..ModelParams::default() }
    }

    #[test]
    fn form_factor_at_rest() {
        let v = form_factor(&[0.0; 3], &params3d()).unwrap();
        assert!((v - (2.0 * PI).powf(-1.5) / 2f64.sqrt()).abs() < 1e-15);
        assert!((v - 0.04490).abs() < 1e-5);
    }

    #[test]
    fn form_factor_outside_cutoff_is_zero() {
        assert_eq!(form_factor(&[2.0, 0.0, 0.0], &params3d()).unwrap(), 0.0);
    }

    #[test]
    fn form_factor_massless_unit_momentum() {
        let p = ModelParams { boson_mass: 0.0, ..params3d() };
        let v = form_factor(&[1.0, 0.0, 0.0], &p).unwrap();
        assert!((v - 0.044_901).abs() < 1e-5);
        assert!(matches!(form_factor(&[0.0; 3], &p), Err(Error::ExcludedMode)));
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion(&[3.0, 4.0, 0.0], 0.0), 5.0);
        assert_eq!(dispersion(&[0.0; 3], 2.0), 2.0);
        assert!((dispersion(&[1.0, 0.0, 0.0], 1.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        let p = ModelParams { grid_points: 12, ..ModelParams::default() };
        assert!(matches!(Model::new(p), Err(Error::InvalidParams(_))));
        let p = ModelParams { cutoff: 0.5, ..ModelParams::default() };
        assert!(Model::new(p).is_err());
        // cutoff reaches the Nyquist mode
        let p = ModelParams { grid_points: 4, cutoff: 2.0, ..ModelParams::default() };
        assert!(Model::new(p).is_err());
    }

    #[test]
    fn retained_modes_massless_drop_zero() {
        let m = Model::new(ModelParams { boson_mass: 0.0, ..ModelParams::default() }).unwrap();
        let lat: Vec<i64> = m.modes().iter().map(|md| md.lattice[0]).collect();
        assert_eq!(lat, vec![-2, -1, 1, 2]);
        let m = Model::new(ModelParams::default()).unwrap();
        assert_eq!(m.modes().len(), 5);
        for (i, md) in m.modes().iter().enumerate() {
            assert_eq!(m.modes()[md.partner].lattice, neg_lattice(&md.lattice));
            assert_eq!(m.modes()[md.partner].partner, i);
        }
    }

    #[test]
    fn fermi_ball_tie_breaking() {
        let p = ModelParams { n_fermions: 3, ..ModelParams::default() };
        let n = fermi_ball_momenta(&p).unwrap();
        assert_eq!(n, vec![[0, 0, 0], [-1, 0, 0], [1, 0, 0]]);
        let p = ModelParams { n_fermions: 1, ..ModelParams::default() };
        let m = Model::new(p).unwrap();
        let fb = m.fermi_ball().unwrap();
        let c = (2.0 * PI).sqrt().recip();
        assert!(fb.phi[0].iter().all(|v| (v - Complex64::new(c, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn fermi_ball_is_orthonormal_2d() {
        let p = ModelParams { dim: 2, n_fermions: 5, grid_points: 8, ..ModelParams::default() };
        let m = Model::new(p).unwrap();
        assert!(m.fermi_ball().unwrap().gram_deviation() < 1e-13);
    }

    #[test]
    fn constant_density_fourier() {
        let m = Model::new(ModelParams::default()).unwrap();
        let c = 0.7;
        let rho = vec![c; m.grid().len()];
        let f = m.fourier_full(&rho);
        let l = m.params().box_length;
        assert!((f[0].re - (2.0 * PI).powf(-0.5) * c * l).abs() < 1e-12);
        assert!(f[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn plane_wave_density_uniform() {
        let p = ModelParams { n_fermions: 4, ..ModelParams::default() };
        let m = Model::new(p).unwrap();
        let rho = density(&m.fermi_ball().unwrap());
        let target = 4.0 / m.grid().volume();
        assert!(rho.iter().all(|r| (r - target).abs() < 1e-13));
    }

    #[test]
    fn empty_orbital_set_density() {
        let set = OrbitalSet::new(vec![], 0.1);
        assert!(density(&set).is_empty());
    }

    #[test]
    fn zero_alpha_gives_zero_field() {
        let m = Model::new(ModelParams::default()).unwrap();
        let phi = m.field_from_alpha(&FieldAmplitude::zeros(m.modes().len()));
        assert!(phi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_plane_wave() {
        let p = ModelParams { dim: 2, grid_points: 8, ..ModelParams::default() };
        let m = Model::new(p).unwrap();
        let n = [1, -2, 0];
        let pw = m.plane_wave(&n);
        let grad = m.gradient(&pw);
        for (axis, comp) in grad.iter().enumerate() {
            for (g, f) in comp.iter().zip(&pw) {
                assert!((g - f * Complex64::new(0.0, n[axis] as f64)).norm() < 1e-12);
            }
        }
    }
}
