//! Fermionic Schrödinger–Klein–Gordon integrator.
//!
//! Orbitals obey `i ∂_t φ = (-N^{-1/3} Δ + N^{1/3} Φ) φ` and the field
//! amplitude obeys `i ∂_t α = Ω α + S[ρ]` with `Ω = N^{-1/3} δ_N ω` and
//! `S = N^{-1} (2π)^{d/2} η̃ F[ρ]`. One Strang step is
//!
//! 1. half kinetic step (exact phase in Fourier space),
//! 2. full α step: exact integrating factor, source integrated exactly with ρ
//!    frozen (ρ is invariant under the potential substep),
//! 3. full potential step with Φ built from the average of old and new α,
//! 4. half kinetic step.
//!
//! Every orbital substep is a unitary pointwise phase, so orthonormality is
//! preserved up to roundoff.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{density, FieldAmplitude, Model, OrbitalSet};

/// Gram deviation above which a step is rejected.
pub const MAX_STEP_GRAM_DEVIATION: f64 = 1e-6;

/// Switches for the coupled flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SkgFlags {
    /// Orbitals feel the field Φ.
    pub potential: bool,
    /// The density sources α.
    pub source: bool,
    /// Free rotation `e^{-iΩt}` of α.
    pub rotation: bool,
}

impl Default for SkgFlags {
    fn default() -> Self {
        SkgFlags { potential: true, source: true, rotation: true }
    }
}

impl SkgFlags {
    /// η̃ switched off in both directions; α still rotates freely.
    pub fn decoupled() -> Self {
        SkgFlags { potential: false, source: false, rotation: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkgState {
    pub orbitals: OrbitalSet,
    pub alpha: FieldAmplitude,
    /// Number of steps taken; `time = step · dt`.
    pub step: u64,
    pub time: f64,
}

impl SkgState {
    pub fn new(orbitals: OrbitalSet, alpha: FieldAmplitude) -> Self {
        SkgState { orbitals, alpha, step: 0, time: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub time: f64,
    pub gram_deviation: f64,
    pub alpha_norm: f64,
    /// `‖α^0‖ + ‖η̃‖ t`.
    pub alpha_bound: f64,
    pub energy_drift: Option<f64>,
    /// Max-norm residual of the second-order field equation at this sample.
    pub secondorder_residual: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<SkgState>,
    pub reports: Vec<StepReport>,
}

#[derive(Debug, Clone)]
enum Potential {
    Coupled(SkgFlags),
    /// Potential frozen at Φ(·, 0); α is not evolved.
    Frozen(Vec<f64>),
}

/// Fixed-step integrator bound to one model.
#[derive(Debug, Clone)]
pub struct SkgSolver<'m> {
    model: &'m Model,
    dt: f64,
    potential: Potential,
    half_kinetic: Vec<Complex64>,
}

impl<'m> SkgSolver<'m> {
    /// Coupled solver with the model's time step.
    pub fn coupled(model: &'m Model, flags: SkgFlags) -> Self {
        Self::build(model, model.params().time_step, Potential::Coupled(flags))
    }

    /// Frozen-potential solver; `initial_alpha` fixes Φ(·, 0).
    pub fn frozen(model: &'m Model, initial_alpha: &FieldAmplitude) -> Self {
        let phi0 = model.field_from_alpha(initial_alpha);
        Self::build(model, model.params().time_step, Potential::Frozen(phi0))
    }

    pub fn with_time_step(mut self, dt: f64) -> Self {
        self.dt = dt;
        self.half_kinetic = kinetic_phases(self.model, dt / 2.0);
        self
    }

    fn build(model: &'m Model, dt: f64, potential: Potential) -> Self {
        SkgSolver { model, dt, potential, half_kinetic: kinetic_phases(model, dt / 2.0) }
    }

    pub fn time_step(&self) -> f64 {
        self.dt
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn step(&self, state: &SkgState) -> Result<SkgState> {
        let model = self.model;
        let p = model.params();
        let dt = self.dt;
        let mut orbitals = state.orbitals.clone();
        self.kinetic(&mut orbitals);

        let (alpha, field) = match &self.potential {
            Potential::Coupled(flags) => {
                let source = if flags.source {
                    source_term(model, &density(&orbitals))
                } else {
                    vec![Complex64::new(0.0, 0.0); model.modes().len()]
                };
                let alpha = advance_alpha(model, &state.alpha, &source, dt, flags.rotation);
                let field = flags.potential.then(|| {
                    let avg = FieldAmplitude {
                        values: state
                            .alpha
                            .values
                            .iter()
                            .zip(&alpha.values)
                            .map(|(a, b)| (a + b) * 0.5)
                            .collect(),
                    };
                    model.field_from_alpha(&avg)
                });
                (alpha, field)
            }
            Potential::Frozen(phi0) => (state.alpha.clone(), Some(phi0.clone())),
        };

        if let Some(field) = field {
            let scale = p.n_pow(1.0 / 3.0) * dt;
            let phases: Vec<Complex64> =
                field.iter().map(|v| Complex64::from_polar(1.0, -scale * v)).collect();
            orbitals.phi.par_iter_mut().for_each(|phi| {
                phi.iter_mut().zip(&phases).for_each(|(v, ph)| *v *= ph);
            });
        }
        self.kinetic(&mut orbitals);

        let step = state.step + 1;
        let time = step as f64 * dt;
        let finite = orbitals.is_finite()
            && alpha.values.iter().all(|a| a.re.is_finite() && a.im.is_finite());
        if !finite {
            return Err(Error::NonFinite(time));
        }
        let deviation = orbitals.gram_deviation();
        if deviation > MAX_STEP_GRAM_DEVIATION {
            return Err(Error::Unstable { time, deviation });
        }
        Ok(SkgState { orbitals, alpha, step, time })
    }

    fn kinetic(&self, orbitals: &mut OrbitalSet) {
        let fft = self.model.fft();
        let phases = &self.half_kinetic;
        orbitals.phi.par_iter_mut().for_each(|phi| {
            fft.forward(phi);
            phi.iter_mut().zip(phases).for_each(|(v, ph)| *v *= ph);
            fft.inverse_normalized(phi);
        });
    }

    /// Runs to `t_final`, sampling every `sample_interval` (snapped to whole
    /// steps) and at the final time.
    pub fn solve(&self, initial: &SkgState, t_final: f64, sample_interval: f64) -> Result<Trajectory> {
        let n_steps = steps_for(t_final, self.dt)?;
        let stride = ((sample_interval / self.dt).round() as u64).max(1);
        let model = self.model;
        let alpha0_norm = initial.alpha.norm(model.mode_weight());
        let eta_norm = model.form_factor_norm();
        let coupled = matches!(self.potential, Potential::Coupled(_));
        let e0 = self.energy(initial);

        let report = |state: &SkgState| StepReport {
            time: state.time,
            gram_deviation: state.orbitals.gram_deviation(),
            alpha_norm: state.alpha.norm(model.mode_weight()),
            alpha_bound: alpha0_norm + eta_norm * (state.time - initial.time),
            energy_drift: Some(self.energy(state) - e0),
            secondorder_residual: None,
        };

        let mut traj = Trajectory { samples: vec![initial.clone()], reports: vec![report(initial)] };
        // (report index, α one step before the sample, sampled state)
        let mut pending: Option<(usize, FieldAmplitude, SkgState)> = None;
        let mut current = initial.clone();
        for i in 1..=n_steps {
            let next = self.step(&current)?;
            if let Some((idx, before, at)) = pending.take() {
                let h = self.dt;
                traj.reports[idx].secondorder_residual =
                    Some(second_order_residual(model, &before, &at, &next.alpha, h));
            }
            let before = std::mem::replace(&mut current, next).alpha;
            if i % stride == 0 || i == n_steps {
                traj.reports.push(report(&current));
                traj.samples.push(current.clone());
                if coupled && i < n_steps {
                    pending = Some((traj.reports.len() - 1, before, current.clone()));
                }
            }
        }
        Ok(traj)
    }

    /// Conserved functional of the coupled system,
    /// `Σ_j ⟨φ_j, (-Δ + N^{2/3} Φ) φ_j⟩ + δ_N N^{4/3} Σ_κ Δk^d ω_κ |α_κ|²`.
    /// For the frozen flow the field term is dropped and Φ = Φ(·, 0).
    pub fn energy(&self, state: &SkgState) -> f64 {
        match &self.potential {
            Potential::Coupled(_) => mean_field_energy(self.model, state),
            Potential::Frozen(phi0) => one_body_energy(self.model, &state.orbitals, phi0),
        }
    }
}

fn steps_for(t_final: f64, dt: f64) -> Result<u64> {
    if !(t_final >= 0.0) {
        return Err(Error::InvalidParams(format!("t_final must be >= 0, got {t_final}")));
    }
    let n = (t_final / dt).round();
    if (n * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidParams(format!(
            "t_final {t_final} is not a multiple of the time step {dt}"
        )));
    }
    Ok(n as u64)
}

fn kinetic_phases(model: &Model, tau: f64) -> Vec<Complex64> {
    let scale = model.params().n_pow(-1.0 / 3.0) * tau;
    model.k_squared().iter().map(|k2| Complex64::from_polar(1.0, -scale * k2)).collect()
}

/// `S_κ = N^{-1} (2π)^{d/2} η̃(k_κ) F[ρ](k_κ)`.
pub fn source_term(model: &Model, rho: &[f64]) -> Vec<Complex64> {
    let p = model.params();
    let pref = (2.0 * PI).powf(p.dim as f64 / 2.0) / p.n_fermions as f64;
    model
        .fourier_density(rho)
        .iter()
        .zip(model.modes())
        .map(|(f, m)| f * (pref * m.eta))
        .collect()
}

/// Exact solution of `i ∂_t α = Ω α + S` over `dt` for constant `S`.
fn advance_alpha(
    model: &Model,
    alpha: &FieldAmplitude,
    source: &[Complex64],
    dt: f64,
    rotation: bool,
) -> FieldAmplitude {
    let p = model.params();
    let scale = p.n_pow(-1.0 / 3.0) * p.delta_n;
    let i = Complex64::new(0.0, 1.0);
    let values = model
        .modes()
        .iter()
        .zip(alpha.values.iter().zip(source))
        .map(|(m, (a, s))| {
            let omega = if rotation { scale * m.omega } else { 0.0 };
            let y = omega * dt;
            let rot = Complex64::from_polar(1.0, -y);
            // -i ∫_0^dt e^{-iΩ(dt-u)} du = -(1 - e^{-iy}) / Ω
            let kernel = if y.abs() > 1e-4 {
                -(Complex64::new(1.0, 0.0) - rot) / omega
            } else {
                -i * dt * (Complex64::new(1.0, 0.0) - i * y / 2.0 - y * y / 6.0)
            };
            rot * a + kernel * s
        })
        .collect();
    FieldAmplitude { values }
}

/// `Σ_j ⟨φ_j, (-Δ + N^{2/3} Φ) φ_j⟩`.
pub fn one_body_energy(model: &Model, orbitals: &OrbitalSet, field: &[f64]) -> f64 {
    let p = model.params();
    let kinetic: f64 = orbitals.phi.iter().map(|phi| model.kinetic_expectation(phi)).sum();
    let rho = density(orbitals);
    let potential: f64 =
        rho.iter().zip(field).map(|(r, v)| r * v).sum::<f64>() * model.grid().cell_volume();
    kinetic + p.n_pow(2.0 / 3.0) * potential
}

/// Mean-field energy of the coupled system; equals `⟨H_N⟩` of the
/// corresponding Slater ⊗ coherent product state.
pub fn mean_field_energy(model: &Model, state: &SkgState) -> f64 {
    let p = model.params();
    let field = model.field_from_alpha(&state.alpha);
    let boson: f64 = model
        .modes()
        .iter()
        .zip(&state.alpha.values)
        .map(|(m, a)| m.omega * a.norm_sqr())
        .sum::<f64>()
        * model.mode_weight();
    one_body_energy(model, &state.orbitals, &field) + p.delta_n * p.n_pow(4.0 / 3.0) * boson
}

/// Residual of `[∂_t² + N^{-2/3} δ_N² (-Δ + m²)] Φ
/// + N^{-1/3} δ_N (2π)^{-d/2} Σ_κ Δk^d e^{ik·x} N^{-1} F[ρ](k_κ)`
/// at the middle of three samples spaced by `h`; returns the max over the grid.
pub fn second_order_residual(
    model: &Model,
    alpha_before: &FieldAmplitude,
    at: &SkgState,
    alpha_after: &FieldAmplitude,
    h: f64,
) -> f64 {
    residual_field(model, alpha_before, at, alpha_after, h)
        .iter()
        .fold(0.0, |acc, v| acc.max(v.abs()))
}

fn residual_field(
    model: &Model,
    alpha_before: &FieldAmplitude,
    at: &SkgState,
    alpha_after: &FieldAmplitude,
    h: f64,
) -> Vec<f64> {
    let p = model.params();
    let n = p.n_fermions as f64;
    let minus = model.field_from_alpha(alpha_before);
    let mid = model.field_from_alpha(&at.alpha);
    let plus = model.field_from_alpha(alpha_after);

    let omega2 = FieldAmplitude {
        values: model
            .modes()
            .iter()
            .zip(&at.alpha.values)
            .map(|(m, a)| a * (m.omega * m.omega))
            .collect(),
    };
    let helmholtz = model.field_from_alpha(&omega2);
    let wave = p.n_pow(-2.0 / 3.0) * p.delta_n * p.delta_n;

    let f_rho = model.fourier_density(&density(&at.orbitals));
    let mut coeffs = vec![Complex64::new(0.0, 0.0); model.grid().len()];
    for (m, f) in model.modes().iter().zip(&f_rho) {
        coeffs[m.slot] += f * (model.mode_weight() / n);
    }
    model.fft().inverse(&mut coeffs);
    let src = p.n_pow(-1.0 / 3.0) * p.delta_n * (2.0 * PI).powf(-(p.dim as f64) / 2.0);

    (0..mid.len())
        .map(|x| {
            (plus[x] - 2.0 * mid[x] + minus[x]) / (h * h) + wave * helmholtz[x] + src * coeffs[x].re
        })
        .collect()
}

/// Second-order-form residual at every interior sample of an equally spaced
/// trajectory, as `(time, max_x |residual|)`.
pub fn ehrenfest_residual_effective(samples: &[SkgState], model: &Model) -> Result<Vec<(f64, f64)>> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: samples.len() });
    }
    let h = samples[1].time - samples[0].time;
    for w in samples.windows(2) {
        if ((w[1].time - w[0].time) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::InvalidParams("samples are not equally spaced".into()));
        }
    }
    Ok(samples
        .windows(3)
        .map(|w| (w[1].time, second_order_residual(model, &w[0].alpha, &w[1], &w[2].alpha, h)))
        .collect())
}

pub fn step_skg(state: &SkgState, dt: f64, model: &Model) -> Result<SkgState> {
    SkgSolver::coupled(model, SkgFlags::default()).with_time_step(dt).step(state)
}

pub fn solve_skg(initial: &SkgState, t_final: f64, sample_interval: f64, model: &Model) -> Result<Trajectory> {
    SkgSolver::coupled(model, SkgFlags::default()).solve(initial, t_final, sample_interval)
}

pub fn solve_free(initial: &SkgState, t_final: f64, sample_interval: f64, model: &Model) -> Result<Trajectory> {
    SkgSolver::frozen(model, &initial.alpha).solve(initial, t_final, sample_interval)
}

/// Fermi-ball orbitals of the model.
pub fn build_fermi_ball(model: &Model) -> Result<OrbitalSet> {
    model.fermi_ball()
}
