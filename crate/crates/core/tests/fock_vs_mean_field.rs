//! The Fock model and the mean-field equations are built from the same
//! lattice conventions; on product states several quantities must agree
//! exactly.

use nelson_core::fock::{
    build_hamiltonian, mode_expectations, prepare_slater_coherent, Evolution, FockSpace, Propagator,
};
use nelson_core::skg::{mean_field_energy, SkgFlags, SkgSolver, SkgState};
use nelson_core::{Complex64, FieldAmplitude, Model, ModelParams};

fn space(n_max: usize) -> FockSpace {
    let params = ModelParams { grid_points: 8, cutoff: 1.0, fock_n_max: n_max, ..ModelParams::default() };
    FockSpace::new(&Model::new(params).unwrap(), 1_000_000).unwrap()
}

fn perturbed_orbitals(model: &Model) -> nelson_core::OrbitalSet {
    // Fermi ball pushed through a short frozen-potential evolution so the
    // density is not uniform.
    let mut alpha = FieldAmplitude::zeros(model.modes().len());
    alpha.values[0] = Complex64::new(0.6, 0.2);
    let s0 = SkgState::new(model.fermi_ball().unwrap(), alpha.clone());
    let solver = SkgSolver::frozen(model, &alpha).with_time_step(0.01);
    solver.solve(&s0, 0.3, 0.3).unwrap().samples.last().unwrap().orbitals.clone()
}

fn small_alpha(model: &Model) -> FieldAmplitude {
    let mut alpha = FieldAmplitude::zeros(model.modes().len());
    alpha.values[0] = Complex64::new(0.02, -0.01);
    alpha.values[2] = Complex64::new(-0.015, 0.0);
    alpha
}

#[test]
fn energy_of_product_state_matches_mean_field_functional() {
    let s = space(8);
    let model = s.model();
    let orbitals = perturbed_orbitals(model);
    let alpha = small_alpha(model);
    let prep = prepare_slater_coherent(&s, &orbitals, &alpha, 1e-9).unwrap();
    let h = build_hamiltonian(&s);
    let fock = h.expectation(&prep.state);
    let mf = mean_field_energy(model, &SkgState::new(orbitals, alpha));
    assert!(prep.truncation_weight < 1e-12);
    assert!((fock - mf).abs() < 1e-9 * mf.abs().max(1.0), "fock {fock} vs mean field {mf}");
}

#[test]
fn field_amplitude_velocity_matches_at_time_zero() {
    // d/dt ⟨a_κ⟩ = -i N^{-1/3} (δ ω ⟨a_κ⟩ + g_κ ⟨ρ̂_κ†⟩), which on a product
    // state equals N^{2/3} Δk^{d/2} dα/dt of the mean-field equation.
    let s = space(8);
    let model = s.model();
    let orbitals = perturbed_orbitals(model);
    let alpha = small_alpha(model);
    let prep = prepare_slater_coherent(&s, &orbitals, &alpha, 1e-9).unwrap();
    let h = build_hamiltonian(&s);
    let evo = Evolution::new(&s, &h, Propagator::Krylov).unwrap();
    let tau = 1e-4;
    let (plus, _) = evo.advance(&prep.state, tau).unwrap();
    let (minus, _) = evo.advance(&prep.state, -tau).unwrap();
    let a_plus = mode_expectations(&s, &plus);
    let a_minus = mode_expectations(&s, &minus);

    let solver = SkgSolver::coupled(model, SkgFlags::default()).with_time_step(tau);
    let s0 = SkgState::new(orbitals, alpha);
    let fwd = solver.step(&s0).unwrap();
    let bwd = SkgSolver::coupled(model, SkgFlags::default()).with_time_step(-tau).step(&s0).unwrap();
    let scale = model.params().n_pow(2.0 / 3.0) * model.mode_weight().sqrt();
    for k in 0..model.modes().len() {
        let fock_rate = (a_plus[k] - a_minus[k]) / (2.0 * tau);
        let mf_rate = (fwd.alpha.values[k] - bwd.alpha.values[k]) / (2.0 * tau) * scale;
        assert!((fock_rate - mf_rate).norm() < 1e-6, "mode {k}: {fock_rate} vs {mf_rate}");
    }
}
