//! Browser bindings for three small one-dimensional runs: a density movie,
//! the coupled-vs-free distance for several couplings, and the trace-norm
//! profile of `p e^{ikx} q` over momenta.
//!
//! Each export is a thin wrapper over a plain function so the numerics can be
//! tested natively. Results are flat `f64` arrays; the layout is given on
//! each function.

use nelson_core::model::density;
use nelson_core::semiclassics::{trace_norm_p_op_q, OneBodyOp, SlaterProjector};
use nelson_core::skg::{solve_free, solve_skg, SkgState};
use nelson_core::{Complex64, FieldAmplitude, Model, ModelParams};
use wasm_bindgen::prelude::*;

/// Largest grid accepted from the page, to keep the tab responsive.
pub const MAX_GRID: usize = 256;
pub const MAX_FERMIONS: usize = 16;

/// Shared controls of the page.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub n_fermions: usize,
    pub grid_points: usize,
    pub delta_n: f64,
    /// Real amplitude of the lowest field mode at t = 0.
    pub alpha: f64,
    pub t_final: f64,
}

impl Controls {
    fn model(&self) -> Result<Model, String> {
        if self.grid_points > MAX_GRID {
            return Err(format!("grid limited to {MAX_GRID} points in the demo"));
        }
        if self.n_fermions > MAX_FERMIONS {
            return Err(format!("at most {MAX_FERMIONS} fermions in the demo"));
        }
        if !(self.t_final > 0.0 && self.t_final <= 10.0) {
            return Err("final time must lie in (0, 10]".into());
        }
        let params = ModelParams {
            n_fermions: self.n_fermions,
            grid_points: self.grid_points,
            delta_n: self.delta_n,
            time_step: 2e-3,
            ..ModelParams::default()
        };
        Model::new(params).map_err(|e| e.to_string())
    }

    fn initial(&self, model: &Model) -> Result<SkgState, String> {
        let orbitals = model.fermi_ball().map_err(|e| e.to_string())?;
        let mut alpha = FieldAmplitude::zeros(model.modes().len());
        let idx = model.mode_index(&[1, 0, 0]).ok_or("lowest field mode is not retained")?;
        alpha.values[idx] = Complex64::new(self.alpha, 0.0);
        Ok(SkgState::new(orbitals, alpha))
    }
}

/// Density frames of the coupled flow. Layout: `frames + 1` rows of
/// `grid_points` values, the first row at t = 0.
pub fn density_frames(c: &Controls, frames: usize) -> Result<Vec<f64>, String> {
    let model = c.model()?;
    let s0 = c.initial(&model)?;
    let frames = frames.clamp(1, 200);
    let traj = solve_skg(&s0, c.t_final, c.t_final / frames as f64, &model).map_err(|e| e.to_string())?;
    Ok(traj.samples.iter().flat_map(|s| density(&s.orbitals)).collect())
}

/// Per-particle trace distance between the coupled and free flows, for
/// each coupling in `deltas`. Layout: a row of `samples + 1` times followed
/// by one row of distances per coupling.
pub fn distance_curves(c: &Controls, deltas: &[f64], samples: usize) -> Result<Vec<f64>, String> {
    let samples = samples.clamp(1, 100);
    let interval = c.t_final / samples as f64;
    let mut out = Vec::new();
    for (i, &delta_n) in deltas.iter().enumerate() {
        let c = Controls { delta_n, ..*c };
        let model = c.model()?;
        let s0 = c.initial(&model)?;
        let coupled = solve_skg(&s0, c.t_final, interval, &model).map_err(|e| e.to_string())?;
        let free = solve_free(&s0, c.t_final, interval, &model).map_err(|e| e.to_string())?;
        if i == 0 {
            out.extend(coupled.samples.iter().map(|s| s.time));
        }
        let n = c.n_fermions as f64;
        out.extend(coupled.samples.iter().zip(&free.samples).map(|(a, b)| {
            nelson_core::semiclassics::projector_trace_distance(&a.orbitals, &b.orbitals) / n
        }));
    }
    Ok(out)
}

/// `‖p e^{ikx} q‖_Tr` at the final time for `k = 1..=k_max` (lattice units).
/// Layout: `k_max` values followed by the same quantity at t = 0.
pub fn trace_norm_profile(c: &Controls, k_max: usize) -> Result<Vec<f64>, String> {
    let model = c.model()?;
    let s0 = c.initial(&model)?;
    let traj = solve_skg(&s0, c.t_final, c.t_final, &model).map_err(|e| e.to_string())?;
    let k_max = k_max.clamp(1, c.grid_points / 2);
    let profile = |state: &SkgState| -> Result<Vec<f64>, String> {
        let proj = SlaterProjector::new(&state.orbitals).map_err(|e| e.to_string())?;
        Ok((1..=k_max as i64)
            .map(|m| trace_norm_p_op_q(&proj, OneBodyOp::Phase(model.grid().wavevector(&[m, 0, 0])), &model))
            .collect())
    };
    let last = traj.samples.last().ok_or("empty trajectory")?;
    let mut out = profile(last)?;
    out.extend(profile(&traj.samples[0])?);
    Ok(out)
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn density_movie(
    n_fermions: usize,
    grid_points: usize,
    delta_n: f64,
    alpha: f64,
    t_final: f64,
    frames: usize,
) -> Result<Vec<f64>, JsValue> {
    js(density_frames(&Controls { n_fermions, grid_points, delta_n, alpha, t_final }, frames))
}

#[wasm_bindgen]
pub fn coupling_distances(
    n_fermions: usize,
    grid_points: usize,
    alpha: f64,
    t_final: f64,
    deltas: Vec<f64>,
    samples: usize,
) -> Result<Vec<f64>, JsValue> {
    js(distance_curves(&Controls { n_fermions, grid_points, delta_n: 0.0, alpha, t_final }, &deltas, samples))
}

#[wasm_bindgen]
pub fn semiclassical_profile(
    n_fermions: usize,
    grid_points: usize,
    delta_n: f64,
    alpha: f64,
    t_final: f64,
    k_max: usize,
) -> Result<Vec<f64>, JsValue> {
    js(trace_norm_profile(&Controls { n_fermions, grid_points, delta_n, alpha, t_final }, k_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn controls() -> Controls {
        Controls { n_fermions: 3, grid_points: 32, delta_n: 0.5, alpha: 1.0, t_final: 0.4 }
    }

    #[test]
    fn frames_hold_n_particles() {
        let c = controls();
        let frames = density_frames(&c, 4).unwrap();
        assert_eq!(frames.len(), 5 * 32);
        let dx = 2.0 * std::f64::consts::PI / 32.0;
        for row in frames.chunks(32) {
            let mass: f64 = row.iter().sum::<f64>() * dx;
            assert!((mass - 3.0).abs() < 1e-9, "{mass}");
        }
    }

    #[test]
    fn distance_rows_follow_the_times() {
        let c = controls();
        let out = distance_curves(&c, &[0.4, 0.1], 4).unwrap();
        assert_eq!(out.len(), 3 * 5);
        assert_eq!(out[5], 0.0);
        assert!(out[9] > out[14] && out[14] > 0.0);
    }

    #[test]
    fn fermi_ball_profile_is_bounded_by_rank() {
        let c = controls();
        let out = trace_norm_profile(&c, 6).unwrap();
        assert_eq!(out.len(), 12);
        // a Fermi ball of 3 modes: p e^{ikx} q has rank min(k, 3)
        for (m, v) in out[6..].iter().enumerate() {
            assert!((v - (m + 1).min(3) as f64).abs() < 1e-9, "k={} {v}", m + 1);
        }
        assert!(out[..6].iter().all(|v| *v <= 3.0 + 1e-9));
    }

    #[test]
    fn oversized_inputs_are_rejected() {
        let c = Controls { grid_points: 1024, ..controls() };
        assert!(density_frames(&c, 4).is_err());
        let c = Controls { t_final: -1.0, ..controls() };
        assert!(trace_norm_profile(&c, 2).is_err());
    }
}
