//! The six experiments. Each `run_*` function computes its tables without
//! touching the filesystem; [`execute`] writes them and the manifest.

use std::io::Write;
use std::path::Path;

use nelson_core::fock::{
    beta_report, build_hamiltonian, ehrenfest_check, lemma10_margins, lemma5_check, lemma6_check,
    orbital_coefficients, prepare_slater_coherent, BetaReport, EhrenfestRow, Evolution, FockSpace, FockTrajectory,
    Lemma10Margins, Propagator, DENSE_LIMIT,
};
use nelson_core::io::{
    save_trajectory, sidecar_path, write_beta_reports, write_snapshot, write_step_reports, write_trace_norms,
    SnapshotHeader,
};
use nelson_core::linalg::random_unitary;
use nelson_core::semiclassics::{
    fit_gaussian_growth, projector_trace_distance, semiclassical_scan, summarize_scan, GrowthFit, ScanRow,
    ScanSummary,
};
use nelson_core::skg::{solve_free, SkgFlags, SkgSolver, SkgState, Trajectory};
use nelson_core::{Complex64, FieldAmplitude, Model, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{AlphaSpec, Experiment, ExperimentConfig, OrbitalSpec, PropagatorChoice};
use crate::error::BenchError;
use crate::manifest::{now, sha256_hex, RunDir, RunManifest};

type Result<T> = std::result::Result<T, BenchError>;

pub fn build_model(params: &ModelParams) -> Result<Model> {
    Model::new(params.clone()).map_err(|e| BenchError::Config(e.to_string()))
}

fn last_sample(path: &Path, model: &Model) -> Result<SkgState> {
    let (params, samples) = nelson_core::io::load_trajectory(path)?;
    let p = model.params();
    if params.grid_points != p.grid_points || params.dim != p.dim || params.box_length != p.box_length {
        return Err(BenchError::Config(format!("{} was written on a different grid", path.display())));
    }
    samples.into_iter().last().ok_or_else(|| BenchError::Config(format!("{} holds no samples", path.display())))
}

/// Initial mean-field state described by the config.
pub fn initial_state(cfg: &ExperimentConfig, model: &Model) -> Result<SkgState> {
    let orbitals = match &cfg.initial.orbitals {
        OrbitalSpec::FermiBall => model.fermi_ball()?,
        OrbitalSpec::File { path } => last_sample(path, model)?.orbitals,
    };
    if orbitals.len() != model.params().n_fermions {
        return Err(BenchError::Config(format!(
            "{} orbitals for {} fermions",
            orbitals.len(),
            model.params().n_fermions
        )));
    }
    let modes = model.modes().len();
    let alpha = match &cfg.initial.alpha {
        AlphaSpec::Zero => FieldAmplitude::zeros(modes),
        AlphaSpec::File { path } => {
            let a = last_sample(path, model)?.alpha;
            if a.values.len() != modes {
                return Err(BenchError::Config(format!("{} has {} modes, model has {modes}", path.display(), a.values.len())));
            }
            a
        }
        AlphaSpec::SingleMode { lattice, re, im } => {
            let idx = model
                .mode_index(lattice)
                .ok_or_else(|| BenchError::Config(format!("lattice momentum {lattice:?} is not a retained mode")))?;
            let mut a = FieldAmplitude::zeros(modes);
            a.values[idx] = Complex64::new(*re, *im);
            a
        }
    };
    Ok(SkgState::new(orbitals, alpha))
}

/// Number of solver steps between samples.
fn stride(cfg: &ExperimentConfig) -> u64 {
    ((cfg.sampling.interval / cfg.params.time_step).round() as u64).max(1)
}

fn coupled(model: &Model, s0: &SkgState, t_final: f64, interval: f64) -> Result<Trajectory> {
    Ok(SkgSolver::coupled(model, SkgFlags::default()).solve(s0, t_final, interval)?)
}

pub struct SkgRunOutput {
    pub model: Model,
    pub trajectory: Trajectory,
}

pub fn run_skg(cfg: &ExperimentConfig) -> Result<SkgRunOutput> {
    let model = build_model(&cfg.params)?;
    let s0 = initial_state(cfg, &model)?;
    let trajectory = coupled(&model, &s0, cfg.sampling.t_final, cfg.sampling.interval)?;
    Ok(SkgRunOutput { model, trajectory })
}

pub struct FreeCompareOutput {
    pub coupled: Trajectory,
    pub free: Trajectory,
    /// `(t, ‖p^t - p̃^t‖_Tr)`
    pub distances: Vec<(f64, f64)>,
}

fn compare(model: &Model, s0: &SkgState, t_final: f64, interval: f64) -> Result<FreeCompareOutput> {
    let coupled = coupled(model, s0, t_final, interval)?;
    let free = solve_free(s0, t_final, interval, model)?;
    let distances = coupled
        .samples
        .iter()
        .zip(&free.samples)
        .map(|(a, b)| (a.time, projector_trace_distance(&a.orbitals, &b.orbitals)))
        .collect();
    Ok(FreeCompareOutput { coupled, free, distances })
}

pub fn run_free(cfg: &ExperimentConfig) -> Result<FreeCompareOutput> {
    let model = build_model(&cfg.params)?;
    let s0 = initial_state(cfg, &model)?;
    compare(&model, &s0, cfg.sampling.t_final, cfg.sampling.interval)
}

pub struct ScanOutput {
    pub trajectory: Trajectory,
    pub rows: Vec<ScanRow>,
    pub summary: Vec<ScanSummary>,
    pub growth: Option<GrowthFit>,
}

pub fn run_semiclassical_scan(cfg: &ExperimentConfig) -> Result<ScanOutput> {
    let SkgRunOutput { model, trajectory } = run_skg(cfg)?;
    let k_list: Vec<_> = cfg.scan.k_list.iter().map(|n| model.grid().wavevector(n)).collect();
    let rows = semiclassical_scan(&trajectory.samples, &k_list, &model)?;
    let summary = if k_list.is_empty() { Vec::new() } else { summarize_scan(&rows, model.params().n_fermions) };
    let times: Vec<f64> = summary.iter().map(|s| s.time).collect();
    let combined: Vec<f64> = summary.iter().map(|s| s.combined).collect();
    let growth = fit_gaussian_growth(&times, &combined);
    Ok(ScanOutput { trajectory, rows, summary, growth })
}

fn propagator(choice: PropagatorChoice) -> Propagator {
    match choice {
        PropagatorChoice::Auto => Propagator::Auto,
        PropagatorChoice::Krylov => Propagator::Krylov,
        PropagatorChoice::Dense => Propagator::Dense,
    }
}

/// Equally spaced positions along the first axis.
fn probe_points(model: &Model, count: usize) -> Vec<[f64; 3]> {
    let l = model.params().box_length;
    (0..count).map(|i| [i as f64 * l / count as f64, 0.0, 0.0]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockSummary {
    pub dim: usize,
    pub truncation_weight: f64,
    pub norm_drift: f64,
    pub energy_drift: f64,
    pub substeps: usize,
    pub max_gram_deviation: f64,
    pub lemma5_max_ratio: f64,
    pub lemma6_max_commutator: f64,
    pub lemma6_sum_identity_error: f64,
    pub lemma6_idempotency_error: f64,
}

pub struct FockVerifyOutput {
    pub space: FockSpace,
    pub fock: FockTrajectory,
    pub mean_field: Trajectory,
    pub beta: Vec<(f64, BetaReport, Lemma10Margins)>,
    pub ehrenfest: Vec<EhrenfestRow>,
    pub summary: FockSummary,
}

pub fn run_fock_verify(cfg: &ExperimentConfig) -> Result<FockVerifyOutput> {
    let model = build_model(&cfg.params)?;
    let s0 = initial_state(cfg, &model)?;
    let space = FockSpace::new(&model, cfg.fock.budget)?;
    let prep = prepare_slater_coherent(&space, &s0.orbitals, &s0.alpha, cfg.fock.truncation_threshold)?;
    let h = build_hamiltonian(&space);

    // sample exactly on the mean-field step grid so both flows share times
    let interval = stride(cfg) as f64 * cfg.params.time_step;
    let t_final = cfg.sampling.t_final;
    if ((t_final / interval).round() * interval - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(BenchError::Config(format!(
            "t_final {t_final} is not a multiple of the sample interval {interval}"
        )));
    }
    let evo = Evolution::new(&space, &h, propagator(cfg.fock.propagator))?;
    let fock = evo.propagate(&prep.state, t_final, interval)?;
    let mean_field = coupled(&model, &s0, t_final, interval)?;
    if fock.times.len() != mean_field.samples.len() {
        return Err(BenchError::Numerical("Fock and mean-field samples are misaligned".into()));
    }

    let beta: Vec<(f64, BetaReport, Lemma10Margins)> = fock
        .states
        .iter()
        .zip(&mean_field.samples)
        .map(|(psi, s)| {
            let coeffs = orbital_coefficients(&space, &s.orbitals);
            let r = beta_report(&space, psi, &coeffs, &s.alpha);
            let m = lemma10_margins(&r);
            (s.time, r, m)
        })
        .collect();
    let ehrenfest = if fock.states.len() >= 3 {
        ehrenfest_check(&space, &h, &fock, &probe_points(&model, cfg.fock.ehrenfest_points))?
    } else {
        Vec::new()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lemma5 = lemma5_check(cfg.fock.lemma5_trials, 4, 3, 2, cfg.seed)?;
    let n = model.params().n_fermions;
    let rotation = random_unitary(n, &mut rng);
    let lemma6 = lemma6_check(space.basis(), &prep.coefficients, &rotation);

    let summary = FockSummary {
        dim: space.dim(),
        truncation_weight: prep.truncation_weight,
        norm_drift: fock.norm_drift,
        energy_drift: fock.energy_drift,
        substeps: fock.substeps,
        max_gram_deviation: mean_field.reports.iter().map(|r| r.gram_deviation).fold(0.0, f64::max),
        lemma5_max_ratio: lemma5.max_ratio,
        lemma6_max_commutator: lemma6.max_commutator,
        lemma6_sum_identity_error: lemma6.sum_identity_error,
        lemma6_idempotency_error: lemma6.idempotency_error,
    };
    Ok(FockVerifyOutput { space, fock, mean_field, beta, ehrenfest, summary })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub delta_n: f64,
    pub time: f64,
    /// `N^{-1} ‖p^t - p̃^t‖_Tr`
    pub trace_distance: f64,
}

pub struct ScalingOutput {
    pub rows: Vec<ScalingRow>,
    /// `(δ_i, δ_{i+1}, d(δ_i)/d(δ_{i+1}))` at the final time.
    pub ratios: Vec<(f64, f64, f64)>,
}

pub fn run_theorem2_scaling(cfg: &ExperimentConfig) -> Result<ScalingOutput> {
    let mut rows = Vec::new();
    let mut finals = Vec::new();
    for &delta in &cfg.theorem2.deltas {
        let params = ModelParams { delta_n: delta, ..cfg.params.clone() };
        let model = build_model(&params)?;
        let s0 = initial_state(cfg, &model)?;
        let out = compare(&model, &s0, cfg.sampling.t_final, cfg.sampling.interval)?;
        let n = params.n_fermions as f64;
        for &(time, d) in &out.distances {
            rows.push(ScalingRow { delta_n: delta, time, trace_distance: d / n });
        }
        finals.push(out.distances.last().map(|x| x.1 / n).unwrap_or(0.0));
    }
    let deltas = &cfg.theorem2.deltas;
    let ratios = (1..deltas.len())
        .map(|i| (deltas[i - 1], deltas[i], finals[i - 1] / finals[i]))
        .collect();
    Ok(ScalingOutput { rows, ratios })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    /// Distance to the run with half the step (absent for the finest).
    pub self_error: Option<f64>,
    pub order: Option<f64>,
    /// Largest second-order-form residual over the samples.
    pub secondorder_residual: f64,
    pub residual_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockConvergenceRow {
    pub spacing: f64,
    /// Ehrenfest residual at the common probe time.
    pub ehrenfest_residual: f64,
    pub truncation_defect: f64,
    pub rhs_scale: f64,
    pub order: Option<f64>,
    /// Distance of the Krylov state from the dense propagator (dense only
    /// when the dimension allows).
    pub krylov_error: Option<f64>,
}

pub struct ConvergenceOutput {
    pub rows: Vec<ConvergenceRow>,
    pub fock_rows: Vec<FockConvergenceRow>,
    /// True when an error sequence fails to decrease.
    pub non_monotone: bool,
}

/// `√(Σ_j ‖φ_j - ψ_j‖² + Δk^d Σ_κ |α_κ - β_κ|²)`.
pub fn state_distance(a: &SkgState, b: &SkgState, model: &Model) -> f64 {
    let dv = model.grid().cell_volume();
    let orb: f64 = a
        .orbitals
        .phi
        .iter()
        .zip(&b.orbitals.phi)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>() * dv)
        .sum();
    let w = model.mode_weight();
    let field: f64 = a.alpha.values.iter().zip(&b.alpha.values).map(|(u, v)| (u - v).norm_sqr() * w).sum();
    (orb + field).sqrt()
}

fn orders(values: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    for i in 1..values.len() {
        if values[i] > 0.0 && values[i - 1] > 0.0 {
            out[i] = Some((values[i - 1] / values[i]).log2());
        }
    }
    out
}

pub fn run_convergence_study(cfg: &ExperimentConfig) -> Result<ConvergenceOutput> {
    let model = build_model(&cfg.params)?;
    let s0 = initial_state(cfg, &model)?;
    let t = cfg.sampling.t_final;
    let mut finals = Vec::new();
    let mut residuals = Vec::new();
    for &dt in &cfg.convergence.dts {
        let solver = SkgSolver::coupled(&model, SkgFlags::default()).with_time_step(dt);
        let traj = solver.solve(&s0, t, cfg.sampling.interval)?;
        residuals.push(traj.reports.iter().filter_map(|r| r.secondorder_residual).fold(0.0, f64::max));
        finals.push(traj.samples.last().cloned().expect("solve always returns the initial sample"));
    }
    let errors: Vec<f64> = finals.windows(2).map(|w| state_distance(&w[0], &w[1], &model)).collect();
    let error_orders = orders(&errors);
    let residual_orders = orders(&residuals);
    let mut non_monotone = errors.windows(2).any(|w| w[1] >= w[0]) || residuals.windows(2).any(|w| w[1] >= w[0]);
    let rows = cfg
        .convergence
        .dts
        .iter()
        .enumerate()
        .map(|(i, &dt)| ConvergenceRow {
            dt,
            self_error: errors.get(i).copied(),
            order: error_orders.get(i).copied().flatten(),
            secondorder_residual: residuals[i],
            residual_order: residual_orders[i],
        })
        .collect();

    let fock_rows = if cfg.convergence.fock_spacings.is_empty() {
        Vec::new()
    } else {
        fock_refinement(cfg, &model, &s0)?
    };
    non_monotone |= fock_rows.windows(2).any(|w| w[1].ehrenfest_residual >= w[0].ehrenfest_residual);
    Ok(ConvergenceOutput { rows, fock_rows, non_monotone })
}

/// Ehrenfest residual under refinement of the sample spacing, read off at
/// the midpoint time (a multiple of every spacing).
fn fock_refinement(cfg: &ExperimentConfig, model: &Model, s0: &SkgState) -> Result<Vec<FockConvergenceRow>> {
    let space = FockSpace::new(model, cfg.fock.budget)?;
    let prep = prepare_slater_coherent(&space, &s0.orbitals, &s0.alpha, cfg.fock.truncation_threshold)?;
    let h = build_hamiltonian(&space);
    let krylov = Evolution::new(&space, &h, Propagator::Krylov)?;
    let dense = (space.dim() <= DENSE_LIMIT).then(|| Evolution::new(&space, &h, Propagator::Dense)).transpose()?;
    let t_final = cfg.convergence.fock_t_final;
    let probe = t_final / 2.0;
    let points = probe_points(model, cfg.fock.ehrenfest_points);
    let mut rows = Vec::new();
    for &spacing in &cfg.convergence.fock_spacings {
        let traj = krylov.propagate(&prep.state, t_final, spacing)?;
        let checks = ehrenfest_check(&space, &h, &traj, &points)?;
        let row = checks
            .iter()
            .min_by(|a, b| (a.time - probe).abs().total_cmp(&(b.time - probe).abs()))
            .ok_or_else(|| BenchError::Numerical("no interior samples".into()))?;
        let krylov_error = match &dense {
            Some(d) => {
                let (exact, _) = d.advance(&prep.state, t_final)?;
                let last = traj.states.last().expect("trajectory holds the initial state");
                Some(last.iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt())
            }
            None => None,
        };
        rows.push(FockConvergenceRow {
            spacing,
            ehrenfest_residual: row.residual,
            truncation_defect: row.truncation_defect,
            rhs_scale: row.rhs_scale,
            order: None,
            krylov_error,
        });
    }
    let residuals: Vec<f64> = rows.iter().map(|r| r.ehrenfest_residual).collect();
    for (r, o) in rows.iter_mut().zip(orders(&residuals)) {
        r.order = o;
    }
    Ok(rows)
}

fn fmt(v: f64) -> String {
    v.to_string()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn write_csv(w: &mut impl Write, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| BenchError::Io(e.to_string());
    out.write_record(header).map_err(io)?;
    for r in rows {
        out.write_record(&r).map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

fn save_binary(run: &mut RunDir, name: &str, params: &ModelParams, samples: &[SkgState]) -> Result<()> {
    let path = run.root().join(name);
    save_trajectory(&path, params, samples)?;
    run.register(name);
    let sidecar = sidecar_path(&path);
    run.register(&sidecar.file_name().expect("sidecar has a file name").to_string_lossy());
    Ok(())
}

/// Runs the configured experiment, writes its files into `out` and, on
/// success only, the manifest.
pub fn execute(cfg: &ExperimentConfig, out: &Path, binary: bool) -> Result<RunManifest> {
    let started_at = now();
    let mut run = RunDir::create(out)?;
    match cfg.experiment {
        Experiment::SkgRun => {
            let o = run_skg(cfg)?;
            run.write("skg_reports.csv", |w| Ok(write_step_reports(w, &o.trajectory.reports)?))?;
            if binary {
                save_binary(&mut run, "skg_trajectory.bin", &cfg.params, &o.trajectory.samples)?;
            }
        }
        Experiment::FreeCompare => {
            let o = run_free(cfg)?;
            let n = cfg.params.n_fermions as f64;
            run.write("free_compare.csv", |w| {
                write_csv(
                    w,
                    &["t", "trace_distance", "trace_distance_per_particle"],
                    o.distances.iter().map(|&(t, d)| vec![fmt(t), fmt(d), fmt(d / n)]),
                )
            })?;
            run.write("skg_reports.csv", |w| Ok(write_step_reports(w, &o.coupled.reports)?))?;
            run.write("free_reports.csv", |w| Ok(write_step_reports(w, &o.free.reports)?))?;
            if binary {
                save_binary(&mut run, "skg_trajectory.bin", &cfg.params, &o.coupled.samples)?;
                save_binary(&mut run, "free_trajectory.bin", &cfg.params, &o.free.samples)?;
            }
        }
        Experiment::SemiclassicalScan => {
            let o = run_semiclassical_scan(cfg)?;
            run.write("trace_norms.csv", |w| Ok(write_trace_norms(w, &o.rows)?))?;
            run.write("scan_summary.csv", |w| {
                write_csv(
                    w,
                    &["t", "sup_scaled_tn_peq", "tn_pgradq", "combined"],
                    o.summary.iter().map(|s| vec![fmt(s.time), fmt(s.sup_scaled_peq), fmt(s.tn_pgradq), fmt(s.combined)]),
                )
            })?;
            run.write("growth_fit.csv", |w| {
                write_csv(
                    w,
                    &["amplitude", "rate", "log_rms_residual"],
                    o.growth.iter().map(|g| vec![fmt(g.amplitude), fmt(g.rate), fmt(g.log_rms_residual)]),
                )
            })?;
            run.write("skg_reports.csv", |w| Ok(write_step_reports(w, &o.trajectory.reports)?))?;
            if binary {
                save_binary(&mut run, "skg_trajectory.bin", &cfg.params, &o.trajectory.samples)?;
            }
        }
        Experiment::FockVerify => {
            let o = run_fock_verify(cfg)?;
            run.write("fock_beta.csv", |w| Ok(write_beta_reports(w, &o.beta)?))?;
            run.write("fock_conservation.csv", |w| {
                let e0 = o.fock.energies[0];
                write_csv(
                    w,
                    &["t", "norm_deviation", "energy", "energy_drift"],
                    o.fock.times.iter().zip(&o.fock.states).zip(&o.fock.energies).map(|((t, psi), e)| {
                        let nrm = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                        vec![fmt(*t), fmt(nrm - 1.0), fmt(*e), fmt(e - e0)]
                    }),
                )
            })?;
            run.write("fock_ehrenfest.csv", |w| {
                write_csv(
                    w,
                    &["t", "residual", "rhs_scale", "truncation_defect"],
                    o.ehrenfest
                        .iter()
                        .map(|r| vec![fmt(r.time), fmt(r.residual), fmt(r.rhs_scale), fmt(r.truncation_defect)]),
                )
            })?;
            run.write("fock_summary.csv", |w| {
                let s = &o.summary;
                write_csv(
                    w,
                    &[
                        "dim",
                        "truncation_weight",
                        "norm_drift",
                        "energy_drift",
                        "substeps",
                        "max_gram_deviation",
                        "lemma5_max_ratio",
                        "lemma6_max_commutator",
                        "lemma6_sum_identity_error",
                        "lemma6_idempotency_error",
                    ],
                    [vec![
                        s.dim.to_string(),
                        fmt(s.truncation_weight),
                        fmt(s.norm_drift),
                        fmt(s.energy_drift),
                        s.substeps.to_string(),
                        fmt(s.max_gram_deviation),
                        fmt(s.lemma5_max_ratio),
                        fmt(s.lemma6_max_commutator),
                        fmt(s.lemma6_sum_identity_error),
                        fmt(s.lemma6_idempotency_error),
                    ]],
                )
            })?;
            run.write("skg_reports.csv", |w| Ok(write_step_reports(w, &o.mean_field.reports)?))?;
            if binary {
                let last = o.fock.states.last().expect("trajectory holds the initial state");
                run.write("fock_final.snap", |w| Ok(write_snapshot(w, &SnapshotHeader::of(&o.space), last)?))?;
                save_binary(&mut run, "skg_trajectory.bin", &cfg.params, &o.mean_field.samples)?;
            }
        }
        Experiment::Theorem2Scaling => {
            let o = run_theorem2_scaling(cfg)?;
            run.write("theorem2.csv", |w| {
                write_csv(
                    w,
                    &["delta_n", "t", "trace_distance"],
                    o.rows.iter().map(|r| vec![fmt(r.delta_n), fmt(r.time), fmt(r.trace_distance)]),
                )
            })?;
            run.write("theorem2_ratios.csv", |w| {
                write_csv(
                    w,
                    &["delta_hi", "delta_lo", "ratio"],
                    o.ratios.iter().map(|&(a, b, r)| vec![fmt(a), fmt(b), fmt(r)]),
                )
            })?;
        }
        Experiment::ConvergenceStudy => {
            let o = run_convergence_study(cfg)?;
            run.write("convergence.csv", |w| {
                write_csv(
                    w,
                    &["dt", "self_convergence_error", "order", "secondorder_residual", "residual_order"],
                    o.rows.iter().map(|r| {
                        vec![
                            fmt(r.dt),
                            fmt_opt(r.self_error),
                            fmt_opt(r.order),
                            fmt(r.secondorder_residual),
                            fmt_opt(r.residual_order),
                        ]
                    }),
                )
            })?;
            if !o.fock_rows.is_empty() {
                run.write("fock_convergence.csv", |w| {
                    write_csv(
                        w,
                        &["spacing", "ehrenfest_residual", "truncation_defect", "rhs_scale", "order", "krylov_error"],
                        o.fock_rows.iter().map(|r| {
                            vec![
                                fmt(r.spacing),
                                fmt(r.ehrenfest_residual),
                                fmt(r.truncation_defect),
                                fmt(r.rhs_scale),
                                fmt_opt(r.order),
                                fmt_opt(r.krylov_error),
                            ]
                        }),
                    )
                })?;
            }
            if o.non_monotone {
                eprintln!("warning: an error sequence does not decrease under refinement");
            }
        }
    }
    let manifest = RunManifest {
        experiment: cfg.experiment.name().to_string(),
        config_hash: sha256_hex(cfg.to_toml().as_bytes()),
        seed: cfg.seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_at,
        finished_at: 0.0,
        files: Vec::new(),
    };
    run.finish(manifest)
}

/// [`execute`] on a dedicated pool of `threads` workers.
pub fn execute_with_threads(cfg: &ExperimentConfig, out: &Path, binary: bool, threads: usize) -> Result<RunManifest> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start {threads} threads: {e}")))?;
    pool.install(|| execute(cfg, out, binary))
}
