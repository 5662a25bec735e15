//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p nelson-bench --test acceptance`.

#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DVector;
use nelson_bench::experiments::{
    build_model, initial_state, run_convergence_study, run_fock_verify, run_theorem2_scaling,
};
use nelson_bench::{execute_with_threads, Experiment, ExperimentConfig};
use nelson_core::fock::{build_hamiltonian, lemma5_check, lemma6_check, orbital_coefficients, Evolution, FockSpace, Propagator};
use nelson_core::linalg::random_unitary;
use nelson_core::semiclassics::{
    commutator_trace_norm, cos_density_integral, diagonalize_p_cos, trace_norm_p_op_q, OneBodyOp, SlaterProjector,
};
use nelson_core::skg::solve_skg;
use nelson_core::{Model, ModelParams, OrbitalSet};
use oracles::{c, dense_phase, dense_projector, expm, random_orbitals, smooth_orbitals, trace_norm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Outcome of one criterion: pass flag and a one-line measurement summary.
type Verdict = (bool, String);

fn fail(e: impl std::fmt::Display) -> Verdict {
    (false, format!("error: {e}"))
}

fn conservation() -> Verdict {
    let cfg = config("desk.toml");
    let start = Instant::now();
    let out = match run_fock_verify(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let elapsed = start.elapsed();
    let s = &out.summary;
    let ok = s.max_gram_deviation < 1e-8
        && s.norm_drift < 1e-10
        && s.energy_drift < 1e-9
        && elapsed < Duration::from_secs(120)
        && cfg.params.time_step == 1e-3
        && cfg.sampling.t_final == 1.0;
    (
        ok,
        format!(
            "dim {}, gram {:.1e}, norm drift {:.1e}, energy drift {:.1e}, {:.1}s",
            s.dim,
            s.max_gram_deviation,
            s.norm_drift,
            s.energy_drift,
            elapsed.as_secs_f64()
        ),
    )
}

fn shipped_configs() -> Vec<(String, ExperimentConfig)> {
    let mut names: Vec<String> = std::fs::read_dir(configs_dir())
        .expect("configs directory")
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".toml"))
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), config(&n))).collect()
}

fn field_bound() -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    let mut count = 0;
    for (name, cfg) in shipped_configs() {
        let variants: Vec<ModelParams> = if cfg.experiment == Experiment::Theorem2Scaling {
            cfg.theorem2.deltas.iter().map(|&d| ModelParams { delta_n: d, ..cfg.params.clone() }).collect()
        } else {
            vec![cfg.params.clone()]
        };
        for params in variants {
            let model = match build_model(&params) {
                Ok(m) => m,
                Err(e) => return fail(format!("{name}: {e}")),
            };
            let s0 = match initial_state(&cfg, &model) {
                Ok(s) => s,
                Err(e) => return fail(format!("{name}: {e}")),
            };
            let traj = match solve_skg(&s0, cfg.sampling.t_final, cfg.sampling.interval, &model) {
                Ok(t) => t,
                Err(e) => return fail(format!("{name}: {e}")),
            };
            for r in &traj.reports {
                worst = worst.max(r.alpha_norm - r.alpha_bound);
                samples += 1;
            }
        }
        count += 1;
    }
    (worst <= 1e-6 && count >= 6, format!("{count} configs, {samples} samples, max excess {worst:.3e}"))
}

fn lemma10_and_initial_beta() -> (Verdict, Verdict) {
    let cfg = config("desk.toml");
    match run_fock_verify(&cfg) {
        Ok(out) => {
            let margin = out.beta.iter().map(|(_, _, m)| m.min()).fold(f64::INFINITY, f64::min);
            let beta0 = out.beta[0].1.beta_total;
            (
                (margin >= -1e-8, format!("{} samples, min margin {margin:.3e}", out.beta.len())),
                (beta0 <= 1e-6, format!("beta_total(0) = {beta0:.3e}")),
            )
        }
        Err(e) => (fail(&e), fail(&e)),
    }
}

fn theorem2() -> Verdict {
    let cfg = config("theorem2.toml");
    let p = &cfg.params;
    let shape = p.n_fermions == 4
        && p.cutoff == 2.0
        && p.dim == 1
        && p.grid_points == 64
        && cfg.sampling.t_final == 1.0
        && cfg.theorem2.deltas == [0.4, 0.2, 0.1];
    let start = Instant::now();
    let out = match run_theorem2_scaling(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let elapsed = start.elapsed();
    let ok = shape
        && elapsed < Duration::from_secs(60)
        && out.ratios.iter().all(|r| (1.6..=2.4).contains(&r.2));
    let ratios: Vec<String> = out.ratios.iter().map(|r| format!("{:.4}", r.2)).collect();
    (ok, format!("ratios [{}], {:.2}s", ratios.join(", "), elapsed.as_secs_f64()))
}

fn random_k(model: &Model, rng: &mut ChaCha8Rng) -> [f64; 3] {
    let g = model.params().grid_points as i64;
    let mut m = 0;
    while m == 0 {
        m = rng.random_range(-(g - 1)..g);
    }
    [m as f64 * model.params().dk(), 0.0, 0.0]
}

fn orbital_cases(seed: u64, count: usize) -> Vec<(Model, OrbitalSet, [f64; 3])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = 1 + i % 5;
            let model = Model::new(ModelParams { n_fermions: n, grid_points: 16, ..ModelParams::default() }).unwrap();
            let orbitals =
                if i % 2 == 0 { random_orbitals(&model, n, &mut rng) } else { smooth_orbitals(&model, n, &mut rng) };
            let k = random_k(&model, &mut rng);
            (model, orbitals, k)
        })
        .collect()
}

fn semiclassics_oracle() -> Verdict {
    let cases = orbital_cases(2024, 60);
    let mut worst: f64 = 0.0;
    for (model, orbitals, k) in &cases {
        let proj = SlaterProjector::new(orbitals).unwrap();
        let p = dense_projector(orbitals);
        let q = oracles::CMat::identity(p.nrows(), p.nrows()) - &p;
        let e = dense_phase(model, k);
        worst = worst.max((trace_norm_p_op_q(&proj, OneBodyOp::Phase(*k), model) - trace_norm(&(&p * &e * &q))).abs());
        worst = worst.max((commutator_trace_norm(&proj, k, model) - trace_norm(&(&p * &e - &e * &p))).abs());
    }
    let model = Model::new(ModelParams { n_fermions: 1, grid_points: 16, ..ModelParams::default() }).unwrap();
    let mut analytic: f64 = 0.0;
    for n in [0, 2, -3] {
        let pw = OrbitalSet::new(vec![model.plane_wave(&[n, 0, 0])], model.grid().cell_volume());
        let proj = SlaterProjector::new(&pw).unwrap();
        for m in [1, -1, 3, 6] {
            let k = [m as f64 * model.params().dk(), 0.0, 0.0];
            analytic = analytic.max((trace_norm_p_op_q(&proj, OneBodyOp::Phase(k), &model) - 1.0).abs());
            analytic = analytic.max((commutator_trace_norm(&proj, &k, &model) - 2.0).abs());
        }
    }
    (
        worst < 1e-8 && analytic < 1e-8 && cases.len() >= 50,
        format!("{} cases, max deviation {worst:.2e}; plane waves off by {analytic:.1e}", cases.len()),
    )
}

fn cos_trick() -> Verdict {
    let cases = orbital_cases(77, 60);
    let mut max_abs: f64 = 0.0;
    let mut sum_err: f64 = 0.0;
    for (model, orbitals, k) in &cases {
        let proj = SlaterProjector::new(orbitals).unwrap();
        let spec = diagonalize_p_cos(&proj, k, model);
        max_abs = spec.eigenvalues.iter().fold(max_abs, |a, l| a.max(l.abs()));
        let sum: f64 = spec.eigenvalues.iter().sum();
        sum_err = sum_err.max((sum - cos_density_integral(orbitals, k, model)).abs());
    }
    (
        max_abs <= 1.0 + 1e-12 && sum_err <= 1e-8 && cases.len() >= 50,
        format!("{} cases, max |λ| {max_abs:.12}, trace error {sum_err:.2e}", cases.len()),
    )
}

fn antisymmetry_lemmas() -> Verdict {
    let lemma5 = match lemma5_check(200, 4, 3, 2, 11) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let params = ModelParams { n_fermions: n, grid_points: 8, fock_n_max: 0, ..ModelParams::default() };
        let space = FockSpace::new(&Model::new(params).unwrap(), 1_000_000).unwrap();
        let orbitals = random_orbitals(space.model(), n, &mut rng);
        let coeffs = orbital_coefficients(&space, &orbitals);
        for _ in 0..3 {
            let u = random_unitary(n, &mut rng);
            let r = lemma6_check(space.basis(), &coeffs, &u);
            worst = worst.max(r.max_commutator).max(r.sum_identity_error).max(r.idempotency_error);
        }
    }
    (
        lemma5.trials == 200 && lemma5.max_ratio <= 1.0 + 1e-10 && worst <= 1e-10,
        format!("antisymmetrizer max ratio {:.6} over {} trials; rotation identities max error {worst:.1e}", lemma5.max_ratio, lemma5.trials),
    )
}

fn ehrenfest_orders() -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["convergence.toml", "ehrenfest.toml"] {
        let out = match run_convergence_study(&config(name)) {
            Ok(o) => o,
            Err(e) => return fail(format!("{name}: {e}")),
        };
        let res: Vec<f64> = out.rows.iter().filter_map(|r| r.residual_order).collect();
        let min_res = res.iter().copied().fold(f64::INFINITY, f64::min);
        ok &= res.len() >= 3 && min_res >= 1.9;
        parts.push(format!("{name}: second-order form min order {min_res:.3}"));
        if !out.fock_rows.is_empty() {
            let orders: Vec<f64> = out.fock_rows.iter().filter_map(|r| r.order).collect();
            let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
            ok &= orders.len() >= 3 && min_order >= 1.9;
            parts.push(format!("Ehrenfest min order {min_order:.3}"));
        }
    }
    ok &= parts.iter().any(|p| p.starts_with("Ehrenfest"));
    (ok, parts.join("; "))
}

fn integrator_convergence() -> Verdict {
    let out = match run_convergence_study(&config("convergence.toml")) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let orders: Vec<f64> = out.rows.iter().filter_map(|r| r.order).collect();
    let skg_ok = orders.len() >= 2 && orders.iter().all(|o| (1.9..=2.1).contains(o));

    // Krylov against a Taylor-series matrix exponential and against the
    // eigendecomposition propagator, both below the dense limit
    let mut worst: f64 = 0.0;
    let mut dims = Vec::new();
    for (n, grid, n_max) in [(2, 4, 2), (2, 8, 2)] {
        let params =
            ModelParams { n_fermions: n, grid_points: grid, cutoff: 1.0, fock_n_max: n_max, ..ModelParams::default() };
        let space = FockSpace::new(&Model::new(params).unwrap(), 1_000_000).unwrap();
        let h = build_hamiltonian(&space);
        dims.push(space.dim());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi: Vec<_> = (0..space.dim()).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let nrm = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<_> = psi.into_iter().map(|v| v / nrm).collect();
        let krylov = Evolution::new(&space, &h, Propagator::Krylov).unwrap();
        let t = 0.5;
        let (got, _) = krylov.advance(&psi, t).unwrap();
        let reference: Vec<_> = if space.dim() <= 400 {
            let dense = h.to_dense().map(|v| c(v, 0.0));
            let u = expm(&(dense * c(0.0, -space.time_scale() * t)));
            (u * DVector::from_vec(psi.clone())).iter().copied().collect()
        } else {
            Evolution::new(&space, &h, Propagator::Dense).unwrap().advance(&psi, t).unwrap().0
        };
        worst = worst.max(got.iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    }
    let fmt: Vec<String> = orders.iter().map(|o| format!("{o:.4}")).collect();
    (
        skg_ok && worst <= 1e-8 && dims.iter().all(|&d| d <= 2000),
        format!("splitting orders [{}]; Krylov vs dense max error {worst:.1e} at dims {dims:?}", fmt.join(", ")),
    )
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut checked = 0;
    for name in ["desk.toml", "scan.toml", "theorem2.toml", "free_compare.toml", "ehrenfest.toml"] {
        let cfg = config(name);
        let mut hashes = Vec::new();
        for threads in [1, 2, 8] {
            let out = tmp.path().join(format!("{name}-{threads}"));
            match execute_with_threads(&cfg, &out, true, threads) {
                Ok(m) => hashes.push(m.files.iter().map(|f| (f.name.clone(), f.sha256.clone())).collect::<Vec<_>>()),
                Err(e) => return fail(format!("{name} on {threads} threads: {e}")),
            }
        }
        if hashes.windows(2).any(|w| w[0] != w[1]) {
            return (false, format!("{name}: outputs differ between thread counts"));
        }
        checked += hashes[0].len();
    }
    (true, format!("{checked} files byte-identical on 1, 2 and 8 threads"))
}

fn main() {
    let (lemma10, beta0) = lemma10_and_initial_beta();
    let results: Vec<(&str, Verdict)> = vec![
        ("1 conservation suite (desk run)", conservation()),
        ("2 field norm bound on every shipped config", field_bound()),
        ("3 trace-distance chains between beta functionals", lemma10),
        ("4 product-state initial data", beta0),
        ("5 coupled-vs-free distance linear in delta_N", theorem2()),
        ("6 semiclassics dense-oracle equivalence", semiclassics_oracle()),
        ("7 diagonalization-trick properties", cos_trick()),
        ("8 antisymmetrizer bound and rotation identities", antisymmetry_lemmas()),
        ("9 Ehrenfest and second-order residual orders", ehrenfest_orders()),
        ("10 integrator self-convergence and Krylov accuracy", integrator_convergence()),
        ("11 determinism across thread counts", determinism()),
    ];
    let mut failures = 0;
    for (name, (ok, detail)) in &results {
        println!("{} criterion {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failures, results.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
