//! Trace-norm diagnostics of Slater projectors.
//!
//! `p = Σ_j |φ_j⟩⟨φ_j|` has rank N, so every operator of the form `pAq` or
//! `[p, A]` has rank at most 2N and its singular values come from small Gram
//! matrices built out of `Aφ_j`. Nothing of grid dimension is ever
//! diagonalized here.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{gram, hermitian_eigen, orthonormal_basis, sqrt_trace_psd, trace_norm_hermitian};
use crate::model::{density, inner, norm3, Model, OrbitalSet, Vec3};
use crate::skg::SkgState;

/// Gram deviation tolerated on input orbitals.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

/// Rank-N projector onto the span of an orthonormal orbital family.
#[derive(Debug, Clone, Copy)]
pub struct SlaterProjector<'a> {
    orbitals: &'a OrbitalSet,
}

impl<'a> SlaterProjector<'a> {
    pub fn new(orbitals: &'a OrbitalSet) -> Result<Self> {
        let dev = orbitals.gram_deviation();
        if dev > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal(dev));
        }
        Ok(SlaterProjector { orbitals })
    }

    pub fn orbitals(&self) -> &OrbitalSet {
        self.orbitals
    }

    pub fn rank(&self) -> usize {
        self.orbitals.len()
    }

    /// Coefficients `⟨φ_l, f⟩`.
    fn overlaps(&self, f: &[Complex64]) -> Vec<Complex64> {
        let dv = self.orbitals.cell_volume;
        self.orbitals.phi.iter().map(|phi| inner(phi, f, dv)).collect()
    }

    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let c = self.overlaps(f);
        let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
        for (phi, cl) in self.orbitals.phi.iter().zip(&c) {
            for (o, v) in out.iter_mut().zip(phi) {
                *o += cl * v;
            }
        }
        out
    }

    /// `q f = f - p f`.
    pub fn apply_complement(&self, f: &[Complex64]) -> Vec<Complex64> {
        let pf = self.apply(f);
        f.iter().zip(&pf).map(|(a, b)| a - b).collect()
    }
}

/// One-body operators probed by the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OneBodyOp {
    /// Multiplication by `e^{ik·x}`.
    Phase(Vec3),
    /// The gradient, a vector operator with one component per axis.
    Gradient,
}

impl OneBodyOp {
    fn adjoint(self) -> OneBodyOp {
        match self {
            OneBodyOp::Phase(k) => OneBodyOp::Phase([-k[0], -k[1], -k[2]]),
            // ∇* = -∇; the sign drops out of every norm
            OneBodyOp::Gradient => OneBodyOp::Gradient,
        }
    }

    fn apply(self, model: &Model, f: &[Complex64]) -> Vec<Vec<Complex64>> {
        match self {
            OneBodyOp::Phase(k) => {
                let phase = model.phase_field(&k);
                vec![f.iter().zip(&phase).map(|(a, b)| a * b).collect()]
            }
            OneBodyOp::Gradient => model.gradient(f),
        }
    }
}

/// Gram matrix of the vectors `q A* φ_j` (summed over operator components).
/// Its eigenvalues are the squared singular values of `pAq`.
fn p_op_q_gram(proj: &SlaterProjector, op: OneBodyOp, model: &Model) -> DMatrix<Complex64> {
    let dv = proj.orbitals.cell_volume;
    let adj = op.adjoint();
    let vectors: Vec<Vec<Vec<Complex64>>> = proj
        .orbitals
        .phi
        .iter()
        .map(|phi| adj.apply(model, phi).iter().map(|c| proj.apply_complement(c)).collect())
        .collect();
    let n = vectors.len();
    DMatrix::from_fn(n, n, |i, j| {
        vectors[i].iter().zip(&vectors[j]).map(|(a, b)| inner(a, b, dv)).sum()
    })
}

/// `‖pAq‖_Tr`.
pub fn trace_norm_p_op_q(proj: &SlaterProjector, op: OneBodyOp, model: &Model) -> f64 {
    sqrt_trace_psd(&p_op_q_gram(proj, op, model))
}

/// `‖pAq‖_HS`.
pub fn hs_norm_p_op_q(proj: &SlaterProjector, op: OneBodyOp, model: &Model) -> f64 {
    let g = p_op_q_gram(proj, op, model);
    g.diagonal().iter().map(|v| v.re).sum::<f64>().max(0.0).sqrt()
}

/// `‖[p, e^{ik·x}]‖_Tr`, from the Gram matrix of `[p, e^{ik·x}]` on an
/// orthonormal basis of its coimage `span{φ_j, q e^{-ik·x} φ_j}` (≤ 2N vectors).
pub fn commutator_trace_norm(proj: &SlaterProjector, k: &Vec3, model: &Model) -> f64 {
    let dv = proj.orbitals.cell_volume;
    let phase = model.phase_field(k);
    let mul = |f: &[Complex64], conj: bool| -> Vec<Complex64> {
        f.iter()
            .zip(&phase)
            .map(|(a, e)| if conj { a * e.conj() } else { a * e })
            .collect()
    };
    let mut span: Vec<Vec<Complex64>> = proj.orbitals.phi.clone();
    span.extend(proj.orbitals.phi.iter().map(|phi| proj.apply_complement(&mul(phi, true))));
    let basis = orthonormal_basis(&span, dv, 1e-10);
    let images: Vec<Vec<Complex64>> = basis
        .iter()
        .map(|b| {
            // [p, e] b = p e q b - q e p b
            let peqb = proj.apply(&mul(&proj.apply_complement(b), false));
            let qepb = proj.apply_complement(&mul(&proj.apply(b), false));
            peqb.iter().zip(&qepb).map(|(x, y)| x - y).collect()
        })
        .collect();
    sqrt_trace_psd(&gram(&images, dv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceNormReport {
    pub k: Vec3,
    /// `‖p e^{ik·x} q‖_Tr`
    pub tn_peq: f64,
    /// `‖[p, e^{ik·x}]‖_Tr`
    pub tn_commutator: f64,
    /// `‖p ∇ q‖_Tr`
    pub tn_pgradq: f64,
    /// `‖p e^{ik·x} q‖_HS`
    pub hs_peq: f64,
}

impl TraceNormReport {
    pub fn k_norm(&self) -> f64 {
        norm3(&self.k)
    }
}

pub fn trace_norm_report(proj: &SlaterProjector, k: &Vec3, model: &Model) -> TraceNormReport {
    TraceNormReport {
        k: *k,
        tn_peq: trace_norm_p_op_q(proj, OneBodyOp::Phase(*k), model),
        tn_commutator: commutator_trace_norm(proj, k, model),
        tn_pgradq: trace_norm_p_op_q(proj, OneBodyOp::Gradient, model),
        hs_peq: hs_norm_p_op_q(proj, OneBodyOp::Phase(*k), model),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub time: f64,
    pub report: TraceNormReport,
}

/// Per-sample summary of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSummary {
    pub time: f64,
    /// `sup_k (1+|k|)^{-1} ‖p e^{ik·x} q‖_Tr`
    pub sup_scaled_peq: f64,
    pub tn_pgradq: f64,
    /// `sup_k (1+|k|)^{-1} ‖p e^{ik·x} q‖_Tr + N^{-1/3} ‖p ∇ q‖_Tr`
    pub combined: f64,
}

/// Trace-norm reports for every sample and every `k`, sample-major.
pub fn semiclassical_scan(samples: &[SkgState], k_list: &[Vec3], model: &Model) -> Result<Vec<ScanRow>> {
    for s in samples {
        SlaterProjector::new(&s.orbitals)?;
    }
    let jobs: Vec<(usize, usize)> =
        (0..samples.len()).flat_map(|i| (0..k_list.len()).map(move |j| (i, j))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(i, j)| {
            let proj = SlaterProjector { orbitals: &samples[i].orbitals };
            ScanRow { time: samples[i].time, report: trace_norm_report(&proj, &k_list[j], model) }
        })
        .collect())
}

pub fn summarize_scan(rows: &[ScanRow], n_fermions: usize) -> Vec<ScanSummary> {
    let mut out: Vec<ScanSummary> = Vec::new();
    for row in rows {
        let scaled = row.report.tn_peq / (1.0 + row.report.k_norm());
        match out.last_mut() {
            Some(last) if last.time == row.time => {
                last.sup_scaled_peq = last.sup_scaled_peq.max(scaled);
            }
            _ => out.push(ScanSummary {
                time: row.time,
                sup_scaled_peq: scaled,
                tn_pgradq: row.report.tn_pgradq,
                combined: 0.0,
            }),
        }
    }
    let w = (n_fermions as f64).powf(-1.0 / 3.0);
    for s in &mut out {
        s.combined = s.sup_scaled_peq + w * s.tn_pgradq;
    }
    out
}

/// Least-squares fit of `y ≈ A exp(B t²)` in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub amplitude: f64,
    pub rate: f64,
    /// Root-mean-square residual of `ln y`.
    pub log_rms_residual: f64,
}

pub fn fit_gaussian_growth(times: &[f64], values: &[f64]) -> Option<GrowthFit> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (t * t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let rate = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - rate * mx;
    let rms = (pts.iter().map(|p| (p.1 - intercept - rate * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Some(GrowthFit { amplitude: intercept.exp(), rate, log_rms_residual: rms })
}

/// Spectral decomposition of `p cos(k·x) p` restricted to the orbital span.
#[derive(Debug, Clone)]
pub struct CosSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Column j holds the coefficients of `χ_j` in the orbital basis.
    pub coefficients: DMatrix<Complex64>,
}

impl CosSpectrum {
    /// The eigenfunctions `χ_j = Σ_i c_ij φ_i`.
    pub fn eigenfunctions(&self, orbitals: &OrbitalSet) -> OrbitalSet {
        orbitals.rotated(&self.coefficients.transpose())
    }
}

pub fn diagonalize_p_cos(proj: &SlaterProjector, k: &Vec3, model: &Model) -> CosSpectrum {
    let orbitals = proj.orbitals;
    let dv = orbitals.cell_volume;
    let grid = model.grid();
    let cos: Vec<f64> = (0..grid.len())
        .map(|s| crate::model::dot3(k, &grid.position(s)).cos())
        .collect();
    let n = orbitals.len();
    let shifted: Vec<Vec<Complex64>> = orbitals
        .phi
        .iter()
        .map(|phi| phi.iter().zip(&cos).map(|(v, c)| v * c).collect())
        .collect();
    let m = DMatrix::from_fn(n, n, |i, j| inner(&orbitals.phi[i], &shifted[j], dv));
    let (eigenvalues, coefficients) = hermitian_eigen(&m);
    CosSpectrum { eigenvalues, coefficients }
}

/// `∫ cos(k·y) ρ(y) dy` on the grid.
pub fn cos_density_integral(orbitals: &OrbitalSet, k: &Vec3, model: &Model) -> f64 {
    let grid = model.grid();
    density(orbitals)
        .iter()
        .enumerate()
        .map(|(s, r)| r * crate::model::dot3(k, &grid.position(s)).cos())
        .sum::<f64>()
        * grid.cell_volume()
}

/// `‖p_a - p_b‖_Tr` for two orthonormal families, via the ≤ 2N-dimensional
/// joint span.
pub fn projector_trace_distance(a: &OrbitalSet, b: &OrbitalSet) -> f64 {
    let dv = a.cell_volume;
    let mut span = a.phi.clone();
    span.extend(b.phi.iter().cloned());
    let basis = orthonormal_basis(&span, dv, 1e-10);
    let ov = |set: &OrbitalSet| -> DMatrix<Complex64> {
        DMatrix::from_fn(set.len(), basis.len(), |j, r| inner(&set.phi[j], &basis[r], dv))
    };
    let (ca, cb) = (ov(a), ov(b));
    let d = ca.adjoint() * &ca - cb.adjoint() * &cb;
    trace_norm_hermitian(&d)
}
