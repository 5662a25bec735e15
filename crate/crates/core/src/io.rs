//! File formats: binary trajectories and Fock snapshots (little-endian f64),
//! CSV tables.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{BetaReport, FockSpace, Lemma10Margins};
use crate::model::{FieldAmplitude, Lattice, Model, ModelParams, OrbitalSet};
use crate::semiclassics::ScanRow;
use crate::skg::{SkgState, StepReport};

/// Sidecar path of a trajectory file: same stem, `.json` extension.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn put_complex(w: &mut impl Write, v: Complex64) -> Result<()> {
    put_f64(w, v.re)?;
    put_f64(w, v.im)
}

fn get_complex(r: &mut impl Read) -> Result<Complex64> {
    Ok(Complex64::new(get_f64(r)?, get_f64(r)?))
}

/// One record per sample: time, orbitals (row-major grid order, re/im
/// interleaved), α modes in lattice enumeration order.
pub fn write_trajectory(writer: &mut impl Write, samples: &[SkgState]) -> Result<()> {
    for s in samples {
        put_f64(writer, s.time)?;
        for phi in &s.orbitals.phi {
            for &v in phi {
                put_complex(writer, v)?;
            }
        }
        for &a in &s.alpha.values {
            put_complex(writer, a)?;
        }
    }
    Ok(())
}

/// Reads records written by [`write_trajectory`]; the layout comes from the
/// model. The step counter is recovered from the time and the model's `dt`.
pub fn read_trajectory(reader: &mut impl Read, model: &Model) -> Result<Vec<SkgState>> {
    let n = model.params().n_fermions;
    let points = model.grid().len();
    let modes = model.modes().len();
    let record = 8 * (1 + 2 * n * points + 2 * modes);
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() % record != 0 {
        return Err(Error::Format(format!(
            "trajectory length {} is not a multiple of the record size {record}",
            bytes.len()
        )));
    }
    let mut cur = bytes.as_slice();
    let dt = model.params().time_step;
    let mut out = Vec::with_capacity(bytes.len() / record);
    while !cur.is_empty() {
        let time = get_f64(&mut cur)?;
        let mut phi = Vec::with_capacity(n);
        for _ in 0..n {
            phi.push((0..points).map(|_| get_complex(&mut cur)).collect::<Result<Vec<_>>>()?);
        }
        let values = (0..modes).map(|_| get_complex(&mut cur)).collect::<Result<Vec<_>>>()?;
        out.push(SkgState {
            orbitals: OrbitalSet::new(phi, model.grid().cell_volume()),
            alpha: FieldAmplitude { values },
            step: (time / dt).round() as u64,
            time,
        });
    }
    Ok(out)
}

/// Writes `path` and its JSON sidecar holding the model parameters.
pub fn save_trajectory(path: &Path, params: &ModelParams, samples: &[SkgState]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trajectory(&mut w, samples)?;
    w.flush()?;
    let json = serde_json::to_string_pretty(params)?;
    std::fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

pub fn load_trajectory(path: &Path) -> Result<(ModelParams, Vec<SkgState>)> {
    let params: ModelParams = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let model = Model::new(params.clone())?;
    let samples = read_trajectory(&mut BufReader::new(File::open(path)?), &model)?;
    Ok((params, samples))
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"NMFFOCK1";

/// Header of a Fock snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub n_orbitals: usize,
    pub n_fermions: usize,
    pub n_max: usize,
    pub dim: usize,
    pub mode_lattice: Vec<Lattice>,
}

impl SnapshotHeader {
    pub fn of(space: &FockSpace) -> Self {
        let b = space.basis();
        SnapshotHeader {
            n_orbitals: b.n_orbitals(),
            n_fermions: b.n_fermions(),
            n_max: b.n_max(),
            dim: space.model().params().dim,
            mode_lattice: space.model().modes().iter().map(|m| m.lattice).collect(),
        }
    }
}

/// Magic, M, N, n_max, spatial dimension, mode count, mode lattice (3 × i64
/// each), amplitude count, then the amplitudes as (re, im) pairs.
pub fn write_snapshot(writer: &mut impl Write, header: &SnapshotHeader, amplitudes: &[Complex64]) -> Result<()> {
    writer.write_all(SNAPSHOT_MAGIC)?;
    for v in [header.n_orbitals, header.n_fermions, header.n_max, header.dim, header.mode_lattice.len()] {
        put_u64(writer, v as u64)?;
    }
    for n in &header.mode_lattice {
        for c in n {
            writer.write_all(&c.to_le_bytes())?;
        }
    }
    put_u64(writer, amplitudes.len() as u64)?;
    for &a in amplitudes {
        put_complex(writer, a)?;
    }
    Ok(())
}

pub fn read_snapshot(reader: &mut impl Read) -> Result<(SnapshotHeader, Vec<Complex64>)> {
    let mut magic = [0u8; 8];
    reader.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format("not a Fock snapshot".into()));
    }
    let mut fields = [0usize; 5];
    for f in &mut fields {
        *f = get_u64(reader)? as usize;
    }
    let mut mode_lattice = Vec::with_capacity(fields[4]);
    for _ in 0..fields[4] {
        let mut n = [0i64; 3];
        for c in &mut n {
            *c = get_u64(reader)? as i64;
        }
        mode_lattice.push(n);
    }
    let count = get_u64(reader)? as usize;
    let amplitudes = (0..count).map(|_| get_complex(reader)).collect::<Result<Vec<_>>>()?;
    let header = SnapshotHeader {
        n_orbitals: fields[0],
        n_fermions: fields[1],
        n_max: fields[2],
        dim: fields[3],
        mode_lattice,
    };
    Ok((header, amplitudes))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_step_reports(writer: impl Write, reports: &[StepReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "time",
        "gram_deviation",
        "alpha_norm",
        "alpha_bound",
        "secondorder_residual",
        "energy_drift",
    ])?;
    for r in reports {
        w.write_record([
            r.time.to_string(),
            r.gram_deviation.to_string(),
            r.alpha_norm.to_string(),
            r.alpha_bound.to_string(),
            fmt_opt(r.secondorder_residual),
            fmt_opt(r.energy_drift),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_norms(writer: impl Write, rows: &[ScanRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["time", "k_norm", "tn_peq", "tn_commutator", "tn_pgradq", "hs_peq"])?;
    for r in rows {
        let t = &r.report;
        w.write_record([
            r.time.to_string(),
            t.k_norm().to_string(),
            t.tn_peq.to_string(),
            t.tn_commutator.to_string(),
            t.tn_pgradq.to_string(),
            t.hs_peq.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// β-trajectory keyed by time, with the trace-distance chain margins.
pub fn write_beta_reports(writer: impl Write, rows: &[(f64, BetaReport, Lemma10Margins)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "t",
        "beta_a1",
        "beta_a2",
        "beta_b",
        "tn_gamma_f",
        "tn_gamma_b",
        "beta_total",
        "beta_b_weyl",
        "margin_fermion_lower",
        "margin_fermion_upper",
        "margin_boson",
    ])?;
    for (t, r, m) in rows {
        w.write_record([
            t.to_string(),
            r.beta_a1.to_string(),
            r.beta_a2.to_string(),
            r.beta_b.to_string(),
            r.tn_gamma_f.to_string(),
            r.tn_gamma_b.to_string(),
            r.beta_total.to_string(),
            r.beta_b_weyl.to_string(),
            m.fermion_lower.to_string(),
            m.fermion_upper.to_string(),
            m.boson_upper.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Generic table with a header row; every value is written with Rust's
/// shortest round-trip formatting.
pub fn write_table(writer: impl Write, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skg::build_fermi_ball;

    #[test]
    fn trajectory_round_trip() {
        let model = Model::new(ModelParams::default()).unwrap();
        let mut alpha = FieldAmplitude::zeros(model.modes().len());
        alpha.values[1] = Complex64::new(0.25, -1.5);
        let mut s = SkgState::new(build_fermi_ball(&model).unwrap(), alpha);
        s.time = 0.5;
        s.step = 500;
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &[s.clone(), s.clone()]).unwrap();
        let back = read_trajectory(&mut buf.as_slice(), &model).unwrap();
        assert_eq!(back, vec![s.clone(), s]);
        assert!(read_trajectory(&mut &buf[..buf.len() - 8], &model).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let header = SnapshotHeader {
            n_orbitals: 16,
            n_fermions: 2,
            n_max: 2,
            dim: 1,
            mode_lattice: vec![[-1, 0, 0], [0, 0, 0], [1, 0, 0]],
        };
        let amps = vec![Complex64::new(0.5, -0.25), Complex64::new(1e-300, 3.0)];
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &header, &amps).unwrap();
        let (h, a) = read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!(h, header);
        assert_eq!(a, amps);
    }

    #[test]
    fn empty_reports_are_header_only() {
        let mut buf = Vec::new();
        write_trace_norms(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time,k_norm,tn_peq,tn_commutator,tn_pgradq,hs_peq\n");
    }
}
