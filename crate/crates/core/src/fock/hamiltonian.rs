use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::{hop, occupied};
use super::FockSpace;

/// Real sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let nnz = rows.iter().map(|r| r.len()).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(pos) => self.vals[a + pos],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`, parallel over rows; each row is summed in column order.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, v) in self.row(i) {
                acc += x[c] * v;
            }
            *yi = acc;
        });
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// `⟨x, A x⟩` (real for symmetric A).
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let ax = self.apply(x);
        super::dot(x, &ax).re
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (c, v) in self.row(i) {
                m[(i, c)] += v;
            }
        }
        m
    }

    /// `max |A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        (0..self.dim)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// `H_N = Σ_j(-Δ_j) + Σ_j Φ̂(x_j) + δ_N Σ_κ ω_κ n_κ` on the truncated basis.
pub fn build_hamiltonian(space: &FockSpace) -> SparseMatrix {
    build_hamiltonian_scaled(space, 1.0)
}

/// As [`build_hamiltonian`] with the coupling multiplied by `coupling_scale`.
pub fn build_hamiltonian_scaled(space: &FockSpace, coupling_scale: f64) -> SparseMatrix {
    let basis = space.basis();
    let delta = space.model().params().delta_n;
    let n_max = basis.n_max();
    let rows: Vec<Vec<(usize, f64)>> = (0..basis.dim())
        .into_par_iter()
        .map(|col| {
            // H is real symmetric, so the column H|col⟩ is also row `col`.
            let (f, b) = basis.split(col);
            let mask = basis.config(f);
            let occ = basis.occupations(b);
            let mut entries: Vec<(usize, f64)> = Vec::new();
            let diag = occupied(mask).map(|p| space.kinetic()[p]).sum::<f64>()
                + delta * occ.iter().zip(space.omega()).map(|(&n, w)| n as f64 * w).sum::<f64>();
            entries.push((col, diag));
            if coupling_scale != 0.0 {
                for (mode, &g) in space.coupling().iter().enumerate() {
                    let g = g * coupling_scale;
                    let stride = basis.boson_stride(mode);
                    let n = occ[mode];
                    // a_κ ρ̂_κ with ρ̂_κ = Σ_p c†_{p+κ} c_p
                    if n > 0 {
                        let amp = g * (n as f64).sqrt();
                        for p in occupied(mask) {
                            if let Some((target, sign)) = hop(mask, p, space.shift_up(mode)[p]) {
                                let tf = basis.config_index(target).expect("hop stays in the N-particle sector");
                                entries.push((basis.index(tf, b - stride), amp * sign));
                            }
                        }
                    }
                    // a†_κ ρ̂†_κ with ρ̂†_κ = Σ_p c†_{p-κ} c_p
                    if n < n_max {
                        let amp = g * ((n + 1) as f64).sqrt();
                        for p in occupied(mask) {
                            if let Some((target, sign)) = hop(mask, p, space.shift_down(mode)[p]) {
                                let tf = basis.config_index(target).expect("hop stays in the N-particle sector");
                                entries.push((basis.index(tf, b + stride), amp * sign));
                            }
                        }
                    }
                }
            }
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (c, v) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged
        })
        .collect();
    SparseMatrix::from_rows(rows)
}
