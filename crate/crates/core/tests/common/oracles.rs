//! Independent dense reference implementations used by the test suites.
//!
//! Everything here works with full grid-sized matrices, explicit DFT sums and
//! textbook algorithms, sharing no code paths with the library beyond the
//! basic data types.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use nelson_core::{Complex64, Model, OrbitalSet};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    m.clone().svd(false, false).singular_values.sum()
}

pub fn hs_norm(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Projector onto the orbitals as a Euclidean matrix on grid values
/// (orbitals rescaled by `√Δx^d` so the grid inner product is Euclidean).
pub fn dense_projector(orbitals: &OrbitalSet) -> CMat {
    let g = orbitals.phi[0].len();
    let s = orbitals.cell_volume;
    let mut p = CMat::zeros(g, g);
    for phi in &orbitals.phi {
        for x in 0..g {
            for y in 0..g {
                p[(x, y)] += phi[x] * phi[y].conj() * s;
            }
        }
    }
    p
}

/// Multiplication by `e^{ik·x}` at the model's grid positions.
pub fn dense_phase(model: &Model, k: &[f64; 3]) -> CMat {
    let grid = model.grid();
    let n = grid.len();
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            let x = grid.position(i);
            Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2])
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Signed frequency of a per-axis DFT index.
fn signed(i: usize, g: usize) -> f64 {
    if i < g / 2 {
        i as f64
    } else {
        i as f64 - g as f64
    }
}

/// Spectral derivative along `axis` by explicit DFT sums:
/// `D[x][y] = (1/G^d) Σ_n i k_axis e^{ik·(x-y)}`.
pub fn dense_derivative(model: &Model, axis: usize) -> CMat {
    let grid = model.grid();
    let g = grid.points_per_axis;
    let d = grid.dim;
    let n = grid.len();
    let dk = 2.0 * PI / grid.box_length;
    let freqs: Vec<[f64; 3]> = (0..n)
        .map(|s| {
            let idx = grid.axis_indices(s);
            let mut k = [0.0; 3];
            for a in 0..d {
                k[a] = signed(idx[a], g) * dk;
            }
            k
        })
        .collect();
    CMat::from_fn(n, n, |i, j| {
        let xi = grid.position(i);
        let xj = grid.position(j);
        let mut acc = c(0.0, 0.0);
        for k in &freqs {
            let phase = k[0] * (xi[0] - xj[0]) + k[1] * (xi[1] - xj[1]) + k[2] * (xi[2] - xj[2]);
            acc += c(0.0, k[axis]) * Complex64::from_polar(1.0, phase);
        }
        acc / n as f64
    })
}

/// `Σ_axis ‖p ∂_axis q‖` is not the trace norm of the vector operator;
/// the vector operator `p∇q: L² → L² ⊗ C^d` has singular values from the
/// stacked matrix, so stack the components vertically.
pub fn stacked(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks[0].ncols();
    let mut out = CMat::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        out.view_mut((r0, 0), (b.nrows(), cols)).copy_from(b);
        r0 += b.nrows();
    }
    out
}

/// Orthonormal family of `n` random grid functions (Gram–Schmidt on
/// Gaussian vectors), normalized with the grid weight.
pub fn random_orbitals<R: rand::Rng>(model: &Model, n: usize, rng: &mut R) -> OrbitalSet {
    use rand_distr::{Distribution, StandardNormal};
    let g = model.grid().len();
    let dv = model.grid().cell_volume();
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    while out.len() < n {
        let mut v: Vec<Complex64> =
            (0..g).map(|_| c(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect();
        for _ in 0..2 {
            for b in &out {
                let ov: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum::<Complex64>() * dv;
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= ov * y;
                }
            }
        }
        let nrm = (v.iter().map(|x| x.norm_sqr()).sum::<f64>() * dv).sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        out.push(v);
    }
    OrbitalSet::new(out, dv)
}

/// Smooth orthonormal family: a random unitary mix of the lowest plane waves
/// plus a small random admixture, re-orthonormalized.
pub fn smooth_orbitals<R: rand::Rng>(model: &Model, n: usize, rng: &mut R) -> OrbitalSet {
    use rand_distr::{Distribution, StandardNormal};
    let g = model.grid().len();
    let dv = model.grid().cell_volume();
    let vol = model.grid().volume();
    let waves: Vec<Vec<Complex64>> = (0..n + 2)
        .map(|j| {
            let m = if j % 2 == 0 { (j / 2) as f64 } else { -(((j + 1) / 2) as f64) };
            let dk = 2.0 * PI / model.grid().box_length;
            (0..g)
                .map(|s| Complex64::from_polar(vol.sqrt().recip(), m * dk * model.grid().position(s)[0]))
                .collect()
        })
        .collect();
    let mut raw: Vec<Vec<Complex64>> = Vec::new();
    for _ in 0..n {
        let mut v = vec![c(0.0, 0.0); g];
        for w in &waves {
            let coef = c(StandardNormal.sample(rng), StandardNormal.sample(rng));
            for (x, y) in v.iter_mut().zip(w) {
                *x += coef * y;
            }
        }
        raw.push(v);
    }
    // Gram–Schmidt
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    for mut v in raw {
        for _ in 0..2 {
            for b in &out {
                let ov: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum::<Complex64>() * dv;
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= ov * y;
                }
            }
        }
        let nrm = (v.iter().map(|x| x.norm_sqr()).sum::<f64>() * dv).sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        out.push(v);
    }
    OrbitalSet::new(out, dv)
}

/// `exp(A)` by scaling and squaring of a Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm1 = (0..n).map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm1 * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * c(scale, 0.0);
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..=30 {
        term = &term * &x / c(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Field `Φ(x) = Σ_κ Δk^d η̃ (e^{ik·x} α_κ + c.c.)` by a direct sum.
pub fn naive_field(model: &Model, alpha: &[Complex64]) -> Vec<f64> {
    let w = model.mode_weight();
    (0..model.grid().len())
        .map(|s| {
            let x = model.grid().position(s);
            model
                .modes()
                .iter()
                .zip(alpha)
                .map(|(m, a)| {
                    let e = Complex64::from_polar(1.0, m.k[0] * x[0] + m.k[1] * x[1] + m.k[2] * x[2]);
                    2.0 * w * m.eta * (e * a).re
                })
                .sum()
        })
        .collect()
}

/// All permutations of `0..n` with signs, by Heap-free recursion.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..left.len() {
            let v = left.remove(i);
            prefix.push(v);
            rec(prefix, left, out);
            prefix.pop();
            left.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out.into_iter()
        .map(|p| {
            let mut inv = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if p[i] > p[j] {
                        inv += 1;
                    }
                }
            }
            (p, if inv % 2 == 0 { 1.0 } else { -1.0 })
        })
        .collect()
}

/// Orthonormal basis of the fully antisymmetric subspace of `(C^m)^{⊗n}`,
/// as columns: one normalized antisymmetrized product per increasing tuple.
pub fn antisymmetric_basis(m: usize, n: usize) -> CMat {
    let perms = permutations(n);
    let tuples: Vec<Vec<usize>> = increasing_tuples(m, n);
    let dim = m.pow(n as u32);
    let norm = (perms.len() as f64).sqrt().recip();
    let mut out = CMat::zeros(dim, tuples.len());
    for (col, t) in tuples.iter().enumerate() {
        for (p, sign) in &perms {
            let idx = p.iter().fold(0, |acc, &slot| acc * m + t[slot]);
            out[(idx, col)] += c(sign * norm, 0.0);
        }
    }
    out
}

pub fn increasing_tuples(m: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in start..m {
            cur.push(v);
            rec(v + 1, m, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, n, &mut Vec::new(), &mut out);
    out
}

/// `Σ_slots A_slot` on `(C^m)^{⊗n}` as a dense matrix.
pub fn one_body_sum(a: &CMat, n: usize) -> CMat {
    let m = a.nrows();
    let dim = m.pow(n as u32);
    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        let digits: Vec<usize> = (0..n).map(|s| (col / m.pow((n - 1 - s) as u32)) % m).collect();
        for slot in 0..n {
            for r in 0..m {
                let mut d = digits.clone();
                d[slot] = r;
                let row = d.iter().fold(0, |acc, &v| acc * m + v);
                out[(row, col)] += a[(r, digits[slot])];
            }
        }
    }
    out
}
