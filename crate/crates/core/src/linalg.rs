//! Small dense helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::inner;

/// Eigenvalues below this are treated as zero before taking square roots.
pub const CLIP: f64 = 1e-12;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], DMatrix::zeros(0, 0));
    }
    // symmetrize against roundoff so the solver sees an exactly Hermitian input
    let h = DMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// `‖A‖_Tr` of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

/// `Σ_i sqrt(λ_i)` of a positive semidefinite Gram matrix, i.e. the trace
/// norm of any operator whose `A*A` it represents.
pub fn sqrt_trace_psd(gram: &DMatrix<Complex64>) -> f64 {
    hermitian_eigenvalues(gram)
        .iter()
        .map(|&v| if v > CLIP { v.sqrt() } else { 0.0 })
        .sum()
}

/// Gram matrix `G_ij = ⟨v_i, v_j⟩` with cell volume weight.
pub fn gram(vectors: &[Vec<Complex64>], cell_volume: f64) -> DMatrix<Complex64> {
    let n = vectors.len();
    DMatrix::from_fn(n, n, |i, j| inner(&vectors[i], &vectors[j], cell_volume))
}

/// Orthonormal basis of the span of `vectors`, by modified Gram–Schmidt with
/// one reorthogonalization pass. Vectors whose residual norm falls below
/// `tol` times their original norm are dropped.
pub fn orthonormal_basis(
    vectors: &[Vec<Complex64>],
    cell_volume: f64,
    tol: f64,
) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let original = inner(v, v, cell_volume).re.sqrt();
        if original == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &w, cell_volume);
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let norm = inner(&w, &w, cell_volume).re.sqrt();
        if norm > tol * original {
            let s = 1.0 / norm;
            w.iter_mut().for_each(|x| *x *= s);
            basis.push(w);
        }
    }
    basis
}

pub fn random_complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let z = random_complex_matrix(n, n, rng);
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// `max_ij |A_ij|`.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(5, &mut rng);
        let id = &u.adjoint() * &u;
        assert!(max_abs(&(id - DMatrix::identity(5, 5))) < 1e-12);
    }

    #[test]
    fn basis_drops_dependent_vectors() {
        let a = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let b = vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)];
        let c = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        let basis = orthonormal_basis(&[a, b, c], 1.0, 1e-10);
        assert_eq!(basis.len(), 2);
        assert!(max_abs(&(gram(&basis, 1.0) - DMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn trace_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(-1.5, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        assert!((trace_norm_hermitian(&m) - 2.0).abs() < 1e-14);
    }
}
