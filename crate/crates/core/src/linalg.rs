//! Dense Hermitian eigendecomposition, backed by faer.

use faer::{Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Ascending eigenvalues with orthonormal eigenvectors of a Hermitian matrix.
/// Only the Hermitian part of `m` is used.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = m.nrows();
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    if h.iter().all(|z| z.im == 0.0) {
        let (vals, vecs) = symmetric_eigen(&h.map(|z| z.re));
        let vecs = (0..n)
            .map(|c| vecs.column(c).iter().map(|&x| x.into()).collect())
            .collect();
        return (vals, vecs);
    }
    let a = Mat::<Complex64>::from_fn(n, n, |r, c| h[(r, c)]);
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigendecomposition converges");
    let (u, s) = (eig.U(), eig.S());
    let vals = (0..n).map(|i| s[i].re).collect();
    let vecs = (0..n).map(|c| (0..n).map(|r| u[(r, c)]).collect()).collect();
    (vals, vecs)
}

/// Ascending eigenvalues and eigenvector columns of a real symmetric matrix.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let a = Mat::<f64>::from_fn(n, n, |r, c| 0.5 * (m[(r, c)] + m[(c, r)]));
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric eigendecomposition converges");
    let (u, s) = (eig.U(), eig.S());
    let vals = (0..n).map(|i| s[i]).collect();
    (vals, DMatrix::from_fn(n, n, |r, c| u[(r, c)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check(m: &DMatrix<Complex64>) {
        let n = m.nrows();
        let (vals, vecs) = hermitian_eigen(m);
        assert_eq!(vals.len(), n);
        for (i, (e, v)) in vals.iter().zip(&vecs).enumerate() {
            let col = DMatrix::from_column_slice(n, 1, v);
            assert!((m * &col - &col * Complex64::new(*e, 0.0)).norm() < 1e-10, "pair {i}");
            for w in &vecs[..i] {
                let p: Complex64 = w.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                assert!(p.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn nearly_diagonal_complex() {
        let c = Complex64::new;
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(-1.177, 0.0), c(-1.6e-15, 2.7e-15), c(-1.6e-15, -2.7e-15), c(0.374, 0.0)],
        );
        check(&m);
    }

    #[test]
    fn degenerate_complex() {
        let c = Complex64::new;
        let mut m = DMatrix::from_diagonal_element(4, 4, c(2.0, 0.0));
        m[(0, 1)] = c(0.0, 1.0);
        m[(1, 0)] = c(0.0, -1.0);
        check(&m);
    }

    #[test]
    fn nearly_diagonal_real() {
        let (a, d, x, y) = (-1.27696005558675, 0.06393384619735112, -2.86e-16, 5.99e-16);
        let m = DMatrix::from_row_slice(4, 4, &[a, x, 0.0, -y, x, d, y, 0.0, 0.0, y, a, x, -y, 0.0, x, d]);
        check(&m.map(Complex64::from));
    }

    #[test]
    fn random_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 3, 7, 20] {
            let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            check(&((&a + a.adjoint()) * Complex64::new(0.5, 0.0)));
        }
    }
}
