//! Eigensolvers and λ-sweep observables.

mod lanczos;
mod sweep;

pub use lanczos::{lanczos_lowest, lanczos_lowest_from, LanczosOptions, DEFAULT_SEED};
pub use sweep::{
    default_grid, fidelity_susceptibility, refined_grid, sweep, transition_points, Estimate,
    Fidelity, SweepOptions, SweepRecord, TransitionPoints,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::HermitianOperator;
use crate::linalg::hermitian_eigen;

pub const DENSE_CAP: usize = 4096;
/// Levels closer than this are treated as one degenerate level.
pub const DEGENERACY_TOL: f64 = 1e-8;
const ASYMMETRY_TOL: f64 = 1e-10;

/// Lowest eigenpairs in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    /// Number of returned levels within `DEGENERACY_TOL` of the lowest.
    pub ground_degeneracy: usize,
}

impl EigenResult {
    fn new(values: Vec<f64>, vectors: Vec<Vec<Complex64>>, residuals: Vec<f64>) -> Self {
        let ground_degeneracy = values
            .iter()
            .take_while(|&&v| v - values[0] < DEGENERACY_TOL)
            .count();
        EigenResult {
            values,
            vectors,
            residuals,
            ground_degeneracy,
        }
    }
}

pub(crate) fn residual<O: HermitianOperator + ?Sized>(op: &O, v: &[Complex64], e: f64) -> f64 {
    let mut w = vec![Complex64::new(0.0, 0.0); v.len()];
    op.apply(v, &mut w);
    w.iter()
        .zip(v)
        .map(|(a, b)| (a - b * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Full spectrum of a Hermitian matrix.
pub fn dense_eig(m: &DMatrix<Complex64>) -> Result<EigenResult> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidParameter(format!("matrix is {n}x{}", m.ncols())));
    }
    if n > DENSE_CAP {
        return Err(Error::SizeLimit {
            what: "dense eigensolver dimension",
            actual: n as u128,
            limit: DENSE_CAP as u128,
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let asym = (m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if asym > ASYMMETRY_TOL {
        return Err(Error::InvalidParameter(format!(
            "matrix is not Hermitian (asymmetry {asym:e})"
        )));
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let (values, vectors) = hermitian_eigen(&herm);
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(&e, v)| {
            let col = DMatrix::from_column_slice(n, 1, v);
            (&herm * &col - col * Complex64::new(e, 0.0)).norm()
        })
        .collect();
    Ok(EigenResult::new(values, vectors, residuals))
}

/// Dense copy of an operator, built column by column.
pub fn operator_to_dense<O: HermitianOperator + ?Sized>(op: &O) -> DMatrix<Complex64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        e[c] = Complex64::new(1.0, 0.0);
        op.apply(&e, &mut col);
        for r in 0..n {
            m[(r, c)] = col[r];
        }
        e[c] = Complex64::new(0.0, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]));
        let r = dense_eig(&m).unwrap();
        assert_eq!(r.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(r.ground_degeneracy, 1);
    }

    #[test]
    fn random_hermitian_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        let r = dense_eig(&h).unwrap();
        let tr: f64 = r.values.iter().sum();
        let tr2: f64 = r.values.iter().map(|v| v * v).sum();
        assert!((tr - h.trace().re).abs() < 1e-9);
        assert!((tr2 - (&h * &h).trace().re).abs() < 1e-9);
        assert!(r.residuals.iter().all(|&x| x < 1e-10));
        assert!(r.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(dense_eig(&m).is_err());
    }
}
