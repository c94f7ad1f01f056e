use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{dense_eig, residual, EigenResult, DEGENERACY_TOL};
use crate::error::{Error, Result};
use crate::hamiltonian::HermitianOperator;
use crate::linalg::symmetric_eigen;

pub const DEFAULT_SEED: u64 = 0x5eed_1a2c;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Residual target, relative to `max(1, |E|)`.
    pub tol: f64,
    pub seed: u64,
    /// Krylov dimension per pass.
    pub max_krylov: usize,
    /// Passes allowed in total before giving up.
    pub max_passes: usize,
    /// Keep locking past `k` until the whole lowest level is captured.
    pub resolve_ground_level: bool,
    /// Upper bound on returned pairs when resolving the ground level.
    pub max_level: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-10,
            seed: DEFAULT_SEED,
            max_krylov: 160,
            max_passes: 400,
            resolve_ground_level: false,
            max_level: 256,
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

const CHUNK: usize = 2048;

/// Classical Gram-Schmidt, applied twice.
fn orthogonalize(w: &mut [Complex64], against: &[&[Complex64]]) {
    if against.is_empty() {
        return;
    }
    for _ in 0..2 {
        let coeffs: Vec<Complex64> = against.par_iter().map(|v| dot(v, w)).collect();
        w.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            let off = ci * CHUNK;
            for (v, c) in against.iter().zip(&coeffs) {
                for (i, x) in chunk.iter_mut().enumerate() {
                    *x -= c * v[off + i];
                }
            }
        });
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let s = norm(&v);
    v.iter_mut().for_each(|z| *z /= s);
    v
}

fn scale(v: &mut [Complex64], s: f64) {
    v.iter_mut().for_each(|z| *z *= s);
}

/// Lowest `k` eigenpairs of a Hermitian operator.
pub fn lanczos_lowest<O: HermitianOperator + ?Sized>(
    op: &O,
    k: usize,
    options: &LanczosOptions,
) -> Result<EigenResult> {
    lanczos_lowest_from(op, k, options, None)
}

/// As [`lanczos_lowest`], with an optional first start vector (for example
/// the ground state at a nearby coupling).
pub fn lanczos_lowest_from<O: HermitianOperator + ?Sized>(
    op: &O,
    k: usize,
    options: &LanczosOptions,
    start: Option<&[Complex64]>,
) -> Result<EigenResult> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} for dimension {n}")));
    }
    if n <= 2 {
        let mut r = dense_eig(&super::operator_to_dense(op))?;
        let keep = if options.resolve_ground_level { n } else { k };
        r.values.truncate(keep);
        r.vectors.truncate(keep);
        r.residuals.truncate(keep);
        return Ok(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut locked: Vec<Vec<Complex64>> = Vec::new();
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut next_start: Option<Vec<Complex64>> = start.map(<[Complex64]>::to_vec);
    let mut passes = 0;
    let mut best = f64::INFINITY;

    let want_more = |vals: &[f64]| {
        if vals.len() < k {
            return true;
        }
        options.resolve_ground_level
            && vals.len() < options.max_level.min(n)
            && vals.last().unwrap() - vals[0] < DEGENERACY_TOL
    };

    while want_more(&locked_vals) {
        passes += 1;
        if passes > options.max_passes {
            return Err(Error::NoConvergence {
                iterations: passes - 1,
                residuals: vec![best],
            });
        }
        let refs: Vec<&[Complex64]> = locked.iter().map(Vec::as_slice).collect();
        let mut v0 = next_start.take().unwrap_or_else(|| random_unit(&mut rng, n));
        orthogonalize(&mut v0, &refs);
        let mut nv = norm(&v0);
        if nv < 1e-8 {
            v0 = random_unit(&mut rng, n);
            orthogonalize(&mut v0, &refs);
            nv = norm(&v0);
        }
        scale(&mut v0, 1.0 / nv);

        let m_max = options.max_krylov.min(n - locked.len()).max(1);
        let mut basis: Vec<Vec<Complex64>> = vec![v0];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut anorm = 0.0f64;
        let mut outcome: Option<(f64, Vec<Complex64>, bool)> = None;
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..m_max {
            op.apply(&basis[j], &mut w);
            let alpha = dot(&basis[j], &w).re;
            alphas.push(alpha);
            {
                let mut against: Vec<&[Complex64]> = refs.clone();
                against.extend(basis.iter().map(Vec::as_slice));
                orthogonalize(&mut w, &against);
            }
            let beta = norm(&w);
            anorm = anorm.max(alpha.abs() + beta + betas.last().copied().unwrap_or(0.0));
            let breakdown = beta <= 1e-12 * anorm.max(1.0);
            let last = j + 1 == m_max || breakdown;
            if last || (j + 1) % 6 == 0 {
                let m = alphas.len();
                let t = DMatrix::from_fn(m, m, |r, c| {
                    if r == c {
                        alphas[r]
                    } else if r + 1 == c {
                        betas[r]
                    } else if c + 1 == r {
                        betas[c]
                    } else {
                        0.0
                    }
                });
                let (ritz, vectors) = symmetric_eigen(&t);
                let theta = ritz[0];
                let s = vectors.column(0);
                let estimate = if breakdown { 0.0 } else { beta * s[m - 1].abs() };
                let target = options.tol * theta.abs().max(1.0);
                best = best.min(estimate / theta.abs().max(1.0));
                if estimate <= target || last {
                    let mut y = vec![Complex64::new(0.0, 0.0); n];
                    y.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
                        let off = ci * CHUNK;
                        for (b, &c) in basis.iter().zip(s.iter()) {
                            for (i, x) in chunk.iter_mut().enumerate() {
                                *x += b[off + i] * c;
                            }
                        }
                    });
                    orthogonalize(&mut y, &refs);
                    let ny = norm(&y);
                    scale(&mut y, 1.0 / ny);
                    outcome = Some((theta, y, estimate <= target));
                    break;
                }
            }
            betas.push(beta);
            let mut next = w.clone();
            scale(&mut next, 1.0 / beta);
            basis.push(next);
        }
        let (theta, y, converged) = outcome.expect("pass ends with a Ritz pair");
        let theta = {
            let mut hy = vec![Complex64::new(0.0, 0.0); n];
            op.apply(&y, &mut hy);
            let rq = dot(&y, &hy).re;
            if converged {
                rq
            } else {
                theta.min(rq)
            }
        };
        if converged && residual(op, &y, theta) <= 10.0 * options.tol * theta.abs().max(1.0) {
            locked_vals.push(theta);
            locked.push(y);
        } else {
            next_start = Some(y);
        }
    }

    rayleigh_ritz(op, locked)
}

/// Rotates the locked vectors to diagonalize the operator on their span.
fn rayleigh_ritz<O: HermitianOperator + ?Sized>(op: &O, vecs: Vec<Vec<Complex64>>) -> Result<EigenResult> {
    let n = op.dim();
    let p = vecs.len();
    let hv: Vec<Vec<Complex64>> = vecs
        .iter()
        .map(|v| {
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            op.apply(v, &mut w);
            w
        })
        .collect();
    let small = DMatrix::from_fn(p, p, |r, c| dot(&vecs[r], &hv[c]));
    let small = (&small + small.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = dense_eig(&small)?;
    let rotated: Vec<Vec<Complex64>> = eig
        .vectors
        .iter()
        .map(|coef| {
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (v, &c) in vecs.iter().zip(coef) {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += x * c;
                }
            }
            out
        })
        .collect();
    let residuals: Vec<f64> = eig
        .values
        .iter()
        .zip(&rotated)
        .map(|(&e, v)| residual(op, v, e))
        .collect();
    if let Some((i, r)) = residuals
        .iter()
        .enumerate()
        .find(|(i, &r)| r > 1e-8 * eig.values[*i].abs().max(1.0))
    {
        return Err(Error::NoConvergence {
            iterations: i,
            residuals: vec![*r],
        });
    }
    Ok(EigenResult::new(eig.values, rotated, residuals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    struct Dense(DMatrix<Complex64>);

    impl HermitianOperator for Dense {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
            let v = &self.0 * DVector::from_column_slice(x);
            y.copy_from_slice(v.as_slice());
        }
    }

    fn diag(d: &[f64]) -> Dense {
        Dense(DMatrix::from_diagonal(&DVector::from_iterator(
            d.len(),
            d.iter().map(|&x| Complex64::new(x, 0.0)),
        )))
    }

    #[test]
    fn diagonal_two_smallest() {
        let d: Vec<f64> = (0..300).map(|i| ((i * 37) % 300) as f64 * 0.1 + 1.0).collect();
        let r = lanczos_lowest(&diag(&d), 2, &LanczosOptions::default()).unwrap();
        assert!((r.values[0] - 1.0).abs() < 1e-10);
        assert!((r.values[1] - 1.1).abs() < 1e-10);
    }

    #[test]
    fn degenerate_level_resolved() {
        let mut d: Vec<f64> = (0..200).map(|i| 2.0 + i as f64 * 0.01).collect();
        d[17] = 0.5;
        d[90] = 0.5;
        d[150] = 0.5;
        let opts = LanczosOptions {
            resolve_ground_level: true,
            ..Default::default()
        };
        let r = lanczos_lowest(&diag(&d), 2, &opts).unwrap();
        assert_eq!(r.ground_degeneracy, 3);
        assert!((r.values[3] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let d: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let a = lanczos_lowest(&diag(&d), 3, &LanczosOptions::default()).unwrap();
        let b = lanczos_lowest(&diag(&d), 3, &LanczosOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
