use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lanczos::lanczos_lowest_from;
use super::{EigenResult, LanczosOptions, DEGENERACY_TOL};
use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub lanczos: LanczosOptions,
    /// Lowest states requested per point (at least 2).
    pub states: usize,
    /// Finite-difference step for the fidelity susceptibility.
    pub epsilon: f64,
    pub fidelity: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            lanczos: LanczosOptions::default(),
            states: 2,
            epsilon: 1e-3,
            fidelity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    pub e0: f64,
    /// `E1 - E0`, zero up to rounding when the ground level is degenerate.
    pub gap: f64,
    pub exp_he: f64,
    pub exp_hb: f64,
    /// `None` when the ground state is degenerate.
    pub chi: Option<f64>,
    /// Size of the ground level.
    pub degeneracy: usize,
    pub warning: Option<String>,
}

/// 101 uniform points on `[0, 1]`.
pub fn default_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// The default grid plus four times the density on `[0.55, 0.85]`.
pub fn refined_grid() -> Vec<f64> {
    let mut g = default_grid();
    g.extend((0..=120).map(|i| 0.55 + i as f64 * 0.0025));
    for x in &mut g {
        *x = (*x * 1e9).round() / 1e9;
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn ground(ham: &SparseHamiltonian, lambda: f64, options: &LanczosOptions, resolve: bool, k: usize, start: Option<&[Complex64]>) -> Result<EigenResult> {
    let h = ham.at(lambda)?;
    let opts = LanczosOptions {
        resolve_ground_level: resolve,
        ..*options
    };
    lanczos_lowest_from(&h, k.min(h_dim(ham)), &opts, start)
}

fn h_dim(ham: &SparseHamiltonian) -> usize {
    ham.electric().len()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fidelity {
    /// `-2 ln |<ψ0(λ)|ψ0(λ±ε)>|^2 / ε^2`; `None` at a degenerate ground state.
    pub value: Option<f64>,
    /// Same estimate with step `ε/2`.
    pub half_step: Option<f64>,
    pub warning: Option<String>,
}

fn log_overlap_chi(a: &[Complex64], b: &[Complex64], eps: f64) -> f64 {
    let ov: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    (-2.0 * ov.norm_sqr().min(1.0).ln() / (eps * eps)).max(0.0)
}

fn shifted(lambda: f64, eps: f64) -> f64 {
    if lambda + eps <= 1.0 {
        lambda + eps
    } else {
        lambda - eps
    }
}

fn fidelity_from(
    ham: &SparseHamiltonian,
    lambda: f64,
    eps: f64,
    psi0: &[Complex64],
    options: &LanczosOptions,
) -> Result<Fidelity> {
    let mut estimates = [None, None];
    for (slot, step) in estimates.iter_mut().zip([eps, eps / 2.0]) {
        let r = ground(ham, shifted(lambda, step), options, false, 2, Some(psi0))?;
        if r.values.len() > 1 && r.values[1] - r.values[0] < DEGENERACY_TOL {
            return Ok(Fidelity {
                value: None,
                half_step: None,
                warning: Some(format!("degenerate ground state at λ = {}", shifted(lambda, step))),
            });
        }
        *slot = Some(log_overlap_chi(psi0, &r.vectors[0], step));
    }
    let (a, b) = (estimates[0].unwrap(), estimates[1].unwrap());
    let warning = if (a - b).abs() > 0.05 * a.abs().max(b.abs()) && a.max(b) > 1e-6 {
        Some(format!("step refinement disagrees: χ(ε) = {a:.6e}, χ(ε/2) = {b:.6e}"))
    } else {
        None
    };
    Ok(Fidelity {
        value: Some(a),
        half_step: Some(b),
        warning,
    })
}

/// Fidelity susceptibility at `λ` by a finite difference of step `ε`
/// (backward when `λ + ε > 1`), with an `ε/2` consistency check.
pub fn fidelity_susceptibility(
    ham: &SparseHamiltonian,
    lambda: f64,
    epsilon: f64,
    options: &LanczosOptions,
) -> Result<Fidelity> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon}")));
    }
    let r = ground(ham, lambda, options, true, 2, None)?;
    if r.ground_degeneracy > 1 {
        return Ok(Fidelity {
            value: None,
            half_step: None,
            warning: Some(format!("degenerate ground state at λ = {lambda}")),
        });
    }
    fidelity_from(ham, lambda, epsilon, &r.vectors[0], options)
}

fn point(ham: &SparseHamiltonian, lambda: f64, options: &SweepOptions) -> Result<SweepRecord> {
    let r = ground(ham, lambda, &options.lanczos, true, options.states.max(2), None)?;
    let h = ham.at(lambda)?;
    let deg = r.ground_degeneracy;
    let avg = |f: &dyn Fn(&[Complex64]) -> f64| r.vectors[..deg].iter().map(|v| f(v)).sum::<f64>() / deg as f64;
    let exp_he = avg(&|v| h.electric_expectation(v));
    let exp_hb = avg(&|v| h.magnetic_expectation(v));
    let (chi, warning) = if deg > 1 {
        (None, None)
    } else if options.fidelity {
        let f = fidelity_from(ham, lambda, options.epsilon, &r.vectors[0], &options.lanczos)?;
        (f.value, f.warning)
    } else {
        (None, None)
    };
    Ok(SweepRecord {
        lambda,
        e0: r.values[0],
        gap: r.values.get(1).map_or(f64::INFINITY, |e1| e1 - r.values[0]),
        exp_he,
        exp_hb,
        chi,
        degeneracy: deg,
        warning,
    })
}

/// Ground-state observables on every grid point, in grid order.
pub fn sweep(ham: &SparseHamiltonian, grid: &[f64], options: &SweepOptions) -> Result<Vec<SweepRecord>> {
    if grid.iter().any(|l| !(0.0..=1.0).contains(l)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "λ grid must be strictly increasing inside [0, 1]".into(),
        ));
    }
    grid.par_iter()
        .map(|&l| {
            point(ham, l, options).map_err(|e| match e {
                Error::NoConvergence { iterations, residuals } => Error::NoConvergence {
                    iterations,
                    residuals: std::iter::once(l).chain(residuals).collect(),
                },
                other => Error::Consistency(format!("at λ = {l}: {other}")),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub lambda: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionPoints {
    pub electric: Option<Estimate>,
    pub magnetic: Option<Estimate>,
    pub fidelity: Option<Estimate>,
}

/// Vertex of the parabola through three points, or the middle point when
/// they are collinear.
fn parabola_peak(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if a.abs() < 1e-300 {
        return x[1];
    }
    let b = d1 - a * (x[0] + x[1]);
    (-b / (2.0 * a)).clamp(x[0], x[2])
}

/// Interior maximum of `y(x)`, refined by a parabola through its neighbours.
fn interior_peak(x: &[f64], y: &[f64]) -> Option<Estimate> {
    if x.len() < 3 {
        return None;
    }
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return None;
    }
    let i = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b]).then(b.cmp(&a)))?;
    if i == 0 || i + 1 == y.len() {
        return None;
    }
    Some(Estimate {
        lambda: parabola_peak([x[i - 1], x[i], x[i + 1]], [y[i - 1], y[i], y[i + 1]]),
        uncertainty: (x[i + 1] - x[i - 1]) / 2.0,
    })
}

fn sharpest_variation(x: &[f64], y: &[f64]) -> Option<Estimate> {
    if x.len() < 5 {
        return None;
    }
    let xs: Vec<f64> = x[1..x.len() - 1].to_vec();
    let slopes: Vec<f64> = (1..x.len() - 1)
        .map(|i| ((y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1])).abs())
        .collect();
    interior_peak(&xs, &slopes)
}

/// Transition estimates from the steepest change of `<H_E>` and `<H_B>` and
/// from the peak of the fidelity susceptibility.
pub fn transition_points(records: &[SweepRecord]) -> Result<TransitionPoints> {
    if records.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "{} sweep points, need at least 5",
            records.len()
        )));
    }
    let x: Vec<f64> = records.iter().map(|r| r.lambda).collect();
    let he: Vec<f64> = records.iter().map(|r| r.exp_he).collect();
    let hb: Vec<f64> = records.iter().map(|r| r.exp_hb).collect();
    let (cx, cy): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter_map(|r| r.chi.map(|c| (r.lambda, c)))
        .unzip();
    Ok(TransitionPoints {
        electric: sharpest_variation(&x, &he),
        magnetic: sharpest_variation(&x, &hb),
        fidelity: interior_peak(&cx, &cy),
    })
}
