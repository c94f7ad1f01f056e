//! Property checks shared by the proptest suites and the acceptance run.
//! Each returns a description of the first violation.

use finite_gauge::electric::{cayley_components, cayley_laplacian, electric_levels, GammaSet};
use finite_gauge::hamiltonian::{ClassFunction, HermitianOperator, SparseHamiltonian};
use finite_gauge::linalg::symmetric_eigen;
use finite_gauge::representation::{
    averaging_projector, check_invariance, dim_invariant, invariant_basis, verify_irreps, IrrepSet,
    SiteSignature, DEFAULT_TENSOR_CAP,
};
use finite_gauge::spectra::{dense_eig, lanczos_lowest, EigenResult, LanczosOptions};
use finite_gauge::spin_network::SpinNetworkBasis;

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn irreps_valid(set: &IrrepSet) -> Check {
    let report = verify_irreps(set.group(), set.irreps());
    match report.first_failure(1e-10) {
        None => Ok(()),
        Some(why) => Err(format!("order {}: {why}", set.group().order())),
    }
}

/// `P² = P`, `P = P†` and `tr P = dim Inv` for the averaging projector.
pub fn projector_idempotent(set: &IrrepSet, sig: &SiteSignature) -> Check {
    let p = averaging_projector(set, sig);
    let idem = (&p * &p - &p).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    ensure(idem < 1e-10, || format!("{sig:?}: |P² - P| = {idem:e}"))?;
    let herm = (&p - p.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    ensure(herm < 1e-10, || format!("{sig:?}: |P - P†| = {herm:e}"))?;
    let tr = p.trace();
    let k = dim_invariant(set, sig).map_err(|e| e.to_string())?;
    ensure((tr.re - k as f64).abs() < 1e-9 && tr.im.abs() < 1e-9, || {
        format!("{sig:?}: trace {tr} vs dim Inv {k}")
    })
}

pub fn tensors_invariant(set: &IrrepSet, sig: &SiteSignature) -> Check {
    let basis = invariant_basis(set, sig, DEFAULT_TENSOR_CAP).map_err(|e| e.to_string())?;
    let k = dim_invariant(set, sig).map_err(|e| e.to_string())?;
    ensure(basis.dim_inv() == k, || format!("{sig:?}: {} tensors, expected {k}", basis.dim_inv()))?;
    check_invariance(set, &basis).map_err(|e| format!("{sig:?}: {e}"))
}

/// Cayley-Laplacian spectrum equals `{f(j)} × dim(j)²` and the zero count
/// equals both `|G|/|<Γ>|` and the number of graph components.
pub fn cayley_spectrum_law(set: &IrrepSet, gamma: &GammaSet) -> Check {
    let group = set.group();
    let spectrum = electric_levels(set, gamma).map_err(|e| e.to_string())?;
    let lap = cayley_laplacian(group, gamma, 4096).map_err(|e| e.to_string())?;
    let (eig, _) = symmetric_eigen(&lap);
    let expect = spectrum.laplacian_multiset();
    let worst = eig.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(eig.len() == expect.len() && worst < 1e-9, || {
        format!("Γ = {:?}: multiset mismatch {worst:e}", gamma.members().members())
    })?;
    let zeros = eig.iter().filter(|v| v.abs() < 1e-9).count();
    let comps = cayley_components(group, gamma).len();
    ensure(zeros == spectrum.degeneracy && comps == zeros, || {
        format!(
            "Γ = {:?}: degeneracy {} vs {zeros} zero eigenvalues vs {comps} components",
            gamma.members().members(),
            spectrum.degeneracy
        )
    })
}

fn ground(ham: &SparseHamiltonian) -> Result<EigenResult, String> {
    dense_eig(&ham.to_dense()).map_err(|e| e.to_string())
}

pub fn hermitian(ham: &SparseHamiltonian) -> Check {
    let defect = ham.magnetic().hermiticity_defect();
    ensure(defect <= 1e-12, || format!("stored defect {defect:e}"))?;
    let m = ham.to_dense();
    let asym = (&m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    ensure(asym == 0.0, || format!("assembled matrix asymmetry {asym:e}"))
}

/// `E₀ = (1-λ)⟨H_E⟩ + λ⟨H_B⟩` on the ground state.
pub fn energy_decomposition(ham: &SparseHamiltonian) -> Check {
    let r = ground(ham)?;
    let psi = &r.vectors[0];
    let l = ham.lambda();
    let rhs = (1.0 - l) * ham.electric_expectation(psi) + l * ham.magnetic_expectation(psi);
    ensure((r.values[0] - rhs).abs() < 1e-8, || {
        format!("λ = {l}: E0 = {} but decomposition gives {rhs}", r.values[0])
    })
}

/// `dE₀/dλ = ⟨H_B⟩ - ⟨H_E⟩` within 2%, skipped (Ok) near degeneracies.
pub fn hellmann_feynman(ham: &SparseHamiltonian) -> Result<bool, String> {
    let l = ham.lambda();
    let h = 1e-4;
    let r = ground(ham)?;
    if r.values.len() < 2 || r.values[1] - r.values[0] < 1e-3 {
        return Ok(false);
    }
    let e = |x: f64| -> Result<f64, String> { Ok(ground(&ham.at(x).map_err(|e| e.to_string())?)?.values[0]) };
    // second-order stencils throughout, one-sided at the ends of [0, 1]
    let fd = if l - h < 0.0 {
        (-3.0 * r.values[0] + 4.0 * e(l + h)? - e(l + 2.0 * h)?) / (2.0 * h)
    } else if l + h > 1.0 {
        (3.0 * r.values[0] - 4.0 * e(l - h)? + e(l - 2.0 * h)?) / (2.0 * h)
    } else {
        (e(l + h)? - e(l - h)?) / (2.0 * h)
    };
    let psi = &r.vectors[0];
    let hf = ham.magnetic_expectation(psi) - ham.electric_expectation(psi);
    ensure((fd - hf).abs() <= 0.02 * hf.abs() + 1e-6, || {
        format!("λ = {l}: finite difference {fd} vs ⟨H_B⟩ - ⟨H_E⟩ = {hf}")
    })?;
    Ok(true)
}

pub fn lanczos_matches_dense(ham: &SparseHamiltonian, k: usize) -> Check {
    let dense = ground(ham)?;
    let k = k.min(ham.dim());
    let lz = lanczos_lowest(ham, k, &LanczosOptions::default()).map_err(|e| e.to_string())?;
    for i in 0..k {
        let (a, b) = (lz.values[i], dense.values[i]);
        ensure((a - b).abs() < 1e-8 * a.abs().max(1.0), || {
            format!("λ = {}: level {i} Lanczos {a} vs dense {b}", ham.lambda())
        })?;
    }
    Ok(())
}

/// Physical spectrum does not depend on the order of each site's tensors.
pub fn convention_independent(basis: &SpinNetworkBasis, gamma: &GammaSet, h: &ClassFunction, lambda: f64) -> Check {
    let a = super::hamiltonian(basis, gamma, h, lambda);
    let b = super::hamiltonian(&basis.with_reversed_tensors(), gamma, h, lambda);
    let (ea, eb) = (ground(&a)?.values, ground(&b)?.values);
    let worst = ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    ensure(worst < 1e-9, || format!("λ = {lambda}: spectra differ by {worst:e}"))
}
