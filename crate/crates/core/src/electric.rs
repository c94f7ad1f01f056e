//! Generating sets, the Cayley-graph Laplacian, and per-irrep electric
//! energies.
//!
//! The single-link electric Hamiltonian is the graph Laplacian of the Cayley
//! graph of `(G, Γ)`. It is diagonal in the irrep basis with eigenvalue
//! `f(j) = |Γ| - (1/dim j) Σ_{k∈Γ} χ_j(k)` on each of the `dim(j)^2` states
//! of irrep `j`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, GammaViolation, Result};
use crate::group::{generated_subgroup, GroupFamily, GroupTable, Subset};
use crate::representation::{CMatrix, IrrepSet};

/// Default largest group order for which the dense Laplacian is built.
pub const DEFAULT_DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaProvenance {
    Explicit,
    TransferMatrix,
}

/// A validated generating set: identity-free, inversion-closed, and a union
/// of conjugacy classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaSet {
    members: Subset,
    provenance: GammaProvenance,
}

impl GammaSet {
    pub fn members(&self) -> &Subset {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn provenance(&self) -> GammaProvenance {
        self.provenance
    }
}

/// Checks the three generating-set conditions and reports every violation.
pub fn validate_gamma(group: &GroupTable, members: &Subset) -> Result<GammaSet> {
    let mut violations = Vec::new();
    if members.is_empty() {
        violations.push(GammaViolation::Empty);
    }
    if members.contains(group.identity()) {
        violations.push(GammaViolation::ContainsIdentity);
    }
    for &g in members.members() {
        let inverse = group.inv(g);
        if !members.contains(inverse) {
            violations.push(GammaViolation::MissingInverse { element: g, inverse });
        }
    }
    for &g in members.members() {
        for by in 0..group.order() {
            let conjugate = group.conjugate(by, g);
            if !members.contains(conjugate) {
                violations.push(GammaViolation::NotConjugationClosed {
                    element: g,
                    by,
                    conjugate,
                });
                break;
            }
        }
    }
    if violations.is_empty() {
        Ok(GammaSet {
            members: members.clone(),
            provenance: GammaProvenance::Explicit,
        })
    } else {
        Err(Error::InvalidGamma(violations))
    }
}

/// Non-identity elements maximizing `Re tr ρ(g)`; ties are all kept.
pub fn transfer_matrix_gamma(group: &GroupTable, rep: &[CMatrix]) -> Result<GammaSet> {
    if rep.len() != group.order() {
        return Err(Error::InvalidParameter(format!(
            "representation has {} matrices for a group of order {}",
            rep.len(),
            group.order()
        )));
    }
    if group.order() < 2 {
        return Err(Error::InvalidParameter(
            "trivial group has no non-identity elements".into(),
        ));
    }
    let weight = |g: usize| rep[g].trace().re;
    let best = (0..group.order())
        .filter(|&g| g != group.identity())
        .map(weight)
        .fold(f64::NEG_INFINITY, f64::max);
    let members = (0..group.order())
        .filter(|&g| g != group.identity() && (weight(g) - best).abs() < 1e-9);
    let mut gamma = validate_gamma(group, &Subset::new(group, members)?)?;
    gamma.provenance = GammaProvenance::TransferMatrix;
    Ok(gamma)
}

/// Named generating sets of `D_4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum D4Preset {
    /// `{r, r^3, s, r^2 s}`
    Gamma1,
    /// `{r, r^3, s, r s, r^2 s, r^3 s}`, the transfer-matrix choice for the
    /// faithful irrep.
    Gamma2,
    /// `{r, r^2, r^3}`, generating only the rotations.
    Gamma3,
}

impl D4Preset {
    pub const ALL: [D4Preset; 3] = [D4Preset::Gamma1, D4Preset::Gamma2, D4Preset::Gamma3];

    pub fn element_names(self) -> &'static [&'static str] {
        match self {
            D4Preset::Gamma1 => &["r", "r^3", "s", "r^2s"],
            D4Preset::Gamma2 => &["r", "r^3", "s", "rs", "r^2s", "r^3s"],
            D4Preset::Gamma3 => &["r", "r^2", "r^3"],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            D4Preset::Gamma1 => "gamma1",
            D4Preset::Gamma2 => "gamma2",
            D4Preset::Gamma3 => "gamma3",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        D4Preset::ALL.into_iter().find(|p| p.label() == label)
    }

    pub fn build(self, group: &GroupTable) -> Result<GammaSet> {
        if group.family() != GroupFamily::Dihedral(4) {
            return Err(Error::InvalidParameter(
                "D4 presets need the built-in dihedral group of order 8".into(),
            ));
        }
        validate_gamma(group, &Subset::from_names(group, self.element_names())?)
    }
}

/// Dense `|Γ| I - A` with `A[g][h] = 1` iff `g h^-1 ∈ Γ`.
pub fn cayley_laplacian(group: &GroupTable, gamma: &GammaSet, cap: usize) -> Result<DMatrix<f64>> {
    let n = group.order();
    if n > cap {
        return Err(Error::SizeLimit {
            what: "group order for dense Laplacian",
            actual: n as u128,
            limit: cap as u128,
        });
    }
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for g in 0..n {
        lap[(g, g)] = gamma.len() as f64;
        for h in 0..n {
            if gamma.members().contains(group.mul(g, group.inv(h))) {
                lap[(g, h)] -= 1.0;
            }
        }
    }
    Ok(lap)
}

/// Connected components of the Cayley graph, each sorted, ordered by least
/// member.
pub fn cayley_components(group: &GroupTable, gamma: &GammaSet) -> Vec<Vec<usize>> {
    let n = group.order();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        comp[start] = id;
        while let Some(g) = stack.pop() {
            members.push(g);
            for &k in gamma.members().members() {
                let h = group.mul(k, g);
                if comp[h] == usize::MAX {
                    comp[h] = id;
                    stack.push(h);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectricSpectrum {
    /// `f(j)` indexed by irrep id.
    pub levels: Vec<f64>,
    pub dims: Vec<usize>,
    /// `|G| / |<Γ>|`
    pub degeneracy: usize,
}

impl ElectricSpectrum {
    pub fn level(&self, j: usize) -> f64 {
        self.levels[j]
    }

    /// Every Laplacian eigenvalue, `f(j)` repeated `dim(j)^2` times, sorted.
    pub fn laplacian_multiset(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .levels
            .iter()
            .zip(&self.dims)
            .flat_map(|(&f, &d)| std::iter::repeat_n(f, d * d))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

/// `f(j)` for every irrep, plus the per-link ground-state degeneracy.
pub fn electric_levels(set: &IrrepSet, gamma: &GammaSet) -> Result<ElectricSpectrum> {
    let group = set.group();
    let mut levels = Vec::with_capacity(set.len());
    for irrep in set.irreps() {
        let sum: Complex64 = gamma.members().members().iter().map(|&k| irrep.chi(k)).sum();
        let f = Complex64::new(gamma.len() as f64, 0.0) - sum / irrep.dim() as f64;
        if f.im.abs() >= 1e-9 {
            return Err(Error::Consistency(format!(
                "electric level of irrep {} has imaginary part {:e}",
                irrep.id(),
                f.im
            )));
        }
        // exact zero for the trivial irrep and other kernel-containing cases
        levels.push(if f.re.abs() < 1e-12 { 0.0 } else { f.re });
    }
    Ok(ElectricSpectrum {
        levels,
        dims: set.irreps().iter().map(|r| r.dim()).collect(),
        degeneracy: ground_degeneracy(group, gamma)?,
    })
}

/// `|G| / |<Γ>|`.
pub fn ground_degeneracy(group: &GroupTable, gamma: &GammaSet) -> Result<usize> {
    Ok(generated_subgroup(group, gamma.members())?.index)
}
