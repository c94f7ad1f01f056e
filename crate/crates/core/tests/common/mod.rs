#![allow(dead_code)]

pub mod properties;

use std::sync::Arc;

use finite_gauge::electric::{electric_levels, validate_gamma, GammaSet};
use finite_gauge::group::{build_cyclic, build_dihedral, GroupTable, Subset};
use finite_gauge::hamiltonian::{assemble, ClassFunction, SparseHamiltonian};
use finite_gauge::lattice::{hypercubic, LatticeGraph};
use finite_gauge::representation::{builtin_irreps, InvariantCache, IrrepSet};
use finite_gauge::spin_network::{enumerate_basis, BasisOptions, SpinNetworkBasis};

pub fn cyclic(n: usize) -> Arc<IrrepSet> {
    irreps(build_cyclic(n).unwrap())
}

pub fn dihedral(n: usize) -> Arc<IrrepSet> {
    irreps(build_dihedral(n).unwrap())
}

pub fn irreps(g: GroupTable) -> Arc<IrrepSet> {
    Arc::new(builtin_irreps(Arc::new(g)).unwrap())
}

/// Every nonempty union of non-identity conjugacy classes that is closed
/// under inversion.
pub fn all_gammas(group: &GroupTable) -> Vec<GammaSet> {
    let classes: Vec<&Vec<usize>> = group
        .classes()
        .iter()
        .filter(|c| !c.contains(&group.identity()))
        .collect();
    let mut out = Vec::new();
    for mask in 1u32..(1 << classes.len()) {
        let members: Vec<usize> = classes
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .flat_map(|(_, c)| c.iter().copied())
            .collect();
        if members.iter().all(|&g| members.contains(&group.inv(g))) {
            out.push(validate_gamma(group, &Subset::new(group, members).unwrap()).unwrap());
        }
    }
    out
}

/// The inversion-closed class union picked by `pick` among [`all_gammas`].
pub fn gamma_by_index(group: &GroupTable, pick: usize) -> GammaSet {
    let all = all_gammas(group);
    all[pick % all.len()].clone()
}

pub fn lattice(extents: &[usize], periodic: &[bool]) -> Arc<LatticeGraph> {
    Arc::new(hypercubic(extents, periodic).unwrap())
}

pub fn basis(set: &Arc<IrrepSet>, lat: &Arc<LatticeGraph>) -> SpinNetworkBasis {
    enumerate_basis(set.clone(), lat.clone(), BasisOptions::default(), &InvariantCache::default()).unwrap()
}

/// `scale · Re χ_j` for the first irrep of largest dimension that is
/// faithful, falling back to the last irrep.
pub fn default_magnetic(set: &IrrepSet, scale: f64) -> ClassFunction {
    let j = set
        .irreps()
        .iter()
        .filter(|r| r.is_faithful())
        .max_by_key(|r| (r.dim(), std::cmp::Reverse(r.id())))
        .map_or(set.len() - 1, |r| r.id());
    ClassFunction::real_trace(set, j, scale).unwrap()
}

pub fn hamiltonian(basis: &SpinNetworkBasis, gamma: &GammaSet, h: &ClassFunction, lambda: f64) -> SparseHamiltonian {
    let spectrum = electric_levels(basis.irreps(), gamma).unwrap();
    assemble(basis, &spectrum, h, lambda).unwrap()
}
