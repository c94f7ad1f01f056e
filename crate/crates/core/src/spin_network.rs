//! Gauge-invariant spin-network basis.
//!
//! A basis state assigns an irrep to every link and picks one invariant
//! tensor at every site, where a site's tensor lives in the product of its
//! attached links' irreps (dual on links leaving the site). States are
//! stored compactly as index tuples; the coefficient expansion into the
//! full link Hilbert space is never formed.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::electric::ElectricSpectrum;
use crate::error::{Error, Result};
use crate::group::GroupTable;
use crate::lattice::LatticeGraph;
use crate::representation::{
    dim_invariant, InvariantBasis, InvariantCache, IrrepSet, SiteSignature, Slot,
    DEFAULT_TENSOR_CAP,
};

pub const DEFAULT_STATE_CAP: u64 = 10_000_000;

/// `Σ_C (|G|/|C|)^(L-V)` as an exact integer.
pub fn physical_dimension(group: &GroupTable, num_links: usize, num_sites: usize) -> Result<BigUint> {
    let excess = num_links as i64 - num_sites as i64;
    if excess < -1 {
        return Err(Error::InvalidParameter(format!(
            "L - V = {excess} is impossible for a connected graph"
        )));
    }
    let order = group.order();
    if excess == -1 {
        // Σ_C |C|/|G| = 1 on a tree
        debug_assert_eq!(group.classes().iter().map(Vec::len).sum::<usize>(), order);
        return Ok(BigUint::from(1u32));
    }
    Ok(group
        .classes()
        .iter()
        .map(|c| BigUint::from(order / c.len()).pow(excess as u32))
        .sum())
}

#[derive(Debug, Clone, Copy)]
pub struct BasisOptions {
    pub state_cap: u64,
    pub tensor_cap: usize,
}

impl Default for BasisOptions {
    fn default() -> Self {
        BasisOptions {
            state_cap: DEFAULT_STATE_CAP,
            tensor_cap: DEFAULT_TENSOR_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpinNetworkBasis {
    irreps: Arc<IrrepSet>,
    lattice: Arc<LatticeGraph>,
    site_links: Vec<Vec<(usize, bool)>>,
    /// `len × L`, irrep id per link.
    assignments: Vec<u16>,
    /// `len × V`, invariant-tensor index per site.
    choices: Vec<u32>,
    len: usize,
    tensors: BTreeMap<SiteSignature, Arc<InvariantBasis>>,
    index: HashMap<(Vec<u16>, Vec<u32>), usize>,
}

impl SpinNetworkBasis {
    /// Assembles a basis from a sorted state list and the tensors it uses.
    pub(crate) fn from_states(
        irreps: Arc<IrrepSet>,
        lattice: Arc<LatticeGraph>,
        states: Vec<(Vec<u16>, Vec<u32>)>,
        tensors: BTreeMap<SiteSignature, Arc<InvariantBasis>>,
    ) -> Result<Self> {
        let site_links: Vec<_> = (0..lattice.num_sites())
            .map(|x| lattice.site_links(x))
            .collect();
        let (num_links, num_sites) = (lattice.num_links(), lattice.num_sites());
        let mut assignments = Vec::with_capacity(states.len() * num_links);
        let mut choices = Vec::with_capacity(states.len() * num_sites);
        let mut index = HashMap::with_capacity(states.len());
        for (i, (a, c)) in states.iter().enumerate() {
            if a.len() != num_links || c.len() != num_sites {
                return Err(Error::Consistency("state shape does not match lattice".into()));
            }
            assignments.extend_from_slice(a);
            choices.extend_from_slice(c);
            if index.insert((a.clone(), c.clone()), i).is_some() {
                return Err(Error::Consistency(format!("duplicate basis state at {i}")));
            }
        }
        let basis = SpinNetworkBasis {
            irreps,
            lattice,
            site_links,
            assignments,
            choices,
            len: states.len(),
            tensors,
            index,
        };
        for i in 0..basis.len {
            for x in 0..num_sites {
                let sig = basis.site_signature(i, x);
                let t = basis.tensors.get(&sig).ok_or_else(|| {
                    Error::Consistency(format!("missing invariant tensors for {sig:?}"))
                })?;
                if basis.choices(i)[x] as usize >= t.dim_inv() {
                    return Err(Error::Consistency(format!(
                        "state {i} picks tensor {} of {} at site {x}",
                        basis.choices(i)[x],
                        t.dim_inv()
                    )));
                }
            }
        }
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn irreps(&self) -> &Arc<IrrepSet> {
        &self.irreps
    }

    pub fn lattice(&self) -> &Arc<LatticeGraph> {
        &self.lattice
    }

    pub fn assignment(&self, i: usize) -> &[u16] {
        let l = self.lattice.num_links();
        &self.assignments[i * l..(i + 1) * l]
    }

    pub fn choices(&self, i: usize) -> &[u32] {
        let v = self.lattice.num_sites();
        &self.choices[i * v..(i + 1) * v]
    }

    pub fn site_links(&self, x: usize) -> &[(usize, bool)] {
        &self.site_links[x]
    }

    pub fn site_signature(&self, i: usize, x: usize) -> SiteSignature {
        signature_of(&self.site_links[x], self.assignment(i))
    }

    pub fn site_tensors(&self, sig: &SiteSignature) -> Option<&Arc<InvariantBasis>> {
        self.tensors.get(sig)
    }

    pub fn tensor_table(&self) -> &BTreeMap<SiteSignature, Arc<InvariantBasis>> {
        &self.tensors
    }

    pub fn find(&self, assignment: &[u16], choices: &[u32]) -> Option<usize> {
        self.index
            .get(&(assignment.to_vec(), choices.to_vec()))
            .copied()
    }

    /// True when every stored invariant tensor is real.
    pub fn is_real(&self) -> bool {
        self.tensors.values().all(|t| t.is_real())
    }

    /// Same states with every site's tensor list reversed: a different but
    /// equally valid basis choice.
    pub fn with_reversed_tensors(&self) -> Self {
        let mut out = self.clone();
        out.tensors = self
            .tensors
            .iter()
            .map(|(k, v)| (k.clone(), Arc::new(v.reversed())))
            .collect();
        out
    }
}

fn signature_of(site_links: &[(usize, bool)], assignment: &[u16]) -> SiteSignature {
    SiteSignature::new(
        site_links
            .iter()
            .map(|&(l, dual)| Slot {
                irrep: assignment[l] as usize,
                dual,
            })
            .collect(),
    )
}

struct Dfs<'a> {
    set: &'a IrrepSet,
    order: Vec<usize>,
    completes: Vec<Vec<usize>>,
    site_links: &'a [Vec<(usize, bool)>],
}

impl Dfs<'_> {
    fn run(
        &self,
        depth: usize,
        assignment: &mut Vec<u16>,
        memo: &mut HashMap<SiteSignature, usize>,
        out: &mut Vec<(Vec<u16>, Vec<usize>)>,
    ) -> Result<()> {
        if depth == self.order.len() {
            let dims = (0..self.site_links.len())
                .map(|x| Ok(memo[&signature_of(&self.site_links[x], assignment)]))
                .collect::<Result<Vec<_>>>()?;
            out.push((assignment.clone(), dims));
            return Ok(());
        }
        let link = self.order[depth];
        'irreps: for j in 0..self.set.len() {
            assignment[link] = j as u16;
            for &x in &self.completes[depth] {
                let sig = signature_of(&self.site_links[x], assignment);
                let d = match memo.get(&sig) {
                    Some(&d) => d,
                    None => {
                        let d = dim_invariant(self.set, &sig)?;
                        memo.insert(sig, d);
                        d
                    }
                };
                if d == 0 {
                    continue 'irreps;
                }
            }
            self.run(depth + 1, assignment, memo, out)?;
        }
        assignment[link] = u16::MAX;
        Ok(())
    }
}

/// Enumerates every spin-network state, pruning with the character count as
/// soon as a site's links are all assigned.
pub fn enumerate_basis(
    irreps: Arc<IrrepSet>,
    lattice: Arc<LatticeGraph>,
    options: BasisOptions,
    cache: &InvariantCache,
) -> Result<SpinNetworkBasis> {
    let group = irreps.group().clone();
    let expected = physical_dimension(&group, lattice.num_links(), lattice.num_sites())?;
    if expected > BigUint::from(options.state_cap) {
        return Err(Error::SizeLimit {
            what: "physical Hilbert space dimension",
            actual: u128::try_from(&expected).unwrap_or(u128::MAX),
            limit: options.state_cap as u128,
        });
    }
    if lattice.num_links() == 0 {
        return Err(Error::Unsupported("lattice without links".into()));
    }
    let site_links: Vec<Vec<(usize, bool)>> =
        (0..lattice.num_sites()).map(|x| lattice.site_links(x)).collect();

    // Visit links site by site so that sites complete as early as possible.
    let mut order = Vec::new();
    let mut placed = vec![false; lattice.num_links()];
    for links in &site_links {
        for &(l, _) in links {
            if !placed[l] {
                placed[l] = true;
                order.push(l);
            }
        }
    }
    let mut completes = vec![Vec::new(); order.len()];
    for (x, links) in site_links.iter().enumerate() {
        let last = links
            .iter()
            .map(|&(l, _)| order.iter().position(|&o| o == l).unwrap())
            .max();
        if let Some(depth) = last {
            completes[depth].push(x);
        }
    }

    let dfs = Dfs {
        set: &irreps,
        order,
        completes,
        site_links: &site_links,
    };
    let nirr = irreps.len();
    let prefixes: Vec<Vec<u16>> = match dfs.order.len() {
        0 => vec![vec![]],
        1 => (0..nirr as u16).map(|a| vec![a]).collect(),
        _ => (0..nirr as u16)
            .flat_map(|a| (0..nirr as u16).map(move |b| vec![a, b]))
            .collect(),
    };
    let branches: Vec<Vec<(Vec<u16>, Vec<usize>)>> = prefixes
        .par_iter()
        .map(|prefix| {
            let mut assignment = vec![u16::MAX; lattice.num_links()];
            let mut memo = HashMap::new();
            for (depth, &j) in prefix.iter().enumerate() {
                assignment[dfs.order[depth]] = j;
                for &x in &dfs.completes[depth] {
                    let sig = signature_of(&site_links[x], &assignment);
                    let d = dim_invariant(&irreps, &sig)?;
                    memo.insert(sig, d);
                    if d == 0 {
                        return Ok(Vec::new());
                    }
                }
            }
            let mut out = Vec::new();
            dfs.run(prefix.len(), &mut assignment, &mut memo, &mut out)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut states: Vec<(Vec<u16>, Vec<u32>)> = Vec::new();
    for (assignment, dims) in branches.into_iter().flatten() {
        let mut choice = vec![0u32; dims.len()];
        // odometer over invariant-tensor choices, last site fastest
        'next: loop {
            states.push((assignment.clone(), choice.clone()));
            for x in (0..dims.len()).rev() {
                choice[x] += 1;
                if (choice[x] as usize) < dims[x] {
                    continue 'next;
                }
                choice[x] = 0;
            }
            break;
        }
    }
    states.sort_unstable();

    if BigUint::from(states.len()) != expected {
        return Err(Error::Consistency(format!(
            "enumerated {} states but the class formula gives {expected}",
            states.len()
        )));
    }

    let mut signatures: Vec<SiteSignature> = states
        .iter()
        .flat_map(|(a, _)| site_links.iter().map(|sl| signature_of(sl, a)))
        .collect();
    signatures.sort_unstable();
    signatures.dedup();
    let computed: Vec<Arc<InvariantBasis>> = signatures
        .par_iter()
        .map(|sig| cache.get_or_compute(&irreps, sig))
        .collect::<Result<_>>()?;
    let tensors = signatures.into_iter().zip(computed).collect();

    SpinNetworkBasis::from_states(irreps, lattice, states, tensors)
}

/// `Σ_links f(j_l)` for every basis state.
pub fn electric_diagonal(basis: &SpinNetworkBasis, spectrum: &ElectricSpectrum) -> Result<Vec<f64>> {
    if spectrum.levels.len() != basis.irreps().len() {
        return Err(Error::InvalidParameter(format!(
            "electric spectrum covers {} irreps, basis uses {}",
            spectrum.levels.len(),
            basis.irreps().len()
        )));
    }
    Ok((0..basis.len())
        .map(|i| {
            basis
                .assignment(i)
                .iter()
                .map(|&j| spectrum.levels[j as usize])
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electric::{electric_levels, validate_gamma};
    use crate::group::{build_cyclic, build_dihedral, Subset};
    use crate::lattice::hypercubic;
    use crate::representation::builtin_irreps;

    fn basis(group: GroupTable, ext: &[usize], per: &[bool]) -> SpinNetworkBasis {
        let set = Arc::new(builtin_irreps(Arc::new(group)).unwrap());
        let lat = Arc::new(hypercubic(ext, per).unwrap());
        enumerate_basis(set, lat, BasisOptions::default(), &InvariantCache::default()).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let d4 = build_dihedral(4).unwrap();
        let dim = |l, v| physical_dimension(&d4, l, v).unwrap().to_string();
        assert_eq!(dim(8, 4), "8960");
        assert_eq!(dim(18, 9), "269221888");
        assert_eq!(dim(3, 4), "1");
        assert!(physical_dimension(&d4, 2, 4).is_err());
        let z5 = build_cyclic(5).unwrap();
        assert_eq!(physical_dimension(&z5, 7, 4).unwrap(), BigUint::from(5u32).pow(4));
    }

    #[test]
    fn z2_single_plaquette() {
        let b = basis(build_cyclic(2).unwrap(), &[2, 2], &[false, false]);
        assert_eq!(b.len(), 2);
        assert_eq!(b.assignment(0), &[0, 0, 0, 0]);
        assert_eq!(b.assignment(1), &[1, 1, 1, 1]);
        let z2 = b.irreps().group().clone();
        let gamma = validate_gamma(&z2, &Subset::new(&z2, [1]).unwrap()).unwrap();
        let spec = electric_levels(b.irreps(), &gamma).unwrap();
        assert_eq!(electric_diagonal(&b, &spec).unwrap(), vec![0.0, 8.0]);
    }

    #[test]
    fn d4_open_plaquette_and_ordering() {
        let b = basis(build_dihedral(4).unwrap(), &[2, 2], &[false, false]);
        assert_eq!(b.len(), 5);
        assert!(b.assignment(0).iter().all(|&j| j == 0));
        for i in 1..b.len() {
            let prev = (b.assignment(i - 1), b.choices(i - 1));
            assert!(prev < (b.assignment(i), b.choices(i)));
        }
        assert_eq!(b.find(b.assignment(3), b.choices(3)), Some(3));
    }

    #[test]
    fn electric_diagonal_is_independent_of_tensor_choice() {
        let b = basis(build_dihedral(4).unwrap(), &[2, 2], &[true, false]);
        let g = b.irreps().group().clone();
        let gamma = crate::electric::D4Preset::Gamma1.build(&g).unwrap();
        let spec = electric_levels(b.irreps(), &gamma).unwrap();
        let diag = electric_diagonal(&b, &spec).unwrap();
        for i in 1..b.len() {
            if b.assignment(i) == b.assignment(i - 1) {
                assert_eq!(diag[i], diag[i - 1]);
            }
        }
    }

    #[test]
    fn state_cap() {
        let set = Arc::new(builtin_irreps(Arc::new(build_dihedral(4).unwrap())).unwrap());
        let lat = Arc::new(hypercubic(&[2, 2], &[true, true]).unwrap());
        let opts = BasisOptions {
            state_cap: 1000,
            ..Default::default()
        };
        assert!(matches!(
            enumerate_basis(set, lat, opts, &InvariantCache::default()),
            Err(Error::SizeLimit { .. })
        ));
    }
}
