//! Brute-force group-element-basis construction for tiny lattices.
//!
//! Everything here works directly on `|g_0 g_1 … g_{L-1}⟩` product states
//! and never touches irreps, invariant tensors or selection rules, so it can
//! be used to check the spin-network pipeline end to end.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::electric::{electric_levels, GammaSet};
use crate::error::{Error, Result};
use crate::group::GroupTable;
use crate::hamiltonian::{assemble, ClassFunction};
use crate::lattice::LatticeGraph;
use crate::linalg::hermitian_eigen;
use crate::representation::{InvariantCache, IrrepSet};
use crate::spectra::{dense_eig, lanczos_lowest, LanczosOptions, DENSE_CAP};
use crate::spin_network::{enumerate_basis, physical_dimension, BasisOptions};

/// Largest full-basis dimension `|G|^L` accepted.
pub const ORACLE_DIM_CAP: u64 = 1_000_000;
/// Largest `|G|^V · |G|^L` for the exhaustive gauge average.
pub const PROJECTOR_BUDGET: u64 = 200_000_000;

fn full_dim(group: &GroupTable, lat: &LatticeGraph) -> Result<usize> {
    let d = (group.order() as u64)
        .checked_pow(lat.num_links() as u32)
        .filter(|&d| d <= ORACLE_DIM_CAP)
        .ok_or(Error::SizeLimit {
            what: "full group-element basis",
            actual: (group.order() as u128).saturating_pow(lat.num_links() as u32),
            limit: ORACLE_DIM_CAP as u128,
        })?;
    Ok(d as usize)
}

fn decode(mut index: usize, order: usize, links: usize) -> Vec<usize> {
    (0..links)
        .map(|_| {
            let g = index % order;
            index /= order;
            g
        })
        .collect()
}

fn encode(config: &[usize], order: usize) -> usize {
    config.iter().rev().fold(0, |acc, &g| acc * order + g)
}

/// Real operator on the full basis, stored as sorted `(row, col, value)`
/// triples.
#[derive(Debug, Clone, PartialEq)]
pub struct FullBasisOperator {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl FullBasisOperator {
    fn from_triples(dim: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        FullBasisOperator { dim, entries: merged }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(r, c), |e| (e.0, e.1))
            .map_or(0.0, |k| self.entries[k].2)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `max |A[r][c] - A[c][r]|`
    pub fn asymmetry(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `[A, Π]` for the permutation matrix `Π|i⟩ = |π(i)⟩`.
    pub fn commutator_with(&self, perm: &[usize]) -> f64 {
        // (ΠA - AΠ)[π(r)][π(c)] = A[r][c] - A[π(r)][π(c)]
        let mut worst = 0.0f64;
        let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
        for &(r, c, v) in &self.entries {
            worst = worst.max((v - self.get(perm[r], perm[c])).abs());
            seen.insert((perm[r], perm[c]), v);
        }
        for &(r, c, v) in &self.entries {
            if !seen.contains_key(&(r, c)) {
                worst = worst.max(v.abs());
            }
        }
        worst
    }
}

/// `(1-λ) Σ_links Σ_{k∈Γ} (1 - L_k) + λ Σ_plaquettes h(g_□)` in the
/// group-element basis, with `h` given per element.
pub fn full_hamiltonian(
    group: &GroupTable,
    lat: &LatticeGraph,
    gamma: &GammaSet,
    h_b: &[f64],
    lambda: f64,
) -> Result<FullBasisOperator> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} outside [0, 1]")));
    }
    if h_b.len() != group.order() {
        return Err(Error::InvalidParameter(format!(
            "h_B has {} values for a group of order {}",
            h_b.len(),
            group.order()
        )));
    }
    let dim = full_dim(group, lat)?;
    let order = group.order();
    let links = lat.num_links();
    let members = gamma.members().members();
    let mut triples = Vec::new();
    for i in 0..dim {
        let config = decode(i, order, links);
        let mut diag = (1.0 - lambda) * (links * members.len()) as f64;
        for p in lat.plaquettes() {
            let u = p.steps.iter().fold(group.identity(), |acc, s| {
                let g = config[s.link];
                group.mul(acc, if s.forward { g } else { group.inv(g) })
            });
            diag += lambda * h_b[u];
        }
        triples.push((i, i, diag));
        if lambda < 1.0 {
            let mut moved = config.clone();
            for l in 0..links {
                for &k in members {
                    moved[l] = group.mul(k, config[l]);
                    triples.push((encode(&moved, order), i, -(1.0 - lambda)));
                }
                moved[l] = config[l];
            }
        }
    }
    Ok(FullBasisOperator::from_triples(dim, triples))
}

/// Permutation `i ↦ π(i)` of the full basis under `g_l ↦ g_x g_l g_y⁻¹`
/// (`x` the source and `y` the target of each link).
pub fn gauge_permutation(group: &GroupTable, lat: &LatticeGraph, sites: &[usize]) -> Result<Vec<usize>> {
    if sites.len() != lat.num_sites() {
        return Err(Error::InvalidParameter(format!(
            "{} site elements for {} sites",
            sites.len(),
            lat.num_sites()
        )));
    }
    if let Some(&g) = sites.iter().find(|&&g| g >= group.order()) {
        return Err(Error::Index(format!("element {g}")));
    }
    let dim = full_dim(group, lat)?;
    let order = group.order();
    Ok((0..dim)
        .map(|i| {
            let config: Vec<usize> = decode(i, order, lat.num_links())
                .into_iter()
                .zip(lat.links())
                .map(|(g, l)| group.mul(group.mul(sites[l.source], g), group.inv(sites[l.target])))
                .collect();
            encode(&config, order)
        })
        .collect())
}

pub fn gauge_operator(group: &GroupTable, lat: &LatticeGraph, sites: &[usize]) -> Result<FullBasisOperator> {
    let perm = gauge_permutation(group, lat, sites)?;
    let dim = perm.len();
    Ok(FullBasisOperator::from_triples(
        dim,
        perm.into_iter().enumerate().map(|(i, p)| (p, i, 1.0)).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorMethod {
    /// Average over every site assignment.
    GroupSum,
    /// Orbits under single-site generator moves, used past the budget.
    GeneratorOrbits,
}

/// Group-averaging projector onto gauge-invariant states. Columns with the
/// same content are stored once.
#[derive(Debug, Clone)]
pub struct GaugeProjector {
    dim: usize,
    column_of: Vec<usize>,
    columns: Vec<Vec<(usize, f64)>>,
    trace: f64,
    method: ProjectorMethod,
}

impl GaugeProjector {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn method(&self) -> ProjectorMethod {
        self.method
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for &(i, w) in &self.columns[self.column_of[j]] {
                    y[i] += w * xj;
                }
            }
        }
        y
    }

    /// `max ‖P(Px) - Px‖ / ‖x‖` over seeded random vectors.
    pub fn idempotence_defect(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| {
                let x: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let px = self.apply(&x);
                let ppx = self.apply(&px);
                let d: f64 = ppx.iter().zip(&px).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                d / x.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max |P[i][j] - P[j][i]|`
    pub fn asymmetry(&self) -> f64 {
        let lookup = |i: usize, j: usize| {
            self.columns[self.column_of[j]]
                .iter()
                .find(|e| e.0 == i)
                .map_or(0.0, |e| e.1)
        };
        let mut worst = 0.0f64;
        for j in 0..self.dim {
            for &(i, w) in &self.columns[self.column_of[j]] {
                worst = worst.max((w - lookup(j, i)).abs());
            }
        }
        worst
    }

    /// Orthonormal basis of `range(P)` as sparse vectors: distinct nonzero
    /// columns, normalized and Gram-Schmidt orthogonalized.
    pub fn range_basis(&self) -> Vec<Vec<(usize, f64)>> {
        let mut out: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut dense_out: Vec<BTreeMap<usize, f64>> = Vec::new();
        for col in &self.columns {
            let mut v: BTreeMap<usize, f64> = col.iter().copied().collect();
            for (q, _) in dense_out.iter().zip(&out) {
                let p: f64 = v.iter().map(|(i, x)| x * q.get(i).copied().unwrap_or(0.0)).sum();
                if p != 0.0 {
                    for (i, y) in q {
                        *v.entry(*i).or_insert(0.0) -= p * y;
                    }
                }
            }
            let n = v.values().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-8 {
                let s: Vec<(usize, f64)> = v.into_iter().filter(|e| e.1 != 0.0).map(|(i, x)| (i, x / n)).collect();
                dense_out.push(s.iter().copied().collect());
                out.push(s);
            }
        }
        out
    }
}

fn assignments(order: usize, sites: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = order.pow(sites as u32);
    (0..total).map(move |a| decode(a, order, sites))
}

/// `P = |G|^{-V} Σ_{g_x} 𝒢({g_x})`.
pub fn gauge_projector(group: &GroupTable, lat: &LatticeGraph) -> Result<GaugeProjector> {
    gauge_projector_with_budget(group, lat, PROJECTOR_BUDGET)
}

/// As [`gauge_projector`], falling back to generator orbits when the
/// exhaustive average would exceed `budget` permutation steps.
pub fn gauge_projector_with_budget(group: &GroupTable, lat: &LatticeGraph, budget: u64) -> Result<GaugeProjector> {
    let dim = full_dim(group, lat)?;
    let order = group.order();
    let work = (order as u128)
        .saturating_pow(lat.num_sites() as u32)
        .saturating_mul(dim as u128);
    if work <= budget as u128 {
        let count = order.pow(lat.num_sites() as u32) as f64;
        let mut hits: Vec<HashMap<usize, u32>> = vec![HashMap::new(); dim];
        for a in assignments(order, lat.num_sites()) {
            let perm = gauge_permutation(group, lat, &a)?;
            for (j, &i) in perm.iter().enumerate() {
                *hits[j].entry(i).or_insert(0) += 1;
            }
        }
        let trace = (0..dim).map(|j| hits[j].get(&j).copied().unwrap_or(0) as f64).sum::<f64>() / count;
        let mut index: HashMap<Vec<(usize, u32)>, usize> = HashMap::new();
        let mut columns = Vec::new();
        let column_of = hits
            .into_iter()
            .map(|h| {
                let mut key: Vec<(usize, u32)> = h.into_iter().collect();
                key.sort_unstable();
                *index.entry(key.clone()).or_insert_with(|| {
                    columns.push(key.iter().map(|&(i, c)| (i, c as f64 / count)).collect());
                    columns.len() - 1
                })
            })
            .collect();
        return Ok(GaugeProjector {
            dim,
            column_of,
            columns,
            trace,
            method: ProjectorMethod::GroupSum,
        });
    }

    // Orbits under generator moves at one site at a time.
    let generators = group.generators();
    let mut moves = Vec::new();
    for x in 0..lat.num_sites() {
        for &g in &generators {
            let mut a = vec![group.identity(); lat.num_sites()];
            a[x] = g;
            moves.push(gauge_permutation(group, lat, &a)?);
        }
    }
    let mut column_of = vec![usize::MAX; dim];
    let mut columns = Vec::new();
    for start in 0..dim {
        if column_of[start] != usize::MAX {
            continue;
        }
        let id = columns.len();
        let mut orbit = vec![start];
        column_of[start] = id;
        let mut k = 0;
        while k < orbit.len() {
            let s = orbit[k];
            for m in &moves {
                if column_of[m[s]] == usize::MAX {
                    column_of[m[s]] = id;
                    orbit.push(m[s]);
                }
            }
            k += 1;
        }
        orbit.sort_unstable();
        let w = 1.0 / orbit.len() as f64;
        columns.push(orbit.into_iter().map(|i| (i, w)).collect::<Vec<_>>());
    }
    let trace = columns.len() as f64;
    Ok(GaugeProjector {
        dim,
        column_of,
        columns,
        trace,
        method: ProjectorMethod::GeneratorOrbits,
    })
}

/// Lowest `k` eigenvalues of `H` restricted to `range(P)`.
pub fn projected_spectrum(
    hamiltonian: &FullBasisOperator,
    projector: &GaugeProjector,
    k: usize,
) -> Result<Vec<f64>> {
    if hamiltonian.dim() != projector.dim() {
        return Err(Error::InvalidParameter("operator dimensions differ".into()));
    }
    let basis = projector.range_basis();
    let r = basis.len();
    if r > 4096 {
        return Err(Error::SizeLimit {
            what: "gauge-invariant subspace for dense projection",
            actual: r as u128,
            limit: 4096,
        });
    }
    let images: Vec<Vec<f64>> = basis
        .iter()
        .map(|v| {
            let mut x = vec![0.0; hamiltonian.dim()];
            for &(i, w) in v {
                x[i] = w;
            }
            hamiltonian.apply(&x)
        })
        .collect();
    let m = DMatrix::from_fn(r, r, |a, b| {
        Complex64::new(basis[a].iter().map(|&(i, w)| w * images[b][i]).sum(), 0.0)
    });
    let (mut values, _) = hermitian_eigen(&m);
    values.truncate(k);
    Ok(values)
}

/// Oracle against spin-network comparison at one coupling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalencePoint {
    pub lambda: f64,
    /// Largest `[H, 𝒢]` entry over single-site generator moves.
    pub commutator: f64,
    pub oracle: Vec<f64>,
    pub pipeline: Vec<f64>,
    pub max_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub projector_trace: f64,
    pub physical_dimension: u64,
    pub points: Vec<EquivalencePoint>,
}

impl EquivalenceReport {
    /// Exact trace, commutators within `commutator_tol`, spectra within
    /// `spectrum_tol`.
    pub fn passes(&self, commutator_tol: f64, spectrum_tol: f64) -> bool {
        self.projector_trace == self.physical_dimension as f64
            && self.points.iter().all(|p| {
                p.commutator <= commutator_tol
                    && p.oracle.len() == p.pipeline.len()
                    && p.max_difference <= spectrum_tol
            })
    }
}

/// Builds the same Hamiltonian twice, once in the full group-element basis
/// projected onto the gauge-invariant subspace and once in the spin-network
/// basis, and compares the lowest `min(k, dim)` levels at every `λ`.
pub fn equivalence_report(
    irreps: Arc<IrrepSet>,
    lattice: Arc<LatticeGraph>,
    gamma: &GammaSet,
    h: &ClassFunction,
    lambdas: &[f64],
    k: usize,
) -> Result<EquivalenceReport> {
    let group = irreps.group().clone();
    let projector = gauge_projector(&group, &lattice)?;
    let physdim = physical_dimension(&group, lattice.num_links(), lattice.num_sites())?;
    let physical_dimension = u64::try_from(&physdim)
        .map_err(|_| Error::Consistency("physical dimension overflows u64".into()))?;

    let mut moves = Vec::new();
    for x in 0..lattice.num_sites() {
        for &g in &group.generators() {
            let mut a = vec![group.identity(); lattice.num_sites()];
            a[x] = g;
            moves.push(gauge_permutation(&group, &lattice, &a)?);
        }
    }

    let basis = enumerate_basis(irreps.clone(), lattice.clone(), BasisOptions::default(), &InvariantCache::default())?;
    let spectrum = electric_levels(&irreps, gamma)?;
    let ham = assemble(&basis, &spectrum, h, 0.0)?;
    let keep = k.min(basis.len());

    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let full = full_hamiltonian(&group, &lattice, gamma, h.values(), lambda)?;
        let commutator = moves.iter().map(|m| full.commutator_with(m)).fold(0.0, f64::max);
        let oracle = projected_spectrum(&full, &projector, keep)?;
        let at = ham.at(lambda)?;
        let mut pipeline = if basis.len() <= DENSE_CAP {
            dense_eig(&at.to_dense())?.values
        } else {
            lanczos_lowest(&at, keep, &LanczosOptions::default())?.values
        };
        pipeline.truncate(keep);
        let max_difference = oracle
            .iter()
            .zip(&pipeline)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        points.push(EquivalencePoint {
            lambda,
            commutator,
            oracle,
            pipeline,
            max_difference,
        });
    }
    Ok(EquivalenceReport {
        projector_trace: projector.trace(),
        physical_dimension,
        points,
    })
}
