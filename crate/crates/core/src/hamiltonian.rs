//! Kogut-Susskind style Hamiltonian in the spin-network basis.
//!
//! `H(λ) = (1-λ) H_E + λ H_B`. The electric part is diagonal. The magnetic
//! part is a sum over plaquettes of a real class function of the loop
//! holonomy; each plaquette acts only on the links and sites of its loop, so
//! matrix elements are a ring contraction of site overlaps and link coupling
//! tensors.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::electric::ElectricSpectrum;
use crate::error::{Error, Result};
use crate::lattice::Plaquette;
use crate::representation::IrrepSet;
use crate::spin_network::{electric_diagonal, SpinNetworkBasis};

/// Matrix entries below this magnitude are dropped.
pub const DROP_TOL: f64 = 1e-13;
pub const REALITY_TOL: f64 = 1e-12;
pub const HERMITICITY_TOL: f64 = 1e-12;

/// `h(g) = Σ_j c_j χ_j(g)`, required to be real on every element.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassFunction {
    coefficients: Vec<Complex64>,
    values: Vec<f64>,
}

impl ClassFunction {
    pub fn new(set: &IrrepSet, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != set.len() {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients for {} irreps",
                coefficients.len(),
                set.len()
            )));
        }
        let group = set.group();
        let mut values = Vec::with_capacity(group.order());
        for g in 0..group.order() {
            let v: Complex64 = coefficients
                .iter()
                .enumerate()
                .map(|(j, c)| c * set.irrep(j).chi(g))
                .sum();
            if v.im.abs() > REALITY_TOL {
                return Err(Error::InvalidParameter(format!(
                    "class function is not real at element {} (imaginary part {:e})",
                    group.name(g),
                    v.im
                )));
            }
            values.push(v.re);
        }
        Ok(ClassFunction {
            coefficients,
            values,
        })
    }

    /// `scale · Re χ_j`, split between `j` and its conjugate irrep when the
    /// character is complex.
    pub fn real_trace(set: &IrrepSet, j: usize, scale: f64) -> Result<Self> {
        if j >= set.len() {
            return Err(Error::Index(format!("irrep {j} (have {})", set.len())));
        }
        let order = set.group().order();
        let conj_of_j = (0..set.len())
            .find(|&k| {
                (0..order).all(|g| (set.irrep(k).chi(g) - set.irrep(j).chi(g).conj()).norm() < 1e-9)
            })
            .ok_or_else(|| Error::Consistency(format!("no conjugate irrep for {j}")))?;
        let mut c = vec![Complex64::new(0.0, 0.0); set.len()];
        if conj_of_j == j {
            c[j] = scale.into();
        } else {
            c[j] = (scale / 2.0).into();
            c[conj_of_j] = (scale / 2.0).into();
        }
        Self::new(set, c)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn value(&self, g: usize) -> f64 {
        self.values[g]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn support(&self) -> Vec<(usize, Complex64)> {
        self.coefficients
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .collect()
    }
}

/// Matrix of `ρ_f(g^σ)_{ab}` between Peter-Weyl states of one link:
/// `T[m'n'; ab; mn] = √(d_out d_in)/|G| Σ_g conj(ρ_out(g)_{m'n'}) ρ_f(g^σ)_{ab} ρ_in(g)_{mn}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTensor {
    d_out: usize,
    d_f: usize,
    d_in: usize,
    data: Vec<Complex64>,
}

impl CouplingTensor {
    #[inline]
    pub fn at(&self, mp: usize, np: usize, a: usize, b: usize, m: usize, n: usize) -> Complex64 {
        let (o, f, i) = (self.d_out, self.d_f, self.d_in);
        self.data[((((mp * o + np) * f + a) * f + b) * i + m) * i + n]
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.d_out, self.d_f, self.d_in)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }
}

pub fn link_coupling_tensor(
    set: &IrrepSet,
    j_out: usize,
    j_in: usize,
    f: usize,
    forward: bool,
) -> CouplingTensor {
    let group = set.group();
    let (ro, rf, ri) = (set.irrep(j_out), set.irrep(f), set.irrep(j_in));
    let (d_out, d_f, d_in) = (ro.dim(), rf.dim(), ri.dim());
    let mut data = vec![Complex64::new(0.0, 0.0); d_out * d_out * d_f * d_f * d_in * d_in];
    for g in 0..group.order() {
        let gf = if forward { g } else { group.inv(g) };
        let (mo, mf, mi) = (ro.matrix(g), rf.matrix(gf), ri.matrix(g));
        let mut idx = 0;
        for mp in 0..d_out {
            for np in 0..d_out {
                let o = mo[(mp, np)].conj();
                for a in 0..d_f {
                    for b in 0..d_f {
                        let of = o * mf[(a, b)];
                        for m in 0..d_in {
                            for n in 0..d_in {
                                data[idx] += of * mi[(m, n)];
                                idx += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let scale = ((d_out * d_in) as f64).sqrt() / group.order() as f64;
    for z in &mut data {
        *z *= scale;
        if z.norm() < DROP_TOL {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    CouplingTensor {
        d_out,
        d_f,
        d_in,
        data,
    }
}

/// Coupling tensors for every irrep pair, for the irreps in a class
/// function's support and both orientations.
#[derive(Debug)]
struct Couplings {
    table: HashMap<(usize, usize, usize, bool), Arc<CouplingTensor>>,
}

impl Couplings {
    fn new(set: &IrrepSet, h: &ClassFunction) -> Self {
        let keys: Vec<_> = h
            .support()
            .into_iter()
            .flat_map(|(f, _)| {
                (0..set.len()).flat_map(move |jo| {
                    (0..set.len()).flat_map(move |ji| [true, false].map(|fw| (jo, ji, f, fw)))
                })
            })
            .collect();
        let table = keys
            .par_iter()
            .map(|&(jo, ji, f, fw)| ((jo, ji, f, fw), Arc::new(link_coupling_tensor(set, jo, ji, f, fw))))
            .collect();
        Couplings { table }
    }

    fn get(&self, jo: usize, ji: usize, f: usize, fw: bool) -> &CouplingTensor {
        &self.table[&(jo, ji, f, fw)]
    }
}

struct LoopGeometry {
    links: Vec<usize>,
    forward: Vec<bool>,
    sites: Vec<usize>,
    /// Slot of the incoming loop link at each loop site.
    pos_in: Vec<usize>,
    /// Slot of the outgoing loop link at each loop site.
    pos_out: Vec<usize>,
}

impl LoopGeometry {
    fn new(basis: &SpinNetworkBasis, plaq: &Plaquette, index: usize) -> Result<Self> {
        let lat = basis.lattice();
        let k = plaq.steps.len();
        let links: Vec<usize> = plaq.steps.iter().map(|s| s.link).collect();
        let sites = lat.loop_sites(plaq);
        let mut l_sorted = links.clone();
        l_sorted.sort_unstable();
        l_sorted.dedup();
        let mut s_sorted = sites.clone();
        s_sorted.sort_unstable();
        s_sorted.dedup();
        if l_sorted.len() != k || s_sorted.len() != k {
            return Err(Error::Unsupported(format!(
                "plaquette {index} is not a simple cycle"
            )));
        }
        let slot = |x: usize, l: usize| {
            basis
                .site_links(x)
                .iter()
                .position(|&(m, _)| m == l)
                .expect("loop link attached to loop site")
        };
        let pos_in = (0..k).map(|i| slot(sites[i], links[(i + k - 1) % k])).collect();
        let pos_out = (0..k).map(|i| slot(sites[i], links[i])).collect();
        Ok(LoopGeometry {
            links,
            forward: plaq.steps.iter().map(|s| s.forward).collect(),
            sites,
            pos_in,
            pos_out,
        })
    }
}

/// Site tensor reshaped to rows `(in, out)` and columns over spectator slots.
fn reshape_site(tensor: &[Complex64], dims: &[usize], pos_in: usize, pos_out: usize) -> DMatrix<Complex64> {
    let (d_in, d_out) = (dims[pos_in], dims[pos_out]);
    let rest: usize = dims.iter().product::<usize>() / (d_in * d_out);
    let mut out = DMatrix::zeros(d_in * d_out, rest);
    let mut digits = vec![0usize; dims.len()];
    for &z in tensor {
        let row = digits[pos_in] * d_out + digits[pos_out];
        let mut col = 0;
        for (s, (&dg, &d)) in digits.iter().zip(dims).enumerate() {
            if s != pos_in && s != pos_out {
                col = col * d + dg;
            }
        }
        out[(row, col)] = z;
        for s in (0..dims.len()).rev() {
            digits[s] += 1;
            if digits[s] < dims[s] {
                break;
            }
            digits[s] = 0;
        }
    }
    out
}

/// Per-state data needed by the ring contraction.
struct LoopState {
    irreps: Vec<usize>,
    sites: Vec<DMatrix<Complex64>>,
}

fn ring_trace(
    set: &IrrepSet,
    geo: &LoopGeometry,
    couplings: &Couplings,
    f: usize,
    bra: &LoopState,
    ket: &LoopState,
) -> Complex64 {
    let k = geo.links.len();
    let df = set.dim(f);
    let mut acc: Option<DMatrix<Complex64>> = None;
    for i in 0..k {
        let prev = (i + k - 1) % k;
        let (dpp, dp) = (set.dim(bra.irreps[prev]), set.dim(ket.irreps[prev]));
        let (dcp, dc) = (set.dim(bra.irreps[i]), set.dim(ket.irreps[i]));
        // S[(r',p'),(r,p)]
        let s = bra.sites[i].conjugate() * ket.sites[i].transpose();
        let fw = geo.forward[i];
        let t = couplings.get(bra.irreps[i], ket.irreps[i], f, fw);
        let mut w = DMatrix::<Complex64>::zeros(dpp * dp * df, dcp * dc * df);
        for rp in 0..dpp {
            for r in 0..dp {
                for pp in 0..dcp {
                    for p in 0..dc {
                        let sv = s[(rp * dcp + pp, r * dc + p)];
                        if sv == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for sp in 0..dcp {
                            for q in 0..dc {
                                let ((mp, np), (m, n)) =
                                    if fw { ((pp, sp), (p, q)) } else { ((sp, pp), (q, p)) };
                                for a in 0..df {
                                    let row = (rp * dp + r) * df + a;
                                    for b in 0..df {
                                        let tv = t.at(mp, np, a, b, m, n);
                                        if tv != Complex64::new(0.0, 0.0) {
                                            w[(row, (sp * dc + q) * df + b)] += sv * tv;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        acc = Some(match acc {
            None => w,
            Some(a) => a * w,
        });
    }
    acc.map(|a| a.trace()).unwrap_or_default()
}

/// Nonzero entries `(row, col, value)` of one plaquette term, both triangles.
pub fn plaquette_operator(
    basis: &SpinNetworkBasis,
    plaquette: usize,
    h: &ClassFunction,
) -> Result<Vec<(u32, u32, Complex64)>> {
    let couplings = Couplings::new(basis.irreps(), h);
    plaquette_entries(basis, plaquette, h, &couplings)
}

fn plaquette_entries(
    basis: &SpinNetworkBasis,
    plaquette: usize,
    h: &ClassFunction,
    couplings: &Couplings,
) -> Result<Vec<(u32, u32, Complex64)>> {
    let lat = basis.lattice();
    let plaq = lat
        .plaquettes()
        .get(plaquette)
        .ok_or_else(|| Error::Index(format!("plaquette {plaquette}")))?;
    let geo = LoopGeometry::new(basis, plaq, plaquette)?;
    let set = basis.irreps();
    let mut on_loop_link = vec![false; lat.num_links()];
    for &l in &geo.links {
        on_loop_link[l] = true;
    }
    let mut on_loop_site = vec![false; lat.num_sites()];
    for &x in &geo.sites {
        on_loop_site[x] = true;
    }

    // States that differ only on the loop can couple.
    let mut groups: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for i in 0..basis.len() {
        let a = basis.assignment(i);
        let c = basis.choices(i);
        let key: Vec<u32> = (0..a.len())
            .filter(|&l| !on_loop_link[l])
            .map(|l| a[l] as u32)
            .chain((0..c.len()).filter(|&x| !on_loop_site[x]).map(|x| c[x]))
            .collect();
        groups.entry(key).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let support = h.support();

    // allowed[f][(fw, jo, ji)]: link selection rule, per orientation
    let nirr = set.len();
    let allowed: Vec<Vec<bool>> = support
        .iter()
        .map(|&(f, _)| {
            (0..2 * nirr * nirr)
                .map(|p| {
                    let (fw, jo, ji) = (p / (nirr * nirr) == 1, p / nirr % nirr, p % nirr);
                    !couplings.get(jo, ji, f, fw).is_zero()
                })
                .collect()
        })
        .collect();

    let entries: Vec<Vec<(u32, u32, Complex64)>> = groups
        .par_iter()
        .map(|members| {
            let states: Vec<LoopState> = members
                .iter()
                .map(|&i| {
                    let a = basis.assignment(i);
                    let irreps: Vec<usize> = geo.links.iter().map(|&l| a[l] as usize).collect();
                    let sites = geo
                        .sites
                        .iter()
                        .enumerate()
                        .map(|(pos, &x)| {
                            let sig = basis.site_signature(i, x);
                            let t = basis.site_tensors(&sig).expect("tensors for basis signature");
                            reshape_site(
                                t.tensor(basis.choices(i)[x] as usize),
                                t.slot_dims(),
                                geo.pos_in[pos],
                                geo.pos_out[pos],
                            )
                        })
                        .collect();
                    LoopState { irreps, sites }
                })
                .collect();
            let mut out = Vec::new();
            for (bi, bra) in states.iter().enumerate() {
                for (ci, ket) in states.iter().enumerate() {
                    let mut v = Complex64::new(0.0, 0.0);
                    for (fi, &(f, coeff)) in support.iter().enumerate() {
                        let ok = bra
                            .irreps
                            .iter()
                            .zip(&ket.irreps)
                            .zip(&geo.forward)
                            .all(|((&jo, &ji), &fw)| {
                                allowed[fi][usize::from(fw) * nirr * nirr + jo * nirr + ji]
                            });
                        if ok {
                            v += coeff * ring_trace(set, &geo, couplings, f, bra, ket);
                        }
                    }
                    if v.norm() >= DROP_TOL {
                        out.push((members[bi] as u32, members[ci] as u32, v));
                    }
                }
            }
            out
        })
        .collect();
    Ok(entries.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
enum Values {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// Hermitian matrix in compressed-row form, both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Values,
    defect: f64,
}

impl SparseHermitian {
    /// Sums duplicates, drops tiny entries, checks Hermiticity and
    /// symmetrizes away rounding differences.
    pub fn from_entries(n: usize, mut entries: Vec<(u32, u32, Complex64)>) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| e.0 as usize >= n || e.1 as usize >= n) {
            return Err(Error::Index(format!("entry ({}, {}) in dimension {n}", e.0, e.1)));
        }
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(u32, u32, Complex64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2.norm() >= DROP_TOL);

        let mut row_ptr = vec![0usize; n + 1];
        for e in &merged {
            row_ptr[e.0 as usize + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols: Vec<u32> = merged.iter().map(|e| e.1).collect();
        let mut vals: Vec<Complex64> = merged.iter().map(|e| e.2).collect();
        let find = |r: usize, c: u32| -> Option<usize> {
            cols[row_ptr[r]..row_ptr[r + 1]]
                .binary_search(&c)
                .ok()
                .map(|k| row_ptr[r] + k)
        };
        let mut worst = 0.0f64;
        let mut sym = vals.clone();
        for (k, &(r, c, v)) in merged.iter().enumerate() {
            let mirror = find(c as usize, r).map(|m| vals[m]).unwrap_or_default();
            worst = worst.max((v - mirror.conj()).norm());
            sym[k] = (v + mirror.conj()) * 0.5;
        }
        if worst > HERMITICITY_TOL {
            return Err(Error::Consistency(format!(
                "operator is not Hermitian (defect {worst:e})"
            )));
        }
        vals = sym;
        let real = vals.iter().all(|z| z.im.abs() <= DROP_TOL);
        let values = if real {
            Values::Real(vals.iter().map(|z| z.re).collect())
        } else {
            Values::Complex(vals)
        };
        Ok(SparseHermitian {
            n,
            row_ptr,
            cols,
            values,
            defect: worst,
        })
    }

    /// Largest `|A[r][c] - conj(A[c][r])|` seen before symmetrization; the
    /// two triangles are computed independently.
    pub fn hermiticity_defect(&self) -> f64 {
        self.defect
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn is_real(&self) -> bool {
        matches!(self.values, Values::Real(_))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&(c as u32)) {
            Ok(k) => self.value(range.start + k),
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    #[inline]
    fn value(&self, k: usize) -> Complex64 {
        match &self.values {
            Values::Real(v) => v[k].into(),
            Values::Complex(v) => v[k],
        }
    }

    /// Entries of row `r` as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k] as usize, self.value(k)))
    }

    /// `y[r] = Σ_c A[r][c] x[c]` for one row.
    #[inline]
    fn row_dot(&self, r: usize, x: &[Complex64]) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        let cols = &self.cols[range.clone()];
        match &self.values {
            Values::Real(v) => {
                let (mut re, mut im) = (0.0, 0.0);
                for (&c, &a) in cols.iter().zip(&v[range]) {
                    let z = x[c as usize];
                    re += a * z.re;
                    im += a * z.im;
                }
                Complex64::new(re, im)
            }
            Values::Complex(v) => cols
                .iter()
                .zip(&v[range])
                .map(|(&c, &a)| a * x[c as usize])
                .sum(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }
}

/// Hermitian linear operator on `C^n`.
pub trait HermitianOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

impl HermitianOperator for SparseHermitian {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.par_iter_mut()
            .enumerate()
            .for_each(|(r, out)| *out = self.row_dot(r, x));
    }
}

/// Builds the magnetic operator `Σ_p h(U_p)`.
pub fn magnetic_operator(basis: &SpinNetworkBasis, h: &ClassFunction) -> Result<SparseHermitian> {
    let couplings = Couplings::new(basis.irreps(), h);
    let mut all = Vec::new();
    for p in 0..basis.lattice().plaquettes().len() {
        all.extend(plaquette_entries(basis, p, h, &couplings)?);
    }
    SparseHermitian::from_entries(basis.len(), all)
}

/// `(1-λ) H_E + λ H_B` with both parts stored once; changing `λ` is free.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    electric: Arc<Vec<f64>>,
    magnetic: Arc<SparseHermitian>,
    lambda: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} outside [0, 1]")));
    }
    Ok(())
}

impl SparseHamiltonian {
    pub fn new(electric: Vec<f64>, magnetic: SparseHermitian, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if electric.len() != magnetic.dim() {
            return Err(Error::InvalidParameter(format!(
                "electric diagonal has {} entries, magnetic operator dimension {}",
                electric.len(),
                magnetic.dim()
            )));
        }
        Ok(SparseHamiltonian {
            electric: Arc::new(electric),
            magnetic: Arc::new(magnetic),
            lambda,
        })
    }

    /// Same operator parts at a different coupling.
    pub fn at(&self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(SparseHamiltonian {
            electric: Arc::clone(&self.electric),
            magnetic: Arc::clone(&self.magnetic),
            lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn electric(&self) -> &[f64] {
        &self.electric
    }

    pub fn magnetic(&self) -> &SparseHermitian {
        &self.magnetic
    }

    pub fn is_real(&self) -> bool {
        self.magnetic.is_real()
    }

    /// Matrix entry of `H(λ)`.
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let mut v = self.magnetic.get(r, c) * self.lambda;
        if r == c {
            v += (1.0 - self.lambda) * self.electric[r];
        }
        v
    }

    /// Stored entries of `H(λ)` in row-major order, exact zeros skipped.
    pub fn entries(&self) -> Vec<(usize, usize, Complex64)> {
        let n = self.electric.len();
        let mut out = Vec::new();
        for r in 0..n {
            let mut diag_done = false;
            for (c, v) in self.magnetic.row(r) {
                if !diag_done && c >= r {
                    diag_done = true;
                    let e = (1.0 - self.lambda) * self.electric[r];
                    let d = if c == r { v * self.lambda + e } else { e.into() };
                    if d != Complex64::new(0.0, 0.0) {
                        out.push((r, r, d));
                    }
                    if c == r {
                        continue;
                    }
                }
                let w = v * self.lambda;
                if w != Complex64::new(0.0, 0.0) {
                    out.push((r, c, w));
                }
            }
            if !diag_done {
                let e = (1.0 - self.lambda) * self.electric[r];
                if e != 0.0 {
                    out.push((r, r, e.into()));
                }
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.entries().len()
    }

    pub fn nonzero_fraction(&self) -> f64 {
        let n = self.electric.len() as f64;
        self.nnz() as f64 / (n * n)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.electric.len();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn electric_expectation(&self, psi: &[Complex64]) -> f64 {
        psi.iter()
            .zip(self.electric.iter())
            .map(|(z, e)| z.norm_sqr() * e)
            .sum()
    }

    pub fn magnetic_expectation(&self, psi: &[Complex64]) -> f64 {
        // per-row terms in parallel, summed in a fixed order
        let terms: Vec<f64> = (0..psi.len())
            .into_par_iter()
            .map(|r| (psi[r].conj() * self.magnetic.row_dot(r, psi)).re)
            .collect();
        terms.iter().sum()
    }

    /// Upper triangle in coordinate form: a `n nnz` header, then
    /// `row col re` lines (`row col re im` when the operator is complex).
    pub fn write_coordinates<W: Write>(&self, mut w: W) -> Result<()> {
        let upper: Vec<_> = self.entries().into_iter().filter(|e| e.0 <= e.1).collect();
        writeln!(w, "{} {}", self.electric.len(), upper.len())?;
        let complex = !self.is_real();
        for (r, c, v) in upper {
            if complex {
                writeln!(w, "{r} {c} {} {}", v.re, v.im)?;
            } else {
                writeln!(w, "{r} {c} {}", v.re)?;
            }
        }
        Ok(())
    }
}

impl HermitianOperator for SparseHamiltonian {
    fn dim(&self) -> usize {
        self.electric.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let (le, lb) = (1.0 - self.lambda, self.lambda);
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let mut v = x[r] * (le * self.electric[r]);
            if lb != 0.0 {
                v += self.magnetic.row_dot(r, x) * lb;
            }
            *out = v;
        });
    }
}

/// Builds `H(λ)` from a basis, an electric spectrum and a magnetic class
/// function.
pub fn assemble(
    basis: &SpinNetworkBasis,
    spectrum: &ElectricSpectrum,
    h: &ClassFunction,
    lambda: f64,
) -> Result<SparseHamiltonian> {
    check_lambda(lambda)?;
    let electric = electric_diagonal(basis, spectrum)?;
    let magnetic = magnetic_operator(basis, h)?;
    SparseHamiltonian::new(electric, magnetic, lambda)
}
