//! Unitary irreducible representations, Peter-Weyl coefficients and
//! invariant vectors of tensor-product representations.
//!
//! Irrep file format, one block per irrep:
//!
//! ```text
//! irrep <id> dim <d>
//! <|G| blocks of d*d complex entries, written as `re im` pairs, row-major>
//! ```
//!
//! Element order follows the group table. Whitespace (including newlines)
//! between numbers is free-form and `#` starts a comment.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{GroupFamily, GroupTable};
use crate::linalg::hermitian_eigen;

pub type CMatrix = DMatrix<Complex64>;

/// Default cap on the product dimension of a site tensor space.
pub const DEFAULT_TENSOR_CAP: usize = 65_536;

const IRREP_TOL: f64 = 1e-12;
const PROJECTOR_TOL: f64 = 1e-10;
const EIGENVALUE_KEEP: f64 = 1.0 - 1e-8;
const PHASE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Irrep {
    id: usize,
    dim: usize,
    matrices: Vec<CMatrix>,
    element_characters: Vec<Complex64>,
}

impl Irrep {
    /// Wraps per-element matrices; no representation axioms are checked here
    /// (see [`verify_irreps`]).
    pub fn new(id: usize, matrices: Vec<CMatrix>) -> Result<Self> {
        let dim = matrices.first().map(|m| m.nrows()).unwrap_or(0);
        if dim == 0 || matrices.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::InvalidParameter(format!(
                "irrep {id}: matrices must be square, non-empty and of equal size"
            )));
        }
        let element_characters = matrices.iter().map(|m| m.trace()).collect();
        Ok(Irrep {
            id,
            dim,
            matrices,
            element_characters,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, g: usize) -> &CMatrix {
        &self.matrices[g]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    /// Character of a single element.
    pub fn chi(&self, g: usize) -> Complex64 {
        self.element_characters[g]
    }

    /// Character per conjugacy class, evaluated on the least member.
    pub fn class_characters(&self, group: &GroupTable) -> Vec<Complex64> {
        group.classes().iter().map(|c| self.chi(c[0])).collect()
    }

    /// Elements represented by the identity matrix.
    pub fn kernel(&self) -> Vec<usize> {
        let id = CMatrix::identity(self.dim, self.dim);
        (0..self.matrices.len())
            .filter(|&g| max_abs_diff(&self.matrices[g], &id) < 1e-9)
            .collect()
    }

    pub fn is_faithful(&self) -> bool {
        self.kernel().len() == 1
    }

    fn is_real(&self) -> bool {
        self.matrices
            .iter()
            .all(|m| m.iter().all(|z| z.im == 0.0))
    }
}

/// A complete, verified set of irreps of one group.
#[derive(Debug, Clone)]
pub struct IrrepSet {
    group: Arc<GroupTable>,
    irreps: Vec<Irrep>,
    real: bool,
}

impl IrrepSet {
    /// Verifies every irrep axiom and completeness; rejects on any failure.
    pub fn new(group: Arc<GroupTable>, irreps: Vec<Irrep>) -> Result<Self> {
        let report = verify_irreps(&group, &irreps);
        if let Some(problem) = report.first_failure(IRREP_TOL) {
            return Err(Error::load("irreps", problem));
        }
        let real = irreps.iter().all(Irrep::is_real);
        Ok(IrrepSet {
            group,
            irreps,
            real,
        })
    }

    pub fn group(&self) -> &Arc<GroupTable> {
        &self.group
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.irreps
    }

    pub fn irrep(&self, j: usize) -> &Irrep {
        &self.irreps[j]
    }

    pub fn len(&self) -> usize {
        self.irreps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreps.is_empty()
    }

    pub fn dim(&self, j: usize) -> usize {
        self.irreps[j].dim
    }

    /// True when every matrix entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for irrep in &self.irreps {
            write_irrep(&mut out, irrep);
        }
        out
    }
}

fn write_irrep(out: &mut String, irrep: &Irrep) {
    writeln!(out, "irrep {} dim {}", irrep.id, irrep.dim).unwrap();
    for m in &irrep.matrices {
        for r in 0..irrep.dim {
            let row: Vec<String> = (0..irrep.dim)
                .map(|c| format!("{:?} {:?}", m[(r, c)].re, m[(r, c)].im))
                .collect();
            writeln!(out, "{}", row.join("  ")).unwrap();
        }
    }
}

/// Serializes a single (possibly reducible) representation in irrep-file
/// format.
pub fn representation_to_text(rep: &Irrep) -> String {
    let mut out = String::new();
    write_irrep(&mut out, rep);
    out
}

fn exact_unit_root(m: usize, n: usize) -> Complex64 {
    // e^{2 pi i m / n}, exact at quarter turns
    let m = m % n;
    if (4 * m).is_multiple_of(n) {
        return match 4 * m / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / n as f64)
}

fn scalar(z: Complex64) -> CMatrix {
    CMatrix::from_element(1, 1, z)
}

/// Analytic irreps of cyclic and dihedral groups.
///
/// For `D_n` the one-dimensional irreps come first, ordered as
/// `(r, s) -> (1, 1), (-1, 1), (1, -1), (-1, -1)` for even `n` and
/// `(1, 1), (1, -1)` for odd `n`; then the two-dimensional irreps with `r`
/// a rotation by `2 pi l / n` and `s = diag(1, -1)`, `l = 1..=(n-1)/2`.
/// For `D_4` this is the ordering of its standard character table, with the
/// faithful irrep as `j = 4`.
pub fn builtin_irreps(group: Arc<GroupTable>) -> Result<IrrepSet> {
    let irreps = match group.family() {
        GroupFamily::Cyclic(n) => (0..n)
            .map(|j| Irrep::new(j, (0..n).map(|k| scalar(exact_unit_root(k * j, n))).collect()))
            .collect::<Result<Vec<_>>>()?,
        GroupFamily::Dihedral(n) => dihedral_irreps(n)?,
        GroupFamily::Symmetric(1) => vec![Irrep::new(0, vec![scalar(Complex64::new(1.0, 0.0))])?],
        other => {
            return Err(Error::Unsupported(format!(
                "no analytic irreps for {other:?}; load them from a file"
            )))
        }
    };
    IrrepSet::new(group, irreps)
}

fn dihedral_irreps(n: usize) -> Result<Vec<Irrep>> {
    let one_dim: &[(f64, f64)] = if n.is_multiple_of(2) {
        &[(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)]
    } else {
        &[(1.0, 1.0), (1.0, -1.0)]
    };
    let mut irreps = Vec::new();
    for &(r, s) in one_dim {
        let mats = (0..2 * n)
            .map(|i| {
                let (k, refl) = (i % n, i / n);
                let v = r.powi(k as i32) * if refl == 1 { s } else { 1.0 };
                scalar(Complex64::new(v, 0.0))
            })
            .collect();
        irreps.push(Irrep::new(irreps.len(), mats)?);
    }
    for l in 1..=(n - 1) / 2 {
        let mats = (0..2 * n)
            .map(|i| {
                let (k, refl) = (i % n, i / n);
                let w = exact_unit_root(k * l, n);
                let (c, s) = (w.re, w.im);
                let rot = [[c, -s], [s, c]];
                // r^k s = R^k diag(1, -1)
                let sign = if refl == 1 { -1.0 } else { 1.0 };
                CMatrix::from_fn(2, 2, |a, b| {
                    let v = rot[a][b] * if b == 1 { sign } else { 1.0 };
                    Complex64::new(v, 0.0)
                })
            })
            .collect();
        irreps.push(Irrep::new(irreps.len(), mats)?);
    }
    Ok(irreps)
}

fn parse_blocks(source: &str, group: &GroupTable) -> Result<Vec<Irrep>> {
    let tokens: Vec<&str> = source
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace)
        .collect();
    let mut pos = 0;
    let mut irreps = Vec::new();
    let num = |t: &str| -> Result<f64> {
        t.parse()
            .map_err(|_| Error::load("irreps", format!("malformed number '{t}'")))
    };
    while pos < tokens.len() {
        let header = tokens.get(pos..pos + 4).ok_or_else(|| {
            Error::load("irreps", "truncated header, expected 'irrep <id> dim <d>'")
        })?;
        if header[0] != "irrep" || header[2] != "dim" {
            return Err(Error::load(
                "irreps",
                format!("expected 'irrep <id> dim <d>', found '{}'", header.join(" ")),
            ));
        }
        let id: usize = header[1]
            .parse()
            .map_err(|_| Error::load("irreps", format!("bad irrep id '{}'", header[1])))?;
        let dim: usize = header[3]
            .parse()
            .map_err(|_| Error::load("irreps", format!("bad dimension '{}'", header[3])))?;
        if dim == 0 {
            return Err(Error::load("irreps", format!("irrep {id}: zero dimension")));
        }
        pos += 4;
        let needed = group.order() * dim * dim * 2;
        let body = tokens.get(pos..pos + needed).ok_or_else(|| {
            Error::load(
                "irreps",
                format!("irrep {id}: expected {needed} numbers for {} elements", group.order()),
            )
        })?;
        pos += needed;
        let mut mats = Vec::with_capacity(group.order());
        for g in 0..group.order() {
            let base = g * dim * dim * 2;
            let mut m = CMatrix::zeros(dim, dim);
            for r in 0..dim {
                for c in 0..dim {
                    let i = base + 2 * (r * dim + c);
                    m[(r, c)] = Complex64::new(num(body[i])?, num(body[i + 1])?);
                }
            }
            mats.push(m);
        }
        irreps.push(Irrep::new(id, mats)?);
    }
    Ok(irreps)
}

/// Loads a complete irrep set. Ids must be `0..k` in order, irrep 0 trivial.
pub fn load_irreps(source: &str, group: Arc<GroupTable>) -> Result<IrrepSet> {
    let irreps = parse_blocks(source, &group)?;
    if irreps.is_empty() {
        return Err(Error::load("irreps", "no irreps in input"));
    }
    for (k, irrep) in irreps.iter().enumerate() {
        if irrep.id != k {
            return Err(Error::load(
                "irreps",
                format!("irrep ids must be 0..n in order; found {} at position {k}", irrep.id),
            ));
        }
    }
    IrrepSet::new(group, irreps)
}

/// Loads one representation (reducible allowed); checks unitarity and the
/// homomorphism property only.
pub fn load_representation(source: &str, group: &GroupTable) -> Result<Irrep> {
    let mut reps = parse_blocks(source, group)?;
    if reps.len() != 1 {
        return Err(Error::load(
            "representation",
            format!("expected exactly one block, found {}", reps.len()),
        ));
    }
    let rep = reps.pop().unwrap();
    let (unitarity, homomorphism, identity) = rep_residuals(group, &rep);
    if unitarity > IRREP_TOL {
        return Err(Error::load("representation", format!("non-unitary (residual {unitarity:e})")));
    }
    if homomorphism > IRREP_TOL || identity > IRREP_TOL {
        return Err(Error::load(
            "representation",
            format!("non-homomorphic (residual {:e})", homomorphism.max(identity)),
        ));
    }
    Ok(rep)
}

/// Residuals of the irrep axioms. Failures are carried, not raised.
#[derive(Debug, Clone, PartialEq)]
pub struct IrrepReport {
    pub max_unitarity_residual: f64,
    pub max_homomorphism_residual: f64,
    pub max_identity_residual: f64,
    pub max_class_constancy_residual: f64,
    pub orthogonality_residual: f64,
    pub dimension_sum: usize,
    pub group_order: usize,
    pub has_trivial_first: bool,
}

impl IrrepReport {
    pub fn completeness(&self) -> bool {
        self.dimension_sum == self.group_order
    }

    /// First failing check at tolerance `tol`, if any.
    pub fn first_failure(&self, tol: f64) -> Option<String> {
        if self.max_unitarity_residual > tol {
            return Some(format!("non-unitary (residual {:e})", self.max_unitarity_residual));
        }
        if self.max_homomorphism_residual > tol || self.max_identity_residual > tol {
            return Some(format!(
                "non-homomorphic (residual {:e})",
                self.max_homomorphism_residual.max(self.max_identity_residual)
            ));
        }
        if self.max_class_constancy_residual > tol {
            return Some("character not constant on conjugacy classes".into());
        }
        if !self.completeness() {
            return Some(format!(
                "incomplete: sum of dim^2 = {} but |G| = {}",
                self.dimension_sum, self.group_order
            ));
        }
        if self.orthogonality_residual > tol {
            return Some(format!(
                "characters not orthonormal (residual {:e})",
                self.orthogonality_residual
            ));
        }
        if !self.has_trivial_first {
            return Some("irrep 0 must be the trivial representation".into());
        }
        None
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.first_failure(tol).is_none()
    }
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn rep_residuals(group: &GroupTable, rep: &Irrep) -> (f64, f64, f64) {
    let n = group.order();
    let id = CMatrix::identity(rep.dim, rep.dim);
    let mut unitarity: f64 = 0.0;
    let mut homomorphism: f64 = 0.0;
    if rep.matrices.len() != n {
        return (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    }
    for g in 0..n {
        let m = &rep.matrices[g];
        unitarity = unitarity.max(max_abs_diff(&(m * m.adjoint()), &id));
        for h in 0..n {
            let prod = m * &rep.matrices[h];
            homomorphism = homomorphism.max(max_abs_diff(&prod, &rep.matrices[group.mul(g, h)]));
        }
    }
    let identity = max_abs_diff(&rep.matrices[group.identity()], &id);
    (unitarity, homomorphism, identity)
}

pub fn verify_irreps(group: &GroupTable, irreps: &[Irrep]) -> IrrepReport {
    let n = group.order();
    let mut report = IrrepReport {
        max_unitarity_residual: 0.0,
        max_homomorphism_residual: 0.0,
        max_identity_residual: 0.0,
        max_class_constancy_residual: 0.0,
        orthogonality_residual: 0.0,
        dimension_sum: irreps.iter().map(|r| r.dim * r.dim).sum(),
        group_order: n,
        has_trivial_first: irreps.first().is_some_and(|r| {
            r.dim == 1
                && r.matrices.len() == n
                && r.matrices.iter().all(|m| (m[(0, 0)] - 1.0).norm() < IRREP_TOL)
        }),
    };
    for rep in irreps {
        let (u, h, i) = rep_residuals(group, rep);
        report.max_unitarity_residual = report.max_unitarity_residual.max(u);
        report.max_homomorphism_residual = report.max_homomorphism_residual.max(h);
        report.max_identity_residual = report.max_identity_residual.max(i);
        if rep.matrices.len() != n {
            continue;
        }
        for class in group.classes() {
            let first = rep.chi(class[0]);
            for &g in class {
                report.max_class_constancy_residual =
                    report.max_class_constancy_residual.max((rep.chi(g) - first).norm());
            }
        }
    }
    for a in irreps {
        for b in irreps {
            if a.matrices.len() != n || b.matrices.len() != n {
                report.orthogonality_residual = f64::INFINITY;
                continue;
            }
            let inner: Complex64 =
                (0..n).map(|g| a.chi(g) * b.chi(g).conj()).sum::<Complex64>() / n as f64;
            let expected = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
            report.orthogonality_residual =
                report.orthogonality_residual.max((inner - expected).norm());
        }
    }
    report
}

/// `<g|j m n> = sqrt(dim(j)/|G|) [rho_j(g)]_{mn}`, with 0-based `m`, `n`.
pub fn peter_weyl_coeff(set: &IrrepSet, g: usize, j: usize, m: usize, n: usize) -> Result<Complex64> {
    let order = set.group().order();
    if g >= order {
        return Err(Error::Index(format!("element {g} (order {order})")));
    }
    let irrep = set
        .irreps()
        .get(j)
        .ok_or_else(|| Error::Index(format!("irrep {j} (have {})", set.len())))?;
    if m >= irrep.dim || n >= irrep.dim {
        return Err(Error::Index(format!(
            "matrix index ({m}, {n}) for irrep {j} of dimension {}",
            irrep.dim
        )));
    }
    Ok(irrep.matrix(g)[(m, n)] * (irrep.dim as f64 / order as f64).sqrt())
}

/// Full change of basis: rows are group elements, columns run over
/// `(j, m, n)` in lexicographic order.
pub fn peter_weyl_matrix(set: &IrrepSet) -> CMatrix {
    let order = set.group().order();
    let mut u = CMatrix::zeros(order, order);
    let mut col = 0;
    for irrep in set.irreps() {
        let scale = (irrep.dim as f64 / order as f64).sqrt();
        for m in 0..irrep.dim {
            for n in 0..irrep.dim {
                for g in 0..order {
                    u[(g, col)] = irrep.matrix(g)[(m, n)] * scale;
                }
                col += 1;
            }
        }
    }
    u
}

/// One tensor factor at a site: an irrep, dualized when the site is the
/// source of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub irrep: usize,
    pub dual: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteSignature {
    pub slots: Vec<Slot>,
}

impl SiteSignature {
    pub fn new(slots: Vec<Slot>) -> Self {
        SiteSignature { slots }
    }

    fn check(&self, set: &IrrepSet) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::InvalidParameter("site signature has no slots".into()));
        }
        if let Some(s) = self.slots.iter().find(|s| s.irrep >= set.len()) {
            return Err(Error::Index(format!("irrep {} (have {})", s.irrep, set.len())));
        }
        Ok(())
    }

    pub fn product_dim(&self, set: &IrrepSet) -> usize {
        self.slots.iter().map(|s| set.dim(s.irrep)).product()
    }
}

fn slot_character(set: &IrrepSet, slot: Slot, g: usize) -> Complex64 {
    let chi = set.irrep(slot.irrep).chi(g);
    if slot.dual {
        chi.conj()
    } else {
        chi
    }
}

/// Matrix of one slot at `g`: conjugated entries on dual slots.
pub fn slot_matrix(set: &IrrepSet, slot: Slot, g: usize) -> CMatrix {
    let m = set.irrep(slot.irrep).matrix(g);
    if slot.dual {
        m.map(|z| z.conj())
    } else {
        m.clone()
    }
}

/// `(1/|G|) sum_g prod_slots chi_slot(g)`, as an exact integer.
pub fn dim_invariant(set: &IrrepSet, sig: &SiteSignature) -> Result<usize> {
    sig.check(set)?;
    let order = set.group().order();
    let total: Complex64 = (0..order)
        .map(|g| {
            sig.slots
                .iter()
                .map(|&s| slot_character(set, s, g))
                .product::<Complex64>()
        })
        .sum::<Complex64>()
        / order as f64;
    let rounded = total.re.round();
    if (total - rounded).norm() > 1e-9 || rounded < 0.0 {
        return Err(Error::Consistency(format!(
            "invariant count {total} is not a non-negative integer"
        )));
    }
    Ok(rounded as usize)
}

/// `(1/|G|) sum_g (tensor product of slot matrices)(g)`.
pub fn averaging_projector(set: &IrrepSet, sig: &SiteSignature) -> CMatrix {
    let order = set.group().order();
    let d = sig.product_dim(set);
    let mut p = CMatrix::zeros(d, d);
    for g in 0..order {
        let mut acc = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for &slot in &sig.slots {
            acc = acc.kronecker(&slot_matrix(set, slot, g));
        }
        p += acc;
    }
    p / Complex64::new(order as f64, 0.0)
}

/// Orthonormal basis of the invariant subspace of one site signature.
///
/// Tensor components are flattened row-major with slot 0 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantBasis {
    signature: SiteSignature,
    dims: Vec<usize>,
    tensors: Vec<Vec<Complex64>>,
}

impl InvariantBasis {
    pub fn signature(&self) -> &SiteSignature {
        &self.signature
    }

    pub fn slot_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn product_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dim_inv(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensor(&self, a: usize) -> &[Complex64] {
        &self.tensors[a]
    }

    pub fn tensors(&self) -> &[Vec<Complex64>] {
        &self.tensors
    }

    pub fn is_real(&self) -> bool {
        self.tensors.iter().flatten().all(|z| z.im == 0.0)
    }

    /// Rebuilds a basis from stored tensors (used by the basis cache).
    pub fn from_parts(
        signature: SiteSignature,
        dims: Vec<usize>,
        tensors: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let d: usize = dims.iter().product();
        if dims.len() != signature.slots.len() || tensors.iter().any(|t| t.len() != d) {
            return Err(Error::Consistency("tensor shape does not match signature".into()));
        }
        Ok(InvariantBasis {
            signature,
            dims,
            tensors,
        })
    }

    /// Same basis with the tensor order reversed. Physical quantities must
    /// not depend on this choice.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.tensors.reverse();
        out
    }
}

fn phase_fix(v: &mut [Complex64]) {
    if let Some(first) = v.iter().find(|z| z.norm() > PHASE_EPS).copied() {
        let phase = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

fn lex_cmp(a: &[Complex64], b: &[Complex64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o.is_ne() {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Builds the averaging projector, checks it, and extracts its range.
pub fn invariant_basis(set: &IrrepSet, sig: &SiteSignature, cap: usize) -> Result<InvariantBasis> {
    sig.check(set)?;
    let dims: Vec<usize> = sig.slots.iter().map(|s| set.dim(s.irrep)).collect();
    let d: usize = dims.iter().product();
    if d > cap {
        return Err(Error::SizeLimit {
            what: "site tensor product dimension",
            actual: d as u128,
            limit: cap as u128,
        });
    }
    let p = averaging_projector(set, sig);
    let idempotence = max_abs_diff(&(&p * &p), &p);
    let hermiticity = max_abs_diff(&p.adjoint(), &p);
    if idempotence > PROJECTOR_TOL || hermiticity > PROJECTOR_TOL {
        return Err(Error::Consistency(format!(
            "averaging map is not an orthogonal projector (P^2-P {idempotence:e}, P-P^+ {hermiticity:e})"
        )));
    }
    let trace = p.trace();
    let rank = trace.re.round();
    if (trace - rank).norm() > 1e-9 {
        return Err(Error::Consistency(format!("projector trace {trace} is not an integer")));
    }
    let expected = dim_invariant(set, sig)?;
    if rank as usize != expected {
        return Err(Error::Consistency(format!(
            "projector rank {rank} disagrees with character count {expected}"
        )));
    }

    let (values, vectors) = hermitian_eigen(&p);
    let mut tensors: Vec<Vec<Complex64>> = values
        .iter()
        .zip(vectors)
        .filter(|(&v, _)| v > EIGENVALUE_KEEP)
        .map(|(_, t)| t)
        .collect();
    if tensors.len() != expected {
        return Err(Error::Consistency(format!(
            "found {} unit eigenvalues, expected {expected}",
            tensors.len()
        )));
    }
    for t in tensors.iter_mut() {
        phase_fix(t);
        // exact zeros keep real data recognizably real
        for z in t.iter_mut() {
            if z.im.abs() < 1e-15 {
                z.im = 0.0;
            }
        }
    }
    tensors.sort_by(|a, b| lex_cmp(a, b));

    let basis = InvariantBasis {
        signature: sig.clone(),
        dims,
        tensors,
    };
    check_invariance(set, &basis)?;
    Ok(basis)
}

/// Verifies orthonormality and invariance under the group generators.
pub fn check_invariance(set: &IrrepSet, basis: &InvariantBasis) -> Result<()> {
    let group = set.group();
    let k = basis.dim_inv();
    for a in 0..k {
        for b in 0..k {
            let ip: Complex64 = basis
                .tensor(a)
                .iter()
                .zip(basis.tensor(b))
                .map(|(x, y)| x.conj() * y)
                .sum();
            let expect = if a == b { 1.0 } else { 0.0 };
            if (ip - expect).norm() > PROJECTOR_TOL {
                return Err(Error::Consistency(format!(
                    "invariant tensors {a},{b} not orthonormal ({ip})"
                )));
            }
        }
    }
    for g in group.generators() {
        let mut op = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for &slot in &basis.signature.slots {
            op = op.kronecker(&slot_matrix(set, slot, g));
        }
        for (a, t) in basis.tensors.iter().enumerate() {
            let v = nalgebra::DVector::from_column_slice(t);
            let moved = &op * &v;
            let err = moved
                .iter()
                .zip(t)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            if err > PROJECTOR_TOL {
                return Err(Error::Consistency(format!(
                    "tensor {a} not invariant under generator {g} (residual {err:e})"
                )));
            }
        }
    }
    Ok(())
}

/// Shared memo of invariant bases keyed by signature.
///
/// Results are computed outside the lock and published with first-writer-wins,
/// so concurrent callers always observe the same tensors.
#[derive(Debug)]
pub struct InvariantCache {
    cap: usize,
    map: RwLock<HashMap<SiteSignature, Arc<InvariantBasis>>>,
}

impl Default for InvariantCache {
    fn default() -> Self {
        Self::new(DEFAULT_TENSOR_CAP)
    }
}

impl InvariantCache {
    pub fn new(cap: usize) -> Self {
        InvariantCache {
            cap,
            map: RwLock::new(HashMap::new()),
        }
    }

    pub fn get_or_compute(&self, set: &IrrepSet, sig: &SiteSignature) -> Result<Arc<InvariantBasis>> {
        if let Some(hit) = self.map.read().unwrap().get(sig) {
            return Ok(Arc::clone(hit));
        }
        let computed = Arc::new(invariant_basis(set, sig, self.cap)?);
        let mut map = self.map.write().unwrap();
        Ok(Arc::clone(map.entry(sig.clone()).or_insert(computed)))
    }

    /// Inserts a precomputed basis unless one is already present.
    pub fn publish(&self, basis: Arc<InvariantBasis>) -> Arc<InvariantBasis> {
        let mut map = self.map.write().unwrap();
        Arc::clone(map.entry(basis.signature.clone()).or_insert(basis))
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<Arc<InvariantBasis>> {
        let mut all: Vec<_> = self.map.read().unwrap().values().cloned().collect();
        all.sort_by(|a, b| a.signature.cmp(&b.signature));
        all
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_cyclic, build_dihedral};

    fn d4() -> IrrepSet {
        builtin_irreps(Arc::new(build_dihedral(4).unwrap())).unwrap()
    }

    fn slot(irrep: usize, dual: bool) -> Slot {
        Slot { irrep, dual }
    }

    #[test]
    fn d4_character_table() {
        let set = d4();
        let g = set.group().clone();
        let table: Vec<Vec<f64>> = set
            .irreps()
            .iter()
            .map(|r| r.class_characters(&g).iter().map(|z| z.re).collect())
            .collect();
        assert_eq!(
            table,
            vec![
                vec![1.0, 1.0, 1.0, 1.0, 1.0],
                vec![1.0, -1.0, 1.0, 1.0, -1.0],
                vec![1.0, 1.0, 1.0, -1.0, -1.0],
                vec![1.0, -1.0, 1.0, -1.0, 1.0],
                vec![2.0, 0.0, -2.0, 0.0, 0.0],
            ]
        );
        assert!(set.is_real());
    }

    #[test]
    fn only_faithful_d4_irrep_is_four() {
        let set = d4();
        let faithful: Vec<usize> = set
            .irreps()
            .iter()
            .filter(|r| r.is_faithful())
            .map(Irrep::id)
            .collect();
        assert_eq!(faithful, vec![4]);
    }

    #[test]
    fn z3_characters() {
        let set = builtin_irreps(Arc::new(build_cyclic(3).unwrap())).unwrap();
        let w = set.irrep(1).chi(1);
        let expect = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!((w - expect).norm() < 1e-15);
        assert!(!set.is_real());
    }

    #[test]
    fn unsupported_family() {
        let s3 = Arc::new(crate::group::build_symmetric(3).unwrap());
        assert!(matches!(builtin_irreps(s3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn verify_reports_are_clean_and_catch_perturbations() {
        let set = d4();
        let rep = verify_irreps(set.group(), set.irreps());
        assert!(rep.max_unitarity_residual < 1e-12);
        assert!(rep.max_homomorphism_residual < 1e-12);
        assert!(rep.orthogonality_residual < 1e-12);
        assert!(rep.completeness());

        let mut irreps = set.irreps().to_vec();
        let mut mats = irreps[4].matrices().to_vec();
        mats[1][(0, 0)] += Complex64::new(1e-3, 0.0);
        irreps[4] = Irrep::new(4, mats).unwrap();
        let bad = verify_irreps(set.group(), &irreps);
        assert!(bad.max_homomorphism_residual >= 1e-4);
        assert!(!bad.passes(1e-12));

        let z5 = builtin_irreps(Arc::new(build_cyclic(5).unwrap())).unwrap();
        assert!(verify_irreps(z5.group(), z5.irreps()).orthogonality_residual < 1e-12);
    }

    #[test]
    fn load_rejects_incomplete_and_roundtrips() {
        let z2 = Arc::new(build_cyclic(2).unwrap());
        let text = "irrep 0 dim 1\n1 0\n1 0\nirrep 1 dim 1\n1 0\n-1 0\n";
        let set = load_irreps(text, z2.clone()).unwrap();
        assert_eq!(set.len(), 2);
        let missing = "irrep 0 dim 1\n1 0\n1 0\n";
        let err = load_irreps(missing, z2.clone()).unwrap_err().to_string();
        assert!(err.contains("incomplete"), "{err}");
        let non_hom = "irrep 0 dim 1\n1 0\n1 0\nirrep 1 dim 1\n-1 0\n-1 0\n";
        assert!(load_irreps(non_hom, z2).unwrap_err().to_string().contains("homomorphic"));

        let set = d4();
        let back = load_irreps(&set.to_text(), set.group().clone()).unwrap();
        for (a, b) in set.irreps().iter().zip(back.irreps()) {
            assert_eq!(a.class_characters(set.group()), b.class_characters(set.group()));
        }
    }

    #[test]
    fn peter_weyl() {
        let set = d4();
        let trivial = peter_weyl_coeff(&set, 5, 0, 0, 0).unwrap();
        assert!((trivial.re - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        let u = peter_weyl_matrix(&set);
        let resid = max_abs_diff(&(&u * u.adjoint()), &CMatrix::identity(8, 8));
        assert!(resid < 1e-12);
        assert!(peter_weyl_coeff(&set, 0, 4, 2, 0).is_err());
        assert!(peter_weyl_coeff(&set, 0, 5, 0, 0).is_err());

        let z6 = builtin_irreps(Arc::new(build_cyclic(6).unwrap())).unwrap();
        let c = peter_weyl_coeff(&z6, 2, 5, 0, 0).unwrap();
        let expect = Complex64::from_polar(1.0 / 6f64.sqrt(), 2.0 * std::f64::consts::PI * 10.0 / 6.0);
        assert!((c - expect).norm() < 1e-14);
    }

    #[test]
    fn invariant_counts() {
        let set = d4();
        assert_eq!(dim_invariant(&set, &SiteSignature::new(vec![slot(0, false)])).unwrap(), 1);
        for j in 1..5 {
            assert_eq!(dim_invariant(&set, &SiteSignature::new(vec![slot(j, false)])).unwrap(), 0);
        }
        let sig = SiteSignature::new(vec![slot(4, true), slot(4, true), slot(4, false), slot(4, false)]);
        // (1/8) sum chi_4^4 over elements: (16 + 16) / 8
        assert_eq!(dim_invariant(&set, &sig).unwrap(), 4);
        let basis = invariant_basis(&set, &sig, DEFAULT_TENSOR_CAP).unwrap();
        assert_eq!(basis.dim_inv(), 4);
        assert!(basis.is_real());
    }

    #[test]
    fn z2_sign_invariant() {
        let set = builtin_irreps(Arc::new(build_cyclic(2).unwrap())).unwrap();
        let sig = SiteSignature::new(vec![slot(1, true), slot(1, true), slot(1, false), slot(1, false)]);
        let b = invariant_basis(&set, &sig, DEFAULT_TENSOR_CAP).unwrap();
        assert_eq!(b.dim_inv(), 1);
        assert_eq!(b.tensor(0), &[Complex64::new(1.0, 0.0)]);
        let trivial = invariant_basis(&set, &SiteSignature::new(vec![slot(0, false)]), 16).unwrap();
        assert_eq!(trivial.tensor(0), &[Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn tensor_cap_is_enforced() {
        let set = d4();
        let sig = SiteSignature::new(vec![slot(4, false); 5]);
        assert!(matches!(invariant_basis(&set, &sig, 16), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn memo_is_transparent() {
        let set = d4();
        let cache = InvariantCache::default();
        let sig = SiteSignature::new(vec![slot(4, true), slot(2, false), slot(4, false)]);
        let a = cache.get_or_compute(&set, &sig).unwrap();
        let b = cache.get_or_compute(&set, &sig).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let fresh = invariant_basis(&set, &sig, DEFAULT_TENSOR_CAP).unwrap();
        assert_eq!(*a, fresh);
    }
}
