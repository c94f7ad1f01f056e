//! Finite groups as explicit multiplication tables.
//!
//! Every element is a dense index `0..order`. Constructors exist for the
//! cyclic, dihedral and symmetric families; anything else is loaded from the
//! plain-text table format:
//!
//! ```text
//! # comment
//! order 4
//! e x x^2 x^3
//! 0 1 2 3
//! 1 2 3 0
//! 2 3 0 1
//! 3 0 1 2
//! ```
//!
//! Row `g`, column `h` holds the index of `g·h`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest order for which associativity is checked over every triple.
const EXHAUSTIVE_ASSOCIATIVITY_ORDER: usize = 120;
const SAMPLED_TRIPLES: usize = 20_000;

/// Which constructor produced a table. Used to pick analytic irreps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupFamily {
    Cyclic(usize),
    Dihedral(usize),
    Symmetric(usize),
    Loaded,
}

#[derive(Debug, Clone)]
pub struct GroupTable {
    order: usize,
    identity: usize,
    mul: Vec<usize>,
    inv: Vec<usize>,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    names: Vec<String>,
    family: GroupFamily,
}

impl PartialEq for GroupTable {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order
            && self.identity == other.identity
            && self.mul == other.mul
            && self.inv == other.inv
            && self.classes == other.classes
            && self.names == other.names
    }
}

impl GroupTable {
    /// Builds a table from raw parts, checking every group axiom.
    pub fn from_table(names: Vec<String>, mul: Vec<usize>, family: GroupFamily) -> Result<Self> {
        let order = names.len();
        if order == 0 {
            return Err(Error::load("group table", "order must be positive"));
        }
        if mul.len() != order * order {
            return Err(Error::load(
                "group table",
                format!("expected {} entries, found {}", order * order, mul.len()),
            ));
        }
        if let Some(bad) = mul.iter().find(|&&v| v >= order) {
            return Err(Error::load(
                "group table",
                format!("closure: entry {bad} is not an element index"),
            ));
        }
        let at = |a: usize, b: usize| mul[a * order + b];

        let identity = (0..order)
            .find(|&e| (0..order).all(|g| at(e, g) == g && at(g, e) == g))
            .ok_or_else(|| Error::load("group table", "identity: no two-sided identity element"))?;

        let mut inv = vec![usize::MAX; order];
        for g in 0..order {
            let Some(h) = (0..order).find(|&h| at(g, h) == identity && at(h, g) == identity) else {
                return Err(Error::load(
                    "group table",
                    format!("inverses: element {g} has no two-sided inverse"),
                ));
            };
            inv[g] = h;
        }

        let assoc_fails = |a: usize, b: usize, c: usize| at(at(a, b), c) != at(a, at(b, c));
        if order <= EXHAUSTIVE_ASSOCIATIVITY_ORDER {
            for a in 0..order {
                for b in 0..order {
                    for c in 0..order {
                        if assoc_fails(a, b, c) {
                            return Err(Error::load(
                                "group table",
                                format!("associativity fails at ({a}, {b}, {c})"),
                            ));
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a550c);
            for _ in 0..SAMPLED_TRIPLES {
                let (a, b, c) = (
                    rng.gen_range(0..order),
                    rng.gen_range(0..order),
                    rng.gen_range(0..order),
                );
                if assoc_fails(a, b, c) {
                    return Err(Error::load(
                        "group table",
                        format!("associativity fails at ({a}, {b}, {c})"),
                    ));
                }
            }
        }

        let mut table = GroupTable {
            order,
            identity,
            mul,
            inv,
            classes: Vec::new(),
            class_of: Vec::new(),
            names,
            family,
        };
        let classes = conjugacy_classes(&table);
        let mut class_of = vec![0; order];
        for (c, members) in classes.iter().enumerate() {
            for &g in members {
                class_of[g] = c;
            }
        }
        table.classes = classes;
        table.class_of = class_of;
        Ok(table)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b]
    }

    #[inline]
    pub fn inv(&self, g: usize) -> usize {
        self.inv[g]
    }

    /// `g^k` for a signed exponent.
    pub fn pow(&self, g: usize, k: i64) -> usize {
        let base = if k < 0 { self.inv(g) } else { g };
        (0..k.unsigned_abs()).fold(self.identity, |acc, _| self.mul(acc, base))
    }

    pub fn conjugate(&self, by: usize, g: usize) -> usize {
        self.mul(self.mul(by, g), self.inv(by))
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, g: usize) -> usize {
        self.class_of[g]
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, g: usize) -> &str {
        &self.names[g]
    }

    pub fn element_by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn family(&self) -> GroupFamily {
        self.family
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..self.order).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// A small generating set picked greedily in index order.
    pub fn generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = vec![false; self.order];
        span[self.identity] = true;
        for g in 0..self.order {
            if !span[g] {
                gens.push(g);
                for h in closure(self, &gens) {
                    span[h] = true;
                }
            }
        }
        gens
    }

    /// Serializes to the text table format accepted by [`load_group_table`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "order {}", self.order).unwrap();
        writeln!(out, "{}", self.names.join(" ")).unwrap();
        for g in 0..self.order {
            let row: Vec<String> = (0..self.order).map(|h| self.mul(g, h).to_string()).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        out
    }
}

/// A sorted, duplicate-free set of element indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset {
    members: Vec<usize>,
}

impl Subset {
    pub fn new(group: &GroupTable, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        if let Some(&bad) = members.iter().find(|&&g| g >= group.order()) {
            return Err(Error::Index(format!(
                "element {bad} outside group of order {}",
                group.order()
            )));
        }
        members.sort_unstable();
        members.dedup();
        Ok(Subset { members })
    }

    /// Resolves element names, e.g. `["r", "r^3"]`.
    pub fn from_names<S: AsRef<str>>(group: &GroupTable, names: &[S]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                group.element_by_name(n.as_ref()).ok_or_else(|| {
                    Error::InvalidParameter(format!("unknown element name '{}'", n.as_ref()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Subset::new(group, idx)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, g: usize) -> bool {
        self.members.binary_search(&g).is_ok()
    }
}

/// Subgroup generated by a subset, with its right cosets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedSubgroup {
    pub subgroup: Subset,
    pub index: usize,
    /// Right cosets `H g`, each sorted, ordered by least member.
    pub cosets: Vec<Vec<usize>>,
}

pub fn build_cyclic(n: usize) -> Result<GroupTable> {
    if n == 0 {
        return Err(Error::InvalidParameter("cyclic group needs n >= 1".into()));
    }
    let names = (0..n)
        .map(|k| match k {
            0 => "e".to_string(),
            1 => "x".to_string(),
            _ => format!("x^{k}"),
        })
        .collect();
    let mul = (0..n * n).map(|i| (i / n + i % n) % n).collect();
    GroupTable::from_table(names, mul, GroupFamily::Cyclic(n))
}

/// Dihedral group of order `2n`: index `k < n` is `r^k`, index `n + k` is `r^k s`.
pub fn build_dihedral(n: usize) -> Result<GroupTable> {
    if n < 2 {
        return Err(Error::InvalidParameter("dihedral group needs n >= 2".into()));
    }
    let order = 2 * n;
    let rot = |k: usize| match k {
        0 => String::new(),
        1 => "r".to_string(),
        _ => format!("r^{k}"),
    };
    let names = (0..order)
        .map(|i| {
            if i == 0 {
                "e".to_string()
            } else if i < n {
                rot(i)
            } else {
                format!("{}s", rot(i - n))
            }
        })
        .collect();
    let split = |i: usize| (i % n, i / n);
    let mut mul = Vec::with_capacity(order * order);
    for a in 0..order {
        for b in 0..order {
            // (r^p s^x)(r^q s^y) = r^(p + (-1)^x q) s^(x+y)
            let ((p, x), (q, y)) = (split(a), split(b));
            let rot = if x == 0 { (p + q) % n } else { (p + n - q) % n };
            mul.push(rot + n * ((x + y) % 2));
        }
    }
    GroupTable::from_table(names, mul, GroupFamily::Dihedral(n))
}

/// Symmetric group on `n <= 6` points. Elements are permutations in
/// lexicographic order; `(g·h)(i) = g(h(i))`.
pub fn build_symmetric(n: usize) -> Result<GroupTable> {
    if n == 0 {
        return Err(Error::InvalidParameter("symmetric group needs n >= 1".into()));
    }
    if n > 6 {
        return Err(Error::SizeLimit {
            what: "symmetric group degree",
            actual: n as u128,
            limit: 6,
        });
    }
    let perms = permutations(n);
    let index = |p: &[usize]| perms.binary_search_by(|q| q.as_slice().cmp(p)).unwrap();
    let order = perms.len();
    let mut mul = Vec::with_capacity(order * order);
    for g in &perms {
        for h in &perms {
            let prod: Vec<usize> = (0..n).map(|i| g[h[i]]).collect();
            mul.push(index(&prod));
        }
    }
    let names = perms
        .iter()
        .map(|p| p.iter().map(|i| char::from(b'1' + *i as u8)).collect())
        .collect();
    GroupTable::from_table(names, mul, GroupFamily::Symmetric(n))
}

/// Underlying permutation of an element of [`build_symmetric`]`(n)`.
pub fn symmetric_permutation(n: usize, index: usize) -> Vec<usize> {
    permutations(n).swap_remove(index)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Parses the text table format; every group axiom is verified.
pub fn load_group_table(source: &str) -> Result<GroupTable> {
    let mut lines = source
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());

    let header = lines
        .next()
        .ok_or_else(|| Error::load("group table", "empty input"))?;
    let order: usize = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["order", n] => n
            .parse()
            .map_err(|_| Error::load("group table", format!("bad order '{n}'")))?,
        _ => {
            return Err(Error::load(
                "group table",
                format!("expected 'order N', found '{header}'"),
            ))
        }
    };
    let names: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::load("group table", "missing element names"))?
        .split_whitespace()
        .map(str::to_string)
        .collect();
    if names.len() != order {
        return Err(Error::load(
            "group table",
            format!("{} names for order {order}", names.len()),
        ));
    }
    let mut mul = Vec::with_capacity(order * order);
    for row in 0..order {
        let line = lines
            .next()
            .ok_or_else(|| Error::load("group table", format!("missing row {row}")))?;
        let entries = line
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::load("group table", format!("bad entry '{t}' in row {row}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if entries.len() != order {
            return Err(Error::load(
                "group table",
                format!("row {row} has {} entries, expected {order}", entries.len()),
            ));
        }
        mul.extend(entries);
    }
    if let Some(extra) = lines.next() {
        return Err(Error::load(
            "group table",
            format!("unexpected trailing line '{extra}'"),
        ));
    }
    GroupTable::from_table(names, mul, GroupFamily::Loaded)
}

/// Orbits of conjugation `h -> g h g^-1`, each sorted, ordered by least member.
pub fn conjugacy_classes(group: &GroupTable) -> Vec<Vec<usize>> {
    let n = group.order();
    let mut seen = vec![false; n];
    let mut classes = Vec::new();
    for h in 0..n {
        if seen[h] {
            continue;
        }
        let mut class: Vec<usize> = (0..n).map(|g| group.conjugate(g, h)).collect();
        class.sort_unstable();
        class.dedup();
        for &c in &class {
            seen[c] = true;
        }
        classes.push(class);
    }
    classes
}

fn closure(group: &GroupTable, gens: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; group.order()];
    let mut queue = VecDeque::from([group.identity()]);
    inside[group.identity()] = true;
    while let Some(h) = queue.pop_front() {
        for &g in gens {
            for next in [group.mul(h, g), group.mul(h, group.inv(g))] {
                if !inside[next] {
                    inside[next] = true;
                    queue.push_back(next);
                }
            }
        }
    }
    (0..group.order()).filter(|&g| inside[g]).collect()
}

/// Closure of `generators` under products and inverses, plus its right cosets.
pub fn generated_subgroup(group: &GroupTable, generators: &Subset) -> Result<GeneratedSubgroup> {
    if generators.is_empty() {
        return Err(Error::InvalidParameter(
            "generating subset must be non-empty".into(),
        ));
    }
    let members = closure(group, generators.members());
    let mut assigned = vec![false; group.order()];
    let mut cosets = Vec::new();
    for g in 0..group.order() {
        if assigned[g] {
            continue;
        }
        let mut coset: Vec<usize> = members.iter().map(|&h| group.mul(h, g)).collect();
        coset.sort_unstable();
        for &c in &coset {
            assigned[c] = true;
        }
        cosets.push(coset);
    }
    Ok(GeneratedSubgroup {
        index: group.order() / members.len(),
        subgroup: Subset { members },
        cosets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class_sizes(g: &GroupTable) -> Vec<usize> {
        let mut s: Vec<usize> = g.classes().iter().map(Vec::len).collect();
        s.sort_unstable();
        s
    }

    #[test]
    fn cyclic_basics() {
        let z5 = build_cyclic(5).unwrap();
        assert_eq!(z5.order(), 5);
        assert_eq!(z5.num_classes(), 5);
        assert_eq!(z5.mul(3, 4), 2);
        let z1 = build_cyclic(1).unwrap();
        assert_eq!(z1.order(), 1);
        assert!(matches!(build_cyclic(0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn dihedral_relations_and_classes() {
        let d4 = build_dihedral(4).unwrap();
        let (r, s) = (1, 4);
        assert_eq!(d4.order(), 8);
        assert_eq!(d4.pow(r, 4), d4.identity());
        assert_eq!(d4.mul(s, s), d4.identity());
        assert_eq!(d4.mul(d4.mul(s, r), s), d4.inv(r));
        let named: Vec<Vec<&str>> = d4
            .classes()
            .iter()
            .map(|c| c.iter().map(|&g| d4.name(g)).collect())
            .collect();
        assert_eq!(
            named,
            vec![
                vec!["e"],
                vec!["r", "r^3"],
                vec!["r^2"],
                vec!["s", "r^2s"],
                vec!["rs", "r^3s"]
            ]
        );
        assert_eq!(d4.classes().iter().map(Vec::len).sum::<usize>(), 8);
        assert!(build_dihedral(1).is_err());
    }

    #[test]
    fn dihedral_two_is_klein_four() {
        let d2 = build_dihedral(2).unwrap();
        assert_eq!(d2.order(), 4);
        // brute-force conjugation: every conjugate of h is h
        for g in 0..4 {
            for h in 0..4 {
                assert_eq!(d2.conjugate(g, h), h);
            }
        }
        assert!(d2.is_abelian());
        assert_eq!(d2.num_classes(), 4);
    }

    #[test]
    fn symmetric_classes_by_cycle_type() {
        let s3 = build_symmetric(3).unwrap();
        assert_eq!(class_sizes(&s3), vec![1, 2, 3]);
        let s4 = build_symmetric(4).unwrap();
        assert_eq!(class_sizes(&s4), vec![1, 3, 6, 6, 8]);
        let s1 = build_symmetric(1).unwrap();
        assert_eq!(s1.order(), 1);
        assert!(matches!(build_symmetric(7), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn s5_five_cycles_generate_a5() {
        let s5 = build_symmetric(5).unwrap();
        assert_eq!(s5.order(), 120);
        let five_cycles: Vec<usize> = (0..120)
            .filter(|&g| {
                let p = symmetric_permutation(5, g);
                let (mut i, mut len) = (p[0], 1);
                while i != 0 {
                    i = p[i];
                    len += 1;
                }
                len == 5
            })
            .collect();
        assert_eq!(five_cycles.len(), 24);
        let class = s5.classes()[s5.class_of(five_cycles[0])].clone();
        assert_eq!(class, five_cycles);
        let sub = generated_subgroup(&s5, &Subset::new(&s5, five_cycles).unwrap()).unwrap();
        assert_eq!(sub.subgroup.len(), 60);
        assert_eq!(sub.index, 2);
    }

    #[test]
    fn generated_subgroups_of_d4() {
        let d4 = build_dihedral(4).unwrap();
        let rot = Subset::from_names(&d4, &["r", "r^2", "r^3"]).unwrap();
        let sub = generated_subgroup(&d4, &rot).unwrap();
        assert_eq!(sub.subgroup.members(), &[0, 1, 2, 3]);
        assert_eq!(sub.index, 2);
        assert_eq!(sub.cosets, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        let g1 = Subset::from_names(&d4, &["r", "r^3", "s", "r^2s"]).unwrap();
        assert_eq!(generated_subgroup(&d4, &g1).unwrap().index, 1);
    }

    #[test]
    fn hand_written_z4_matches_builder() {
        let text = "# Z4\norder 4\ne x x^2 x^3\n0 1 2 3\n1 2 3 0\n2 3 0 1\n3 0 1 2\n";
        assert_eq!(load_group_table(text).unwrap(), build_cyclic(4).unwrap());
    }

    #[test]
    fn corrupted_tables_are_rejected_with_axiom() {
        let d4 = build_dihedral(4).unwrap();
        let mut rows: Vec<Vec<String>> = d4
            .to_text()
            .lines()
            .skip(2)
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect();
        // r * r -> r^3 instead of r^2: row still a permutation of a Latin square
        // would be too lucky; any single change must trip some axiom.
        rows[1][1] = "3".into();
        let text = format!(
            "order 8\n{}\n{}",
            d4.names().join(" "),
            rows.iter().map(|r| r.join(" ")).collect::<Vec<_>>().join("\n")
        );
        let err = load_group_table(&text).unwrap_err().to_string();
        assert!(
            err.contains("associativity") || err.contains("inverses") || err.contains("identity"),
            "{err}"
        );

        let no_identity = "order 2\na b\n0 0\n0 0\n";
        assert!(load_group_table(no_identity)
            .unwrap_err()
            .to_string()
            .contains("identity"));
        assert!(load_group_table("order 2\na b\n0 1\n").is_err());
        assert!(load_group_table("ord 2").is_err());
    }

    #[test]
    fn nonassociative_loop_is_rejected() {
        // A Latin square with identity and inverses that is not associative
        // (order-5 loop).
        let text = "order 5\ne a b c d\n\
                    0 1 2 3 4\n\
                    1 0 3 4 2\n\
                    2 4 0 1 3\n\
                    3 2 4 0 1\n\
                    4 3 1 2 0\n";
        let err = load_group_table(text).unwrap_err().to_string();
        assert!(err.contains("associativity"), "{err}");
    }

    #[test]
    fn roundtrip_text() {
        let d4 = build_dihedral(4).unwrap();
        assert_eq!(load_group_table(&d4.to_text()).unwrap(), d4);
    }

    #[test]
    fn generators_generate() {
        for g in [build_dihedral(5).unwrap(), build_symmetric(4).unwrap()] {
            let gens = Subset::new(&g, g.generators()).unwrap();
            assert_eq!(generated_subgroup(&g, &gens).unwrap().index, 1);
        }
    }
}
