//! Hermiticity, energy identities, solver agreement and basis-convention
//! independence of the assembled Hamiltonian, plus the brute-force oracle.

mod common;

use std::sync::Arc;

use finite_gauge::electric::GammaSet;
use finite_gauge::hamiltonian::ClassFunction;
use finite_gauge::lattice::LatticeGraph;
use finite_gauge::oracle::equivalence_report;
use finite_gauge::representation::IrrepSet;
use finite_gauge::spin_network::SpinNetworkBasis;
use num_complex::Complex64;
use proptest::prelude::*;

use common::properties::{
    convention_independent, energy_decomposition, hellmann_feynman, hermitian, lanczos_matches_dense,
};

/// Small systems whose gauge-invariant dimension stays in the low hundreds.
fn system(pick: usize) -> (Arc<IrrepSet>, Arc<LatticeGraph>) {
    let (set, ext, per): (_, &[usize], &[bool]) = match pick % 14 {
        0 => (common::cyclic(2), &[2, 2], &[false, false]),
        1 => (common::cyclic(2), &[2, 2], &[true, true]),
        2 => (common::cyclic(2), &[3, 3], &[false, false]),
        3 => (common::cyclic(2), &[2, 3], &[true, true]),
        4 => (common::cyclic(3), &[2, 2], &[false, false]),
        5 => (common::cyclic(3), &[2, 2], &[true, true]),
        6 => (common::cyclic(4), &[2, 3], &[false, false]),
        7 => (common::cyclic(5), &[2, 2], &[false, false]),
        8 => (common::dihedral(3), &[2, 3], &[false, false]),
        9 => (common::dihedral(3), &[3, 3], &[false, false]),
        10 => (common::dihedral(4), &[2, 2], &[false, false]),
        11 => (common::dihedral(4), &[2, 3], &[false, false]),
        12 => (common::dihedral(4), &[2, 2], &[true, false]),
        _ => (common::dihedral(5), &[2, 3], &[false, false]),
    };
    (set, common::lattice(ext, per))
}

/// Random real class function: a combination of two irreps' real traces.
fn magnetic(set: &IrrepSet, j1: usize, a: f64, j2: usize, b: f64) -> ClassFunction {
    let n = set.len();
    let c1 = ClassFunction::real_trace(set, 1 + j1 % (n - 1), a).unwrap();
    let c2 = ClassFunction::real_trace(set, j2 % n, b).unwrap();
    let c: Vec<Complex64> = c1.coefficients().iter().zip(c2.coefficients()).map(|(x, y)| x + y).collect();
    ClassFunction::new(set, c).unwrap()
}

struct Case {
    basis: SpinNetworkBasis,
    gamma: GammaSet,
    h: ClassFunction,
}

fn case(pick: usize, gamma: usize, j1: usize, a: f64, j2: usize, b: f64) -> Case {
    let (set, lat) = system(pick);
    Case {
        gamma: common::gamma_by_index(set.group(), gamma),
        h: magnetic(&set, j1, a, j2, b),
        basis: common::basis(&set, &lat),
    }
}

fn inputs() -> impl Strategy<Value = (usize, usize, usize, f64, usize, f64, f64)> {
    (0usize..14, 0usize..32, 0usize..8, -3.0..-0.25f64, 0usize..8, -1.0..1.0f64, 0.0..=1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hamiltonian_is_hermitian((pick, g, j1, a, j2, b, l) in inputs()) {
        let c = case(pick, g, j1, a, j2, b);
        let ham = common::hamiltonian(&c.basis, &c.gamma, &c.h, l);
        prop_assert_eq!(hermitian(&ham), Ok(()));
    }

    #[test]
    fn ground_energy_decomposes((pick, g, j1, a, j2, b, l) in inputs()) {
        let c = case(pick, g, j1, a, j2, b);
        let ham = common::hamiltonian(&c.basis, &c.gamma, &c.h, l);
        prop_assert_eq!(energy_decomposition(&ham), Ok(()));
    }

    #[test]
    fn hellmann_feynman_derivative((pick, g, j1, a, j2, b, l) in inputs()) {
        let c = case(pick, g, j1, a, j2, b);
        let ham = common::hamiltonian(&c.basis, &c.gamma, &c.h, l);
        prop_assert!(hellmann_feynman(&ham).is_ok(), "{:?}", hellmann_feynman(&ham));
    }

    #[test]
    fn lanczos_agrees_with_dense((pick, g, j1, a, j2, b, l) in inputs()) {
        let c = case(pick, g, j1, a, j2, b);
        let ham = common::hamiltonian(&c.basis, &c.gamma, &c.h, l);
        prop_assert_eq!(lanczos_matches_dense(&ham, 3), Ok(()));
    }

    #[test]
    fn spectrum_ignores_tensor_order((pick, g, j1, a, j2, b, l) in inputs()) {
        let c = case(pick, g, j1, a, j2, b);
        prop_assert_eq!(convention_independent(&c.basis, &c.gamma, &c.h, l), Ok(()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Brute force in the group-element basis agrees with the spin-network
    /// pipeline on the lattices small enough for it.
    #[test]
    fn oracle_agrees(pick in prop::sample::select(vec![0usize, 1, 4, 7, 10]), g in 0usize..32,
                     j1 in 0usize..8, a in -3.0..-0.25f64, j2 in 0usize..8, b in -1.0..1.0f64,
                     l in 0.0..=1.0f64) {
        let (set, lat) = system(pick);
        let gamma = common::gamma_by_index(set.group(), g);
        let h = magnetic(&set, j1, a, j2, b);
        let r = equivalence_report(set, lat, &gamma, &h, &[l], 5).unwrap();
        prop_assert!(r.passes(1e-10, 1e-8), "{:?}", r);
    }
}
