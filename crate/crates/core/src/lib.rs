pub mod cache;
pub mod electric;
pub mod error;
pub mod group;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod oracle;
pub mod representation;
pub mod spectra;
pub mod spin_network;

/// Library version, embedded in every CLI artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/groups.md")]
    mod groups {}
    #[doc = include_str!("../../../book/src/electric.md")]
    mod electric {}
    #[doc = include_str!("../../../book/src/lattices.md")]
    mod lattices {}
    #[doc = include_str!("../../../book/src/spin-networks.md")]
    mod spin_networks {}
    #[doc = include_str!("../../../book/src/hamiltonian.md")]
    mod hamiltonian {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
