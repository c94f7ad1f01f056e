//! On-disk cache of spin-network bases.
//!
//! A cache file is JSON holding the state list and every invariant tensor,
//! with floats stored as IEEE-754 bit patterns so reads are bit-exact. It is
//! keyed by a hash of the group table, irreps and lattice; Γ and the
//! magnetic term never enter, so one cache serves every electric choice.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::LatticeGraph;
use crate::representation::{InvariantBasis, InvariantCache, IrrepSet, SiteSignature, Slot};
use crate::spin_network::{enumerate_basis, BasisOptions, SpinNetworkBasis};

const FORMAT: &str = "finite-gauge-basis/1";

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    slots: Vec<(usize, bool)>,
    dims: Vec<usize>,
    /// `[re bits, im bits]` per component.
    tensors: Vec<Vec<[u64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct Payload {
    num_links: usize,
    num_sites: usize,
    states: Vec<(Vec<u16>, Vec<u32>)>,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format: String,
    source_hash: String,
    payload_hash: String,
    payload: Payload,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of everything the basis depends on.
pub fn source_hash(irreps: &IrrepSet, lattice: &LatticeGraph) -> String {
    let mut h = Sha256::new();
    h.update(irreps.group().to_text());
    h.update(b"\0");
    h.update(irreps.to_text());
    h.update(b"\0");
    h.update(lattice.to_text());
    hex::encode(h.finalize())
}

fn payload_of(basis: &SpinNetworkBasis) -> Payload {
    let lat = basis.lattice();
    Payload {
        num_links: lat.num_links(),
        num_sites: lat.num_sites(),
        states: (0..basis.len())
            .map(|i| (basis.assignment(i).to_vec(), basis.choices(i).to_vec()))
            .collect(),
        tensors: basis
            .tensor_table()
            .iter()
            .map(|(sig, t)| TensorEntry {
                slots: sig.slots.iter().map(|s| (s.irrep, s.dual)).collect(),
                dims: t.slot_dims().to_vec(),
                tensors: t
                    .tensors()
                    .iter()
                    .map(|v| v.iter().map(|z| [z.re.to_bits(), z.im.to_bits()]).collect())
                    .collect(),
            })
            .collect(),
    }
}

/// Writes the basis atomically (temporary file, then rename).
pub fn write_basis_cache(path: &Path, basis: &SpinNetworkBasis) -> Result<()> {
    let payload = payload_of(basis);
    let payload_hash = sha256_hex(&serde_json::to_vec(&payload).map_err(io_err)?);
    let file = CacheFile {
        format: FORMAT.into(),
        source_hash: source_hash(basis.irreps(), basis.lattice()),
        payload_hash,
        payload,
    };
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        serde_json::to_writer(&mut f, &file).map_err(io_err)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Io(e.into())
}

/// Reads a cache, rejecting it when it was built for different inputs or
/// its content does not match its recorded hash.
pub fn read_basis_cache(
    path: &Path,
    irreps: Arc<IrrepSet>,
    lattice: Arc<LatticeGraph>,
) -> Result<SpinNetworkBasis> {
    let text = fs::read(path)?;
    let file: CacheFile = serde_json::from_slice(&text)
        .map_err(|e| Error::StaleCache(format!("{}: unreadable ({e})", path.display())))?;
    if file.format != FORMAT {
        return Err(Error::StaleCache(format!("unknown format {:?}", file.format)));
    }
    let recomputed = sha256_hex(&serde_json::to_vec(&file.payload).map_err(io_err)?);
    if recomputed != file.payload_hash {
        return Err(Error::StaleCache("content does not match its hash".into()));
    }
    let expected = source_hash(&irreps, &lattice);
    if file.source_hash != expected {
        return Err(Error::StaleCache(
            "built for a different group, irrep set or lattice; rebuild it".into(),
        ));
    }
    let p = file.payload;
    if p.num_links != lattice.num_links() || p.num_sites != lattice.num_sites() {
        return Err(Error::StaleCache("lattice shape mismatch".into()));
    }
    let mut tensors = BTreeMap::new();
    for entry in p.tensors {
        let sig = SiteSignature::new(
            entry
                .slots
                .into_iter()
                .map(|(irrep, dual)| Slot { irrep, dual })
                .collect(),
        );
        let data = entry
            .tensors
            .into_iter()
            .map(|v| {
                v.into_iter()
                    .map(|[re, im]| Complex64::new(f64::from_bits(re), f64::from_bits(im)))
                    .collect()
            })
            .collect();
        let basis = InvariantBasis::from_parts(sig.clone(), entry.dims, data)?;
        tensors.insert(sig, Arc::new(basis));
    }
    SpinNetworkBasis::from_states(irreps, lattice, p.states, tensors)
}

/// Reads `path` when it holds a matching cache, otherwise enumerates the
/// basis and writes it. Returns the basis and whether it came from disk.
pub fn load_or_build(
    path: &Path,
    irreps: Arc<IrrepSet>,
    lattice: Arc<LatticeGraph>,
    options: BasisOptions,
    memo: &InvariantCache,
) -> Result<(SpinNetworkBasis, bool)> {
    if path.exists() {
        match read_basis_cache(path, irreps.clone(), lattice.clone()) {
            Ok(b) => return Ok((b, true)),
            Err(Error::StaleCache(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let basis = enumerate_basis(irreps, lattice, options, memo)?;
    write_basis_cache(path, &basis)?;
    Ok((basis, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_cyclic, build_dihedral};
    use crate::lattice::hypercubic;
    use crate::representation::builtin_irreps;

    fn d4_open() -> SpinNetworkBasis {
        let set = Arc::new(builtin_irreps(Arc::new(build_dihedral(4).unwrap())).unwrap());
        let lat = Arc::new(hypercubic(&[2, 2], &[false, false]).unwrap());
        enumerate_basis(set, lat, BasisOptions::default(), &InvariantCache::default()).unwrap()
    }

    #[test]
    fn roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.json");
        let b = d4_open();
        write_basis_cache(&path, &b).unwrap();
        let r = read_basis_cache(&path, b.irreps().clone(), b.lattice().clone()).unwrap();
        assert_eq!(r.len(), 5);
        for i in 0..b.len() {
            assert_eq!(r.assignment(i), b.assignment(i));
            assert_eq!(r.choices(i), b.choices(i));
        }
        assert_eq!(r.tensor_table(), b.tensor_table());
    }

    #[test]
    fn stale_and_tampered_caches_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.json");
        let b = d4_open();
        write_basis_cache(&path, &b).unwrap();

        let other = Arc::new(hypercubic(&[2, 2], &[true, false]).unwrap());
        assert!(matches!(
            read_basis_cache(&path, b.irreps().clone(), other),
            Err(Error::StaleCache(_))
        ));
        let z2 = Arc::new(builtin_irreps(Arc::new(build_cyclic(2).unwrap())).unwrap());
        assert!(matches!(
            read_basis_cache(&path, z2, b.lattice().clone()),
            Err(Error::StaleCache(_))
        ));

        let text = fs::read_to_string(&path).unwrap();
        let tampered = text.replacen("\"states\":[[[0,0,0,0]", "\"states\":[[[0,0,0,1]", 1);
        assert_ne!(tampered, text);
        fs::write(&path, tampered).unwrap();
        assert!(matches!(
            read_basis_cache(&path, b.irreps().clone(), b.lattice().clone()),
            Err(Error::StaleCache(_))
        ));
    }

    #[test]
    fn load_or_build_reuses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.json");
        let b = d4_open();
        let memo = InvariantCache::default();
        let (_, hit) = load_or_build(&path, b.irreps().clone(), b.lattice().clone(), BasisOptions::default(), &memo).unwrap();
        assert!(!hit);
        let (again, hit) = load_or_build(&path, b.irreps().clone(), b.lattice().clone(), BasisOptions::default(), &memo).unwrap();
        assert!(hit);
        assert_eq!(again.len(), 5);
    }
}
