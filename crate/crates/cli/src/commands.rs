use std::fmt::Write as _;
use std::sync::Arc;

use finite_gauge::cache::{load_or_build, source_hash};
use finite_gauge::electric::electric_levels;
use finite_gauge::hamiltonian::{assemble, SparseHamiltonian};
use finite_gauge::oracle::equivalence_report;
use finite_gauge::representation::{verify_irreps, InvariantCache};
use finite_gauge::spectra::{sweep, transition_points, SweepRecord, TransitionPoints};
use finite_gauge::spin_network::{physical_dimension, SpinNetworkBasis};
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{fmt_f64, Artifacts, Metadata};

const ORACLE_LAMBDAS: [f64; 5] = [0.0, 0.3, 0.5, 0.7, 1.0];
const ORACLE_LEVELS: usize = 5;
const COMMUTATOR_TOL: f64 = 1e-10;
const SPECTRUM_TOL: f64 = 1e-8;
const IRREP_TOL: f64 = 1e-10;

pub fn group_info(config: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let group = config.group()?;
    let set = config.irreps(group.clone())?;
    let report = verify_irreps(&group, set.irreps());
    let classes: Vec<Vec<&str>> = group
        .classes()
        .iter()
        .map(|c| c.iter().map(|&g| group.name(g)).collect())
        .collect();
    let summary = json!({
        "metadata": Metadata::new("group info", config)?,
        "order": group.order(),
        "abelian": group.is_abelian(),
        "elements": group.names(),
        "classes": classes,
        "generators": group.generators().iter().map(|&g| group.name(g)).collect::<Vec<_>>(),
        "irrep_dims": set.irreps().iter().map(|r| r.dim()).collect::<Vec<_>>(),
        "irreps_real": set.is_real(),
        "irreps_valid": report.passes(IRREP_TOL),
    });
    out.write_json("group.json", &summary)?;
    println!("order {}", group.order());
    println!("classes {}", group.num_classes());
    println!(
        "irrep dims {}",
        set.irreps().iter().map(|r| r.dim().to_string()).collect::<Vec<_>>().join(" ")
    );
    if let Some(why) = report.first_failure(IRREP_TOL) {
        return Err(CliError::CheckFailed(format!("irreps fail verification: {why}")));
    }
    Ok(())
}

pub fn electric(config: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let group = config.group()?;
    let set = config.irreps(group)?;
    let gamma = config.gamma(&set)?;
    let spectrum = electric_levels(&set, &gamma)?;
    let mut rows = String::from("j,dim,f\n");
    for (j, (&f, &d)) in spectrum.levels.iter().zip(&spectrum.dims).enumerate() {
        // rounded so exact integers print as such
        let f = (f * 1e12).round() / 1e12;
        writeln!(rows, "{j},{d},{}", fmt_f64(f)).unwrap();
    }
    let mut csv = Metadata::new("electric", config)?.comment_block();
    writeln!(csv, "# ground_degeneracy: {}", spectrum.degeneracy).unwrap();
    csv.push_str(&rows);
    out.write("electric.csv", csv.as_bytes())?;
    print!("{rows}");
    Ok(())
}

pub fn physdim(config: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let group = config.group()?;
    let lat = config.lattice()?;
    let d = physical_dimension(&group, lat.num_links(), lat.num_sites())?;
    out.write_json(
        "physdim.json",
        &json!({
            "metadata": Metadata::new("physdim", config)?,
            "links": lat.num_links(),
            "sites": lat.num_sites(),
            "physical_dimension": d.to_string(),
        }),
    )?;
    println!("{d}");
    Ok(())
}

fn basis(config: &Config, out: &mut Artifacts) -> Result<SpinNetworkBasis, CliError> {
    let group = config.group()?;
    let set = config.irreps(group)?;
    let lat = config.lattice()?;
    let path = config.basis_cache(out.dir());
    let existed = path.exists();
    let (basis, hit) = load_or_build(&path, set, lat, config.basis_options(), &InvariantCache::default())?;
    if !hit {
        if !existed {
            out.track(path.clone());
        }
        eprintln!("basis: built {} states, cached at {}", basis.len(), path.display());
    } else {
        eprintln!("basis: {} states from {}", basis.len(), path.display());
    }
    Ok(basis)
}

pub fn basis_build(config: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let b = basis(config, out)?;
    let group = b.irreps().group().clone();
    let lat = b.lattice();
    let physdim = physical_dimension(&group, lat.num_links(), lat.num_sites())?;
    out.write_json(
        "basis.json",
        &json!({
            "metadata": Metadata::new("basis build", config)?,
            "states": b.len(),
            "physical_dimension": physdim.to_string(),
            "site_signatures": b.tensor_table().len(),
            "real": b.is_real(),
            "source_hash": source_hash(b.irreps(), lat),
        }),
    )?;
    println!("{}", b.len());
    Ok(())
}

/// Share of `H_B` entries that are nonzero, independent of `λ`.
fn magnetic_fraction(ham: &SparseHamiltonian) -> f64 {
    let n = ham.electric().len() as f64;
    ham.magnetic().nnz() as f64 / (n * n)
}

fn hamiltonian(config: &Config, out: &mut Artifacts, lambda: f64) -> Result<(SpinNetworkBasis, SparseHamiltonian), CliError> {
    let b = basis(config, out)?;
    let gamma = config.gamma(b.irreps())?;
    let spectrum = electric_levels(b.irreps(), &gamma)?;
    let h = config.magnetic(b.irreps())?;
    let ham = assemble(&b, &spectrum, &h, lambda)?;
    eprintln!(
        "hamiltonian: dimension {}, {} magnetic nonzeros ({:.4}%)",
        b.len(),
        ham.magnetic().nnz(),
        100.0 * magnetic_fraction(&ham)
    );
    Ok((b, ham))
}

pub fn hamiltonian_build(config: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let lambda = config.lambda()?;
    let (b, ham) = hamiltonian(config, out, lambda)?;
    let meta = Metadata::new("hamiltonian build", config)?;
    let mut text = meta.comment_block().into_bytes();
    text.extend_from_slice(format!("# lambda: {}\n", fmt_f64(lambda)).as_bytes());
    ham.write_coordinates(&mut text)?;
    out.write("hamiltonian.txt", &text)?;
    out.write_json(
        "hamiltonian.json",
        &json!({
            "metadata": meta,
            "lambda": lambda,
            "dimension": b.len(),
            "nnz": ham.nnz(),
            "magnetic_nnz": ham.magnetic().nnz(),
            "nonzero_fraction": ham.nonzero_fraction(),
            "real": ham.is_real(),
            "hermiticity_defect": ham.magnetic().hermiticity_defect(),
        }),
    )?;
    println!("{} {}", b.len(), ham.nnz());
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary {
    metadata: Metadata,
    dimension: usize,
    points: usize,
    magnetic_nonzero_fraction: f64,
    e0_first: f64,
    e0_last: f64,
    degeneracy_first: usize,
    degeneracy_last: usize,
    transitions: Option<TransitionPoints>,
    warnings: Vec<String>,
}

fn sweep_csv(meta: &Metadata, records: &[SweepRecord]) -> String {
    let mut s = meta.comment_block();
    s.push_str("lambda,e0,gap,exp_he,exp_hb,chi,degeneracy\n");
    for r in records {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.lambda),
            fmt_f64(r.e0),
            fmt_f64(r.gap),
            fmt_f64(r.exp_he),
            fmt_f64(r.exp_hb),
            r.chi.map(fmt_f64).unwrap_or_default(),
            r.degeneracy
        )
        .unwrap();
    }
    s
}

pub fn run_sweep(config: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let grid = config.grid()?;
    let options = config.sweep_options()?;
    let (b, ham) = hamiltonian(config, out, grid[0])?;
    let records = sweep(&ham, &grid, &options)?;
    let transitions = if records.len() >= 5 {
        Some(transition_points(&records)?)
    } else {
        None
    };
    let meta = Metadata::new("sweep", config)?;
    out.write("sweep.csv", sweep_csv(&meta, &records).as_bytes())?;
    let first = &records[0];
    let last = records.last().expect("nonempty grid");
    let summary = SweepSummary {
        metadata: meta,
        dimension: b.len(),
        points: records.len(),
        magnetic_nonzero_fraction: magnetic_fraction(&ham),
        e0_first: first.e0,
        e0_last: last.e0,
        degeneracy_first: first.degeneracy,
        degeneracy_last: last.degeneracy,
        transitions,
        warnings: records
            .iter()
            .filter_map(|r| r.warning.as_ref().map(|w| format!("λ = {}: {w}", r.lambda)))
            .collect(),
    };
    out.write_json("sweep.json", &summary)?;
    if let Some(t) = transitions {
        let show = |e: Option<finite_gauge::spectra::Estimate>| {
            e.map_or("none".to_string(), |e| format!("{:.4} ± {:.4}", e.lambda, e.uncertainty))
        };
        println!("electric  {}", show(t.electric));
        println!("magnetic  {}", show(t.magnetic));
        println!("fidelity  {}", show(t.fidelity));
    }
    Ok(())
}

pub fn oracle_check(config: &Config, out: &mut Artifacts) -> Result<(), CliError> {
    let group = config.group()?;
    let set = config.irreps(group)?;
    let lat = config.lattice()?;
    let gamma = config.gamma(&set)?;
    let h = config.magnetic(&set)?;
    let lambdas = config.explicit_points()?.unwrap_or_else(|| ORACLE_LAMBDAS.to_vec());
    let report = equivalence_report(set, Arc::clone(&lat), &gamma, &h, &lambdas, ORACLE_LEVELS)?;
    let pass = report.passes(COMMUTATOR_TOL, SPECTRUM_TOL);
    out.write_json(
        "oracle.json",
        &json!({
            "metadata": Metadata::new("oracle check", config)?,
            "commutator_tol": COMMUTATOR_TOL,
            "spectrum_tol": SPECTRUM_TOL,
            "pass": pass,
            "report": report,
        }),
    )?;
    println!(
        "trace {} physdim {}",
        fmt_f64(report.projector_trace),
        report.physical_dimension
    );
    for p in &report.points {
        println!(
            "lambda {} commutator {:.1e} max_difference {:.1e}",
            fmt_f64(p.lambda),
            p.commutator,
            p.max_difference
        );
    }
    if pass {
        println!("PASS");
        Ok(())
    } else {
        Err(CliError::CheckFailed("oracle and spin-network results disagree; see oracle.json".into()))
    }
}
