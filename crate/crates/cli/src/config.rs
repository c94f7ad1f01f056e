//! Run configuration: TOML parsing and resolution into library objects.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use finite_gauge::electric::{transfer_matrix_gamma, validate_gamma, D4Preset, GammaSet};
use finite_gauge::group::{build_cyclic, build_dihedral, build_symmetric, load_group_table, GroupTable, Subset};
use finite_gauge::hamiltonian::ClassFunction;
use finite_gauge::lattice::{hypercubic, load_graph, LatticeGraph};
use finite_gauge::representation::{builtin_irreps, load_irreps, load_representation, IrrepSet, DEFAULT_TENSOR_CAP};
use finite_gauge::spectra::{default_grid, refined_grid, LanczosOptions, SweepOptions, DEFAULT_SEED};
use finite_gauge::spin_network::{BasisOptions, DEFAULT_STATE_CAP};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub group: GroupSection,
    #[serde(default)]
    pub irreps: IrrepsSection,
    pub gamma: Option<GammaSection>,
    pub lattice: Option<LatticeSection>,
    #[serde(default)]
    pub hamiltonian: HamiltonianSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    /// `cyclic`, `dihedral` or `symmetric`.
    pub family: Option<String>,
    pub n: Option<usize>,
    /// Multiplication-table file, instead of `family`.
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrrepsSection {
    /// Irrep file; the built-in set is used when absent.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSection {
    pub preset: Option<String>,
    pub elements: Option<Vec<String>>,
    /// Irrep id whose character picks the transfer-matrix set.
    pub transfer_matrix: Option<usize>,
    /// Representation file for the transfer-matrix rule.
    pub representation: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub extents: Option<Vec<usize>>,
    pub periodic: Option<Vec<bool>>,
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    /// `h_B = magnetic_scale · Re χ_j`.
    pub magnetic_irrep: Option<usize>,
    pub magnetic_scale: Option<f64>,
    /// Character expansion `[re, im]` per irrep, instead of `magnetic_irrep`.
    pub coefficients: Option<Vec<[f64; 2]>>,
    /// Coupling for `hamiltonian build`.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub max_krylov: Option<usize>,
    pub max_passes: Option<usize>,
    pub state_cap: Option<u64>,
    pub tensor_cap: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `default` (101 points) or `refined`.
    pub grid: Option<String>,
    pub points: Option<Vec<f64>>,
    pub states: Option<usize>,
    pub epsilon: Option<f64>,
    pub fidelity: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub basis_cache: Option<PathBuf>,
}

/// Parsed configuration plus the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct Config {
    pub raw: RawConfig,
    pub base: PathBuf,
    pub hash: String,
}

fn cfg(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: PathBuf) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let canonical = serde_json::to_vec(&raw).expect("config serializes");
        let hash = hex::encode(Sha256::digest(&canonical));
        Ok(Config { raw, base, hash })
    }

    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn read(&self, field: &str, p: &Path) -> Result<String, CliError> {
        let full = self.path(p);
        fs::read_to_string(&full).map_err(|e| cfg(field, format!("{}: {e}", full.display())))
    }

    pub fn group(&self) -> Result<Arc<GroupTable>, CliError> {
        let g = &self.raw.group;
        let table = match (&g.family, &g.table) {
            (Some(_), Some(_)) => return Err(cfg("group", "give either family or table, not both")),
            (None, None) => return Err(cfg("group", "missing family or table")),
            (None, Some(path)) => load_group_table(&self.read("group.table", path)?)
                .map_err(|e| cfg("group.table", e))?,
            (Some(family), None) => {
                let n = g.n.ok_or_else(|| cfg("group.n", "required with group.family"))?;
                let built = match family.as_str() {
                    "cyclic" => build_cyclic(n),
                    "dihedral" => build_dihedral(n),
                    "symmetric" => build_symmetric(n),
                    other => {
                        return Err(cfg(
                            "group.family",
                            format!("unknown family '{other}' (expected cyclic, dihedral or symmetric)"),
                        ))
                    }
                };
                built.map_err(|e| cfg("group.n", e))?
            }
        };
        Ok(Arc::new(table))
    }

    pub fn irreps(&self, group: Arc<GroupTable>) -> Result<Arc<IrrepSet>, CliError> {
        let set = match &self.raw.irreps.file {
            None => builtin_irreps(group).map_err(|e| cfg("irreps", e))?,
            Some(p) => load_irreps(&self.read("irreps.file", p)?, group).map_err(|e| cfg("irreps.file", e))?,
        };
        Ok(Arc::new(set))
    }

    pub fn gamma(&self, set: &IrrepSet) -> Result<GammaSet, CliError> {
        let group = set.group();
        let g = self.raw.gamma.as_ref().ok_or_else(|| cfg("gamma", "section missing"))?;
        let given = [g.preset.is_some(), g.elements.is_some(), g.transfer_matrix.is_some() || g.representation.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if given != 1 {
            return Err(cfg(
                "gamma",
                "give exactly one of preset, elements, transfer_matrix or representation",
            ));
        }
        if let Some(label) = &g.preset {
            let preset = D4Preset::from_label(label)
                .ok_or_else(|| cfg("gamma.preset", format!("unknown preset '{label}' (gamma1, gamma2, gamma3)")))?;
            return preset.build(group).map_err(|e| cfg("gamma.preset", e));
        }
        if let Some(names) = &g.elements {
            let subset = Subset::from_names(group, names).map_err(|e| cfg("gamma.elements", e))?;
            return validate_gamma(group, &subset).map_err(|e| cfg("gamma.elements", e));
        }
        if g.transfer_matrix.is_some() && g.representation.is_some() {
            return Err(cfg("gamma", "give transfer_matrix or representation, not both"));
        }
        if let Some(j) = g.transfer_matrix {
            if j >= set.len() {
                return Err(cfg("gamma.transfer_matrix", format!("irrep {j} (have {})", set.len())));
            }
            return transfer_matrix_gamma(group, set.irrep(j).matrices())
                .map_err(|e| cfg("gamma.transfer_matrix", e));
        }
        let path = g.representation.as_ref().expect("checked above");
        let rep = load_representation(&self.read("gamma.representation", path)?, group)
            .map_err(|e| cfg("gamma.representation", e))?;
        transfer_matrix_gamma(group, rep.matrices()).map_err(|e| cfg("gamma.representation", e))
    }

    pub fn lattice(&self) -> Result<Arc<LatticeGraph>, CliError> {
        let l = self.raw.lattice.as_ref().ok_or_else(|| cfg("lattice", "section missing"))?;
        let lat = match (&l.extents, &l.graph) {
            (Some(_), Some(_)) => return Err(cfg("lattice", "give either extents or graph, not both")),
            (None, None) => return Err(cfg("lattice", "missing extents or graph")),
            (None, Some(p)) => {
                if l.periodic.is_some() {
                    return Err(cfg("lattice.periodic", "only valid with lattice.extents"));
                }
                load_graph(&self.read("lattice.graph", p)?).map_err(|e| cfg("lattice.graph", e))?
            }
            (Some(extents), None) => {
                let periodic = l.periodic.clone().unwrap_or_else(|| vec![false; extents.len()]);
                if periodic.len() != extents.len() {
                    return Err(cfg(
                        "lattice.periodic",
                        format!("{} flags for {} extents", periodic.len(), extents.len()),
                    ));
                }
                hypercubic(extents, &periodic).map_err(|e| cfg("lattice.extents", e))?
            }
        };
        Ok(Arc::new(lat))
    }

    pub fn magnetic(&self, set: &IrrepSet) -> Result<ClassFunction, CliError> {
        let h = &self.raw.hamiltonian;
        match (&h.coefficients, h.magnetic_irrep) {
            (Some(_), Some(_)) => Err(cfg("hamiltonian", "give magnetic_irrep or coefficients, not both")),
            (None, None) => Err(cfg("hamiltonian", "missing magnetic_irrep or coefficients")),
            (Some(c), None) => {
                if h.magnetic_scale.is_some() {
                    return Err(cfg("hamiltonian.magnetic_scale", "only valid with magnetic_irrep"));
                }
                let c = c.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                ClassFunction::new(set, c).map_err(|e| cfg("hamiltonian.coefficients", e))
            }
            (None, Some(j)) => ClassFunction::real_trace(set, j, h.magnetic_scale.unwrap_or(-2.0))
                .map_err(|e| cfg("hamiltonian.magnetic_irrep", e)),
        }
    }

    pub fn lambda(&self) -> Result<f64, CliError> {
        let l = self
            .raw
            .hamiltonian
            .lambda
            .ok_or_else(|| cfg("hamiltonian.lambda", "required for hamiltonian build"))?;
        if !(0.0..=1.0).contains(&l) {
            return Err(cfg("hamiltonian.lambda", format!("{l} outside [0, 1]")));
        }
        Ok(l)
    }

    pub fn lanczos(&self) -> Result<LanczosOptions, CliError> {
        let s = &self.raw.solver;
        let mut o = LanczosOptions {
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            ..Default::default()
        };
        if let Some(t) = s.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(cfg("solver.tol", format!("{t} not in (0, 1)")));
            }
            o.tol = t;
        }
        if let Some(k) = s.max_krylov {
            if k < 2 {
                return Err(cfg("solver.max_krylov", "must be at least 2"));
            }
            o.max_krylov = k;
        }
        if let Some(p) = s.max_passes {
            if p == 0 {
                return Err(cfg("solver.max_passes", "must be positive"));
            }
            o.max_passes = p;
        }
        Ok(o)
    }

    pub fn basis_options(&self) -> BasisOptions {
        BasisOptions {
            state_cap: self.raw.solver.state_cap.unwrap_or(DEFAULT_STATE_CAP),
            tensor_cap: self.raw.solver.tensor_cap.unwrap_or(DEFAULT_TENSOR_CAP),
        }
    }

    /// Explicit sweep points if any were given.
    pub fn explicit_points(&self) -> Result<Option<Vec<f64>>, CliError> {
        let Some(points) = &self.raw.sweep.points else {
            return Ok(None);
        };
        if points.is_empty() {
            return Err(cfg("sweep.points", "empty"));
        }
        if let Some(bad) = points.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(cfg("sweep.points", format!("{bad} outside [0, 1]")));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(cfg("sweep.points", "must be strictly increasing"));
        }
        Ok(Some(points.clone()))
    }

    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        let s = &self.raw.sweep;
        if s.points.is_some() && s.grid.is_some() {
            return Err(cfg("sweep", "give grid or points, not both"));
        }
        if let Some(p) = self.explicit_points()? {
            return Ok(p);
        }
        match s.grid.as_deref().unwrap_or("default") {
            "default" => Ok(default_grid()),
            "refined" => Ok(refined_grid()),
            other => Err(cfg("sweep.grid", format!("unknown grid '{other}' (default, refined)"))),
        }
    }

    pub fn sweep_options(&self) -> Result<SweepOptions, CliError> {
        let s = &self.raw.sweep;
        let mut o = SweepOptions {
            lanczos: self.lanczos()?,
            ..Default::default()
        };
        if let Some(k) = s.states {
            if k < 2 {
                return Err(cfg("sweep.states", "must be at least 2"));
            }
            o.states = k;
        }
        if let Some(e) = s.epsilon {
            if !(e > 0.0 && e < 0.5) {
                return Err(cfg("sweep.epsilon", format!("{e} not in (0, 0.5)")));
            }
            o.epsilon = e;
        }
        if let Some(f) = s.fidelity {
            o.fidelity = f;
        }
        Ok(o)
    }

    pub fn output_dir(&self, overridden: Option<&Path>) -> PathBuf {
        match overridden {
            Some(p) => p.to_path_buf(),
            None => self.path(self.raw.output.dir.as_deref().unwrap_or(Path::new("."))),
        }
    }

    pub fn basis_cache(&self, out_dir: &Path) -> PathBuf {
        match &self.raw.output.basis_cache {
            Some(p) => self.path(p),
            None => out_dir.join("basis.cache.json"),
        }
    }
}
