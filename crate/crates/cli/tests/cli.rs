use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fgauge");

fn run(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).current_dir(dir);
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

const D4: &str = "[group]\nfamily = \"dihedral\"\nn = 4\n";

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn physdim_d4_three_by_three_periodic() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.toml", &format!("{D4}[lattice]\nextents = [3, 3]\nperiodic = [true, true]\n"));
    let o = run(&["physdim", "-c", "c.toml", "-o", "out"], dir.path(), None);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "269221888");
    let json = fs::read_to_string(dir.path().join("out/physdim.json")).unwrap();
    assert!(json.contains("\"config_hash\""));
}

#[test]
fn electric_gamma2_rows() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.toml", &format!("{D4}[gamma]\npreset = \"gamma2\"\n"));
    let o = run(&["electric", "-c", "c.toml", "-o", "out"], dir.path(), None);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "j,dim,f\n0,1,0\n1,1,8\n2,1,8\n3,1,8\n4,2,6\n");
    let csv = fs::read_to_string(dir.path().join("out/electric.csv")).unwrap();
    assert!(csv.starts_with("# "));
    assert!(csv.ends_with("4,2,6\n"));
}

fn small_sweep_config(preset: &str) -> String {
    format!(
        "{D4}[gamma]\npreset = \"{preset}\"\n[lattice]\nextents = [2, 2]\n\
         [hamiltonian]\nmagnetic_irrep = 4\n[sweep]\npoints = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0]\n\
         [output]\nbasis_cache = \"shared.cache.json\"\n"
    )
}

#[test]
fn sweep_is_deterministic_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.toml", &small_sweep_config("gamma1"));
    let a = run(&["sweep", "-c", "c.toml", "-o", "a"], dir.path(), Some("1"));
    let b = run(&["sweep", "-c", "c.toml", "-o", "b"], dir.path(), Some("3"));
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(b.status.success());
    for name in ["sweep.csv", "sweep.json"] {
        let x = fs::read(dir.path().join("a").join(name)).unwrap();
        let y = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let csv = fs::read_to_string(dir.path().join("a/sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "lambda,e0,gap,exp_he,exp_hb,chi,degeneracy");
    assert_eq!(rows.len(), 8);
    assert!(rows[1].starts_with("0,0,"));
    // the magnetic share does not depend on the first grid point being λ = 0
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/sweep.json")).unwrap()).unwrap();
    let frac = json["magnetic_nonzero_fraction"].as_f64().unwrap();
    assert!(frac > 0.1, "{frac}");
}

#[test]
fn basis_cache_shared_across_presets() {
    let dir = tempfile::tempdir().unwrap();
    for (i, preset) in ["gamma1", "gamma2", "gamma3"].iter().enumerate() {
        write_config(dir.path(), "c.toml", &small_sweep_config(preset));
        let o = run(&["sweep", "-c", "c.toml", "-o", preset], dir.path(), None);
        assert!(o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        if i == 0 {
            assert!(err.contains("built 5 states"), "{err}");
        } else {
            assert!(err.contains("5 states from"), "{err}");
        }
    }
    // a different lattice invalidates the cache and triggers a rebuild
    let wider = small_sweep_config("gamma1").replace("extents = [2, 2]\n", "extents = [2, 3]\n");
    write_config(dir.path(), "c.toml", &wider);
    let o = run(&["basis", "build", "-c", "c.toml", "-o", "p"], dir.path(), None);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("built"));
}

#[test]
fn hamiltonian_build_writes_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sweep_config("gamma2");
    let cfg = cfg.replace("magnetic_irrep = 4\n", "magnetic_irrep = 4\nlambda = 0.5\n");
    write_config(dir.path(), "c.toml", &cfg);
    let o = run(&["hamiltonian", "build", "-c", "c.toml", "-o", "h"], dir.path(), None);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("h/hamiltonian.txt")).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    let (n, nnz) = body[0].split_once(' ').unwrap();
    assert_eq!(n, "5");
    assert_eq!(nnz.parse::<usize>().unwrap(), body.len() - 1);
}

#[test]
fn oracle_check_passes_on_open_plaquette() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sweep_config("gamma3").replace("[sweep]\npoints = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0]\n", "");
    write_config(dir.path(), "c.toml", &cfg);
    let o = run(&["oracle", "check", "-c", "c.toml", "-o", "o"], dir.path(), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS"));
    let json = fs::read_to_string(dir.path().join("o/oracle.json")).unwrap();
    assert!(json.contains("\"pass\": true"));
}

#[test]
fn config_errors_exit_one_with_field_path_and_no_output() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.toml", &format!("{D4}[gamma]\nelements = [\"r\"]\n"));
    let o = run(&["electric", "-c", "c.toml", "-o", "out"], dir.path(), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma.elements"));
    assert!(!dir.path().join("out").exists());

    write_config(dir.path(), "c.toml", "[group]\nfamily = \"dihedral\"\nn = 4\nextra = 1\n");
    let o = run(&["physdim", "-c", "c.toml"], dir.path(), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("extra"));
}

#[test]
fn failed_run_removes_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sweep_config("gamma1").replace("[output]", "[solver]\nstate_cap = 3\n[output]");
    write_config(dir.path(), "c.toml", &cfg);
    let o = run(&["sweep", "-c", "c.toml", "-o", "out"], dir.path(), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
    assert!(!dir.path().join("shared.cache.json").exists());
}

#[test]
fn numerical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sweep_config("gamma1").replace("[output]", "[solver]\nmax_passes = 1\nmax_krylov = 2\n[output]");
    let cfg = cfg.replace("extents = [2, 2]", "extents = [2, 3]");
    write_config(dir.path(), "c.toml", &cfg);
    let o = run(&["sweep", "-c", "c.toml", "-o", "out"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("out").exists());
}
