use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use orthoport::em::{assemble_z0, radiation_part, Role};
use orthoport::geometry::{build_edge_basis, build_mapping_matrices, default_tolerance, parse_mesh, MeshFormat};
use orthoport::io::{fmt_num, read_operator, Table};
use orthoport::optimizer::{scan, Candidate, ScanContext, ScanSpec, DEFAULT_BUDGET};
use orthoport::point_group::build_group;
use orthoport::{em::FrequencyGrid, fixtures};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthoport")).args(args).output().expect("binary runs")
}

fn scenario(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path
}

fn star_scenario(dir: &Path, extra: &str) -> PathBuf {
    let mesh = data("star.msh");
    scenario(dir, &format!("[mesh]\npath = {:?}\ngroup = \"C2v\"\n{extra}", mesh.to_str().unwrap()))
}

fn read(dir: &Path, name: &str) -> Table {
    Table::read(&dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn shipped_meshes_match_their_generators() {
    for (name, mesh) in [("star.msh", fixtures::star_mesh()), ("rim.msh", fixtures::rim_mesh())] {
        let shipped = parse_mesh(&fs::read_to_string(data(name)).unwrap(), MeshFormat::Gmsh).unwrap();
        assert_eq!(shipped.vertices, mesh.vertices, "{name}");
        assert_eq!(shipped.triangles, mesh.triangles, "{name}");
        assert_eq!(shipped.ports, mesh.ports, "{name}");
    }
}

#[test]
fn missing_mesh_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "[mesh]\npath = \"nowhere.msh\"\ngroup = \"C2v\"\n");
    let out = run(&["adapt", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("scenario.toml:2:") && err.contains("not found"), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["adapt"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = star_scenario(dir.path(), "[frequency]\nka = [1.0, 2.0]\n");
    let out = run(&["scan", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn star_adaptation_reproduces_the_sign_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = star_scenario(dir.path(), "[frequency]\nka = [1.0]\n[ports]\npositions = [1, 3]\n");
    let out = run(&["adapt", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let t = read(dir.path(), "adapted_vectors.csv");
    let (pos, sp, re, im) =
        (t.column("position").unwrap(), t.column("species").unwrap(), t.column("re").unwrap(), t.column("im").unwrap());
    let expected = [
        ("(A1,1)", [1.0, -1.0, 0.0, 1.0, -1.0]),
        ("(A2,1)", [1.0, 1.0, 0.0, -1.0, -1.0]),
        ("(B1,1)", [1.0, 1.0, 0.0, 1.0, 1.0]),
        ("(B2,1)", [1.0, -1.0, 0.0, -1.0, 1.0]),
    ];
    for (label, signs) in expected {
        let got: Vec<f64> = t
            .rows
            .iter()
            .filter(|r| r[pos] == "1" && r[sp] == label)
            .map(|r| {
                assert_eq!(r[im].parse::<f64>().unwrap(), 0.0);
                r[re].parse().unwrap()
            })
            .collect();
        let want: Vec<f64> = signs.iter().map(|s| 0.25 * s).collect();
        assert_eq!(got, want, "{label}");
    }

    // the centre edge lies on both mirror planes
    let r = read(dir.path(), "realizable_species.csv");
    let row = r.rows.iter().find(|row| row[0] == "3").unwrap();
    assert_eq!(row[r.column("species").unwrap()], "(B2,1)");
    assert_eq!(row[r.column("on_symmetry_element").unwrap()], "true");

    let o = read(dir.path(), "orthogonality.csv");
    let pass = o.column("pass").unwrap();
    assert!(o.rows.len() > 2 && o.rows.iter().all(|row| row[pass] == "PASS"));
}

#[test]
fn modes_reject_operator_sets_without_radiation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = star_scenario(dir.path(), "[frequency]\nka = [1.0]\n[analysis]\noperators = [\"identity\"]\n");
    let out = run(&["modes", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario.toml:7:"));
}

#[test]
fn modes_on_the_star_pass_their_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = star_scenario(dir.path(), "[frequency]\nka = [0.8, 1.6]\n");
    let out = run(&["modes", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read(dir.path(), "modes_eigenvalues.csv");
    let res = t.column("residual").unwrap();
    assert!(!t.rows.is_empty());
    assert!(t.rows.iter().all(|r| r[res].parse::<f64>().unwrap() <= 1e-8));
}

#[test]
fn scan_csv_reparses_to_the_computed_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = star_scenario(dir.path(), "[frequency]\nka = [1.3]\n[ports]\ncandidates = [2, 3]\n");
    let out = run(&["scan", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let basis = build_edge_basis(&fixtures::star_mesh()).unwrap();
    let group = build_group("C2v").unwrap();
    let maps = build_mapping_matrices(&basis, &group, default_tolerance(&basis)).unwrap();
    let candidates = [2, 3].map(|l| Candidate { label: l, index: basis.port_index(l).unwrap() }).to_vec();
    let spec = ScanSpec {
        candidates,
        n_xi: 1,
        grid: FrequencyGrid::new(vec![1.3], basis.radius()).unwrap(),
        species: None,
        z0_line: 50.0,
        loss: None,
        budget: DEFAULT_BUDGET,
    };
    let result = scan(ScanContext { basis: &basis, group: &group, maps: &maps }, &spec).unwrap();

    let t = read(dir.path(), "scan_summary.csv");
    let (pos, trms) = (t.column("positions").unwrap(), t.column("t_rms").unwrap());
    assert_eq!(t.rows.len(), result.ranked.len());
    for (row, e) in t.rows.iter().zip(&result.ranked) {
        let labels: Vec<usize> = row[pos].split(' ').map(|x| x.parse().unwrap()).collect();
        assert_eq!(labels, e.labels);
        assert_eq!(row[trms], fmt_num(e.t_rms));
        assert_eq!(fmt_num(row[trms].parse().unwrap()), row[trms]);
    }
}

fn rim_scenario(dir: &Path, extra: &str) -> PathBuf {
    let mesh = data("rim.msh");
    scenario(dir, &format!("[mesh]\npath = {:?}\ngroup = \"C2v\"\n{extra}", mesh.to_str().unwrap()))
}

#[test]
fn rankings_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = rim_scenario(dir.path(), "[frequency]\nka = [2.0, 3.0]\n[ports]\nn_xi = 2\n");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let out = run(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let files: Vec<String> = ["sweep_summary.csv", "sweep_trace.csv", "sweep_kappa.csv", "sweep_per_frequency.csv"]
            .iter()
            .map(|f| fs::read_to_string(out_dir.join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    // C(15, 2) layouts
    assert_eq!(outputs[0][0].lines().count(), 1 + 105);
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn z0_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = star_scenario(dir.path(), "[frequency]\nka = [1.3]\n[ports]\nz0 = 50.0\n");
    let mut t_rms = Vec::new();
    for z0 in ["50", "75"] {
        let out_dir = dir.path().join(z0);
        let out = run(&["scan", "--config", cfg.to_str().unwrap(), "--z0", z0, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success());
        let t = read(&out_dir, "scan_summary.csv");
        t_rms.push(t.rows[0][t.column("t_rms").unwrap()].clone());
    }
    assert_ne!(t_rms[0], t_rms[1]);
}

#[test]
fn operator_dumps_read_back_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = star_scenario(dir.path(), "[frequency]\nka = [1.5]\n[output]\ndump_operators = true\n");
    let out = run(&["modes", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut file = fs::File::open(dir.path().join("op_R0_ka1.5.opmx")).unwrap();
    let dumped = read_operator(&mut file).unwrap();
    let basis = build_edge_basis(&fixtures::star_mesh()).unwrap();
    let r0 = radiation_part(&assemble_z0(&basis, 1.5));
    assert_eq!(dumped.role, Role::R0);
    assert_eq!(dumped.ka, 1.5);
    assert_eq!(dumped.data, r0.data);
    assert!(dir.path().join("op_YhR0Y_ka1.5.opmx").exists());
}
