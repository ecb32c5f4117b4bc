use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vem3d(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vem3d"))
        .args(args)
        .current_dir(dir)
        .env_remove("VEM3D_THREADS")
        .output()
        .expect("run vem3d")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_field(row: &str, header: &str, name: &str) -> f64 {
    let i = header.split(',').position(|h| h == name).unwrap();
    row.split(',').nth(i).unwrap().parse().unwrap()
}

#[test]
fn generate_structured_prints_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = vem3d(&["generate", "--structured", "4", "-o", "cube.polymesh"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("N_P = 64"), "{out}");
    assert!(out.contains("h   = 0.25"), "{out}");
    assert!(dir.path().join("cube.polymesh").exists());
}

#[test]
fn generate_structured_zero_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = vem3d(&["generate", "--structured", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generate_voronoi_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.polymesh", "b.polymesh"] {
        let o = vem3d(
            &["generate", "--prismatic-voronoi", "seeds=16", "layers=4", "lloyd=50", "seed=7", "-o", name],
            dir.path(),
        );
        assert!(o.status.success(), "{o:?}");
        assert!(stdout(&o).contains("N_P = 64"));
    }
    let a = fs::read(dir.path().join("a.polymesh")).unwrap();
    let b = fs::read(dir.path().join("b.polymesh")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn validate_reports_each_check() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/truncated_octahedron_cluster.polymesh");
    let o = vem3d(&["validate", fixture.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    for check in ["conformity", "planarity", "orientation", "volumes", "boundary_tags"] {
        assert!(out.contains(check), "{out}");
    }
    assert!(out.contains("15 cells"));

    // A cube whose top face is lifted at one corner is not planar.
    let bad = "polymesh 1\nvertices 8\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n0 0 1\n1 0 1\n1 1 1.2\n0 1 1\n\
               faces 6\n4 0 3 2 1 b\n4 4 5 6 7 b\n4 0 1 5 4 b\n4 1 2 6 5 b\n4 2 3 7 6 b\n4 3 0 4 7 b\n\
               cells 1\n6 0 1 2 3 4 5\n";
    fs::write(dir.path().join("bad.polymesh"), bad).unwrap();
    let o = vem3d(&["validate", "bad.polymesh"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("planarity      FAILED"), "{}", stdout(&o));
}

#[test]
fn solve_patch_k2_single_cube() {
    let dir = tempfile::tempdir().unwrap();
    let o = vem3d(
        &["solve", "--structured", "1", "--case", "4", "--k", "2", "--dump-solution", "u.txt", "--dump-matrix", "a.mtx"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    let row = lines.next().unwrap();
    assert!(csv_field(row, header, "e_linf") <= 1e-9, "{row}");
    assert!(csv_field(row, header, "e_h1") <= 1e-9, "{row}");
    let dump = fs::read_to_string(dir.path().join("u.txt")).unwrap();
    // k = 2 on one cube: 8 vertices, 12 edge nodes, 6 face moments, 1 interior moment.
    assert_eq!(dump.lines().count(), 27);
    assert!(fs::read_to_string(dir.path().join("a.mtx")).unwrap().starts_with("%%MatrixMarket"));
}

#[test]
fn solve_missing_mesh_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = vem3d(&["solve", "--mesh", "nope.polymesh"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn solve_rejects_zero_tau_in_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[mesh]\nstructured = 1\n[stabilization]\ntau = 0.0\n").unwrap();
    let o = vem3d(&["--config", "run.toml", "solve"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau"));
}

#[test]
fn config_unknown_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[mesh]\nstructured = 1\ncolour = \"red\"\n").unwrap();
    let o = vem3d(&["--config", "run.toml", "solve"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[mesh]\nstructured = 1\n[problem]\ncase = 4\nk = [3]\n").unwrap();
    let o = vem3d(&["--config", "run.toml", "solve", "--k", "1", "--structured", "2"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    let row = lines.next().unwrap();
    assert_eq!(csv_field(row, header, "k"), 1.0);
    assert_eq!(csv_field(row, header, "N_P"), 8.0);
}

#[test]
fn study_unknown_case_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = vem3d(&["study", "6"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn study_csv_is_reproducible_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[problem]\nk = [1, 2]\n[study]\nrefinements = [2, 3]\n").unwrap();
    let a = vem3d(&["--config", "run.toml", "--threads", "1", "study", "1", "--csv", "a.csv"], dir.path());
    let b = vem3d(&["--config", "run.toml", "--threads", "3", "study", "1", "--csv", "b.csv"], dir.path());
    assert!(a.status.success() && b.status.success(), "{a:?} {b:?}");
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 5);
}

#[test]
fn study_tau_sweep_prints_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let o = vem3d(
        &["study", "5", "--k", "1", "--tau-points", "5", "--refinements", "3", "--csv", "tau.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("d_H1") && out.contains("d_Linf"), "{out}");
    let csv = fs::read_to_string(dir.path().join("tau.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
}
