use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use derhamnet::mesh::Mesh;
use derhamnet::network::Network;
use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_derhamnet"));
    cmd.env_remove("DERHAMNET_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen_mesh(dir: &Path, domain: &str, n: usize) -> PathBuf {
    let path = dir.join(format!("{domain}-{n}.json"));
    let out = run(&["gen-mesh", "--domain", domain, "--n", &n.to_string(), "--out", s(&path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn gen_mesh_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = Mesh::from_json(&std::fs::read_to_string(gen_mesh(dir.path(), "square-crisscross", 1)).unwrap()).unwrap();
    assert_eq!((mesh.num_cells(), mesh.num_vertices()), (4, 5));
    let mesh = Mesh::from_json(&std::fs::read_to_string(gen_mesh(dir.path(), "cube-kuhn", 1)).unwrap()).unwrap();
    assert_eq!(mesh.num_cells(), 6);
    let mesh = Mesh::from_json(&std::fs::read_to_string(gen_mesh(dir.path(), "lshape", 1)).unwrap()).unwrap();
    assert_eq!(mesh.num_cells(), 6);
    assert!((0..mesh.num_vertices()).any(|p| !mesh.patch_is_convex(p).unwrap()));
}

#[test]
fn gen_mesh_to_stdout() {
    let out = run(&["gen-mesh", "--domain", "square-diag", "--n", "1"]);
    assert!(out.status.success());
    let mesh = Mesh::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(mesh.num_cells(), 2);
}

#[test]
fn build_s0_basis_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_mesh(dir.path(), "square-diag", 1);
    let net_path = dir.path().join("s0.json");
    let out = run(&["build", "--mesh", s(&mesh), "--space", "s0", "--basis", "--out", s(&net_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let net = Network::deserialize(&std::fs::read(&net_path).unwrap()).unwrap();
    assert_eq!(net.output_dim(), 2);
    let dofs: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s0.json.dofs.json")).unwrap()).unwrap();
    assert_eq!(dofs["dof_order"].as_array().unwrap().len(), 2);

    let points = dir.path().join("points.txt");
    std::fs::write(&points, "0.7,0.2\n0.2, 0.7\n").unwrap();
    let values = dir.path().join("values.txt");
    let out = run(&["eval", "--net", s(&net_path), "--points", s(&points), "--out", s(&values)]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&values).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows[0], net.eval(&[0.7, 0.2]));
    assert_eq!(rows[1], net.eval(&[0.2, 0.7]));
    assert_eq!(rows[0].iter().sum::<f64>(), 1.0);
}

#[test]
fn build_function_net_from_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_mesh(dir.path(), "square-diag", 1);
    let coeffs = dir.path().join("c.json");
    std::fs::write(&coeffs, "[1.0, 2.0, 3.0, 4.0]").unwrap();
    let net_path = dir.path().join("u.json");
    let out = run(&["build", "--mesh", s(&mesh), "--space", "s1", "--coeffs", s(&coeffs), "--out", s(&net_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let net = Network::deserialize(&std::fs::read(&net_path).unwrap()).unwrap();
    // Vertices (0,0),(0,1),(1,0),(1,1) carry 1,2,3,4: u = 1 + 2x + y.
    let v = net.eval(&[0.25, 0.5]);
    assert!((v[0] - 2.0).abs() < 1e-12);

    std::fs::write(&coeffs, "[1.0]").unwrap();
    let out = run(&["build", "--mesh", s(&mesh), "--space", "s1", "--coeffs", s(&coeffs), "--out", s(&net_path)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn build_s1_relu_has_no_bisu() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_mesh(dir.path(), "lshape", 1);
    let net_path = dir.path().join("hat.json");
    let out = run(&["build", "--mesh", s(&mesh), "--space", "s1-relu", "--out", s(&net_path)]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&net_path).unwrap();
    assert!(!text.contains("bisu"));
}

#[test]
fn n0_in_four_dimensions_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = derhamnet::generate::hypercube_kuhn(4, 1);
    let path = dir.path().join("d4.json");
    std::fs::write(&path, mesh.to_json()).unwrap();
    let out = run(&["build", "--mesh", s(&path), "--space", "n0", "--out", s(&dir.path().join("n.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("excluded if d > 3"));
}

#[test]
fn verify_s0_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_mesh(dir.path(), "square-crisscross", 1);
    let out = run(&["verify", "--mesh", s(&mesh), "--space", "s0"]);
    assert!(out.status.success());
    let reports: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(reports[0]["max_error"], 0.0);
    assert_eq!(reports[0]["pass"], true);
}

#[test]
fn verify_rt0_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_mesh(dir.path(), "cube-kuhn", 1);
    let a = run(&["verify", "--mesh", s(&mesh), "--space", "rt0"]);
    let b = run(&["verify", "--mesh", s(&mesh), "--space", "rt0"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = bin()
        .args(["verify", "--mesh", s(&mesh), "--space", "rt0"])
        .env("DERHAMNET_SEED", "17")
        .output()
        .unwrap();
    assert!(c.status.success());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn derham_on_cube_passes_all_identities() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_mesh(dir.path(), "cube-kuhn", 1);
    let out = run(&["derham", "--mesh", s(&mesh)]);
    assert!(out.status.success());
    let reports: Value = serde_json::from_slice(&out.stdout).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 4);
    assert!(reports.iter().all(|r| r["pass"] == true));
}

#[test]
fn audit_passes() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_mesh(dir.path(), "square-crisscross", 2);
    let out = run(&["audit", "--mesh", s(&mesh), "--space", "rt0"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
}

#[test]
fn convergence_linear_and_short_levels() {
    let out = run(&["convergence", "--domain", "square-diag", "--space", "s1", "--levels", "1,2", "--target", "linear"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let out = run(&["convergence", "--domain", "square-diag", "--space", "s1", "--levels", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn roundtrip_and_truncated_file() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_mesh(dir.path(), "square-crisscross", 1);
    let net_path = dir.path().join("n0.json");
    assert!(run(&["build", "--mesh", s(&mesh), "--space", "n0", "--out", s(&net_path)]).status.success());
    let out = run(&["roundtrip", "--net", s(&net_path)]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&net_path).unwrap();
    std::fs::write(&net_path, &text[..text.len() / 2]).unwrap();
    let out = run(&["roundtrip", "--net", s(&net_path)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["gen-mesh", "--domain", "torus", "--n", "1"]).status.code(), Some(2));
    assert_eq!(run(&["gen-mesh", "--domain", "lshape", "--n", "0"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--mesh", "/nonexistent.json", "--space", "s1"]).status.code(), Some(2));
}
