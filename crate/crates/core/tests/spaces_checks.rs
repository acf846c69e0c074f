use std::sync::Arc;

use derhamnet::generate;
use derhamnet::shapes::{self, SpaceKind};
use derhamnet::spaces::{basis_net, function_net, net_linear_combine};
use derhamnet::verify::{
    check_conformity, check_traces, conformity_negative_controls, fit_cells, gram_measure, oracle_eval, sample_cells,
    Oracle, SamplePlan,
};

#[test]
fn s1_partition_of_unity() {
    for mesh in [generate::lshape(2), generate::cube_kuhn(1)] {
        let basis = basis_net(&mesh, SpaceKind::S1).unwrap();
        for (_, x) in sample_cells(&mesh, &SamplePlan::new(5, 1e-3, 1)).iter().take(100) {
            let total: f64 = basis.net.eval(x).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn hat_at_barycenter_is_one_over_d_plus_one() {
    let mesh = generate::cube_kuhn(1);
    let p = mesh.cell(0)[0];
    let hat = shapes::s1_net_bisu(&mesh, p).unwrap().net;
    let v = hat.eval(&mesh.cell_barycenter(0))[0];
    assert!((v - 0.25).abs() < 1e-14);
}

#[test]
fn linear_combination_is_coefficientwise() {
    let mesh = generate::square_crisscross(2);
    let basis = Arc::new(basis_net(&mesh, SpaceKind::RT0).unwrap());
    let n = basis.num_dofs();
    let a: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
    let fa = basis.specialize(&a).unwrap();
    let fb = basis.specialize(&b).unwrap();
    let c = net_linear_combine(&fa, -0.5, &fb).unwrap();
    for (_, x) in sample_cells(&mesh, &SamplePlan::new(2, 1e-3, 2)) {
        let want: Vec<f64> = fa.net.eval(&x).iter().zip(fb.net.eval(&x)).map(|(u, v)| u - 0.5 * v).collect();
        let got = c.net.eval(&x);
        assert!(got.iter().zip(&want).all(|(g, w)| (g - w).abs() < 1e-12));
    }
    let other = function_net(&mesh, SpaceKind::N0, &a).unwrap();
    assert!(net_linear_combine(&fa, 1.0, &other).is_err());
}

#[test]
fn rt0_divergence_is_face_over_cell_measure() {
    let mesh = generate::square_crisscross(1);
    let f = (0..mesh.faces().len()).find(|&f| mesh.face_cells(f).len() == 2).unwrap();
    let mut c = vec![0.0; mesh.faces().len()];
    c[f] = 1.0;
    let u = function_net(&mesh, SpaceKind::RT0, &c).unwrap();
    let fits = fit_cells(&mesh, &u.net);
    let face = gram_measure(&mesh.points_of(&mesh.faces()[f]));
    let cells = mesh.face_cells(f);
    for (k, &t) in cells.iter().enumerate() {
        let div: f64 = (0..2).map(|r| fits[t].jacobian[r][r]).sum();
        let sign = if k == 0 { 1.0 } else { -1.0 };
        let want = sign * face / gram_measure(&mesh.cell_points(t));
        assert!((div - want).abs() < 1e-10, "{div} vs {want}");
    }
}

#[test]
fn n0_curl_is_twice_the_rotation_part() {
    // On one tetrahedron θ_e = a + b × x, so curl θ_e = 2b; b is read off
    // from the antisymmetric part of the Jacobian.
    let mesh = generate::cube_kuhn(1);
    let e = 0;
    let mut c = vec![0.0; mesh.edges().len()];
    c[e] = 1.0;
    let u = function_net(&mesh, SpaceKind::N0, &c).unwrap();
    for fit in fit_cells(&mesh, &u.net) {
        let j = &fit.jacobian;
        for r in 0..3 {
            assert!(j[r][r].abs() < 1e-10, "affine N0 field has a symmetric part");
            for k in 0..3 {
                assert!((j[r][k] + j[k][r]).abs() < 1e-10);
            }
        }
        let b = [0.5 * (j[2][1] - j[1][2]), 0.5 * (j[0][2] - j[2][0]), 0.5 * (j[1][0] - j[0][1])];
        let curl = [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]];
        for r in 0..3 {
            assert!((curl[r] - 2.0 * b[r]).abs() < 1e-12);
        }
    }
}

#[test]
fn cr0_shape_is_one_at_its_face_and_jumps_elsewhere() {
    let mesh = generate::square_crisscross(1);
    let f = (0..mesh.faces().len()).find(|&f| mesh.face_cells(f).len() == 2).unwrap();
    let net = shapes::cr0_net(&mesh, f).unwrap().net;
    let oracle = Oracle::new(&mesh, SpaceKind::CR0).unwrap();
    let mut c = vec![0.0; mesh.faces().len()];
    c[f] = 1.0;
    let xf = mesh.face_barycenter(f);
    let n = mesh.face_normal(f).unwrap();
    let eps = 1e-7;
    let side = |s: f64| -> Vec<f64> { xf.iter().zip(&n).map(|(a, b)| a + s * b).collect() };
    let (plus, minus) = (net.eval(&side(eps))[0], net.eval(&side(-eps))[0]);
    assert!((plus - 1.0).abs() < 1e-5 && (minus - 1.0).abs() < 1e-5);
    assert!((oracle.eval(&c, &side(eps)).unwrap()[0] - plus).abs() < 1e-12);
    // At a vertex of f the two one-sided values are 1 - d·λ_opp = 1 on both
    // sides, but at an endpoint of another face of T the shape jumps.
    let t = mesh.face_cells(f)[0];
    let g = (0..mesh.faces().len())
        .find(|&g| g != f && mesh.face_cells(g).len() == 2 && mesh.face_cells(g).contains(&t))
        .unwrap();
    let cells = mesh.face_cells(g);
    let pts = mesh.points_of(&mesh.faces()[g]);
    let y: Vec<f64> = (0..2).map(|r| 0.8 * pts[0][r] + 0.2 * pts[1][r]).collect();
    let a = oracle.eval_in_cell(&c, cells[0], &y)[0];
    let b = oracle.eval_in_cell(&c, cells[1], &y)[0];
    assert!((a - b).abs() > 1e-3);
}

#[test]
fn negative_controls_fail_and_conformity_holds() {
    let mesh = generate::lshape(1);
    for r in conformity_negative_controls(&mesh, "lshape-1").unwrap() {
        assert!(!r.pass, "{r:?}");
    }
    for kind in [SpaceKind::RT0, SpaceKind::N0, SpaceKind::S1, SpaceKind::CR0] {
        assert!(check_conformity(&mesh, kind, 5, "lshape-1").unwrap().pass);
    }
}

#[test]
fn oracle_rejects_skeleton_points() {
    let mesh = generate::square_diag(1);
    assert!(oracle_eval(&mesh, SpaceKind::RT0, &[1.0; 5], &[0.5, 0.5]).is_err());
    assert!(oracle_eval(&mesh, SpaceKind::RT0, &[1.0; 5], &[0.7, 0.2]).is_ok());
}

#[test]
fn traces_on_the_lshape_prism() {
    let mesh = generate::lshape_prism(1);
    let plan = SamplePlan::new(10, 1e-3, 4);
    for kind in [SpaceKind::S1, SpaceKind::S0, SpaceKind::RT0, SpaceKind::N0] {
        for r in check_traces(&mesh, kind, &plan, "prism").unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }
}

#[test]
fn basis_output_layout_is_dof_major() {
    let mesh = generate::square_diag(1);
    let basis = basis_net(&mesh, SpaceKind::RT0).unwrap();
    assert_eq!(basis.net.output_dim(), 2 * basis.num_dofs());
    let x = [0.7, 0.2];
    let all = basis.net.eval(&x);
    for i in 0..basis.num_dofs() {
        let single = shapes::rt0_net(&mesh, i).unwrap().net.eval(&x);
        assert_eq!(&all[2 * i..2 * i + 2], single.as_slice());
    }
}
