use derhamnet::calculus::{
    compose, concat, identity_net, indicator_net, max_net, min_net, parallelize, pwl_net, sum, times_step_net,
    HalfspaceSystem, Kappa, PwlPiece,
};
use derhamnet::mesh::{barycentric_forms, AffineForm};
use derhamnet::network::{Activation, Layer, Network};
use proptest::prelude::*;

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()))
}

/// Random network with widths `input, hidden.., output` from a flat stream
/// of draws; the last layer is affine.
fn net_strategy(input: usize, output: usize, depth: usize) -> impl Strategy<Value = Network> {
    let widths = proptest::collection::vec(1usize..4, depth - 1);
    widths.prop_flat_map(move |hidden| {
        let mut w = vec![input];
        w.extend(hidden);
        w.push(output);
        let count: usize = w.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
        let acts: usize = w[1..w.len() - 1].iter().sum();
        (
            Just(w),
            proptest::collection::vec(prop_oneof![Just(0.0), -2.0..2.0f64], count),
            proptest::collection::vec(0u8..3, acts.max(1)),
        )
            .prop_map(|(w, values, acts)| {
                let mut values = values.into_iter();
                let mut acts = acts.into_iter();
                let mut layers = Vec::new();
                for l in 1..w.len() {
                    let (rows, cols) = (w[l], w[l - 1]);
                    let mut triplets = Vec::new();
                    for r in 0..rows {
                        for c in 0..cols {
                            triplets.push((r, c, values.next().unwrap()));
                        }
                    }
                    let bias: Vec<f64> = (0..rows).map(|_| values.next().unwrap()).collect();
                    let act = (0..rows)
                        .map(|_| {
                            if l + 1 == w.len() {
                                Activation::Identity
                            } else {
                                [Activation::Identity, Activation::ReLU, Activation::BiSU][acts.next().unwrap() as usize]
                            }
                        })
                        .collect();
                    layers.push(Layer::build(rows, cols, triplets, bias, act));
                }
                Network::new(w[0], layers).unwrap()
            })
    })
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0..3.0f64, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parallelize_stacks_outputs(
        (a, b, x) in (1usize..3, 1usize..4).prop_flat_map(|(d, l)| (net_strategy(d, 2, l), net_strategy(d, 1, l), point(d)))
    ) {
        let p = parallelize(&[a.clone(), b.clone()]).unwrap();
        prop_assert_eq!(p.size(), a.size() + b.size());
        prop_assert_eq!(p.depth(), a.depth());
        let mut want = a.eval(&x);
        want.extend(b.eval(&x));
        prop_assert!(close(&p.eval(&x), &want));
    }

    #[test]
    fn sum_adds_outputs(
        (a, b, x) in (1usize..3, 1usize..4).prop_flat_map(|(d, l)| (net_strategy(d, 2, l), net_strategy(d, 2, l), point(d)))
    ) {
        let s = sum(&[a.clone(), b.clone()]).unwrap();
        prop_assert!(s.size() <= a.size() + b.size());
        let want: Vec<f64> = a.eval(&x).iter().zip(b.eval(&x)).map(|(u, v)| u + v).collect();
        prop_assert!(close(&s.eval(&x), &want));
    }

    #[test]
    fn concat_and_compose_realize_composition(
        (inner, outer, x) in (1usize..3, 1usize..3, 1usize..4, 1usize..4)
            .prop_flat_map(|(d, m, l1, l2)| (net_strategy(d, m, l1), net_strategy(m, 2, l2), point(d)))
    ) {
        let c = concat(&outer, &inner).unwrap();
        prop_assert_eq!(c.depth(), outer.depth() + inner.depth());
        prop_assert!(c.size() <= 2 * outer.size() + 2 * inner.size());
        let want = outer.eval(&inner.eval(&x));
        prop_assert!(close(&c.eval(&x), &want));
        let k = compose(&outer, &inner).unwrap();
        prop_assert_eq!(k.depth(), outer.depth() + inner.depth() - 1);
        prop_assert!(close(&k.eval(&x), &want));
    }

    #[test]
    fn min_and_max_nets_are_exact(values in proptest::collection::vec(-100.0..100.0f64, 1..12)) {
        let d = values.len();
        let mx = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mn = values.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!((max_net(d).eval(&values)[0] - mx).abs() <= 1e-12 * (1.0 + mx.abs()));
        prop_assert!((min_net(d).eval(&values)[0] - mn).abs() <= 1e-12 * (1.0 + mn.abs()));
        let depth_bound = 2 + (d as f64).log2().ceil() as usize;
        prop_assert!(max_net(d).depth() <= depth_bound);
        prop_assert!(min_net(d).size() <= 18 * d);
    }

    #[test]
    fn times_step_is_product_with_step(
        (x, y, kappa) in (1usize..4).prop_flat_map(|d| (proptest::collection::vec(-1.0..1.0f64, d), prop_oneof![Just(0.0), Just(1.0)], 1.0..4.0f64))
    ) {
        let d = x.len();
        let net = times_step_net(d, kappa);
        let scaled: Vec<f64> = x.iter().map(|v| v * kappa).collect();
        let mut input = scaled.clone();
        input.push(y);
        let want: Vec<f64> = scaled.iter().map(|v| v * y).collect();
        prop_assert!(close(&net.eval(&input), &want));
        prop_assert_eq!(net.size(), 12 * d);
        prop_assert_eq!(net.depth(), 2);
    }

    #[test]
    fn identity_net_is_identity(x in point(3), depth in 1usize..6) {
        let net = identity_net(3, depth);
        prop_assert_eq!(net.eval(&x), x);
        prop_assert!(net.size() <= 6 * depth);
    }

    #[test]
    fn indicator_of_a_triangle(x in point(2)) {
        let tri = vec![vec![0.0, 0.0], vec![2.0, 0.5], vec![0.5, 1.5]];
        let sys = HalfspaceSystem::open_simplex(&tri).unwrap();
        let net = indicator_net(&sys).unwrap();
        let inside = barycentric_forms(&tri).unwrap().iter().all(|f| f.eval(&x) > 0.0);
        prop_assert_eq!(net.eval(&x)[0], if inside { 1.0 } else { 0.0 });
        prop_assert_eq!(net.depth(), 3);
        prop_assert!(net.size() <= 4 * 3 + 2);
    }

    #[test]
    fn indicator_of_a_segment_in_the_plane(t in -1.0..2.0f64, off in prop_oneof![Just(0.0), -1.0..1.0f64]) {
        // The open segment {y = 0, 0 < x < 1}: one equality, two inequalities.
        let sys = HalfspaceSystem {
            equalities: vec![AffineForm { linear: vec![0.0, 1.0], offset: 0.0 }],
            strict_inequalities: vec![
                AffineForm { linear: vec![1.0, 0.0], offset: 0.0 },
                AffineForm { linear: vec![-1.0, 0.0], offset: 1.0 },
            ],
        };
        let net = indicator_net(&sys).unwrap();
        let x = [t, off];
        let want = if off == 0.0 && t > 0.0 && t < 1.0 { 1.0 } else { 0.0 };
        prop_assert_eq!(net.eval(&x)[0], want);
        prop_assert!(net.size() <= 4 * 4 + 2);
    }

    #[test]
    fn pwl_net_matches_pieces(x in proptest::collection::vec(-0.5..1.5f64, 2)) {
        let lower = PwlPiece {
            matrix: vec![vec![1.0, -2.0]],
            offset: vec![0.5],
            cell: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]],
        };
        let upper = PwlPiece {
            matrix: vec![vec![3.0, 1.0]],
            offset: vec![-1.0],
            cell: vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
        };
        let net = pwl_net(&[lower.clone(), upper.clone()], Kappa::Auto).unwrap();
        prop_assert_eq!(net.depth(), 5);
        let inside = |p: &PwlPiece| barycentric_forms(&p.cell).unwrap().iter().all(|f| f.eval(&x) > 1e-9);
        let outside = |p: &PwlPiece| barycentric_forms(&p.cell).unwrap().iter().any(|f| f.eval(&x) < -1e-9);
        let v = net.eval(&x)[0];
        if inside(&lower) {
            prop_assert!((v - lower.eval(&x)[0]).abs() < 1e-12);
        } else if inside(&upper) {
            prop_assert!((v - upper.eval(&x)[0]).abs() < 1e-12);
        } else if outside(&lower) && outside(&upper) {
            prop_assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn kappa_below_requirement_is_rejected() {
    let piece = PwlPiece {
        matrix: vec![vec![4.0, 0.0]],
        offset: vec![0.0],
        cell: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
    };
    assert!(pwl_net(&[piece.clone()], Kappa::Given(1.0)).is_err());
    assert!(pwl_net(&[piece], Kappa::Given(4.0)).is_ok());
}
