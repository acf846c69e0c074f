//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use derhamnet::calculus::{compose, concat, parallelize, sum};
use derhamnet::generate::{self, Domain};
use derhamnet::mesh::Mesh;
use derhamnet::network::{Activation, Layer, Network};
use derhamnet::shapes::SpaceKind;
use derhamnet::spaces::basis_net;
use derhamnet::verify::{
    audit_sizes, check_conformity, check_derham, check_domination, check_exactness, check_roundtrip, check_traces,
    conformity_negative_controls, convergence_study, random_points, relative_error, Report, SamplePlan, Target,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn meshes_2d() -> Vec<(String, Mesh)> {
    let mut out = Vec::new();
    for n in [1, 2, 4] {
        out.push((format!("square-crisscross-{n}"), generate::square_crisscross(n)));
    }
    for n in [1, 2] {
        out.push((format!("lshape-{n}"), generate::lshape(n)));
    }
    out
}

fn meshes_3d() -> Vec<(String, Mesh)> {
    [1, 2].iter().map(|&n| (format!("cube-kuhn-{n}"), generate::cube_kuhn(n))).collect()
}

fn summarize(reports: &[Report]) -> Outcome {
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{}/{}/{} err={:.3e}", r.check, r.kind, r.mesh, r.max_error))
        .collect();
    let worst = reports.iter().map(|r| r.max_error).fold(0.0, f64::max);
    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} checks, max error {worst:.3e}", reports.len())
        } else {
            format!("failed: {}", failed.join("; "))
        },
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let plan = SamplePlan::new(20, 1e-3, SEED);
    let mut reports = Vec::new();
    for (label, mesh) in meshes_2d() {
        for kind in [SpaceKind::S0, SpaceKind::RT0, SpaceKind::S1, SpaceKind::CR0] {
            reports.push(check_exactness(&mesh, kind, &plan, &label).unwrap());
        }
        if label.starts_with("square") {
            reports.push(check_exactness(&mesh, SpaceKind::N0, &plan, &label).unwrap());
        }
    }
    for (label, mesh) in meshes_3d() {
        for kind in [SpaceKind::S0, SpaceKind::RT0, SpaceKind::N0, SpaceKind::S1, SpaceKind::CR0] {
            reports.push(check_exactness(&mesh, kind, &plan, &label).unwrap());
        }
    }
    let elapsed = start.elapsed();
    let mut out = summarize(&reports);
    out.pass &= elapsed < Duration::from_secs(60);
    out.detail += &format!(", {:.1}s (limit 60s)", elapsed.as_secs_f64());
    out
}

fn criterion_2() -> Outcome {
    let plan = SamplePlan::new(20, 1e-3, SEED);
    let mut reports = Vec::new();
    let mut bisu = 0;
    let mut meshes = meshes_2d();
    meshes.push(("cube-kuhn-1".into(), generate::cube_kuhn(1)));
    for (label, mesh) in meshes {
        let basis = basis_net(&mesh, SpaceKind::S1ReluOnly).unwrap();
        bisu += basis.net.count_activation(Activation::BiSU);
        reports.push(derhamnet::verify::check_exactness_of(&mesh, &basis, &plan, &label).unwrap());
    }
    let mut out = summarize(&reports);
    out.pass &= bisu == 0;
    out.detail += &format!(", BiSU activations {bisu}");
    out
}

fn criterion_3() -> Outcome {
    let mut failed = Vec::new();
    let mut entries = 0;
    let mut meshes = vec![
        ("square-crisscross-2".to_string(), generate::square_crisscross(2)),
        ("lshape-1".to_string(), generate::lshape(1)),
    ];
    meshes.extend(meshes_3d().into_iter().take(1));
    for (label, mesh) in &meshes {
        for kind in SpaceKind::ALL {
            let report = audit_sizes(mesh, kind, label).unwrap();
            entries += report.entries.len();
            for e in report.entries.iter().filter(|e| !e.pass) {
                failed.push(format!("{label}/{}: {} {} {} {} {}", kind, e.item, e.quantity, e.measured, e.relation, e.bound));
            }
        }
    }
    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{entries} integer checks")
        } else {
            failed.join("; ")
        },
    }
}

/// A random sparse network with the given widths (input first); the last
/// layer is affine.
fn random_net(rng: &mut ChaCha8Rng, widths: &[usize]) -> Network {
    let mut layers = Vec::new();
    for l in 1..widths.len() {
        let (rows, cols) = (widths[l], widths[l - 1]);
        let mut triplets = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if rng.gen_bool(0.6) {
                    triplets.push((r, c, rng.gen_range(-2.0..2.0)));
                }
            }
        }
        let bias = (0..rows).map(|_| if rng.gen_bool(0.7) { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
        let act = (0..rows)
            .map(|_| {
                if l + 1 == widths.len() {
                    Activation::Identity
                } else {
                    match rng.gen_range(0..4) {
                        0 => Activation::Identity,
                        1 => Activation::BiSU,
                        _ => Activation::ReLU,
                    }
                }
            })
            .collect();
        layers.push(Layer::build(rows, cols, triplets, bias, act));
    }
    Network::new(widths[0], layers).unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut size_failures = Vec::new();
    for trial in 0..20 {
        let d = rng.gen_range(1..4);
        let depth = rng.gen_range(1..4);
        let widths = |input: usize, output: usize, rng: &mut ChaCha8Rng| {
            let mut w = vec![input];
            for _ in 1..depth {
                w.push(rng.gen_range(1..5));
            }
            w.push(output);
            w
        };
        let out = rng.gen_range(1..4);
        let w = widths(d, out, &mut rng);
        let a = random_net(&mut rng, &w);
        let w = widths(d, out, &mut rng);
        let b = random_net(&mut rng, &w);
        let mid = rng.gen_range(1..4);
        let w = widths(d, mid, &mut rng);
        let inner = random_net(&mut rng, &w);
        let w = widths(mid, out, &mut rng);
        let outer = random_net(&mut rng, &w);

        let par = parallelize(&[a.clone(), b.clone()]).unwrap();
        let added = sum(&[a.clone(), b.clone()]).unwrap();
        let cat = concat(&outer, &inner).unwrap();
        let comp = compose(&outer, &inner).unwrap();
        if par.size() != a.size() + b.size() {
            size_failures.push(format!("trial {trial}: parallel M"));
        }
        if added.size() > a.size() + b.size() {
            size_failures.push(format!("trial {trial}: sum M"));
        }
        if cat.size() > 2 * outer.size() + 2 * inner.size() || cat.depth() != outer.depth() + inner.depth() {
            size_failures.push(format!("trial {trial}: concat M/L"));
        }
        for _ in 0..100 {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let (va, vb) = (a.eval(&x), b.eval(&x));
            let both: Vec<f64> = va.iter().chain(&vb).copied().collect();
            worst = worst.max(relative_error(&par.eval(&x), &both));
            let total: Vec<f64> = va.iter().zip(&vb).map(|(p, q)| p + q).collect();
            worst = worst.max(relative_error(&added.eval(&x), &total));
            let nested = outer.eval(&inner.eval(&x));
            worst = worst.max(relative_error(&cat.eval(&x), &nested));
            worst = worst.max(relative_error(&comp.eval(&x), &nested));
        }
    }
    Outcome {
        pass: worst <= 1e-12 && size_failures.is_empty(),
        detail: format!("max realization error {worst:.3e} (limit 1e-12), size violations {}", size_failures.len()),
    }
}

fn criterion_5() -> Outcome {
    let mut reports = Vec::new();
    let square = generate::square_crisscross(2);
    let lshape = generate::lshape(2);
    let cube = generate::cube_kuhn(1);
    for (label, mesh) in [("square-crisscross-2", &square), ("lshape-2", &lshape), ("cube-kuhn-1", &cube)] {
        for kind in [SpaceKind::RT0, SpaceKind::N0, SpaceKind::S1, SpaceKind::S1ReluOnly, SpaceKind::CR0] {
            reports.push(check_conformity(mesh, kind, SEED, label).unwrap());
        }
    }
    let mut out = summarize(&reports);
    let mut controls = Vec::new();
    for (label, mesh) in [("square-crisscross-2", &square), ("cube-kuhn-1", &cube)] {
        controls.extend(conformity_negative_controls(mesh, label).unwrap());
    }
    let controls_fail = controls.iter().all(|r| !r.pass);
    let s0_jump_one = controls
        .iter()
        .filter(|r| r.kind == "s0")
        .all(|r| (r.max_error - 1.0).abs() < 1e-9);
    out.pass &= controls_fail && s0_jump_one;
    out.detail += &format!(
        "; negative controls {} (s0 jumps {:?}, rt0 tangential jumps {:?})",
        if controls_fail && s0_jump_one { "fail as required" } else { "DID NOT FAIL" },
        controls.iter().filter(|r| r.kind == "s0").map(|r| r.max_error).collect::<Vec<_>>(),
        controls.iter().filter(|r| r.kind == "rt0").map(|r| format!("{:.3}", r.max_error)).collect::<Vec<_>>(),
    );
    out
}

fn criterion_6() -> Outcome {
    let mut reports = check_derham(&generate::square_crisscross(2), 10, SEED, "square-crisscross-2").unwrap();
    reports.extend(check_derham(&generate::cube_kuhn(1), 10, SEED, "cube-kuhn-1").unwrap());
    summarize(&reports)
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let levels = [4, 8, 16];
    let mut parts = Vec::new();
    let mut pass = true;
    for kind in [SpaceKind::S1, SpaceKind::S0, SpaceKind::RT0] {
        let r = convergence_study(Domain::SquareDiag, kind, Target::Smooth, &levels).unwrap();
        pass &= r.rates_within(0.8, 1.2);
        parts.push(format!("{} {} rates {:?}", r.kind, r.norm, r.rates.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>()));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    Outcome {
        pass,
        detail: format!("{}; {:.1}s (limit 120s)", parts.join("; "), elapsed.as_secs_f64()),
    }
}

fn criterion_8() -> Outcome {
    let plan = SamplePlan::new(50, 1e-3, SEED);
    let reports: Vec<Report> = [1, 2]
        .iter()
        .map(|&n| check_domination(&generate::lshape(n), &plan, &format!("lshape-{n}")).unwrap())
        .collect();
    summarize(&reports)
}

fn criterion_9() -> Outcome {
    let mesh = generate::cube_kuhn(1);
    let plan = SamplePlan::new(20, 1e-3, SEED);
    let mut reports = Vec::new();
    for kind in [SpaceKind::S1, SpaceKind::S0, SpaceKind::RT0, SpaceKind::N0] {
        reports.extend(check_traces(&mesh, kind, &plan, "cube-kuhn-1").unwrap());
    }
    summarize(&reports)
}

fn criterion_10() -> Outcome {
    let square = generate::square_crisscross(2);
    let cube = generate::cube_kuhn(1);
    let mut reports = Vec::new();
    for kind in SpaceKind::ALL {
        let net = basis_net(&square, kind).unwrap().net;
        reports.push(check_roundtrip(&net, &random_points(&square, 100, SEED), kind.name(), "square-crisscross-2").unwrap());
    }
    let net = basis_net(&cube, SpaceKind::N0).unwrap().net;
    reports.push(check_roundtrip(&net, &random_points(&cube, 100, SEED), "n0", "cube-kuhn-1").unwrap());
    summarize(&reports)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact emulation a.e.", criterion_1),
        ("exact emulation everywhere (s1-relu)", criterion_2),
        ("size/depth audit", criterion_3),
        ("combinator contracts", criterion_4),
        ("conformity", criterion_5),
        ("de Rham sequence", criterion_6),
        ("convergence rates", criterion_7),
        ("domination of auxiliary hats", criterion_8),
        ("trace nets", criterion_9),
        ("serialization round trip", criterion_10),
    ];
    let mut all = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        all &= outcome.pass;
        println!(
            "{} criterion {}: {name}: {} [{:.1}s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            k + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
