//! Acceptance suite: one PASS/FAIL line per criterion, then a combined verdict.
//!
//! The command-line behaviour tests live in the same binary so they still run
//! when a criterion fails.

mod cli;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use bers::bergman::{
    blowup_exponent, holo_curvature, klembeck_profile, transformation_residual, KernelModel, MonomialSet,
    QuadratureSpec,
};
use bers::domains::{Automorphism, ModelDomain};
use bers::func::{Func, Map};
use bers::holo_algebra::{
    annulus_auto_classify, bers_recover, character_locate, interior_grid, standard_test_set, Character, HomAction,
    RecoveryOptions,
};
use bers::limits::{normal_limit_classify, LimitDescriptor, LimitVerdict};
use bers::lipschitz::{family_classify, CompactExhaustion, FamilyVerdict, PairSampler, DEFAULT_BLOWUP_FACTOR, DEFAULT_REFINE_STEPS};
use bers::scaling::scale_sequence;
use bers::series::TruncatedLaurent;
use bers::{c64, Error, Point, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn run<T>(r: bers::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| format!("{} error: {e}", e.kind()))
}

/// Interior sample with `|p| ≤ radius`, by rejection.
fn shrunk_sample(d: ModelDomain, rng: &mut ChaCha8Rng, radius: f64) -> Point {
    loop {
        let p = d.sample_interior(rng);
        if p.norm() <= radius {
            return p;
        }
    }
}

fn bers_recovery() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let domains = [ModelDomain::Disk, ModelDomain::annulus(0.4).unwrap(), ModelDomain::Ball];
    let (mut worst_dev, mut worst_res): (f64, f64) = (0.0, 0.0);
    for i in 0..25 {
        let d = domains[i % 3];
        let h = run(Automorphism::random(d, &mut rng, 0.8))?;
        let grid = interior_grid(d, 200, i as u64);
        let phi = HomAction::composition(Map::new(h), d, d);
        let opts = RecoveryOptions {
            tol: 1e-8,
            candidate_inverse: Some(Map::new(h.inverse())),
            seed: i as u64,
            ..Default::default()
        };
        let r = run(bers_recover(&phi, &grid, &standard_test_set(d), &opts))?;
        let dev = grid.iter().zip(&r.h_values).map(|(p, v)| h.map(p).dist(v)).fold(0.0, f64::max);
        worst_dev = worst_dev.max(dev);
        worst_res = worst_res.max(r.residual_max);
        ensure!(dev <= 1e-9 && r.residual_max <= 1e-8, "{h:?}: deviation {dev:e}, residual {:e}", r.residual_max);
    }
    Ok(format!("25 automorphisms, max deviation {worst_dev:.1e}, max residual {worst_res:.1e}"))
}

fn character_totality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let domains = [ModelDomain::Disk, ModelDomain::annulus(0.5).unwrap(), ModelDomain::Ball, ModelDomain::Bidisc];
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let d = domains[i % domains.len()];
        let c = d.sample_interior(&mut rng);
        let r = run(character_locate(&Character::point_evaluation(d, c), d, &standard_test_set(d), 1e-10))?;
        ensure!(r.c.dist(&c) <= 1e-12, "located {} instead of {c}", r.c);
        worst = worst.max(r.residual_max);
    }
    let outside = [
        (ModelDomain::Disk, Point::one(c64(1.2, 0.0))),
        (ModelDomain::Disk, Point::one(c64(0.0, -3.0))),
        (ModelDomain::Disk, Point::one(c64(1.0, 0.0))),
        (ModelDomain::annulus(0.5).unwrap(), Point::one(c64(0.2, 0.0))),
        (ModelDomain::annulus(0.5).unwrap(), Point::one(c64(0.0, 1.5))),
        (ModelDomain::Ball, Point::two(c64(0.8, 0.0), c64(0.0, 0.8))),
        (ModelDomain::Ball, Point::two(c64(2.0, 0.0), c64(0.0, 0.0))),
        (ModelDomain::Bidisc, Point::two(c64(0.5, 0.0), c64(1.1, 0.0))),
        (ModelDomain::Bidisc, Point::two(c64(-1.0, 0.0), c64(0.0, 0.0))),
        (ModelDomain::Ball, Point::two(c64(0.6, 0.0), c64(0.8, 0.0))),
    ];
    for (d, c) in outside {
        match character_locate(&Character::point_evaluation(d, c), d, &standard_test_set(d), 1e-10) {
            Err(Error::UnitObstruction { .. }) => {}
            other => return Err(format!("{c} on {}: expected unit obstruction, got {other:?}", d.name())),
        }
    }
    ensure!(worst <= 1e-10, "residual {worst:e}");
    Ok(format!("50 located (max residual {worst:.1e}), 10 obstructions"))
}

fn annulus_classifier() -> Check {
    let r = 0.5;
    for k in 0..20 {
        let alpha = C64::from_polar(1.0, -PI + 2.0 * PI * (k as f64 + 0.5) / 20.0);
        let v = run(annulus_auto_classify(&TruncatedLaurent::monomial(alpha, 1, 4, 4), r, 1e-8))?;
        ensure!(v.accepted(), "αz rejected for α = {alpha}: {:?}", v.reason);
        ensure!(v.alpha.is_some_and(|a| (a - alpha).norm() <= 1e-8), "wrong α {:?}", v.alpha);
    }
    let v = run(annulus_auto_classify(&TruncatedLaurent::monomial(c64(0.9, 0.0), 1, 4, 4), r, 1e-8))?;
    ensure!(!v.accepted(), "0.9z accepted");
    let (inner, outer) = v.image_radii.ok_or("0.9z: no radii evidence")?;
    for (got, want) in [(inner, r / 0.9), (outer, 1.0 / 0.9)] {
        ensure!((got / want - 1.0).abs() <= 0.1, "0.9z radii ({inner}, {outer})");
    }
    let sq = run(annulus_auto_classify(&TruncatedLaurent::monomial(c64(1.0, 0.0), 2, 4, 4), r, 1e-8))?;
    ensure!(!sq.accepted(), "z² accepted");
    Ok(format!("20 rotations accepted, 0.9z radii ({inner:.4}, {outer:.4}), z² rejected"))
}

fn noncompactness() -> Check {
    let auts: Vec<_> = (1..=12).map(|j| Automorphism::disk(c64(1.0 - 2f64.powi(-j), 0.0), 0.0).unwrap()).collect();
    let ex = run(CompactExhaustion::standard(ModelDomain::Disk, 1))?;
    let s = PairSampler::new(ModelDomain::Disk, 2000, 2).with_refinement(DEFAULT_REFINE_STEPS);
    let rep = run(family_classify(&Func::coordinate(0, 1), &auts, &ex, &s, DEFAULT_BLOWUP_FACTOR))?;
    ensure!(rep.verdict == FamilyVerdict::Noncompact, "disk verdict {:?}", rep.verdict);
    for (j, n) in rep.norms.iter().enumerate() {
        let a = 1.0 - 2f64.powi(-(j as i32 + 1));
        let sup = (1.0 + a) / (1.0 - a);
        ensure!(n.value >= sup / 2.0 && n.value <= 2.0 * sup, "j = {}: norm {} vs {sup}", j + 1, n.value);
    }
    let d = ModelDomain::annulus(0.5).unwrap();
    let auts: Vec<_> =
        (1..=16).map(|j| Automorphism::Annulus { r: 0.5, theta: 0.7 * j as f64, flip: j % 3 == 0 }).collect();
    let ex = run(CompactExhaustion::standard(d, 8))?;
    let s = PairSampler::new(d, 2000, 2).with_refinement(100);
    let ann = run(family_classify(&Func::coordinate(0, 1), &auts, &ex, &s, DEFAULT_BLOWUP_FACTOR))?;
    ensure!(ann.verdict == FamilyVerdict::Equicontinuous, "annulus verdict {:?}", ann.verdict);
    Ok(format!("disk noncompact (norm at j = 12: {:.1}), annulus equicontinuous", rep.norms[11].value))
}

fn kernel_oracles() -> Check {
    let spec = QuadratureSpec::default();
    let closed = run(KernelModel::closed_form(ModelDomain::Disk))?;
    let numeric = run(KernelModel::numeric(ModelDomain::Disk, 40, &spec))?;
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let z = Point::one(C64::from_polar(0.7 * (k / 10 + 1) as f64 / 5.0, 2.0 * PI * (k % 10) as f64 / 10.0));
        let (a, b) = (run(numeric.eval(&z, &z))?, run(closed.eval(&z, &z))?);
        worst = worst.max((a - b).norm() / b.norm());
    }
    ensure!(worst <= 1e-6, "disk relative error {worst:e}");
    let closed = run(KernelModel::closed_form(ModelDomain::Ball))?;
    let numeric = run(KernelModel::numeric(ModelDomain::Ball, 12, &spec))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ball: f64 = 0.0;
    for _ in 0..10 {
        let (z, w) = (shrunk_sample(ModelDomain::Ball, &mut rng, 0.4), shrunk_sample(ModelDomain::Ball, &mut rng, 0.4));
        let (a, b) = (run(numeric.eval(&z, &w))?, run(closed.eval(&z, &w))?);
        ball = ball.max((a - b).norm() / b.norm());
    }
    ensure!(ball <= 1e-6, "ball relative error {ball:e}");
    Ok(format!("disk degree 40: {worst:.1e}, ball degree 12: {ball:.1e}"))
}

fn transformation_law() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for d in [
        ModelDomain::Disk,
        ModelDomain::annulus(0.5).unwrap(),
        ModelDomain::Ball,
        ModelDomain::Bidisc,
        ModelDomain::Siegel,
    ] {
        let k = run(KernelModel::closed_form(d))?;
        for _ in 0..3 {
            let f = run(Automorphism::random(d, &mut rng, 0.6))?;
            let pairs: Vec<_> = (0..100).map(|_| (d.sample_interior(&mut rng), d.sample_interior(&mut rng))).collect();
            let r = run(transformation_residual(&k, &f, &pairs))?.max_residual;
            ensure!(r <= 1e-9, "{} closed form: residual {r:e} for {f:?}", d.name());
            worst = worst.max(r);
        }
    }
    let mut line = format!("closed forms {worst:.1e}");
    for d in [ModelDomain::Disk, ModelDomain::Ball] {
        let f = run(Automorphism::random(d, &mut rng, 0.3))?;
        let pairs: Vec<_> =
            (0..100).map(|_| (shrunk_sample(d, &mut rng, 0.3), shrunk_sample(d, &mut rng, 0.3))).collect();
        let mut residuals = Vec::new();
        for degree in [12, 14, 16, 18, 20] {
            let k = run(KernelModel::numeric(d, degree, &QuadratureSpec::default()))?;
            residuals.push(run(transformation_residual(&k, &f, &pairs))?.max_residual);
        }
        ensure!(residuals[0] <= 1e-4, "{} numeric degree 12: {:e}", d.name(), residuals[0]);
        ensure!(
            residuals.windows(2).all(|w| w[1] < w[0]),
            "{} numeric residuals not strictly decreasing: {residuals:?}",
            d.name()
        );
        line += &format!(", {} numeric {:.1e} → {:.1e}", d.name(), residuals[0], residuals[4]);
    }
    Ok(line)
}

fn curvature_constants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let disk = run(KernelModel::closed_form(ModelDomain::Disk))?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let z = shrunk_sample(ModelDomain::Disk, &mut rng, 0.95);
        let c = run(holo_curvature(&disk, &z, &Point::one(c64(1.0, 0.0))))?.value;
        worst = worst.max((c + 2.0).abs());
    }
    ensure!(worst <= 1e-3, "disk curvature off by {worst:e}");
    let ball = run(KernelModel::closed_form(ModelDomain::Ball))?;
    let mut worst_ball: f64 = 0.0;
    for _ in 0..20 {
        let z = shrunk_sample(ModelDomain::Ball, &mut rng, 0.95);
        let v = Point::two(
            c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        );
        let c = run(holo_curvature(&ball, &z, &v))?.value;
        worst_ball = worst_ball.max((c + 4.0 / 3.0).abs());
    }
    ensure!(worst_ball <= 1e-2, "ball curvature off by {worst_ball:e}");
    Ok(format!("disk {worst:.1e}, ball {worst_ball:.1e}"))
}

fn klembeck() -> Check {
    let d = ModelDomain::Ellipsoid { m: 2 };
    let k = run(KernelModel::numeric_with(d, MonomialSet::Box { a_max: 4000, b_max: 4 }, &QuadratureSpec::default()))?;
    let x = Point::two(c64(1.0, 0.0), c64(0.0, 0.0));
    let mut line = Vec::new();
    let mut ok = true;
    for v in [Point::two(c64(1.0, 0.0), c64(0.0, 0.0)), Point::two(c64(0.0, 0.0), c64(1.0, 0.0))] {
        let p = run(klembeck_profile(&k, &x, &[1e-1, 1e-2], &v))?;
        ensure!(!p.truncated, "profile truncated: {:?}", p.failure);
        let gaps: Vec<f64> = p.values.iter().map(|c| (c - p.target).abs()).collect();
        // a change inside the error bars is not an improvement
        let resolved = p.error_estimates[0] + p.error_estimates[1];
        ok &= gaps[0] - gaps[1] > resolved;
        line.push(format!(
            "v = {v}: curvature {:.9} → {:.9} (error bars {:.1e}, {:.1e})",
            p.values[0], p.values[1], p.error_estimates[0], p.error_estimates[1]
        ));
    }
    let line = line.join("; ");
    if ok {
        Ok(line)
    } else {
        Err(format!("|curvature + 4/3| does not shrink ({line})"))
    }
}

fn blowup() -> Check {
    let deltas = [1e-1, 1e-2, 1e-3, 1e-4];
    let disk = run(blowup_exponent(&run(KernelModel::closed_form(ModelDomain::Disk))?, &Point::one(c64(1.0, 0.0)), &deltas))?;
    let x = Point::two(c64(1.0, 0.0), c64(0.0, 0.0));
    let ball = run(blowup_exponent(&run(KernelModel::closed_form(ModelDomain::Ball))?, &x, &deltas))?;
    ensure!((disk.exponent - 2.0).abs() <= 0.05, "disk exponent {}", disk.exponent);
    ensure!((ball.exponent - 3.0).abs() <= 0.1, "ball exponent {}", ball.exponent);
    Ok(format!("disk {:.4}, ball {:.4}", disk.exponent, ball.exponent))
}

fn scaling() -> Check {
    let deltas = [1e-1, 1e-2, 1e-3, 1e-4];
    let ball = run(scale_sequence(ModelDomain::Ball, &Point::two(c64(1.0, 0.0), c64(0.0, 0.0)), &deltas, 3))?;
    ensure!(ball.strictly_decreasing, "ball defects not decreasing: {:?}", ball.steps);
    ensure!(ball.final_defect <= 1e-2, "ball final defect {}", ball.final_defect);
    let siegel = run(scale_sequence(ModelDomain::Siegel, &Point::two(c64(0.0, 0.0), c64(0.0, 0.0)), &deltas, 3))?;
    let worst = siegel.steps.iter().map(|s| s.defect).fold(0.0, f64::max);
    ensure!(worst <= 1e-10, "Siegel defect {worst:e}");
    Ok(format!("ball final defect {:.2e}, Siegel max defect {worst:.1e}", ball.final_defect))
}

fn limit_dichotomy() -> Check {
    let ex = run(CompactExhaustion::standard(ModelDomain::Disk, 9))?;
    let drift: Vec<_> = (1..=48).map(|j| Automorphism::disk(c64(1.0 - 0.5f64.powi(j), 0.0), 0.0).unwrap()).collect();
    let r = run(normal_limit_classify(&drift, &ex, 1e-6))?;
    let LimitDescriptor::Constant(c) = r.limit else {
        return Err(format!("drift: {:?} ({})", r.verdict, r.reason));
    };
    ensure!(c.dist(&Point::one(c64(-1.0, 0.0))) <= 1e-6, "drift constant {c}");

    let a = c64(0.4, -0.2);
    let conv: Vec<_> = (1..=40).map(|j| Automorphism::disk(a, 0.8 + 0.5f64.powi(j)).unwrap()).collect();
    let r = run(normal_limit_classify(&conv, &ex, 1e-6))?;
    let LimitDescriptor::Automorphism(Automorphism::Disk(m)) = r.limit else {
        return Err(format!("convergent: {:?} ({})", r.verdict, r.reason));
    };
    ensure!((m.a - a).norm() <= 1e-6 && (m.theta - 0.8).abs() <= 1e-6, "recovered {m:?}");

    let alt: Vec<_> = (0..40).map(|j| Automorphism::disk(a, if j % 2 == 0 { 0.3 } else { 1.2 }).unwrap()).collect();
    let r = run(normal_limit_classify(&alt, &ex, 1e-6))?;
    ensure!(r.verdict == LimitVerdict::NotConverged, "alternating: {:?}", r.verdict);
    Ok(format!("constant {c}, automorphism a = {} θ = {:.9}, alternating not converged", m.a, m.theta))
}

fn cli_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_bers");
    let base = std::env::temp_dir().join(format!("bers-acceptance-{}", std::process::id()));
    let out = base.join("out");
    let config = base.join("run.conf");
    std::fs::create_dir_all(&base).map_err(|e| e.to_string())?;
    std::fs::write(&config, format!("seed = 42\npairs = 3000\nout_dir = {}\n", out.display())).map_err(|e| e.to_string())?;
    let runs: [&[&str]; 3] = [
        &["scale", "--domain", "ball", "--x", "1,0;0,0", "--deltas", "0.1,0.01,0.001"],
        &["lipschitz", "--domain", "disk", "--aut", r#"{"kind":"disk","params":{"a":[0.9,0],"theta":0}}"#],
        &["transform-law", "--domain", "ball", "--mode", "numeric", "--degree", "8", "--aut",
          r#"{"kind":"ball","params":{"a":[[0.2,0.1],[0,-0.3]],"u":[[[1,0],[0,0]],[[0,0],[1,0]]]}}"#],
    ];
    let read = |name: &str| -> std::result::Result<Vec<Vec<u8>>, String> {
        ["json", "csv"]
            .iter()
            .map(|ext| out.join(format!("{name}.{ext}")))
            .filter(|p| p.exists())
            .map(|p| std::fs::read(&p).map_err(|e| e.to_string()))
            .collect()
    };
    let mut compared = 0;
    for args in runs {
        let mut artifacts = Vec::new();
        for _ in 0..2 {
            let o = Command::new(bin)
                .args(["--config", config.to_str().unwrap()])
                .args(args)
                .env_remove("BERS_OUT_DIR")
                .output()
                .map_err(|e| e.to_string())?;
            ensure!(o.status.success(), "{} failed: {}", args[0], String::from_utf8_lossy(&o.stdout));
            artifacts.push((o.stdout, read(args[0])?));
        }
        ensure!(!artifacts[0].1.is_empty(), "{}: no artifact written", args[0]);
        ensure!(artifacts[0] == artifacts[1], "{}: artifacts differ between runs", args[0]);
        compared += artifacts[0].1.len();
    }
    let _ = std::fs::remove_dir_all(Path::new(&base));
    Ok(format!("{compared} artifacts byte-identical across repeated runs"))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 12] = [
        ("bers recovery round trip", bers_recovery),
        ("character totality", character_totality),
        ("annulus classifier", annulus_classifier),
        ("noncompactness", noncompactness),
        ("kernel oracle equivalence", kernel_oracles),
        ("transformation law", transformation_law),
        ("curvature constants", curvature_constants),
        ("curvature profile toward boundary", klembeck),
        ("blow-up exponents", blowup),
        ("scaling to the Siegel model", scaling),
        ("limit dichotomy", limit_dichotomy),
        ("determinism", cli_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let outcome = check();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
