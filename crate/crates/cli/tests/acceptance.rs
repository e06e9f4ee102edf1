//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances are pinned here and printed with each line.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use procstar_cli::build::World;
use procstar_cli::spec::SpecFile;
use procstar_cli::{BUNDLED_ORIGIN, BUNDLED_SPEC};
use procstar_core::bounded::{check_exactness, level_quotient_check, quotient_iso_check};
use procstar_core::calculus::{pro_spectrum, seminorm, uniform_norm};
use procstar_core::elements::{superdiagonal, twisted_product_tower};
use procstar_core::gelfand::{duality_roundtrip, tower_roundtrip};
use procstar_core::linalg::{hausdorff_distance, one_sided_distance, ONE};
use procstar_core::unitary::{exp_selfadjoint, identity_component_check};
use procstar_core::{
    random, BlockAlgebra, BlockSelector, BoundednessVerdict, CoherentElement, FunctionDescriptor, Tower,
};

const SEED: u64 = 20240917;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn core<T>(r: procstar_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn bundled_world() -> Result<World, String> {
    let spec = SpecFile::parse(BUNDLED_SPEC, BUNDLED_ORIGIN).map_err(|e| e.to_string())?;
    World::new(spec).map_err(|e| e.to_string())
}

fn timed(limit: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    ensure(took <= limit, format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(format!("{detail}; {took:.2?} (limit {limit:?})"))
}

/// Spectrum {0} with radius ≤ 1e-10 through level 200; unbounded past
/// threshold 100 with witness_value = witness_level − 1; p_{n+1}(L) = n.
fn l_example() -> Verdict {
    timed(Duration::from_secs(5), || {
        let t = core(Tower::product(|k| k, 200))?;
        let l = superdiagonal(&t);
        let s = core(pro_spectrum(&l, 200, 1e-8))?;
        ensure(s.points.len() == 1 && s.points[0].norm() <= 1e-10, format!("spectrum {:?}", s.points))?;
        ensure(s.radius <= 1e-10, format!("radius {:e}", s.radius))?;
        let (level, value) = match core(uniform_norm(&l, 200, 100.0))? {
            BoundednessVerdict::Unbounded {
                witness_level,
                witness_value,
            } => (witness_level, witness_value),
            other => return Err(format!("expected Unbounded, got {other}")),
        };
        ensure(value == (level - 1) as f64, format!("witness ({level}, {value})"))?;
        for n in 1..200 {
            let p = core(seminorm(&l, n + 1))?;
            ensure((p - n as f64).abs() <= 1e-10, format!("seminorm at level {} is {p}", n + 1))?;
        }
        Ok(format!("radius {:e}, witness level {level} value {value}", s.radius))
    })
}

/// Bundled 5-level block-ideal sequence: both verdicts exact; 20 probes with
/// trace(n) ≤ 2/n² + 1e-9 for n = 1..50.
fn exactness() -> Verdict {
    timed(Duration::from_secs(10), || {
        let w = bundled_world()?;
        let alpha = w.homomorphism("incl", 5).map_err(|e| e.to_string())?;
        let beta = w.homomorphism("quot", 5).map_err(|e| e.to_string())?;
        let mut rng = random::rng(SEED, 0);
        let r = core(check_exactness(&alpha, &beta, 20, 5, 1e-10, &mut rng))?;
        ensure(r.horizon == 5, format!("horizon {}", r.horizon))?;
        ensure(r.verdict_original, "original sequence not exact")?;
        ensure(r.verdict_bounded, "bounded sequence not exact")?;
        ensure(r.approximation_trace.len() == 20, "expected 20 probes")?;
        let mut worst = f64::NEG_INFINITY;
        for t in &r.approximation_trace {
            ensure(t.b_norm <= 1.0 + 1e-12, format!("probe norm {} outside [-1, 1]", t.b_norm))?;
            ensure(t.values.len() >= 50, "trace shorter than 50")?;
            for n in 1..=50usize {
                let excess = t.values[n - 1] - 2.0 / (n * n) as f64;
                worst = worst.max(excess);
                ensure(excess <= 1e-9, format!("trace({n}) exceeds 2/n² by {excess:e}"))?;
            }
        }
        Ok(format!("worst trace(n) − 2/n² = {worst:e}"))
    })
}

/// quotient_iso_check residuals ≤ 1e-10; A_p ≅ A_b/(ker p)_b for p = 1, 2, 3.
fn quotient_iso() -> Verdict {
    const TOL: f64 = 1e-10;
    let w = bundled_world()?;
    let t = w.tower("prod5", 5).map_err(|e| e.to_string())?;
    let sel: BlockSelector = w.selector("lead2", &t).map_err(|e| e.to_string())?;
    let mut rng = random::rng(SEED, 1);
    let r = core(quotient_iso_check(&t, sel, 5, 20, TOL, &mut rng))?;
    let worst = [
        r.kernel_residual,
        r.ideal_residual,
        r.homomorphism_residual,
        r.isometry_residual,
        r.surjectivity_residual,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    ensure(r.passed && worst <= TOL, format!("quotient iso residual {worst:e}"))?;
    let mut level_worst = 0.0f64;
    for p in 1..=3 {
        let l = core(level_quotient_check(&t, p, 5, 20, TOL, &mut rng))?;
        let res = l.seminorm_residual.max(l.iso.isometry_residual).max(l.iso.surjectivity_residual);
        level_worst = level_worst.max(res);
        ensure(l.passed && l.same_shape && res <= TOL, format!("level {p}: residual {res:e}"))?;
    }
    Ok(format!("iso residual {worst:e}, level quotients {level_worst:e}"))
}

/// Both Gelfand composites within 1e-12 on 100 probes, for a 5-point
/// covered space and a 5-level commutative tower.
fn gelfand() -> Verdict {
    const TOL: f64 = 1e-12;
    let w = bundled_world()?;
    let space = w.space("five").map_err(|e| e.to_string())?;
    ensure(space.points.len() == 5, "bundled space must have 5 points")?;
    let mut rng = random::rng(SEED, 2);
    let d = core(duality_roundtrip(&space, 100, TOL, &mut rng))?;
    let dw = d.space_residual.max(d.algebra_residual).max(d.seminorm_residual);
    ensure(d.passed && d.bijective && d.family_recovered && dw <= TOL, format!("space round trip {d:?}"))?;
    let t = w.tower("comm5", 5).map_err(|e| e.to_string())?;
    ensure(t.max_level() == Some(5), "bundled commutative tower must have 5 levels")?;
    let r = core(tower_roundtrip(&t, 5, 100, TOL, &mut rng))?;
    let tw = r.algebra_residual.max(r.homomorphism_residual).max(r.seminorm_residual);
    ensure(r.passed && r.injections_consistent && tw <= TOL, format!("tower round trip {r:?}"))?;
    Ok(format!("space residual {dw:e}, tower residual {tw:e}"))
}

fn finite_tower(i: usize) -> Result<Tower, String> {
    if i.is_multiple_of(2) {
        core(Tower::product(|k| k, 4).and_then(|t| t.truncated(4)))
    } else {
        core(twisted_product_tower(4, SEED + i as u64).and_then(|t| t.truncated(4)))
    }
}

/// 100 unitaries near 1 factor as one exponential; 100 arbitrary coherent
/// unitaries factor levelwise; all have uniform norm 1 within 1e-10.
fn unitaries() -> Verdict {
    const TOL: f64 = 1e-10;
    let mut rng = random::rng(SEED, 3);
    let mut worst_residual = 0.0f64;
    let mut worst_norm = 0.0f64;
    let mut check_norm = |u: &CoherentElement, h: usize| -> Result<(), String> {
        let v = core(uniform_norm(&u.clone().without_certificates(), h, f64::INFINITY))?;
        let n = v.bounded_value().ok_or_else(|| format!("unitary norm verdict {v}"))?;
        worst_norm = worst_norm.max((n - 1.0).abs());
        ensure((n - 1.0).abs() <= TOL, format!("unitary norm {n}"))
    };
    for i in 0..100 {
        let t = finite_tower(i)?;
        let top = core(t.algebra(4))?;
        // |1 − e^{iθ}| = 2 sin(θ/2) ≤ 0.985 for θ ≤ 1.03
        let theta = 1.03 * (1.0 - (-random::gaussian(&mut rng).norm()).exp());
        let a_top = random::self_adjoint_with_norm(&top, theta, &mut rng);
        let a = core(CoherentElement::from_top(&t, 4, a_top))?;
        let u = core(exp_selfadjoint(&a, 1.0, TOL))?;
        let mut dist = 0.0f64;
        for p in 1..=4 {
            let up = core(u.project(p))?;
            dist = dist.max(core(up.distance(&up.parent().identity()))?);
        }
        ensure(dist <= 0.99, format!("|1 − u| = {dist}"))?;
        let f = core(identity_component_check(&u, 4, TOL))?;
        ensure(f.factors.len() <= 1, format!("near-identity unitary needed {} factors", f.factors.len()))?;
        ensure(f.valid && f.residual <= 1e-9, format!("one-factor residual {:e}", f.residual))?;
        worst_residual = worst_residual.max(f.residual);
        check_norm(&u, 4)?;
    }
    for i in 0..100 {
        let t = finite_tower(i)?;
        let top = core(t.algebra(4))?;
        let u = core(CoherentElement::from_top(&t, 4, random::unitary_element(&top, &mut rng)))?;
        let f = core(identity_component_check(&u, 4, TOL))?;
        ensure(f.valid && f.residual <= 1e-9, format!("arbitrary unitary residual {:e}", f.residual))?;
        worst_residual = worst_residual.max(f.residual);
        check_norm(&u, 4)?;
    }
    Ok(format!("worst reassembly {worst_residual:e}, worst | |u| − 1 | {worst_norm:e}"))
}

fn shape(i: usize) -> Result<BlockAlgebra, String> {
    core(BlockAlgebra::new(vec![i % 3 + 1, (i / 3) % 4 + 1]))
}

/// The seven core invariants, 200 seeded instances each.
fn invariants() -> Verdict {
    const N: usize = 200;
    let mut rng = random::rng(SEED, 4);
    let poly = FunctionDescriptor::polynomial_z(&[ONE, Complex64::new(0.0, 1.0), ONE]);
    let mut worst = [0.0f64; 7];
    for i in 0..N {
        let alg = shape(i)?;
        let a = random::element(&alg, &mut rng);
        let b = random::element(&alg, &mut rng);
        let na = core(a.norm())?;
        let nb = core(b.norm())?;
        let scale = na.max(1.0).powi(2);
        worst[0] = worst[0].max((core((&a.adjoint() * &a).norm())? - na * na).abs() / scale);
        worst[1] = worst[1].max(core((&a * &b).norm())? - na * nb - 1e-10 * (na * nb).max(1.0));
        worst[2] = worst[2].max((core(a.adjoint().norm())? - na).abs() / na.max(1.0));
        let x = random::normal_element(&alg, &mut rng);
        let image: Vec<_> = core(x.raw_eigenvalues())?.into_iter().filter_map(|z| poly.eval(z)).collect();
        let fx = core(x.apply_function(&poly, 1e-10))?;
        worst[3] = worst[3].max(hausdorff_distance(&image, &core(fx.raw_eigenvalues())?));
        worst[4] = worst[4].max((core(x.norm())? - core(x.spectral_radius())?).abs() / core(x.norm())?.max(1.0));

        let t = core(twisted_product_tower(4, SEED ^ i as u64).and_then(|t| t.truncated(4)))?;
        let top = core(t.algebra(4))?;
        let e = core(CoherentElement::from_top(&t, 4, random::element(&top, &mut rng)))?;
        let levels = (1..=4).map(|p| core(e.project(p))).collect::<Result<Vec<_>, _>>()?;
        for p in 0..4 {
            for q in p..4 {
                let (np, nq) = (core(levels[p].norm())?, core(levels[q].norm())?);
                worst[5] = worst[5].max(np - nq);
                let (sp, sq) = (core(levels[p].raw_eigenvalues())?, core(levels[q].raw_eigenvalues())?);
                worst[6] = worst[6].max(one_sided_distance(&sp, &sq));
            }
        }
    }
    let names = [
        ("C*-identity", 1e-10),
        ("submultiplicativity", 0.0),
        ("involution isometry", 1e-12),
        ("spectral mapping", 1e-8),
        ("normal norm = spectral radius", 1e-10),
        ("seminorm monotonicity", 1e-12),
        ("spectral nesting", 1e-8),
    ];
    for (k, (name, bound)) in names.iter().enumerate() {
        ensure(worst[k] <= *bound, format!("{name}: worst {:e} > {bound:e}", worst[k]))?;
    }
    Ok(format!(
        "{N} instances each; worst {}",
        names
            .iter()
            .zip(worst)
            .map(|((n, _), w)| format!("{n} {w:.1e}"))
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

/// Two `paper-examples` runs with the same seed write identical bytes.
fn determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("procstar-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = dir.join(format!("report{k}.jsonl"));
        let status = Command::new(env!("CARGO_BIN_EXE_procstar"))
            .args(["paper-examples", "--seed", "7", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.code() == Some(0), format!("run {k} exited with {:?}", status.status.code()))?;
        reports.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure(reports[0] == reports[1], "reports differ")?;
    let lines = reports[0].iter().filter(|&&b| b == b'\n').count();
    Ok(format!("{} bytes, {lines} records, identical", reports[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("L example: spectrum {0}, unbounded with witness_value = witness_level - 1", l_example),
        ("exactness of the bounded ideal sequence and the 2/n^2 trace bound", exactness),
        ("quotient isomorphisms (tol 1e-10)", quotient_iso),
        ("Gelfand round trips (tol 1e-12, 100 probes)", gelfand),
        ("unitary suite: exponential factorizations and unit norms", unitaries),
        ("core invariants (200 seeded instances each)", invariants),
        ("determinism of paper-examples reports", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
