//! Executes one run directive and turns the library's reports into JSON.

use num_complex::Complex64;
use procstar_core::bounded::{bounded_part, check_exactness, level_quotient_check, quotient_iso_check, TRACE_SLACK};
use procstar_core::calculus::{is_spectrally_bounded, lift_function, pro_spectrum, uniform_norm};
use procstar_core::gelfand::{duality_roundtrip, tower_roundtrip};
use procstar_core::linalg;
use procstar_core::random;
use procstar_core::unitary::{identity_component_check, unitary_log, FACTORIZATION_TOL};
use procstar_core::algebra::DEFAULT_CLUSTER_TOL;
use procstar_core::{BoundednessVerdict, CoherentElement, FunctionDescriptor};
use serde_json::{json, Value};

use crate::build::{function, World};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::spec::Command;

/// What a run produced before expectations are applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub result: Value,
    pub summary: String,
}

/// Errors from building the run's objects are configuration errors; errors
/// from the computation itself become a failed outcome.
pub fn execute(world: &World, command: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    world.check_command(command)?;
    match compute(world, command, cfg) {
        Ok(Computed::Done(o)) => Ok(o),
        Ok(Computed::Failed(e)) => Ok(Outcome {
            passed: false,
            result: json!({ "error": e.to_string() }),
            summary: format!("error: {e}"),
        }),
        Err(e) => Err(e),
    }
}

enum Computed {
    Done(Outcome),
    Failed(procstar_core::Error),
}

macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return Ok(Computed::Failed(err)),
        }
    };
}

pub fn c(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn verdict(v: &BoundednessVerdict) -> Value {
    match v {
        BoundednessVerdict::Bounded {
            value,
            upper_bound,
            certificate,
        } => json!({
            "verdict": "bounded",
            "value": value,
            "upper_bound": upper_bound,
            "certificate": certificate,
        }),
        BoundednessVerdict::Unbounded {
            witness_level,
            witness_value,
        } => json!({
            "verdict": "unbounded",
            "witness_level": witness_level,
            "witness_value": witness_value,
        }),
        BoundednessVerdict::UnknownAtTruncation { lower_bound, horizon } => json!({
            "verdict": "unknown",
            "lower_bound": lower_bound,
            "horizon": horizon,
        }),
    }
}

/// Worst Hausdorff distance between `sp(f(a_p))` and `f(sp(a_p))`, block by
/// block, over the levels through `horizon`.
fn spectral_mapping_residual(
    a: &CoherentElement,
    fa: &CoherentElement,
    f: &FunctionDescriptor,
    horizon: usize,
) -> procstar_core::Result<f64> {
    let mut worst = 0.0f64;
    for p in 1..=a.reachable(horizon) {
        for j in a.tower().new_blocks(p)? {
            let image: Vec<Complex64> = linalg::eigenvalues(&a.block(p, j)?, j)?
                .into_iter()
                .filter_map(|z| f.eval(z))
                .collect();
            let direct = linalg::eigenvalues(&fa.block(p, j)?, j)?;
            worst = worst.max(linalg::hausdorff_distance(&image, &direct));
        }
    }
    Ok(worst)
}

fn compute(world: &World, command: &Command, cfg: &RunConfig) -> Result<Computed, CliError> {
    let (h, tol) = (cfg.horizon, cfg.tol);
    let outcome = match command {
        Command::Norm { element } => {
            let e = world.element(element, h, tol)?;
            let v = attempt!(uniform_norm(&e, h, cfg.threshold));
            Outcome {
                passed: true,
                summary: v.to_string(),
                result: verdict(&v),
            }
        }
        Command::Spectrum { element } => {
            let e = world.element(element, h, tol)?;
            let s = attempt!(pro_spectrum(&e, h, DEFAULT_CLUSTER_TOL));
            let r = attempt!(is_spectrally_bounded(&e, h, cfg.threshold));
            Outcome {
                passed: true,
                summary: format!("{} point(s) through level {}, radius {:e}", s.points.len(), s.horizon, s.radius),
                result: json!({
                    "spectrum": s.points.iter().copied().map(c).collect::<Vec<_>>(),
                    "horizon": s.horizon,
                    "radius": s.radius,
                    "spectral_radius": verdict(&r),
                }),
            }
        }
        Command::Bounded { element } => {
            let e = world.element(element, h, tol)?;
            let v = attempt!(uniform_norm(&e, h, cfg.threshold));
            let b = attempt!(bounded_part(&e, h, cfg.threshold));
            let mut result = verdict(&v);
            result["in_bounded_part"] = json!(b.is_some());
            Outcome {
                passed: true,
                summary: v.to_string(),
                result,
            }
        }
        Command::Funcalc { element, function: spec } => {
            let e = world.element(element, h, tol)?;
            let f = function(spec)?;
            let fa = attempt!(lift_function(&e, &f, tol));
            let v = attempt!(uniform_norm(&fa, h, cfg.threshold));
            let residual = attempt!(spectral_mapping_residual(&e, &fa, &f, h));
            let passed = residual <= DEFAULT_CLUSTER_TOL;
            let mut result = verdict(&v);
            result["function"] = json!(f.to_string());
            result["spectral_mapping_residual"] = json!(residual);
            Outcome {
                passed,
                summary: format!("{f}: {v}, spectral mapping residual {residual:e}"),
                result,
            }
        }
        Command::CheckExact { alpha, beta } => {
            let seed = cfg.seed(command.name())?;
            let (a, b) = (world.homomorphism(alpha, h)?, world.homomorphism(beta, h)?);
            let mut rng = random::rng(seed, cfg.stream);
            let r = attempt!(check_exactness(&a, &b, cfg.probes, h, tol, &mut rng));
            let mut excess = f64::NEG_INFINITY;
            for t in &r.approximation_trace {
                for (k, v) in t.values.iter().enumerate() {
                    let n = (k + 1) as f64;
                    excess = excess.max(v - 2.0 / (n * n));
                }
            }
            let within = r.approximation_trace.is_empty() || excess <= TRACE_SLACK;
            let passed = r.verdict_original && r.verdict_bounded && within;
            Outcome {
                passed,
                summary: format!(
                    "original {}, bounded {}, worst trace excess over 2/n² {:e}",
                    r.verdict_original, r.verdict_bounded, excess
                ),
                result: json!({
                    "horizon": r.horizon,
                    "verdict_original": r.verdict_original,
                    "verdict_bounded": r.verdict_bounded,
                    "trace_bound_excess": excess,
                    "trace_within_bound": within,
                    "levels": r.levels.iter().map(|l| json!({
                        "level": l.level,
                        "composite_residual": l.composite_residual,
                        "image_rank": l.image_rank,
                        "kernel_dim": l.kernel_dim,
                        "kernel_gap": l.kernel_gap,
                        "exact": l.exact,
                    })).collect::<Vec<_>>(),
                    "approximation_trace": r.approximation_trace.iter().map(|t| json!({
                        "b_norm": t.b_norm,
                        "preimage_residual": t.preimage_residual,
                        "calculus_defect": t.calculus_defect,
                        "converged": t.converged,
                        "values": t.values,
                    })).collect::<Vec<_>>(),
                }),
            }
        }
        Command::QuotientIso { tower, selector, levels } => {
            let seed = cfg.seed(command.name())?;
            let t = world.tower(tower, h)?;
            let sel = world.selector(selector, &t)?;
            let mut rng = random::rng(seed, cfg.stream);
            let r = attempt!(quotient_iso_check(&t, sel, h, cfg.probes, tol, &mut rng));
            let mut per_level = Vec::new();
            let mut passed = r.passed;
            for &p in levels {
                let l = attempt!(level_quotient_check(&t, p, h, cfg.probes, tol, &mut rng));
                passed &= l.passed;
                per_level.push(json!({
                    "level": l.level,
                    "same_shape": l.same_shape,
                    "seminorm_residual": l.seminorm_residual,
                    "isometry_residual": l.iso.isometry_residual,
                    "surjectivity_residual": l.iso.surjectivity_residual,
                    "passed": l.passed,
                }));
            }
            let worst = [
                r.kernel_residual,
                r.ideal_residual,
                r.homomorphism_residual,
                r.isometry_residual,
                r.surjectivity_residual,
            ]
            .into_iter()
            .fold(0.0, f64::max);
            Outcome {
                passed,
                summary: format!("worst residual {worst:e}, {} level quotient(s)", levels.len()),
                result: json!({
                    "horizon": r.horizon,
                    "kernel_residual": r.kernel_residual,
                    "ideal_residual": r.ideal_residual,
                    "homomorphism_residual": r.homomorphism_residual,
                    "isometry_residual": r.isometry_residual,
                    "infimum_excess": r.infimum_excess,
                    "surjectivity_residual": r.surjectivity_residual,
                    "iso_passed": r.passed,
                    "levels": per_level,
                }),
            }
        }
        Command::GelfandRoundtrip { space, tower } => {
            let seed = cfg.seed(command.name())?;
            let mut rng = random::rng(seed, cfg.stream);
            if let Some(space) = space {
                let s = world.space(space)?;
                let r = attempt!(duality_roundtrip(&s, cfg.probes, tol, &mut rng));
                Outcome {
                    passed: r.passed,
                    summary: format!(
                        "{} points, space residual {:e}, algebra residual {:e}",
                        r.points, r.space_residual, r.algebra_residual
                    ),
                    result: json!({
                        "points": r.points,
                        "bijective": r.bijective,
                        "family_recovered": r.family_recovered,
                        "space_residual": r.space_residual,
                        "algebra_residual": r.algebra_residual,
                        "seminorm_residual": r.seminorm_residual,
                    }),
                }
            } else {
                let t = world.tower(tower.as_deref().expect("checked by check_command"), h)?;
                let r = attempt!(tower_roundtrip(&t, h, cfg.probes, tol, &mut rng));
                Outcome {
                    passed: r.passed,
                    summary: format!(
                        "{} characters, algebra residual {:e}, seminorm residual {:e}",
                        r.characters, r.algebra_residual, r.seminorm_residual
                    ),
                    result: json!({
                        "characters": r.characters,
                        "injections_consistent": r.injections_consistent,
                        "algebra_residual": r.algebra_residual,
                        "homomorphism_residual": r.homomorphism_residual,
                        "seminorm_residual": r.seminorm_residual,
                    }),
                }
            }
        }
        Command::UnitaryLog { element, branch } => {
            let u = world.element(element, h, tol)?;
            let l = attempt!(unitary_log(&u, *branch, tol));
            let log_norm = attempt!(uniform_norm(&l.log, l.horizon, cfg.threshold));
            Outcome {
                passed: l.residual <= FACTORIZATION_TOL,
                summary: format!("residual {:e} through level {}", l.residual, l.horizon),
                result: json!({
                    "branch": l.branch,
                    "horizon": l.horizon,
                    "residual": l.residual,
                    "distance_from_one": l.distance_from_one,
                    "log_norm": verdict(&log_norm),
                }),
            }
        }
        Command::ExpFactor { element } => {
            let u = world.element(element, h, tol)?;
            let f = attempt!(identity_component_check(&u, h, tol));
            let norm = attempt!(uniform_norm(&f.target.clone().without_certificates(), f.horizon, cfg.threshold));
            Outcome {
                passed: f.valid,
                summary: format!(
                    "{} factor(s) after {} attempt(s), residual {:e}",
                    f.factors.len(),
                    f.attempts,
                    f.residual
                ),
                result: json!({
                    "horizon": f.horizon,
                    "factors": f.factors.len(),
                    "attempts": f.attempts,
                    "residual": f.residual,
                    "tolerance": f.tolerance,
                    "valid": f.valid,
                    "unitary_norm": verdict(&norm),
                }),
            }
        }
    };
    Ok(Computed::Done(outcome))
}

/// `|a − b| ≤ tol·max(1, |b|)` for numbers, exact equality otherwise, and
/// elementwise for arrays and objects.
pub fn matches(actual: &Value, expected: &Value, tol: f64) -> bool {
    match (actual, expected) {
        (Value::Number(a), Value::Number(b)) => match (a.as_f64(), b.as_f64()) {
            (Some(a), Some(b)) => (a - b).abs() <= tol * b.abs().max(1.0),
            _ => false,
        },
        (Value::Array(a), Value::Array(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| matches(x, y, tol)),
        (Value::Object(a), Value::Object(b)) => {
            b.iter().all(|(k, y)| a.get(k).is_some_and(|x| matches(x, y, tol)))
        }
        (a, b) => a == b,
    }
}
