//! Quick seeded checks of the library's core invariants, for a smoke test
//! of a build. The full property suites live in the core crate's tests.

use procstar_core::calculus::{pro_spectrum, seminorm};
use procstar_core::elements::superdiagonal;
use procstar_core::linalg::{hausdorff_distance, ONE};
use procstar_core::random::ProbeRng;
use procstar_core::{random, AlgebraElement, BlockAlgebra, FunctionDescriptor, Tower};
use serde_json::json;

use crate::commands::Outcome;

pub const INSTANCES: usize = 25;

/// Block sizes of the algebra probed by the selftest.
const SHAPE: [usize; 3] = [1, 2, 3];

type Probe = fn(&BlockAlgebra, &mut ProbeRng) -> procstar_core::Result<f64>;

fn c_star_identity(alg: &BlockAlgebra, rng: &mut ProbeRng) -> procstar_core::Result<f64> {
    let a = random::element(alg, rng);
    let n = a.norm()?;
    Ok(((&a.adjoint() * &a).norm()? - n * n).abs() / n.powi(2).max(1.0))
}

fn submultiplicative(alg: &BlockAlgebra, rng: &mut ProbeRng) -> procstar_core::Result<f64> {
    let (a, b) = (random::element(alg, rng), random::element(alg, rng));
    Ok((&a * &b).norm()? - a.norm()? * b.norm()?)
}

fn spectral_mapping(alg: &BlockAlgebra, rng: &mut ProbeRng) -> procstar_core::Result<f64> {
    let a: AlgebraElement = random::normal_element(alg, rng);
    let f = FunctionDescriptor::polynomial_z(&[ONE, ONE, ONE]);
    let image: Vec<_> = a.raw_eigenvalues()?.into_iter().filter_map(|z| f.eval(z)).collect();
    let fa = a.apply_function(&f, 1e-10)?;
    Ok(hausdorff_distance(&image, &fa.raw_eigenvalues()?))
}

fn run_probe(name: &str, probe: Probe, bound: f64, seed: u64, stream: u64) -> (String, Outcome) {
    let alg = BlockAlgebra::new(SHAPE.to_vec()).expect("positive sizes");
    let mut rng = random::rng(seed, stream);
    let mut worst = f64::NEG_INFINITY;
    let mut error = None;
    for _ in 0..INSTANCES {
        match probe(&alg, &mut rng) {
            Ok(r) => worst = worst.max(r),
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    let passed = error.is_none() && worst <= bound;
    (
        name.to_string(),
        Outcome {
            passed,
            summary: match &error {
                Some(e) => format!("error: {e}"),
                None => format!("worst {worst:e} (bound {bound:e}) over {INSTANCES} instances"),
            },
            result: json!({ "instances": INSTANCES, "worst": worst, "bound": bound, "error": error }),
        },
    )
}

fn l_example() -> (String, Outcome) {
    let run = || -> procstar_core::Result<(f64, f64)> {
        let t = Tower::product(|k| k, 30)?;
        let l = superdiagonal(&t);
        let radius = pro_spectrum(&l, 30, 1e-8)?.radius;
        let drift = (1..30)
            .map(|n| seminorm(&l, n + 1).map(|s| (s - n as f64).abs()))
            .try_fold(0.0f64, |m, s| s.map(|s| m.max(s)))?;
        Ok((radius, drift))
    };
    let outcome = match run() {
        Ok((radius, drift)) => Outcome {
            passed: radius <= 1e-10 && drift <= 1e-10,
            summary: format!("radius {radius:e}, seminorm drift {drift:e}"),
            result: json!({ "radius": radius, "seminorm_drift": drift }),
        },
        Err(e) => Outcome {
            passed: false,
            summary: format!("error: {e}"),
            result: json!({ "error": e.to_string() }),
        },
    };
    ("superdiagonal-seminorms".to_string(), outcome)
}

/// `(name, outcome)` for each selftest check; the stream of check `i` is `i`.
pub fn checks(seed: u64) -> Vec<(String, Outcome)> {
    vec![
        run_probe("c-star-identity", c_star_identity, 1e-10, seed, 0),
        run_probe("submultiplicativity", submultiplicative, 1e-10, seed, 1),
        run_probe("spectral-mapping", spectral_mapping, 1e-8, seed, 2),
        l_example(),
    ]
}
