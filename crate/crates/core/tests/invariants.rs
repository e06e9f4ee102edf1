//! Algebraic invariants of block algebras and towers over seeded random
//! instances.

use num_complex::Complex64;
use proptest::prelude::*;

use procstar_core::calculus::{pro_spectrum, seminorm};
use procstar_core::linalg::{hausdorff_distance, one_sided_distance};
use procstar_core::{random, BlockAlgebra, CoherentElement, FunctionDescriptor, Tower};

fn algebra_strategy() -> impl Strategy<Value = BlockAlgebra> {
    prop::collection::vec(1usize..=5, 1..=3).prop_map(|sizes| BlockAlgebra::new(sizes).unwrap())
}

fn rel(x: f64) -> f64 {
    1e-12 * x.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn c_star_identity(alg in algebra_strategy(), seed in any::<u64>()) {
        let x = random::element(&alg, &mut random::rng(seed, 0));
        let n = x.norm().unwrap();
        let lhs = (&x.adjoint() * &x).norm().unwrap();
        prop_assert!((lhs - n * n).abs() <= rel(n * n));
    }

    #[test]
    fn submultiplicative(alg in algebra_strategy(), seed in any::<u64>()) {
        let mut r = random::rng(seed, 0);
        let (x, y) = (random::element(&alg, &mut r), random::element(&alg, &mut r));
        let (nx, ny) = (x.norm().unwrap(), y.norm().unwrap());
        prop_assert!((&x * &y).norm().unwrap() <= nx * ny + rel(nx * ny));
    }

    #[test]
    fn involution_is_isometric(alg in algebra_strategy(), seed in any::<u64>()) {
        let x = random::element(&alg, &mut random::rng(seed, 0));
        let n = x.norm().unwrap();
        prop_assert!((x.adjoint().norm().unwrap() - n).abs() <= rel(n));
    }

    #[test]
    fn normal_norm_is_spectral_radius(alg in algebra_strategy(), seed in any::<u64>()) {
        let x = random::normal_element(&alg, &mut random::rng(seed, 0));
        let n = x.norm().unwrap();
        prop_assert!((x.spectral_radius().unwrap() - n).abs() <= 1e-10 * n.max(1.0));
    }

    #[test]
    fn spectral_mapping_for_normal(alg in algebra_strategy(), seed in any::<u64>(), k in 1u32..6) {
        let x = random::normal_element(&alg, &mut random::rng(seed, 0));
        let f = FunctionDescriptor::polynomial_z(&[
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.25),
        ]);
        let sp = x.spectrum(1e-8).unwrap();
        let image: Vec<Complex64> = sp.iter().map(|&z| f.eval(z).unwrap()).collect();
        let fx = x.apply_function(&f, 1e-10).unwrap();
        let d = hausdorff_distance(&fx.spectrum(1e-8).unwrap(), &image);
        let scale = image.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(d <= 1e-8 * scale, "distance {d}");

        let g = FunctionDescriptor::ExpI { t: k as f64 / 3.0 };
        let h = random::self_adjoint(&alg, &mut random::rng(seed, 1));
        let sp = h.spectrum(1e-8).unwrap();
        let image: Vec<Complex64> = sp.iter().map(|&z| g.eval(z).unwrap()).collect();
        let gh = h.apply_function(&g, 1e-10).unwrap();
        prop_assert!(hausdorff_distance(&gh.spectrum(1e-8).unwrap(), &image) <= 1e-8);
    }

    #[test]
    fn seminorms_increase_and_spectra_nest(seed in any::<u64>(), top in 2usize..=6) {
        let t = Tower::product(|k| k, top).unwrap();
        let x = random::element(&t.algebra(top).unwrap(), &mut random::rng(seed, 0));
        let e = CoherentElement::from_top(&t, top, x).unwrap();
        for p in 1..top {
            let (lo, hi) = (seminorm(&e, p).unwrap(), seminorm(&e, p + 1).unwrap());
            prop_assert!(lo <= hi + rel(hi));
            let (sp_lo, sp_hi) = (
                e.project(p).unwrap().spectrum(1e-8).unwrap(),
                e.project(p + 1).unwrap().spectrum(1e-8).unwrap(),
            );
            prop_assert!(one_sided_distance(&sp_lo, &sp_hi) <= 1e-8);
        }
        let report = pro_spectrum(&e, top, 1e-8).unwrap();
        let top_sp = e.project(top).unwrap().spectrum(1e-8).unwrap();
        prop_assert!(hausdorff_distance(&report.points, &top_sp) <= 1e-8);
    }

    #[test]
    fn connecting_maps_are_surjective_and_preimages_exact(seed in any::<u64>(), p in 1usize..=5) {
        let t = procstar_core::elements::twisted_product_tower(6, seed).unwrap();
        let map = t.connecting_map(p).unwrap();
        prop_assert!(map.map().is_surjective());
        let y = random::element(&t.algebra(p).unwrap(), &mut random::rng(seed, 1));
        let x = map.map().preimage(&y).unwrap();
        prop_assert!(map.apply(&x).unwrap().distance(&y).unwrap() <= 1e-12);
    }
}
