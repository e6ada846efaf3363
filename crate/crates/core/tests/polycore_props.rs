use num_complex::Complex;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use shadowlab_core::{Polynomial, C64};

fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x5eed), failure_persistence: None, ..Config::default() }
}

fn unit_disk() -> impl Strategy<Value = C64> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
}

/// Coefficients in the unit disk, leading coefficient of modulus at least 1/2.
fn polynomial(max_degree: usize) -> impl Strategy<Value = Polynomial<f64>> {
    (1..=max_degree)
        .prop_flat_map(|d| (prop::collection::vec(unit_disk(), d), 0.5..1.0f64, 0.0..std::f64::consts::TAU))
        .prop_map(|(mut c, lr, lt)| {
            c.push(Complex::from_polar(lr, lt));
            Polynomial::new(c).unwrap()
        })
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn roots_have_small_residual(p in polynomial(8)) {
        for r in p.all_roots().unwrap() {
            prop_assert!(p.evaluate(r).norm() <= 1e-8, "residual {} at {r}", p.evaluate(r).norm());
        }
    }

    #[test]
    fn root_sum_matches_vieta(p in polynomial(8)) {
        let d = p.degree();
        let roots = p.all_roots().unwrap();
        prop_assert_eq!(roots.len(), d);
        let sum: C64 = roots.iter().sum();
        let expected = -p.coeff(d - 1) / p.leading();
        prop_assert!((sum - expected).norm() <= 1e-8, "{sum} vs {expected}");
    }

    #[test]
    fn preimages_contain_the_source(p in polynomial(8), z in unit_disk().prop_map(|z| z * 2.0)) {
        let pre = p.preimages_of_value(p.evaluate(z)).unwrap();
        let best = pre.iter().map(|x| (x - z).norm()).fold(f64::INFINITY, f64::min);
        prop_assert!(best <= 1e-8, "closest preimage at {best}");
    }
}
