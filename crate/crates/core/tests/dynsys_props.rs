use num_complex::Complex;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use shadowlab_core::dynsys::{classify_fixed_point, forward_orbit};
use shadowlab_core::{FixedPointKind, PlaneMap, Polynomial, ProductMap, SkewMap, SpacePoint, C64};

fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0xd1a5), failure_persistence: None, ..Config::default() }
}

fn disk(radius: f64) -> impl Strategy<Value = C64> {
    (0.0..radius, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
}

/// `λ z + z² (+ c₃ z³)`, fixing the origin.
fn origin_fixing(lambda: impl Strategy<Value = C64>) -> impl Strategy<Value = Polynomial<f64>> {
    (lambda, disk(1.0), any::<bool>()).prop_map(|(l, c3, cubic)| {
        let mut c = vec![Complex::new(0.0, 0.0), l, Complex::new(1.0, 0.0)];
        if cubic {
            c.push(c3 * 0.5 + Complex::new(0.5, 0.0));
        }
        Polynomial::new(c).unwrap()
    })
}

fn point(radius: f64) -> impl Strategy<Value = SpacePoint<f64>> {
    (disk(radius), disk(radius)).prop_map(|(z, w)| SpacePoint::new(z, w))
}

fn maps_onto(map: &dyn PlaneMap<f64>, target: SpacePoint<f64>) -> Result<(), TestCaseError> {
    for x in map.inverse_step(target).unwrap() {
        let y = map.apply(x);
        prop_assert!((y.z - target.z).norm() <= 1e-8 && (y.w - target.w).norm() <= 1e-8, "{x:?} -> {y:?}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn product_preimages_round_trip(p in origin_fixing(disk(1.0)), q in origin_fixing(disk(1.0)), t in point(1.5)) {
        let map = ProductMap::new(p, q).unwrap();
        maps_onto(&map, t)?;
    }

    #[test]
    fn skew_preimages_round_trip(a in disk(0.2), b in disk(0.01), c in disk(0.05), t in point(1.0)) {
        let map = SkewMap::quadratic(a, b, c).unwrap();
        maps_onto(&map, t)?;
        prop_assert_eq!(map.inverse_step(t).unwrap().len(), 4);
    }

    #[test]
    fn product_preimage_count(p in origin_fixing(disk(1.0)), q in origin_fixing(disk(1.0)), t in point(1.5)) {
        let expected = p.degree() * q.degree();
        let map = ProductMap::new(p, q).unwrap();
        prop_assert_eq!(map.inverse_step(t).unwrap().len(), expected);
        // a critical value forces a double root, still counted twice
        let crit = map.q().critical_points().unwrap()[0];
        let t2 = SpacePoint::new(t.z, map.q().evaluate(crit));
        prop_assert_eq!(map.inverse_step(t2).unwrap().len(), expected);
    }

    #[test]
    fn geometric_orbits_converge(
        p in origin_fixing((0.05..0.7f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))),
        q in origin_fixing((0.05..0.7f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))),
        x in point(0.1),
    ) {
        prop_assert_eq!(classify_fixed_point(&p).unwrap().kind, FixedPointKind::Geometric);
        let map = ProductMap::new(p, q).unwrap();
        let orbit = forward_orbit(&map, x, 200, 1e6);
        prop_assert!(!orbit.escaped);
        let size: Vec<f64> = orbit.points.iter().map(|y| y.z.norm() + y.w.norm()).collect();
        prop_assert!(*size.last().unwrap() < 1e-12);
        // eventually monotone: once below 1e-3 the size never increases
        let start = size.iter().position(|&s| s < 1e-3).unwrap();
        prop_assert!(size[start..].windows(2).all(|w| w[1] <= w[0]));
    }
}
