use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use shadowlab_core::basin::GridBox;
use shadowlab_core::hypmetric::{disk_distance, punctured_lower_bound, GeodesicField};
use shadowlab_core::{GridDomain, C64};

fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x4b0b), failure_persistence: None, ..Config::default() }
}

fn disk(radius: f64) -> impl Strategy<Value = C64> {
    (0.0..radius, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
}

fn annulus(inner: f64, outer: f64) -> impl Strategy<Value = C64> {
    (inner..outer, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
}

fn unit_disk_grid(res: usize) -> GridDomain {
    GridDomain::from_predicate(GridBox::square(1.05), res, |z| z.norm() < 1.0).unwrap()
}

proptest! {
    #![proptest_config(config(512))]

    #[test]
    fn disk_distance_is_a_metric(a in disk(0.99), b in disk(0.99), c in disk(0.99)) {
        let ab = disk_distance(a, b).unwrap();
        prop_assert!((ab - disk_distance(b, a).unwrap()).abs() <= 1e-12);
        let ac = disk_distance(a, c).unwrap();
        let cb = disk_distance(c, b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert!(disk_distance(a, a).unwrap() == 0.0);
    }

    #[test]
    fn disk_distance_is_moebius_invariant(a in disk(0.9), b in disk(0.9), c in disk(0.9), theta in 0.0..std::f64::consts::TAU) {
        let rot = C64::from_polar(1.0, theta);
        let phi = |z: C64| rot * (z - c) / (C64::new(1.0, 0.0) - c.conj() * z);
        let before = disk_distance(a, b).unwrap();
        let after = disk_distance(phi(a), phi(b)).unwrap();
        prop_assert!((before - after).abs() <= 1e-10 * before.max(1.0), "{before} vs {after}");
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn grid_bounds_sandwich_exact_distance(a in disk(0.95), b in disk(0.95)) {
        let grid = unit_disk_grid(512);
        let field = GeodesicField::new(&grid, a).unwrap();
        let bound = field.bound_to(b).unwrap();
        let exact = disk_distance(a, b).unwrap();
        prop_assert!(bound.lower <= exact && exact <= bound.upper, "{bound:?} vs {exact}");
    }

    #[test]
    fn larger_domain_gives_smaller_upper_bound(a in disk(0.5), b in disk(0.5), shrink in 0.55..0.9f64) {
        let big = unit_disk_grid(256);
        let small = GridDomain::from_predicate(GridBox::square(1.05), 256, |z| {
            z.norm() < 1.0 && z.re.abs() < shrink && z.im.abs() < shrink
        })
        .unwrap();
        let ub = GeodesicField::new(&big, a).unwrap().bound_to(b).unwrap().upper;
        let us = GeodesicField::new(&small, a).unwrap().bound_to(b).unwrap().upper;
        prop_assert!(ub <= us + 1e-12, "{ub} > {us}");
    }

    #[test]
    fn punctured_bound_below_grid_upper(x in annulus(0.15, 1.7), y in annulus(0.15, 1.7)) {
        let r = 2.0;
        let grid = GridDomain::from_predicate(GridBox::square(2.05), 384, |z| {
            let m = z.norm();
            m > 0.0 && m < r
        })
        .unwrap();
        // the puncture must be a hole of the raster
        let grid = GridDomain::from_bitmap(
            grid.bbox(),
            grid.resolution(),
            (0..grid.resolution() * grid.resolution())
                .map(|k| {
                    let z = grid.center_of_index(k);
                    z.norm() > 1.5 * grid.cell_diagonal() && z.norm() < r
                })
                .collect(),
        )
        .unwrap()
        .with_boundary_distance();
        let field = GeodesicField::new(&grid, x).unwrap();
        let lower = punctured_lower_bound(x, y, r).unwrap();
        let upper = field.bound_to(y).unwrap().upper + field.cell_slack(y).unwrap();
        prop_assert!(lower <= upper, "{lower} > {upper}");
    }
}
