mod common;

use gkdv_modstab::potential::{
    check_domain, eval_potential, find_turning_points, wells, NonlinearitySpec, WaveParams,
};
use gkdv_modstab::Error;
use proptest::prelude::*;

#[test]
fn potential_examples() {
    let f = NonlinearitySpec::kdv();
    let p = WaveParams::new(0.0, 0.0, 1.0);
    assert_eq!(eval_potential(0.0, &p, &f), 0.0);
    assert!((eval_potential(1.0, &p, &f) + 1.0 / 6.0).abs() < 1e-15);
    assert!((eval_potential(-1.0, &p, &f) + 5.0 / 6.0).abs() < 1e-15);
}

#[test]
fn kdv_turning_points() {
    let o =
        find_turning_points(&WaveParams::new(0.0, -0.1, 1.0), &NonlinearitySpec::kdv()).unwrap();
    // roots of u^3 - 1.5 u^2 + 0.3
    for u in [o.u_minus, o.u_plus] {
        assert!((u.powi(3) - 1.5 * u * u + 0.3).abs() < 1e-13);
    }
    assert!((o.u_minus - 0.568).abs() < 1e-3 && (o.u_plus - 1.330).abs() < 1e-3);
    assert!(o.dv_minus < 0.0 && o.dv_plus > 0.0);
    assert!(o.period > 0.0);
}

#[test]
fn domain_boundaries() {
    let kdv = NonlinearitySpec::kdv();
    assert!(check_domain(&WaveParams::new(0.0, -0.1, 1.0), &kdv).in_domain);
    let below = check_domain(&WaveParams::new(0.0, -0.2, 1.0), &kdv);
    assert!(!below.in_domain && below.diagnostic.contains("well bottom"));
    let above = find_turning_points(&WaveParams::new(0.0, 0.05, 1.0), &kdv);
    assert!(matches!(above, Err(Error::NoPeriodicOrbit(_))));
    let concave = check_domain(
        &WaveParams::new(0.0, -1.0, 1.0),
        &NonlinearitySpec::mkdv_defocusing(),
    );
    assert!(!concave.in_domain && concave.diagnostic.contains("no local minimum"));
}

#[test]
fn bottom_of_well_collapse() {
    let o = find_turning_points(
        &WaveParams::new(0.0, -1.0 / 6.0 + 1e-10, 1.0),
        &NonlinearitySpec::kdv(),
    )
    .unwrap();
    assert!((o.u_minus - 1.0).abs() < 1e-4 && (o.u_plus - 1.0).abs() < 1e-4);
}

fn kdv_well_energy() -> impl Strategy<Value = f64> {
    (0.01f64..0.99).prop_map(|s| -1.0 / 6.0 * (1.0 - s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn turning_points_solve_energy_equation(e in kdv_well_energy(), a in -0.05f64..0.05, c in 0.5f64..2.0) {
        let f = NonlinearitySpec::kdv();
        let p = WaveParams::new(a, e, c);
        if let Ok(o) = find_turning_points(&p, &f) {
            for u in [o.u_minus, o.u_plus] {
                prop_assert!((e - eval_potential(u, &p, &f)).abs() <= 1e-12 * e.abs().max(1.0));
            }
            // E > V strictly inside
            for k in 1..20 {
                let u = o.u_minus + (o.u_plus - o.u_minus) * k as f64 / 20.0;
                prop_assert!(e - eval_potential(u, &p, &f) > 0.0);
            }
        } else {
            prop_assert!(!check_domain(&p, &f).in_domain);
        }
    }

    #[test]
    fn failing_domain_check_never_yields_orbit(e in -1.0f64..1.0, a in -0.5f64..0.5, c in -2.0f64..2.0, which in 0usize..3) {
        let f = [NonlinearitySpec::kdv(), NonlinearitySpec::mkdv_focusing(), NonlinearitySpec::mkdv_defocusing()][which].clone();
        let p = WaveParams::new(a, e, c);
        let check = check_domain(&p, &f);
        prop_assert_eq!(check.in_domain, find_turning_points(&p, &f).is_ok());
    }
}

#[test]
fn turning_points_monotone_across_well() {
    let f = NonlinearitySpec::mkdv_focusing();
    let w = wells(0.1, 1.0, &f)[0];
    let mut last: Option<(f64, f64)> = None;
    for k in 1..40 {
        let e = w.energy_at(k as f64 / 40.0).unwrap();
        let o = find_turning_points(&WaveParams::new(0.1, e, 1.0), &f).unwrap();
        assert!(o.u_minus < w.u_min && w.u_min < o.u_plus);
        if let Some((lo, hi)) = last {
            assert!(o.u_minus < lo && o.u_plus > hi);
        }
        last = Some((o.u_minus, o.u_plus));
    }
}
