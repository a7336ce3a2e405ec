mod common;

use common::{defocusing_mid, kdv_mid, mkdv_mid, Point};
use gkdv_modstab::floquet::{
    coefficient_matrix_at, counting_radius, det3c, error_exponents, track_branches, EvansOracle,
    FloquetOptions,
};
use gkdv_modstab::modulation::{build_r, cubic_roots, ModulationCubic};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oracle(p: &Point, ode_tol: f64) -> EvansOracle {
    EvansOracle::new(
        &p.orbit(),
        &p.f,
        FloquetOptions {
            ode_tol,
            ..Default::default()
        },
    )
}

fn cubic(p: &Point) -> ModulationCubic {
    build_r(&p.table())
}

proptest! {
    #[test]
    fn coefficient_matrix_is_trace_free(
        df in -5.0f64..5.0,
        d2f in -5.0f64..5.0,
        ux in -2.0f64..2.0,
        c in -2.0f64..2.0,
        re in -1.0f64..1.0,
        im in -1.0f64..1.0,
    ) {
        let h = coefficient_matrix_at(df, d2f, ux, c, Complex64::new(re, im));
        prop_assert_eq!(h[0][0] + h[1][1] + h[2][2], Complex64::new(0.0, 0.0));
    }
}

#[test]
fn constant_coefficient_reduction() {
    // without nonlinearity the characteristic roots solve r^3 - c r + mu = 0
    for (c, mu) in [(1.0, 0.3), (-0.5, 0.1), (2.0, -0.7)] {
        let h = coefficient_matrix_at(0.0, 0.0, 0.0, c, Complex64::new(mu, 0.0));
        for r in cubic_roots(c, -mu) {
            let mut m = h;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] -= r;
            }
            assert!(det3c(&m).norm() <= 1e-12, "c={c} mu={mu} r={r}");
        }
    }
}

#[test]
fn monodromy_has_unit_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [kdv_mid(), mkdv_mid(), defocusing_mid()] {
        let o = oracle(&p, 1e-12);
        for _ in 0..6 {
            let mu = Complex64::from_polar(
                rng.random_range(0.0..1.0f64).sqrt(),
                rng.random_range(0.0..std::f64::consts::TAU),
            );
            let m = o.monodromy(mu).unwrap();
            assert!(
                (m.det - 1.0).norm() <= 1e-10,
                "{} mu={mu}: {}",
                p.label,
                m.det
            );
        }
    }
}

#[test]
fn monodromy_respects_conjugation() {
    let p = kdv_mid();
    let o = oracle(&p, 1e-12);
    let mu = Complex64::new(0.03, 0.2);
    let a = o.monodromy(mu).unwrap().matrix;
    let b = o.monodromy(mu.conj()).unwrap().matrix;
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.norm()));
    for i in 0..3 {
        for j in 0..3 {
            assert!((a[i][j].conj() - b[i][j]).norm() <= 1e-10 * scale);
        }
    }
    let d = o.evans(mu, 0.05).unwrap();
    let e = o.evans(mu.conj(), -0.05).unwrap();
    assert!((d.conj() - e).norm() <= 1e-10 * d.norm().max(1e-12));
}

#[test]
fn origin_is_an_eigenvalue() {
    for p in [kdv_mid(), mkdv_mid(), defocusing_mid()] {
        let o = oracle(&p, 1e-12);
        let d00 = o.evans(Complex64::new(0.0, 0.0), 0.0).unwrap();
        assert!(d00.norm() <= 1e-8, "{}: {d00}", p.label);
        // u_x is T-periodic: (u_x, u_xx, u_xxx) = (0, u_xx(0), 0) at the left turning point
        let m = o.monodromy(Complex64::new(0.0, 0.0)).unwrap().matrix;
        let orbit = p.orbit();
        let (a, c) = (p.params.a, p.params.c);
        let uxx0 = a + c * orbit.u_minus - p.f.f(orbit.u_minus);
        for i in 0..3 {
            let want = if i == 1 { uxx0 } else { 0.0 };
            assert!(
                (m[i][1] * uxx0 - want).norm() <= 1e-8 * uxx0.abs(),
                "{} row {i}",
                p.label
            );
        }
    }
}

#[test]
fn three_roots_near_the_origin() {
    let p = kdv_mid();
    let o = oracle(&p, 1e-12);
    let r = cubic(&p);
    assert_eq!(o.winding_count(0.05, counting_radius(&r, 0.05)).unwrap(), 3);
    // at kappa = 0 the three branches meet at the origin
    assert_eq!(o.winding_count(0.0, counting_radius(&r, 0.02)).unwrap(), 3);
}

#[test]
fn branch_errors_are_quadratic_in_kappa() {
    let kappas = [0.02, 0.04, 0.08, 0.16];
    for p in [kdv_mid(), mkdv_mid(), defocusing_mid()] {
        let o = oracle(&p, 1e-12);
        let branches = track_branches(&o, &cubic(&p), &kappas).unwrap();
        for s in error_exponents(&branches) {
            assert!(s >= 1.8, "{}: exponent {s}", p.label);
        }
        for b in &branches {
            for r in b.residuals {
                assert!(r <= 1e-10, "{}: residual {r:e}", p.label);
            }
        }
    }
}

#[test]
fn stable_branches_lie_on_the_imaginary_axis() {
    for p in [kdv_mid(), mkdv_mid(), defocusing_mid()] {
        let r = cubic(&p);
        if r.discriminant <= 0.0 {
            continue;
        }
        let o = oracle(&p, 1e-12);
        for b in track_branches(&o, &r, &[0.02, 0.04]).unwrap() {
            for mu in b.mu_values {
                assert!(mu.re.abs() <= 1e-6 * mu.norm(), "{}: {mu}", p.label);
            }
        }
    }
}

#[test]
fn halving_ode_tolerance_moves_roots_little() {
    let p = kdv_mid();
    let r = cubic(&p);
    let coarse = track_branches(&oracle(&p, 1e-12), &r, &[0.04]).unwrap();
    let fine = track_branches(&oracle(&p, 5e-13), &r, &[0.04]).unwrap();
    for (a, b) in coarse[0].mu_values.iter().zip(&fine[0].mu_values) {
        assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }
}
