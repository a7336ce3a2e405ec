mod common;

use common::{rel, sample_points, Point};
use gkdv_modstab::calculus::gradient_table;
use gkdv_modstab::jordan::shooting_period;
use gkdv_modstab::potential::{find_turning_points, wells, NonlinearitySpec, WaveParams};
use gkdv_modstab::quadrature::{action_identity_residual, compute_conserved, QuadratureConfig};

fn conserved(p: &Point, cfg: &QuadratureConfig) -> gkdv_modstab::quadrature::ConservedSet {
    compute_conserved(&p.orbit(), &p.f, cfg).unwrap()
}

#[test]
fn period_matches_shooting() {
    for p in [
        common::kdv_mid(),
        common::mkdv_mid(),
        common::defocusing_mid(),
    ] {
        let o = p.orbit();
        let t = conserved(&p, &QuadratureConfig::default()).T;
        let shot = shooting_period(&o, &p.f, t, 1e-13).unwrap();
        assert!(rel(t, shot) < 1e-8, "{}: {t} vs {shot}", p.label);
    }
}

#[test]
fn action_identity_everywhere() {
    for p in sample_points() {
        let set = conserved(&p, &QuadratureConfig::default());
        assert!(set.T > 0.0);
        let r = action_identity_residual(&set, &p.params);
        assert!(
            r.abs() <= 1e-10 * set.K.abs(),
            "{}: {r:e} vs K = {}",
            p.label,
            set.K
        );
    }
}

#[test]
fn node_doubling_converges() {
    let fine = QuadratureConfig {
        n_nodes: 192,
        ..Default::default()
    };
    for p in sample_points() {
        let a = conserved(&p, &QuadratureConfig::default());
        let b = conserved(&p, &fine);
        // odd symmetry can make M or P vanish; measure those against the set
        let floor = a.as_array().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.as_array().iter().zip(b.as_array()) {
            let scale = x.abs().max(y.abs()).max(1e-3 * floor);
            assert!((x - y).abs() <= 1e-12 * scale, "{}: {x} vs {y}", p.label);
        }
    }
}

#[test]
fn harmonic_limit_of_means() {
    for (f, a, c) in [
        (NonlinearitySpec::kdv(), 0.0, 1.0),
        (NonlinearitySpec::mkdv_focusing(), 0.1, 1.0),
        (NonlinearitySpec::mkdv_defocusing(), 0.2, -1.0),
    ] {
        let w = wells(a, c, &f)[0];
        let e = w.e_min + 1e-6 * w.e_min.abs();
        let o = find_turning_points(&WaveParams::new(a, e, c), &f).unwrap();
        let s = compute_conserved(&o, &f, &QuadratureConfig::default()).unwrap();
        assert!(rel(s.T, w.harmonic_period()) < 1e-2);
        assert!(rel(s.M / s.T, w.u_min) < 1e-2);
        assert!(rel(s.P / s.T, w.u_min * w.u_min) < 1e-2);
    }
}

#[test]
fn integrals_are_continuous_in_energy() {
    let f = NonlinearitySpec::kdv();
    let es: Vec<f64> = (0..25).map(|k| -0.15 + 0.12 * k as f64 / 24.0).collect();
    let sets: Vec<_> = es
        .iter()
        .map(|&e| {
            let p = WaveParams::new(0.0, e, 1.0);
            let o = find_turning_points(&p, &f).unwrap();
            let t = gradient_table(&p, &f, &Default::default()).unwrap();
            (
                compute_conserved(&o, &f, &QuadratureConfig::default()).unwrap(),
                t,
            )
        })
        .collect();
    for k in 0..es.len() - 1 {
        let de = es[k + 1] - es[k];
        let (s0, t0) = &sets[k];
        let (s1, t1) = &sets[k + 1];
        let grads = [
            (s0.T, s1.T, t0.grad_t[1], t1.grad_t[1]),
            (s0.M, s1.M, t0.grad_m[1], t1.grad_m[1]),
            (s0.P, s1.P, t0.grad_p[1], t1.grad_p[1]),
            (s0.H, s1.H, t0.grad_h[1], t1.grad_h[1]),
            (s0.K, s1.K, t0.conserved.T, t1.conserved.T),
        ];
        for (q0, q1, g0, g1) in grads {
            let bound = 2.0 * g0.abs().max(g1.abs()) * de;
            assert!(
                (q1 - q0).abs() <= bound,
                "jump {} > {bound} near E = {}",
                q1 - q0,
                es[k]
            );
        }
    }
}
