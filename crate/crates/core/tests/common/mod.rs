#![allow(dead_code)]

use gkdv_modstab::calculus::{gradient_table_with, BracketTable, GradientOptions};
use gkdv_modstab::potential::{
    find_turning_points_with, wells, NonlinearitySpec, OrbitOptions, PeriodicOrbit, WaveParams,
};

/// A parameter point inside a chosen well.
#[derive(Debug, Clone)]
pub struct Point {
    pub label: String,
    pub f: NonlinearitySpec,
    pub params: WaveParams,
    pub hint: Option<f64>,
}

impl Point {
    /// `frac` of the way from the bottom of well `well` to its barrier.
    pub fn in_well(f: NonlinearitySpec, a: f64, c: f64, well: usize, frac: f64) -> Point {
        let w = wells(a, c, &f)[well];
        let e = w.energy_at(frac).expect("bounded well");
        Point {
            label: format!(
                "{}(a={a}, c={c}, well {well}, {frac})",
                f.preset.clone().unwrap_or_default()
            ),
            f,
            params: WaveParams::new(a, e, c),
            hint: (well > 0).then_some(w.u_min),
        }
    }

    pub fn orbit_options(&self) -> OrbitOptions {
        OrbitOptions {
            hint: self.hint,
            ..Default::default()
        }
    }

    pub fn orbit(&self) -> PeriodicOrbit {
        find_turning_points_with(&self.params, &self.f, &self.orbit_options()).unwrap()
    }

    pub fn table(&self) -> BracketTable {
        let opts = GradientOptions {
            orbit: self.orbit_options(),
            ..Default::default()
        };
        gradient_table_with(&self.params, &self.f, &opts).unwrap()
    }
}

pub fn kdv_mid() -> Point {
    Point {
        label: "kdv(0, -0.1, 1)".into(),
        f: NonlinearitySpec::kdv(),
        params: WaveParams::new(0.0, -0.1, 1.0),
        hint: None,
    }
}

pub fn mkdv_mid() -> Point {
    Point {
        label: "mkdv_focusing(0.1, -0.07, 1)".into(),
        f: NonlinearitySpec::mkdv_focusing(),
        params: WaveParams::new(0.1, -0.07, 1.0),
        hint: None,
    }
}

pub fn defocusing_mid() -> Point {
    Point {
        label: "mkdv_defocusing(0.2, -0.01, -1)".into(),
        f: NonlinearitySpec::mkdv_defocusing(),
        params: WaveParams::new(0.2, -0.01, -1.0),
        hint: None,
    }
}

/// Ten points spread over the three presets and several wells.
pub fn sample_points() -> Vec<Point> {
    let kdv = NonlinearitySpec::kdv;
    let foc = NonlinearitySpec::mkdv_focusing;
    let defoc = NonlinearitySpec::mkdv_defocusing;
    vec![
        Point::in_well(kdv(), 0.0, 1.0, 0, 0.2),
        Point::in_well(kdv(), 0.0, 1.0, 0, 0.5),
        Point::in_well(kdv(), 0.0, 1.0, 0, 0.8),
        Point::in_well(kdv(), 0.05, 1.3, 0, 0.5),
        Point::in_well(kdv(), -0.1, 0.8, 0, 0.4),
        Point::in_well(foc(), 0.1, 1.0, 0, 0.5),
        Point::in_well(foc(), 0.1, 1.0, 1, 0.3),
        Point::in_well(foc(), 0.0, 1.5, 0, 0.6),
        Point::in_well(defoc(), 0.2, -1.0, 0, 0.5),
        Point::in_well(defoc(), 0.0, -1.2, 0, 0.4),
    ]
}

/// Dense Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let m = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= m * a[k][j];
            }
            b[i] -= m * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

impl Point {
    /// Profile sampled with the same parameter steps as `table`.
    pub fn grid(&self, table: &BracketTable) -> gkdv_modstab::jordan::PeriodicGrid {
        let opts = gkdv_modstab::jordan::ProfileOptions {
            steps: Some(table.steps),
            ..Default::default()
        };
        gkdv_modstab::jordan::sample_profile(&self.orbit(), &self.f, &opts).unwrap()
    }
}

/// Jordan chain residuals with table and profile sharing the steps `base`
/// scaled by `rel_step / 1e-4`, Richardson off.
pub fn residuals_at(p: &Point, base: [f64; 3], rel_step: f64) -> [f64; 6] {
    use gkdv_modstab::calculus::FDConfig;
    use gkdv_modstab::jordan::{build_jordan_basis, sample_profile, verify_jordan, ProfileOptions};
    let fd = FDConfig {
        rel_step,
        richardson: false,
    };
    let steps = base.map(|s| s * rel_step / 1e-4);
    let opts = GradientOptions {
        fd,
        steps: Some(steps),
        orbit: p.orbit_options(),
        ..Default::default()
    };
    let t = gradient_table_with(&p.params, &p.f, &opts).unwrap();
    let profile = ProfileOptions {
        fd,
        steps: Some(steps),
        ..Default::default()
    };
    let g = sample_profile(&p.orbit(), &p.f, &profile).unwrap();
    let b = build_jordan_basis(&g, &t).unwrap();
    verify_jordan(&b, &g).chain_residuals()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
