//! Dense real polynomials in ascending coefficient order.
//!
//! Only what the potential machinery needs: Horner evaluation, calculus,
//! Taylor shifts, and isolation of all real roots.

/// `coeffs[k]` multiplies `u^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// Sum of the absolute values of the terms at `u`; the natural magnitude
    /// against which a computed value of `eval(u)` is judged.
    pub fn term_scale(&self, u: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * u.abs() + c.abs())
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Poly {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(0.0)
                        + other.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Coefficients of `p(u0 + s)` in powers of `s`.
    pub fn taylor_shift(&self, u0: f64) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for k in (i..n - 1).rev() {
                c[k] += u0 * c[k + 1];
            }
        }
        c
    }

    /// All distinct real roots in increasing order.
    ///
    /// Roots of the derivative split the line into monotone pieces; each
    /// piece holding a sign change is refined by safeguarded Newton. Double
    /// roots that touch zero at a critical point are reported once.
    pub fn real_roots(&self) -> Vec<f64> {
        let d = self.degree();
        if self.is_zero() || d == 0 {
            return Vec::new();
        }
        let lead = self.coeffs[d];
        if d == 1 {
            return vec![-self.coeffs[0] / lead];
        }
        let bound = 1.0
            + self.coeffs[..d]
                .iter()
                .map(|c| (c / lead).abs())
                .fold(0.0, f64::max);
        let crit = self.derivative().real_roots();
        let mut knots = Vec::with_capacity(crit.len() + 2);
        knots.push(-bound);
        knots.extend(crit.iter().copied().filter(|x| x.abs() < bound));
        knots.push(bound);

        let dp = self.derivative();
        let mut roots: Vec<f64> = Vec::new();
        for w in knots.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (flo, fhi) = (self.eval(lo), self.eval(hi));
            if flo == 0.0 {
                push_unique(&mut roots, lo);
                continue;
            }
            if flo.signum() != fhi.signum() && fhi != 0.0 {
                push_unique(&mut roots, refine_root(self, &dp, lo, hi));
            }
        }
        // Even-multiplicity roots sit on critical points without a sign change.
        for &x in &crit {
            if self.eval(x).abs() <= 64.0 * f64::EPSILON * self.term_scale(x) {
                push_unique(&mut roots, x);
            }
        }
        if let Some(&last) = knots.last() {
            if self.eval(last) == 0.0 {
                push_unique(&mut roots, last);
            }
        }
        roots.sort_by(|a, b| a.total_cmp(b));
        roots
    }
}

fn push_unique(roots: &mut Vec<f64>, x: f64) {
    let tol = 1e-12 * x.abs().max(1.0);
    if !roots.iter().any(|r| (r - x).abs() <= tol) {
        roots.push(x);
    }
}

/// Newton with a bisection fallback on a bracket `[lo, hi]` holding one sign change.
pub(crate) fn refine_root(p: &Poly, dp: &Poly, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = p.eval(lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = p.eval(x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let dfx = dp.eval(x);
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x.abs().max(f64::MIN_POSITIVE)
            || hi - lo <= 4.0 * f64::EPSILON * x.abs()
        {
            return next;
        }
        x = next;
    }
    x
}
