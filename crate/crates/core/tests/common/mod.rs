//! Reference computations kept apart from the library's own code paths.

#![allow(dead_code)]

use marketrmt::matrix::SquareMatrix;
use marketrmt::rmt::SplitMix64;

/// `C_ij = (1/T) sum_t r_i(t) r_j(t)` with plain nested loops.
pub fn naive_correlation(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let t = rows[0].len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..t {
                s += rows[i][k] * rows[j][k];
            }
            c[i][j] = s / t as f64;
        }
    }
    c
}

/// Rows standardized by hand (population moments).
pub fn standardize(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            let n = r.len() as f64;
            let m = r.iter().sum::<f64>() / n;
            let s = (r.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
            r.iter().map(|x| (x - m) / s).collect()
        })
        .collect()
}

pub fn uniform_panel(n: usize, t: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    (0..n).map(|_| (0..t).map(|_| rng.next_f64() - 0.5).collect()).collect()
}

/// Double-double value `hi + lo`, enough precision to place repeated roots.
#[derive(Clone, Copy, Debug)]
struct Dd(f64, f64);

impl Dd {
    fn from(x: f64) -> Self {
        Dd(x, 0.0)
    }
    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }
    fn prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Dd(p, a.mul_add(b, -p))
    }
    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.0, o.0);
        let lo = s.1 + self.1 + o.1;
        Dd::two_sum(s.0, lo)
    }
    fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }
    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }
    fn mul(self, o: Dd) -> Dd {
        let p = Dd::prod(self.0, o.0);
        let lo = p.1 + self.0 * o.1 + self.1 * o.0;
        Dd::two_sum(p.0, lo)
    }
    fn sqrt(self) -> Dd {
        if self.0 <= 0.0 {
            return Dd::from(0.0);
        }
        let s = self.0.sqrt();
        let r = self.sub(Dd::prod(s, s));
        Dd::two_sum(s, r.0 / (2.0 * s))
    }
    fn value(self) -> f64 {
        self.0 + self.1
    }
}

/// Real roots of the characteristic polynomial of a symmetric 3x3 matrix,
/// descending. Coefficients and evaluations are carried in double-double; the
/// roots are bracketed by the polynomial's critical points and bisected.
pub fn cubic_eigenvalues(m: &SquareMatrix) -> [f64; 3] {
    let a = |i: usize, j: usize| m[(i, j)];
    let p = |i, j, k, l| Dd::prod(a(i, j), a(k, l));
    // lambda^3 - c2 lambda^2 + c1 lambda - c0
    let c2 = Dd::from(a(0, 0)).add(Dd::from(a(1, 1))).add(Dd::from(a(2, 2)));
    let c1 = p(0, 0, 1, 1)
        .add(p(0, 0, 2, 2))
        .add(p(1, 1, 2, 2))
        .sub(p(0, 1, 1, 0))
        .sub(p(0, 2, 2, 0))
        .sub(p(1, 2, 2, 1));
    let minor = |x: Dd, y: Dd| x.sub(y);
    let c0 = Dd::from(a(0, 0))
        .mul(minor(p(1, 1, 2, 2), p(1, 2, 2, 1)))
        .sub(Dd::from(a(0, 1)).mul(minor(p(1, 0, 2, 2), p(1, 2, 2, 0))))
        .add(Dd::from(a(0, 2)).mul(minor(p(1, 0, 2, 1), p(1, 1, 2, 0))));
    let poly = |x: f64| {
        let x = Dd::from(x);
        x.sub(c2).mul(x).add(c1).mul(x).sub(c0).value()
    };

    // Critical points (c2 -+ sqrt(c2^2 - 3 c1)) / 3.
    let disc = c2.mul(c2).sub(Dd::from(3.0).mul(c1));
    if disc.value() <= 0.0 {
        let x = c2.value() / 3.0;
        return [x; 3];
    }
    let root = disc.sqrt();
    let lo_crit = c2.sub(root).value() / 3.0;
    let hi_crit = c2.add(root).value() / 3.0;
    let bound = 1.0 + c2.value().abs() + c1.value().abs() + c0.value().abs();

    // Root of the increasing (or decreasing) stretch [lo, hi].
    let bisect = |mut lo: f64, mut hi: f64, increasing: bool| {
        let toward_hi = |x: f64| if increasing { poly(x) < 0.0 } else { poly(x) > 0.0 };
        if !toward_hi(lo) {
            return lo;
        }
        if toward_hi(hi) {
            return hi;
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return mid;
            }
            if toward_hi(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    };
    [
        bisect(hi_crit, bound, true),
        bisect(lo_crit, hi_crit, false),
        bisect(-bound, lo_crit, true),
    ]
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn lu_determinant(m: &SquareMatrix) -> f64 {
    let n = m.dim();
    let mut a = m.to_rows();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
        }
    }
    det
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)
}

/// Mass of the analytic density over its support, integrated in the angle
/// `x = lo + (hi - lo)(1 - cos phi)/2`, `phi in [0, pi]`, from the formula
/// alone.
pub fn mp_mass_oracle(q: f64) -> f64 {
    let lo = 1.0 + 1.0 / q - 2.0 * (1.0 / q).sqrt();
    let hi = 1.0 + 1.0 / q + 2.0 * (1.0 / q).sqrt();
    let half = 0.5 * (hi - lo);
    let f = move |phi: f64| {
        let x = lo + half * (1.0 - phi.cos());
        if x <= 0.0 {
            // only at phi = 0 with lo = 0; limit of root / x * half * sin(phi)
            return q / (2.0 * std::f64::consts::PI) * (2.0 * hi * half).sqrt();
        }
        let root = ((hi - x) * (x - lo)).max(0.0).sqrt();
        q / (2.0 * std::f64::consts::PI) * root / x * half * phi.sin()
    };
    adaptive_simpson(&f, 0.0, std::f64::consts::PI, 1e-12)
}
