//! Test-only reference implementations, kept independent of the library's
//! numeric paths: an erf Maclaurin series plus an erfc continued fraction
//! for the normal CDF, a bisection quantile on top of it, and adaptive
//! Simpson quadrature.
#![allow(dead_code)]

const INV_SQRT_PI: f64 = 0.564_189_583_547_756_286_9;

/// erf by Maclaurin series; accurate for |x| <= ~2.5.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x2 / kf;
        let add = term / (2.0 * kf + 1.0);
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    2.0 * INV_SQRT_PI * sum
}

/// erfc by the Laplace continued fraction (modified Lentz); for x >= 2.
fn erfc_continued_fraction(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f: f64 = x;
    let mut c: f64 = x;
    let mut d: f64 = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        // b = x for every level.
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    INV_SQRT_PI * (-x * x).exp() / f
}

fn erfc_oracle(y: f64) -> f64 {
    assert!(y >= 0.0);
    if y < 2.0 {
        1.0 - erf_series(y)
    } else {
        erfc_continued_fraction(y)
    }
}

/// Reference standard-normal CDF.
pub fn oracle_cdf(x: f64) -> f64 {
    let y = x.abs() / std::f64::consts::SQRT_2;
    if x < 0.0 {
        0.5 * erfc_oracle(y)
    } else {
        1.0 - 0.5 * erfc_oracle(y)
    }
}

/// Reference quantile via bisection on [`oracle_cdf`].
pub fn oracle_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let (mut lo, mut hi) = (-10.0_f64, 10.0_f64);
    while oracle_cdf(lo) > p {
        lo *= 2.0;
    }
    while oracle_cdf(hi) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if oracle_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let err = left + right - whole;
        if depth == 0 || err.abs() < 15.0 * tol {
            return left + right + err / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol * 0.5, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol * 0.5, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}
