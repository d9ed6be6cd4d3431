//! Standard-normal kernel: density, CDF, survival function, quantile,
//! antiderivatives of the CDF, a tail quantile expansion, and the Gaussian
//! tail sandwich.
//!
//! The CDF is built on Cody's rational Chebyshev approximations for the
//! complementary error function (W. J. Cody, Math. Comp. 23, 1969; the
//! SPECFUN `calerf` scheme), which carry full double precision. The quantile
//! uses Acklam's rational initial guess polished by Newton steps against the
//! CDF, with a bisection fallback.

use crate::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_9;
const INV_SQRT_PI: f64 = 0.564_189_583_547_756_286_9;
const LN_2PI: f64 = 1.837_877_066_409_345_483_6;

/// Density of the standard normal distribution.
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// CDF of the standard normal distribution.
///
/// Accurate to ~1 ulp in relative-or-absolute terms on `|x| <= 8`, and
/// symmetric: `cdf(-x) = 1 - cdf(x)` holds to within one rounding of the
/// shared erfc evaluation.
pub fn cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * erfc(-x / SQRT_2)
    } else {
        1.0 - 0.5 * erfc(x / SQRT_2)
    }
}

/// Upper tail `1 - cdf(x)`, computed without cancellation for large `x`.
pub fn survival(x: f64) -> f64 {
    if x > 0.0 {
        0.5 * erfc(x / SQRT_2)
    } else {
        1.0 - 0.5 * erfc(-x / SQRT_2)
    }
}

/// Quantile (inverse CDF) of the standard normal distribution.
///
/// Round-trip contract: `|cdf(quantile(p)) - p| <= 1e-9` for
/// `p` in `[1e-8, 1 - 1e-8]` (in practice the Newton polish reaches
/// near machine precision).
pub fn quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "quantile requires p in (0, 1), got {p}"
        )));
    }
    let mut x = acklam_guess(p);
    // Newton polish; phi(x) underflows only far outside the contract range.
    for _ in 0..2 {
        let f = cdf(x) - p;
        let d = pdf(x);
        if d <= f64::MIN_POSITIVE {
            break;
        }
        let step = f / d;
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    if !x.is_finite() || (cdf(x) - p).abs() > 1e-12 {
        x = bisect_quantile(p);
    }
    Ok(x)
}

/// Tail expansion of the quantile for small `p`:
/// `-sqrt(log(1/p^2) - log log(1/p^2) - log(2 pi))`, without the vanishing
/// correction term.
pub fn quantile_tail_expansion(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Domain(format!(
            "tail expansion requires p in (0, 0.5), got {p}"
        )));
    }
    let l = (1.0 / (p * p)).ln();
    let radicand = l - l.ln() - LN_2PI;
    if radicand <= 0.0 {
        return Err(Error::Domain(format!(
            "tail expansion radicand nonpositive at p = {p}; \
             the expansion requires p below ~0.2341076572"
        )));
    }
    Ok(-radicand.sqrt())
}

/// Antiderivative of the CDF: `int_{-inf}^{a} cdf(x) dx = a*cdf(a) + pdf(a)`.
pub fn cdf_integral(a: f64) -> f64 {
    a * cdf(a) + pdf(a)
}

/// Integrated upper tail: `int_{b}^{inf} (1 - cdf(x)) dx = pdf(b) - b*(1 - cdf(b))`.
pub fn survival_integral(b: f64) -> f64 {
    pdf(b) - b * survival(b)
}

/// Two-sided bracket for the upper tail at `x >= 0`:
/// `exp(-x^2/2) / (sqrt(2 pi) (1 + x)) <= 1 - cdf(x) <= exp(-x^2/2) / (sqrt(pi) (1 + x))`.
pub fn tail_sandwich(x: f64) -> Result<(f64, f64)> {
    if x < 0.0 {
        return Err(Error::Domain(format!(
            "tail sandwich requires x >= 0, got {x}"
        )));
    }
    let e = (-0.5 * x * x).exp();
    Ok((
        INV_SQRT_2PI * e / (1.0 + x),
        INV_SQRT_PI * e / (1.0 + x),
    ))
}

/// Complementary error function, Cody's rational Chebyshev scheme.
///
/// Three ranges: |x| <= 0.46875 via the erf approximation, 0.46875 < x <= 4
/// and x > 4 via dedicated erfc forms. exp(-x^2) is split as
/// exp(-q^2)*exp(-(x-q)(x+q)) with q = trunc(16x)/16 to tame argument
/// rounding in the exponent.
pub fn erfc(x: f64) -> f64 {
    const A: [f64; 5] = [
        3.161_123_743_870_565_6e0,
        1.138_641_541_510_501_56e2,
        3.774_852_376_853_020_21e2,
        3.209_377_589_138_469_47e3,
        1.857_777_061_846_031_53e-1,
    ];
    const B: [f64; 4] = [
        2.360_129_095_234_412_09e1,
        2.440_246_379_344_441_73e2,
        1.282_616_526_077_372_28e3,
        2.844_236_833_439_170_62e3,
    ];
    const C: [f64; 9] = [
        5.641_884_969_886_700_89e-1,
        8.883_149_794_388_375_94e0,
        6.611_919_063_714_162_95e1,
        2.986_351_381_974_001_31e2,
        8.819_522_212_417_690_9e2,
        1.712_047_612_634_070_58e3,
        2.051_078_377_826_071_47e3,
        1.230_339_354_797_997_25e3,
        2.153_115_354_744_038_46e-8,
    ];
    const D: [f64; 8] = [
        1.574_492_611_070_983_47e1,
        1.176_939_508_913_124_99e2,
        5.371_811_018_620_098_58e2,
        1.621_389_574_566_690_19e3,
        3.290_799_235_733_459_63e3,
        4.362_619_090_143_247_16e3,
        3.439_367_674_143_721_64e3,
        1.230_339_354_803_749_42e3,
    ];
    const P: [f64; 6] = [
        3.053_266_349_612_323_44e-1,
        3.603_448_999_498_044_39e-1,
        1.257_817_261_112_292_46e-1,
        1.608_378_514_874_227_66e-2,
        6.587_491_615_298_378_03e-4,
        1.631_538_713_730_209_78e-2,
    ];
    const Q: [f64; 5] = [
        2.568_520_192_289_822_42e0,
        1.872_952_849_923_460_47e0,
        5.279_051_029_514_284_12e-1,
        6.051_834_131_244_131_91e-2,
        2.335_204_976_268_691_85e-3,
    ];
    const THRESHOLD: f64 = 0.46875;
    // erfc underflows to zero past here.
    const XBIG: f64 = 26.543;

    let y = x.abs();
    let result = if y <= THRESHOLD {
        let ysq = y * y;
        let mut num = A[4] * ysq;
        let mut den = ysq;
        for i in 0..3 {
            num = (num + A[i]) * ysq;
            den = (den + B[i]) * ysq;
        }
        return 1.0 - x * (num + A[3]) / (den + B[3]);
    } else if y <= 4.0 {
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        let r = (num + C[7]) / (den + D[7]);
        scaled_exp_sq(y) * r
    } else if y < XBIG {
        let ysq = 1.0 / (y * y);
        let mut num = P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + P[i]) * ysq;
            den = (den + Q[i]) * ysq;
        }
        let r = ysq * (num + P[4]) / (den + Q[4]);
        scaled_exp_sq(y) * (INV_SQRT_PI - r) / y
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

fn scaled_exp_sq(y: f64) -> f64 {
    let q = (16.0 * y).trunc() / 16.0;
    let del = (y - q) * (y + q);
    (-q * q).exp() * (-del).exp()
}

fn acklam_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239e0,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838e0,
        -2.549_732_539_343_734e0,
        4.374_664_141_464_968e0,
        2.938_163_982_698_783e0,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996e0,
        3.754_408_661_907_416e0,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

fn bisect_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}
