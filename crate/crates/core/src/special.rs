//! Modified Bessel function of the second kind `K_ν` for real order and
//! positive argument, plus the few Bessel-`J` pieces needed for Dirichlet
//! eigenvalues of balls.
//!
//! `K_ν` follows Temme's method: for `x < 2` the series in
//! `Γ`-function combinations, for `x ≥ 2` Steed's continued fraction, each
//! for the reduced order `|μ| ≤ 1/2`, then forward recurrence in the order.
//! Half-integer orders use the terminating elementary closed form.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::format;
use core::f64::consts::PI;


use crate::error::{invalid, Result};

/// Taylor coefficients of `1/Γ(z) = Σ c_k z^k`, `k = 1..=27`.
const RGAMMA_TAYLOR: [f64; 27] = [
    1.0,
    0.577_215_664_901_532_860_6,
    -0.655_878_071_520_253_881_1,
    -0.042_002_635_034_095_235_53,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_75,
    -0.009_621_971_527_876_973_562,
    0.007_218_943_246_663_099_542,
    -0.001_165_167_591_859_065_112,
    -0.000_215_241_674_114_950_972_8,
    0.000_128_050_282_388_116_186_2,
    -0.000_020_134_854_780_788_238_66,
    -1.250_493_482_142_670_657e-6,
    1.133_027_231_981_695_882e-6,
    -2.056_338_416_977_607_104e-7,
    6.116_095_104_481_415_818e-9,
    5.002_007_644_469_222_930e-9,
    -1.181_274_570_487_020_145e-9,
    1.043_426_711_691_100_511e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783e-14,
    -5.348_122_539_423_017_982e-15,
    1.226_778_628_238_260_790e-15,
    -1.181_259_301_697_458_770e-16,
    1.186_692_254_751_600_333e-18,
];

/// `1/Γ(1 + x)` for `|x| ≤ 1/2`.
fn rgamma_one_plus(x: f64) -> f64 {
    RGAMMA_TAYLOR
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc * x + c)
}

/// Temme's auxiliary functions for `|μ| ≤ 1/2`:
/// `γ₁ = (1/Γ(1−μ) − 1/Γ(1+μ)) / (2μ)`, `γ₂ = (1/Γ(1−μ) + 1/Γ(1+μ)) / 2`.
fn temme_gammas(mu: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    let mut power = 1.0;
    // c_k with k even feed γ₁ (with a minus sign), odd k feed γ₂.
    for pair in RGAMMA_TAYLOR.chunks(2) {
        gam2 += pair[0] * power;
        if let Some(c_even) = pair.get(1) {
            gam1 -= c_even * power;
        }
        power *= mu2;
    }
    (gam1, gam2)
}

/// `1/Γ(z)` for `z > 0`, by downward recurrence onto `[1/2, 3/2]`.
pub fn rgamma(z: f64) -> f64 {
    let mut z = z;
    let mut factor = 1.0;
    while z > 1.5 {
        z -= 1.0;
        factor /= z;
    }
    while z < 0.5 {
        factor *= z;
        z += 1.0;
    }
    factor * rgamma_one_plus(z - 1.0)
}

const MAX_ITERATIONS: usize = 10_000;

/// Returns `(e^x K_μ(x), e^x K_{μ+1}(x))` for `|μ| ≤ 1/2`, `x > 0`.
fn scaled_pair(mu: f64, x: f64) -> (f64, f64) {
    let eps = f64::EPSILON;
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < eps { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < eps { 1.0 } else { e.sinh() / e };
        let (gam1, gam2) = temme_gammas(mu);
        let gampl = gam2 - mu * gam1; // 1/Γ(1+μ)
        let gammi = gam2 + mu * gam1; // 1/Γ(1−μ)
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAX_ITERATIONS {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu * mu);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * eps {
                break;
            }
        }
        let scale = x.exp();
        (sum * scale, sum1 * 2.0 / x * scale)
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu * mu;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAX_ITERATIONS {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < eps {
                break;
            }
        }
        h *= a1;
        let kmu = (PI / (2.0 * x)).sqrt() / s;
        let k1 = kmu * (mu + x + 0.5 - h) / x;
        (kmu, k1)
    }
}

/// True when `2ν` is an odd integer.
fn is_half_integer(order: f64) -> bool {
    let twice = 2.0 * order;
    twice == twice.round() && (twice.round() as i64).rem_euclid(2) == 1
}

/// `e^x K_{n+1/2}(x)` from the terminating series
/// `√(π/2x) Σ_{k≤n} (n+k)! / (k!(n−k)!) (2x)^{−k}`.
fn scaled_half_integer(n: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..n {
        let k = k as f64;
        let nf = n as f64;
        // ratio of consecutive terms
        term *= (nf + k + 1.0) * (nf - k) / ((k + 1.0) * 2.0 * x);
        sum += term;
    }
    (PI / (2.0 * x)).sqrt() * sum
}

/// `e^r K_ν(r)`, finite for all `r > 0` without underflow.
pub fn bessel_k_scaled(order: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("K_ν needs a positive finite argument, got {r}")));
    }
    if !order.is_finite() {
        return Err(invalid("K_ν needs a finite order"));
    }
    let nu = order.abs();
    if is_half_integer(nu) {
        return Ok(scaled_half_integer((nu - 0.5).round() as u32, r));
    }
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut kmu, mut k1) = scaled_pair(mu, r);
    let two_over_r = 2.0 / r;
    for i in 1..=(nl as u32) {
        let next = (mu + i as f64) * two_over_r * k1 + kmu;
        kmu = k1;
        k1 = next;
    }
    Ok(kmu)
}

/// `K_ν(r)`; underflows to zero for `r ≳ 745`.
pub fn bessel_k(order: f64, r: f64) -> Result<f64> {
    Ok(bessel_k_scaled(order, r)? * (-r).exp())
}

/// `J_ν(x)` by its power series; accurate for the moderate arguments
/// (`x ≲ 12`) used to locate first zeros.
pub fn bessel_j_series(order: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powf(order) * rgamma(order + 1.0);
    let mut sum = term;
    let q = -half * half;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + order));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// First positive zero of `J_ν`, `ν > −1`, by bracketing and bisection.
pub fn bessel_j_first_zero(order: f64) -> Result<f64> {
    if !(order > -1.0 && order <= 10.0) {
        return Err(invalid(format!("order {order} outside the supported range (−1, 10]")));
    }
    let step = 0.05;
    let mut a = step;
    let mut fa = bessel_j_series(order, a);
    loop {
        let b = a + step;
        let fb = bessel_j_series(order, b);
        if fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = bessel_j_series(order, mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
        if a > 20.0 {
            return Err(invalid("no zero bracketed"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_gamma_known_values() {
        assert!((rgamma(1.0) - 1.0).abs() < 1e-15);
        assert!((rgamma(0.5) - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((rgamma(5.0) - 1.0 / 24.0).abs() < 1e-16);
        assert!((rgamma(3.5) - 1.0 / 3.323_350_970_447_842_6).abs() < 1e-15);
    }

    #[test]
    fn half_order_closed_form() {
        let k = bessel_k(0.5, 1.0).unwrap();
        let expected = (PI / 2.0).sqrt() * (-1.0f64).exp();
        assert!((k - expected).abs() < 1e-15);
        assert!((k - 0.461_068_5).abs() < 1e-6);
        assert_eq!(bessel_k(-0.5, 2.0).unwrap(), bessel_k(0.5, 2.0).unwrap());
    }

    #[test]
    fn rejects_nonpositive_argument() {
        assert!(bessel_k(0.0, 0.0).is_err());
        assert!(bessel_k(1.0, -1.0).is_err());
    }

    #[test]
    fn order_zero_at_one() {
        let k0 = bessel_k(0.0, 1.0).unwrap();
        assert!((k0 - 0.421_024_438_240_708_3).abs() < 1e-15);
    }

    #[test]
    fn series_and_continued_fraction_agree_at_crossover() {
        for nu in [0.0, 0.25, 1.0, 1.3, 2.0, 4.0] {
            let below = bessel_k_scaled(nu, 2.0 - 1e-12).unwrap();
            let above = bessel_k_scaled(nu, 2.0).unwrap();
            assert!(((below - above) / above).abs() < 1e-10, "nu={nu}");
        }
    }

    #[test]
    fn recurrence_identity() {
        for nu in [0.3, 1.0, 1.5, 2.0, 3.7] {
            for r in [0.1, 0.9, 1.9, 2.1, 5.0, 20.0] {
                let lhs = bessel_k(nu + 1.0, r).unwrap();
                let rhs = bessel_k(nu - 1.0, r).unwrap() + 2.0 * nu / r * bessel_k(nu, r).unwrap();
                assert!(((lhs - rhs) / lhs).abs() < 1e-9, "nu={nu} r={r}");
            }
        }
    }

    #[test]
    fn first_zeros() {
        assert!((bessel_j_first_zero(0.0).unwrap() - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((bessel_j_first_zero(-0.5).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!((bessel_j_first_zero(0.5).unwrap() - PI).abs() < 1e-12);
    }
}
