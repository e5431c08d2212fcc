//! Special functions: log-gamma, the regularized incomplete beta and gamma
//! functions, and the saddle-point helpers used for accurate binomial and
//! Poisson masses.

use crate::error::{domain, Result};

pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("log_gamma requires a positive finite argument, got {x}"));
    }
    Ok(ln_gamma(x))
}

/// Unchecked ln Γ(x), x > 0. Shifts the argument to x >= 10 and applies the
/// Stirling series; the truncation error there is below 1e-16.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    let mut z = x;
    let mut prod = 1.0;
    while z < 10.0 {
        prod *= z;
        z += 1.0;
    }
    let shift = if prod == 1.0 { 0.0 } else { prod.ln() };
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + stirling_tail(z) - shift
}

fn stirling_tail(z: f64) -> f64 {
    let z2 = z * z;
    let inv = 1.0 / z;
    let inv2 = 1.0 / z2;
    inv * (1.0 / 12.0
        - inv2
            * (1.0 / 360.0
                - inv2
                    * (1.0 / 1260.0
                        - inv2
                            * (1.0 / 1680.0
                                - inv2 * (1.0 / 1188.0 - inv2 * (691.0 / 360_360.0 - inv2 / 156.0))))))
}

/// ln Γ(n+1) − (n+½) ln n + n − ln √(2π) at n = 0, 0.5, 1, …, 15.
#[allow(clippy::excessive_precision)]
const STIRLERR_HALVES: [f64; 31] = [
    0.0,
    0.153_426_409_720_027_345_29,
    0.081_061_466_795_327_258_22,
    0.054_814_121_051_917_653_896,
    0.041_340_695_955_409_294_094,
    0.033_162_873_519_936_287_485,
    0.027_677_925_684_998_339_149,
    0.023_746_163_656_297_495_971,
    0.020_790_672_103_765_093_112,
    0.018_488_450_532_673_185_231,
    0.016_644_691_189_821_192_163,
    0.015_134_973_221_917_378_874,
    0.013_876_128_823_070_747_999,
    0.012_810_465_242_920_226_924,
    0.011_896_709_945_891_770_095,
    0.011_104_559_758_206_917_327,
    0.010_411_265_261_972_096_497,
    0.009_799_416_126_158_803_298_4,
    0.009_255_462_182_712_732_917_7,
    0.008_768_700_134_139_385_463,
    0.008_330_563_433_362_871_256_5,
    0.007_934_114_564_314_020_547_2,
    0.007_573_675_487_951_840_795,
    0.007_244_554_301_320_383_179_5,
    0.006_942_840_107_209_529_865_7,
    0.006_665_247_032_707_682_442_4,
    0.006_408_994_188_004_207_068_4,
    0.006_171_712_263_039_457_647_5,
    0.005_951_370_112_758_847_735_6,
    0.005_746_216_513_010_115_682,
    0.005_554_733_551_962_801_371,
];

/// Error of Stirling's approximation to ln n!.
pub(crate) fn stirlerr(n: f64) -> f64 {
    if n <= 15.0 {
        let twice = n + n;
        if twice == twice.floor() {
            return STIRLERR_HALVES[twice as usize];
        }
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    (1.0 / 12.0
        - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * nn)) / nn) / nn) / nn)
        / n
}

/// Deviance term x ln(x/m) + m − x, evaluated without cancellation near x = m.
pub(crate) fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
    }
    x * (x / m).ln() + m - x
}

/// Binomial mass at (possibly non-integer) x for size n, using Loader's
/// saddle-point expansion. Requires 0 <= x <= n and p + q = 1.
pub(crate) fn binom_mass(x: f64, n: f64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0.0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    if x == 0.0 {
        if n == 0.0 {
            return 1.0;
        }
        let lc = if p < 0.1 { -bd0(n, n * q) - n * p } else { n * q.ln() };
        return lc.exp();
    }
    if x == n {
        let lc = if q < 0.1 { -bd0(n, n * p) - n * q } else { n * p.ln() };
        return lc.exp();
    }
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    let lf = LN_2PI + x.ln() + (-x / n).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Poisson mass at x with mean m (m >= 0).
pub(crate) fn poisson_mass(x: f64, m: f64) -> f64 {
    if m == 0.0 {
        return if x == 0.0 { 1.0 } else { 0.0 };
    }
    if x == 0.0 {
        return (-m).exp();
    }
    (-stirlerr(x) - bd0(x, m)).exp() / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return domain(format!("reg_inc_beta requires a, b > 0, got a={a}, b={b}"));
    }
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("reg_inc_beta requires x in [0, 1], got {x}"));
    }
    Ok(inc_beta(a, b, x))
}

pub(crate) fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    if x < (a + 1.0) / (a + b + 2.0) {
        inc_beta_cf_side(a, b, x)
    } else {
        1.0 - inc_beta_cf_side(b, a, 1.0 - x)
    }
}

/// x^a (1-x)^b / (a B(a,b)) times the continued fraction. The prefactor is the
/// binomial saddle-point mass scaled by b/(a+b).
fn inc_beta_cf_side(a: f64, b: f64, x: f64) -> f64 {
    let front = binom_mass(a, a + b, x, 1.0 - x) * b / (a + b);
    (front * beta_cf(a, b, x)).clamp(0.0, 1.0)
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let max_iter = 200 + (10.0 * (a.max(b)).sqrt()) as usize;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
pub fn reg_upper_inc_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) || !(x >= 0.0) {
        return domain(format!("reg_upper_inc_gamma requires a > 0, x >= 0, got a={a}, x={x}"));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let log_front = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // series for P
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        Ok((1.0 - sum * log_front.exp()).clamp(0.0, 1.0))
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-15 {
                break;
            }
        }
        Ok((log_front.exp() * h).clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_factorial_exact(n: u32) -> f64 {
        (1..=n).map(|k| f64::from(k).ln()).sum()
    }

    #[test]
    fn log_gamma_examples() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-14);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-13);
        let ln_sqrt_pi = 0.5 * std::f64::consts::PI.ln();
        assert!((log_gamma(0.5).unwrap() - ln_sqrt_pi).abs() < 1e-13);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn log_gamma_domain() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn log_gamma_matches_factorials() {
        for n in 0..=170u32 {
            let exact = ln_factorial_exact(n);
            let got = log_gamma(f64::from(n) + 1.0).unwrap();
            assert!(
                (got - exact).abs() <= 1e-12 * exact.abs().max(1.0),
                "n={n}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn log_gamma_half_integers() {
        // Γ(n + 1/2) = (2n)! √π / (4^n n!)
        let ln_sqrt_pi = 0.5 * std::f64::consts::PI.ln();
        for n in 0..40u32 {
            let exact = ln_factorial_exact(2 * n) + ln_sqrt_pi
                - f64::from(n) * 4f64.ln()
                - ln_factorial_exact(n);
            let got = log_gamma(f64::from(n) + 0.5).unwrap();
            assert!((got - exact).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn log_gamma_recurrence_large() {
        // ln Γ(x+1) − ln Γ(x) = ln x, relative check for large arguments
        for &x in &[123.4, 9_999.5, 250_000.25, 1e6] {
            let d = log_gamma(x + 1.0).unwrap() - log_gamma(x).unwrap();
            assert!((d - f64::ln(x)).abs() < 1e-14 * log_gamma(x).unwrap(), "x={x}");
        }
    }

    #[test]
    fn stirlerr_table_consistent_with_series() {
        // table and direct formula agree where both are valid
        for i in 1..=30 {
            let n = f64::from(i) / 2.0;
            let direct = ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
            assert!((stirlerr(n) - direct).abs() < 1e-13, "n={n}");
        }
        let direct = ln_gamma(16.5 + 1.0) - 17.0 * 16.5f64.ln() + 16.5 - LN_SQRT_2PI;
        assert!((stirlerr(16.5) - direct).abs() < 1e-13);
    }

    #[test]
    fn inc_beta_examples() {
        assert!((reg_inc_beta(1.0, 1.0, 0.2).unwrap() - 0.2).abs() < 1e-15);
        assert!((reg_inc_beta(2.0, 2.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        // I_x(2,2) = x²(3 − 2x)
        assert!((reg_inc_beta(2.0, 2.0, 0.2).unwrap() - 0.104).abs() < 1e-14);
    }

    #[test]
    fn inc_beta_closed_forms() {
        for i in 1..20 {
            let x = f64::from(i) / 20.0;
            for a in [0.5, 1.0, 3.0, 7.5] {
                // I_x(a, 1) = x^a
                let got = reg_inc_beta(a, 1.0, x).unwrap();
                assert!((got - x.powf(a)).abs() <= 1e-13 * x.powf(a).max(1e-3), "a={a} x={x}");
                // I_x(1, b) = 1 − (1−x)^b
                let want = 1.0 - (1.0 - x).powf(a);
                let got = reg_inc_beta(1.0, a, x).unwrap();
                assert!((got - want).abs() < 1e-13, "b={a} x={x}");
            }
        }
    }

    #[test]
    fn inc_beta_against_quadrature() {
        // composite Simpson on the Beta density, a, b >= 2 so the integrand is smooth
        fn simpson(a: f64, b: f64, x: f64) -> f64 {
            let n = 20_000;
            let h = x / n as f64;
            let lb = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
            let f = |t: f64| {
                if t <= 0.0 || t >= 1.0 {
                    0.0
                } else {
                    ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - lb).exp()
                }
            };
            let mut s = f(0.0) + f(x);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(i as f64 * h);
            }
            s * h / 3.0
        }
        for &(a, b, x) in &[(2.0, 3.0, 0.3), (5.5, 2.5, 0.8), (10.0, 12.0, 0.45), (3.0, 40.0, 0.05)] {
            let q = simpson(a, b, x);
            let got = reg_inc_beta(a, b, x).unwrap();
            assert!((got - q).abs() < 1e-10, "({a},{b},{x}): {got} vs {q}");
        }
    }

    #[test]
    fn inc_beta_domain() {
        assert!(reg_inc_beta(0.0, 1.0, 0.5).is_err());
        assert!(reg_inc_beta(1.0, -1.0, 0.5).is_err());
        assert!(reg_inc_beta(1.0, 1.0, 1.5).is_err());
        assert_eq!(reg_inc_beta(3.0, 4.0, 0.0).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(3.0, 4.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn upper_gamma_closed_forms() {
        // Q(1, x) = e^{-x}; Q(2, x) = (1 + x) e^{-x}
        for &x in &[0.1, 1.0, 2.5, 10.0, 30.0] {
            assert!((reg_upper_inc_gamma(1.0, x).unwrap() - (-x).exp()).abs() < 1e-14);
            let want = (1.0 + x) * (-x).exp();
            assert!((reg_upper_inc_gamma(2.0, x).unwrap() - want).abs() < 1e-14);
        }
        assert_eq!(reg_upper_inc_gamma(3.0, 0.0).unwrap(), 1.0);
    }
}
