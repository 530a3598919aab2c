//! Scalar special functions, integer helpers, and branch-controlled complex powers.
//!
//! Every power of a complex quantity in this crate goes through [`cpow`] with an
//! explicit [`ArgRange`], because three different argument conventions coexist:
//! `(-pi, pi]` for automorphy factors on the upper half-plane, `[-pi, pi)` on the
//! lower half-plane, and `(-pi/2, 3pi/2]` inside Eichler integrals.

use crate::error::{McError, McResult};
use num_complex::Complex64;
use std::f64::consts::PI;

/// A half-open argument window of total width exactly 2*pi.
///
/// `upper - lower == 2*pi`; exactly one endpoint is included, selected by
/// `include_upper`. When a computed argument lands on the excluded endpoint it
/// is shifted by a full turn onto the included one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgRange {
    lower: f64,
    include_upper: bool,
}

impl ArgRange {
    pub fn new(lower: f64, include_upper: bool) -> Self {
        ArgRange { lower, include_upper }
    }

    /// `(-pi, pi]`: the convention for arg(cz+d) on the upper half-plane.
    pub fn upper_half() -> Self {
        ArgRange::new(-PI, true)
    }

    /// `[-pi, pi)`: the convention for arg(ct+d) on the lower half-plane.
    pub fn lower_half() -> Self {
        ArgRange::new(-PI, false)
    }

    /// `(-pi/2, 3pi/2]`: the convention for arg(tau - t) in Eichler integrals.
    pub fn eichler() -> Self {
        ArgRange::new(-PI / 2.0, true)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.lower + 2.0 * PI
    }

    /// Bring an angle (typically from `atan2`) into this window.
    pub fn reduce(&self, theta: f64) -> f64 {
        let mut t = theta - 2.0 * PI * ((theta - self.lower) / (2.0 * PI)).floor();
        // t is now in [lower, lower + 2*pi); fix up the endpoint rules.
        if self.include_upper && t == self.lower {
            t += 2.0 * PI;
        }
        if !self.include_upper && t >= self.upper() {
            t -= 2.0 * PI;
        }
        t
    }
}

/// z^s with the argument of z taken in the given range.
///
/// Returns 0 for z = 0 when s > 0 and an error otherwise.
pub fn cpow(z: Complex64, s: f64, range: ArgRange) -> McResult<Complex64> {
    if z.re == 0.0 && z.im == 0.0 {
        if s > 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(McError::ZeroPower { s });
    }
    let theta = range.reduce(z.im.atan2(z.re));
    let ln_r = z.norm().ln();
    Ok(Complex64::from_polar((s * ln_r).exp(), s * theta))
}

/// Lanczos coefficients, g = 7, n = 9 (classical table, as in GSL).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_P: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_gamma_positive(x: f64) -> f64 {
    // valid for x >= 0.5
    let xm1 = x - 1.0;
    let mut a = LANCZOS_P[0];
    for (i, &p) in LANCZOS_P.iter().enumerate().skip(1) {
        a += p / (xm1 + i as f64);
    }
    let t = xm1 + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(xm1 + 0.5) * (-t).exp() * a
}

/// Gamma(x) for real x, poles at the non-positive integers.
pub fn gamma_real(x: f64) -> McResult<f64> {
    if x <= 0.0 && x == x.floor() {
        return Err(McError::GammaPole { x });
    }
    if x >= 0.5 {
        Ok(lanczos_gamma_positive(x))
    } else {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        Ok(PI / ((PI * x).sin() * lanczos_gamma_positive(1.0 - x)))
    }
}

/// Beta(a, b) = Gamma(a) Gamma(b) / Gamma(a+b) for a, b > 0.
pub fn beta(a: f64, b: f64) -> McResult<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(McError::Domain(format!("beta requires a, b > 0; got ({a}, {b})")));
    }
    Ok(gamma_real(a)? * gamma_real(b)? / gamma_real(a + b)?)
}

/// Pochhammer symbol (r)_n = r (r+1) ... (r+n-1); (r)_0 = 1.
pub fn pochhammer(r: f64, n: u32) -> f64 {
    let mut out = 1.0;
    for k in 0..n {
        out *= r + k as f64;
    }
    out
}

/// sin(x)/x with smooth continuation at x = 0.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Divisor power sum sigma_k(n) = sum of d^k over divisors d of n, exact.
pub fn sigma_div(k: u32, n: u64) -> McResult<u128> {
    if n < 1 {
        return Err(McError::Domain(format!("sigma_div requires n >= 1, got {n}")));
    }
    let mut s: u128 = 0;
    for d in 1..=n {
        if n % d == 0 {
            let term = (d as u128)
                .checked_pow(k)
                .ok_or_else(|| McError::Domain(format!("sigma_div overflow: d = {d}, k = {k}")))?;
            s = s
                .checked_add(term)
                .ok_or_else(|| McError::Domain("sigma_div overflow in sum".into()))?;
        }
    }
    Ok(s)
}

/// Generalized binomial coefficient binom(r, m) = r (r-1) ... (r-m+1) / m!.
pub fn binom_real(r: f64, m: u32) -> f64 {
    let mut out = 1.0;
    for k in 0..m {
        out *= (r - k as f64) / (k as f64 + 1.0);
    }
    out
}

/// Neumaier-compensated accumulator for f64 sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated accumulator for complex sums (componentwise Neumaier).
#[derive(Debug, Clone, Copy, Default)]
pub struct CKahanSum {
    re: KahanSum,
    im: KahanSum,
}

impl CKahanSum {
    pub fn new() -> Self {
        CKahanSum::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    #[test]
    fn arg_range_windows() {
        let up = ArgRange::upper_half();
        assert_eq!(up.reduce(PI), PI); // included endpoint stays
        assert_eq!(up.reduce(-PI), PI); // excluded endpoint shifts up a turn
        let low = ArgRange::lower_half();
        assert_eq!(low.reduce(-PI), -PI);
        assert_eq!(low.reduce(PI), -PI);
        let ei = ArgRange::eichler();
        assert!((ei.reduce(-2.0) - (-2.0 + 2.0 * PI)).abs() < 1e-15);
        assert_eq!(ei.reduce(1.0), 1.0);
    }

    #[test]
    fn cpow_branch_examples() {
        let m1 = Complex64::new(-1.0, 0.0);
        let v = cpow(m1, 0.5, ArgRange::upper_half()).unwrap();
        assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-15, "(-1)^0.5 = i on (-pi,pi]");
        let v = cpow(m1, 0.5, ArgRange::lower_half()).unwrap();
        assert!((v - Complex64::new(0.0, -1.0)).norm() < 1e-15, "(-1)^0.5 = -i on [-pi,pi)");
        let v = cpow(Complex64::new(1.0, 1.0), 2.0, ArgRange::eichler()).unwrap();
        assert!((v - Complex64::new(0.0, 2.0)).norm() < 1e-14, "(1+i)^2 = 2i");
        assert_eq!(cpow(Complex64::new(0.0, 0.0), 1.5, ArgRange::upper_half()).unwrap().norm(), 0.0);
        assert!(cpow(Complex64::new(0.0, 0.0), -1.0, ArgRange::upper_half()).is_err());
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_real(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma_real(0.5).unwrap() - SQRT_PI).abs() < 1e-13);
        // cross-checked against an independent high-precision evaluation
        assert!((gamma_real(3.7).unwrap() - 4.170_651_783_796_603).abs() < 1e-12 * 4.17);
        assert!((gamma_real(0.7).unwrap() - 1.298_055_332_647_558).abs() < 1e-12 * 1.3);
        // recurrence ties 3.7 to 0.7
        let lhs = gamma_real(3.7).unwrap();
        let rhs = 2.7 * 1.7 * 0.7 * gamma_real(0.7).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs());
        assert!(gamma_real(0.0).is_err());
        assert!(gamma_real(-3.0).is_err());
        // reflection side
        let g = gamma_real(-0.5).unwrap();
        assert!((g - (-2.0 * SQRT_PI)).abs() < 1e-12 * g.abs());
    }

    #[test]
    fn beta_values() {
        assert!((beta(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((beta(2.0, 3.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        // independent quadrature oracle for int_0^1 u^0.8 (1-u)^1.2 du
        assert!((beta(1.8, 2.2).unwrap() - 0.171_033_493_138_495_22).abs() < 1e-13);
        assert!(beta(-0.1, 1.0).is_err());
    }

    #[test]
    fn pochhammer_values() {
        assert_eq!(pochhammer(2.5, 0), 1.0);
        assert!((pochhammer(2.5, 3) - 39.375).abs() < 1e-13);
        assert_eq!(pochhammer(-2.0, 4), 0.0);
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-15);
        assert!((sinc(1.0) - 0.841_470_984_807_896_5).abs() < 1e-15);
        // C^2 join at the Taylor switchover
        for &x in &[1e-5, 5e-5, 9.9e-5, 1.01e-4, 5e-3, 1e-2] {
            assert!((sinc(x) - (1.0 - x * x / 6.0)).abs() <= x.powi(4) / 100.0 + 1e-18);
        }
    }

    #[test]
    fn sigma_div_values() {
        assert_eq!(sigma_div(1, 6).unwrap(), 12);
        assert_eq!(sigma_div(3, 1).unwrap(), 1);
        assert_eq!(sigma_div(3, 2).unwrap(), 9);
        assert!(sigma_div(1, 0).is_err());
    }

    #[test]
    fn binom_real_values() {
        assert!((binom_real(5.0, 2) - 10.0).abs() < 1e-14);
        assert!((binom_real(0.5, 2) - (-0.125)).abs() < 1e-15);
        // (-1)(-2)(-3)/3! = -1
        assert!((binom_real(-1.0, 3) - (-1.0)).abs() < 1e-15);
        assert_eq!(binom_real(3.3, 0), 1.0);
    }

    #[test]
    fn kahan_compensation() {
        let mut s = KahanSum::new();
        s.add(1.0);
        for _ in 0..10_000 {
            s.add(1e-17);
        }
        assert!((s.value() - (1.0 + 1e-13)).abs() < 1e-16);
    }
}
