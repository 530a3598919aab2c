//! Disk-coordinate Laurent series in w = (z - i)/(z + i), the intertwining
//! coefficient maps sigma_r / J_r, the duality bracket, and the closed-form
//! kernel bracket behind the Haberland-type identity.
//!
//! All Pochhammer-quotient factors (n!/(r)_n and its reciprocal) are built as
//! running products term by term; forming n! alone overflows f64 long before
//! the truncation orders used here.

use crate::error::{McError, McResult};
use crate::special::{binom_real, cpow, ArgRange, CKahanSum};
use num_complex::Complex64;
use std::f64::consts::PI;

/// A truncated series sum_{n = n_min}^{n_max} c_n w^n.
///
/// A plus-part series has n_min >= 0; a minus-part series has n_max <= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSeries {
    n_min: i64,
    coeffs: Vec<Complex64>,
}

impl PolarSeries {
    pub fn new(n_min: i64, coeffs: Vec<Complex64>) -> McResult<Self> {
        if coeffs.is_empty() {
            return Err(McError::Domain("polar series needs at least one coefficient".into()));
        }
        Ok(PolarSeries { n_min, coeffs })
    }

    /// The monomial c * w^n.
    pub fn monomial(n: i64, c: Complex64) -> Self {
        PolarSeries { n_min: n, coeffs: vec![c] }
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.coeffs.len() as i64 - 1
    }

    /// Coefficient of w^n (zero outside the stored window).
    pub fn coeff(&self, n: i64) -> Complex64 {
        if n < self.n_min || n > self.n_max() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n - self.n_min) as usize]
        }
    }

    pub fn is_plus_part(&self) -> bool {
        self.n_min >= 0
    }

    pub fn is_minus_part(&self) -> bool {
        self.n_max() <= 0
    }

    /// Largest |n| with a nonzero coefficient at w^{-|n|}.., i.e. the deepest
    /// supported index; None for the zero series.
    fn lowest_support(&self) -> Option<i64> {
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() != 0.0 {
                return Some(self.n_min + i as i64);
            }
        }
        None
    }

    /// Evaluate at a point w != 0 (w = 0 allowed for plus-part series).
    pub fn eval_w(&self, w: Complex64) -> Complex64 {
        let mut acc = CKahanSum::new();
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let n = self.n_min + i as i64;
            acc.add(c * w.powi(n as i32));
        }
        acc.value()
    }

    pub fn add(&self, other: &PolarSeries) -> PolarSeries {
        let n_min = self.n_min.min(other.n_min);
        let n_max = self.n_max().max(other.n_max());
        let coeffs = (n_min..=n_max)
            .map(|n| self.coeff(n) + other.coeff(n))
            .collect();
        PolarSeries { n_min, coeffs }
    }

    pub fn scale(&self, k: Complex64) -> PolarSeries {
        PolarSeries {
            n_min: self.n_min,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }
}

fn is_nonpositive_integer(r: f64) -> bool {
    r <= 0.0 && r == r.floor()
}

/// sigma_r on coefficients: the w^n term (n <= 0) maps to
/// (|n|!/(r)_{|n|}) c_n at w^{n-1}.
pub fn sigma_r_coeff(f_minus: &PolarSeries, r: f64) -> McResult<PolarSeries> {
    if !f_minus.is_minus_part() {
        return Err(McError::Domain("sigma_r expects a minus-part series".into()));
    }
    if is_nonpositive_integer(r) {
        if let Some(low) = f_minus.lowest_support() {
            if low < r as i64 {
                return Err(McError::PochhammerPole { r, n: low.unsigned_abs() as u32 });
            }
        }
    }
    let depth = (-f_minus.n_min()).max(0) as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); f_minus.coeffs.len()];
    let mut fac = 1.0f64; // |n|!/(r)_{|n|}, built incrementally
    for k in 0..=depth {
        let n = -(k as i64);
        if k > 0 {
            let denom = r + k as f64 - 1.0;
            if denom == 0.0 {
                // only reachable when some deeper coefficient is nonzero
                if f_minus
                    .lowest_support()
                    .is_some_and(|low| low <= n)
                {
                    return Err(McError::PochhammerPole { r, n: k as u32 });
                }
                break;
            }
            fac *= k as f64 / denom;
        }
        if n >= f_minus.n_min() && n <= f_minus.n_max() {
            let idx = (n - f_minus.n_min()) as usize;
            out[idx] = f_minus.coeff(n) * fac;
        }
    }
    Ok(PolarSeries {
        n_min: f_minus.n_min() - 1,
        coeffs: out,
    })
}

/// J_r on coefficients: c_m at w^m (m <= -1) maps to
/// c_m (r)_{-m-1}/(-m-1)! at w^{m+1}; indices m >= 0 are annihilated.
pub fn j_r(series: &PolarSeries, r: f64) -> PolarSeries {
    let low = series.n_min().min(-1);
    let depth = (-low - 1) as usize; // largest -m-1 needed
    let mut out = vec![Complex64::new(0.0, 0.0); depth + 1]; // indices w^{low+1}..w^0
    let mut fac = 1.0f64; // (r)_k / k! at k = -m-1
    for k in 0..=depth {
        if k > 0 {
            fac *= (r + k as f64 - 1.0) / k as f64;
        }
        let m = -(k as i64) - 1;
        out[(m + 1 - (low + 1)) as usize] = series.coeff(m) * fac;
    }
    PolarSeries {
        n_min: low + 1,
        coeffs: out,
    }
}

/// Duality bracket [h, f]_r = sum_{n >= 0} (n!/(r)_n) c_n d_n, pairing the
/// w^n coefficient of h with the w^{-n} coefficient of f.
pub fn bracket(h_plus: &PolarSeries, f_minus: &PolarSeries, r: f64) -> McResult<Complex64> {
    let n_top = h_plus.n_max().min(-f_minus.n_min());
    let mut acc = CKahanSum::new();
    let mut ratio = 1.0f64; // n!/(r)_n
    for n in 0..=n_top.max(0) {
        if n > 0 {
            let denom = r + n as f64 - 1.0;
            if denom == 0.0 {
                // pole is harmless only if no remaining term contributes
                let remaining = (n..=n_top).any(|k| {
                    (h_plus.coeff(k) * f_minus.coeff(-k)).norm_sqr() != 0.0
                });
                if remaining {
                    return Err(McError::PochhammerPole { r, n: n as u32 });
                }
                break;
            }
            ratio *= n as f64 / denom;
        }
        acc.add(h_plus.coeff(n) * f_minus.coeff(-n) * ratio);
    }
    Ok(acc.value())
}

/// The hypergeometric factor 2F1(1, 1; r; x) = sum_{n>=0} (n!/(r)_n) x^n.
fn hyp_series(r: f64, x: Complex64) -> McResult<Complex64> {
    let mut acc = CKahanSum::new();
    let mut term = Complex64::new(1.0, 0.0);
    acc.add(term);
    for n in 1..=8000u32 {
        let denom = r + n as f64 - 1.0;
        if denom == 0.0 {
            return Err(McError::PochhammerPole { r, n });
        }
        term = term * x * (n as f64 / denom);
        acc.add(term);
        if term.norm() <= 1e-17 * acc.value().norm().max(1e-300) {
            return Ok(acc.value());
        }
    }
    Err(McError::Divergence(
        "hypergeometric factor failed to converge on the contour".into(),
    ))
}

/// sigma_r as a contour integral in the disk coordinate: with w_z = w(z),
///
///   (sigma_r f)(z) = (1/(2 pi w_z)) int_0^{2pi} f~(c e^{i th})
///                     2F1(1,1;r; c e^{i th}/w_z) d th,
///
/// where f~ is the boundary function on |w| = c.  Requires c < |w_z|; the
/// series ratio c/|w_z| must stay below 0.99 or a divergence error is raised.
pub fn sigma_r_contour<F: Fn(Complex64) -> Complex64>(
    f_tilde: &F,
    r: f64,
    z: Complex64,
    c: f64,
    n_samples: usize,
) -> McResult<Complex64> {
    if !(c > 0.0) || n_samples < 8 {
        return Err(McError::InvalidParameter(
            "contour radius must be positive and sample count at least 8".into(),
        ));
    }
    let i = Complex64::new(0.0, 1.0);
    let w_z = (z - i) / (z + i);
    let ratio = c / w_z.norm();
    if ratio > 0.99 {
        return Err(McError::Divergence(format!(
            "contour ratio c/|w(z)| = {ratio:.4} exceeds 0.99; series diverges"
        )));
    }
    let mut acc = CKahanSum::new();
    for j in 0..n_samples {
        let th = 2.0 * PI * j as f64 / n_samples as f64;
        let w = Complex64::from_polar(c, th);
        acc.add(f_tilde(w) * hyp_series(r, w / w_z)?);
    }
    Ok(acc.value() / (n_samples as f64) / w_z)
}

/// Disk coordinate u = (tau - i)/(tau + i).
pub fn disk_coord(tau: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    (tau - i) / (tau + i)
}

/// Minus-part expansion of the Eichler kernel at tau1: coefficient
/// (1 - u1)^{2-r} binom(r-2, m) (-1)^m u1^m at w^{-m}, m = 0..N.
pub fn eichler_kernel_minus_expansion(
    tau1: Complex64,
    r: f64,
    n_trunc: usize,
) -> McResult<PolarSeries> {
    let u1 = disk_coord(tau1);
    if u1.norm() >= 1.0 {
        return Err(McError::Domain("kernel expansion needs tau in the upper half-plane".into()));
    }
    let head = cpow(Complex64::new(1.0, 0.0) - u1, 2.0 - r, ArgRange::upper_half())?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n_trunc + 1];
    let mut upow = Complex64::new(1.0, 0.0);
    for m in 0..=n_trunc {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        // stored ascending from w^{-N} up to w^0
        coeffs[n_trunc - m] = head * binom_real(r - 2.0, m as u32) * sign * upow;
        upow *= u1;
    }
    Ok(PolarSeries {
        n_min: -(n_trunc as i64),
        coeffs,
    })
}

/// Plus-part expansion of the Knopp kernel at tau2: coefficient
/// (1 - conj(u2))^{2-r} binom(r-2, n) (-1)^n conj(u2)^n at w^n, n = 0..N.
pub fn knopp_kernel_plus_expansion(
    tau2: Complex64,
    r: f64,
    n_trunc: usize,
) -> McResult<PolarSeries> {
    let u2c = disk_coord(tau2).conj();
    if u2c.norm() >= 1.0 {
        return Err(McError::Domain("kernel expansion needs tau in the upper half-plane".into()));
    }
    let head = cpow(Complex64::new(1.0, 0.0) - u2c, 2.0 - r, ArgRange::upper_half())?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n_trunc + 1];
    let mut upow = Complex64::new(1.0, 0.0);
    for (n, slot) in coeffs.iter_mut().enumerate() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        *slot = head * binom_real(r - 2.0, n as u32) * sign * upow;
        upow *= u2c;
    }
    Ok(PolarSeries { n_min: 0, coeffs })
}

/// Closed form of the kernel bracket: [p_{tau2}, q_{tau1}]_{2-r}
/// = (2i)^{2-r} (tau1 - conj(tau2))^{r-2}, principal branch (the difference
/// lies in the upper half-plane).
pub fn bracket_closed_form(tau1: Complex64, tau2: Complex64, r: f64) -> McResult<Complex64> {
    let two_i = Complex64::new(0.0, 2.0);
    let diff = tau1 - tau2.conj();
    Ok(cpow(two_i, 2.0 - r, ArgRange::upper_half())?
        * cpow(diff, r - 2.0, ArgRange::upper_half())?)
}
