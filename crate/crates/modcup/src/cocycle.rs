//! Eichler and Knopp integrals along paths in the upper half-plane, the
//! cup-product representative, equivariance residuals, and the exact
//! coinvariant dimension count for the polynomial modules.

use crate::error::{McError, McResult};
use crate::forms::{Gen, MultiplierSystem, QExpansion};
use crate::quad::{integrate_vertical_ray, ContourPath};
use crate::special::{cpow, ArgRange};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// An endpoint for a cocycle path: a point of H or the cusp at i*infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    Point(Complex64),
    Infinity,
}

/// rho = e^{i pi/3}; the cup-product representative integrates f1 over the
/// arc endpoints (rho - 1, rho).
pub fn rho() -> Complex64 {
    Complex64::from_polar(1.0, PI / 3.0)
}

fn check_form_truncation(f: &QExpansion, z: Complex64, tol: f64) -> McResult<()> {
    f.evaluate(z, tol).map(|_| ())
}

/// c_f(z1, z2; t) = int_{z1}^{z2} f(tau) (tau - t)^{r-2} d tau for Im t < 0,
/// with arg(tau - t) in (-pi/2, 3pi/2].  The integrand is holomorphic in tau
/// on H, so finite legs run along straight segments; an i*infinity endpoint
/// runs up a vertical ray and requires a cusp form.
pub fn eichler_integral(
    f: &QExpansion,
    z1: Endpoint,
    z2: Endpoint,
    t: Complex64,
    tol: f64,
) -> McResult<Complex64> {
    if t.im >= 0.0 {
        return Err(McError::Domain(format!(
            "Eichler integral needs Im t < 0, got t = {t}"
        )));
    }
    if z1 == z2 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let range = ArgRange::eichler();
    let s = f.weight() - 2.0;
    let integrand = |tau: Complex64| -> Complex64 {
        f.eval_value(tau) * cpow(tau - t, s, range).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    };
    match (z1, z2) {
        (Endpoint::Point(a), Endpoint::Point(b)) => {
            check_form_truncation(f, if a.im <= b.im { a } else { b }, 0.1 * tol)?;
            let path = ContourPath::Segment { a, b };
            let (v, _) = path.integrate(tol, 0.0, &integrand)?;
            Ok(v)
        }
        (Endpoint::Point(a), Endpoint::Infinity) => {
            if !f.is_cuspidal() {
                return Err(McError::DecayViolation(
                    "i*infinity endpoint requires a cusp form (positive leading exponent)".into(),
                ));
            }
            check_form_truncation(f, a, 0.1 * tol)?;
            let decay = 2.0 * PI * f.mu(0);
            let (v, _) = integrate_vertical_ray(a, decay, tol, &integrand)?;
            Ok(v)
        }
        (Endpoint::Infinity, Endpoint::Point(b)) => {
            Ok(-eichler_integral(f, Endpoint::Point(b), Endpoint::Infinity, t, tol)?)
        }
        (Endpoint::Infinity, Endpoint::Infinity) => Ok(Complex64::new(0.0, 0.0)),
    }
}

/// Knopp integral via the iota-conjugation identity:
/// c^K_f(z1, z2; z) = conj(c_f(z1, z2; conj(z))) for Im z > 0.  One quadrature
/// code path, one branch convention.
pub fn knopp_integral(
    f: &QExpansion,
    z1: Endpoint,
    z2: Endpoint,
    z: Complex64,
    tol: f64,
) -> McResult<Complex64> {
    if z.im <= 0.0 {
        return Err(McError::Domain(format!(
            "Knopp integral needs Im z > 0, got z = {z}"
        )));
    }
    Ok(eichler_integral(f, z1, z2, z.conj(), tol)?.conj())
}

/// The cup-product representative c_{f1}(rho-1, rho; t) * c_{f2}(i, inf; t).
pub fn cup_representative(
    f1: &QExpansion,
    f2: &QExpansion,
    t: Complex64,
    tol: f64,
) -> McResult<Complex64> {
    let a = eichler_integral(
        f1,
        Endpoint::Point(rho() - 1.0),
        Endpoint::Point(rho()),
        t,
        tol,
    )?;
    let b = eichler_integral(
        f2,
        Endpoint::Point(Complex64::new(0.0, 1.0)),
        Endpoint::Infinity,
        t,
        tol,
    )?;
    Ok(a * b)
}

/// A deferred cocycle evaluation: the form, the endpoints, and the tolerance,
/// evaluated at lower-half-plane t (Eichler) or upper-half-plane z (Knopp).
pub struct CocycleValue<'a> {
    pub form: &'a QExpansion,
    pub z1: Endpoint,
    pub z2: Endpoint,
    pub tol: f64,
}

impl CocycleValue<'_> {
    pub fn at(&self, t: Complex64) -> McResult<Complex64> {
        eichler_integral(self.form, self.z1, self.z2, t, self.tol)
    }

    pub fn knopp_at(&self, z: Complex64) -> McResult<Complex64> {
        knopp_integral(self.form, self.z1, self.z2, z, self.tol)
    }
}

fn apply_generator(g: Gen, z: Complex64) -> Complex64 {
    match g {
        Gen::T => z + 1.0,
        Gen::TInv => z - 1.0,
        Gen::S | Gen::SInv => -1.0 / z,
    }
}

/// |c_f(g^{-1} z1, g^{-1} z2; t) - v(g)^{-1} (c t + d)^{r-2} c_f(z1, z2; g t)|
/// for g in {S, T}, with arg(c t + d) in [-pi, pi).  The v(g)^{-1} twist is
/// what the eta-power integrals actually satisfy (checked against quadrature
/// on both sides); with v(g) in its place the residual is O(1).
pub fn equivariance_residual(
    f: &QExpansion,
    v: &MultiplierSystem,
    g: Gen,
    z1: Complex64,
    z2: Complex64,
    t: Complex64,
    tol: f64,
) -> McResult<f64> {
    if !matches!(g, Gen::S | Gen::T) {
        return Err(McError::InvalidParameter(
            "equivariance residual is defined for the generators S and T".into(),
        ));
    }
    let ginv = match g {
        Gen::T => Gen::TInv,
        Gen::S => Gen::SInv,
        _ => unreachable!(),
    };
    let gt = apply_generator(g, t);
    if t.im >= 0.0 || gt.im >= 0.0 {
        return Err(McError::Domain("t and g t must both lie in the lower half-plane".into()));
    }
    let lhs = eichler_integral(
        f,
        Endpoint::Point(apply_generator(ginv, z1)),
        Endpoint::Point(apply_generator(ginv, z2)),
        t,
        tol,
    )?;
    // bottom row (c, d) of g: T -> (0, 1), S -> (1, 0)
    let ct_d = match g {
        Gen::T => Complex64::new(1.0, 0.0),
        Gen::S => t,
        _ => unreachable!(),
    };
    let aut = cpow(ct_d, f.weight() - 2.0, ArgRange::lower_half())?;
    let twist = v.value(&[g])?.conj(); // v(g)^{-1} on the unit circle
    let rhs = twist * aut * eichler_integral(f, Endpoint::Point(z1), Endpoint::Point(z2), gt, tol)?;
    Ok((lhs - rhs).norm())
}

/// The weight-(r-2) polynomial module: monomials t^0..t^{r-2} with the
/// multiplier-twisted generator action of the coinvariant computation.
#[derive(Debug, Clone, Copy)]
pub struct PolyModule {
    pub r: u32,
    pub p: i64,
}

impl PolyModule {
    pub fn new(r: u32, p: i64) -> McResult<Self> {
        if !(2..=40).contains(&r) {
            return Err(McError::InvalidParameter(format!(
                "polynomial module needs 2 <= r <= 40, got {r}"
            )));
        }
        if (p - r as i64).rem_euclid(2) != 0 {
            return Err(McError::InvalidParameter(format!(
                "eta parameter p = {p} must match r = {r} mod 2"
            )));
        }
        Ok(PolyModule { r, p })
    }

    pub fn dim(&self) -> usize {
        (self.r - 1) as usize
    }

    fn chi_t(&self) -> Complex64 {
        Complex64::from_polar(1.0, PI * self.p as f64 / 6.0)
    }

    fn chi_s(&self) -> Complex64 {
        Complex64::from_polar(1.0, PI * self.p as f64 / 2.0)
    }

    /// Matrix of p(t) -> chi_T p(t + 1) on the monomial basis:
    /// column a expands (t+1)^a, entry [b, a] = chi_T * C(a, b).
    pub fn m_t(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let chi = self.chi_t();
        DMatrix::from_fn(d, d, |b, a| {
            if b <= a {
                chi * binom_u(a, b)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Matrix of p(t) -> chi_S t^{r-2} p(-1/t): column a maps to
    /// chi_S (-1)^a t^{r-2-a}.
    pub fn m_s(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let chi = self.chi_s();
        let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for a in 0..d {
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
            m[(d - 1 - a, a)] = chi * sign;
        }
        m
    }
}

fn binom_u(n: usize, k: usize) -> f64 {
    let mut v = 1.0f64;
    for j in 0..k {
        v *= (n - j) as f64 / (j + 1) as f64;
    }
    v
}

/// Coinvariant dimension dim V - rank [ I - M_S | I - M_T ], rank by singular
/// values against the threshold 1e-9 * sigma_max.  Errors if any singular
/// value sits within a factor 10^3 of the threshold (ambiguous rank).
/// Coinvariant dimension together with the smallest ratio distance of any
/// singular value from the rank-decision threshold (how safe the call was).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinvariantResult {
    pub dim: usize,
    pub margin: f64,
}

pub fn poly_coinvariant_dim(r: u32, p: i64) -> McResult<CoinvariantResult> {
    let module = PolyModule::new(r, p)?;
    let d = module.dim();
    let ms = module.m_s();
    let mt = module.m_t();
    let eye = DMatrix::<Complex64>::identity(d, d);
    let mut a = DMatrix::from_element(d, 2 * d, Complex64::new(0.0, 0.0));
    a.view_mut((0, 0), (d, d)).copy_from(&(&eye - &ms));
    a.view_mut((0, d), (d, d)).copy_from(&(&eye - &mt));
    let svals = a.svd(false, false).singular_values;
    let smax = svals.iter().cloned().fold(0.0f64, f64::max);
    if smax == 0.0 {
        // both generators act trivially: everything is coinvariant
        return Ok(CoinvariantResult {
            dim: d,
            margin: f64::INFINITY,
        });
    }
    let thr = 1e-9 * smax;
    let mut rank = 0usize;
    let mut margin = f64::INFINITY;
    for &s in svals.iter() {
        if s > thr * 1e3 {
            rank += 1;
        } else if s > thr * 1e-3 {
            return Err(McError::ThresholdAmbiguity { sv: s, thr });
        }
        if s > 0.0 {
            margin = margin.min(if s > thr { s / thr } else { thr / s });
        }
    }
    Ok(CoinvariantResult {
        dim: d - rank,
        margin,
    })
}
