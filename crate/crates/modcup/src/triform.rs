//! The Psi kernel, the trilinear form T by Fourier triple sum and by direct
//! nested quadrature, the Table-1 normalization, and the Haberland identity
//! relating the cup product to the Petersson scalar product.

use crate::error::{McError, McResult};
use crate::forms::{e4_expansion, eta_power_expansion, qexp_mul, QExpansion};
use crate::quad::{
    integrate_fundamental_domain, integrate_vertical_ray, ContourPath, GaussJacobi01,
    GaussLegendre,
};
use crate::special::{beta, cpow, gamma_real, sinc, ArgRange, CKahanSum, KahanSum};
use num_complex::Complex64;
use rayon::prelude::*;
use std::cell::Cell;
use std::f64::consts::PI;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// The weight/parameter data of a triple (f1, f2, f3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightTriple {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl WeightTriple {
    pub fn new(r1: f64, r2: f64, r3: f64, p1: f64, p2: f64, p3: f64) -> McResult<Self> {
        let wt = WeightTriple { r1, r2, r3, p1, p2, p3 };
        if (r1 + r2 + r3 - 4.0).abs() > 1e-12 {
            return Err(McError::InvalidParameter(format!(
                "weights must sum to 4, got {r1} + {r2} + {r3}"
            )));
        }
        if (p1 + p2 + p3).abs() > 1e-12 {
            return Err(McError::InvalidParameter(format!(
                "eta parameters must sum to 0, got {p1} + {p2} + {p3}"
            )));
        }
        for (r, p) in [(r1, p1), (r2, p2), (r3, p3)] {
            let k = (p - r) / 2.0;
            if (k - k.round()).abs() > 1e-12 {
                return Err(McError::InvalidParameter(format!(
                    "parameter p = {p} must match weight r = {r} mod 2"
                )));
            }
        }
        if !(r1 < 2.0) || !(r2 > 0.0 && r2 < 2.0) || !(r3 > 0.0) {
            return Err(McError::InvalidParameter(format!(
                "need r1 < 2, 0 < r2 < 2, r3 > 0; got ({r1}, {r2}, {r3})"
            )));
        }
        Ok(wt)
    }

    /// The Table-1 setup: f1 = eta^{2 r1}, f2 = eta^{2 r2},
    /// f3 = E4 eta^{-2(r1+r2)}, so (p1, p2, p3) = (r1, r2, -(r1+r2)).
    pub fn for_table(r1: f64, r2: f64) -> McResult<Self> {
        WeightTriple::new(r1, r2, 4.0 - r1 - r2, r1, r2, -(r1 + r2))
    }
}

/// Outcome of the Fourier triple sum.
#[derive(Debug, Clone, Copy)]
pub struct TripleFormResult {
    pub value: Complex64,
    pub tail_estimate: f64,
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    /// largest Gauss-Jacobi node count any Psi evaluation needed
    pub max_nodes: usize,
}

/// Pre-built Gauss-Jacobi ladder for the Psi integrals at fixed (r1, r2):
/// weight v^{1-r2} (1-v)^{1-r1} on [0,1], node counts doubling 16..256.
pub struct PsiRules {
    rules: Vec<GaussJacobi01>,
    r1: f64,
    r2: f64,
}

impl PsiRules {
    pub fn new(r1: f64, r2: f64) -> McResult<Self> {
        if !(r1 < 2.0) || !(r2 > 0.0 && r2 < 2.0) {
            return Err(McError::InvalidParameter(format!(
                "Psi kernel needs r1 < 2 and 0 < r2 < 2, got ({r1}, {r2})"
            )));
        }
        let alpha = 1.0 - r1;
        let beta_exp = 1.0 - r2;
        let rules = [16usize, 32, 64, 128, 256]
            .iter()
            .map(|&n| GaussJacobi01::new(n, alpha, beta_exp))
            .collect::<McResult<Vec<_>>>()?;
        Ok(PsiRules { rules, r1, r2 })
    }

    /// The smooth remainder of the rescaled integrand at u = mu3 * v.
    fn remainder(mu1: f64, mu2: f64, mu3: f64, v: f64) -> f64 {
        (-PI * (2.0 - SQRT3) * mu3 * v).exp() / (mu2 + mu3 * v)
            * sinc(PI * (mu1 + (1.0 - v) * mu3))
    }

    /// The bare integral factor int_0^1 v^{1-r2} (1-v)^{1-r1} remainder dv,
    /// node-doubled until the change drops below tol.  Also returns the node
    /// count that achieved convergence.
    fn integral_part(&self, mu1: f64, mu2: f64, mu3: f64, tol: f64) -> McResult<(f64, usize)> {
        let mut prev = self.rules[0]
            .integrate(&|v| Complex64::new(Self::remainder(mu1, mu2, mu3, v), 0.0))
            .re;
        for rule in &self.rules[1..] {
            let cur = rule
                .integrate(&|v| Complex64::new(Self::remainder(mu1, mu2, mu3, v), 0.0))
                .re;
            let delta = (cur - prev).abs();
            if delta <= tol.max(1e-14 * cur.abs()) {
                return Ok((cur, rule.nodes.len()));
            }
            prev = cur;
        }
        Err(McError::QuadratureNonConvergence {
            panels: self.rules.last().expect("nonempty ladder").nodes.len(),
            err: f64::NAN,
            tol,
        })
    }

    /// Psi-tilde: the exponential prefactor times the bare integral (the
    /// paper's Psi without its 1/(2 pi i)).  Real-valued.  Valid whenever
    /// mu2 > 0 and mu2 + min(0, mu3) > 0; mu3 = 0 takes the closed form
    /// e^{-2 pi mu2 - pi sqrt3 mu1} B(2-r2, 2-r1) S(pi mu1)/mu2.
    pub fn psi_tilde(&self, mu1: f64, mu2: f64, mu3: f64, tol: f64) -> McResult<(f64, usize)> {
        if !(mu2 > 0.0) || !(mu2 + mu3.min(0.0) > 0.0) {
            return Err(McError::InvalidParameter(format!(
                "Psi needs mu2 > 0 and mu2 + min(0, mu3) > 0, got mu2 = {mu2}, mu3 = {mu3}"
            )));
        }
        let head = (-2.0 * PI * mu2 - PI * SQRT3 * (mu1 + mu3)).exp();
        if mu3 == 0.0 {
            let b = beta(2.0 - self.r2, 2.0 - self.r1)?;
            return Ok((head * b * sinc(PI * mu1) / mu2, 0));
        }
        let (integral, nodes) = self.integral_part(mu1, mu2, mu3, tol)?;
        Ok((head * integral, nodes))
    }
}

/// Psi-tilde as a standalone call (builds the quadrature ladder internally;
/// use PsiRules when evaluating many points at fixed r1, r2).
pub fn psi_tilde(r1: f64, r2: f64, mu1: f64, mu2: f64, mu3: f64, tol: f64) -> McResult<f64> {
    Ok(PsiRules::new(r1, r2)?.psi_tilde(mu1, mu2, mu3, tol)?.0)
}

/// The paper-normalized Psi kernel including the 1/(2 pi i) prefactor.
pub fn psi_kernel(r1: f64, r2: f64, mu1: f64, mu2: f64, mu3: f64, tol: f64) -> McResult<Complex64> {
    let pt = psi_tilde(r1, r2, mu1, mu2, mu3, tol)?;
    // 1/(2 pi i) = -i/(2 pi)
    Ok(Complex64::new(0.0, -pt / (2.0 * PI)))
}

fn validate_triple(
    wt: &WeightTriple,
    f1: &QExpansion,
    f2: &QExpansion,
    f3: &QExpansion,
) -> McResult<()> {
    let pairs = [
        (f1.weight(), wt.r1, f1.p(), wt.p1),
        (f2.weight(), wt.r2, f2.p(), wt.p2),
        (f3.weight(), wt.r3, f3.p(), wt.p3),
    ];
    for (rw, r, pw, p) in pairs {
        if (rw - r).abs() > 1e-12 || (pw - p).abs() > 1e-12 {
            return Err(McError::InvalidParameter(format!(
                "form data (r = {rw}, p = {pw}) disagrees with the weight triple (r = {r}, p = {p})"
            )));
        }
    }
    if !f2.is_cuspidal() {
        return Err(McError::InvalidParameter(
            "f2 must be a cusp form (positive leading exponent)".into(),
        ));
    }
    Ok(())
}

/// The bare Fourier triple sum sum a1 a2 a3 * Psi-tilde over the coefficient
/// grid, parallelized over m1 with per-partition compensated accumulation and
/// an ordered sequential fold.  Returns (sum, tail estimate, max node count).
fn cell_sum(
    wt: &WeightTriple,
    f1: &QExpansion,
    f2: &QExpansion,
    f3: &QExpansion,
    tol: f64,
) -> McResult<(f64, f64, usize)> {
    validate_triple(wt, f1, f2, f3)?;
    let rules = PsiRules::new(wt.r1, wt.r2)?;
    let (m1_max, m2_max, m3_max) = (f1.truncation(), f2.truncation(), f3.truncation());
    let psi_tol = (tol * 1e-3).max(1e-13);
    let partials = (0..=m1_max)
        .into_par_iter()
        .map(|m1| -> McResult<(f64, f64, usize)> {
            let a1 = f1.coeffs()[m1];
            if a1 == 0.0 {
                return Ok((0.0, 0.0, 0));
            }
            let mu1 = f1.mu(m1);
            let mut acc = KahanSum::new();
            let mut shell = 0.0f64;
            let mut nodes = 0usize;
            for m2 in 0..=m2_max {
                let a2 = f2.coeffs()[m2];
                if a2 == 0.0 {
                    continue;
                }
                let mu2 = f2.mu(m2);
                for m3 in 0..=m3_max {
                    let a3 = f3.coeffs()[m3];
                    if a3 == 0.0 {
                        continue;
                    }
                    let mu3 = f3.mu(m3);
                    let (psi, n) = rules.psi_tilde(mu1, mu2, mu3, psi_tol)?;
                    let term = a1 * a2 * a3 * psi;
                    acc.add(term);
                    nodes = nodes.max(n);
                    if m1 == m1_max || m2 == m2_max || m3 == m3_max {
                        shell += term.abs();
                    }
                }
            }
            Ok((acc.value(), shell, nodes))
        })
        .collect::<McResult<Vec<_>>>()?;
    let mut total = KahanSum::new();
    let mut shell = 0.0f64;
    let mut nodes = 0usize;
    for (v, s, n) in partials {
        total.add(v);
        shell += s;
        nodes = nodes.max(n);
    }
    let tail = 10.0 * shell;
    if !total.value().is_finite() {
        return Err(McError::Domain("triple sum produced a non-finite value".into()));
    }
    if tail > tol {
        return Err(McError::TruncationInsufficient { bound: tail, tol });
    }
    Ok((total.value(), tail, nodes))
}

fn triple_prefactor(wt: &WeightTriple) -> McResult<Complex64> {
    let minus_2i = Complex64::new(0.0, -2.0);
    Ok(cpow(minus_2i, wt.r3, ArgRange::upper_half())?
        * (gamma_real(wt.r3)? / (gamma_real(2.0 - wt.r1)? * gamma_real(2.0 - wt.r2)?)))
}

/// T(f1, f2, f3) by the Fourier-expansion series: the coefficient sum of
/// Psi terms with the (-2i)^{r3}/B(2-r1, 2-r2) prefactor.  The overall sign
/// is fixed against the direct contour route (and the antiderivative of the
/// elementary tau2 integral): T = prefactor * (i/(2 pi)) * sum a1 a2 a3 Psi~.
pub fn triple_form_series(
    wt: &WeightTriple,
    f1: &QExpansion,
    f2: &QExpansion,
    f3: &QExpansion,
    tol: f64,
) -> McResult<TripleFormResult> {
    let (sum, tail, nodes) = cell_sum(wt, f1, f2, f3, tol)?;
    let pref = triple_prefactor(wt)?;
    let value = pref * Complex64::new(0.0, sum / (2.0 * PI));
    Ok(TripleFormResult {
        value,
        tail_estimate: tail * pref.norm() / (2.0 * PI),
        m1: f1.truncation(),
        m2: f2.truncation(),
        m3: f3.truncation(),
        max_nodes: nodes,
    })
}

/// One Table-1 cell: the bare sum a1 a2 a3 Psi~ for f1 = eta^{2 r1},
/// f2 = eta^{2 r2}, f3 = E4 eta^{-2(r1+r2)}, all truncated at order M
/// (the table normalization drops the prefactor and the (2 pi i)^{-1}).
/// Returns (value, tail estimate).
pub fn table_entry(r1: f64, r2: f64, m_trunc: usize, tol: f64) -> McResult<(f64, f64)> {
    let wt = WeightTriple::for_table(r1, r2)?;
    let f1 = eta_power_expansion(r1, m_trunc);
    let f2 = eta_power_expansion(r2, m_trunc);
    let f3 = qexp_mul(
        &e4_expansion(m_trunc),
        &eta_power_expansion(-(r1 + r2), m_trunc),
        m_trunc,
    );
    let (sum, tail, _) = cell_sum(&wt, &f1, &f2, &f3, tol)?;
    Ok((sum, tail))
}

/// Runs f inside a quadrature closure, stashing the first error and feeding
/// NaN outward so the driver gives up; the stashed error is reported instead.
struct ErrStash(Cell<Option<McError>>);

impl ErrStash {
    fn new() -> Self {
        ErrStash(Cell::new(None))
    }

    fn absorb(&self, r: McResult<Complex64>) -> Complex64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                let first = self.0.take();
                self.0.set(Some(first.unwrap_or(e)));
                Complex64::new(f64::NAN, f64::NAN)
            }
        }
    }

    fn check<T>(&self, fallthrough: McResult<T>) -> McResult<T> {
        if let Some(e) = self.0.take() {
            return Err(e);
        }
        fallthrough
    }
}

fn arc_rho() -> ContourPath {
    ContourPath::CircularArc {
        center: Complex64::new(0.0, 0.0),
        radius: 1.0,
        theta0: 2.0 * PI / 3.0,
        theta1: PI / 3.0,
    }
}

/// T(f1, f2, f3) by the direct nested contour quadrature of the defining
/// double integral: tau1 on the unit-circle geodesic from rho-1 to rho,
/// tau2 on the vertical ray above i, and the chord variable u by
/// Gauss-Jacobi with weight u^{1-r2} (1-u)^{1-r1}.  This is the expensive
/// cross-check of the series route, not the production path.
pub fn triple_form_direct(
    wt: &WeightTriple,
    f1: &QExpansion,
    f2: &QExpansion,
    f3: &QExpansion,
    tol: f64,
) -> McResult<Complex64> {
    validate_triple(wt, f1, f2, f3)?;
    // net exponential decay along the tau2 ray: f2 decays like e^{-2 pi mu2(0) y}
    // while the chord factor can grow like e^{2 pi |mu3(0)| u y} when mu3(0) < 0
    let decay = 2.0 * PI * (f2.mu(0) + f3.mu(0).min(0.0));
    if !(decay > 0.0) {
        return Err(McError::DecayViolation(format!(
            "tau2 integrand does not decay: rate {decay}"
        )));
    }
    // truncation sanity at the low points of each path (the chord stays in
    // Im >= sqrt(3)/2, comfortably above the 0.5 floor)
    let rho = Complex64::from_polar(1.0, PI / 3.0);
    f1.evaluate(rho, 1e-3 * tol)?;
    f2.evaluate(Complex64::new(0.0, 1.0), 1e-3 * tol)?;
    f3.evaluate(rho, 1e-3 * tol)?;

    let pref = triple_prefactor(wt)?;
    let eps = tol / pref.norm().max(1e-300);
    let gj = GaussJacobi01::new(48, 1.0 - wt.r1, 1.0 - wt.r2)?;
    let gl = GaussLegendre::new(48);
    // fixed geometric panelization of the ray keeps the tau2 integral smooth
    // as a function of tau1 (no adaptive panel-switching noise underneath the
    // outer adaptive driver)
    let y_top = (1.0 + 36.0 / decay).clamp(8.0, 600.0);
    let mut cuts = vec![1.0f64];
    while *cuts.last().expect("nonempty") < y_top {
        let next = (cuts.last().expect("nonempty") * 2.0).min(y_top);
        cuts.push(next);
    }

    let (v, _) = arc_rho().integrate(0.5 * eps, 0.0, &|tau1: Complex64| {
        let f1v = f1.eval_value(tau1);
        if f1v.norm_sqr() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut ray = CKahanSum::new();
        for win in cuts.windows(2) {
            let seg = gl.integrate(win[0], win[1], &|y| {
                let tau2 = Complex64::new(0.0, y);
                let chord = |u: f64| f3.eval_value(tau1 + u * (tau2 - tau1));
                f2.eval_value(tau2) * gj.integrate(&chord)
            });
            ray.add(seg);
        }
        // d tau2 = i dy on the ray
        f1v * Complex64::new(0.0, 1.0) * ray.value()
    })?;
    Ok(pref * v)
}

/// The contour side of the Haberland identity:
/// (2i)^{2-r} int_{arc} f1(tau1) int_{i}^{i inf} conj(f2(tau2))
/// (tau1 - conj(tau2))^{r-2} dconj(tau2) dtau1, with dconj(tau2) = -i dy.
pub fn haberland_lhs(
    f1: &QExpansion,
    f2: &QExpansion,
    r: f64,
    tol: f64,
) -> McResult<Complex64> {
    for f in [f1, f2] {
        if (f.weight() - r).abs() > 1e-12 || (f.p() - f1.p()).abs() > 1e-12 || !f.is_cuspidal() {
            return Err(McError::InvalidParameter(
                "Haberland check needs two cusp forms of the same weight and parameter".into(),
            ));
        }
    }
    let head = cpow(Complex64::new(0.0, 2.0), 2.0 - r, ArgRange::upper_half())?;
    let eps = tol / head.norm().max(1e-300);
    let decay2 = 2.0 * PI * f2.mu(0);
    let base = Complex64::new(0.0, 1.0);
    let stash = ErrStash::new();
    let outer = arc_rho().integrate(0.5 * eps, 0.0, &|tau1: Complex64| {
        // on the ray tau2 = iy is purely imaginary, so tau1 - conj(tau2)
        // = tau1 + tau2 stays in the upper half-plane (principal branch)
        let inner = integrate_vertical_ray(base, decay2, 0.05 * eps, &|tau2| {
            f2.eval_value(tau2).conj()
                * cpow(tau1 + tau2, r - 2.0, ArgRange::upper_half())
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        });
        // the ray driver returns i * int g dy; we want -i * int g dy
        stash.absorb(inner.map(|(v, _)| -v)) * f1.eval_value(tau1)
    });
    let (v, _) = stash.check(outer)?;
    Ok(head * v)
}

/// Petersson scalar product over the standard fundamental domain:
/// int_F f1(z) conj(f2(z)) y^{r-2} dx dy.
pub fn petersson(f1: &QExpansion, f2: &QExpansion, r: f64, tol: f64) -> McResult<Complex64> {
    for f in [f1, f2] {
        if (f.weight() - r).abs() > 1e-12 || (f.p() - f1.p()).abs() > 1e-12 || !f.is_cuspidal() {
            return Err(McError::InvalidParameter(
                "Petersson product needs two cusp forms of the same weight and parameter".into(),
            ));
        }
    }
    let (v, _) = integrate_fundamental_domain(tol, |x, y| {
        let z = Complex64::new(x, y);
        f1.eval_value(z) * f2.eval_value(z).conj() * y.powf(r - 2.0)
    })?;
    Ok(v)
}
