//! q-expansions of the modular forms in play (eta powers, E4, products),
//! eta multiplier systems v[p], and pointwise evaluation with tail bounds.
//!
//! An expansion represents f(z) = Sum_{m=0}^{M} a(m) e^{2 pi i (m + p/12) z};
//! the exponent offset mu(m) = (12m + p)/12 is determined by the eta parameter p.

use crate::error::{McError, McResult};
use crate::special::sigma_div;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::f64::consts::PI;

/// Generator letters for multiplier-system words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gen {
    T,
    TInv,
    S,
    SInv,
}

const MAX_WORD_LEN: usize = 64;

/// The eta multiplier system v[p]: v(T) = e^{pi i p/6}, v(S) = e^{-pi i p/2}.
///
/// For p in 2Z this is a genuine character of the modular group; for other real
/// p the consistency 2-cocycle is nontrivial and only a restricted set of words
/// has an unambiguous value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierSystem {
    p: f64,
}

impl MultiplierSystem {
    pub fn new(p: f64) -> Self {
        MultiplierSystem { p }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// v(T) = e^{pi i p / 6}
    pub fn v_t(&self) -> Complex64 {
        Complex64::from_polar(1.0, PI * self.p / 6.0)
    }

    /// v(S) = e^{-pi i p / 2}
    pub fn v_s(&self) -> Complex64 {
        Complex64::from_polar(1.0, -PI * self.p / 2.0)
    }

    fn is_character(&self) -> bool {
        // p an even integer makes v[p] a character of SL2(Z)
        self.p == self.p.floor() && (self.p as i64).rem_euclid(2) == 0
    }

    /// Value of the multiplier on a word in the generators.
    ///
    /// For non-even p only words representing T^n, S, S^2, S^3 and S T^n are
    /// accepted; anything else is rejected rather than silently extended.
    pub fn value(&self, word: &[Gen]) -> McResult<Complex64> {
        if word.len() > MAX_WORD_LEN {
            return Err(McError::Multiplier(format!(
                "word length {} exceeds bound {MAX_WORD_LEN}",
                word.len()
            )));
        }
        if self.is_character() {
            let mut v = Complex64::new(1.0, 0.0);
            for g in word {
                v *= match g {
                    Gen::T => self.v_t(),
                    Gen::TInv => self.v_t().conj(),
                    Gen::S => self.v_s(),
                    Gen::SInv => self.v_s().conj(),
                };
            }
            return Ok(v);
        }
        // restricted shapes: T^n | S^k (k <= 3) | S T^n
        let s_count = word.iter().filter(|g| matches!(g, Gen::S)).count();
        if word.iter().any(|g| matches!(g, Gen::SInv)) {
            return Err(McError::Multiplier(
                "S^{-1} not accepted for non-even eta parameter".into(),
            ));
        }
        let t_power = |letters: &[Gen]| -> McResult<i64> {
            let mut n = 0i64;
            for g in letters {
                match g {
                    Gen::T => n += 1,
                    Gen::TInv => n -= 1,
                    _ => {
                        return Err(McError::Multiplier(
                            "word not of an accepted shape for non-even eta parameter".into(),
                        ))
                    }
                }
            }
            Ok(n)
        };
        let vt_pow = |n: i64| Complex64::from_polar(1.0, PI * self.p * n as f64 / 6.0);
        match s_count {
            0 => Ok(vt_pow(t_power(word)?)),
            1 if word.first() == Some(&Gen::S) => Ok(self.v_s() * vt_pow(t_power(&word[1..])?)),
            2 | 3 if word.iter().all(|g| matches!(g, Gen::S)) => {
                Ok(Complex64::from_polar(1.0, -PI * self.p * s_count as f64 / 2.0))
            }
            _ => Err(McError::Multiplier(
                "word not of an accepted shape for non-even eta parameter".into(),
            )),
        }
    }
}

fn sigma1(n: u64) -> f64 {
    sigma_div(1, n).expect("sigma_1 cannot overflow at expansion orders") as f64
}

/// Coefficients p_0(r)..p_M(r) of eta^{2r} from the logarithmic-derivative
/// recurrence m p_m(r) = -2r sum_{k=1}^{m} sigma_1(k) p_{m-k}(r).
pub fn eta_power_coeffs(r: f64, m_max: usize) -> Vec<f64> {
    let mut p = vec![0.0; m_max + 1];
    p[0] = 1.0;
    for m in 1..=m_max {
        let mut acc = 0.0;
        for k in 1..=m {
            acc += sigma1(k as u64) * p[m - k];
        }
        p[m] = -2.0 * r * acc / m as f64;
    }
    p
}

/// p_m as an exact polynomial in r (rational coefficients, ascending powers).
#[derive(Debug, Clone, PartialEq)]
pub struct EtaPolynomial {
    pub m: usize,
    pub coeffs: Vec<BigRational>,
}

impl EtaPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> &BigRational {
        self.coeffs.last().expect("nonempty by construction")
    }

    pub fn eval_f64(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * r + c.to_f64().expect("rational coefficient fits f64 range");
        }
        acc
    }

    pub fn eval_exact(&self, r: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * r + c;
        }
        acc
    }
}

/// Exact-rational version of the recurrence, returning p_0..p_m.
pub fn eta_power_polys(m_max: usize) -> Vec<EtaPolynomial> {
    let mut polys: Vec<Vec<BigRational>> = Vec::with_capacity(m_max + 1);
    polys.push(vec![BigRational::one()]);
    for m in 1..=m_max {
        // q = sum_k sigma_1(k) p_{m-k}, then p_m = (-2/m) * r * q
        let mut q = vec![BigRational::zero(); m];
        for k in 1..=m {
            let s = BigRational::from_integer(BigInt::from(
                sigma_div(1, k as u64).expect("small sigma"),
            ));
            for (i, c) in polys[m - k].iter().enumerate() {
                q[i] += c * &s;
            }
        }
        let factor = BigRational::new(BigInt::from(-2), BigInt::from(m as i64));
        let mut pm = vec![BigRational::zero(); m + 1];
        for (i, c) in q.into_iter().enumerate() {
            pm[i + 1] = c * &factor; // multiplication by r shifts degrees up
        }
        polys.push(pm);
    }
    polys
        .into_iter()
        .enumerate()
        .map(|(m, coeffs)| EtaPolynomial { m, coeffs })
        .collect()
}

/// A truncated Fourier expansion with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct QExpansion {
    r: f64,
    p: f64,
    coeffs: Vec<f64>,
}

impl QExpansion {
    pub fn new(r: f64, p: f64, coeffs: Vec<f64>) -> McResult<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(McError::Domain("q-expansion coefficients must be finite and nonempty".into()));
        }
        Ok(QExpansion { r, p, coeffs })
    }

    pub fn weight(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Exponent offset mu(m) = (12m + p)/12.
    pub fn mu(&self, m: usize) -> f64 {
        (12.0 * m as f64 + self.p) / 12.0
    }

    /// True when all Fourier exponents are positive (cusp form data).
    pub fn is_cuspidal(&self) -> bool {
        self.mu(0) > 0.0
    }

    /// Plain truncated evaluation (no tail accounting); Horner in q = e^{2 pi i z}.
    pub fn eval_value(&self, z: Complex64) -> Complex64 {
        let q = (Complex64::new(0.0, 2.0 * PI) * z).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        for &a in self.coeffs.iter().rev() {
            acc = acc * q + a;
        }
        let head = (Complex64::new(0.0, 2.0 * PI * self.p / 12.0) * z).exp();
        head * acc
    }

    /// Empirical coefficient growth rate: geometric mean over a trailing
    /// window, so isolated near-zero coefficients cannot spike the estimate.
    fn growth_ratio(&self) -> f64 {
        let m = self.coeffs.len();
        let w = (m / 2).clamp(1, 5);
        let peak = |range: std::ops::Range<usize>| -> f64 {
            range.map(|i| self.coeffs[i].abs()).fold(0.0, f64::max)
        };
        let hi = peak(m - w..m);
        if hi == 0.0 {
            return 0.0;
        }
        if m < 2 * w {
            return 1.0;
        }
        let lo = peak(m - 2 * w..m - w);
        if lo == 0.0 {
            return 2.0; // coefficients appeared from nothing; be conservative
        }
        (hi / lo).powf(1.0 / w as f64).max(1.0)
    }

    /// Evaluate with a tail bound: the truncated sum plus an estimate of the
    /// dropped terms from the empirical growth ratio with a safety factor of 10.
    pub fn evaluate(&self, z: Complex64, tail_tol: f64) -> McResult<(Complex64, f64)> {
        if z.im <= 0.0 {
            return Err(McError::Domain("evaluation point must lie in the upper half-plane".into()));
        }
        let value = self.eval_value(z);
        let qabs = (-2.0 * PI * z.im).exp();
        let growth = 10.0 * self.growth_ratio();
        let rho = growth * qabs;
        let m = self.truncation();
        let w = (self.coeffs.len() / 2).clamp(1, 5);
        let last = (m + 1 - w..=m)
            .map(|i| self.coeffs[i].abs())
            .fold(0.0f64, f64::max)
            * growth.max(1.0);
        let bound = if last == 0.0 {
            0.0
        } else if rho >= 1.0 {
            f64::INFINITY
        } else {
            last * (-2.0 * PI * z.im * self.mu(m)).exp() * rho / (1.0 - rho)
        };
        if bound > tail_tol {
            return Err(McError::TruncationInsufficient { bound, tol: tail_tol });
        }
        Ok((value, bound))
    }
}

/// eta^{2r} as a QExpansion: weight r, eta parameter p = r.
pub fn eta_power_expansion(r: f64, m_max: usize) -> QExpansion {
    QExpansion {
        r,
        p: r,
        coeffs: eta_power_coeffs(r, m_max),
    }
}

/// The normalized Eisenstein series E4: a(0) = 1, a(n) = 240 sigma_3(n).
pub fn e4_expansion(m_max: usize) -> QExpansion {
    let mut coeffs = Vec::with_capacity(m_max + 1);
    coeffs.push(1.0);
    for n in 1..=m_max {
        coeffs.push(240.0 * sigma_div(3, n as u64).expect("sigma_3 in range") as f64);
    }
    QExpansion { r: 4.0, p: 0.0, coeffs }
}

/// Cauchy product of two expansions, truncated at order M; weights and eta
/// parameters add.
pub fn qexp_mul(f: &QExpansion, g: &QExpansion, m_max: usize) -> QExpansion {
    let mut coeffs = vec![0.0; m_max + 1];
    for (i, &a) in f.coeffs.iter().enumerate().take(m_max + 1) {
        if a == 0.0 {
            continue;
        }
        for (j, &b) in g.coeffs.iter().enumerate().take(m_max + 1 - i) {
            coeffs[i + j] += a * b;
        }
    }
    QExpansion {
        r: f.r + g.r,
        p: f.p + g.p,
        coeffs,
    }
}

/// Verify the structural invariants of the exact polynomials (used by tests
/// and the self-test command): p_0 = 1, deg p_m = m, leading = (-2)^m / m!.
pub fn eta_polys_invariant_ok(polys: &[EtaPolynomial]) -> bool {
    let mut lead = BigRational::one();
    for (m, poly) in polys.iter().enumerate() {
        if poly.degree() != m {
            return false;
        }
        if m > 0 {
            lead = lead * BigRational::new(BigInt::from(-2), BigInt::from(m as i64));
        }
        if poly.leading() != &lead {
            return false;
        }
    }
    true
}
