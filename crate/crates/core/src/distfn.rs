//! Standard normal and Student-t distribution functions and quantiles.
//!
//! The normal CDF is evaluated through the complementary error function with
//! the argument scaling `x / sqrt(2)` carried in double-double precision, so
//! the lower tail keeps full relative accuracy down to underflow. The Student-t
//! CDF goes through the regularized incomplete beta function. Both quantiles
//! are found by safeguarded Newton iteration on the respective CDF.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Low-order part of `1/sqrt(2)` such that `FRAC_1_SQRT_2 + FRAC_1_SQRT_2_LO`
/// is accurate to about 32 significant digits.
const FRAC_1_SQRT_2_LO: f64 = -4.833646656726457e-17;

/// `ln(sqrt(2 pi))`.
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(domain(format!(
                "probability must lie in [0, 1], got {value}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl std::fmt::Display for Probability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Standard normal CDF `Φ(x)`.
///
/// ```
/// let p = eqtest::distfn::norm_cdf(1.959963984540054).unwrap();
/// assert!((p - 0.975).abs() < 1e-15);
/// ```
pub fn norm_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain(format!(
            "norm_cdf: argument must be finite, got {x}"
        )));
    }
    Ok(phi(x))
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Unchecked `Φ(x)`; callers guarantee a finite argument.
pub(crate) fn phi(x: f64) -> f64 {
    if x < 0.0 {
        lower_tail(-x)
    } else {
        1.0 - lower_tail(x)
    }
}

/// `Φ(-t)` for `t >= 0`, accurate in relative terms.
fn lower_tail(t: f64) -> f64 {
    // y = t / sqrt(2) as y_hi + y_lo; erfc(y_hi + y_lo) ≈ erfc(y_hi) - y_lo * erfc'(y_hi)
    let y_hi = t * FRAC_1_SQRT_2;
    let y_lo = t.mul_add(FRAC_1_SQRT_2, -y_hi) + t * FRAC_1_SQRT_2_LO;
    let base = libm::erfc(y_hi);
    if base == 0.0 {
        return 0.0;
    }
    0.5 * (base - y_lo * FRAC_2_SQRT_PI * (-y_hi * y_hi).exp())
}

/// Probability that a standard normal variable falls in `(lo, hi)`,
/// evaluated on whichever side keeps the difference well conditioned.
/// Returns 0 for an empty interval.
pub(crate) fn normal_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let p = if lo >= 0.0 {
        lower_tail(lo) - lower_tail(hi)
    } else if hi <= 0.0 {
        phi(hi) - phi(lo)
    } else {
        1.0 - lower_tail(-lo) - lower_tail(hi)
    };
    p.max(0.0)
}

/// Standard normal quantile `z_p`, i.e. `Φ(z_p) = p`.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!(
            "norm_quantile: p must lie in (0, 1), got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // 1 - p is exact for p >= 0.5
    Ok(if p < 0.5 {
        lower_quantile(p)
    } else {
        -lower_quantile(1.0 - p)
    })
}

/// Quantile for `0 < q < 0.5`; the result is negative.
fn lower_quantile(q: f64) -> f64 {
    // Rational starting point, |error| < 4.5e-4.
    let t = (-2.0 * q.ln()).sqrt();
    let num = 2.515517 + t * (0.802853 + t * 0.010328);
    let den = 1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308));
    let mut z = -(t - num / den);

    let (mut lo, mut hi) = (-40.0_f64, 0.0_f64);
    for _ in 0..100 {
        let f = phi(z) - q;
        if f > 0.0 {
            hi = hi.min(z);
        } else {
            lo = lo.max(z);
        }
        let density = norm_pdf(z);
        let mut next = if density > 0.0 {
            // Halley step for Φ(z) - q
            let e = f / density;
            z - e / (1.0 + 0.5 * z * e)
        } else {
            f64::NAN
        };
        if !(next >= lo && next <= hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - z).abs();
        z = next;
        if step <= 1e-15 * z.abs().max(1.0) {
            break;
        }
    }
    z
}

fn check_df(df: u64) -> Result<()> {
    if df < 1 {
        return Err(domain("Student-t degrees of freedom must be >= 1"));
    }
    Ok(())
}

/// Student-t CDF with `df` degrees of freedom.
///
/// ```
/// let p = eqtest::distfn::t_cdf(1.0, 1).unwrap();
/// assert!((p - 0.75).abs() < 1e-14);
/// ```
pub fn t_cdf(x: f64, df: u64) -> Result<f64> {
    check_df(df)?;
    if !x.is_finite() {
        return Err(domain(format!("t_cdf: argument must be finite, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.5);
    }
    let nu = df as f64;
    let x2 = x * x;
    // P(T > |x|) = I_{nu/(nu+x^2)}(nu/2, 1/2) / 2
    let w = nu / (nu + x2);
    let w_c = x2 / (nu + x2);
    let tail = 0.5 * inc_beta(0.5 * nu, 0.5, w, w_c)?;
    Ok(if x < 0.0 { tail } else { 1.0 - tail })
}

/// Student-t density.
pub fn t_pdf(x: f64, df: u64) -> Result<f64> {
    check_df(df)?;
    let nu = df as f64;
    let a = 0.5 * nu;
    // Γ((ν+1)/2) / Γ(ν/2) = exp(-ln_gamma_ratio(a, 1/2))
    let log_norm = -ln_gamma_ratio(a, 0.5) - 0.5 * (nu * PI).ln();
    Ok((log_norm - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp())
}

/// Student-t quantile: `t_cdf(t_quantile(p, df), df) = p`.
pub fn t_quantile(p: f64, df: u64) -> Result<f64> {
    check_df(df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("t_quantile: p must lie in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let t = if p < 0.5 {
        t_lower_quantile(p, df)?
    } else {
        -t_lower_quantile(1.0 - p, df)?
    };
    let residual = (t_cdf(t, df)? - p).abs();
    if residual > 1e-10 {
        return Err(Error::NoConvergence(format!(
            "t_quantile(p={p}, df={df}) residual {residual:.3e}"
        )));
    }
    Ok(t)
}

fn t_lower_quantile(q: f64, df: u64) -> Result<f64> {
    let nu = df as f64;
    let z = lower_quantile(q);
    // Cornish-Fisher start
    let z3 = z * z * z;
    let mut t =
        z + (z3 + z) / (4.0 * nu) + (5.0 * z3 * z * z + 16.0 * z3 + 3.0 * z) / (96.0 * nu * nu);
    if !(t < 0.0) || !t.is_finite() {
        t = z.min(-1e-3);
    }

    let mut hi = 0.0_f64;
    let mut lo = t;
    let mut guard = 0;
    while t_cdf(lo, df)? > q {
        hi = lo;
        lo *= 2.0;
        guard += 1;
        if guard > 2000 || !lo.is_finite() {
            return Err(Error::NoConvergence(format!(
                "t_quantile could not bracket q={q} for df={df}"
            )));
        }
    }

    let mut x = t.clamp(lo, hi);
    for _ in 0..400 {
        let f = t_cdf(x, df)? - q;
        if f == 0.0 {
            return Ok(x);
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let density = t_pdf(x, df)?;
        let mut next = x - f / density;
        if !(next >= lo && next <= hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x.abs().max(1e-300)
            || hi - lo <= 4.0 * f64::EPSILON * lo.abs()
        {
            break;
        }
    }
    Ok(x)
}

/// `ln Γ(a) - ln Γ(a + b)` without the cancellation the direct difference
/// suffers once `a` is large.
fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    if a < 25.0 {
        return libm::lgamma(a) - libm::lgamma(a + b);
    }
    // Stirling: ln Γ(z) = (z - 1/2) ln z - z + ln sqrt(2π) + s(z)
    fn s(z: f64) -> f64 {
        let r = 1.0 / z;
        let r2 = r * r;
        r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0))))
    }
    let c = a + b;
    -(a - 0.5) * (b / a).ln_1p() - b * c.ln() + b + (s(a) - s(c))
}

/// `ln B(a, b)`.
fn ln_beta(a: f64, b: f64) -> f64 {
    let (big, small) = if a >= b { (a, b) } else { (b, a) };
    libm::lgamma(small) + ln_gamma_ratio(big, small)
}

/// Regularized incomplete beta `I_x(a, b)`; `y = 1 - x` is passed separately
/// so callers can supply it without cancellation.
fn inc_beta(a: f64, b: f64, x: f64, y: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    if y <= 0.0 {
        return Ok(1.0);
    }
    let ln_x = if x > 0.5 { (-y).ln_1p() } else { x.ln() };
    let ln_y = if y > 0.5 { (-x).ln_1p() } else { y.ln() };
    let front = (a * ln_x + b * ln_y - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cf(a, b, x)? / a)
    } else {
        Ok(1.0 - front * beta_cf(b, a, y)? / b)
    }
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 50_000;

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
    for m in 1..=MAX_ITER {
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
        if (del - 1.0).abs() <= 1e-16 {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence(format!(
        "incomplete beta continued fraction (a={a}, b={b}, x={x})"
    )))
}
