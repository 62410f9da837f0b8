//! Critical constants and closed-form power of the optimal equivalence test
//! for a normal mean.
//!
//! For `X ~ N(μ, σ²)` and the hypothesis `|μ| ≥ δ`, the UMP level-α test
//! rejects when `|X| ≤ C`, where `C = C(α, δ, σ)` solves
//!
//! ```text
//! h(C) = Φ((C − δ)/σ) − Φ((−C − δ)/σ) = α.
//! ```
//!
//! `h` is continuous and strictly increasing with `h(0) = 0` and `h(∞) = 1`,
//! so the root exists and is unique for every `0 < α < 1`. Everything else in
//! this module (power, p-values, the least-favorable two-point prior and the
//! asymptotic power of competing tests) is a closed-form expression in `Φ`
//! once `C` is known.

use serde::Serialize;

use crate::distfn::{norm_pdf, norm_quantile, normal_interval, phi, Probability};
use crate::error::{domain, Error, Result};

/// Tolerance on the residual `|h(C) − α|` a solved constant must satisfy.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Level, half-width of the equivalence interval, and standard deviation of
/// the test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceSpec {
    alpha: Probability,
    delta: f64,
    sigma: f64,
}

impl EquivalenceSpec {
    pub fn new(alpha: f64, delta: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        check_positive("delta", delta)?;
        check_positive("sigma", sigma)?;
        Ok(Self {
            alpha: Probability::new(alpha)?,
            delta,
            sigma,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.get()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// A solved critical constant together with the problem it solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalConstant {
    pub c: f64,
    pub spec: EquivalenceSpec,
    /// `|h(c) − α|` as achieved.
    pub residual: f64,
}

impl CriticalConstant {
    /// `δ − σ z_{1−α}`; the constant always lies strictly above this.
    pub fn lower_bound(&self) -> f64 {
        let z = norm_quantile(1.0 - self.spec.alpha()).expect("alpha validated");
        self.spec.delta - self.spec.sigma * z
    }

    /// `C − (δ − σ z_{1−α})`, evaluated without cancellation.
    ///
    /// The gap equals `σ [Φ⁻¹(α + ε) − Φ⁻¹(α)]` with `ε = Φ((−C − δ)/σ)`, so it
    /// is strictly positive; once `δ/σ` is a few units it drops below the
    /// spacing of `f64` values near `C`, and the plain difference
    /// `c - lower_bound()` reads zero.
    pub fn excess_over_lower_bound(&self) -> f64 {
        let alpha = self.spec.alpha();
        let sigma = self.spec.sigma;
        let eps = phi((-self.c - self.spec.delta) / sigma);
        if eps > 1e-6 * alpha {
            self.c - self.lower_bound()
        } else {
            let z = norm_quantile(alpha).expect("alpha validated");
            sigma * eps / norm_pdf(z)
        }
    }

    /// Limit of `C(α, ε, σ)` as the margin `ε → 0`: `σ z_{(1+α)/2}`.
    pub fn small_margin_limit(&self) -> f64 {
        let z = norm_quantile(0.5 * (1.0 + self.spec.alpha())).expect("alpha validated");
        self.spec.sigma * z
    }

    /// Rejection probability of `|X| ≤ c` when `X ~ N(±shift, σ²)`.
    pub fn power(&self, shift: f64) -> f64 {
        shifted_coverage(self.c, shift.abs(), self.spec.sigma)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `P(|σZ + shift| ≤ c)`.
fn shifted_coverage(c: f64, shift: f64, sigma: f64) -> f64 {
    if c == f64::INFINITY {
        return 1.0;
    }
    normal_interval((-c - shift) / sigma, (c - shift) / sigma)
}

/// `h(C) = Φ((C − δ)/σ) − Φ((−C − δ)/σ)`: the rejection probability of
/// `|X| ≤ C` at the null boundary.
pub fn coverage_level(c: f64, delta: f64, sigma: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(domain(format!("C must be nonnegative, got {c}")));
    }
    check_positive("delta", delta)?;
    check_positive("sigma", sigma)?;
    Ok(shifted_coverage(c, delta, sigma))
}

/// Solves `h(C) = α` for the critical constant.
///
/// ```
/// use eqtest::critical::{critical_constant, EquivalenceSpec};
///
/// let spec = EquivalenceSpec::new(0.05, 1.0, 1.0).unwrap();
/// let cc = critical_constant(&spec).unwrap();
/// assert!((cc.c - 0.10331847967).abs() < 1e-10);
/// assert!(cc.residual <= 1e-10);
/// ```
pub fn critical_constant(spec: &EquivalenceSpec) -> Result<CriticalConstant> {
    let alpha = spec.alpha();
    let sigma = spec.sigma;
    // Solve in standardized units; C(α, δ, σ) = σ C(α, δ/σ, 1).
    let d = spec.delta / sigma;
    let c_std = solve_standardized(alpha, d)?;
    let c = sigma * c_std;
    let residual = (shifted_coverage(c, spec.delta, sigma) - alpha).abs();
    if residual > RESIDUAL_TOLERANCE {
        return Err(Error::NoConvergence(format!(
            "critical constant for alpha={alpha}, delta={}, sigma={sigma}: residual {residual:.3e}",
            spec.delta
        )));
    }
    Ok(CriticalConstant {
        c,
        spec: *spec,
        residual,
    })
}

/// Root of `Φ(c − d) − Φ(−c − d) = α` by Newton's method inside a shrinking
/// bisection bracket.
fn solve_standardized(alpha: f64, d: f64) -> Result<f64> {
    let z_one = norm_quantile(1.0 - alpha)?;
    let z_two = norm_quantile(1.0 - 0.5 * alpha)?;
    let h = |c: f64| normal_interval(-c - d, c - d);

    let mut lo = (d - z_one).max(0.0);
    let mut hi = d + z_two + 10.0;
    // Start from the larger of the one-sided and small-margin approximations.
    let mut c = (d - z_one)
        .max(norm_quantile(0.5 * (1.0 + alpha))?)
        .clamp(lo, hi);

    for _ in 0..200 {
        let f = h(c) - alpha;
        if f == 0.0 {
            return Ok(c);
        }
        if f > 0.0 {
            hi = c;
        } else {
            lo = c;
        }
        let slope = norm_pdf(c - d) + norm_pdf(c + d);
        let mut next = c - f / slope;
        if !(next >= lo && next <= hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - c).abs();
        c = next;
        if step <= 1e-14 * c.max(1.0) || hi - lo <= 1e-12 * c.max(1.0) {
            return Ok(c);
        }
    }
    Err(Error::NoConvergence(format!(
        "critical constant iteration for alpha={alpha}, delta/sigma={d}"
    )))
}

/// Power of the UMP test at `|Σ aᵢμᵢ| = δ′`:
/// `Φ((C − δ′)/σ) − Φ((−C − δ′)/σ)` with `C = C(α, δ, σ)`.
pub fn exact_power(delta_prime: f64, spec: &EquivalenceSpec) -> Result<f64> {
    if !(delta_prime >= 0.0) || !delta_prime.is_finite() {
        return Err(domain(format!(
            "delta_prime must be finite and nonnegative, got {delta_prime}"
        )));
    }
    Ok(critical_constant(spec)?.power(delta_prime))
}

/// Smallest level at which `|T| = t_abs` leads to rejection. Since
/// `C(α, δ, σ)` is increasing in `α`, this is simply `h(t_abs)`.
pub fn p_value(t_abs: f64, delta: f64, sigma: f64) -> Result<f64> {
    coverage_level(t_abs, delta, sigma)
}

/// Mixing weight `p` on `N(δ, σ²)` in the two-point least-favorable prior
/// `p N(δ, σ²) + (1 − p) N(−δ, σ²)` against the alternative mean `m`.
///
/// `p / (1 − p) = sinh((δ + m)C/σ²) / sinh((δ − m)C/σ²)`, which makes the
/// likelihood ratio take equal values at `±C`. The ratio is evaluated in log
/// space so large `δC/σ²` cannot overflow.
///
/// For extreme arguments `p` rounds to 0 or 1; use
/// [`least_favorable_log_odds`] when that matters.
pub fn least_favorable_weight(m: f64, delta: f64, sigma: f64, alpha: f64) -> Result<f64> {
    let log_odds = least_favorable_log_odds(m, delta, sigma, alpha)?;
    Ok(1.0 / (1.0 + (-log_odds).exp()))
}

/// `ln(p / (1 − p))` for the least-favorable weight.
pub fn least_favorable_log_odds(m: f64, delta: f64, sigma: f64, alpha: f64) -> Result<f64> {
    let spec = EquivalenceSpec::new(alpha, delta, sigma)?;
    if !(m.abs() < delta) {
        return Err(domain(format!(
            "|m| must be below delta = {delta}, got m = {m}"
        )));
    }
    let c = critical_constant(&spec)?.c;
    let s2 = sigma * sigma;
    let u = (delta + m) * c / s2;
    let v = (delta - m) * c / s2;
    // ln sinh(u) - ln sinh(v) = (u - v) + ln(1 - e^{-2u}) - ln(1 - e^{-2v})
    Ok((u - v) + (-(-2.0 * u).exp_m1()).ln() - (-(-2.0 * v).exp_m1()).ln())
}

/// `f(x) = p exp((δ − m)x/σ²) + (1 − p) exp(−(δ + m)x/σ²)`, the likelihood
/// ratio of the least-favorable mixture to `N(m, σ²)` up to a positive factor.
/// Convex in `x`, so `{f ≤ f(C)} = {|x| ≤ C}` once `f(C) = f(−C)`.
pub fn lf_ratio(x: f64, m: f64, delta: f64, sigma: f64, p: f64) -> Result<f64> {
    check_positive("delta", delta)?;
    check_positive("sigma", sigma)?;
    if !(m.abs() < delta) {
        return Err(domain(format!(
            "|m| must be below delta = {delta}, got m = {m}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("p must lie in (0, 1), got {p}")));
    }
    let s2 = sigma * sigma;
    Ok(p * ((delta - m) * x / s2).exp() + (1.0 - p) * (-(delta + m) * x / s2).exp())
}

/// Limiting power of the TOST under the shrinking-margin formulation:
/// `P(−δ/σ + z_{1−α} − h/σ < Z < δ/σ − z_{1−α} − h/σ)`, zero whenever
/// `σ z_{1−α} ≥ δ`.
pub fn tost_limit_power(h: f64, alpha: f64, delta: f64, sigma: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_positive("delta", delta)?;
    check_positive("sigma", sigma)?;
    if !h.is_finite() {
        return Err(domain(format!("h must be finite, got {h}")));
    }
    let z = norm_quantile(1.0 - alpha)?;
    if sigma * z >= delta {
        return Ok(0.0);
    }
    let half = delta / sigma - z;
    let shift = h / sigma;
    Ok(normal_interval(-half - shift, half - shift))
}

/// Optimal local power `Φ(h/σ − z_{1−α})` of a one-sided level-α test at
/// distance `h/√n` inside the boundary.
pub fn onesided_local_power(h: f64, alpha: f64, sigma: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_positive("sigma", sigma)?;
    if !(h >= 0.0) || !h.is_finite() {
        return Err(domain(format!("h must be finite and nonnegative, got {h}")));
    }
    Ok(phi(h / sigma - norm_quantile(1.0 - alpha)?))
}
