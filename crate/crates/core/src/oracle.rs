//! Reference implementations used only by unit tests. They share no code
//! with the library paths they check.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI, PI};

/// erf(y) = 2/sqrt(pi) * exp(-y^2) * sum_n 2^n y^(2n+1) / (1*3*...*(2n+1)).
/// Every term is positive, so there is no cancellation.
pub fn erf_series(y: f64) -> f64 {
    let mut term = y;
    let mut sum = y;
    let mut n = 0.0;
    while term > 1e-18 * sum {
        n += 1.0;
        term *= 2.0 * y * y / (2.0 * n + 1.0);
        sum += term;
    }
    FRAC_2_SQRT_PI * (-y * y).exp() * sum
}

pub fn phi_series(x: f64) -> f64 {
    0.5 * (1.0 + x.signum() * erf_series(x.abs() * FRAC_1_SQRT_2))
}

/// Φ(-x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + ...)))) for x > 0.
pub fn phi_tail_cf(x: f64) -> f64 {
    let mut acc = x;
    for k in (1..400).rev() {
        acc = x + k as f64 / acc;
    }
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt() / acc
}

pub fn phi_oracle(x: f64) -> f64 {
    if x < -5.0 {
        phi_tail_cf(-x)
    } else if x > 5.0 {
        1.0 - phi_tail_cf(x)
    } else {
        phi_series(x)
    }
}

pub fn bisect(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form Student-t CDF for integer df (finite trigonometric series).
pub fn t_cdf_series(t: f64, df: u64) -> f64 {
    let theta = (t / (df as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    let a = if df % 2 == 1 {
        let mut sum = 0.0;
        if df > 1 {
            let mut term = c;
            sum = term;
            let mut k = 3;
            while k <= df - 2 {
                term *= (k - 1) as f64 / k as f64 * c2;
                sum += term;
                k += 2;
            }
        }
        2.0 / PI * (theta + s * sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 2;
        while k < df {
            term *= (k - 1) as f64 / k as f64 * c2;
            sum += term;
            k += 2;
        }
        s * sum
    };
    0.5 + 0.5 * a
}

/// h(C) from the oracle Φ.
pub fn coverage_oracle(c: f64, delta: f64, sigma: f64) -> f64 {
    phi_oracle((c - delta) / sigma) - phi_oracle((-c - delta) / sigma)
}

/// Critical constant by plain bisection on the oracle h.
pub fn critical_oracle(alpha: f64, delta: f64, sigma: f64) -> f64 {
    bisect(0.0, delta + 20.0 * sigma, alpha, |c| {
        coverage_oracle(c, delta, sigma)
    })
}
