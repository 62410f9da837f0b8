//! Equivalence test procedures. Each returns a [`TestDecision`]; rejecting
//! the null `|g| ≥ δ` means declaring equivalence.
//!
//! Rejection is `statistic ≤ critical_value` throughout. The boundary event
//! has probability zero for continuous data, and the non-strict form makes
//! `reject ⇔ p_value ≤ α` hold exactly (up to the solver residual).

use serde::{Deserialize, Serialize};

use crate::critical::{coverage_level, critical_constant, EquivalenceSpec};
use crate::distfn::{t_cdf, t_quantile};
use crate::error::{degenerate, domain, Result};
use crate::linalg::{psd_cholesky, Matrix};
use crate::models::{functional_sd, mean_and_sum_squares, mle, DataSet, Functional, Model, Theta};

/// Absolute tolerance on `g(θ₀) = 0` in [`asymptotic_power_bound`].
pub const NULL_FUNCTIONAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    UmpKnownSigma,
    UmpLinearGaussian,
    Tost,
    Plugin,
}

/// Outcome of a test.
///
/// `spec` describes the normal problem the statistic is compared under:
/// `spec.sigma` is the standard deviation of `statistic` itself, while
/// `sigma_used` is the per-observation value (`σ`, `σ̂ₙ` or `Sₙ`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestDecision {
    pub method: Method,
    pub n: usize,
    pub statistic: f64,
    pub critical_value: f64,
    /// Equivalence declared.
    pub reject: bool,
    pub p_value: f64,
    pub sigma_used: f64,
    pub spec: EquivalenceSpec,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// Known-variance normal mean: rejects when `√n|x̄| ≤ C(α, √nΔ, σ)`.
pub fn ump_known_sigma(
    data: &DataSet<f64>,
    sigma: f64,
    alpha: f64,
    big_delta: f64,
) -> Result<TestDecision> {
    check_finite(data.observations())?;
    let n = data.n();
    let root_n = (n as f64).sqrt();
    let spec = EquivalenceSpec::new(alpha, root_n * big_delta, sigma)?;
    let (mean, _) = mean_and_sum_squares(data.observations());
    decide(
        Method::UmpKnownSigma,
        n,
        root_n * mean.abs(),
        spec,
        sigma,
        Vec::new(),
    )
}

/// `X ~ N_k(μ, Σ)` with `Σ` known: rejects `|aᵀμ| ≥ δ` when
/// `|aᵀx| ≤ C(α, δ, √(aᵀΣa))`. `Σ` may be singular.
pub fn ump_linear_gaussian(
    x: &[f64],
    a: &[f64],
    cov: &Matrix,
    alpha: f64,
    delta: f64,
) -> Result<TestDecision> {
    let k = cov.dim();
    if x.len() != k || a.len() != k {
        return Err(domain(format!(
            "dimension mismatch: x has {}, a has {}, covariance is {k}x{k}",
            x.len(),
            a.len()
        )));
    }
    check_finite(x)?;
    check_finite(a)?;
    if !cov.is_symmetric(1e-12) {
        return Err(domain("covariance matrix is not symmetric"));
    }
    psd_cholesky(cov)?;
    let var = cov.quad_form(a);
    if !(var > 0.0) {
        return Err(domain(format!("a'Σa must be positive, got {var}")));
    }
    let sigma = var.sqrt();
    let spec = EquivalenceSpec::new(alpha, delta, sigma)?;
    let stat = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>().abs();
    decide(Method::UmpLinearGaussian, 1, stat, spec, sigma, Vec::new())
}

/// Two one-sided t tests: rejects when `|x̄| ≤ Δ − Sₙ t_{n−1,1−α}/√n`, with
/// `Sₙ` the unbiased standard deviation. The p-value is the larger of the
/// two one-sided p-values.
pub fn tost(data: &DataSet<f64>, alpha: f64, big_delta: f64) -> Result<TestDecision> {
    let xs = data.observations();
    check_finite(xs)?;
    let n = xs.len();
    if n < 2 {
        return Err(degenerate("TOST needs at least 2 observations"));
    }
    let (mean, ss) = mean_and_sum_squares(xs);
    if !(ss > 0.0) {
        return Err(degenerate("sample variance is zero"));
    }
    let s = (ss / (n - 1) as f64).sqrt();
    let se = s / (n as f64).sqrt();
    let spec = EquivalenceSpec::new(alpha, big_delta, se)?;
    let df = (n - 1) as u64;
    let t = t_quantile(1.0 - alpha, df)?;
    let critical_value = big_delta - se * t;
    let stat = mean.abs();
    // H01: μ ≤ −Δ rejected for large (x̄ + Δ)/se; H02: μ ≥ Δ for small (x̄ − Δ)/se
    let p_lower = t_cdf(-(mean + big_delta) / se, df)?;
    let p_upper = t_cdf((mean - big_delta) / se, df)?;
    let mut diagnostics = Vec::new();
    if critical_value <= 0.0 {
        diagnostics
            .push("critical value is not positive: the rejection region is empty".to_string());
    }
    Ok(TestDecision {
        method: Method::Tost,
        n,
        statistic: stat,
        critical_value,
        reject: critical_value > 0.0 && stat <= critical_value,
        p_value: p_lower.max(p_upper),
        sigma_used: s,
        spec,
        diagnostics,
    })
}

/// Plug-in test for a smooth functional: rejects when
/// `√n|g(θ̂ₙ)| ≤ C(α, δ, σ̂ₙ)` with `θ̂ₙ` the MLE and
/// `σ̂ₙ² = ġ(θ̂ₙ) I(θ̂ₙ)⁻¹ ġ(θ̂ₙ)ᵀ`.
pub fn plugin_test<M: Model, G: Functional + ?Sized>(
    model: &M,
    g: &G,
    data: &DataSet<M::Obs>,
    alpha: f64,
    delta: f64,
) -> Result<TestDecision> {
    plugin_inner(model, g, data, alpha, delta, None)
}

/// [`plugin_test`] with a caller-supplied consistent estimate `σ̂ₙ` in place
/// of the information-based one.
pub fn plugin_test_with_sd<M: Model, G: Functional + ?Sized>(
    model: &M,
    g: &G,
    data: &DataSet<M::Obs>,
    alpha: f64,
    delta: f64,
    sigma_hat: f64,
) -> Result<TestDecision> {
    plugin_inner(model, g, data, alpha, delta, Some(sigma_hat))
}

fn plugin_inner<M: Model, G: Functional + ?Sized>(
    model: &M,
    g: &G,
    data: &DataSet<M::Obs>,
    alpha: f64,
    delta: f64,
    sigma_hat: Option<f64>,
) -> Result<TestDecision> {
    let fit = mle(model, data)?;
    let mut diagnostics = Vec::new();
    if fit.clamped {
        diagnostics.push(format!(
            "MLE on the boundary; clamped to {:?}",
            fit.theta.as_slice()
        ));
    }
    let sigma = match sigma_hat {
        Some(s) => s,
        None => functional_sd(model, g, &fit.theta)?,
    };
    let spec = EquivalenceSpec::new(alpha, delta, sigma)?;
    let n = data.n();
    let stat = (n as f64).sqrt() * g.value(&fit.theta).abs();
    decide(Method::Plugin, n, stat, spec, sigma, diagnostics)
}

/// Local asymptotic power envelope at `θ₀` (where `g(θ₀) = 0`) against
/// alternatives `θ₀ + h/√n` with `|ġ(θ₀)h| = δ′`:
/// `Φ((C − δ′)/σ) − Φ((−C − δ′)/σ)`, `σ = σ_{θ₀}`, `C = C(α, δ, σ)`.
pub fn asymptotic_power_bound<M: Model, G: Functional + ?Sized>(
    delta_prime: f64,
    model: &M,
    g: &G,
    theta0: &Theta,
    alpha: f64,
    delta: f64,
) -> Result<f64> {
    model.check_theta(theta0)?;
    let g0 = g.value(theta0);
    if !(g0.abs() <= NULL_FUNCTIONAL_TOLERANCE) {
        return Err(domain(format!("g(theta0) must be 0, got {g0}")));
    }
    if !(delta_prime >= 0.0 && delta_prime <= delta) {
        return Err(domain(format!(
            "delta' must lie in [0, delta] = [0, {delta}], got {delta_prime}"
        )));
    }
    let sigma = functional_sd(model, g, theta0)?;
    let spec = EquivalenceSpec::new(alpha, delta, sigma)?;
    Ok(critical_constant(&spec)?.power(delta_prime))
}

fn decide(
    method: Method,
    n: usize,
    statistic: f64,
    spec: EquivalenceSpec,
    sigma_used: f64,
    diagnostics: Vec<String>,
) -> Result<TestDecision> {
    let critical_value = critical_constant(&spec)?.c;
    let p_value = coverage_level(statistic, spec.delta(), spec.sigma())?;
    Ok(TestDecision {
        method,
        n,
        statistic,
        critical_value,
        reject: statistic <= critical_value,
        p_value,
        sigma_used,
        spec,
        diagnostics,
    })
}

fn check_finite(xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(domain("inputs must be finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::exact_power;
    use crate::models::{Bernoulli, NormalModel, TwoSampleNormal};
    use crate::oracle::critical_oracle;
    use proptest::prelude::*;

    fn data(xs: &[f64]) -> DataSet<f64> {
        DataSet::new(xs.to_vec()).unwrap()
    }

    /// n values with the given mean and unbiased standard deviation.
    fn with_moments(n: usize, mean: f64, sd: f64) -> Vec<f64> {
        let raw: Vec<f64> = (0..n)
            .map(|i| (i as f64 * 0.7548776662466927).fract() - 0.5)
            .collect();
        let m = raw.iter().sum::<f64>() / n as f64;
        let s = (raw.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        raw.iter().map(|x| mean + sd * (x - m) / s).collect()
    }

    #[test]
    fn known_sigma_examples() {
        let d = ump_known_sigma(&data(&[0.0]), 1.0, 0.05, 1.0).unwrap();
        assert!(d.reject);
        assert_eq!(d.statistic, 0.0);

        let xs = with_moments(100, 0.5, 1.0);
        let d = ump_known_sigma(&data(&xs), 1.0, 0.05, 0.1).unwrap();
        assert!((d.statistic - 5.0).abs() < 1e-12);
        assert!((d.critical_value - critical_oracle(0.05, 1.0, 1.0)).abs() < 1e-9);
        assert!(!d.reject);
        assert!(d.p_value > 0.05);
    }

    #[test]
    fn tost_example() {
        let xs = with_moments(100, 0.05, 1.0);
        let d = tost(&data(&xs), 0.05, 0.3).unwrap();
        // 0.3 − t_{99,0.95}/10 with t_{99,0.95} = 1.660391156016990
        assert!((d.critical_value - 0.13396088439830).abs() < 1e-12);
        assert!(d.reject);
        assert!(d.p_value <= 0.05);
        assert!((d.sigma_used - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tost_empty_region() {
        let xs = with_moments(10, 0.0, 1.0);
        // Δ below S t / √n
        let d = tost(&data(&xs), 0.05, 0.5).unwrap();
        assert!(d.critical_value <= 0.0);
        assert!(!d.reject);
        assert!(d.p_value > 0.05);
        assert!(tost(&data(&[1.0, 1.0, 1.0]), 0.05, 1.0).is_err());
        assert!(tost(&data(&[1.0]), 0.05, 1.0).is_err());
    }

    #[test]
    fn linear_gaussian_reduces_to_scalar() {
        let sigma = 1.7;
        let scalar = ump_known_sigma(&data(&[0.4]), sigma, 0.05, 1.0).unwrap();
        let vec = ump_linear_gaussian(&[0.4], &[1.0], &Matrix::diag(&[sigma * sigma]), 0.05, 1.0)
            .unwrap();
        assert_eq!(scalar.statistic, vec.statistic);
        assert!((scalar.critical_value - vec.critical_value).abs() < 1e-14);
        assert_eq!(scalar.reject, vec.reject);

        // first coordinate only: the rest of Σ is irrelevant
        let cov = Matrix::from_rows(vec![
            vec![sigma * sigma, 0.3, -0.2],
            vec![0.3, 2.0, 0.1],
            vec![-0.2, 0.1, 0.5],
        ])
        .unwrap();
        let e1 = ump_linear_gaussian(&[0.4, 9.0, -3.0], &[1.0, 0.0, 0.0], &cov, 0.05, 1.0).unwrap();
        assert_eq!(e1.statistic, scalar.statistic);
        assert!((e1.critical_value - scalar.critical_value).abs() < 1e-14);
        assert_eq!(e1.reject, scalar.reject);
    }

    #[test]
    fn linear_gaussian_difference() {
        let d = ump_linear_gaussian(
            &[1.0, 0.8, 5.0],
            &[1.0, -1.0, 0.0],
            &Matrix::identity(3),
            0.05,
            1.0,
        )
        .unwrap();
        assert!((d.sigma_used - 2f64.sqrt()).abs() < 1e-15);
        assert!((d.statistic - 0.2).abs() < 1e-15);
    }

    #[test]
    fn linear_gaussian_errors() {
        let asym = Matrix::from_rows(vec![vec![1.0, 0.5], vec![0.1, 1.0]]).unwrap();
        assert!(ump_linear_gaussian(&[0.0, 0.0], &[1.0, 0.0], &asym, 0.05, 1.0).is_err());
        let singular = Matrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        // a'Σa = 0
        assert!(ump_linear_gaussian(&[0.0, 0.0], &[1.0, -1.0], &singular, 0.05, 1.0).is_err());
        // singular Σ is fine when a'Σa > 0
        assert!(ump_linear_gaussian(&[0.0, 0.0], &[1.0, 0.0], &singular, 0.05, 1.0).is_ok());
        let indefinite = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(ump_linear_gaussian(&[0.0, 0.0], &[1.0, 0.0], &indefinite, 0.05, 1.0).is_err());
        assert!(ump_linear_gaussian(&[0.0], &[1.0, 0.0], &Matrix::identity(2), 0.05, 1.0).is_err());
    }

    #[test]
    fn plugin_normal_example() {
        // mean 0.02, MLE sd 1 (unbiased sd √(n/(n−1)))
        let xs = with_moments(100, 0.02, (100.0f64 / 99.0).sqrt());
        let d = plugin_test(
            &NormalModel,
            &NormalModel.mean_functional(0.0),
            &data(&xs),
            0.05,
            1.0,
        )
        .unwrap();
        assert!((d.sigma_used - 1.0).abs() < 1e-12);
        assert!((d.statistic - 0.2).abs() < 1e-12);
        assert!((d.critical_value - 0.1033184796725569).abs() < 1e-9);
        assert!(!d.reject);
    }

    #[test]
    fn plugin_bernoulli_centered() {
        let mut xs = vec![true; 50];
        xs.extend([false; 50]);
        let d = plugin_test(
            &Bernoulli,
            &Bernoulli.proportion_functional(0.5),
            &DataSet::new(xs).unwrap(),
            0.05,
            0.5,
        )
        .unwrap();
        assert_eq!(d.statistic, 0.0);
        assert!(d.reject);
        assert!(d.diagnostics.is_empty());

        let all = DataSet::new(vec![true; 20]).unwrap();
        let d = plugin_test(
            &Bernoulli,
            &Bernoulli.proportion_functional(0.5),
            &all,
            0.05,
            0.5,
        )
        .unwrap();
        assert_eq!(d.diagnostics.len(), 1);
    }

    #[test]
    fn plugin_matches_studentized_form() {
        // With σ̂ supplied as the unbiased S, the plug-in test is exactly
        // "√n|x̄| ≤ C(α, δ, S)".
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let n = rng.random_range(2..60);
            let xs: Vec<f64> = (0..n)
                .map(|_| rng.random_range(-1.0..1.0) + rng.random_range(-0.3..0.3))
                .collect();
            let (mean, s) = crate::models::mean_and_unbiased_sd(&xs).unwrap();
            let delta = rng.random_range(0.1..3.0);
            let d = plugin_test_with_sd(
                &NormalModel,
                &NormalModel.mean_functional(0.0),
                &data(&xs),
                0.05,
                delta,
                s,
            )
            .unwrap();
            let spec = EquivalenceSpec::new(0.05, delta, s).unwrap();
            let c = critical_constant(&spec).unwrap().c;
            assert_eq!(d.reject, (n as f64).sqrt() * mean.abs() <= c);
        }
    }

    #[test]
    fn bound_equals_exact_power_for_normal_mean() {
        let sigma = 1.3;
        let theta0 = Theta::new(vec![0.0, sigma]);
        let spec = EquivalenceSpec::new(0.05, 2.0, sigma).unwrap();
        for dp in [0.0, 0.5, 1.0, 1.9] {
            let b = asymptotic_power_bound(
                dp,
                &NormalModel,
                &NormalModel.mean_functional(0.0),
                &theta0,
                0.05,
                2.0,
            )
            .unwrap();
            assert!((b - exact_power(dp, &spec).unwrap()).abs() < 1e-15);
        }
        let at_edge = asymptotic_power_bound(
            2.0 - 1e-9,
            &NormalModel,
            &NormalModel.mean_functional(0.0),
            &theta0,
            0.05,
            2.0,
        )
        .unwrap();
        assert!((at_edge - 0.05).abs() < 1e-9);
    }

    #[test]
    fn bound_requires_null_functional() {
        let theta0 = Theta::new(vec![0.1, 1.0]);
        assert!(asymptotic_power_bound(
            0.0,
            &NormalModel,
            &NormalModel.mean_functional(0.0),
            &theta0,
            0.05,
            1.0
        )
        .is_err());
        let theta0 = Theta::new(vec![0.0, 1.0]);
        assert!(asymptotic_power_bound(
            1.5,
            &NormalModel,
            &NormalModel.mean_functional(0.0),
            &theta0,
            0.05,
            1.0
        )
        .is_err());
    }

    #[test]
    fn bernoulli_bound_uses_half() {
        let b = asymptotic_power_bound(
            0.0,
            &Bernoulli,
            &Bernoulli.proportion_functional(0.5),
            &Theta::new(vec![0.5]),
            0.05,
            1.0,
        )
        .unwrap();
        let spec = EquivalenceSpec::new(0.05, 1.0, 0.5).unwrap();
        assert!((b - exact_power(0.0, &spec).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn two_sample_plugin_runs() {
        use crate::models::{Group, GroupObs};
        let model = TwoSampleNormal::new(0.5).unwrap();
        let obs = vec![
            GroupObs {
                group: Group::First,
                value: 0.1,
            },
            GroupObs {
                group: Group::First,
                value: -0.3,
            },
            GroupObs {
                group: Group::Second,
                value: 0.2,
            },
            GroupObs {
                group: Group::Second,
                value: 0.0,
            },
        ];
        let d = plugin_test(
            &model,
            &model.difference(),
            &DataSet::new(obs).unwrap(),
            0.05,
            2.0,
        )
        .unwrap();
        assert!((d.statistic - 2.0 * 0.2).abs() < 1e-15);
    }

    /// Householder reflection `H` with `H e₁ = a` for unit `a`; symmetric, so
    /// its first row is `aᵀ`.
    fn reflector(a: &[f64]) -> Matrix {
        let k = a.len();
        let mut v = a.to_vec();
        v[0] -= 1.0;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let mut h = Matrix::identity(k);
        if vv > 1e-24 {
            for i in 0..k {
                for j in 0..k {
                    h[(i, j)] -= 2.0 * v[i] * v[j] / vv;
                }
            }
        }
        h
    }

    fn random_cov(entries: &[f64], k: usize) -> Matrix {
        // B Bᵀ + 0.1 I
        let mut b = Matrix::zeros(k);
        for i in 0..k {
            for j in 0..k {
                b[(i, j)] = entries[i * k + j];
            }
        }
        let mut c = b.matmul(&b.transpose());
        for i in 0..k {
            c[(i, i)] += 0.1;
        }
        c
    }

    proptest! {
        #[test]
        fn duality_known_sigma(xs in proptest::collection::vec(-2.0f64..2.0, 1..30), sigma in 0.2f64..3.0,
                               alpha in 0.01f64..0.3, big_delta in 0.05f64..1.0) {
            let d = ump_known_sigma(&data(&xs), sigma, alpha, big_delta).unwrap();
            prop_assume!((d.statistic - d.critical_value).abs() > 1e-9 * d.critical_value.max(1.0));
            prop_assert_eq!(d.reject, d.p_value <= alpha);
        }

        #[test]
        fn duality_linear_and_plugin(x in proptest::collection::vec(-3.0f64..3.0, 3), a in proptest::collection::vec(-1.0f64..1.0, 3),
                                     b in proptest::collection::vec(-1.0f64..1.0, 9), alpha in 0.01f64..0.3, delta in 0.1f64..4.0,
                                     ys in proptest::collection::vec(-2.0f64..2.0, 3..40)) {
            let cov = random_cov(&b, 3);
            prop_assume!(cov.quad_form(&a) > 1e-6);
            let d = ump_linear_gaussian(&x, &a, &cov, alpha, delta).unwrap();
            prop_assume!((d.statistic - d.critical_value).abs() > 1e-9 * d.critical_value.max(1.0));
            prop_assert_eq!(d.reject, d.p_value <= alpha);

            let p = plugin_test(&NormalModel, &NormalModel.mean_functional(0.0), &data(&ys), alpha, delta).unwrap();
            prop_assume!((p.statistic - p.critical_value).abs() > 1e-9 * p.critical_value.max(1.0));
            prop_assert_eq!(p.reject, p.p_value <= alpha);
        }

        #[test]
        fn duality_tost(xs in proptest::collection::vec(-2.0f64..2.0, 2..40), alpha in 0.01f64..0.3, big_delta in 0.05f64..2.0) {
            let d = tost(&data(&xs), alpha, big_delta).unwrap();
            prop_assume!((d.statistic - d.critical_value).abs() > 1e-9);
            prop_assert_eq!(d.reject, d.p_value <= alpha);
        }

        #[test]
        fn orthogonal_reduction(raw_a in proptest::collection::vec(-1.0f64..1.0, 4), x in proptest::collection::vec(-3.0f64..3.0, 4),
                                b in proptest::collection::vec(-1.0f64..1.0, 16), delta in 0.1f64..3.0) {
            let norm = raw_a.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assume!(norm > 0.1);
            let a: Vec<f64> = raw_a.iter().map(|v| v / norm).collect();
            let cov = random_cov(&b, 4);
            let o = reflector(&a);
            let z = o.mul_vec(&x);
            let cov_z = o.matmul(&cov).matmul(&o.transpose());
            // symmetrize the rounding
            let cov_z = Matrix::from_rows((0..4).map(|i| (0..4).map(|j| 0.5 * (cov_z[(i, j)] + cov_z[(j, i)])).collect()).collect()).unwrap();
            let e1 = [1.0, 0.0, 0.0, 0.0];
            let d1 = ump_linear_gaussian(&x, &a, &cov, 0.05, delta).unwrap();
            let d2 = ump_linear_gaussian(&z, &e1, &cov_z, 0.05, delta).unwrap();
            prop_assert!((d1.statistic - d2.statistic).abs() <= 1e-9);
            prop_assert!((d1.critical_value - d2.critical_value).abs() <= 1e-9);
            prop_assume!((d1.statistic - d1.critical_value).abs() > 1e-8);
            prop_assert_eq!(d1.reject, d2.reject);
        }

        #[test]
        fn regression_reduction(x in proptest::collection::vec(-3.0f64..3.0, 3), b in proptest::collection::vec(-1.0f64..1.0, 9),
                                delta in 0.1f64..3.0) {
            let cov = random_cov(&b, 3);
            // y_i = x_i − (Σ₁ᵢ/Σ₁₁) x₁ for i > 1: y = L x with L unit lower triangular in column 0
            let mut l = Matrix::identity(3);
            for i in 1..3 {
                l[(i, 0)] = -cov[(0, i)] / cov[(0, 0)];
            }
            let y = l.mul_vec(&x);
            let cov_y = l.matmul(&cov).matmul(&l.transpose());
            let cov_y = Matrix::from_rows((0..3).map(|i| (0..3).map(|j| 0.5 * (cov_y[(i, j)] + cov_y[(j, i)])).collect()).collect()).unwrap();
            // the reduced covariance decouples x₁
            prop_assert!(cov_y[(0, 1)].abs() < 1e-12 && cov_y[(0, 2)].abs() < 1e-12);
            let e1 = [1.0, 0.0, 0.0];
            let d1 = ump_linear_gaussian(&x, &e1, &cov, 0.05, delta).unwrap();
            let d2 = ump_linear_gaussian(&y, &e1, &cov_y, 0.05, delta).unwrap();
            prop_assert_eq!(d1.statistic, d2.statistic);
            prop_assert!((d1.critical_value - d2.critical_value).abs() <= 1e-12);
            prop_assert_eq!(d1.reject, d2.reject);
        }

        #[test]
        fn tost_monotone_in_spread(mean in -0.5f64..0.5, s1 in 0.05f64..2.0, s2 in 0.05f64..2.0, n in 3usize..50) {
            // larger S shrinks the rejection region, holding x̄ fixed
            let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            let d_lo = tost(&data(&with_moments(n, mean, lo)), 0.05, 0.5).unwrap();
            let d_hi = tost(&data(&with_moments(n, mean, hi)), 0.05, 0.5).unwrap();
            prop_assert!(d_hi.critical_value <= d_lo.critical_value + 1e-12);
            prop_assert!(!d_hi.reject || d_lo.reject);
        }
    }

    #[test]
    fn tost_dominated_by_optimal_constant() {
        // C(α, δ, s) > δ − s z_{1−α}; beyond δ/s ≈ 15 the gap underflows
        for &delta in &[0.5, 1.0, 2.0, 3.0] {
            for i in 4..=60 {
                let s = 0.05 * i as f64;
                let spec = EquivalenceSpec::new(0.05, delta, s).unwrap();
                let cc = critical_constant(&spec).unwrap();
                assert!(cc.excess_over_lower_bound() > 0.0);
                assert!(
                    cc.c >= cc.lower_bound() - 4.0 * f64::EPSILON * delta,
                    "{delta} {s}: {} {}",
                    cc.c,
                    cc.lower_bound()
                );
            }
        }
    }
}
