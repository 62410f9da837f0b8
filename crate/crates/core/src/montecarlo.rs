//! Reproducible Monte Carlo estimates of rejection probabilities.
//!
//! Replicate `i` draws its data from a ChaCha8 generator keyed by the master
//! seed with stream `i`, so each replicate's outcome depends only on
//! `(seed, i)`. Outcomes are folded into integer counts, which makes reports
//! bit-identical for any number of worker threads.
//!
//! Two procedures run with the same seed, model, parameter and sample size
//! see identical data in every replicate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::{critical_constant, onesided_local_power, tost_limit_power, EquivalenceSpec};
use crate::distfn::norm_quantile;
use crate::error::{domain, Error, Result};
use crate::linalg::{psd_cholesky, Matrix};
use crate::models::{
    functional_sd, sample_data, Bernoulli, Functional, Linear, Model, NormalModel, Theta,
    TwoSampleNormal,
};
use crate::procedures::{plugin_test, tost, ump_known_sigma, ump_linear_gaussian};

/// Tolerance on `|g(θ)|` for boundary and null-centre checks.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    UmpKnownSigma,
    UmpLinearGaussian,
    Tost,
    Plugin,
}

/// Data-generating family. The functional under test is fixed by the
/// family: `μ`, `μ₁ − μ₂`, `p − reference`, or `aᵀμ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Normal,
    TwoSample {
        fraction: f64,
    },
    Bernoulli {
        reference: f64,
    },
    /// One draw of `X ~ N_k(θ, cov)` per replicate; requires `n = 1`.
    LinearGaussian {
        a: Vec<f64>,
        cov: Matrix,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub procedure: Procedure,
    pub model: ModelKind,
    /// Base parameter (the mean vector for `linear_gaussian`).
    pub theta: Vec<f64>,
    /// Local alternative: data are drawn at `θ + h/√n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    pub n: usize,
    pub replications: u64,
    pub seed: u64,
    pub alpha: f64,
    /// Shrinking margin: the null is `|g(θ)| ≥ δ/√n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Fixed margin: the null is `|g(θ)| ≥ Δ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_delta: Option<f64>,
    /// Worker threads; `None` uses the global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReferenceSource {
    ExactPower,
    BoundEq9,
    TostLimitEq15,
    OnesidedBound,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    /// Grid value (`δ′`) for power-curve rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_value: Option<f64>,
    /// Parameter the data were drawn at.
    pub theta: Vec<f64>,
    pub replications: u64,
    pub rejections: u64,
    pub accepts: u64,
    pub errors: u64,
    /// Rejections over completed replicates (`rejections + accepts`).
    pub rejection_rate: f64,
    /// `sqrt(rate (1 − rate) / (rejections + accepts))`.
    pub mc_standard_error: f64,
    pub ci95: [f64; 2],
    pub reference_value: Option<f64>,
    pub reference_source: ReferenceSource,
    /// `(rate − reference) / SE`; absent without a reference or when SE is 0.
    pub z_discrepancy: Option<f64>,
    /// Message of the lowest-indexed failing replicate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_error: Option<String>,
}

impl SimConfig {
    /// Margin in local units (`δ`) and raw units (`Δ`).
    pub fn margins(&self) -> Result<(f64, f64)> {
        let root_n = (self.n as f64).sqrt();
        let (delta, big) = match (self.delta, self.big_delta) {
            (Some(d), None) => (d, d / root_n),
            (None, Some(b)) => (root_n * b, b),
            _ => return Err(domain("exactly one of delta and big_delta must be given")),
        };
        if !(delta > 0.0 && delta.is_finite() && big > 0.0) {
            return Err(domain(format!(
                "margin must be positive, got delta = {delta}"
            )));
        }
        Ok((delta, big))
    }

    /// Parameter the data are drawn at: `θ + h/√n`.
    pub fn data_theta(&self) -> Vec<f64> {
        let root_n = (self.n as f64).sqrt();
        match &self.h {
            Some(h) => self
                .theta
                .iter()
                .zip(h)
                .map(|(t, h)| t + h / root_n)
                .collect(),
            None => self.theta.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(domain("n must be at least 1"));
        }
        if self.replications == 0 {
            return Err(domain("replications must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(domain(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.threads == Some(0) {
            return Err(domain("threads must be at least 1"));
        }
        self.margins()?;
        let k = self.theta.len();
        if let Some(h) = &self.h {
            if h.len() != k || h.iter().any(|v| !v.is_finite()) {
                return Err(domain("h must be finite with the same length as theta"));
            }
        }
        let ok = matches!(
            (self.procedure, &self.model),
            (
                Procedure::UmpKnownSigma | Procedure::Tost,
                ModelKind::Normal
            ) | (
                Procedure::Plugin,
                ModelKind::Normal | ModelKind::TwoSample { .. } | ModelKind::Bernoulli { .. }
            ) | (
                Procedure::UmpLinearGaussian,
                ModelKind::LinearGaussian { .. }
            )
        );
        if !ok {
            return Err(domain(format!(
                "procedure {:?} is not available for model {}",
                self.procedure,
                self.model.name()
            )));
        }
        let theta = Theta::new(self.data_theta());
        match &self.model {
            ModelKind::Normal => NormalModel.check_theta(&theta)?,
            ModelKind::TwoSample { fraction } => {
                TwoSampleNormal::new(*fraction)?.check_theta(&theta)?
            }
            ModelKind::Bernoulli { reference } => {
                if !reference.is_finite() {
                    return Err(domain("reference must be finite"));
                }
                Bernoulli.check_theta(&theta)?
            }
            ModelKind::LinearGaussian { a, cov } => {
                if self.n != 1 {
                    return Err(domain(
                        "linear_gaussian draws one vector per replicate; set n = 1",
                    ));
                }
                if a.len() != cov.dim() || k != cov.dim() {
                    return Err(domain("a, cov and theta must have matching dimensions"));
                }
                if theta.iter().any(|v| !v.is_finite()) {
                    return Err(domain("theta must be finite"));
                }
                psd_cholesky(cov)?;
                if !(cov.quad_form(a) > 0.0) {
                    return Err(domain("a'Σa must be positive"));
                }
            }
        }
        Ok(())
    }
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Normal => "normal",
            ModelKind::TwoSample { .. } => "two_sample",
            ModelKind::Bernoulli { .. } => "bernoulli",
            ModelKind::LinearGaussian { .. } => "linear_gaussian",
        }
    }

    /// The tested functional.
    pub fn functional(&self) -> Linear {
        match self {
            ModelKind::Normal => NormalModel.mean_functional(0.0),
            ModelKind::TwoSample { .. } => Linear::new(vec![1.0, -1.0, 0.0], 0.0),
            ModelKind::Bernoulli { reference } => Bernoulli.proportion_functional(*reference),
            ModelKind::LinearGaussian { a, .. } => Linear::new(a.clone(), 0.0),
        }
    }

    /// `σ_θ`: the asymptotic SD of `√n g(θ̂ₙ)`, or `√(aᵀΣa)`.
    pub fn functional_sd(&self, theta: &[f64]) -> Result<f64> {
        let theta = Theta::new(theta.to_vec());
        let g = self.functional();
        match self {
            ModelKind::Normal => functional_sd(&NormalModel, &g, &theta),
            ModelKind::TwoSample { fraction } => {
                functional_sd(&TwoSampleNormal::new(*fraction)?, &g, &theta)
            }
            ModelKind::Bernoulli { .. } => functional_sd(&Bernoulli, &g, &theta),
            ModelKind::LinearGaussian { a, cov } => Ok(cov.quad_form(a).sqrt()),
        }
    }
}

/// Everything a replicate needs, resolved once.
struct Plan {
    procedure: Procedure,
    model: ModelKind,
    theta: Theta,
    n: usize,
    alpha: f64,
    delta: f64,
    big_delta: f64,
    chol: Option<Matrix>,
}

impl Plan {
    fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let (delta, big_delta) = config.margins()?;
        let chol = match &config.model {
            ModelKind::LinearGaussian { cov, .. } => Some(psd_cholesky(cov)?),
            _ => None,
        };
        Ok(Self {
            procedure: config.procedure,
            model: config.model.clone(),
            theta: Theta::new(config.data_theta()),
            n: config.n,
            alpha: config.alpha,
            delta,
            big_delta,
            chol,
        })
    }

    fn replicate(&self, seed: u64, index: u64) -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let (alpha, delta, big) = (self.alpha, self.delta, self.big_delta);
        let decision = match (&self.model, self.procedure) {
            (ModelKind::Normal, proc) => {
                let data = sample_data(&NormalModel, &self.theta, self.n, &mut rng)?;
                match proc {
                    Procedure::UmpKnownSigma => ump_known_sigma(&data, self.theta[1], alpha, big)?,
                    Procedure::Tost => tost(&data, alpha, big)?,
                    _ => plugin_test(
                        &NormalModel,
                        &NormalModel.mean_functional(0.0),
                        &data,
                        alpha,
                        delta,
                    )?,
                }
            }
            (ModelKind::TwoSample { fraction }, _) => {
                let model = TwoSampleNormal::new(*fraction)?;
                let data = sample_data(&model, &self.theta, self.n, &mut rng)?;
                plugin_test(&model, &model.difference(), &data, alpha, delta)?
            }
            (ModelKind::Bernoulli { reference }, _) => {
                let data = sample_data(&Bernoulli, &self.theta, self.n, &mut rng)?;
                plugin_test(
                    &Bernoulli,
                    &Bernoulli.proportion_functional(*reference),
                    &data,
                    alpha,
                    delta,
                )?
            }
            (ModelKind::LinearGaussian { a, cov }, _) => {
                let l = self
                    .chol
                    .as_ref()
                    .expect("factor computed for linear_gaussian");
                let z: Vec<f64> = (0..cov.dim())
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let x: Vec<f64> = l
                    .mul_vec(&z)
                    .iter()
                    .zip(self.theta.iter())
                    .map(|(lz, m)| lz + m)
                    .collect();
                ump_linear_gaussian(&x, a, cov, alpha, delta)?
            }
        };
        Ok(decision.reject)
    }

    /// Analytic rejection probability the estimate is compared against.
    fn reference(&self, config: &SimConfig) -> Result<(Option<f64>, ReferenceSource)> {
        let alpha = self.alpha;
        let root_n = (self.n as f64).sqrt();
        let g = self.model.functional();
        let g_data = g.value(&self.theta).abs();
        let fixed = config.big_delta.is_some();
        match self.procedure {
            Procedure::UmpKnownSigma => {
                let sigma = self.theta[1];
                let spec = EquivalenceSpec::new(alpha, self.delta, sigma)?;
                Ok((
                    Some(critical_constant(&spec)?.power(root_n * g_data)),
                    ReferenceSource::ExactPower,
                ))
            }
            Procedure::UmpLinearGaussian => {
                let sigma = self.model.functional_sd(&self.theta)?;
                let spec = EquivalenceSpec::new(alpha, self.delta, sigma)?;
                Ok((
                    Some(critical_constant(&spec)?.power(g_data)),
                    ReferenceSource::ExactPower,
                ))
            }
            Procedure::Tost | Procedure::Plugin if fixed => {
                // distance inside the fixed boundary in local units
                let h = root_n * (self.big_delta - g_data);
                if h < 0.0 {
                    return Ok((None, ReferenceSource::None));
                }
                let sigma = self.model.functional_sd(&self.theta)?;
                Ok((
                    Some(onesided_local_power(h, alpha, sigma)?),
                    ReferenceSource::OnesidedBound,
                ))
            }
            Procedure::Tost => {
                let sigma = config.theta[1];
                let h = root_n * g.value(&self.theta);
                Ok((
                    Some(tost_limit_power(h, alpha, self.delta, sigma)?),
                    ReferenceSource::TostLimitEq15,
                ))
            }
            Procedure::Plugin => {
                let sigma = self.model.functional_sd(&config.theta)?;
                let spec = EquivalenceSpec::new(alpha, self.delta, sigma)?;
                Ok((
                    Some(critical_constant(&spec)?.power(root_n * g_data)),
                    ReferenceSource::BoundEq9,
                ))
            }
        }
    }
}

#[derive(Default)]
struct Tally {
    rejections: u64,
    accepts: u64,
    errors: u64,
    first_error: Option<(u64, String)>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.rejections += other.rejections;
        self.accepts += other.accepts;
        self.errors += other.errors;
        self.first_error = match (self.first_error, other.first_error) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        self
    }

    fn record(mut self, index: u64, outcome: Result<bool>) -> Tally {
        match outcome {
            Ok(true) => self.rejections += 1,
            Ok(false) => self.accepts += 1,
            Err(e) => {
                self.errors += 1;
                if self.first_error.as_ref().map_or(true, |(i, _)| index < *i) {
                    self.first_error = Some((index, e.to_string()));
                }
            }
        }
        self
    }
}

/// Estimate the rejection probability of the configured procedure.
pub fn estimate_rejection(config: &SimConfig) -> Result<SimReport> {
    let plan = Plan::new(config)?;
    let run = || {
        (0..config.replications)
            .into_par_iter()
            .fold(Tally::default, |t, i| {
                t.record(i, plan.replicate(config.seed, i))
            })
            .reduce(Tally::default, Tally::merge)
    };
    let tally = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let (reference_value, reference_source) = plan.reference(config)?;
    Ok(summarize(
        tally,
        config.replications,
        plan.theta.into_vec(),
        reference_value,
        reference_source,
    ))
}

fn summarize(
    tally: Tally,
    replications: u64,
    theta: Vec<f64>,
    reference_value: Option<f64>,
    reference_source: ReferenceSource,
) -> SimReport {
    let done = tally.rejections + tally.accepts;
    let (rate, se) = if done == 0 {
        (0.0, 0.0)
    } else {
        let r = tally.rejections as f64 / done as f64;
        (r, (r * (1.0 - r) / done as f64).sqrt())
    };
    let z975 = norm_quantile(0.975).expect("valid probability");
    let ci95 = [(rate - z975 * se).max(0.0), (rate + z975 * se).min(1.0)];
    let z_discrepancy = match reference_value {
        Some(r) if se > 0.0 => Some((rate - r) / se),
        _ => None,
    };
    SimReport {
        grid_value: None,
        theta,
        replications,
        rejections: tally.rejections,
        accepts: tally.accepts,
        errors: tally.errors,
        rejection_rate: rate,
        mc_standard_error: se,
        ci95,
        reference_value,
        reference_source,
        z_discrepancy,
        first_error: tally.first_error.map(|(_, m)| m),
    }
}

/// One report per `δ′` in `grid`: data are drawn at `θ + h/√n` with
/// `h = δ′ ġ/|ġ|²`, so that `√n |g| = δ′` for the linear functionals
/// shipped. Requires `g(θ) = 0` at the configured base point.
pub fn power_curve(config: &SimConfig, grid: &[f64]) -> Result<Vec<SimReport>> {
    if grid.is_empty() {
        return Err(domain("grid must not be empty"));
    }
    if grid.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(domain("grid values must be finite and nonnegative"));
    }
    if config.h.is_some() {
        return Err(domain(
            "power_curve sets h itself; remove h from the configuration",
        ));
    }
    let g = config.model.functional();
    let theta0 = Theta::new(config.theta.clone());
    let g0 = g.value(&theta0);
    if !(g0.abs() <= BOUNDARY_TOLERANCE) {
        return Err(domain(format!(
            "power_curve needs g(theta) = 0 at the base point, got {g0}"
        )));
    }
    let grad = g.gradient(&theta0);
    let norm2: f64 = grad.iter().map(|v| v * v).sum();
    grid.iter()
        .map(|&dp| {
            let mut c = config.clone();
            c.h = Some(grad.iter().map(|v| dp * v / norm2).collect());
            let mut report = estimate_rejection(&c)?;
            report.grid_value = Some(dp);
            Ok(report)
        })
        .collect()
}

/// Size estimates at null-boundary points, each required to satisfy
/// `|g(θ)| = δ/√n` (or `Δ`) within [`BOUNDARY_TOLERANCE`].
pub fn boundary_size_sweep(
    config: &SimConfig,
    boundary_points: &[Vec<f64>],
) -> Result<Vec<SimReport>> {
    if boundary_points.is_empty() {
        return Err(domain("no boundary points given"));
    }
    let (_, big) = config.margins()?;
    let g = config.model.functional();
    boundary_points
        .iter()
        .map(|theta| {
            let gv = g.value(&Theta::new(theta.clone())).abs();
            if !((gv - big).abs() <= BOUNDARY_TOLERANCE) {
                return Err(domain(format!(
                    "|g(theta)| = {gv} is not on the boundary {big}"
                )));
            }
            let mut c = config.clone();
            c.theta = theta.clone();
            c.h = None;
            estimate_rejection(&c)
        })
        .collect()
}

/// The two boundary points `θ ± (Δ − g(θ)) ġ/|ġ|²` of a base point with
/// `g(θ) = 0`, for the linear functionals shipped.
pub fn boundary_pair(config: &SimConfig) -> Result<[Vec<f64>; 2]> {
    let (_, big) = config.margins()?;
    let g = config.model.functional();
    let theta0 = Theta::new(config.theta.clone());
    let g0 = g.value(&theta0);
    let grad = g.gradient(&theta0);
    let norm2: f64 = grad.iter().map(|v| v * v).sum();
    let shift = |target: f64| -> Vec<f64> {
        config
            .theta
            .iter()
            .zip(&grad)
            .map(|(t, d)| t + (target - g0) * d / norm2)
            .collect()
    };
    Ok([shift(big), shift(-big)])
}
