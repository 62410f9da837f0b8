//! Parametric families: log-density, score, Fisher information, closed-form
//! maximum likelihood, and sampling, plus real-valued functionals `g(θ)`.
//!
//! All shipped families are smooth, so the score is the gradient of the
//! log-density and the score statistic is
//! `Zₙ = n^{-1/2} Σᵢ ∇θ log p_θ(Xᵢ)`.

mod bernoulli;
mod normal;
mod two_sample;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{mat_inverse, Matrix};

pub use bernoulli::Bernoulli;
pub(crate) use normal::mean_and_sum_squares;
pub use normal::{mean_and_unbiased_sd, NormalModel};
pub use two_sample::{Group, GroupObs, TwoSampleNormal};

/// A point in the parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Theta(Vec<f64>);

impl Theta {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Self(coords.into())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Theta {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Theta {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// A nonempty sample of i.i.d. observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<O>", into = "Vec<O>")]
pub struct DataSet<O: Clone> {
    observations: Vec<O>,
}

impl<O: Clone> DataSet<O> {
    pub fn new(observations: Vec<O>) -> Result<Self> {
        if observations.is_empty() {
            return Err(domain("data set must contain at least one observation"));
        }
        Ok(Self { observations })
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn observations(&self) -> &[O] {
        &self.observations
    }

    pub fn iter(&self) -> std::slice::Iter<'_, O> {
        self.observations.iter()
    }
}

impl<O: Clone> TryFrom<Vec<O>> for DataSet<O> {
    type Error = Error;

    fn try_from(v: Vec<O>) -> Result<Self> {
        Self::new(v)
    }
}

impl<O: Clone> From<DataSet<O>> for Vec<O> {
    fn from(d: DataSet<O>) -> Self {
        d.observations
    }
}

/// Result of a closed-form maximum likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleFit {
    pub theta: Theta,
    /// The raw estimate sat on the boundary of Ω and was moved inside.
    pub clamped: bool,
}

/// A parametric family `{P_θ : θ ∈ Ω}`, `Ω ⊂ ℝᵏ` open.
///
/// `log_density`, `score` and `fisher` may assume `θ` has already passed
/// [`Model::check_theta`]; the free functions in this module validate before
/// calling them.
pub trait Model: Send + Sync {
    type Obs: Clone + Send + Sync;

    fn name(&self) -> &'static str;

    /// `k`.
    fn dim(&self) -> usize;

    /// Membership in Ω for a vector of the right length.
    fn in_domain(&self, theta: &[f64]) -> bool;

    /// Whether `x` lies in the support.
    fn check_obs(&self, x: &Self::Obs) -> Result<()>;

    fn log_density(&self, x: &Self::Obs, theta: &Theta) -> f64;

    /// `∇θ log p_θ(x)`.
    fn score(&self, x: &Self::Obs, theta: &Theta) -> Vec<f64>;

    fn fisher(&self, theta: &Theta) -> Matrix;

    fn sample<R: Rng + ?Sized>(&self, theta: &Theta, rng: &mut R) -> Self::Obs;

    fn mle(&self, data: &DataSet<Self::Obs>) -> Result<MleFit>;

    fn check_theta(&self, theta: &Theta) -> Result<()> {
        if theta.dim() != self.dim() {
            return Err(domain(format!(
                "{} model has {} parameters, got {}",
                self.name(),
                self.dim(),
                theta.dim()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) || !self.in_domain(theta) {
            return Err(domain(format!(
                "theta {:?} lies outside the {} parameter space",
                theta.as_slice(),
                self.name()
            )));
        }
        Ok(())
    }
}

/// Draw `n` observations at `theta`.
pub fn sample_data<M: Model, R: Rng + ?Sized>(
    model: &M,
    theta: &Theta,
    n: usize,
    rng: &mut R,
) -> Result<DataSet<M::Obs>> {
    model.check_theta(theta)?;
    DataSet::new((0..n).map(|_| model.sample(theta, rng)).collect())
}

/// `Zₙ = n^{-1/2} Σᵢ s(Xᵢ, θ₀)`.
pub fn score_statistic<M: Model>(
    model: &M,
    data: &DataSet<M::Obs>,
    theta0: &Theta,
) -> Result<Vec<f64>> {
    model.check_theta(theta0)?;
    let mut total = vec![0.0; model.dim()];
    for x in data.iter() {
        model.check_obs(x)?;
        for (t, s) in total.iter_mut().zip(model.score(x, theta0)) {
            *t += s;
        }
    }
    let scale = (data.n() as f64).sqrt();
    Ok(total.into_iter().map(|t| t / scale).collect())
}

/// `I(θ)`, the per-observation Fisher information.
pub fn fisher_information<M: Model>(model: &M, theta: &Theta) -> Result<Matrix> {
    model.check_theta(theta)?;
    Ok(model.fisher(theta))
}

/// Closed-form maximum likelihood estimate.
pub fn mle<M: Model>(model: &M, data: &DataSet<M::Obs>) -> Result<MleFit> {
    for x in data.iter() {
        model.check_obs(x)?;
    }
    let fit = model.mle(data)?;
    debug_assert!(model.check_theta(&fit.theta).is_ok());
    Ok(fit)
}

/// `σ_θ = sqrt(ġ(θ) I(θ)⁻¹ ġ(θ)ᵀ)`.
pub fn functional_sd<M: Model, G: Functional + ?Sized>(
    model: &M,
    g: &G,
    theta: &Theta,
) -> Result<f64> {
    model.check_theta(theta)?;
    let grad = g.gradient(theta);
    if grad.len() != model.dim() {
        return Err(domain(format!(
            "functional gradient has length {}, model has {} parameters",
            grad.len(),
            model.dim()
        )));
    }
    if grad.iter().all(|&v| v == 0.0) {
        return Err(domain("functional gradient vanishes at theta"));
    }
    let inv = mat_inverse(&model.fisher(theta))?;
    let var = inv.quad_form(&grad);
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Singular {
            condition: f64::INFINITY,
        });
    }
    Ok(var.sqrt())
}

/// A real-valued differentiable functional `g: Ω → ℝ`.
pub trait Functional: Send + Sync {
    fn value(&self, theta: &Theta) -> f64;

    /// `ġ(θ)`.
    fn gradient(&self, theta: &Theta) -> Vec<f64>;
}

/// `g(θ) = aᵀθ − b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub offset: f64,
}

impl Linear {
    pub fn new(coefficients: Vec<f64>, offset: f64) -> Self {
        Self {
            coefficients,
            offset,
        }
    }

    /// `g(θ) = θ_i`.
    pub fn coordinate(k: usize, i: usize) -> Self {
        let mut coefficients = vec![0.0; k];
        coefficients[i] = 1.0;
        Self::new(coefficients, 0.0)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self::new(
            self.coefficients.iter().map(|a| lambda * a).collect(),
            lambda * self.offset,
        )
    }
}

impl Functional for Linear {
    fn value(&self, theta: &Theta) -> f64 {
        self.coefficients
            .iter()
            .zip(theta.iter())
            .map(|(a, t)| a * t)
            .sum::<f64>()
            - self.offset
    }

    fn gradient(&self, _theta: &Theta) -> Vec<f64> {
        self.coefficients.clone()
    }
}

/// A functional given by a pair of closures.
pub struct Smooth<F, D> {
    value: F,
    gradient: D,
}

impl<F, D> Smooth<F, D>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    D: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(value: F, gradient: D) -> Self {
        Self { value, gradient }
    }
}

impl<F, D> Functional for Smooth<F, D>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    D: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn value(&self, theta: &Theta) -> f64 {
        (self.value)(theta)
    }

    fn gradient(&self, theta: &Theta) -> Vec<f64> {
        (self.gradient)(theta)
    }
}


#[cfg(test)]
mod tests {
    use super::testkit::*;
    use super::*;

    #[test]
    fn linear_gradient_matches_differences() {
        let g = Linear::new(vec![1.0, -1.0, 0.0], 0.25);
        let at = [0.3, -1.2, 2.0];
        let fd = central_diff(|t| g.value(&Theta::new(t.to_vec())), &at);
        assert_close_rel(&g.gradient(&Theta::new(at.to_vec())), &fd, 1e-6);
        assert_eq!(g.value(&Theta::new(at.to_vec())), 0.3 + 1.2 - 0.25);
    }

    #[test]
    fn smooth_gradient_matches_differences() {
        // ratio of means
        let g = Smooth::new(
            |t: &[f64]| t[0] / t[1] - 1.0,
            |t: &[f64]| vec![1.0 / t[1], -t[0] / (t[1] * t[1])],
        );
        for at in [[1.0, 2.0], [-0.5, 3.0], [4.0, 0.7]] {
            let fd = central_diff(|t| g.value(&Theta::new(t.to_vec())), &at);
            assert_close_rel(&g.gradient(&Theta::new(at.to_vec())), &fd, 1e-6);
        }
    }

    #[test]
    fn empty_data_rejected() {
        assert!(DataSet::<f64>::new(vec![]).is_err());
        assert_eq!(DataSet::new(vec![1.0]).unwrap().n(), 1);
    }

    #[test]
    fn functional_sd_scales_with_lambda() {
        let model = TwoSampleNormal::new(0.3).unwrap();
        let theta = Theta::new(vec![0.1, -0.2, 1.7]);
        let g = model.difference();
        let s = functional_sd(&model, &g, &theta).unwrap();
        for lambda in [-3.0, 0.5, 10.0] {
            let sl = functional_sd(&model, &g.scaled(lambda), &theta).unwrap();
            assert!((sl - lambda.abs() * s).abs() <= 1e-14 * sl);
        }
    }

    #[test]
    fn functional_sd_rejects_zero_gradient_and_bad_dim() {
        let model = NormalModel;
        let theta = Theta::new(vec![0.0, 1.0]);
        assert!(functional_sd(&model, &Linear::new(vec![0.0, 0.0], 0.0), &theta).is_err());
        assert!(functional_sd(&model, &Linear::new(vec![1.0], 0.0), &theta).is_err());
    }

    #[test]
    fn functional_sd_positive_on_random_gradients() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let model = TwoSampleNormal::new(0.5).unwrap();
        for _ in 0..200 {
            let theta = Theta::new(vec![
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(0.1..5.0),
            ]);
            let g = Linear::new((0..3).map(|_| rng.random_range(-2.0..2.0)).collect(), 0.0);
            assert!(functional_sd(&model, &g, &theta).unwrap() > 0.0);
        }
    }
}
