use rand::Rng;
use rand_distr::StandardNormal;

use super::{DataSet, Linear, MleFit, Model, Theta};
use crate::error::{degenerate, domain, Result};
use crate::linalg::Matrix;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `N(μ, σ²)` with `θ = (μ, σ)`, `σ > 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormalModel;

impl NormalModel {
    /// `g(θ) = μ − c`.
    pub fn mean_functional(&self, c: f64) -> Linear {
        Linear::new(vec![1.0, 0.0], c)
    }
}

impl Model for NormalModel {
    type Obs = f64;

    fn name(&self) -> &'static str {
        "normal"
    }

    fn dim(&self) -> usize {
        2
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta[1] > 0.0
    }

    fn check_obs(&self, x: &f64) -> Result<()> {
        if x.is_finite() {
            Ok(())
        } else {
            Err(domain(format!("observation {x} is not finite")))
        }
    }

    fn log_density(&self, x: &f64, theta: &Theta) -> f64 {
        let (mu, sigma) = (theta[0], theta[1]);
        let z = (x - mu) / sigma;
        -sigma.ln() - LN_SQRT_2PI - 0.5 * z * z
    }

    fn score(&self, x: &f64, theta: &Theta) -> Vec<f64> {
        let (mu, sigma) = (theta[0], theta[1]);
        let d = x - mu;
        let s2 = sigma * sigma;
        vec![d / s2, (d * d - s2) / (s2 * sigma)]
    }

    fn fisher(&self, theta: &Theta) -> Matrix {
        let s2 = theta[1] * theta[1];
        Matrix::diag(&[1.0 / s2, 2.0 / s2])
    }

    fn sample<R: Rng + ?Sized>(&self, theta: &Theta, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        theta[0] + theta[1] * z
    }

    /// Sample mean and root mean squared deviation (divisor `n`).
    fn mle(&self, data: &DataSet<f64>) -> Result<MleFit> {
        let n = data.n();
        if n < 2 {
            return Err(degenerate("normal MLE needs at least 2 observations"));
        }
        let (mean, ss) = mean_and_sum_squares(data.observations());
        if !(ss > 0.0) {
            return Err(degenerate("all observations are identical"));
        }
        Ok(MleFit {
            theta: Theta::new(vec![mean, (ss / n as f64).sqrt()]),
            clamped: false,
        })
    }
}

/// Two-pass mean and centered sum of squares.
pub(crate) fn mean_and_sum_squares(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean0 = xs.iter().sum::<f64>() / n;
    let corr = xs.iter().map(|x| x - mean0).sum::<f64>() / n;
    let mean = mean0 + corr;
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, ss)
}

/// Sample mean and the unbiased standard deviation (divisor `n − 1`).
pub fn mean_and_unbiased_sd(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(degenerate(
            "sample standard deviation needs at least 2 observations",
        ));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(domain("observations must be finite"));
    }
    let (mean, ss) = mean_and_sum_squares(xs);
    Ok((mean, (ss / (xs.len() - 1) as f64).sqrt()))
}
