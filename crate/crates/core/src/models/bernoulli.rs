use rand::Rng;

use super::{DataSet, Linear, MleFit, Model, Theta};
use crate::error::Result;
use crate::linalg::Matrix;

/// Bernoulli(p), `θ = (p)`, `0 < p < 1`. Observations are `true` for a success.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bernoulli;

impl Bernoulli {
    /// `g(p) = p − c`.
    pub fn proportion_functional(&self, c: f64) -> Linear {
        Linear::new(vec![1.0], c)
    }
}

impl Model for Bernoulli {
    type Obs = bool;

    fn name(&self) -> &'static str {
        "bernoulli"
    }

    fn dim(&self) -> usize {
        1
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta[0] > 0.0 && theta[0] < 1.0
    }

    fn check_obs(&self, _x: &bool) -> Result<()> {
        Ok(())
    }

    fn log_density(&self, x: &bool, theta: &Theta) -> f64 {
        if *x {
            theta[0].ln()
        } else {
            (-theta[0]).ln_1p()
        }
    }

    fn score(&self, x: &bool, theta: &Theta) -> Vec<f64> {
        let p = theta[0];
        vec![if *x { 1.0 / p } else { -1.0 / (1.0 - p) }]
    }

    fn fisher(&self, theta: &Theta) -> Matrix {
        let p = theta[0];
        Matrix::diag(&[1.0 / (p * (1.0 - p))])
    }

    fn sample<R: Rng + ?Sized>(&self, theta: &Theta, rng: &mut R) -> bool {
        rng.random::<f64>() < theta[0]
    }

    /// Sample proportion, moved to `[1/(2n), 1 − 1/(2n)]` when every
    /// observation agrees.
    fn mle(&self, data: &DataSet<bool>) -> Result<MleFit> {
        let n = data.n() as f64;
        let ones = data.iter().filter(|&&x| x).count() as f64;
        let raw = ones / n;
        let lo = 0.5 / n;
        let p = raw.clamp(lo, 1.0 - lo);
        Ok(MleFit {
            theta: Theta::new(vec![p]),
            clamped: p != raw,
        })
    }
}
