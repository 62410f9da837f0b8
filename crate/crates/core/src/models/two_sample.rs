use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::normal::mean_and_sum_squares;
use super::{DataSet, Linear, MleFit, Model, Theta};
use crate::error::{degenerate, domain, Result};
use crate::linalg::Matrix;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    First,
    Second,
}

/// A labelled observation from the two-sample design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupObs {
    pub group: Group,
    pub value: f64,
}

/// Two normal samples with common variance, `θ = (μ₁, μ₂, σ)`.
///
/// Observations are i.i.d. pairs: the label is `First` with probability
/// `fraction`, and given the label the value is `N(μ_label, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSampleNormal {
    fraction: f64,
}

impl TwoSampleNormal {
    pub fn new(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(domain(format!(
                "allocation fraction must lie in (0, 1), got {fraction}"
            )));
        }
        Ok(Self { fraction })
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    /// `g(θ) = μ₁ − μ₂`.
    pub fn difference(&self) -> Linear {
        Linear::new(vec![1.0, -1.0, 0.0], 0.0)
    }
}

impl Model for TwoSampleNormal {
    type Obs = GroupObs;

    fn name(&self) -> &'static str {
        "two-sample normal"
    }

    fn dim(&self) -> usize {
        3
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta[2] > 0.0
    }

    fn check_obs(&self, x: &GroupObs) -> Result<()> {
        if x.value.is_finite() {
            Ok(())
        } else {
            Err(domain(format!("observation {} is not finite", x.value)))
        }
    }

    fn log_density(&self, x: &GroupObs, theta: &Theta) -> f64 {
        let (mu, label) = match x.group {
            Group::First => (theta[0], self.fraction.ln()),
            Group::Second => (theta[1], (-self.fraction).ln_1p()),
        };
        let z = (x.value - mu) / theta[2];
        label - theta[2].ln() - LN_SQRT_2PI - 0.5 * z * z
    }

    fn score(&self, x: &GroupObs, theta: &Theta) -> Vec<f64> {
        let sigma = theta[2];
        let s2 = sigma * sigma;
        let (mu, idx) = match x.group {
            Group::First => (theta[0], 0),
            Group::Second => (theta[1], 1),
        };
        let d = x.value - mu;
        let mut s = vec![0.0; 3];
        s[idx] = d / s2;
        s[2] = (d * d - s2) / (s2 * sigma);
        s
    }

    fn fisher(&self, theta: &Theta) -> Matrix {
        let s2 = theta[2] * theta[2];
        Matrix::diag(&[self.fraction / s2, (1.0 - self.fraction) / s2, 2.0 / s2])
    }

    fn sample<R: Rng + ?Sized>(&self, theta: &Theta, rng: &mut R) -> GroupObs {
        let group = if rng.random::<f64>() < self.fraction {
            Group::First
        } else {
            Group::Second
        };
        let mu = match group {
            Group::First => theta[0],
            Group::Second => theta[1],
        };
        let z: f64 = rng.sample(StandardNormal);
        GroupObs {
            group,
            value: mu + theta[2] * z,
        }
    }

    /// Group means and the pooled root mean squared deviation (divisor `n`).
    fn mle(&self, data: &DataSet<GroupObs>) -> Result<MleFit> {
        let (first, second): (Vec<&GroupObs>, Vec<&GroupObs>) =
            data.iter().partition(|x| x.group == Group::First);
        if first.is_empty() || second.is_empty() {
            return Err(degenerate(
                "two-sample MLE needs observations in both groups",
            ));
        }
        let v1: Vec<f64> = first.iter().map(|x| x.value).collect();
        let v2: Vec<f64> = second.iter().map(|x| x.value).collect();
        let (m1, ss1) = mean_and_sum_squares(&v1);
        let (m2, ss2) = mean_and_sum_squares(&v2);
        let ss = ss1 + ss2;
        if !(ss > 0.0) {
            return Err(degenerate("no within-group variation"));
        }
        Ok(MleFit {
            theta: Theta::new(vec![m1, m2, (ss / data.n() as f64).sqrt()]),
            clamped: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::testkit::*;
    use super::super::{fisher_information, functional_sd, mle};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(g: u8, v: f64) -> GroupObs {
        GroupObs {
            group: if g == 1 { Group::First } else { Group::Second },
            value: v,
        }
    }

    #[test]
    fn score_matches_finite_differences() {
        let model = TwoSampleNormal::new(0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cases: Vec<_> = (0..20)
            .map(|i| {
                let theta = Theta::new(vec![
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(0.2..4.0),
                ]);
                (obs(1 + (i % 2) as u8, rng.random_range(-6.0..6.0)), theta)
            })
            .collect();
        check_score_against_log_density(&model, &cases);
    }

    #[test]
    fn balanced_fisher_has_no_cross_terms() {
        let model = TwoSampleNormal::new(0.5).unwrap();
        let theta = Theta::new(vec![1.0, -0.5, 2.0]);
        check_fisher_identity(&model, &theta, 5);
        let f = fisher_information(&model, &theta).unwrap();
        assert_eq!(f[(0, 1)], 0.0);
        assert_eq!(f[(1, 0)], 0.0);
    }

    #[test]
    fn unbalanced_fisher_matches_score_covariance() {
        check_fisher_identity(
            &TwoSampleNormal::new(0.2).unwrap(),
            &Theta::new(vec![0.0, 3.0, 0.5]),
            6,
        );
    }

    #[test]
    fn mle_pools_variance() {
        let model = TwoSampleNormal::new(0.5).unwrap();
        let data = DataSet::new(vec![obs(1, -1.0), obs(1, 1.0), obs(2, 4.0), obs(2, 6.0)]).unwrap();
        let fit = mle(&model, &data).unwrap();
        assert_eq!(fit.theta.as_slice(), &[0.0, 5.0, 1.0]);
        let one_group = DataSet::new(vec![obs(1, -1.0), obs(1, 1.0)]).unwrap();
        assert!(mle(&model, &one_group).is_err());
        let flat = DataSet::new(vec![obs(1, 1.0), obs(2, 2.0)]).unwrap();
        assert!(mle(&model, &flat).is_err());
    }

    #[test]
    fn difference_sd() {
        // σ² (1/π + 1/(1−π))
        let model = TwoSampleNormal::new(0.25).unwrap();
        let sd = functional_sd(
            &model,
            &model.difference(),
            &Theta::new(vec![0.0, 0.0, 2.0]),
        )
        .unwrap();
        let want = 2.0 * (4.0f64 + 4.0 / 3.0).sqrt();
        assert!((sd - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn fraction_validated() {
        assert!(TwoSampleNormal::new(0.0).is_err());
        assert!(TwoSampleNormal::new(1.0).is_err());
    }
}
