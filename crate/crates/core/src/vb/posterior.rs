use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{LrmarError, Result};
use crate::spec::ModelSpec;

/// Gaussian posterior of the latent signal. The covariance is shared by all
/// time points.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPosterior {
    /// `M x Q` posterior means, one row per effective time point.
    pub z_bar: DMatrix<f64>,
    /// `Q x Q` covariance shared across time points.
    pub s_z: DMatrix<f64>,
}

impl LatentPosterior {
    /// `E[Z'Z] = z_bar' z_bar + M s_z`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        self.z_bar.tr_mul(&self.z_bar) + &self.s_z * self.z_bar.nrows() as f64
    }

    pub fn rank(&self) -> usize {
        self.s_z.nrows()
    }
}

/// Gaussian posterior of the stacked regression factor `W` (`NP x Q`).
/// Columns are independent and share one covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct WPosterior {
    pub w_bar: DMatrix<f64>,
    pub s_w: DMatrix<f64>,
}

/// Gaussian posterior of the readout factor `V` (`Q x NL`), independent
/// across output columns.
#[derive(Debug, Clone, PartialEq)]
pub struct VPosterior {
    pub v_bar: DMatrix<f64>,
    pub s_v: Vec<DMatrix<f64>>,
}

impl VPosterior {
    /// `E[V'V]` (`NL x NL`); diagonal entries gain `trace(s_v[n])`.
    pub fn second_moment_outer(&self) -> DMatrix<f64> {
        let mut m = self.v_bar.tr_mul(&self.v_bar);
        for (n, s) in self.s_v.iter().enumerate() {
            m[(n, n)] += s.trace();
        }
        m
    }

    /// `E[V diag(w) V'] = v_bar diag(w) v_bar' + sum_n w_n s_v[n]` (`Q x Q`).
    pub fn weighted_inner(&self, weights: &DVector<f64>) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.v_bar.nrows(), self.v_bar.ncols(), |j, n| {
            self.v_bar[(j, n)] * weights[n]
        });
        let mut m = scaled * self.v_bar.transpose();
        for (n, s) in self.s_v.iter().enumerate() {
            m += s * weights[n];
        }
        m
    }

    /// `E[sum_n V_{jn}^2]` for every latent row `j`.
    pub fn row_energy(&self) -> DVector<f64> {
        DVector::from_fn(self.v_bar.nrows(), |j, _| {
            self.v_bar
                .row(j)
                .iter()
                .zip(&self.s_v)
                .map(|(v, s)| v * v + s[(j, j)])
                .sum()
        })
    }
}

/// A family of independent Gamma distributions sharing one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaFamily {
    pub shape: f64,
    pub rates: DVector<f64>,
}

impl GammaFamily {
    pub fn new(shape: f64, rates: DVector<f64>) -> Self {
        GammaFamily { shape, rates }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Posterior means `shape / rate`.
    pub fn means(&self) -> DVector<f64> {
        self.rates.map(|r| self.shape / r)
    }

    /// `E[log x] = digamma(shape) - log(rate)`.
    pub fn expected_logs(&self) -> DVector<f64> {
        let psi = digamma(self.shape);
        self.rates.map(|r| psi - r.ln())
    }

    /// Means of the reciprocal, `rate / (shape - 1)`; undefined for `shape <= 1`.
    pub fn reciprocal_means(&self) -> Option<DVector<f64>> {
        if self.shape <= 1.0 {
            None
        } else {
            Some(self.rates.map(|r| r / (self.shape - 1.0)))
        }
    }

    /// Sum over members of `KL(self || prior)`.
    pub fn kl_to(&self, prior: &GammaFamily) -> f64 {
        self.rates
            .iter()
            .zip(prior.rates.iter())
            .map(|(&bq, &bp)| gamma_kl(self.shape, bq, prior.shape, bp))
            .sum()
    }

    pub(crate) fn check_positive(&self, stage: &str) -> Result<()> {
        if !(self.shape.is_finite() && self.shape > 0.0) {
            return Err(LrmarError::numerical(
                stage,
                format!("non-positive Gamma shape {}", self.shape),
            ));
        }
        if let Some((i, r)) = self
            .rates
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(LrmarError::numerical(
                stage,
                format!("Gamma rate {i} is {r}, must be positive"),
            ));
        }
        Ok(())
    }
}

/// `KL(Gamma(aq, bq) || Gamma(ap, bp))` in the shape/rate parameterization.
pub fn gamma_kl(aq: f64, bq: f64, ap: f64, bp: f64) -> f64 {
    (aq - ap) * digamma(aq) - ln_gamma(aq) + ln_gamma(ap) + ap * (bq.ln() - bp.ln())
        + aq * (bp - bq) / bq
}

/// Prior Gamma families resolved against the data dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    pub omega: GammaFamily,
    pub alpha: GammaFamily,
    pub gamma: GammaFamily,
}

impl Priors {
    pub fn from_spec(spec: &ModelSpec, n: usize) -> Result<Self> {
        Ok(Priors {
            omega: GammaFamily::new(spec.iota, spec.a.resolve(n * spec.l, "a")?),
            alpha: GammaFamily::new(spec.kappa, spec.b.resolve(n * spec.p, "b")?),
            gamma: GammaFamily::new(spec.nu, spec.c.resolve(spec.q, "c")?),
        })
    }
}

/// All variational factors of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub latent: LatentPosterior,
    pub w: WPosterior,
    pub v: VPosterior,
    /// Noise precisions, one per target column.
    pub omega: GammaFamily,
    /// Precisions of the rows of `W`, ordered like the regressor columns.
    pub alpha: GammaFamily,
    /// Precisions of the rows of `V`, one per latent component.
    pub gamma: GammaFamily,
}

/// Terms of the free energy (negative evidence lower bound).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FreeEnergyReport {
    /// `E_q[log q(Z)]`.
    pub neg_entropy_z: f64,
    /// Sum of the KL divergences of every parameter factor from its prior.
    pub kl_phi: f64,
    /// `-E_q[log p(Y | Z, params)]`.
    pub neg_avg_loglik_y: f64,
    /// `-E_q[log p(Z | params)]`.
    pub neg_avg_loglik_z: f64,
    pub total: f64,
}

impl FreeEnergyReport {
    pub fn from_terms(
        neg_entropy_z: f64,
        kl_phi: f64,
        neg_avg_loglik_y: f64,
        neg_avg_loglik_z: f64,
    ) -> Self {
        FreeEnergyReport {
            neg_entropy_z,
            kl_phi,
            neg_avg_loglik_y,
            neg_avg_loglik_z,
            total: neg_entropy_z + kl_phi + neg_avg_loglik_y + neg_avg_loglik_z,
        }
    }
}

/// A fitted model: spec, posterior, centering means and the free-energy trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub posterior: Posterior,
    pub free_energy_trace: Vec<FreeEnergyReport>,
    pub means: DVector<f64>,
    pub channel_names: Vec<String>,
    pub converged: bool,
    pub iterations: usize,
}

impl FittedModel {
    pub fn channels(&self) -> usize {
        self.means.len()
    }

    /// Free energy of the final posterior.
    pub fn free_energy(&self) -> f64 {
        self.free_energy_trace
            .last()
            .map(|r| r.total)
            .unwrap_or(f64::INFINITY)
    }

    /// Posterior mean of the full-rank coefficient matrix `W V` (`NP x NL`).
    pub fn coefficients(&self) -> DMatrix<f64> {
        &self.posterior.w.w_bar * &self.posterior.v.v_bar
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_kl_zero_for_identical() {
        assert_eq!(gamma_kl(2.5, 0.7, 2.5, 0.7), 0.0);
        assert!(gamma_kl(2.5, 0.7, 1.5, 0.7) > 0.0);
    }

    #[test]
    fn gamma_moments() {
        let g = GammaFamily::new(3.0, DVector::from_vec(vec![2.0, 0.5]));
        assert_eq!(g.means().as_slice(), &[1.5, 6.0]);
        assert_eq!(g.reciprocal_means().unwrap().as_slice(), &[1.0, 0.25]);
        let psi3 = 1.5 - 0.577_215_664_901_532_9;
        assert!((g.expected_logs()[0] - (psi3 - 2f64.ln())).abs() < 1e-12);
        assert!(GammaFamily::new(1.0, DVector::from_element(1, 1.0))
            .reciprocal_means()
            .is_none());
    }

    #[test]
    fn v_second_moments() {
        let v = VPosterior {
            v_bar: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            s_v: vec![DMatrix::identity(2, 2) * 0.5, DMatrix::identity(2, 2) * 0.25],
        };
        let outer = v.second_moment_outer();
        assert_eq!(outer[(0, 0)], 1.0 + 9.0 + 1.0);
        assert_eq!(outer[(0, 1)], 2.0 + 12.0);
        assert_eq!(outer[(1, 1)], 4.0 + 16.0 + 0.5);
        assert_eq!(v.row_energy().as_slice(), &[1.0 + 0.5 + 4.0 + 0.25, 9.0 + 0.5 + 16.0 + 0.25]);
        let w = DVector::from_vec(vec![2.0, 1.0]);
        let inner = v.weighted_inner(&w);
        assert_eq!(inner[(0, 0)], 2.0 * 1.0 + 4.0 + 1.0 + 0.25);
        assert_eq!(inner[(0, 1)], 2.0 * 3.0 + 8.0);
    }
}
