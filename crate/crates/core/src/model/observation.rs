use serde::{Deserialize, Serialize};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Gaussian measurement noise. Indices refer to positions in the model's
/// constrained parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `sd = sigma`
    AdditiveGaussian { sigma: usize },
    /// `sd = sigma + y * sigma_prop`
    AddPropGaussian { sigma: usize, sigma_prop: usize },
}

/// One pointwise log-likelihood term and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTerm {
    pub loglik: f64,
    /// d loglik / d prediction
    pub d_pred: f64,
    /// d loglik / d sigma
    pub d_sigma: f64,
    /// d loglik / d sigma_prop (zero for additive noise)
    pub d_sigma_prop: f64,
}

impl PointTerm {
    const IMPOSSIBLE: PointTerm = PointTerm {
        loglik: f64::NEG_INFINITY,
        d_pred: 0.0,
        d_sigma: 0.0,
        d_sigma_prop: 0.0,
    };
}

/// How ODE states map to observed channels and which noise applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    pub noise: NoiseModel,
    /// For each observed channel, the state indices summed to form the prediction.
    pub channels: Vec<Vec<usize>>,
}

impl ObservationModel {
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn predict(&self, channel: usize, state: &[f64]) -> f64 {
        self.channels[channel].iter().map(|&i| state[i]).sum()
    }

    pub fn sd(&self, prediction: f64, theta_c: &[f64]) -> f64 {
        match self.noise {
            NoiseModel::AdditiveGaussian { sigma } => theta_c[sigma],
            NoiseModel::AddPropGaussian { sigma, sigma_prop } => {
                theta_c[sigma] + prediction * theta_c[sigma_prop]
            }
        }
    }

    /// Log-density of `observed` given the model `prediction`. A non-positive
    /// standard deviation yields `-inf`.
    pub fn term(&self, prediction: f64, observed: f64, theta_c: &[f64]) -> PointTerm {
        let sd = self.sd(prediction, theta_c);
        if !(sd > 0.0) || !prediction.is_finite() {
            return PointTerm::IMPOSSIBLE;
        }
        let r = observed - prediction;
        let z = r / sd;
        let loglik = -LN_SQRT_2PI - sd.ln() - 0.5 * z * z;
        let d_sd = (z * z - 1.0) / sd;
        let direct = r / (sd * sd);
        match self.noise {
            NoiseModel::AdditiveGaussian { .. } => PointTerm {
                loglik,
                d_pred: direct,
                d_sigma: d_sd,
                d_sigma_prop: 0.0,
            },
            NoiseModel::AddPropGaussian { sigma_prop, .. } => PointTerm {
                loglik,
                d_pred: direct + d_sd * theta_c[sigma_prop],
                d_sigma: d_sd,
                d_sigma_prop: d_sd * prediction,
            },
        }
    }

    pub fn noise_indices(&self) -> Vec<usize> {
        match self.noise {
            NoiseModel::AdditiveGaussian { sigma } => vec![sigma],
            NoiseModel::AddPropGaussian { sigma, sigma_prop } => vec![sigma, sigma_prop],
        }
    }
}
