use serde::{Deserialize, Serialize};

use super::prior::PriorDist;
use super::ModelError;

/// Support of a parameter; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const REAL: Bounds = Bounds {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };
    pub const POSITIVE: Bounds = Bounds {
        lower: 0.0,
        upper: f64::INFINITY,
    };
    pub const UNIT: Bounds = Bounds {
        lower: 0.0,
        upper: 1.0,
    };

    pub fn contains_strictly(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }
}

/// Image of one unconstrained coordinate under the bounding transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constrained {
    pub value: f64,
    /// d value / d u
    pub jacobian: f64,
    /// log |d value / d u|
    pub log_jacobian: f64,
    /// d log_jacobian / d u
    pub log_jacobian_grad: f64,
}

impl Bounds {
    /// Maps `u` in R to the open interval.
    pub fn constrain(&self, u: f64) -> Constrained {
        let lo = self.lower.is_finite();
        let hi = self.upper.is_finite();
        match (lo, hi) {
            (false, false) => Constrained {
                value: u,
                jacobian: 1.0,
                log_jacobian: 0.0,
                log_jacobian_grad: 0.0,
            },
            (true, false) => {
                let e = u.exp();
                Constrained {
                    value: self.lower + e,
                    jacobian: e,
                    log_jacobian: u,
                    log_jacobian_grad: 1.0,
                }
            }
            (false, true) => {
                let e = u.exp();
                Constrained {
                    value: self.upper - e,
                    jacobian: -e,
                    log_jacobian: u,
                    log_jacobian_grad: 1.0,
                }
            }
            (true, true) => {
                let width = self.upper - self.lower;
                let s = logistic(u);
                let value = if u > 0.0 {
                    self.upper - width * logistic(-u)
                } else {
                    self.lower + width * s
                };
                Constrained {
                    value,
                    jacobian: width * s * (1.0 - s),
                    log_jacobian: width.ln() - softplus(-u) - softplus(u),
                    log_jacobian_grad: 1.0 - 2.0 * s,
                }
            }
        }
    }

    /// Inverse of [`Bounds::constrain`]; `None` on or outside the bounds.
    pub fn unconstrain(&self, x: f64) -> Option<f64> {
        if !self.contains_strictly(x) {
            return None;
        }
        let lo = self.lower.is_finite();
        let hi = self.upper.is_finite();
        Some(match (lo, hi) {
            (false, false) => x,
            (true, false) => (x - self.lower).ln(),
            (false, true) => (self.upper - x).ln(),
            (true, true) => {
                let a = x - self.lower;
                let b = self.upper - x;
                a.ln() - b.ln()
            }
        })
    }
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub bounds: Bounds,
    pub prior: PriorDist,
}

impl Parameter {
    pub fn new(name: impl Into<String>, bounds: Bounds, prior: PriorDist) -> Self {
        Self {
            name: name.into(),
            bounds,
            prior,
        }
    }
}

/// Ordered, named parameters with their bounds and priors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub params: Vec<Parameter>,
}

impl ParameterSpace {
    pub fn new(params: Vec<Parameter>) -> Self {
        Self { params }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn unconstrain(&self, theta_c: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_len(theta_c.len())?;
        self.params
            .iter()
            .zip(theta_c)
            .map(|(p, &x)| {
                p.bounds.unconstrain(x).ok_or_else(|| ModelError::OutOfBounds {
                    name: p.name.clone(),
                    value: x,
                })
            })
            .collect()
    }

    /// Constrained vector and `sum log |d theta_c / d theta_u|`.
    pub fn constrain_with_logjac(&self, theta_u: &[f64]) -> (Vec<f64>, f64) {
        let mut lj = 0.0;
        let theta_c = self
            .params
            .iter()
            .zip(theta_u)
            .map(|(p, &u)| {
                let c = p.bounds.constrain(u);
                lj += c.log_jacobian;
                c.value
            })
            .collect();
        (theta_c, lj)
    }

    pub fn constrain_each(&self, theta_u: &[f64]) -> Vec<Constrained> {
        self.params
            .iter()
            .zip(theta_u)
            .map(|(p, &u)| p.bounds.constrain(u))
            .collect()
    }

    pub fn log_prior(&self, theta_c: &[f64]) -> f64 {
        self.params
            .iter()
            .zip(theta_c)
            .map(|(p, &x)| p.prior.log_density(x))
            .sum()
    }

    /// Log prior plus its gradient with respect to the constrained values.
    pub fn log_prior_grad(&self, theta_c: &[f64], grad: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for ((p, &x), g) in self.params.iter().zip(theta_c).zip(grad.iter_mut()) {
            let (lp, d) = p.prior.log_density_grad(x);
            total += lp;
            *g = d;
        }
        total
    }

    fn check_len(&self, got: usize) -> Result<(), ModelError> {
        if got != self.len() {
            Err(ModelError::DimensionMismatch {
                expected: self.len(),
                got,
            })
        } else {
            Ok(())
        }
    }
}
