use serde::{Deserialize, Serialize};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_2: f64 = std::f64::consts::LN_2;

/// Prior distribution of a single constrained parameter.
///
/// Log-densities keep their normalising constants so that totals are
/// comparable across models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum PriorDist {
    Normal { mu: f64, sigma: f64 },
    HalfNormal { sigma: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    Flat,
}

impl PriorDist {
    pub fn is_valid(&self) -> bool {
        match *self {
            PriorDist::Normal { mu, sigma } | PriorDist::LogNormal { mu, sigma } => {
                mu.is_finite() && sigma > 0.0 && sigma.is_finite()
            }
            PriorDist::HalfNormal { sigma } => sigma > 0.0 && sigma.is_finite(),
            PriorDist::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            PriorDist::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            PriorDist::Flat => true,
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        self.log_density_grad(x).0
    }

    /// Log-density and its derivative; `(-inf, 0)` outside the support.
    pub fn log_density_grad(&self, x: f64) -> (f64, f64) {
        const OUT: (f64, f64) = (f64::NEG_INFINITY, 0.0);
        match *self {
            PriorDist::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                (-LN_SQRT_2PI - sigma.ln() - 0.5 * z * z, -z / sigma)
            }
            PriorDist::HalfNormal { sigma } => {
                if x < 0.0 {
                    return OUT;
                }
                let z = x / sigma;
                (LN_2 - LN_SQRT_2PI - sigma.ln() - 0.5 * z * z, -z / sigma)
            }
            PriorDist::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    return OUT;
                }
                let lx = x.ln();
                let z = (lx - mu) / sigma;
                (
                    -lx - LN_SQRT_2PI - sigma.ln() - 0.5 * z * z,
                    -(1.0 + z / sigma) / x,
                )
            }
            PriorDist::Uniform { a, b } => {
                if x < a || x > b {
                    return OUT;
                }
                (-(b - a).ln(), 0.0)
            }
            PriorDist::Exponential { rate } => {
                if x < 0.0 {
                    return OUT;
                }
                (rate.ln() - rate * x, -rate)
            }
            PriorDist::Flat => (0.0, 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let n = PriorDist::Normal { mu: 0.0, sigma: 1.0 };
        assert!((n.log_density(0.0) + 0.918939).abs() < 1e-6);
        let e = PriorDist::Exponential { rate: 1.0 };
        assert_eq!(e.log_density(2.0), -2.0);
        assert_eq!(PriorDist::Flat.log_density(123.0), 0.0);
        assert_eq!(
            PriorDist::HalfNormal { sigma: 1.0 }.log_density(-1.0),
            f64::NEG_INFINITY
        );
        let u = PriorDist::Uniform { a: 0.0, b: 1.0 };
        assert_eq!(u.log_density(0.3), 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let priors = [
            PriorDist::Normal { mu: 0.3, sigma: 2.0 },
            PriorDist::HalfNormal { sigma: 1.5 },
            PriorDist::LogNormal { mu: -0.2, sigma: 0.7 },
            PriorDist::Uniform { a: 0.0, b: 3.0 },
            PriorDist::Exponential { rate: 2.5 },
            PriorDist::Flat,
        ];
        for p in priors {
            for x in [0.4, 1.1, 2.3] {
                let h = 1e-6;
                let fd = (p.log_density(x + h) - p.log_density(x - h)) / (2.0 * h);
                let (_, g) = p.log_density_grad(x);
                assert!((g - fd).abs() < 1e-6 * fd.abs().max(1.0), "{p:?} at {x}");
            }
        }
    }

    #[test]
    fn deserializes_from_tagged_table() {
        let p: PriorDist = toml::from_str("dist = \"half_normal\"\nsigma = 2.0").unwrap();
        assert_eq!(p, PriorDist::HalfNormal { sigma: 2.0 });
    }
}
