use crate::model::{Bounds, ModelSystem, NoiseModel, ObservationModel, OdeModel, Parameter, ParameterSpace, PriorDist};
use crate::ode::{OdeSystem, Real};

/// Assimilating (`C`) and bleaching (`B`) coral cover as fractions of the
/// substrate:
///
/// ```text
/// dC/dt = alpha C (1 - (C + B)) - beta C + gamma B
/// dB/dt = beta C - gamma B - mu B
/// ```
///
/// `xi = (alpha, beta, gamma, mu)`; initial cover is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coral {
    pub c0: f64,
    pub b0: f64,
    pub t0: f64,
}

impl Default for Coral {
    fn default() -> Self {
        Self { c0: 0.2, b0: 0.05, t0: 0.0 }
    }
}

impl OdeSystem for Coral {
    fn dim(&self) -> usize {
        2
    }

    fn n_params(&self) -> usize {
        4
    }

    fn t0(&self) -> f64 {
        self.t0
    }

    fn rhs<T: Real>(&self, _t: f64, y: &[T], xi: &[T], _forcing: f64, dy: &mut [T]) {
        let (c, b) = (y[0], y[1]);
        let (alpha, beta, gamma, mu) = (xi[0], xi[1], xi[2], xi[3]);
        dy[0] = alpha * c * (T::from(1.0) - (c + b)) - beta * c + gamma * b;
        dy[1] = beta * c - gamma * b - mu * b;
    }

    fn initial_state<T: Real>(&self, _xi: &[T], y0: &mut [T]) {
        y0[0] = T::from(self.c0);
        y0[1] = T::from(self.b0);
    }

    fn jacobians(&self, _t: f64, y: &[f64], xi: &[f64], _forcing: f64, jy: &mut [f64], jx: &mut [f64]) -> bool {
        let (c, b) = (y[0], y[1]);
        let (alpha, beta, gamma, mu) = (xi[0], xi[1], xi[2], xi[3]);
        let free = 1.0 - c - b;
        jy[0] = alpha * free - alpha * c - beta;
        jy[1] = -alpha * c + gamma;
        jy[2] = beta;
        jy[3] = -gamma - mu;
        jx.copy_from_slice(&[c * free, -c, b, 0.0, 0.0, c, -b, -b]);
        true
    }
}

impl ModelSystem for Coral {}

/// Coral model observing total cover `C + B` with additive Gaussian noise.
pub fn coral_model(system: Coral) -> OdeModel<Coral> {
    let hn = |sigma| PriorDist::HalfNormal { sigma };
    OdeModel {
        name: "coral".into(),
        system,
        space: ParameterSpace::new(vec![
            Parameter::new("alpha", Bounds::POSITIVE, hn(1.0)),
            Parameter::new("beta", Bounds::POSITIVE, hn(1.0)),
            Parameter::new("gamma", Bounds::POSITIVE, hn(1.0)),
            Parameter::new("mu", Bounds::POSITIVE, hn(1.0)),
            Parameter::new("sigma", Bounds::POSITIVE, hn(1.0)),
        ]),
        ode_params: vec![0, 1, 2, 3],
        observation: ObservationModel {
            noise: NoiseModel::AdditiveGaussian { sigma: 4 },
            channels: vec![vec![0, 1]],
        },
    }
}
