use crate::model::{Bounds, ModelSystem, NoiseModel, ObservationModel, OdeModel, Parameter, ParameterSpace, PriorDist};
use crate::ode::{OdeSystem, Real};

/// Two subpopulations competing for a shared carrying capacity:
/// `dy_s/dt = r_s y_s (1 - (y1 + y2) / K)`, with inferred initial sizes.
///
/// `xi = (r1, r2, K, y1(0), y2(0))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Toy;

impl OdeSystem for Toy {
    fn dim(&self) -> usize {
        2
    }

    fn n_params(&self) -> usize {
        5
    }

    fn rhs<T: Real>(&self, _t: f64, y: &[T], xi: &[T], _forcing: f64, dy: &mut [T]) {
        let free = T::from(1.0) - (y[0] + y[1]) / xi[2];
        dy[0] = xi[0] * y[0] * free;
        dy[1] = xi[1] * y[1] * free;
    }

    fn initial_state<T: Real>(&self, xi: &[T], y0: &mut [T]) {
        y0[0] = xi[3];
        y0[1] = xi[4];
    }

    fn jacobians(&self, _t: f64, y: &[f64], xi: &[f64], _forcing: f64, jy: &mut [f64], jx: &mut [f64]) -> bool {
        let (r1, r2, k) = (xi[0], xi[1], xi[2]);
        let s = y[0] + y[1];
        let free = 1.0 - s / k;
        jy[0] = r1 * free - r1 * y[0] / k;
        jy[1] = -r1 * y[0] / k;
        jy[2] = -r2 * y[1] / k;
        jy[3] = r2 * free - r2 * y[1] / k;
        jx.iter_mut().for_each(|v| *v = 0.0);
        jx[0] = y[0] * free;
        jx[2] = r1 * y[0] * s / (k * k);
        jx[5 + 1] = y[1] * free;
        jx[5 + 2] = r2 * y[1] * s / (k * k);
        true
    }
}

impl ModelSystem for Toy {}

/// Competition model with additive Gaussian noise on both subpopulations.
/// Parameters are named as in the usual summary table: `p[1]`, `p[2]` growth
/// rates, `p[3]` carrying capacity, `y0[1]`, `y0[2]` and `sigma`.
pub fn toy_model() -> OdeModel<Toy> {
    let hn = |sigma| PriorDist::HalfNormal { sigma };
    OdeModel {
        name: "toy".into(),
        system: Toy,
        space: ParameterSpace::new(vec![
            Parameter::new("p[1]", Bounds::POSITIVE, hn(1.0)),
            Parameter::new("p[2]", Bounds::POSITIVE, hn(1.0)),
            Parameter::new("p[3]", Bounds::POSITIVE, hn(10.0)),
            Parameter::new("y0[1]", Bounds::POSITIVE, hn(10.0)),
            Parameter::new("y0[2]", Bounds::POSITIVE, hn(10.0)),
            Parameter::new("sigma", Bounds::POSITIVE, hn(1.0)),
        ]),
        ode_params: vec![0, 1, 2, 3, 4],
        observation: ObservationModel {
            noise: NoiseModel::AdditiveGaussian { sigma: 5 },
            channels: vec![vec![0], vec![1]],
        },
    }
}
