use crate::model::{Bounds, Group, ModelSystem, NoiseModel, ObservationModel, OdeModel, Parameter, ParameterSpace, PriorDist};
use crate::ode::{OdeSystem, Real};

/// Stem (`S`) and androgen-dependent differentiated (`D`) cancer cells with
/// PSA (`P`) under a binary treatment indicator `T` (the forcing input):
///
/// ```text
/// dS/dt = q p lambda S
/// dD/dt = (1 - p q) lambda S - alpha D T
/// dP/dt = rho D - phi P
/// ```
///
/// with `q = S / (S + D)`, taken as 0 when `S + D = 0`.
/// `xi = (p, lambda, alpha, rho, phi)`; initial states are fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prostate {
    pub s0: f64,
    pub d0: f64,
    pub p0: f64,
    pub t0: f64,
    /// Replace `p0` and `t0` by each group's first PSA observation.
    pub p0_from_data: bool,
}

impl Default for Prostate {
    fn default() -> Self {
        Self { s0: 0.05, d0: 1.0, p0: 1.0, t0: 0.0, p0_from_data: true }
    }
}

fn stem_fraction<T: Real>(s: T, d: T) -> T {
    let n = s + d;
    if n.value() == 0.0 {
        T::zero()
    } else {
        s / n
    }
}

impl OdeSystem for Prostate {
    fn dim(&self) -> usize {
        3
    }

    fn n_params(&self) -> usize {
        5
    }

    fn t0(&self) -> f64 {
        self.t0
    }

    fn rhs<T: Real>(&self, _t: f64, y: &[T], xi: &[T], forcing: f64, dy: &mut [T]) {
        let (s, d, p_sa) = (y[0], y[1], y[2]);
        let (p, lambda, alpha, rho, phi) = (xi[0], xi[1], xi[2], xi[3], xi[4]);
        let q = stem_fraction(s, d);
        dy[0] = q * p * lambda * s;
        dy[1] = (T::from(1.0) - p * q) * lambda * s - alpha * d * forcing;
        dy[2] = rho * d - phi * p_sa;
    }

    fn initial_state<T: Real>(&self, _xi: &[T], y0: &mut [T]) {
        y0[0] = T::from(self.s0);
        y0[1] = T::from(self.d0);
        y0[2] = T::from(self.p0);
    }

    fn jacobians(&self, _t: f64, y: &[f64], xi: &[f64], forcing: f64, jy: &mut [f64], jx: &mut [f64]) -> bool {
        let (s, d, p_sa) = (y[0], y[1], y[2]);
        let (p, lambda, alpha, rho, phi) = (xi[0], xi[1], xi[2], xi[3], xi[4]);
        let n = s + d;
        let (q, dq_ds, dq_dd) = if n == 0.0 { (0.0, 0.0, 0.0) } else { (s / n, d / (n * n), -s / (n * n)) };
        jy.iter_mut().for_each(|v| *v = 0.0);
        jx.iter_mut().for_each(|v| *v = 0.0);
        jy[0] = p * lambda * (q + s * dq_ds);
        jy[1] = p * lambda * s * dq_dd;
        jy[3] = lambda * (1.0 - p * q) - p * lambda * s * dq_ds;
        jy[4] = -p * lambda * s * dq_dd - alpha * forcing;
        jy[7] = rho;
        jy[8] = -phi;
        jx[0] = q * lambda * s;
        jx[1] = q * p * s;
        jx[5] = -q * lambda * s;
        jx[5 + 1] = (1.0 - p * q) * s;
        jx[5 + 2] = -d * forcing;
        jx[10 + 3] = d;
        jx[10 + 4] = -p_sa;
        true
    }
}

impl ModelSystem for Prostate {
    fn for_group(&self, group: &Group) -> Self {
        let mut out = *self;
        if self.p0_from_data {
            if let (Some(&t), Some(&v)) = (group.times.first(), group.observations.first().and_then(|o| o.first())) {
                out.t0 = t;
                out.p0 = v;
            }
        }
        out
    }
}

/// Prostate model observing PSA with additive plus proportional noise.
pub fn prostate_model(system: Prostate) -> OdeModel<Prostate> {
    let hn = |sigma| PriorDist::HalfNormal { sigma };
    OdeModel {
        name: "prostate".into(),
        system,
        space: ParameterSpace::new(vec![
            Parameter::new("p", Bounds::UNIT, PriorDist::Uniform { a: 0.0, b: 1.0 }),
            Parameter::new("lambda", Bounds::POSITIVE, hn(1.0)),
            Parameter::new("alpha", Bounds::POSITIVE, hn(1.0)),
            Parameter::new("rho", Bounds::POSITIVE, hn(1.0)),
            Parameter::new("phi", Bounds::POSITIVE, hn(1.0)),
            Parameter::new("sigma", Bounds::POSITIVE, hn(1.0)),
            Parameter::new("sigma_prop", Bounds::POSITIVE, hn(1.0)),
        ]),
        ode_params: vec![0, 1, 2, 3, 4],
        observation: ObservationModel {
            noise: NoiseModel::AddPropGaussian { sigma: 5, sigma_prop: 6 },
            channels: vec![vec![2]],
        },
    }
}
