//! Dormand–Prince 5(4) integration with PI step-size control, optionally
//! augmented with forward sensitivity equations.

use super::dual::Dual;
use super::system::{initial_state_with_jacobian, ForcingSchedule, OdeSystem};
use super::OdeError;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-6,
            max_steps: 1_000_000,
            initial_step: None,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.rel_tol.is_finite()
            && self.abs_tol.is_finite()
            && self.max_steps > 0
            && self.initial_step.is_none_or(|h| h > 0.0 && h.is_finite());
        if ok {
            Ok(())
        } else {
            Err(OdeError::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Solution sampled on the requested output grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    dim: usize,
    n_params: usize,
    /// Row-major `n_times x dim`.
    states: Vec<f64>,
    /// `n_times x n_params x dim`, i.e. `dy_i(t_j)/dxi_k` at `[(j * n_params + k) * dim + i]`.
    sensitivities: Option<Vec<f64>>,
    pub n_steps: usize,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn has_sensitivities(&self) -> bool {
        self.sensitivities.is_some()
    }

    /// Column `dy(t_i)/dxi_k` of length `dim`.
    pub fn sensitivity_column(&self, i: usize, k: usize) -> &[f64] {
        let s = self
            .sensitivities
            .as_ref()
            .expect("trajectory solved without sensitivities");
        let off = (i * self.n_params + k) * self.dim;
        &s[off..off + self.dim]
    }

    /// `dy_state(t_i)/dxi_k`.
    pub fn sensitivity(&self, i: usize, state: usize, k: usize) -> f64 {
        self.sensitivity_column(i, k)[state]
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const ORDER: f64 = 5.0;
const PI_ALPHA: f64 = 0.7 / ORDER;
const PI_BETA: f64 = 0.4 / ORDER;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Integrates the state only.
pub fn solve<S: OdeSystem + ?Sized>(
    system: &S,
    xi: &[f64],
    ts: &[f64],
    config: &SolverConfig,
    forcing: &ForcingSchedule,
) -> Result<Trajectory, OdeError> {
    check_inputs(system, xi, ts, config)?;
    let n = system.dim();
    let mut y0 = vec![0.0; n];
    system.initial_state(xi, &mut y0);
    let rhs = |t: f64, z: &[f64], f: f64, dz: &mut [f64]| system.rhs(t, z, xi, f, dz);
    let (states, n_steps) = integrate(rhs, system.t0(), y0, ts, config, forcing)?;
    Ok(Trajectory {
        times: ts.to_vec(),
        dim: n,
        n_params: system.n_params(),
        states,
        sensitivities: None,
        n_steps,
    })
}

/// Integrates the state jointly with `S = dy/dxi`, where
/// `dS/dt = (df/dy) S + df/dxi` and `S(t0) = dy0/dxi`.
pub fn solve_with_sensitivities<S: OdeSystem + ?Sized>(
    system: &S,
    xi: &[f64],
    ts: &[f64],
    config: &SolverConfig,
    forcing: &ForcingSchedule,
) -> Result<Trajectory, OdeError> {
    check_inputs(system, xi, ts, config)?;
    let n = system.dim();
    let p = system.n_params();
    let (y0, jac0) = initial_state_with_jacobian(system, xi);
    let mut z0 = vec![0.0; n * (p + 1)];
    z0[..n].copy_from_slice(&y0);
    for k in 0..p {
        for i in 0..n {
            z0[n + k * n + i] = jac0[i * p + k];
        }
    }

    let analytic = {
        let mut jy = vec![0.0; n * n];
        let mut jx = vec![0.0; n * p];
        system.jacobians(system.t0(), &y0, xi, forcing.value_at(system.t0()), &mut jy, &mut jx)
    };

    let mut jy = vec![0.0; n * n];
    let mut jx = vec![0.0; n * p];
    let mut yd = vec![Dual::default(); n];
    let mut xd: Vec<Dual> = xi.iter().map(|&v| Dual::constant(v)).collect();
    let mut outd = vec![Dual::default(); n];
    let rhs = |t: f64, z: &[f64], f: f64, dz: &mut [f64]| {
        let (y, s) = z.split_at(n);
        let (dy, ds) = dz.split_at_mut(n);
        system.rhs(t, y, xi, f, dy);
        if analytic {
            system.jacobians(t, y, xi, f, &mut jy, &mut jx);
            for k in 0..p {
                let col = &s[k * n..(k + 1) * n];
                for i in 0..n {
                    let row = &jy[i * n..(i + 1) * n];
                    let mut acc = jx[i * p + k];
                    for j in 0..n {
                        acc += row[j] * col[j];
                    }
                    ds[k * n + i] = acc;
                }
            }
        } else {
            // directional derivative along (S e_k, e_k)
            for k in 0..p {
                for i in 0..n {
                    yd[i] = Dual::new(y[i], s[k * n + i]);
                }
                xd[k].eps = 1.0;
                system.rhs(t, &yd, &xd, f, &mut outd);
                xd[k].eps = 0.0;
                for i in 0..n {
                    ds[k * n + i] = outd[i].eps;
                }
            }
        }
    };
    let (aug, n_steps) = integrate(rhs, system.t0(), z0, ts, config, forcing)?;
    let width = n * (p + 1);
    let mut states = Vec::with_capacity(ts.len() * n);
    let mut sens = Vec::with_capacity(ts.len() * n * p);
    for row in aug.chunks(width) {
        states.extend_from_slice(&row[..n]);
        sens.extend_from_slice(&row[n..]);
    }
    Ok(Trajectory {
        times: ts.to_vec(),
        dim: n,
        n_params: p,
        states,
        sensitivities: Some(sens),
        n_steps,
    })
}

fn check_inputs<S: OdeSystem + ?Sized>(
    system: &S,
    xi: &[f64],
    ts: &[f64],
    config: &SolverConfig,
) -> Result<(), OdeError> {
    config.validate()?;
    if xi.len() != system.n_params() {
        return Err(OdeError::DimensionMismatch {
            expected: system.n_params(),
            got: xi.len(),
        });
    }
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteParameter);
    }
    if ts.iter().any(|t| !t.is_finite()) || ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OdeError::InvalidGrid(
            "output times must be finite and strictly increasing".into(),
        ));
    }
    if let Some(&first) = ts.first() {
        if first < system.t0() {
            return Err(OdeError::InvalidGrid(format!(
                "first output time {first} precedes t0 = {}",
                system.t0()
            )));
        }
    }
    Ok(())
}

fn weighted_rms(v: &[f64], z: &[f64], config: &SolverConfig) -> f64 {
    let s: f64 = v
        .iter()
        .zip(z)
        .map(|(a, b)| {
            let w = a / (config.abs_tol + config.rel_tol * b.abs());
            w * w
        })
        .sum();
    (s / v.len() as f64).sqrt()
}

/// Hairer's starting step heuristic.
fn initial_step<F>(
    rhs: &mut F,
    t: f64,
    z: &[f64],
    f0: &[f64],
    forcing: f64,
    span: f64,
    config: &SolverConfig,
) -> f64
where
    F: FnMut(f64, &[f64], f64, &mut [f64]),
{
    if let Some(h) = config.initial_step {
        return h.min(span);
    }
    let d0 = weighted_rms(z, z, config);
    let d1 = weighted_rms(f0, z, config);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span);
    let z1: Vec<f64> = z.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; z.len()];
    rhs(t + h0, &z1, forcing, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = weighted_rms(&diff, z, config) / h0;
    let dmax = d1.max(d2);
    let h1 = if !dmax.is_finite() {
        h0 * 1e-3
    } else if dmax <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dmax).powf(1.0 / ORDER)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Core DP45 loop. Steps land on every output time and every forcing
/// breakpoint; at a breakpoint the controller is restarted from scratch.
fn integrate<F>(
    mut rhs: F,
    t0: f64,
    z0: Vec<f64>,
    ts: &[f64],
    config: &SolverConfig,
    forcing: &ForcingSchedule,
) -> Result<(Vec<f64>, usize), OdeError>
where
    F: FnMut(f64, &[f64], f64, &mut [f64]),
{
    let m = z0.len();
    let mut out = Vec::with_capacity(ts.len() * m);
    let mut next_out = 0;
    let mut z = z0;
    let mut t;
    while next_out < ts.len() && ts[next_out] == t0 {
        out.extend_from_slice(&z);
        next_out += 1;
    }
    let Some(&t_end) = ts.last() else {
        return Ok((out, 0));
    };
    if next_out == ts.len() {
        return Ok((out, 0));
    }

    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    let mut k5 = vec![0.0; m];
    let mut k6 = vec![0.0; m];
    let mut k7 = vec![0.0; m];
    let mut stage = vec![0.0; m];
    let mut z_new = vec![0.0; m];
    let mut n_steps = 0usize;

    for (seg_start, seg_end, f) in forcing.segments(t0, t_end) {
        t = seg_start;
        rhs(t, &z, f, &mut k1);
        if k1.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFiniteState { t });
        }
        let mut h = initial_step(&mut rhs, t, &z, &k1, f, seg_end - t, config);
        let mut err_prev = 1.0_f64;
        let mut last_rejected = false;

        while t < seg_end {
            let target = if next_out < ts.len() && ts[next_out] < seg_end {
                ts[next_out]
            } else {
                seg_end
            };
            let remaining = target - t;
            let lands = t + 1.01 * h >= target;
            let h_try = if lands { remaining } else { h };

            n_steps += 1;
            if n_steps > config.max_steps {
                return Err(OdeError::MaxStepsExceeded {
                    t,
                    max_steps: config.max_steps,
                });
            }

            for i in 0..m {
                stage[i] = z[i] + h_try * A21 * k1[i];
            }
            rhs(t + C2 * h_try, &stage, f, &mut k2);
            for i in 0..m {
                stage[i] = z[i] + h_try * (A31 * k1[i] + A32 * k2[i]);
            }
            rhs(t + C3 * h_try, &stage, f, &mut k3);
            for i in 0..m {
                stage[i] = z[i] + h_try * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            rhs(t + C4 * h_try, &stage, f, &mut k4);
            for i in 0..m {
                stage[i] =
                    z[i] + h_try * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            rhs(t + C5 * h_try, &stage, f, &mut k5);
            for i in 0..m {
                stage[i] = z[i]
                    + h_try
                        * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_next = if lands { target } else { t + h_try };
            rhs(t_next, &stage, f, &mut k6);
            for i in 0..m {
                z_new[i] = z[i]
                    + h_try
                        * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            rhs(t_next, &z_new, f, &mut k7);

            let mut err = 0.0_f64;
            for i in 0..m {
                let e = h_try
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = config.abs_tol + config.rel_tol * z[i].abs().max(z_new[i].abs());
                let r = e.abs() / sc;
                // NaN must propagate into a rejection
                if !(r <= err) {
                    err = r;
                }
            }

            if err.is_finite() && err <= 1.0 && k7.iter().all(|v| v.is_finite()) {
                t = t_next;
                std::mem::swap(&mut z, &mut z_new);
                std::mem::swap(&mut k1, &mut k7);
                while next_out < ts.len() && ts[next_out] == t {
                    out.extend_from_slice(&z);
                    next_out += 1;
                }
                let mut fac = SAFETY * err.max(1e-10).powf(-PI_ALPHA) * err_prev.powf(PI_BETA);
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                let proposal = h_try * fac;
                h = if lands && h_try < h { proposal.max(h) } else { proposal };
                err_prev = err.max(1e-4);
                last_rejected = false;
            } else {
                let fac = if err.is_finite() {
                    (SAFETY * err.powf(-1.0 / ORDER)).max(FAC_MIN)
                } else {
                    FAC_MIN
                };
                h = h_try * fac;
                last_rejected = true;
                if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                    return Err(OdeError::NonFiniteState { t });
                }
            }
        }
    }
    debug_assert_eq!(next_out, ts.len());
    Ok((out, n_steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::Real;

    /// dy/dt = -theta y, y(0) = 1.
    struct Decay;

    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn n_params(&self) -> usize {
            1
        }
        fn rhs<T: Real>(&self, _t: f64, y: &[T], xi: &[T], _f: f64, dy: &mut [T]) {
            dy[0] = -(xi[0] * y[0]);
        }
        fn initial_state<T: Real>(&self, _xi: &[T], y0: &mut [T]) {
            y0[0] = T::from(1.0);
        }
    }

    /// Decay with the initial value as a second parameter.
    struct DecayFreeInit;

    impl OdeSystem for DecayFreeInit {
        fn dim(&self) -> usize {
            1
        }
        fn n_params(&self) -> usize {
            2
        }
        fn rhs<T: Real>(&self, _t: f64, y: &[T], xi: &[T], _f: f64, dy: &mut [T]) {
            dy[0] = -(xi[0] * y[0]);
        }
        fn initial_state<T: Real>(&self, xi: &[T], y0: &mut [T]) {
            y0[0] = xi[1];
        }
    }

    /// dy/dt = forcing, y(0) = 0.
    struct Ramp;

    impl OdeSystem for Ramp {
        fn dim(&self) -> usize {
            1
        }
        fn n_params(&self) -> usize {
            0
        }
        fn rhs<T: Real>(&self, _t: f64, _y: &[T], _xi: &[T], f: f64, dy: &mut [T]) {
            dy[0] = T::from(f);
        }
        fn initial_state<T: Real>(&self, _xi: &[T], y0: &mut [T]) {
            y0[0] = T::zero();
        }
    }

    #[test]
    fn exponential_decay_at_default_tolerance() {
        let traj = solve(
            &Decay,
            &[0.5],
            &[2.0],
            &SolverConfig::default(),
            &ForcingSchedule::default(),
        )
        .unwrap();
        assert!((traj.state(0)[0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn sensitivity_of_decay_matches_analytic() {
        let traj = solve_with_sensitivities(
            &Decay,
            &[0.5],
            &[0.0, 2.0],
            &SolverConfig::default(),
            &ForcingSchedule::default(),
        )
        .unwrap();
        assert_eq!(traj.sensitivity(0, 0, 0), 0.0);
        let expected = -2.0 * (-1.0f64).exp();
        assert!((traj.sensitivity(1, 0, 0) - expected).abs() < 1e-6);
    }

    #[test]
    fn inferred_initial_condition_seeds_identity_column() {
        let traj = solve_with_sensitivities(
            &DecayFreeInit,
            &[0.5, 3.0],
            &[0.0, 1.0],
            &SolverConfig::default(),
            &ForcingSchedule::default(),
        )
        .unwrap();
        assert_eq!(traj.sensitivity(0, 0, 1), 1.0);
        assert_eq!(traj.sensitivity(0, 0, 0), 0.0);
        assert!((traj.sensitivity(1, 0, 1) - (-0.5f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn output_at_t0_is_initial_state() {
        let traj = solve(
            &Decay,
            &[0.5],
            &[0.0],
            &SolverConfig::default(),
            &ForcingSchedule::default(),
        )
        .unwrap();
        assert_eq!(traj.state(0), &[1.0]);
        assert_eq!(traj.n_steps, 0);
    }

    #[test]
    fn piecewise_forcing_is_integrated_exactly() {
        let forcing = ForcingSchedule::from_on_intervals(&[(1.0, 2.5)]).unwrap();
        let traj = solve(
            &Ramp,
            &[],
            &[0.5, 1.0, 2.0, 3.0, 4.0],
            &SolverConfig::default(),
            &forcing,
        )
        .unwrap();
        let got: Vec<f64> = (0..traj.len()).map(|i| traj.state(i)[0]).collect();
        let want = [0.0, 0.0, 1.0, 1.5, 1.5];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        let f = ForcingSchedule::default();
        let c = SolverConfig::default();
        assert!(matches!(
            solve(&Decay, &[0.5], &[1.0, 1.0], &c, &f),
            Err(OdeError::InvalidGrid(_))
        ));
        assert!(matches!(
            solve(&Decay, &[0.5], &[-1.0], &c, &f),
            Err(OdeError::InvalidGrid(_))
        ));
        assert!(matches!(
            solve(&Decay, &[f64::NAN], &[1.0], &c, &f),
            Err(OdeError::NonFiniteParameter)
        ));
        assert!(matches!(
            solve(&Decay, &[0.5, 1.0], &[1.0], &c, &f),
            Err(OdeError::DimensionMismatch { .. })
        ));
        let bad = SolverConfig {
            rel_tol: 0.0,
            ..c
        };
        assert!(matches!(
            solve(&Decay, &[0.5], &[1.0], &bad, &f),
            Err(OdeError::InvalidConfig(_))
        ));
    }

    #[test]
    fn max_steps_is_reported() {
        let c = SolverConfig {
            max_steps: 3,
            ..SolverConfig::default()
        };
        let r = solve(&Decay, &[50.0], &[100.0], &c, &ForcingSchedule::default());
        assert!(matches!(r, Err(OdeError::MaxStepsExceeded { .. })));
    }

    #[test]
    fn blow_up_is_reported() {
        /// dy/dt = y^2 from y(0) = 1 blows up at t = 1.
        struct Blow;
        impl OdeSystem for Blow {
            fn dim(&self) -> usize {
                1
            }
            fn n_params(&self) -> usize {
                0
            }
            fn rhs<T: Real>(&self, _t: f64, y: &[T], _xi: &[T], _f: f64, dy: &mut [T]) {
                dy[0] = y[0] * y[0];
            }
            fn initial_state<T: Real>(&self, _xi: &[T], y0: &mut [T]) {
                y0[0] = T::from(1.0);
            }
        }
        let c = SolverConfig {
            max_steps: 100_000,
            ..SolverConfig::default()
        };
        let r = solve(&Blow, &[], &[2.0], &c, &ForcingSchedule::default());
        assert!(r.is_err(), "{r:?}");
    }
}
