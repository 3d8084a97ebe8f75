use super::dual::{Dual, Real};
use super::OdeError;

/// A first-order ODE system `dy/dt = f(t, y; xi, forcing)`.
///
/// The right-hand side is generic over [`Real`] so the solver can obtain
/// Jacobians by dual-number evaluation when `jacobians` is not overridden.
pub trait OdeSystem: Send + Sync {
    /// Number of state variables.
    fn dim(&self) -> usize;

    /// Length of the ODE parameter vector `xi`.
    fn n_params(&self) -> usize;

    fn t0(&self) -> f64 {
        0.0
    }

    fn rhs<T: Real>(&self, t: f64, y: &[T], xi: &[T], forcing: f64, dy: &mut [T]);

    /// Initial state; may read entries of `xi` when initial conditions are inferred.
    fn initial_state<T: Real>(&self, xi: &[T], y0: &mut [T]);

    /// Hand-written Jacobians, row-major: `jac_y[i * dim + j] = df_i/dy_j` and
    /// `jac_xi[i * n_params + k] = df_i/dxi_k`. Returns `false` when not
    /// provided, in which case dual numbers are used.
    fn jacobians(
        &self,
        _t: f64,
        _y: &[f64],
        _xi: &[f64],
        _forcing: f64,
        _jac_y: &mut [f64],
        _jac_xi: &mut [f64],
    ) -> bool {
        false
    }
}

/// Jacobians of the right-hand side by forward-mode dual numbers, in the
/// same layout as [`OdeSystem::jacobians`].
pub fn dual_jacobians<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    xi: &[f64],
    forcing: f64,
    jac_y: &mut [f64],
    jac_xi: &mut [f64],
) {
    let n = sys.dim();
    let p = sys.n_params();
    let mut yd: Vec<Dual> = y.iter().map(|&v| Dual::constant(v)).collect();
    let mut xd: Vec<Dual> = xi.iter().map(|&v| Dual::constant(v)).collect();
    let mut out = vec![Dual::default(); n];
    for j in 0..n {
        yd[j].eps = 1.0;
        sys.rhs(t, &yd, &xd, forcing, &mut out);
        yd[j].eps = 0.0;
        for i in 0..n {
            jac_y[i * n + j] = out[i].eps;
        }
    }
    for k in 0..p {
        xd[k].eps = 1.0;
        sys.rhs(t, &yd, &xd, forcing, &mut out);
        xd[k].eps = 0.0;
        for i in 0..n {
            jac_xi[i * p + k] = out[i].eps;
        }
    }
}

/// Initial state and its parameter Jacobian `dy0/dxi` (row-major, `dim x n_params`).
pub fn initial_state_with_jacobian<S: OdeSystem + ?Sized>(
    sys: &S,
    xi: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = sys.dim();
    let p = sys.n_params();
    let mut y0 = vec![0.0; n];
    sys.initial_state(xi, &mut y0);
    let mut jac = vec![0.0; n * p];
    let mut xd: Vec<Dual> = xi.iter().map(|&v| Dual::constant(v)).collect();
    let mut out = vec![Dual::default(); n];
    for k in 0..p {
        xd[k].eps = 1.0;
        sys.initial_state(&xd, &mut out);
        xd[k].eps = 0.0;
        for i in 0..n {
            jac[i * p + k] = out[i].eps;
        }
    }
    (y0, jac)
}

/// Piecewise-constant, right-continuous forcing input.
///
/// `values[0]` holds before the first breakpoint and `values[i]` on
/// `[breakpoints[i-1], breakpoints[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSchedule {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl Default for ForcingSchedule {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

impl ForcingSchedule {
    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![value],
        }
    }

    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, OdeError> {
        if values.len() != breakpoints.len() + 1 {
            return Err(OdeError::InvalidForcing(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite())
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(OdeError::InvalidForcing(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    /// Indicator schedule: 1 on each `[on, off)` interval, 0 elsewhere.
    pub fn from_on_intervals(intervals: &[(f64, f64)]) -> Result<Self, OdeError> {
        let mut sorted = intervals.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut breakpoints = Vec::new();
        let mut values = vec![0.0];
        for &(on, off) in &sorted {
            if !(off > on) {
                return Err(OdeError::InvalidForcing(format!(
                    "interval [{on}, {off}) is empty"
                )));
            }
            match breakpoints.last() {
                Some(&last) if on < last => {
                    return Err(OdeError::InvalidForcing(format!(
                        "interval starting at {on} overlaps the previous one"
                    )))
                }
                // adjacent intervals merge
                Some(&last) if on == last => {
                    breakpoints.pop();
                    values.pop();
                }
                _ => {
                    breakpoints.push(on);
                    values.push(1.0);
                }
            }
            breakpoints.push(off);
            values.push(0.0);
        }
        Self::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        self.values[idx]
    }

    /// Splits `[start, end]` into maximal constant-forcing segments.
    pub fn segments(&self, start: f64, end: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        let mut a = start;
        for &b in self.breakpoints.iter().filter(|&&b| b > start && b < end) {
            out.push((a, b, self.value_at(a)));
            a = b;
        }
        out.push((a, end, self.value_at(a)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_right_continuous() {
        let f = ForcingSchedule::new(vec![1.0, 3.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.value_at(0.5), 0.0);
        assert_eq!(f.value_at(1.0), 1.0);
        assert_eq!(f.value_at(2.999), 1.0);
        assert_eq!(f.value_at(3.0), 0.0);
    }

    #[test]
    fn on_intervals_build_indicator() {
        let f = ForcingSchedule::from_on_intervals(&[(0.0, 2.0), (5.0, 7.0)]).unwrap();
        assert_eq!(f.breakpoints(), &[0.0, 2.0, 5.0, 7.0]);
        assert_eq!(f.value_at(0.0), 1.0);
        assert_eq!(f.value_at(3.0), 0.0);
        assert_eq!(f.value_at(6.0), 1.0);
        assert_eq!(f.value_at(8.0), 0.0);
        let merged = ForcingSchedule::from_on_intervals(&[(0.0, 2.0), (2.0, 3.0)]).unwrap();
        assert_eq!(merged.breakpoints(), &[0.0, 3.0]);
    }

    #[test]
    fn rejects_bad_schedules() {
        assert!(ForcingSchedule::new(vec![2.0, 1.0], vec![0.0, 1.0, 0.0]).is_err());
        assert!(ForcingSchedule::new(vec![1.0], vec![0.0]).is_err());
        assert!(ForcingSchedule::from_on_intervals(&[(0.0, 3.0), (2.0, 4.0)]).is_err());
    }

    #[test]
    fn segments_split_at_interior_breakpoints() {
        let f = ForcingSchedule::from_on_intervals(&[(2.0, 4.0)]).unwrap();
        let segs = f.segments(0.0, 10.0);
        assert_eq!(segs, vec![(0.0, 2.0, 0.0), (2.0, 4.0, 1.0), (4.0, 10.0, 0.0)]);
        assert_eq!(f.segments(3.0, 3.5), vec![(3.0, 3.5, 1.0)]);
    }
}
