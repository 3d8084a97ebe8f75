/// Nesterov dual averaging of the log step size toward a target acceptance
/// statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAveraging {
    pub target: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
    mu: f64,
    mu_factor: f64,
    counter: f64,
    h_bar: f64,
    log_eps: f64,
    log_eps_bar: f64,
}

impl DualAveraging {
    pub fn new(step_size: f64, target: f64) -> Self {
        let mut da = Self {
            target,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            mu: 0.0,
            mu_factor: 10.0,
            counter: 0.0,
            h_bar: 0.0,
            log_eps: 0.0,
            log_eps_bar: 0.0,
        };
        da.restart(step_size);
        da
    }

    /// Sets the multiple of the restart step size that iterates shrink toward
    /// (10 by default).
    pub fn with_mu_factor(mut self, factor: f64) -> Self {
        self.mu_factor = factor;
        self.restart(self.current());
        self
    }

    /// Forgets the history and shrinks toward `mu_factor * step_size`.
    pub fn restart(&mut self, step_size: f64) {
        self.mu = (self.mu_factor * step_size).ln();
        self.counter = 0.0;
        self.h_bar = 0.0;
        self.log_eps = step_size.ln();
        self.log_eps_bar = 0.0;
    }

    /// Feeds one acceptance statistic and returns the next step size.
    pub fn update(&mut self, accept_stat: f64) -> f64 {
        let a = if accept_stat.is_finite() { accept_stat.clamp(0.0, 1.0) } else { 0.0 };
        self.counter += 1.0;
        let eta = 1.0 / (self.counter + self.t0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - a);
        self.log_eps = self.mu - self.counter.sqrt() / self.gamma * self.h_bar;
        let w = self.counter.powf(-self.kappa);
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar;
        self.log_eps.exp()
    }

    pub fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    /// Averaged step size used after warmup.
    pub fn final_step_size(&self) -> f64 {
        if self.counter == 0.0 {
            self.current()
        } else {
            self.log_eps_bar.exp()
        }
    }
}

/// Robbins–Monro adaptation of a Metropolis proposal scale:
/// `log s += (alpha - target) / m^0.6`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleAdapter {
    pub target: f64,
    counter: f64,
    log_scale: f64,
}

impl ScaleAdapter {
    pub fn new(scale: f64, target: f64) -> Self {
        Self {
            target,
            counter: 0.0,
            log_scale: scale.ln(),
        }
    }

    pub fn restart(&mut self, scale: f64) {
        self.counter = 0.0;
        self.log_scale = scale.ln();
    }

    pub fn update(&mut self, alpha: f64) -> f64 {
        let a = if alpha.is_finite() { alpha.clamp(0.0, 1.0) } else { 0.0 };
        self.counter += 1.0;
        self.log_scale += (a - self.target) / self.counter.powf(0.6);
        self.log_scale.exp()
    }

    pub fn current(&self) -> f64 {
        self.log_scale.exp()
    }
}

/// Streaming per-coordinate mean and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn reset(&mut self) {
        self.n = 0;
        self.mean.iter_mut().for_each(|x| *x = 0.0);
        self.m2.iter_mut().for_each(|x| *x = 0.0);
    }

    /// Sample variance shrunk toward `1e-3`, as used for the inverse metric.
    pub fn regularized_variance(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|m2| {
                let var = if self.n > 1 { m2 / (n - 1.0) } else { 1.0 };
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }
}

/// Warmup phases: a fast initial buffer, doubling slow windows that estimate
/// the metric, and a fast terminal buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmupSchedule {
    pub n_warmup: usize,
    init_buffer: usize,
    /// Last iteration (inclusive) of each slow window.
    window_ends: Vec<usize>,
}

impl WarmupSchedule {
    pub const BASE_WINDOW: usize = 25;

    pub fn new(n_warmup: usize) -> Self {
        let init_buffer = (0.15 * n_warmup as f64) as usize;
        let term_buffer = (0.1 * n_warmup as f64) as usize;
        let slow = n_warmup.saturating_sub(init_buffer + term_buffer);
        let mut window_ends = Vec::new();
        if n_warmup >= 20 && slow >= Self::BASE_WINDOW {
            let mut start = init_buffer;
            let mut size = Self::BASE_WINDOW;
            let slow_end = init_buffer + slow;
            loop {
                let next_start = start + size;
                // stretch the last window when the following one would not fit
                if next_start + 2 * size >= slow_end {
                    window_ends.push(slow_end - 1);
                    break;
                }
                window_ends.push(next_start - 1);
                start = next_start;
                size *= 2;
            }
        }
        Self {
            n_warmup,
            init_buffer,
            window_ends,
        }
    }

    pub fn adapts_metric(&self) -> bool {
        !self.window_ends.is_empty()
    }

    pub fn in_slow_window(&self, iter: usize) -> bool {
        self.adapts_metric()
            && iter >= self.init_buffer
            && iter <= *self.window_ends.last().expect("non-empty")
    }

    pub fn is_window_end(&self, iter: usize) -> bool {
        self.window_ends.contains(&iter)
    }

    pub fn window_ends(&self) -> &[usize] {
        &self.window_ends
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_for_thousand_iterations() {
        let s = WarmupSchedule::new(1000);
        // init 150, slow windows 25, 50, 100, then 575 stretched, term 100
        assert_eq!(s.window_ends(), &[174, 224, 324, 899]);
        assert!(!s.in_slow_window(149));
        assert!(s.in_slow_window(150));
        assert!(!s.in_slow_window(900));
    }

    #[test]
    fn short_warmup_only_adapts_step_size() {
        assert!(!WarmupSchedule::new(10).adapts_metric());
        assert!(!WarmupSchedule::new(0).adapts_metric());
        let s = WarmupSchedule::new(40);
        assert_eq!(s.window_ends(), &[35]);
    }

    #[test]
    fn scale_adapter_hits_target_rate() {
        // acceptance 1 / (1 + s)
        let mut sa = ScaleAdapter::new(0.1, 0.25);
        let mut s: f64 = 0.1;
        for _ in 0..5000 {
            s = sa.update(1.0 / (1.0 + s));
        }
        assert!((s - 3.0).abs() < 0.05, "{s}");
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [[1.0, 10.0], [2.0, 13.0], [4.0, 9.0], [7.0, 11.0]];
        let mut w = Welford::new(2);
        xs.iter().for_each(|x| w.add(x));
        let mean0 = 3.5;
        let var0 = xs.iter().map(|x| (x[0] - mean0).powi(2)).sum::<f64>() / 3.0;
        let n = 4.0;
        let expect = n / (n + 5.0) * var0 + 1e-3 * 5.0 / (n + 5.0);
        assert!((w.regularized_variance()[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn dual_averaging_reaches_target_on_monotone_response() {
        // acceptance falls with step size: a(eps) = exp(-eps)
        let mut da = DualAveraging::new(1.0, 0.8);
        let mut eps: f64 = 1.0;
        for _ in 0..2000 {
            eps = da.update((-eps).exp());
        }
        let fin = da.final_step_size();
        assert!(((-fin).exp() - 0.8).abs() < 0.01, "{fin}");
    }
}
