//! The Dirichlet heat flow `S(t)u0` and its sup-norm decay.

use serde::{Deserialize, Serialize};

use crate::diffusion::DiffusionStep;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::spectral::DomainGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatConfig {
    /// Time step as a fraction of the diffusion time `L_min²/π²`.
    pub dt_factor: f64,
    /// Backward-Euler half steps before switching to Crank–Nicolson.
    pub startup_half_steps: usize,
    pub exec: Exec,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self { dt_factor: 1e-3, startup_half_steps: 4, exec: Exec::Sequential }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub c1: f64,
    pub c2: f64,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
    /// Set by [`DecayTrace::with_envelope`].
    pub envelope: Option<Envelope>,
    pub lambda0: Option<f64>,
}

/// `n + 1` equally spaced times on `[0, t_end]`.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

pub(crate) fn check_initial_data(grid: &DomainGrid, u0: &[f64]) -> Result<()> {
    if u0.len() != grid.len() {
        return Err(Error::InvalidInitialData(format!("{} values for {} grid nodes", u0.len(), grid.len())));
    }
    if let Some(k) = u0.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInitialData(format!("u0[{k}] = {} is negative or not finite", u0[k])));
    }
    if u0.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInitialData("u0 is identically zero".into()));
    }
    Ok(())
}

pub(crate) fn diffusion_time(grid: &DomainGrid) -> f64 {
    let l = grid.axes.iter().map(|a| a.length()).fold(f64::INFINITY, f64::min);
    l * l / (std::f64::consts::PI * std::f64::consts::PI)
}

/// Evolves `u_t = Δ_h u` from `u0` and records `max u` at each requested time.
pub fn sup_norm_trace(grid: &DomainGrid, u0: &[f64], times: &[f64], cfg: &HeatConfig) -> Result<DecayTrace> {
    check_initial_data(grid, u0)?;
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("sample times must be nonnegative and strictly increasing".into()));
    }
    let zeros = vec![0.0; grid.dim()];
    let dt_target = cfg.dt_factor * diffusion_time(grid);
    let mut u = u0.to_vec();
    let mut t = 0.0;
    let mut startup_left = cfg.startup_half_steps;
    let mut cached: Option<DiffusionStep> = None;
    let mut sup_norms = Vec::with_capacity(times.len());
    let sup = |u: &[f64]| u.iter().cloned().fold(0.0_f64, f64::max);
    for &target in times {
        // Rannacher start: damp the non-smooth modes of u0 with implicit half steps.
        while startup_left > 0 && target > t {
            let h = (0.5 * dt_target).min(target - t);
            DiffusionStep::new(grid, h, 1.0, &zeros, cfg.exec).apply(&mut u);
            t += h;
            startup_left -= 1;
        }
        let span = target - t;
        if span > 0.0 {
            let steps = (span / dt_target).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            let stepper = match cached.take() {
                Some(s) if (s.dt - dt).abs() <= 1e-14 * dt => s,
                _ => DiffusionStep::new(grid, dt, 0.5, &zeros, cfg.exec),
            };
            for _ in 0..steps {
                stepper.apply(&mut u);
            }
            cached = Some(stepper);
            t = target;
        }
        sup_norms.push(sup(&u));
    }
    Ok(DecayTrace { times: times.to_vec(), sup_norms, envelope: None, lambda0: None })
}

/// Envelope constants `c1 ≤ sup_norm(t) e^{λ0 t} ≤ c2` over recorded `t ≥ t0 = 1/λ0`.
pub fn envelope_constants(trace: &DecayTrace, lambda0: f64) -> Result<Envelope> {
    let t0 = 1.0 / lambda0;
    let end = *trace.times.last().unwrap_or(&0.0);
    if end < t0 + 3.0 / lambda0 {
        return Err(Error::TraceTooShort(format!(
            "trace ends at t = {end}, needs t ≥ t0 + 3/λ0 = {}",
            t0 + 3.0 / lambda0
        )));
    }
    let (mut c1, mut c2) = (f64::INFINITY, 0.0_f64);
    for (t, s) in trace.times.iter().zip(&trace.sup_norms) {
        if *t >= t0 {
            let c = s * (lambda0 * t).exp();
            c1 = c1.min(c);
            c2 = c2.max(c);
        }
    }
    Ok(Envelope { c1, c2, t0 })
}

impl DecayTrace {
    pub fn with_envelope(mut self, lambda0: f64) -> Result<Self> {
        self.envelope = Some(envelope_constants(&self, lambda0)?);
        self.lambda0 = Some(lambda0);
        Ok(self)
    }

    /// `ln ‖S(t)u0‖_∞`, interpolated linearly in log space between samples.
    /// Past the last sample the decay continues at the rate `λ0`, which the
    /// envelope makes exact up to the constants `c1, c2`.
    pub fn ln_sup_at(&self, t: f64) -> Result<f64> {
        let first = self.times[0];
        if t < first {
            return Err(Error::OutOfDomain(format!("trace starts at t = {first}, asked for t = {t}")));
        }
        let n = self.times.len();
        let last = self.times[n - 1];
        if t >= last {
            if t == last {
                return Ok(self.sup_norms[n - 1].ln());
            }
            let lambda0 = self
                .lambda0
                .ok_or_else(|| Error::OutOfDomain(format!("trace ends at t = {last}, asked for t = {t}")))?;
            return Ok(self.sup_norms[n - 1].ln() - lambda0 * (t - last));
        }
        let i = self.times.partition_point(|&x| x <= t);
        let (t1, t2) = (self.times[i - 1], self.times[i]);
        let (l1, l2) = (self.sup_norms[i - 1].ln(), self.sup_norms[i].ln());
        Ok(l1 + (l2 - l1) * (t - t1) / (t2 - t1))
    }

    /// Rows `(t, sup_norm, lower, upper)` with envelope bounds `c_i e^{−λ0 t}`
    /// (NaN before an envelope is attached).
    pub fn rows(&self) -> Vec<[f64; 4]> {
        self.times
            .iter()
            .zip(&self.sup_norms)
            .map(|(&t, &s)| match (self.envelope, self.lambda0) {
                (Some(e), Some(l)) => [t, s, e.c1 * (-l * t).exp(), e.c2 * (-l * t).exp()],
                _ => [t, s, f64::NAN, f64::NAN],
            })
            .collect()
    }

    /// Least-squares slope of `ln sup_norm` over samples with `t ≥ from`.
    pub fn tail_log_slope(&self, from: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> =
            self.times.iter().zip(&self.sup_norms).filter(|(t, _)| **t >= from).map(|(t, s)| (*t, s.ln())).collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::principal_eigenpair;
    use approx::assert_relative_eq;

    #[test]
    fn eigenfunction_decays_exponentially() {
        let g = DomainGrid::interval(0.0, 1.0, 99).unwrap();
        let e = principal_eigenpair(&g).unwrap();
        let tr = sup_norm_trace(&g, &e.phi0_sup, &[0.0, 0.1, 0.2], &HeatConfig::default()).unwrap();
        assert_eq!(tr.sup_norms[0], 1.0);
        for (t, s) in tr.times.iter().zip(&tr.sup_norms) {
            assert_relative_eq!(*s, (-e.lambda0 * t).exp(), max_relative = 1e-4);
        }
    }

    #[test]
    fn rejects_bad_initial_data() {
        let g = DomainGrid::interval(0.0, 1.0, 9).unwrap();
        let cfg = HeatConfig::default();
        assert!(sup_norm_trace(&g, &[0.0; 9], &[0.0, 1.0], &cfg).is_err());
        let mut neg = vec![1.0; 9];
        neg[3] = -0.1;
        assert!(sup_norm_trace(&g, &neg, &[0.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn short_trace_has_no_envelope() {
        let g = DomainGrid::interval(0.0, 1.0, 19).unwrap();
        let e = principal_eigenpair(&g).unwrap();
        let tr = sup_norm_trace(&g, &e.phi0_sup, &uniform_times(0.2, 4), &HeatConfig::default()).unwrap();
        assert!(matches!(envelope_constants(&tr, e.lambda0), Err(Error::TraceTooShort(_))));
    }

    #[test]
    fn log_interpolation_and_extension() {
        let tr = DecayTrace {
            times: vec![0.0, 1.0, 2.0],
            sup_norms: vec![1.0, (-2.0f64).exp(), (-4.0f64).exp()],
            envelope: None,
            lambda0: Some(2.0),
        };
        assert_relative_eq!(tr.ln_sup_at(0.5).unwrap(), -1.0);
        assert_relative_eq!(tr.ln_sup_at(10.0).unwrap(), -20.0);
        assert!(tr.ln_sup_at(-1.0).is_err());
    }
}
