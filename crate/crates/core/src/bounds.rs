//! The two comparison constructions: the eigenfunction-mass ODE that forces
//! blow-up, and the separable supersolution `z(t) e^{−λ0 t} φ0(x)` that
//! certifies global existence.

use serde::{Deserialize, Serialize};

use crate::criterion::{ln_integrand_eps, CriterionConfig};
use crate::error::{Error, Result};
use crate::nonlinearity::{NonlinearityProfile, Potential, ScalarFunction};
use crate::quadrature::{ln_add, log_integral, QuadConfig};
use crate::spectral::EigenPair;
use crate::verdict::{classify_tail, Label};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum OdeStatus {
    Completed,
    BlewUp { t_star: f64 },
    LeftDomain { t_exit: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub min_step: f64,
    pub max_step: f64,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub status: OdeStatus,
    pub step_stats: StepStats,
    pub diagnostics: Vec<String>,
}

impl OdeTrajectory {
    /// Linear interpolation of the stored values.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let (first, last) = (self.times[0], *self.times.last().unwrap());
        if !(t >= first && t <= last) {
            return Err(Error::OutOfDomain(format!("trajectory covers [{first}, {last}], asked for t = {t}")));
        }
        let i = self.times.partition_point(|&x| x < t);
        if self.times[i] == t || i == 0 {
            return Ok(self.values[i]);
        }
        let (t1, t2) = (self.times[i - 1], self.times[i]);
        Ok(self.values[i - 1] + (self.values[i] - self.values[i - 1]) * (t - t1) / (t2 - t1))
    }

    /// Rows `(t, value, step)` where `step` is the size of the step that reached `t`.
    pub fn rows(&self) -> Vec<[f64; 3]> {
        self.times
            .iter()
            .enumerate()
            .map(|(i, &t)| [t, self.values[i], if i == 0 { 0.0 } else { t - self.times[i - 1] }])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KaplanConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Blow-up is declared once the rescaled mass `e^{λ0 t} y` exceeds this
    /// while the step is below `step_floor`.
    pub blowup_threshold: f64,
    pub step_floor: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for KaplanConfig {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-16, blowup_threshold: 1e8, step_floor: 1e-12, initial_step: 1e-4, max_steps: 2_000_000 }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

enum StepResult {
    Ok { w: f64, err: f64 },
    /// A stage left `W > 0` or was not finite.
    Escaped,
}

fn dopri_step(rhs: &impl Fn(f64, f64) -> f64, t: f64, w: f64, h: f64) -> StepResult {
    let mut k = [0.0; 7];
    for s in 0..7 {
        let mut ws = w;
        for j in 0..s {
            ws += h * A[s][j] * k[j];
        }
        if !(ws > 0.0) || !ws.is_finite() {
            return StepResult::Escaped;
        }
        k[s] = rhs(t + C[s] * h, ws);
        if !k[s].is_finite() {
            return StepResult::Escaped;
        }
    }
    let w5 = w + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
    let w4 = w + h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
    if !(w5 > 0.0) {
        return StepResult::Escaped;
    }
    StepResult::Ok { w: w5, err: (w5 - w4).abs() }
}

/// Integrates `y' = −λ0 y + ψ(t) f(y)`, `y(0) = y0`, up to `horizon`.
///
/// The state is `W = 1/(e^{λ0 t} y)`, which obeys
/// `W' = −ψ(t) e^{λ0 t} f(e^{−λ0 t}/W) W²` and reaches 0 exactly at blow-up,
/// so the integration stays in a bounded variable. Recorded values are `y`.
pub fn kaplan_ode(
    psi: &ScalarFunction,
    f: &ScalarFunction,
    lambda0: f64,
    y0: f64,
    horizon: f64,
    cfg: &KaplanConfig,
) -> Result<OdeTrajectory> {
    if !(y0 > 0.0) {
        return Err(Error::InvalidInitialData(format!("y0 = {y0} must be positive")));
    }
    let rhs = |t: f64, w: f64| -> f64 {
        let lp = psi.ln_eval(t);
        if lp == f64::NEG_INFINITY {
            return 0.0;
        }
        let ln_w = w.ln();
        -(lp + lambda0 * t + f.ln_eval_exp(-lambda0 * t - ln_w) + 2.0 * ln_w).exp()
    };
    let y_of = |t: f64, w: f64| (-lambda0 * t).exp() / w;
    let mut t = 0.0;
    let mut w = 1.0 / y0;
    let mut h = cfg.initial_step.min(horizon);
    let mut times = vec![0.0];
    let mut values = vec![y0];
    let mut stats = StepStats { min_step: f64::INFINITY, max_step: 0.0, accepted: 0, rejected: 0 };
    let mut diagnostics = Vec::new();
    let mut status = OdeStatus::Completed;
    while t < horizon {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            diagnostics.push(format!("step budget exhausted at t = {t}"));
            break;
        }
        let h_try = h.min(horizon - t);
        match dopri_step(&rhs, t, w, h_try) {
            StepResult::Ok { w: w_new, err } => {
                let scale = cfg.atol + cfg.rtol * w.abs().max(w_new.abs());
                let ratio = err / scale;
                if ratio <= 1.0 {
                    t = if h_try == horizon - t { horizon } else { t + h_try };
                    w = w_new;
                    times.push(t);
                    values.push(y_of(t, w));
                    stats.accepted += 1;
                    stats.min_step = stats.min_step.min(h_try);
                    stats.max_step = stats.max_step.max(h_try);
                }
                else {
                    stats.rejected += 1;
                }
                let fac = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                h = h_try * fac;
            }
            StepResult::Escaped => {
                stats.rejected += 1;
                h = h_try * 0.5;
            }
        }
        if h < cfg.step_floor {
            if 1.0 / w > cfg.blowup_threshold {
                status = OdeStatus::BlewUp { t_star: t };
            } else {
                diagnostics.push(format!("step fell below {} with rescaled mass {:e}", cfg.step_floor, 1.0 / w));
                status = OdeStatus::LeftDomain { t_exit: t };
            }
            break;
        }
    }
    if stats.accepted == 0 {
        stats.min_step = 0.0;
    }
    Ok(OdeTrajectory { times, values, status, step_stats: stats, diagnostics })
}

/// `e^{−λ0 t} / (1/y0 − 2(√(t+1) − 1))`, or `+∞` once the denominator is not positive.
pub fn sec2_closed_bound(y0: f64, t: f64, lambda0: f64) -> f64 {
    let den = 1.0 / y0 - 2.0 * ((t + 1.0).sqrt() - 1.0);
    if den <= 0.0 {
        f64::INFINITY
    } else {
        (-lambda0 * t).exp() / den
    }
}

/// Choice of `z(0)` for the supersolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Z0 {
    /// Half the admissible bound.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionConfig {
    pub z0: Z0,
    /// Accept `z0` above the admissible bound and report where the bracket
    /// `F_M(z0) − J(t)` reaches zero instead of failing.
    pub unchecked: bool,
    pub criterion: CriterionConfig,
}

impl Default for SupersolutionConfig {
    fn default() -> Self {
        Self { z0: Z0::Auto, unchecked: false, criterion: CriterionConfig::default() }
    }
}

/// `z(t) = F_M⁻¹[F_M(z0) − J(t)]` with `J(t) = (1/ε)∫_0^t ψ e^{λ0τ} f(ε e^{−λ0τ}) dτ`.
#[derive(Debug)]
pub struct SupersolutionPath<'a> {
    profile: &'a NonlinearityProfile,
    psi: &'a ScalarFunction,
    pub lambda0: f64,
    pub eps: f64,
    pub z0: f64,
    /// `F_M⁻¹[(1/ε) I(ε)]`; admissible `z0` lie strictly below it.
    pub bound: f64,
    /// `(1/ε) I(ε)`, the total increment of `J`.
    pub j_total: f64,
    fm_z0: f64,
    quad: QuadConfig,
    pub diagnostics: Vec<String>,
}

impl<'a> SupersolutionPath<'a> {
    pub fn new(
        profile: &'a NonlinearityProfile,
        psi: &'a ScalarFunction,
        lambda0: f64,
        eps: f64,
        cfg: &SupersolutionConfig,
    ) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::OutOfDomain(format!("eps = {eps} must be positive")));
        }
        let f = profile.function();
        let crit = &cfg.criterion;
        let v = classify_tail(|t| ln_integrand_eps(psi, f, lambda0, eps, t), 0.0, &crit.horizons, &crit.tail);
        if v.label != Label::Convergent {
            return Err(Error::CriterionNotConvergent(format!("I(ε = {eps}) is {}", v.label)));
        }
        let j_total = v.value.unwrap_or(0.0) / eps;
        let bound = if j_total > 0.0 { profile.invert_potential(Potential::FM, j_total)? } else { profile.m_star };
        let z0 = match cfg.z0 {
            Z0::Auto => 0.5 * bound.min(if profile.m_star.is_finite() { profile.m_star } else { f64::INFINITY }),
            Z0::Value(z) => z,
        };
        if !(z0 > 0.0) || z0 >= profile.m_star {
            return Err(Error::OutOfDomain(format!("z0 = {z0} must lie in (0, m* = {})", profile.m_star)));
        }
        if z0 >= bound && !cfg.unchecked {
            return Err(Error::InadmissibleZ0 { z0, bound });
        }
        let mut diagnostics = Vec::new();
        if eps < 1.0 {
            diagnostics.push(format!(
                "ε = {eps} < 1: with sup φ0 = 1 the supersolution inequality needs φ0 ≤ ε, which fails near the maximum of φ0"
            ));
        }
        let fm_z0 = profile.potential(Potential::FM, z0)?;
        Ok(SupersolutionPath { profile, psi, lambda0, eps, z0, bound, j_total, fm_z0, quad: crit.tail.quad, diagnostics })
    }

    fn ln_j_between(&self, a: f64, b: f64) -> f64 {
        let f = self.profile.function();
        log_integral(|t| ln_integrand_eps(self.psi, f, self.lambda0, self.eps, t), a, b, &self.quad).ln_value
            - self.eps.ln()
    }

    /// `J(t)`.
    pub fn j(&self, t: f64) -> f64 {
        self.ln_j_between(0.0, t).exp()
    }

    fn z_from_ln_j(&self, ln_j: f64) -> Result<Option<f64>> {
        if ln_j == f64::NEG_INFINITY {
            return Ok(Some(self.z0));
        }
        let arg = self.fm_z0 - ln_j.exp();
        if arg <= 0.0 {
            return Ok(None);
        }
        Ok(Some(self.profile.invert_potential(Potential::FM, arg)?))
    }

    /// `z(t)`, or `None` once the bracket has left the range of `F_M`.
    pub fn eval(&self, t: f64) -> Result<Option<f64>> {
        if t < 0.0 {
            return Err(Error::OutOfDomain(format!("t = {t} < 0")));
        }
        self.z_from_ln_j(self.ln_j_between(0.0, t))
    }

    /// `z` on the given increasing times, with `J` accumulated window by window.
    pub fn trajectory(&self, times: &[f64]) -> Result<OdeTrajectory> {
        let mut out_t = Vec::new();
        let mut out_z = Vec::new();
        let mut ln_j = f64::NEG_INFINITY;
        let mut prev = 0.0;
        let mut status = OdeStatus::Completed;
        for &t in times {
            ln_j = ln_add(ln_j, self.ln_j_between(prev, t));
            prev = t;
            match self.z_from_ln_j(ln_j)? {
                Some(z) => {
                    out_t.push(t);
                    out_z.push(z);
                }
                None => {
                    status = OdeStatus::LeftDomain { t_exit: self.exit_time(out_t.last().copied().unwrap_or(0.0), t) };
                    break;
                }
            }
        }
        let steps: Vec<f64> = out_t.windows(2).map(|w| w[1] - w[0]).collect();
        let step_stats = StepStats {
            min_step: steps.iter().cloned().fold(f64::INFINITY, f64::min).min(f64::MAX),
            max_step: steps.iter().cloned().fold(0.0, f64::max),
            accepted: steps.len(),
            rejected: 0,
        };
        Ok(OdeTrajectory { times: out_t, values: out_z, status, step_stats, diagnostics: self.diagnostics.clone() })
    }

    /// Time at which `J(t) = F_M(z0)`, by bisection on `[a, b]`.
    fn exit_time(&self, mut a: f64, mut b: f64) -> f64 {
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if self.j(m) >= self.fm_z0 {
                b = m;
            } else {
                a = m;
            }
        }
        b
    }

    /// `ū(x, t) = z(t) e^{−λ0 t} φ0(x)` at grid node `node` (sup-normalized `φ0`).
    pub fn field(&self, eigen: &EigenPair, node: usize, t: f64) -> Result<f64> {
        let z = self.eval(t)?.ok_or_else(|| Error::OutOfDomain(format!("z has left its domain before t = {t}")))?;
        Ok(z * (-eigen.lambda0 * t).exp() * eigen.phi0_sup[node])
    }

    /// Residual `z' − (1/ε) ψ e^{λ0 t} f(ε e^{−λ0 t}) f_M(z)` relative to `z'`,
    /// with `z'` from a centered difference of step `h`.
    pub fn ode_residual(&self, t: f64, h: f64) -> Result<f64> {
        let zp = self.eval(t + h)?.unwrap_or(f64::NAN);
        let zm = self.eval((t - h).max(0.0))?.unwrap_or(f64::NAN);
        let dz = (zp - zm) / (t + h - (t - h).max(0.0));
        let z = self.eval(t)?.unwrap_or(f64::NAN);
        let f = self.profile.function();
        let rhs = (ln_integrand_eps(self.psi, f, self.lambda0, self.eps, t) - self.eps.ln()).exp() * self.profile.majorant(z);
        Ok(((dz - rhs) / rhs.abs().max(f64::MIN_POSITIVE)).abs())
    }
}

/// Samples `z` on `times`; `z0 = Auto` takes half the admissible bound.
pub fn supersolution_z(
    profile: &NonlinearityProfile,
    psi: &ScalarFunction,
    lambda0: f64,
    eps: f64,
    times: &[f64],
    cfg: &SupersolutionConfig,
) -> Result<OdeTrajectory> {
    SupersolutionPath::new(profile, psi, lambda0, eps, cfg)?.trajectory(times)
}

/// `z(t) e^{−λ0 t} φ0_sup(node)` with `z` interpolated from a trajectory.
pub fn supersolution_field(z: &OdeTrajectory, eigen: &EigenPair, node: usize, t: f64) -> Result<f64> {
    Ok(z.value_at(t)? * (-eigen.lambda0 * t).exp() * eigen.phi0_sup[node])
}
