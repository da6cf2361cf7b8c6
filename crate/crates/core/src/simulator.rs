//! Method-of-lines solver for `u_t = Δ_h u + ψ(t) f(u)` with blow-up detection.
//!
//! The state is kept as `u = exp(c − μ t) w` with `sup w = 1` and `μ` the
//! discrete principal eigenvalue. Diffusion acts on `w` through the shifted
//! operator `Δ_h + μ`, which leaves `φ0` fixed, and the log-scale `c` absorbs
//! both the heat decay and any growth, so neither long horizons nor runs past
//! the blow-up threshold leave floating point range.
//!
//! Each step is a Strang splitting: backward-Euler half-step, a Heun step of
//! the reaction, backward-Euler half-step. Backward Euler with the shift is an
//! M-matrix solve for every `dt`, so nonnegativity is kept unconditionally.

use serde::{Deserialize, Serialize};

use crate::bounds::OdeTrajectory;
use crate::diffusion::DiffusionStep;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::nonlinearity::ScalarFunction;
use crate::semigroup::check_initial_data;
use crate::spectral::{DomainGrid, EigenPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub blowup_threshold: f64,
    pub dt_floor: f64,
    pub dt_init: f64,
    /// Steps may grow to `max(dt_max_abs, dt_max_rel · t)`.
    pub dt_max_abs: f64,
    pub dt_max_rel: f64,
    /// A step is halved when the reaction increment exceeds this fraction of the sup-norm.
    pub max_increment: f64,
    /// Steps grow by `dt_growth` while the increment stays below a quarter of `max_increment`.
    pub dt_growth: f64,
    /// `GlobalEvidence` also needs `sup w · e^c` (the rescaled amplitude)
    /// to change by less than this fraction over the last doubling of time.
    pub settle_tol: f64,
    pub frames: FrameMode,
    pub max_steps: usize,
    pub exec: Exec,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            blowup_threshold: 1e6,
            dt_floor: 1e-10,
            dt_init: 1e-3,
            dt_max_abs: 1e-2,
            dt_max_rel: 0.05,
            max_increment: 0.1,
            dt_growth: 1.25,
            settle_tol: 2e-2,
            frames: FrameMode::None,
            max_steps: 1_000_000,
            exec: Exec::Sequential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameMode {
    None,
    EveryStep,
    /// Steps are shortened to land on each of these times.
    At(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum SimStatus {
    BlownUp { t_star: f64, final_sup_norm: f64 },
    GlobalEvidence { horizon: f64, max_sup_norm: f64, tail_decay_rate: f64 },
    Undetermined,
}

impl SimStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimStatus::BlownUp { .. } => "BlownUp",
            SimStatus::GlobalEvidence { .. } => "GlobalEvidence",
            SimStatus::Undetermined => "Undetermined",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub ln_sup_norms: Vec<f64>,
    /// Size of the step that reached each time (0 for the initial entry).
    pub dts: Vec<f64>,
}

impl SimTrace {
    fn push(&mut self, t: f64, ln_sup: f64, dt: f64) {
        self.times.push(t);
        self.ln_sup_norms.push(ln_sup);
        self.sup_norms.push(ln_sup.exp());
        self.dts.push(dt);
    }

    /// Rows `(t, sup_norm, dt)`.
    pub fn rows(&self) -> Vec<[f64; 3]> {
        (0..self.times.len()).map(|i| [self.times[i], self.sup_norms[i], self.dts[i]]).collect()
    }

    /// Least-squares slope of `ln sup u` against `t` over `t ≥ from`.
    pub fn tail_log_slope(&self, from: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.ln_sup_norms)
            .filter(|(t, l)| **t >= from && l.is_finite())
            .map(|(t, l)| (*t, *l))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub resolution: Vec<usize>,
    pub scheme: String,
    pub dt_min: f64,
    pub dt_max: f64,
    pub steps: usize,
    pub rejected: usize,
}

/// A stored field `u = exp(ln_scale) · w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub ln_scale: f64,
    pub w: Vec<f64>,
}

impl Frame {
    pub fn u(&self) -> Vec<f64> {
        let s = self.ln_scale.exp();
        self.w.iter().map(|w| w * s).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub status: SimStatus,
    pub trace: SimTrace,
    pub grid_meta: GridMeta,
    /// Discrete `λ0` used as the rescaling rate `μ`.
    pub mu: f64,
    pub frames: Vec<Frame>,
    pub diagnostics: Vec<String>,
}

impl SimOutcome {
    pub fn frame_times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    /// Time and amplitude of the last trace entry.
    pub fn final_sup_norm(&self) -> f64 {
        *self.trace.sup_norms.last().unwrap_or(&f64::NAN)
    }
}

struct Reaction<'a> {
    psi: &'a ScalarFunction,
    f: &'a ScalarFunction,
    mu: f64,
    exec: Exec,
}

impl Reaction<'_> {
    /// `R_i = e^{μt − c} ψ(t) f(e^{c − μt} w_i)`, the reaction seen by `w`.
    fn eval(&self, t: f64, c: f64, w: &[f64]) -> Vec<f64> {
        let lp = self.psi.ln_eval(t);
        if lp == f64::NEG_INFINITY {
            return vec![0.0; w.len()];
        }
        let shift = c - self.mu * t;
        let base = lp - shift;
        self.exec.map(w, |&wi| {
            if wi <= 0.0 {
                return 0.0;
            }
            (base + self.f.ln_eval_exp(shift + wi.ln())).exp()
        })
    }
}

/// Integrates from `u0` up to `horizon` and classifies the run.
pub fn simulate(
    grid: &DomainGrid,
    eigen: &EigenPair,
    psi: &ScalarFunction,
    f: &ScalarFunction,
    u0: &[f64],
    horizon: f64,
    cfg: &SimConfig,
) -> Result<SimOutcome> {
    check_initial_data(grid, u0)?;
    if !(horizon > 0.0) {
        return Err(Error::Precondition(format!("horizon = {horizon} must be positive")));
    }
    let mu = eigen.lambda0;
    let shifts = &eigen.axis_lambdas;
    let reaction = Reaction { psi, f, mu, exec: cfg.exec };
    let frame_targets: Vec<f64> = match &cfg.frames {
        FrameMode::At(ts) => {
            let mut ts: Vec<f64> = ts.iter().copied().filter(|t| *t > 0.0 && *t <= horizon).collect();
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            ts
        }
        _ => Vec::new(),
    };
    let record_all = cfg.frames == FrameMode::EveryStep;
    let want_initial = cfg.frames != FrameMode::None;

    let s0 = u0.iter().cloned().fold(0.0, f64::max);
    let mut w: Vec<f64> = u0.iter().map(|v| v / s0).collect();
    let mut c = s0.ln();
    let mut t = 0.0;
    let mut dt = cfg.dt_init.min(horizon);
    let mut trace = SimTrace::default();
    trace.push(0.0, c, 0.0);
    let mut frames = Vec::new();
    if want_initial {
        frames.push(Frame { t: 0.0, ln_scale: c, w: w.clone() });
    }
    let mut next_frame = 0;
    let mut meta = GridMeta {
        resolution: grid.axes.iter().map(|a| a.n).collect(),
        scheme: "strang: shifted backward-Euler half-steps around a Heun reaction step".into(),
        dt_min: f64::INFINITY,
        dt_max: 0.0,
        steps: 0,
        rejected: 0,
    };
    let mut diagnostics = Vec::new();
    let mut half: Option<DiffusionStep> = None;
    let mut overflowed = false;
    let ln_threshold = cfg.blowup_threshold.ln();
    let mut status = None;

    while t < horizon {
        if meta.steps + meta.rejected >= cfg.max_steps {
            diagnostics.push(format!("step budget exhausted at t = {t}"));
            status = Some(SimStatus::Undetermined);
            break;
        }
        let mut h = dt.min(horizon - t);
        let mut lands_on_frame = false;
        if let Some(&tf) = frame_targets.get(next_frame) {
            if t + h >= tf {
                h = tf - t;
                lands_on_frame = true;
            }
        }
        if half.as_ref().is_none_or(|d| d.dt != 0.5 * h) {
            half = Some(DiffusionStep::new(grid, 0.5 * h, 1.0, shifts, cfg.exec));
        }
        let diff = half.as_ref().unwrap();

        let mut w1 = w.clone();
        diff.apply(&mut w1);
        let r0 = reaction.eval(t, c, &w1);
        let inc0 = r0.iter().cloned().fold(0.0, f64::max) * h;
        let mut accepted = inc0.is_finite() && inc0 <= cfg.max_increment;
        let mut inc = inc0;
        if accepted {
            let pred: Vec<f64> = w1.iter().zip(&r0).map(|(a, r)| a + h * r).collect();
            let r1 = reaction.eval(t + h, c, &pred);
            inc = r1.iter().cloned().fold(inc0 / h, f64::max) * h;
            accepted = inc.is_finite() && inc <= cfg.max_increment;
            if accepted {
                for i in 0..w1.len() {
                    w1[i] += 0.5 * h * (r0[i] + r1[i]);
                }
            }
        }
        if !inc.is_finite() {
            overflowed = true;
        }
        if !accepted {
            meta.rejected += 1;
            dt = 0.5 * h;
            if dt < cfg.dt_floor {
                status = Some(floor_status(&trace, mu, ln_threshold, overflowed, &mut diagnostics, t));
                break;
            }
            continue;
        }
        diff.apply(&mut w1);
        let s = w1.iter().cloned().fold(0.0, f64::max);
        if !(s > 0.0) || !s.is_finite() {
            diagnostics.push(format!("state lost positivity or finiteness at t = {}", t + h));
            status = Some(SimStatus::Undetermined);
            break;
        }
        for v in w1.iter_mut() {
            *v /= s;
        }
        w = w1;
        c += s.ln();
        t = if h == horizon - t { horizon } else { t + h };
        if lands_on_frame {
            t = frame_targets[next_frame];
            next_frame += 1;
        }
        meta.steps += 1;
        meta.dt_min = meta.dt_min.min(h);
        meta.dt_max = meta.dt_max.max(h);
        let ln_sup = c - mu * t;
        trace.push(t, ln_sup, h);
        if record_all || lands_on_frame {
            frames.push(Frame { t, ln_scale: c - mu * t, w: w.clone() });
        }
        if inc < 0.25 * cfg.max_increment && !lands_on_frame {
            dt = (h * cfg.dt_growth).min(cfg.dt_max_abs.max(cfg.dt_max_rel * t));
        }
    }
    if meta.steps == 0 {
        meta.dt_min = 0.0;
    }
    let status = match status {
        Some(s) => s,
        None => global_status(&trace, mu, horizon, cfg, &mut diagnostics),
    };
    Ok(SimOutcome { status, trace, grid_meta: meta, mu, frames, diagnostics })
}

fn growing(trace: &SimTrace, n: usize) -> bool {
    let l = &trace.ln_sup_norms;
    l.len() > n && l[l.len() - n - 1..].windows(2).all(|p| p[1] > p[0])
}

/// At the step floor the run counts as blown up when either `sup u` or the
/// rescaled amplitude `e^{μt} sup u` is past the threshold and still growing.
/// With exponentially growing weights ψ the reaction time scale collapses
/// below the floor long before `sup u` itself is large.
fn floor_status(
    trace: &SimTrace,
    mu: f64,
    ln_threshold: f64,
    overflowed: bool,
    diagnostics: &mut Vec<String>,
    t: f64,
) -> SimStatus {
    let last = *trace.ln_sup_norms.last().unwrap();
    let blown = SimStatus::BlownUp { t_star: t, final_sup_norm: last.exp() };
    if last.max(last + mu * t) > ln_threshold && growing(trace, 1) {
        if last <= ln_threshold {
            diagnostics.push(format!("rescaled amplitude {:e} past the threshold at t = {t}", (last + mu * t).exp()));
        }
        return blown;
    }
    if overflowed && growing(trace, 5) {
        diagnostics.push(format!("reaction overflow after monotone growth at t = {t}, sup-norm {:e}", last.exp()));
        return blown;
    }
    diagnostics.push(format!("step fell below the floor at t = {t} with sup-norm {:e}", last.exp()));
    SimStatus::Undetermined
}

fn global_status(trace: &SimTrace, mu: f64, horizon: f64, cfg: &SimConfig, diagnostics: &mut Vec<String>) -> SimStatus {
    let max_ln = trace.ln_sup_norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let from = 0.5 * horizon;
    let Some(slope) = trace.tail_log_slope(from) else {
        diagnostics.push("too few steps in the second half of the horizon".into());
        return SimStatus::Undetermined;
    };
    // Change of the rescaled amplitude ln sup u + μ t across [T/2, T].
    let k = trace.times.partition_point(|&s| s < from);
    let a = trace.ln_sup_norms[k] + mu * trace.times[k];
    let b = trace.ln_sup_norms.last().unwrap() + mu * horizon;
    let drift = (b - a).exp_m1().abs();
    if slope <= 0.0 && drift <= cfg.settle_tol {
        return SimStatus::GlobalEvidence { horizon, max_sup_norm: max_ln.exp(), tail_decay_rate: slope };
    }
    diagnostics.push(format!("tail log-slope {slope:.4e}, rescaled amplitude drift {drift:.3e} over the second half"));
    SimStatus::Undetermined
}

/// Downward amplitude search: `u0 = a·φ0` for `a = 1, ½, ¼, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSearch {
    pub amplitude: Option<f64>,
    pub tried: Vec<(f64, SimStatus)>,
}

pub fn find_global_amplitude(
    grid: &DomainGrid,
    eigen: &EigenPair,
    psi: &ScalarFunction,
    f: &ScalarFunction,
    horizon: f64,
    max_halvings: usize,
    cfg: &SimConfig,
) -> Result<AmplitudeSearch> {
    let mut tried = Vec::new();
    let mut a = 1.0;
    for _ in 0..=max_halvings {
        let u0: Vec<f64> = eigen.phi0_sup.iter().map(|p| a * p).collect();
        let out = simulate(grid, eigen, psi, f, &u0, horizon, cfg)?;
        tried.push((a, out.status));
        if matches!(out.status, SimStatus::GlobalEvidence { .. }) {
            return Ok(AmplitudeSearch { amplitude: Some(a), tried });
        }
        a *= 0.5;
    }
    Ok(AmplitudeSearch { amplitude: None, tried })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dominated: bool,
    /// Largest `(w e^{c} − z φ0)_+` over frames and nodes, in the rescaled units
    /// `e^{μ t} u`.
    pub max_violation: f64,
    /// The same in the original units of `u`.
    pub max_violation_u: f64,
    pub frames_checked: usize,
}

/// Checks `u ≤ z(t) e^{−μ t} φ0 + tol` at every stored frame.
///
/// `z` is interpolated linearly between its samples, so it should be sampled at
/// the frame times.
pub fn comparison_check(sim: &SimOutcome, z: &OdeTrajectory, eigen: &EigenPair, tol: f64) -> Result<ComparisonReport> {
    if sim.frames.is_empty() {
        return Err(Error::Precondition("the simulation stored no frames".into()));
    }
    let f0 = &sim.frames[0];
    if f0.t != 0.0 {
        return Err(Error::Precondition("the first frame must be the initial data".into()));
    }
    let z0 = z.value_at(0.0)?;
    let s0 = f0.ln_scale.exp();
    if let Some(i) = (0..f0.w.len()).find(|&i| f0.w[i] * s0 > z0 * eigen.phi0_sup[i] * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!("u0 exceeds z0·φ0 at node {i}")));
    }
    let mut max_v = 0.0_f64;
    let mut max_u = 0.0_f64;
    let mut checked = 0;
    for fr in &sim.frames {
        if fr.t > *z.times.last().unwrap() {
            break;
        }
        let zt = z.value_at(fr.t)?;
        let rescale = (fr.ln_scale + sim.mu * fr.t).exp();
        let decay = (-sim.mu * fr.t).exp();
        for (w, p) in fr.w.iter().zip(&eigen.phi0_sup) {
            let gap = w * rescale - zt * p;
            max_v = max_v.max(gap);
            max_u = max_u.max(gap * decay);
        }
        checked += 1;
    }
    if checked < sim.frames.len() {
        return Err(Error::Precondition(format!(
            "z covers {} of {} frames",
            checked,
            sim.frames.len()
        )));
    }
    Ok(ComparisonReport { dominated: max_v <= tol, max_violation: max_v, max_violation_u: max_u, frames_checked: checked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::principal_eigenpair;
    use std::f64::consts::PI;

    fn unit(n: usize) -> (DomainGrid, EigenPair) {
        let g = DomainGrid::interval(0.0, 1.0, n).unwrap();
        let e = principal_eigenpair(&g).unwrap();
        (g, e)
    }

    #[test]
    fn pure_heat_eigen_decay() {
        let (g, e) = unit(99);
        let out = simulate(&g, &e, &ScalarFunction::constant(0.0), &ScalarFunction::power(2.0), &e.phi0_sup, 1.0, &SimConfig::default())
            .unwrap();
        assert!(matches!(out.status, SimStatus::GlobalEvidence { .. }), "{:?}", out.status);
        for (t, s) in out.trace.times.iter().zip(&out.trace.sup_norms) {
            assert!((s / (-PI * PI * t).exp() - 1.0).abs() < 1e-3, "t = {t}");
        }
    }

    #[test]
    fn counterexample_blows_up() {
        let (g, e) = unit(99);
        let u0: Vec<f64> = e.phi0_sup.iter().map(|p| 0.5 * p).collect();
        let psi = ScalarFunction::time_weight(0.5, e.lambda0);
        let out = simulate(&g, &e, &psi, &ScalarFunction::power(2.0), &u0, 10.0, &SimConfig::default()).unwrap();
        // Mass-weighted projection y0 and the time at which its closed-form lower bound escapes.
        let mass: Vec<f64> = e.phi0_mass.iter().zip(&u0).map(|(p, u)| p * u).collect();
        let y0 = g.integral(&mass);
        let t_bound = (1.0 + 0.5 / y0).powi(2) - 1.0;
        match out.status {
            SimStatus::BlownUp { t_star, .. } => assert!(t_star > 0.0 && t_star <= t_bound, "{t_star} vs {t_bound}"),
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn small_data_decays_at_the_principal_rate() {
        let (g, e) = unit(99);
        let u0: Vec<f64> = e.phi0_sup.iter().map(|p| 0.1 * p).collect();
        let out = simulate(&g, &e, &ScalarFunction::constant(1.0), &ScalarFunction::power(2.0), &u0, 20.0, &SimConfig::default()).unwrap();
        match out.status {
            SimStatus::GlobalEvidence { tail_decay_rate, .. } => assert!((tail_decay_rate + e.lambda0).abs() < 1e-2 * e.lambda0),
            s => panic!("{s:?}"),
        }
        assert!(out.trace.sup_norms.iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn frames_land_on_requested_times() {
        let (g, e) = unit(49);
        let cfg = SimConfig { frames: FrameMode::At(vec![0.25, 0.5, 1.0]), ..Default::default() };
        let out = simulate(&g, &e, &ScalarFunction::constant(1.0), &ScalarFunction::power(2.0), &e.phi0_sup, 1.0, &cfg).unwrap();
        assert_eq!(out.frame_times(), vec![0.0, 0.25, 0.5, 1.0]);
        assert!(out.frames.iter().all(|f| f.w.iter().all(|w| *w >= 0.0)));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let g = DomainGrid::rectangle(0.0, 1.0, 0.0, 1.0, 31).unwrap();
        let e = principal_eigenpair(&g).unwrap();
        let u0: Vec<f64> = e.phi0_sup.iter().map(|p| 2.0 * p).collect();
        let psi = ScalarFunction::constant(1.0);
        let f = ScalarFunction::power(2.0);
        let seq = simulate(&g, &e, &psi, &f, &u0, 0.5, &SimConfig::default()).unwrap();
        let par = simulate(&g, &e, &psi, &f, &u0, 0.5, &SimConfig { exec: Exec::Parallel, ..Default::default() }).unwrap();
        assert_eq!(seq.trace, par.trace);
    }
}
