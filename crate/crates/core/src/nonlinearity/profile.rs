//! Minorant/majorant envelopes of `f`, their potentials, and derived constants.
//!
//! All ratios are handled as logarithms: `ln f_m(u) = min_α [ln f(αu) − ln f(α)]`
//! over a log-spaced α-grid plus the endpoints `α → 1` (always) and `α → 0`
//! (when the family determines the limit).

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::function::ScalarFunction;
use crate::error::{Error, Result};
use crate::quadrature::{ln_add, log_integral};
use crate::verdict::{classify_tail, doubling_horizons, Label, TailConfig, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub alpha_points: usize,
    pub alpha_min: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub u_points: usize,
    /// Ratios beyond `e^{ln_saturation}` saturate; below `e^{-ln_saturation}` they count as zero.
    pub ln_saturation: f64,
    pub tail: TailConfig,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            alpha_points: 2048,
            alpha_min: 1e-8,
            u_min: 1e-6,
            u_max: 1e6,
            u_points: 241,
            ln_saturation: 1e300f64.ln(),
            tail: TailConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Potential {
    /// `∫_v^∞ dw/f(w)`
    F,
    /// `∫_v^∞ dw/f_m(w)`
    Fm,
    /// `∫_v^{m*} dw/f_M(w)`
    FM,
}

impl Potential {
    pub fn name(self) -> &'static str {
        match self {
            Potential::F => "F",
            Potential::Fm => "F_m",
            Potential::FM => "F_M",
        }
    }

    fn index(self) -> usize {
        match self {
            Potential::F => 0,
            Potential::Fm => 1,
            Potential::FM => 2,
        }
    }
}

/// One envelope evaluation with its grid diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub ln_value: f64,
    /// α attaining the extremum; 0 or 1 for the endpoint limits.
    pub alpha: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiMult {
    pub gamma1: f64,
    pub gamma2: f64,
    pub quasi_multiplicative: bool,
    /// `(U_max, inf, sup)` of `f(αu)/(f(α)f(u))` for nested sampling ranges.
    pub trend: Vec<(f64, f64, f64)>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
struct Anchors {
    lo: f64,
    hi: f64,
    /// Increasing anchor points and `ln G` at each.
    points: Vec<f64>,
    ln_g: Vec<f64>,
    /// `G(lo+)`, possibly infinite.
    top: f64,
}

#[derive(Debug)]
pub struct NonlinearityProfile {
    f: ScalarFunction,
    cfg: ProfileConfig,
    ln_f1: f64,
    ln_alpha: Vec<f64>,
    ln_f_alpha: Vec<f64>,
    /// `(ln α, ln f(α))` for α = e^{-64}, e^{-128}, …, used when the family has no α → 0 limit.
    deep_alpha: Vec<(f64, f64)>,
    pub u_grid: Vec<f64>,
    pub fm_table: Vec<f64>,
    pub fmaj_table: Vec<f64>,
    pub v1: f64,
    pub m_star: f64,
    pub osgood: Verdict,
    pub osgood_flag: Option<String>,
    anchors: [OnceLock<std::result::Result<Anchors, Error>>; 3],
    v_inf: OnceLock<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub f: String,
    pub family: String,
    pub alpha_points: usize,
    pub v1: f64,
    pub m_star: Option<f64>,
    pub v_inf: Option<f64>,
    pub osgood: Label,
    pub osgood_value: Option<f64>,
    pub osgood_flag: Option<String>,
}

fn bisect(mut a: f64, mut b: f64, pred_b: impl Fn(f64) -> bool) -> f64 {
    // Invariant: pred(a) false, pred(b) true; bisect in ln u.
    for _ in 0..80 {
        let m = (a.ln() + b.ln()) * 0.5;
        let m = m.exp();
        if m <= a || m >= b {
            break;
        }
        if pred_b(m) {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

impl NonlinearityProfile {
    pub fn new(f: ScalarFunction) -> Result<Self> {
        Self::with_config(f, ProfileConfig::default())
    }

    pub fn with_config(f: ScalarFunction, cfg: ProfileConfig) -> Result<Self> {
        f.validate_reaction(1e3)?;
        let ln_f1 = f.ln_eval_exp(0.0);
        let n = cfg.alpha_points;
        let (a0, a1) = (cfg.alpha_min.ln(), (1.0 - cfg.alpha_min).ln());
        let ln_alpha: Vec<f64> = (0..n).map(|i| a0 + (a1 - a0) * i as f64 / (n - 1) as f64).collect();
        let ln_f_alpha: Vec<f64> = ln_alpha.iter().map(|&la| f.ln_eval_exp(la)).collect();
        let deep_alpha: Vec<(f64, f64)> = (6..=12)
            .map(|k| -(2f64.powi(k)))
            .map(|la| (la, f.ln_eval_exp(la)))
            .filter(|(_, l)| l.is_finite())
            .collect();
        let (u0, u1) = (cfg.u_min.ln(), cfg.u_max.ln());
        let u_grid: Vec<f64> =
            (0..cfg.u_points).map(|i| (u0 + (u1 - u0) * i as f64 / (cfg.u_points - 1) as f64).exp()).collect();
        let mut p = NonlinearityProfile {
            f,
            cfg,
            ln_f1,
            ln_alpha,
            ln_f_alpha,
            deep_alpha,
            u_grid,
            fm_table: Vec::new(),
            fmaj_table: Vec::new(),
            v1: 0.0,
            m_star: f64::INFINITY,
            osgood: Verdict::inconclusive("not computed"),
            osgood_flag: None,
            anchors: Default::default(),
            v_inf: OnceLock::new(),
        };
        p.fm_table = p.u_grid.iter().map(|&u| p.minorant(u)).collect();
        p.fmaj_table = p.u_grid.iter().map(|&u| p.majorant(u)).collect();
        p.v1 = p.detect_v1();
        p.m_star = p.detect_m_star();
        let (osgood, flag) = p.compute_osgood();
        p.osgood = osgood;
        p.osgood_flag = flag;
        Ok(p)
    }

    pub fn function(&self) -> &ScalarFunction {
        &self.f
    }

    pub fn config(&self) -> &ProfileConfig {
        &self.cfg
    }

    pub fn alpha_grid(&self) -> Vec<f64> {
        self.ln_alpha.iter().map(|l| l.exp()).collect()
    }

    /// `f(1)`, the normalization constant in the envelope inequalities.
    pub fn f1(&self) -> f64 {
        self.ln_f1.exp()
    }

    fn envelope(&self, ln_u: f64, minimum: bool) -> EnvelopePoint {
        let better = |cand: f64, cur: f64| if minimum { cand < cur } else { cand > cur };
        // α → 1 endpoint.
        let mut best = self.f.ln_eval_exp(ln_u) - self.ln_f1;
        let mut alpha = 1.0;
        for (la, lfa) in self.ln_alpha.iter().zip(&self.ln_f_alpha) {
            let r = self.f.ln_eval_exp(la + ln_u) - lfa;
            if better(r, best) {
                best = r;
                alpha = la.exp();
            }
        }
        match self.f.ln_ratio_limit_at_zero(ln_u) {
            Some(r) => {
                if better(r, best) {
                    best = r;
                    alpha = 0.0;
                }
            }
            None => {
                // No closed-form limit: probe α = e^{-L} far below the grid.
                for (la, lfa) in &self.deep_alpha {
                    let r = self.f.ln_eval_exp(la + ln_u) - lfa;
                    if !r.is_nan() && better(r, best) {
                        best = r;
                        alpha = la.exp();
                    }
                }
            }
        }
        let saturated = best > self.cfg.ln_saturation;
        EnvelopePoint { ln_value: best, alpha, saturated }
    }

    /// `ln f_m(e^{ln_u})` with the grid minimizer.
    pub fn minorant_detail(&self, u: f64) -> EnvelopePoint {
        if u == 0.0 {
            return EnvelopePoint { ln_value: f64::NEG_INFINITY, alpha: 1.0, saturated: false };
        }
        self.envelope(u.ln(), true)
    }

    pub fn majorant_detail(&self, u: f64) -> EnvelopePoint {
        if u == 0.0 {
            return EnvelopePoint { ln_value: f64::NEG_INFINITY, alpha: 1.0, saturated: false };
        }
        self.envelope(u.ln(), false)
    }

    /// `ln f_m`, clamped to the saturation level.
    pub fn ln_minorant_at_ln(&self, ln_u: f64) -> f64 {
        self.envelope(ln_u, true).ln_value.min(self.cfg.ln_saturation)
    }

    /// `ln f_M`, `+inf` once saturated.
    pub fn ln_majorant_at_ln(&self, ln_u: f64) -> f64 {
        let e = self.envelope(ln_u, false);
        if e.saturated {
            f64::INFINITY
        } else {
            e.ln_value
        }
    }

    /// `f_m(u)`; saturated values are reported as `1e300`, never as infinity.
    pub fn minorant(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.ln_minorant_at_ln(u.ln()).exp()
    }

    /// `f_M(u)`, `+inf` for `u ≥ m*`.
    pub fn majorant(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.ln_majorant_at_ln(u.ln()).exp()
    }

    fn detect_v1(&self) -> f64 {
        let first = self.fm_table.iter().position(|&v| v > 0.0);
        match first {
            Some(0) => 0.0,
            Some(i) => bisect(self.u_grid[i - 1], self.u_grid[i], |u| self.minorant(u) > 0.0),
            None => 1.0,
        }
    }

    fn detect_m_star(&self) -> f64 {
        match self.fmaj_table.iter().position(|v| v.is_infinite()) {
            None => f64::INFINITY,
            Some(0) => self.u_grid[0],
            Some(i) => bisect(self.u_grid[i - 1], self.u_grid[i], |u| self.majorant(u).is_infinite()),
        }
    }

    fn compute_osgood(&self) -> (Verdict, Option<String>) {
        let above_one_zero = self.u_grid.iter().zip(&self.fm_table).filter(|(u, _)| **u > 1.0).all(|(_, v)| *v == 0.0);
        if above_one_zero {
            let mut v = Verdict::inconclusive("f_m vanishes identically above 1");
            v.label = Label::Divergent;
            return (v, Some("f_m identically zero above 1".into()));
        }
        let v = classify_tail(|s: f64| -self.ln_minorant_at_ln(s.ln()), 1.0, &doubling_horizons(1.0, 40), &self.cfg.tail);
        (v, None)
    }

    /// Verdict on `∫_1^∞ ds/f_m(s)`.
    pub fn osgood_check(&self) -> &Verdict {
        &self.osgood
    }

    /// `ln` of the envelope used by a potential at `w = e^{ln_w}`.
    fn ln_env(&self, which: Potential, ln_w: f64) -> f64 {
        match which {
            Potential::F => self.f.ln_eval_exp(ln_w),
            Potential::Fm => self.ln_minorant_at_ln(ln_w),
            Potential::FM => self.ln_majorant_at_ln(ln_w),
        }
    }

    fn bounds(&self, which: Potential) -> (f64, f64) {
        match which {
            Potential::F => (0.0, f64::INFINITY),
            Potential::Fm => (self.v1, f64::INFINITY),
            Potential::FM => (0.0, self.m_star),
        }
    }

    /// `ln ∫_a^b dw/env(w)` in the variable `x = ln(w − lo)`.
    fn ln_segment(&self, which: Potential, lo: f64, a: f64, b: f64) -> f64 {
        let h = |x: f64| {
            let w = lo + x.exp();
            x - self.ln_env(which, w.ln())
        };
        let q = log_integral(h, (a - lo).ln(), (b - lo).ln(), &self.cfg.tail.quad);
        q.ln_value
    }

    /// Same integral in the variable `y = ln(hi − w)`, for segments next to a finite `hi`.
    fn ln_segment_upper(&self, which: Potential, hi: f64, a: f64, b: f64) -> f64 {
        self.ln_segment_upper_y(which, hi, (hi - b).ln(), (hi - a).ln())
    }

    fn ln_segment_upper_y(&self, which: Potential, hi: f64, ya: f64, yb: f64) -> f64 {
        let h = |y: f64| {
            let w = hi - y.exp();
            y - self.ln_env(which, w.ln())
        };
        log_integral(h, ya, yb, &self.cfg.tail.quad).ln_value
    }

    /// `ln ∫_a^{hi} dw/env(w)`, the last `2^-140` of `hi − a` treated as negligible.
    fn ln_segment_to_hi(&self, which: Potential, hi: f64, a: f64) -> f64 {
        let yb = (hi - a).ln();
        self.ln_segment_upper_y(which, hi, yb - 140.0 * std::f64::consts::LN_2, yb)
    }

    fn build_anchors(&self, which: Potential) -> Result<Anchors> {
        let (lo, hi) = self.bounds(which);
        if which == Potential::Fm && !self.osgood.is_convergent() {
            return Err(Error::DivergentTail(format!(
                "∫ ds/f_m diverges at infinity (Osgood verdict {}); F_m is undefined",
                self.osgood.label
            )));
        }
        let mut points = Vec::new();
        // Segment contributions, `ln` of ∫ over [points[i], points[i+1]].
        let mut segs = Vec::new();
        let ln_tail_above;
        if hi.is_infinite() {
            if which != Potential::Fm {
                let v = classify_tail(
                    |s: f64| -self.ln_env(which, (lo + s).ln()),
                    1.0,
                    &doubling_horizons(1.0, 40),
                    &self.cfg.tail,
                );
                if !v.is_convergent() {
                    return Err(Error::DivergentTail(format!(
                        "∫ dw/{} diverges at infinity ({}); check the Osgood condition first",
                        if which == Potential::F { "f" } else { "f_M" },
                        v.label
                    )));
                }
            }
            for j in -60..=60 {
                points.push(lo + 2f64.powi(j));
            }
            for w in points.windows(2) {
                segs.push(self.ln_segment(which, lo, w[0], w[1]));
            }
            // Power-law tail beyond the last anchor.
            let a = *points.last().unwrap();
            let (x1, x2) = ((a / 2.0 - lo).ln(), (a - lo).ln());
            let (g1, g2) = (-self.ln_env(which, (lo + x1.exp()).ln()), -self.ln_env(which, (lo + x2.exp()).ln()));
            let q = -(g2 - g1) / (x2 - x1);
            ln_tail_above = if g2 == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else if q > 1.0 {
                g2 + (a - lo).ln() - (q - 1.0).ln()
            } else {
                return Err(Error::DivergentTail(format!("{} tail decays no faster than 1/w", which.name())));
            };
        } else {
            let mid = 0.5 * (lo + hi);
            for j in (0..=60).rev() {
                points.push(lo + (mid - lo) * 2f64.powi(-j));
            }
            // Stop before the gap to hi falls to a few ulps.
            let j_max = ((hi - mid) / (hi.abs() * 2f64.powi(-44))).log2().floor().clamp(0.0, 60.0) as i32;
            for j in 1..=j_max {
                points.push(hi - (hi - mid) * 2f64.powi(-j));
            }
            for (i, w) in points.windows(2).enumerate() {
                if i < 60 {
                    segs.push(self.ln_segment(which, lo, w[0], w[1]));
                } else {
                    segs.push(self.ln_segment_upper(which, hi, w[0], w[1]));
                }
            }
            let last = *points.last().unwrap();
            ln_tail_above = self.ln_segment_to_hi(which, hi, last);
        }
        if segs.iter().any(|s| s.is_nan()) || ln_tail_above.is_nan() {
            return Err(Error::InvalidFunction(format!("{} integrand not evaluable", which.name())));
        }
        let mut ln_g = vec![0.0; points.len()];
        let mut acc = ln_tail_above;
        ln_g[points.len() - 1] = acc;
        for i in (0..points.len() - 1).rev() {
            acc = ln_add(acc, segs[i]);
            ln_g[i] = acc;
        }
        // Behavior at lo+: classify ∫ over y = -ln(w - lo) ∈ [y0, ∞).
        let y0 = -(points[0] - lo).ln();
        let v = classify_tail(
            |y: f64| -y - self.ln_env(which, (lo + (-y).exp()).ln()),
            y0,
            &doubling_horizons(y0, 12),
            &self.cfg.tail,
        );
        let top = match v.label {
            Label::Convergent => ln_add(ln_g[0], v.value.unwrap_or(0.0).ln()).exp(),
            _ => f64::INFINITY,
        };
        Ok(Anchors { lo, hi, points, ln_g, top })
    }

    fn anchors(&self, which: Potential) -> Result<&Anchors> {
        self.anchors[which.index()].get_or_init(|| self.build_anchors(which)).as_ref().map_err(Clone::clone)
    }

    /// `ln G(v)` for the chosen potential.
    pub fn ln_potential(&self, which: Potential, v: f64) -> Result<f64> {
        let an = self.anchors(which)?;
        if !(v > an.lo && v < an.hi) {
            return Err(Error::OutOfDomain(format!(
                "{} is defined on ({}, {}), got v = {v}",
                which.name(),
                an.lo,
                an.hi
            )));
        }
        let i = an.points.partition_point(|&p| p <= v);
        if i == an.points.len() {
            // Above the last anchor.
            if an.hi.is_infinite() {
                let ln_seg = self.ln_segment(which, an.lo, an.points[i - 1], v);
                return Ok(crate::quadrature::ln_sub(an.ln_g[i - 1], ln_seg));
            }
            return Ok(self.ln_segment_to_hi(which, an.hi, v));
        }
        let next = an.points[i];
        let use_upper = an.hi.is_finite() && i > 60;
        let seg = if use_upper {
            self.ln_segment_upper(which, an.hi, v, next)
        } else {
            self.ln_segment(which, an.lo, v, next)
        };
        Ok(ln_add(an.ln_g[i], seg))
    }

    /// `ln G(e^{ln_v})` for potentials with `lo = 0`, valid for arguments below `f64` range.
    pub fn ln_potential_at_ln(&self, which: Potential, ln_v: f64) -> Result<f64> {
        let an = self.anchors(which)?;
        if an.lo != 0.0 || ln_v > -40.0 {
            return self.ln_potential(which, ln_v.exp());
        }
        let x0 = an.points[0].ln();
        let h = |x: f64| x - self.ln_env(which, x);
        let seg = log_integral(h, ln_v, x0, &self.cfg.tail.quad).ln_value;
        Ok(ln_add(an.ln_g[0], seg))
    }

    /// `F(v)`, `F_m(v)` or `F_M(v)`.
    pub fn potential(&self, which: Potential, v: f64) -> Result<f64> {
        Ok(self.ln_potential(which, v)?.exp())
    }

    /// `lim_{v→lo+} G(v)`: `v_inf` for `F_m`, possibly `+inf`.
    pub fn potential_top(&self, which: Potential) -> Result<f64> {
        Ok(self.anchors(which)?.top)
    }

    /// Limit of `F_m` at `v1`; `+inf` when it diverges or `F_m` is undefined.
    pub fn v_inf(&self) -> f64 {
        *self.v_inf.get_or_init(|| self.potential_top(Potential::Fm).unwrap_or(f64::INFINITY))
    }

    /// Solves `G(v) = w` by safeguarded Newton iteration in `x = ln(v − lo)`.
    pub fn invert_potential(&self, which: Potential, w: f64) -> Result<f64> {
        let an = self.anchors(which)?;
        if !(w > 0.0 && w < an.top) {
            return Err(Error::OutOfDomain(format!(
                "{}^-1 accepts w in (0, {}), got {w}",
                which.name(),
                an.top
            )));
        }
        let lw = w.ln();
        let lo = an.lo;
        // Bracket [a, b] in v with G(a) ≥ w ≥ G(b).
        let (mut a, mut b);
        let idx = an.ln_g.iter().position(|&g| g <= lw);
        match idx {
            Some(0) => {
                b = an.points[0];
                a = lo + (b - lo) * 0.5;
                let mut k = 0;
                while self.ln_potential(which, a)? < lw {
                    b = a;
                    a = lo + (a - lo) * 0.5;
                    k += 1;
                    if k > 2000 || a <= lo {
                        return Err(Error::OutOfDomain(format!("{}^-1: could not bracket w = {w}", which.name())));
                    }
                }
            }
            Some(i) => {
                a = an.points[i - 1];
                b = an.points[i];
            }
            None => {
                a = *an.points.last().unwrap();
                if an.hi.is_finite() {
                    b = an.hi;
                } else {
                    b = lo + (a - lo) * 2.0;
                    let mut k = 0;
                    while self.ln_potential(which, b)? > lw {
                        a = b;
                        b = lo + (b - lo) * 2.0;
                        k += 1;
                        if k > 2000 || !b.is_finite() {
                            return Err(Error::OutOfDomain(format!("{}^-1: could not bracket w = {w}", which.name())));
                        }
                    }
                }
            }
        }
        let to_x = |v: f64| (v - lo).ln();
        let (mut xa, mut xb) = (to_x(a), to_x(b));
        let mut x = 0.5 * (xa + xb);
        for _ in 0..200 {
            let v = lo + x.exp();
            if !(v > lo && v < an.hi) {
                x = 0.5 * (xa + xb);
                continue;
            }
            let lg = self.ln_potential(which, v)?;
            let r = lg - lw;
            if r.abs() <= 1e-13 {
                return Ok(v);
            }
            if r > 0.0 {
                xa = x;
            } else {
                xb = x;
            }
            // d ln G / dx = -(v - lo) / (env(v) G(v))
            let dl = -((v - lo).ln() - self.ln_env(which, v.ln()) - lg).exp();
            let mut xn = x - r / dl;
            if !(xn > xa && xn < xb) || !xn.is_finite() {
                xn = 0.5 * (xa + xb);
            }
            if (xn - x).abs() <= 1e-15 * x.abs().max(1.0) && (xb - xa).abs() <= 1e-12 * x.abs().max(1.0) {
                return Ok(lo + xn.exp());
            }
            x = xn;
        }
        Ok(lo + x.exp())
    }

    /// `ln ∫_a^b ds / env(s)` for `0 < a < b`, integrated in `ln s`.
    pub fn ln_partial_integral(&self, which: Potential, a: f64, b: f64) -> f64 {
        self.ln_partial_integral_ln(which, a.ln(), b.ln())
    }

    pub fn ln_partial_integral_ln(&self, which: Potential, ln_a: f64, ln_b: f64) -> f64 {
        let h = |x: f64| x - self.ln_env(which, x);
        log_integral(h, ln_a, ln_b, &self.cfg.tail.quad).ln_value
    }

    /// Estimates `γ1 = inf` and `γ2 = sup` of `f(αu)/(f(α)f(u))` over the α-grid
    /// and `u ∈ [1e-8, U_max]` for `U_max = 10, …, 1e8`. A bound that keeps
    /// shrinking (growing) by at least ×2 per decade over the last three ranges
    /// is reported as 0 (∞).
    pub fn quasi_mult_constants(&self) -> QuasiMult {
        let per_decade = 20;
        let ln_u_lo = 1e-8f64.ln();
        let decades = 16;
        let ln10 = std::f64::consts::LN_10;
        let ln_us: Vec<f64> =
            (0..=decades * per_decade).map(|i| ln_u_lo + ln10 * i as f64 / per_decade as f64).collect();
        let stride = 4;
        let mut trend = Vec::new();
        let (mut lmin, mut lmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut notes = Vec::new();
        let mut degenerate = 0usize;
        let mut next_mark = 9 * per_decade; // u = 10
        for (iu, &lu) in ln_us.iter().enumerate() {
            let lfu = self.f.ln_eval_exp(lu);
            for (la, lfa) in self.ln_alpha.iter().zip(&self.ln_f_alpha).step_by(stride) {
                let r = self.f.ln_eval_exp(la + lu) - lfa - lfu;
                if r.is_finite() {
                    lmin = lmin.min(r);
                    lmax = lmax.max(r);
                } else {
                    degenerate += 1;
                }
            }
            if iu == next_mark {
                trend.push((lu.exp(), lmin.exp(), lmax.exp()));
                next_mark += per_decade;
            }
        }
        if degenerate > 0 {
            notes.push(format!("{degenerate} grid ratios were not finite and were skipped"));
        }
        let n = trend.len();
        let shrinking = (n - 3..n).all(|i| trend[i].1 <= 0.5 * trend[i - 1].1);
        let growing = (n - 3..n).all(|i| trend[i].2 >= 2.0 * trend[i - 1].2);
        let gamma1 = if shrinking {
            notes.push("inf keeps shrinking with U_max: gamma1 -> 0".into());
            0.0
        } else {
            trend[n - 1].1
        };
        let gamma2 = if growing {
            notes.push("sup keeps growing with U_max: gamma2 -> inf".into());
            f64::INFINITY
        } else {
            trend[n - 1].2
        };
        QuasiMult { gamma1, gamma2, quasi_multiplicative: gamma1 > 0.0 && gamma2.is_finite(), trend, notes }
    }

    pub fn summary(&self) -> ProfileSummary {
        let v_inf = self.v_inf();
        ProfileSummary {
            f: self.f.describe(),
            family: self.f.family().into(),
            alpha_points: self.cfg.alpha_points,
            v1: self.v1,
            m_star: self.m_star.is_finite().then_some(self.m_star),
            v_inf: v_inf.is_finite().then_some(v_inf),
            osgood: self.osgood.label,
            osgood_value: self.osgood.value,
            osgood_flag: self.osgood_flag.clone(),
        }
    }
}
