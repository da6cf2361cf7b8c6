//! Divergence classification of improper integrals `∫_a^∞ g`.
//!
//! Partial integrals are taken on a geometric horizon schedule. The decay of
//! the window integrals over the last three windows gives a tail estimate
//! that is added to each partial before checking that the last three agree.
//! A power-law exponent fitted to `ln g` itself is kept as evidence. Divergence needs
//! sustained growth across the last few doublings with a tail no steeper
//! than `1/t` (which covers the logarithmic case), or partials beyond the
//! overflow bound.

use serde::{Deserialize, Serialize};

use crate::quadrature::{ln_add, log_integral, QuadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Divergent,
    Convergent,
    Inconclusive,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Divergent => "Divergent",
            Label::Convergent => "Convergent",
            Label::Inconclusive => "Inconclusive",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-ε outcome when a criterion is evaluated over an ε schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsOutcome {
    pub eps: f64,
    pub label: Label,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub horizons: Vec<f64>,
    pub partials: Vec<f64>,
    pub ln_partials: Vec<f64>,
    /// Fitted decay exponent `q` of the integrand, `g(t) ~ t^{-q}`, at the last horizon.
    pub tail_exponent: Option<f64>,
    pub eps: Option<f64>,
    pub eps_schedule: Vec<f64>,
    pub per_eps: Vec<EpsOutcome>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub value: Option<f64>,
    pub evidence: Evidence,
}

impl Verdict {
    pub fn inconclusive(note: impl Into<String>) -> Self {
        Verdict {
            label: Label::Inconclusive,
            value: None,
            evidence: Evidence { notes: vec![note.into()], ..Default::default() },
        }
    }

    pub fn is_divergent(&self) -> bool {
        self.label == Label::Divergent
    }

    pub fn is_convergent(&self) -> bool {
        self.label == Label::Convergent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailConfig {
    /// Relative agreement required of the last three tail-corrected partials.
    pub conv_rel_tol: f64,
    /// Minimum relative growth per doubling for a divergence call.
    pub growth: f64,
    /// Number of trailing doublings that must all show growth.
    pub lookback: usize,
    /// Partial integrals beyond `e^{ln_bound}` count as divergent.
    pub ln_bound: f64,
    /// Slack around the critical decay exponent 1.
    pub slope_margin: f64,
    pub quad: QuadConfig,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            conv_rel_tol: 1e-6,
            growth: 1e-3,
            lookback: 4,
            ln_bound: 1e300f64.ln(),
            slope_margin: 1e-2,
            quad: QuadConfig::default(),
        }
    }
}

/// `T_j = base·2^j` for `j = 1..=count` (the integration starts at `base`).
pub fn doubling_horizons(base: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|j| base * 2f64.powi(j as i32)).collect()
}

/// Horizons `2^j, j = 0..=20` used by the criterion integrals on `[0, ∞)`.
pub fn default_time_horizons() -> Vec<f64> {
    (0..=20).map(|j| 2f64.powi(j)).collect()
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Classifies `∫_lower^∞ exp(ln_g(t)) dt` from partial integrals up to each horizon.
///
/// `horizons` must be increasing, positive, and above `lower`.
pub fn classify_tail<H: Fn(f64) -> f64>(ln_g: H, lower: f64, horizons: &[f64], cfg: &TailConfig) -> Verdict {
    assert!(horizons.len() >= 3, "need at least three horizons");
    let mut ln_partials = Vec::with_capacity(horizons.len());
    let mut ln_windows = Vec::with_capacity(horizons.len());
    let mut notes = Vec::new();
    let mut acc = f64::NEG_INFINITY;
    let mut prev = lower;
    for &t in horizons {
        let q = log_integral(&ln_g, prev, t, &cfg.quad);
        if q.ln_value.is_nan() {
            return Verdict {
                label: Label::Inconclusive,
                value: None,
                evidence: Evidence {
                    horizons: horizons.to_vec(),
                    notes: vec![format!("integrand not evaluable on [{prev}, {t}]")],
                    ..Default::default()
                },
            };
        }
        if !q.converged {
            notes.push(format!("quadrature did not converge on [{prev}, {t}]"));
        }
        acc = ln_add(acc, q.ln_value);
        ln_partials.push(acc);
        ln_windows.push(q.ln_value);
        prev = t;
    }
    let ln_g_at: Vec<f64> = horizons.iter().map(|&t| ln_g(t)).collect();
    let n = horizons.len();

    // Decay exponent q_j from the three horizons ending at j.
    let exponent_at = |j: usize| -> Option<f64> {
        if j < 2 {
            return None;
        }
        let ys = &ln_g_at[j - 2..=j];
        if ys.iter().any(|y| y.is_nan()) {
            return None;
        }
        if ys[2] == f64::NEG_INFINITY {
            return Some(f64::INFINITY);
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return None;
        }
        let xs: Vec<f64> = horizons[j - 2..=j].iter().map(|t| t.ln()).collect();
        Some(-least_squares_slope(&xs, ys))
    };
    let tail_exponent = exponent_at(n - 1);

    let evidence = |notes: Vec<String>| Evidence {
        horizons: horizons.to_vec(),
        partials: ln_partials.iter().map(|l| l.exp()).collect(),
        ln_partials: ln_partials.clone(),
        tail_exponent,
        notes,
        ..Default::default()
    };

    let last = ln_partials[n - 1];
    if last == f64::NEG_INFINITY {
        return Verdict { label: Label::Convergent, value: Some(0.0), evidence: evidence(notes) };
    }
    let increments: Vec<f64> = ln_partials.windows(2).map(|w| w[1] - w[0]).collect();
    if last == f64::INFINITY || (last > cfg.ln_bound && increments.last().is_some_and(|d| *d > 0.0)) {
        notes.push("partial integrals exceeded the overflow bound".into());
        return Verdict { label: Label::Divergent, value: None, evidence: evidence(notes) };
    }

    // Tail-corrected partials for the last three horizons. The window
    // integrals of a power-law tail shrink by a constant ratio r = 2^{1-q}
    // per doubling; r is fitted over three consecutive windows and the
    // remaining geometric series is added.
    let r_cap = (-cfg.slope_margin * std::f64::consts::LN_2).exp();
    let corrected: Vec<Option<f64>> = (n - 3..n)
        .map(|j| {
            if j < 2 {
                return None;
            }
            let w = &ln_windows[j - 2..=j];
            if w[2] == f64::NEG_INFINITY {
                return Some(ln_partials[j]);
            }
            if w.iter().any(|x| !x.is_finite()) {
                return None;
            }
            let ln_r = (w[2] - w[0]) / 2.0;
            let r = ln_r.exp();
            if r >= r_cap {
                return None;
            }
            let ln_tail = w[2] + ln_r - (-r).ln_1p();
            Some(ln_add(ln_partials[j], ln_tail))
        })
        .collect();
    if corrected.iter().all(Option::is_some) {
        let c: Vec<f64> = corrected.into_iter().flatten().collect();
        let spread = c.iter().fold(0.0_f64, |m, x| m.max((x - c[2]).abs()));
        if spread <= cfg.conv_rel_tol {
            return Verdict { label: Label::Convergent, value: Some(c[2].exp()), evidence: evidence(notes) };
        }
    }

    let k = cfg.lookback.min(increments.len());
    let growing = increments[increments.len() - k..].iter().all(|d| *d >= cfg.growth.ln_1p());
    let heavy_tail = tail_exponent.is_some_and(|q| q <= 1.0 + cfg.slope_margin);
    if growing && heavy_tail {
        if tail_exponent.is_some_and(|q| (q - 1.0).abs() <= cfg.slope_margin) {
            notes.push("logarithmic divergence (integrand ~ 1/t)".into());
        }
        return Verdict { label: Label::Divergent, value: None, evidence: evidence(notes) };
    }
    notes.push("partials neither settled nor grew consistently".into());
    Verdict { label: Label::Inconclusive, value: None, evidence: evidence(notes) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn power_tail(q: f64) -> Verdict {
        classify_tail(|t| -q * (t + 1.0).ln(), 0.0, &default_time_horizons(), &TailConfig::default())
    }

    #[test]
    fn inverse_square_converges_to_one() {
        let v = power_tail(2.0);
        assert_eq!(v.label, Label::Convergent);
        assert_relative_eq!(v.value.unwrap(), 1.0, max_relative = 1e-6);
    }

    #[test]
    fn harmonic_tail_is_divergent() {
        assert_eq!(power_tail(1.0).label, Label::Divergent);
        assert_eq!(power_tail(0.5).label, Label::Divergent);
    }

    #[test]
    fn power_tail_converges_with_correction() {
        // ∫_0^∞ (t+1)^{-1.5} dt = 2
        let v = power_tail(1.5);
        assert_eq!(v.label, Label::Convergent);
        assert_relative_eq!(v.value.unwrap(), 2.0, max_relative = 1e-7);
    }

    #[test]
    fn slow_power_tail_needs_a_longer_schedule() {
        // ∫_0^∞ (t+1)^{-1.25} dt = 4; the +1 shift spoils the geometric
        // window ratio too much at 2^20 but not at 2^40.
        let ln_g = |t: f64| -1.25 * (t + 1.0).ln();
        let short = classify_tail(ln_g, 0.0, &default_time_horizons(), &TailConfig::default());
        assert_eq!(short.label, Label::Inconclusive);
        let long = classify_tail(ln_g, 0.0, &doubling_horizons(0.5, 41), &TailConfig::default());
        assert_eq!(long.label, Label::Convergent);
        assert_relative_eq!(long.value.unwrap(), 4.0, max_relative = 1e-8);
    }

    #[test]
    fn exponential_growth_hits_the_bound() {
        let v = classify_tail(|t| 5.0 * t, 0.0, &default_time_horizons(), &TailConfig::default());
        assert_eq!(v.label, Label::Divergent);
    }

    #[test]
    fn zero_integrand_converges_to_zero() {
        let v = classify_tail(|_| f64::NEG_INFINITY, 0.0, &default_time_horizons(), &TailConfig::default());
        assert_eq!(v.label, Label::Convergent);
        assert_eq!(v.value, Some(0.0));
    }

    #[test]
    fn osgood_style_schedule_from_one() {
        let v = classify_tail(|s: f64| -2.0 * s.ln(), 1.0, &doubling_horizons(1.0, 40), &TailConfig::default());
        assert_eq!(v.label, Label::Convergent);
        assert_relative_eq!(v.value.unwrap(), 1.0, max_relative = 1e-9);
    }
}
