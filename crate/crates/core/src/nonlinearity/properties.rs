//! Checks of the structural properties every admissible minorant/majorant
//! pair satisfies, evaluated on sampled grids.

use serde::{Deserialize, Serialize};

use super::profile::{NonlinearityProfile, Potential};
use crate::quadrature::ln_sub;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub status: CheckStatus,
    /// Largest violation found (in the units stated by `detail`), 0 when none.
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub f: String,
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    /// No check failed (skipped checks are allowed).
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyConfig {
    /// Samples for `u`, log-spaced over `[u_min, u_max]`.
    pub u_min: f64,
    pub u_max: f64,
    pub per_decade: usize,
    /// Smallest `α` of the reciprocal check.
    pub alpha_min: f64,
    /// Relative tolerance of the inequality checks.
    pub tol: f64,
    pub normalization_tol: f64,
    pub round_trip_tol: f64,
    pub etas: Vec<f64>,
}

impl Default for PropertyConfig {
    fn default() -> Self {
        Self {
            u_min: 1e-6,
            u_max: 1e6,
            per_decade: 10,
            alpha_min: 1e-6,
            tol: 1e-9,
            normalization_tol: 1e-8,
            round_trip_tol: 1e-8,
            etas: vec![1.0, 2.0, 10.0],
        }
    }
}

fn log_samples(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).round() as usize;
    (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect()
}

fn check(name: &str, worst: f64, tol: f64, detail: String) -> PropertyCheck {
    let status = if worst <= tol { CheckStatus::Pass } else { CheckStatus::Fail };
    PropertyCheck { name: name.into(), status, worst, detail }
}

fn skipped(name: &str, why: &str) -> PropertyCheck {
    PropertyCheck { name: name.into(), status: CheckStatus::Skipped, worst: 0.0, detail: why.into() }
}

/// `max(a − b, 0)` for log values, with `+∞ ≤ +∞` accepted.
fn ln_excess(a: f64, b: f64) -> f64 {
    if b == f64::INFINITY || a == f64::NEG_INFINITY {
        0.0
    } else {
        (a - b).max(0.0)
    }
}

pub fn verify_properties(profile: &NonlinearityProfile, cfg: &PropertyConfig) -> PropertyReport {
    let f = profile.function();
    let ln_f1 = f.ln_eval(1.0);
    let us = log_samples(cfg.u_min, cfg.u_max, cfg.per_decade);
    let mut checks = Vec::new();

    // Ordering of the tables.
    let worst = us
        .iter()
        .map(|&u| ln_excess(profile.ln_minorant_at_ln(u.ln()), profile.ln_majorant_at_ln(u.ln())))
        .fold(0.0, f64::max);
    checks.push(check("ordering", worst, cfg.tol, "max ln(f_m/f_M), u sampled".into()));

    // (i) f_m(u) ≤ f(u)/f(1) ≤ f_M(u).
    let worst = us
        .iter()
        .map(|&u| {
            let x = u.ln();
            let mid = f.ln_eval_exp(x) - ln_f1;
            ln_excess(profile.ln_minorant_at_ln(x), mid).max(ln_excess(mid, profile.ln_majorant_at_ln(x)))
        })
        .fold(0.0, f64::max);
    checks.push(check("(i) sandwich", worst, cfg.tol, "max log-excess of f_m ≤ f/f(1) ≤ f_M".into()));

    // (ii) f_m(1/α) ≤ f(1)/f(α) ≤ f_M(1/α).
    let alphas = log_samples(cfg.alpha_min, 1.0, cfg.per_decade);
    let worst = alphas
        .iter()
        .map(|&a| {
            let x = -a.ln();
            let mid = ln_f1 - f.ln_eval(a);
            ln_excess(profile.ln_minorant_at_ln(x), mid).max(ln_excess(mid, profile.ln_majorant_at_ln(x)))
        })
        .fold(0.0, f64::max);
    checks.push(check("(ii) reciprocal sandwich", worst, cfg.tol, "max log-excess over α".into()));

    // (iii) f_m(1) = f_M(1) = 1.
    let worst = (profile.minorant(1.0) - 1.0).abs().max((profile.majorant(1.0) - 1.0).abs());
    checks.push(check("(iii) normalization", worst, cfg.normalization_tol, "max |f_m(1) − 1|, |f_M(1) − 1|".into()));

    // (iv) f_m(u)/u and f_M(u)/u nondecreasing on (0, 1).
    let below: Vec<f64> = us.iter().copied().filter(|&u| u < 1.0).collect();
    let drop = |env: &dyn Fn(f64) -> f64| -> f64 {
        let r: Vec<f64> = below.iter().map(|&u| env(u.ln()) - u.ln()).collect();
        r.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max)
    };
    let worst = drop(&|x| profile.ln_minorant_at_ln(x)).max(drop(&|x| profile.ln_majorant_at_ln(x)));
    checks.push(check("(iv) monotone ratios", worst, cfg.tol, "largest decrease of ln(env(u)/u) on (0,1)".into()));

    // (v) f_m(u) ≤ u and f_M(u) ≤ u on (0, 1], gated on convexity.
    if f.is_convex() {
        let worst = below
            .iter()
            .chain(std::iter::once(&1.0))
            .map(|&u| {
                let x = u.ln();
                ln_excess(profile.ln_minorant_at_ln(x), x).max(ln_excess(profile.ln_majorant_at_ln(x), x))
            })
            .fold(0.0, f64::max);
        checks.push(check("(v) sub-identity", worst, cfg.tol, "max log-excess of env(u) over u on (0,1]".into()));
    } else {
        checks.push(skipped("(v) sub-identity", "f is not convex on the sampled range"));
    }

    // (vi) ∫_η^∞ 1/f_M ≤ f(1) ∫_η^∞ 1/f ≤ ∫_η^∞ 1/f_m.
    let tail = |which: Potential, eta: f64| -> f64 {
        if which == Potential::FM && eta >= profile.m_star {
            return 0.0;
        }
        profile.potential(which, eta).unwrap_or(f64::INFINITY)
    };
    let f1 = ln_f1.exp();
    let mut worst = 0.0_f64;
    let mut evaluated = 0;
    let mut notes = Vec::new();
    for &eta in &cfg.etas {
        let (a, b, c) = (tail(Potential::FM, eta), f1 * tail(Potential::F, eta), tail(Potential::Fm, eta));
        if a.is_infinite() && b.is_infinite() && c.is_infinite() {
            notes.push(format!("η = {eta}: all three diverge"));
            continue;
        }
        evaluated += 1;
        let rel = |x: f64, y: f64| if y.is_infinite() { 0.0 } else { ((x - y) / y.abs().max(f64::MIN_POSITIVE)).max(0.0) };
        worst = worst.max(rel(a, b)).max(rel(b, c));
    }
    if evaluated == 0 {
        checks.push(skipped("(vi) integral ordering", "no convergent tail integral at the sampled η"));
    } else {
        let mut detail = "max relative excess over η".to_string();
        for n in notes {
            detail.push_str("; ");
            detail.push_str(&n);
        }
        checks.push(check("(vi) integral ordering", worst, 1e-8, detail));
    }

    // (vii) ∫_δ^1 ds/g → ∞ as δ → 0 for g ∈ {f_m, f, f_M}.
    let decades: Vec<f64> = (1..=300).step_by(1).map(|k| -(k as f64) * std::f64::consts::LN_10).collect();
    let mut failures = Vec::new();
    for which in [Potential::Fm, Potential::F, Potential::FM] {
        let picks = [decades[99], decades[199], decades[296], decades[297], decades[298], decades[299]];
        let ln_i: Vec<f64> = picks.iter().map(|&x| profile.ln_partial_integral_ln(which, x, 0.0)).collect();
        let ln_inc: Vec<f64> = ln_i[2..].windows(2).map(|w| ln_sub(w[1], w[0])).collect();
        let increasing = ln_i.windows(2).all(|w| w[1] > w[0]);
        let sustained = ln_inc.iter().all(|d| d.is_finite()) && ln_inc[2] >= ln_inc[0] + 0.9f64.ln();
        let big = ln_i[5] > 100f64.ln();
        if !(increasing && sustained && big) {
            failures.push(format!("{} (ln ∫_δ^1 at δ = 1e-300 is {:.3e})", which.name(), ln_i[5]));
        }
    }
    let detail =
        if failures.is_empty() { "partials grow without settling down to δ = 1e-300".to_string() } else { failures.join(", ") };
    checks.push(check("(vii) divergence at zero", failures.len() as f64, 0.0, detail));

    // Potential/inverse round trips.
    let mut worst = 0.0_f64;
    let mut detail = Vec::new();
    for which in [Potential::F, Potential::Fm, Potential::FM] {
        let (lo, hi) = match which {
            Potential::Fm => (profile.v1.max(1e-3) * 2.0, 1e3),
            Potential::FM => (1e-3, 1e3f64.min(0.9 * profile.m_star)),
            Potential::F => (1e-3, 1e3),
        };
        if profile.potential(which, 0.5 * (lo + hi)).is_err() {
            detail.push(format!("{} undefined", which.name()));
            continue;
        }
        for v in log_samples(lo, hi, 4) {
            let Ok(w) = profile.potential(which, v) else { continue };
            if !(w > 0.0 && w.is_finite()) {
                continue;
            }
            let err = match profile.invert_potential(which, w) {
                Ok(back) => ((back - v) / v).abs(),
                Err(_) => f64::INFINITY,
            };
            worst = worst.max(err);
        }
    }
    let mut d = "max relative error of G⁻¹(G(v))".to_string();
    if !detail.is_empty() {
        d.push_str("; ");
        d.push_str(&detail.join(", "));
    }
    checks.push(check("round trip", worst, cfg.round_trip_tol, d));

    // Corollary sandwich F(1)/γ2 ≤ F(z) f(z)/z ≤ F(1)/γ1 for quasi-multiplicative f.
    let qm = profile.quasi_mult_constants();
    match profile.potential(Potential::F, 1.0) {
        Ok(big_f1) if qm.quasi_multiplicative => {
            let zs = log_samples(1e-3, 1e3, 4);
            let worst = zs
                .iter()
                .filter_map(|&z| {
                    let ln_mid = profile.ln_potential(Potential::F, z).ok()? + f.ln_eval(z) - z.ln();
                    let lo = big_f1.ln() - qm.gamma2.ln();
                    let hi = big_f1.ln() - qm.gamma1.ln();
                    Some(ln_excess(lo, ln_mid).max(ln_excess(ln_mid, hi)))
                })
                .fold(0.0, f64::max);
            checks.push(check("corollary sandwich", worst, 1e-8, "max log-excess of F(z) f(z)/z outside [F(1)/γ2, F(1)/γ1]".into()));
        }
        Ok(_) => checks.push(skipped("corollary sandwich", "f is not quasi-multiplicative")),
        Err(_) => checks.push(skipped("corollary sandwich", "F is undefined (Osgood fails for f)")),
    }

    PropertyReport { f: f.describe(), checks }
}
