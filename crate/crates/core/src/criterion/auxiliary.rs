//! Sufficient conditions from earlier work, evaluated for comparison:
//! Meier's pair (C1)/(C2) for `f = u^p`, the potential form of the criterion
//! for quasi-multiplicative `f`, and the two Loayza–Paixão conditions.

use serde::{Deserialize, Serialize};

use super::{classify_trace, CriterionConfig};
use crate::error::{Error, Result};
use crate::nonlinearity::{NonlinearityProfile, Potential, ScalarFunction};
use crate::quadrature::{ln_add, log_integral};
use crate::semigroup::DecayTrace;
use crate::verdict::{classify_tail, Label, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    /// `None` when the numerical evidence is inconclusive.
    pub holds: Option<bool>,
    pub verdict: Option<Verdict>,
    /// C1 only: running maximum of `ln[e^{−(p−1)λ0 T}∫_0^T ψ]` per horizon.
    pub ln_running_max: Vec<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lp1Result {
    pub holds: bool,
    /// First scanned τ with `F(‖S(τ)w0‖) ≤ ∫_0^τ ψ`, refined by bisection.
    pub tau: Option<f64>,
    /// Smallest `ln F(‖S(τ)w0‖) − ln ∫_0^τ ψ` seen on the scan.
    pub min_ln_gap: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxReport {
    pub c1: Option<ConditionResult>,
    pub c2: Option<ConditionResult>,
    pub corollary_f: Option<Verdict>,
    pub lp1: Option<Lp1Result>,
    pub lp2: Option<ConditionResult>,
    /// `(condition, reason)` for checks whose prerequisites were missing.
    pub skipped: Vec<(String, String)>,
}

fn need_p(p: Option<f64>) -> Result<f64> {
    p.ok_or_else(|| Error::MissingParameter("C1/C2 need a power-law f = u^p".into()))
}

/// (C1): `limsup_{T→∞} e^{−(p−1)λ0 T} ∫_0^T ψ = ∞`, estimated by the running
/// maximum over the horizon schedule; holds when it keeps growing across the
/// last doublings.
pub fn c1(psi: &ScalarFunction, p: Option<f64>, lambda0: f64, cfg: &CriterionConfig) -> Result<ConditionResult> {
    let p = need_p(p)?;
    let rate = (p - 1.0) * lambda0;
    let mut acc = f64::NEG_INFINITY;
    let mut prev = 0.0;
    let mut running = f64::NEG_INFINITY;
    let mut ln_running_max = Vec::new();
    for &t in &cfg.horizons {
        let q = log_integral(|s| psi.ln_eval(s), prev, t, &cfg.tail.quad);
        if q.ln_value.is_nan() {
            return Ok(ConditionResult {
                holds: None,
                verdict: None,
                ln_running_max,
                notes: vec![format!("ψ not integrable on [{prev}, {t}]")],
            });
        }
        acc = ln_add(acc, q.ln_value);
        running = running.max(acc - rate * t);
        ln_running_max.push(running);
        prev = t;
    }
    let k = cfg.tail.lookback.min(ln_running_max.len() - 1);
    let n = ln_running_max.len();
    let grows = (n - k..n).all(|i| ln_running_max[i] - ln_running_max[i - 1] >= cfg.tail.growth.ln_1p());
    let holds = grows || running == f64::INFINITY;
    Ok(ConditionResult { holds: Some(holds), verdict: None, ln_running_max, notes: Vec::new() })
}

/// (C2): `∫_0^∞ ψ(t) e^{−(p−1)λ0 t} dt < ∞`.
pub fn c2(psi: &ScalarFunction, p: Option<f64>, lambda0: f64, cfg: &CriterionConfig) -> Result<ConditionResult> {
    let p = need_p(p)?;
    let rate = (p - 1.0) * lambda0;
    let v = classify_tail(|t| psi.ln_eval(t) - rate * t, 0.0, &cfg.horizons, &cfg.tail);
    let holds = match v.label {
        Label::Convergent => Some(true),
        Label::Divergent => Some(false),
        Label::Inconclusive => None,
    };
    Ok(ConditionResult { holds, verdict: Some(v), ln_running_max: Vec::new(), notes: Vec::new() })
}

/// `∫_0^∞ ψ(t) / F(e^{−λ0 t}) dt` with `F(v) = ∫_v^∞ dw/f(w)`.
pub fn corollary_f(psi: &ScalarFunction, profile: &NonlinearityProfile, lambda0: f64, cfg: &CriterionConfig) -> Result<Verdict> {
    if !profile.osgood.is_convergent() {
        return Err(Error::DivergentTail(format!(
            "F needs ∫^∞ ds/f < ∞; Osgood verdict is {}",
            profile.osgood.label
        )));
    }
    // Surface a divergent F tail as an error rather than a NaN integrand.
    profile.ln_potential(Potential::F, 1.0)?;
    let ln_g = |t: f64| {
        let lp = psi.ln_eval(t);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        match profile.ln_potential_at_ln(Potential::F, -lambda0 * t) {
            Ok(lf) => lp - lf,
            Err(_) => f64::NAN,
        }
    };
    Ok(classify_tail(ln_g, 0.0, &cfg.horizons, &cfg.tail))
}

/// Searches `τ` with `F(‖S(τ)w0‖_∞) ≤ ∫_0^τ ψ` on `τ = 2^{k/8}`, `2^{-10} ≤ τ ≤ 2^{20}`.
pub fn lp1(psi: &ScalarFunction, profile: &NonlinearityProfile, trace: &DecayTrace, cfg: &CriterionConfig) -> Result<Lp1Result> {
    profile.ln_potential(Potential::F, 1.0)?;
    let quad = &cfg.tail.quad;
    let ln_f_at = |tau: f64| -> Result<f64> { profile.ln_potential_at_ln(Potential::F, trace.ln_sup_at(tau)?) };
    let mut prev_tau = 0.0;
    let mut acc = f64::NEG_INFINITY;
    let mut min_gap = f64::INFINITY;
    for k in -80..=160 {
        let tau = 2f64.powf(k as f64 / 8.0);
        if tau < trace.times[0] {
            continue;
        }
        let seg = log_integral(|s| psi.ln_eval(s), prev_tau, tau, quad).ln_value;
        let acc_next = ln_add(acc, seg);
        let gap = ln_f_at(tau)? - acc_next;
        min_gap = min_gap.min(gap);
        if gap <= 0.0 {
            // Bisection for the crossing inside (prev_tau, tau].
            let (mut a, mut b) = (prev_tau, tau);
            for _ in 0..40 {
                let m = 0.5 * (a + b);
                let ln_int = ln_add(acc, log_integral(|s| psi.ln_eval(s), prev_tau, m, quad).ln_value);
                if m > trace.times[0] && ln_f_at(m)? - ln_int <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            return Ok(Lp1Result { holds: true, tau: Some(b), min_ln_gap: min_gap.min(0.0) });
        }
        acc = acc_next;
        prev_tau = tau;
    }
    Ok(Lp1Result { holds: false, tau: None, min_ln_gap: min_gap })
}

/// `∫_0^∞ ψ f(‖S(t)w0‖)/‖S(t)w0‖ dt < 1`.
pub fn lp2(psi: &ScalarFunction, f: &ScalarFunction, trace: &DecayTrace, cfg: &CriterionConfig) -> Result<ConditionResult> {
    let v = classify_trace(psi, f, trace, cfg);
    let holds = match v.label {
        Label::Convergent => Some(v.value.is_some_and(|x| x < 1.0)),
        Label::Divergent => Some(false),
        Label::Inconclusive => None,
    };
    Ok(ConditionResult { holds, verdict: Some(v), ln_running_max: Vec::new(), notes: Vec::new() })
}

/// Runs every auxiliary check whose prerequisites are available.
pub fn auxiliary_criteria(
    psi: &ScalarFunction,
    profile: &NonlinearityProfile,
    lambda0: f64,
    trace: Option<&DecayTrace>,
    cfg: &CriterionConfig,
) -> AuxReport {
    let mut r = AuxReport::default();
    let p = profile.function().power_exponent();
    let mut skip = |name: &str, e: Error| r.skipped.push((name.to_string(), e.to_string()));
    match c1(psi, p, lambda0, cfg) {
        Ok(c) => r.c1 = Some(c),
        Err(e) => skip("C1", e),
    }
    match c2(psi, p, lambda0, cfg) {
        Ok(c) => r.c2 = Some(c),
        Err(e) => skip("C2", e),
    }
    match corollary_f(psi, profile, lambda0, cfg) {
        Ok(v) => r.corollary_f = Some(v),
        Err(e) => skip("corollaryF", e),
    }
    match trace {
        Some(tr) => {
            match lp1(psi, profile, tr, cfg) {
                Ok(v) => r.lp1 = Some(v),
                Err(e) => skip("LP1", e),
            }
            match lp2(psi, profile.function(), tr, cfg) {
                Ok(v) => r.lp2 = Some(v),
                Err(e) => skip("LP2", e),
            }
        }
        None => {
            skip("LP1", Error::MissingParameter("semigroup trace".into()));
            skip("LP2", Error::MissingParameter("semigroup trace".into()));
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verdict::Label;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn meier_conditions_on_the_counterexample() {
        let l = PI * PI;
        let psi = ScalarFunction::time_weight(0.5, l);
        let cfg = CriterionConfig::default();
        assert_eq!(c1(&psi, Some(2.0), l, &cfg).unwrap().holds, Some(false));
        assert_eq!(c2(&psi, Some(2.0), l, &cfg).unwrap().holds, Some(false));
        assert!(matches!(c1(&psi, None, l, &cfg), Err(Error::MissingParameter(_))));
    }

    #[test]
    fn meier_conditions_off_the_boundary() {
        let l = PI * PI;
        let cfg = CriterionConfig::default();
        let fast = ScalarFunction::time_weight(0.5, 1.5 * l);
        assert_eq!(c1(&fast, Some(2.0), l, &cfg).unwrap().holds, Some(true));
        let slow = ScalarFunction::time_weight(0.5, 0.5 * l);
        assert_eq!(c2(&slow, Some(2.0), l, &cfg).unwrap().holds, Some(true));
    }

    #[test]
    fn potential_form_for_the_square() {
        // F(v) = 1/v, so ψ/F(e^{−λ0 t}) = e^{−λ0 t} for ψ = 1.
        let l = PI * PI;
        let prof = NonlinearityProfile::new(ScalarFunction::power(2.0)).unwrap();
        let v = corollary_f(&ScalarFunction::constant(1.0), &prof, l, &CriterionConfig::default()).unwrap();
        assert_eq!(v.label, Label::Convergent);
        assert_relative_eq!(v.value.unwrap(), 1.0 / l, max_relative = 1e-7);
    }
}
