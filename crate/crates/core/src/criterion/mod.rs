//! The blow-up criteria: the ε-integral and its semigroup form, the closed-form
//! classification of `ψ = (t+1)^{-σ}e^{kt}, f = u^p`, and the older sufficient
//! conditions it is compared against.

mod auxiliary;
mod closed_form;

pub use auxiliary::{auxiliary_criteria, c1, c2, corollary_f, lp1, lp2, AuxReport, ConditionResult, Lp1Result};
pub use closed_form::{closed_form_class, label_matches, ClosedFormClass};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::nonlinearity::{Kind, ScalarFunction};
use crate::semigroup::DecayTrace;
use crate::verdict::{classify_tail, default_time_horizons, EpsOutcome, Evidence, Label, TailConfig, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `ψ(t) e^{λ0 t} f(ε e^{−λ0 t})`
    TheoremEps,
    /// `ψ(t) f(‖S(t)u0‖_∞) / ‖S(t)u0‖_∞`
    SemigroupNorm,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::TheoremEps => "theorem_eps",
            Mode::SemigroupNorm => "semigroup_norm",
        }
    }
}

/// ε values `1, 10⁻¹, …, 10⁻⁶`.
pub fn default_eps_schedule() -> Vec<f64> {
    (0..=6).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionConfig {
    pub eps_schedule: Vec<f64>,
    pub horizons: Vec<f64>,
    pub tail: TailConfig,
    pub exec: Exec,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        Self {
            eps_schedule: default_eps_schedule(),
            horizons: default_time_horizons(),
            tail: TailConfig::default(),
            exec: Exec::Parallel,
        }
    }
}

/// `ln [ψ(t) e^{λ0 t} f(ε e^{−λ0 t})]`.
///
/// For a time weight against a power the linear terms are collected into one
/// rate first; summed separately they lose about `1e-3` at `t ~ 1e12`.
pub fn ln_integrand_eps(psi: &ScalarFunction, f: &ScalarFunction, lambda0: f64, eps: f64, t: f64) -> f64 {
    if let (Kind::TimeWeight { sigma, k }, Kind::Power { coeff, exponent }) = (&psi.kind, &f.kind) {
        if *coeff > 0.0 && t >= 0.0 {
            let rate = (k + lambda0) - exponent * lambda0;
            return coeff.ln() + exponent * eps.ln() - sigma * t.ln_1p() + rate * t;
        }
    }
    let lp = psi.ln_eval(t);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + lambda0 * t + f.ln_eval_exp(eps.ln() - lambda0 * t)
}

/// `ln [ψ(t) f(N)/N]` with `N = ‖S(t)u0‖_∞` read from the trace.
pub fn ln_integrand_trace(psi: &ScalarFunction, f: &ScalarFunction, trace: &DecayTrace, t: f64) -> Result<f64> {
    let ln_n = trace.ln_sup_at(t)?;
    let lp = psi.ln_eval(t);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(lp + f.ln_eval_exp(ln_n) - ln_n)
}

/// Value of the criterion integrand at `t`.
pub fn integrand(
    mode: Mode,
    psi: &ScalarFunction,
    f: &ScalarFunction,
    lambda0: f64,
    eps: Option<f64>,
    trace: Option<&DecayTrace>,
    t: f64,
) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::OutOfDomain(format!("t = {t} < 0")));
    }
    match mode {
        Mode::TheoremEps => {
            let eps = eps.ok_or_else(|| Error::MissingParameter("eps".into()))?;
            if !(eps > 0.0) {
                return Err(Error::OutOfDomain(format!("eps = {eps} must be positive")));
            }
            Ok(ln_integrand_eps(psi, f, lambda0, eps, t).exp())
        }
        Mode::SemigroupNorm => {
            let trace = trace.ok_or_else(|| Error::MissingParameter("semigroup trace".into()))?;
            Ok(ln_integrand_trace(psi, f, trace, t)?.exp())
        }
    }
}

/// Classifies `∫_0^∞ ψ e^{λ0 t} f(ε e^{−λ0 t}) dt` over the ε schedule.
///
/// The label is reported only when every ε agrees; the value and partials
/// come from the largest ε.
pub fn classify_eps(psi: &ScalarFunction, f: &ScalarFunction, lambda0: f64, cfg: &CriterionConfig) -> Verdict {
    let mut schedule = cfg.eps_schedule.clone();
    if schedule.is_empty() || schedule.iter().any(|e| !(*e > 0.0)) {
        return Verdict::inconclusive("ε schedule must be nonempty and positive");
    }
    // Smallest ε first: divergence there already covers every larger ε.
    schedule.sort_by(|a, b| a.total_cmp(b));
    let verdicts = cfg
        .exec
        .map(&schedule, |&eps| classify_tail(|t| ln_integrand_eps(psi, f, lambda0, eps, t), 0.0, &cfg.horizons, &cfg.tail));
    let per_eps: Vec<EpsOutcome> = cfg
        .eps_schedule
        .iter()
        .map(|&e| {
            let i = schedule.iter().position(|s| *s == e).unwrap();
            EpsOutcome { eps: e, label: verdicts[i].label, value: verdicts[i].value }
        })
        .collect();
    let first = verdicts[0].label;
    let uniform = verdicts.iter().all(|v| v.label == first);
    let reported = verdicts.last().unwrap();
    let mut notes = reported.evidence.notes.clone();
    notes.push(
        "for nondecreasing f the integrand is nondecreasing in ε, so divergence at the smallest ε holds for all larger ε"
            .into(),
    );
    // Numerical check of that monotonicity at the final horizon.
    let finals: Vec<f64> = verdicts.iter().map(|v| *v.evidence.ln_partials.last().unwrap_or(&f64::NAN)).collect();
    if finals.windows(2).any(|w| w[1] < w[0] - 1e-9 * w[0].abs().max(1.0)) {
        notes.push("partial integrals are not monotone in ε; f may be decreasing somewhere".into());
    }
    if !uniform {
        notes.push("label changes across the ε schedule".into());
    }
    let evidence = Evidence {
        eps: Some(*schedule.last().unwrap()),
        eps_schedule: cfg.eps_schedule.clone(),
        per_eps,
        notes,
        ..reported.evidence.clone()
    };
    if uniform {
        Verdict { label: first, value: reported.value, evidence }
    } else {
        Verdict { label: Label::Inconclusive, value: None, evidence }
    }
}

/// Classifies `∫_0^∞ ψ f(‖S(t)u0‖)/‖S(t)u0‖ dt` from a decay trace.
pub fn classify_trace(psi: &ScalarFunction, f: &ScalarFunction, trace: &DecayTrace, cfg: &CriterionConfig) -> Verdict {
    if trace.lambda0.is_none() {
        return Verdict::inconclusive("trace has no decay rate attached; call DecayTrace::with_envelope first");
    }
    let ln_g = |t: f64| ln_integrand_trace(psi, f, trace, t).unwrap_or(f64::NAN);
    let mut v = classify_tail(ln_g, trace.times[0], &cfg.horizons, &cfg.tail);
    if let Some(e) = trace.envelope {
        v.evidence.notes.push(format!("trace envelope c1 = {:.6e}, c2 = {:.6e} for t ≥ {:.4}", e.c1, e.c2, e.t0));
    }
    v
}

/// Dispatches on the mode.
pub fn classify_divergence(
    mode: Mode,
    psi: &ScalarFunction,
    f: &ScalarFunction,
    lambda0: f64,
    trace: Option<&DecayTrace>,
    cfg: &CriterionConfig,
) -> Verdict {
    match mode {
        Mode::TheoremEps => classify_eps(psi, f, lambda0, cfg),
        Mode::SemigroupNorm => match trace {
            Some(tr) => classify_trace(psi, f, tr, cfg),
            None => Verdict::inconclusive("semigroup_norm mode needs a decay trace"),
        },
    }
}
