//! Worked examples for each public operation, checked against closed forms
//! computed independently here.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use blowup_core::bounds::{kaplan_ode, sec2_closed_bound, supersolution_field, supersolution_z, KaplanConfig, OdeStatus, SupersolutionConfig, Z0};
use blowup_core::criterion::{auxiliary_criteria, c1, c2, corollary_f, lp1, lp2, CriterionConfig};
use blowup_core::nonlinearity::{Kind, NonlinearityProfile, Potential, ScalarFunction};
use blowup_core::semigroup::{sup_norm_trace, uniform_times, HeatConfig};
use blowup_core::simulator::{comparison_check, simulate, FrameMode, SimConfig};
use blowup_core::spectral::{principal_eigenpair, DomainGrid};
use blowup_core::{Error, Label};

fn profile(text: &str) -> NonlinearityProfile {
    NonlinearityProfile::new(ScalarFunction::parse(text).unwrap()).unwrap()
}

#[test]
fn parse_examples() {
    let sq = ScalarFunction::parse("u^2").unwrap();
    assert_eq!(sq.family(), "power");
    assert_eq!(sq.eval(3.0), 9.0);
    let mix = ScalarFunction::parse("(u^2+u)/2").unwrap();
    assert_eq!(mix.family(), "expression");
    assert_eq!(mix.eval(1.0), 1.0);
    let w = ScalarFunction::parse("(t+1)^(-0.5)*exp(9.8696*t)").unwrap();
    assert_eq!(w.eval(0.0), 1.0);
    assert!(matches!(ScalarFunction::parse("u^"), Err(Error::Parse(_))));
    assert!(matches!(ScalarFunction::parse("sin(u)"), Err(Error::Parse(_))));
}

#[test]
fn envelope_examples() {
    let sq = profile("u^2");
    assert_relative_eq!(sq.minorant(4.0), 16.0, max_relative = 1e-12);
    assert_relative_eq!(sq.majorant(0.5), 0.25, max_relative = 1e-12);
    let mix = profile("(u^2+u)/2");
    // f(αu)/f(α) = u(αu+1)/(α+1); brute force over a fine α grid.
    let ratio = |a: f64, u: f64| u * (a * u + 1.0) / (a + 1.0);
    let alphas: Vec<f64> = (1..10_000).map(|i| i as f64 / 10_000.0).collect();
    let inf = alphas.iter().map(|&a| ratio(a, 2.0)).fold(f64::INFINITY, f64::min);
    let sup = alphas.iter().map(|&a| ratio(a, 2.0)).fold(0.0, f64::max);
    assert_relative_eq!(mix.minorant(2.0), 2.0, max_relative = 1e-6);
    assert!(mix.minorant(2.0) <= inf);
    assert_relative_eq!(mix.majorant(2.0), 3.0, max_relative = 1e-6);
    assert!(mix.majorant(2.0) >= sup);
    for p in [sq, mix, profile("exp(u)-1")] {
        assert_relative_eq!(p.minorant(1.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(p.majorant(1.0), 1.0, max_relative = 1e-12);
    }
}

#[test]
fn osgood_examples() {
    let v = profile("u^2").osgood_check().clone();
    assert_eq!(v.label, Label::Convergent);
    assert_relative_eq!(v.value.unwrap(), 1.0, max_relative = 1e-8);
    assert_eq!(profile("(u^2+u)/2").osgood_check().label, Label::Divergent);
    assert_eq!(profile("u").osgood_check().label, Label::Divergent);
}

#[test]
fn potential_examples() {
    let sq = profile("u^2");
    assert_relative_eq!(sq.potential(Potential::FM, 0.5).unwrap(), 2.0, max_relative = 1e-10);
    assert_relative_eq!(sq.potential(Potential::F, 1.0).unwrap(), 1.0, max_relative = 1e-10);
    assert_relative_eq!(sq.potential(Potential::Fm, 2.0).unwrap(), 0.5, max_relative = 1e-10);
    assert_relative_eq!(sq.invert_potential(Potential::FM, 2.0).unwrap(), 0.5, max_relative = 1e-10);
    let w = sq.potential(Potential::FM, 0.3).unwrap();
    assert_relative_eq!(sq.invert_potential(Potential::FM, w).unwrap(), 0.3, max_relative = 1e-10);
    assert_relative_eq!(sq.invert_potential(Potential::Fm, 0.25).unwrap(), 4.0, max_relative = 1e-10);
    assert!(profile("(u^2+u)/2").potential(Potential::Fm, 2.0).is_err());
    assert!(sq.potential(Potential::FM, -1.0).is_err());
}

#[test]
fn quasi_multiplicative_examples() {
    let q = NonlinearityProfile::new(ScalarFunction::scaled_power(4.0, 3.0)).unwrap().quasi_mult_constants();
    assert_relative_eq!(q.gamma1, 0.25, max_relative = 1e-10);
    assert_relative_eq!(q.gamma2, 0.25, max_relative = 1e-10);
    assert!(q.quasi_multiplicative);
    let mix = profile("(u^2+u)/2").quasi_mult_constants();
    assert!(!mix.quasi_multiplicative);
    assert_eq!(mix.gamma1, 0.0);
    // Over the sampled range the supremum 2(αu+1)/((α+1)(u+1)) approaches 2 at α, u → 0.
    assert!(mix.gamma2 <= 2.0 + 1e-9 && mix.gamma2 > 1.9);
}

#[test]
fn spectral_examples() {
    let g = DomainGrid::interval(0.0, 1.0, 199).unwrap();
    let e = principal_eigenpair(&g).unwrap();
    assert!((e.lambda0 - PI * PI).abs() / (PI * PI) < 1e-3);
    let max = e.phi0_sup.iter().cloned().fold(0.0, f64::max);
    assert_relative_eq!(max, 1.0, max_relative = 1e-14);
    assert_relative_eq!(g.integral(&e.phi0_mass), 1.0, max_relative = 1e-12);
    let wide = DomainGrid::interval(0.0, 2.0, 199).unwrap();
    let ew = principal_eigenpair(&wide).unwrap();
    assert!((ew.lambda0 - PI * PI / 4.0).abs() / (PI * PI / 4.0) < 1e-3);
}

#[test]
fn auxiliary_examples() {
    let g = DomainGrid::interval(0.0, 1.0, 199).unwrap();
    let e = principal_eigenpair(&g).unwrap();
    let l = e.lambda0;
    let cfg = CriterionConfig::default();
    let cx = ScalarFunction::time_weight(0.5, l);
    assert_eq!(c1(&cx, Some(2.0), l, &cfg).unwrap().holds, Some(false));
    assert_eq!(c2(&cx, Some(2.0), l, &cfg).unwrap().holds, Some(false));
    assert!(matches!(c1(&cx, None, l, &cfg), Err(Error::MissingParameter(_))));

    // corollaryF for ψ = 1, f = u²: ∫ e^{−λ0 t} dt = 1/λ0.
    let sq = profile("u^2");
    let one = ScalarFunction::constant(1.0);
    let v = corollary_f(&one, &sq, l, &cfg).unwrap();
    assert_eq!(v.label, Label::Convergent);
    assert_relative_eq!(v.value.unwrap(), 1.0 / l, max_relative = 1e-6);
    assert!(corollary_f(&one, &profile("u"), l, &cfg).is_err());

    // LP1 with w0 = φ0: F(‖S(τ)φ0‖) = e^{λ0τ} while ∫_0^τ ψ stays below e^{λ0τ}/λ0,
    // so no crossing exists. With w0 = 100φ0 the left side drops by 100 and a
    // crossing appears.
    let times = uniform_times(1.0, 200);
    let tr = sup_norm_trace(&g, &e.phi0_sup, &times, &HeatConfig::default()).unwrap().with_envelope(l).unwrap();
    let r = lp1(&cx, &sq, &tr, &cfg).unwrap();
    assert!(!r.holds && r.min_ln_gap > 0.0);
    let big: Vec<f64> = e.phi0_sup.iter().map(|p| 100.0 * p).collect();
    let tr100 = sup_norm_trace(&g, &big, &times, &HeatConfig::default()).unwrap().with_envelope(l).unwrap();
    let r = lp1(&cx, &sq, &tr100, &cfg).unwrap();
    assert!(r.holds);
    let tau = r.tau.unwrap();
    let lhs = 1.0 / tr100.ln_sup_at(tau).unwrap().exp();
    let rhs: f64 = {
        let n = 200_000;
        let h = tau / n as f64;
        (0..n).map(|i| cx.eval((i as f64 + 0.5) * h) * h).sum()
    };
    assert!(lhs <= rhs * (1.0 + 1e-4), "{lhs} vs {rhs}");

    // LP2 for ψ = 1, f = u² with w0 = φ0: ∫ e^{−λ0 t} dt = 1/λ0 < 1.
    let r = lp2(&one, sq.function(), &tr, &cfg).unwrap();
    assert_eq!(r.holds, Some(true));

    let report = auxiliary_criteria(&cx, &sq, l, Some(&tr), &cfg);
    assert!(report.skipped.is_empty());
}

#[test]
fn ode_examples() {
    let l = PI * PI;
    let psi = ScalarFunction::time_weight(0.5, l);
    let f = ScalarFunction::power(2.0);
    let tr = kaplan_ode(&psi, &f, l, 0.5, 10.0, &KaplanConfig::default()).unwrap();
    assert!(matches!(tr.status, OdeStatus::BlewUp { t_star } if t_star <= 3.0));
    assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    assert!(tr.values.iter().all(|v| *v > 0.0));
    for (t, y) in tr.times.iter().zip(&tr.values) {
        assert!(*y >= sec2_closed_bound(0.5, *t, l) * (1.0 - 1e-4));
    }
    assert!(kaplan_ode(&psi, &f, l, 0.0, 1.0, &KaplanConfig::default()).is_err());
}

#[test]
fn supersolution_field_examples() {
    let g = DomainGrid::interval(0.0, 1.0, 99).unwrap();
    let e = principal_eigenpair(&g).unwrap();
    let sq = profile("u^2");
    let one = ScalarFunction::constant(1.0);
    let cfg = SupersolutionConfig { z0: Z0::Value(1.0), ..Default::default() };
    let times = uniform_times(4.0, 40);
    let z = supersolution_z(&sq, &one, e.lambda0, 1.0, &times, &cfg).unwrap();
    let top = g.nearest_node(&[0.5]);
    assert_relative_eq!(supersolution_field(&z, &e, top, 0.0).unwrap(), 1.0, max_relative = 1e-12);
    // e^{λ0 t} · max ū → z(∞) = 1/(1 − 1/λ0).
    let scaled = supersolution_field(&z, &e, top, 4.0).unwrap() * (e.lambda0 * 4.0).exp();
    assert_relative_eq!(scaled, 1.0 / (1.0 - 1.0 / e.lambda0), max_relative = 1e-6);
    assert!(supersolution_field(&z, &e, top, 5.0).is_err());
}

#[test]
fn comparison_examples() {
    let g = DomainGrid::interval(0.0, 1.0, 99).unwrap();
    let e = principal_eigenpair(&g).unwrap();
    let sq = profile("u^2");
    let zero = ScalarFunction::constant(0.0);
    let cfg = SupersolutionConfig { z0: Z0::Value(2.0), ..Default::default() };
    let sim_cfg = SimConfig { frames: FrameMode::EveryStep, ..Default::default() };
    // Equality: u0 = z0 φ0 with no forcing stays on z0 e^{−λ0 t} φ0.
    let u0: Vec<f64> = e.phi0_sup.iter().map(|p| 2.0 * p).collect();
    let sim = simulate(&g, &e, &zero, sq.function(), &u0, 1.0, &sim_cfg).unwrap();
    let z = supersolution_z(&sq, &zero, e.lambda0, 1.0, &sim.frame_times(), &cfg).unwrap();
    let rep = comparison_check(&sim, &z, &e, 1e-8).unwrap();
    assert!(rep.dominated, "{rep:?}");
    // Data above z0 φ0 is refused.
    let over: Vec<f64> = e.phi0_sup.iter().map(|p| 2.5 * p).collect();
    let sim = simulate(&g, &e, &zero, sq.function(), &over, 0.1, &sim_cfg).unwrap();
    let z = supersolution_z(&sq, &zero, e.lambda0, 1.0, &sim.frame_times(), &cfg).unwrap();
    assert!(matches!(comparison_check(&sim, &z, &e, 1e-8), Err(Error::Precondition(_))));
    // No frames stored.
    let bare = simulate(&g, &e, &zero, sq.function(), &u0, 0.1, &SimConfig::default()).unwrap();
    assert!(comparison_check(&bare, &z, &e, 1e-8).is_err());
}

#[test]
fn families_serialize_with_stable_tags() {
    let f = ScalarFunction::time_weight(0.5, 2.0);
    let json = serde_json::to_string(&f).unwrap();
    assert!(json.contains("\"family\":\"time-weight\""), "{json}");
    let back: ScalarFunction = serde_json::from_str(&json).unwrap();
    assert_eq!(back, f);
    assert!(matches!(back.kind, Kind::TimeWeight { .. }));
}
