//! Property tests for the structural invariants.

use std::f64::consts::PI;
use std::sync::OnceLock;

use blowup_core::bounds::{kaplan_ode, KaplanConfig, OdeStatus, SupersolutionConfig, SupersolutionPath, Z0};
use blowup_core::criterion::{closed_form_class, ClosedFormClass};
use blowup_core::nonlinearity::{NonlinearityProfile, Potential, ScalarFunction};
use blowup_core::quadrature::{log_integral, QuadConfig};
use blowup_core::simulator::{simulate, FrameMode, SimConfig};
use blowup_core::spectral::{principal_eigenpair, DomainGrid, EigenPair};
use blowup_core::tridiag::Tridiag;
use blowup_core::Exec;
use proptest::prelude::*;

fn mix() -> &'static NonlinearityProfile {
    static P: OnceLock<NonlinearityProfile> = OnceLock::new();
    P.get_or_init(|| NonlinearityProfile::new(ScalarFunction::parse("(u^2+u)/2").unwrap()).unwrap())
}

fn cube() -> &'static NonlinearityProfile {
    static P: OnceLock<NonlinearityProfile> = OnceLock::new();
    P.get_or_init(|| NonlinearityProfile::new(ScalarFunction::power(3.0)).unwrap())
}

fn square() -> &'static NonlinearityProfile {
    static P: OnceLock<NonlinearityProfile> = OnceLock::new();
    P.get_or_init(|| NonlinearityProfile::new(ScalarFunction::power(2.0)).unwrap())
}

fn interval() -> &'static (DomainGrid, EigenPair) {
    static G: OnceLock<(DomainGrid, EigenPair)> = OnceLock::new();
    G.get_or_init(|| {
        let g = DomainGrid::interval(0.0, 1.0, 79).unwrap();
        let e = principal_eigenpair(&g).unwrap();
        (g, e)
    })
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn sandwich_on_the_mix(ln_u in -9.0f64..9.0) {
        let p = mix();
        let f = p.function();
        let u = ln_u.exp();
        let mid = f.eval(u) / f.eval(1.0);
        prop_assert!(p.minorant(u) <= mid * (1.0 + 1e-12));
        prop_assert!(mid <= p.majorant(u) * (1.0 + 1e-12));
        prop_assert!(p.minorant(u) <= p.majorant(u));
    }

    #[test]
    fn reciprocal_sandwich_on_the_mix(alpha in 1e-6f64..1.0) {
        let p = mix();
        let f = p.function();
        let mid = f.eval(1.0) / f.eval(alpha);
        prop_assert!(p.minorant(1.0 / alpha) <= mid * (1.0 + 1e-12));
        prop_assert!(mid <= p.majorant(1.0 / alpha) * (1.0 + 1e-12));
    }

    #[test]
    fn power_envelopes_are_exact(p in 1.0f64..4.0, c in 0.1f64..10.0, ln_u in -5.0f64..5.0) {
        let prof = NonlinearityProfile::new(ScalarFunction::scaled_power(c, p)).unwrap();
        let u = ln_u.exp();
        let want = u.powf(p);
        prop_assert!((prof.minorant(u) / want - 1.0).abs() < 1e-10);
        prop_assert!((prof.majorant(u) / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn potentials_decrease_and_invert(a in -4.0f64..4.0, d in 0.01f64..3.0) {
        let p = cube();
        for which in [Potential::F, Potential::Fm, Potential::FM] {
            let (v1, v2) = (a.exp(), (a + d).exp());
            let (g1, g2) = (p.potential(which, v1).unwrap(), p.potential(which, v2).unwrap());
            prop_assert!(g1 > g2);
            let back = p.invert_potential(which, g1).unwrap();
            prop_assert!((back / v1 - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn corollary_sandwich_for_the_cube(ln_z in -5.0f64..5.0) {
        // γ1 = γ2 = 1, so F(z) f(z)/z equals F(1).
        let p = cube();
        let z = ln_z.exp();
        let lhs = p.potential(Potential::F, z).unwrap() * z * z;
        prop_assert!((lhs / p.potential(Potential::F, 1.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn exponential_integrals(a in -50.0f64..50.0, w in 0.01f64..100.0, c in -20.0f64..20.0) {
        prop_assume!(c.abs() > 1e-3);
        let b = a + w;
        let q = log_integral(|t| c * t, a, b, &QuadConfig::default());
        // ln[(e^{cb} − e^{ca})/c] = max(ca, cb) + ln(1 − e^{−|c|w}) − ln|c|
        let exact = (c * a).max(c * b) + (-(-c.abs() * w).exp()).ln_1p() - c.abs().ln();
        prop_assert!((q.ln_value - exact).abs() < 1e-9, "{} vs {}", q.ln_value, exact);
    }

    #[test]
    fn tridiagonal_solve_inverts_the_product(
        n in 3usize..60,
        sub in -1.0f64..0.0,
        sup in -1.0f64..0.0,
        extra in 0.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let diag = -(sub + sup) + extra + 0.1;
        let mut x = Vec::with_capacity(n);
        let mut s = seed;
        for _ in 0..n {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            x.push((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
        }
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                diag * x[i] + if i > 0 { sub * x[i - 1] } else { 0.0 } + if i + 1 < n { sup * x[i + 1] } else { 0.0 }
            })
            .collect();
        Tridiag::new(n, sub, diag, sup).solve(&mut b);
        for i in 0..n {
            prop_assert!((b[i] - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_is_monotone_in_k_and_sigma(sigma in 0.1f64..3.0, k in 0.0f64..30.0, dk in 0.0f64..5.0, ds in 0.0f64..2.0) {
        let l = PI * PI;
        // Larger k and smaller σ only make the weight heavier.
        if closed_form_class(sigma, k, 2.0, l) == ClosedFormClass::NoGlobal {
            prop_assert_eq!(closed_form_class(sigma, k + dk, 2.0, l), ClosedFormClass::NoGlobal);
            prop_assert_eq!(closed_form_class((sigma - ds).max(0.0), k, 2.0, l), ClosedFormClass::NoGlobal);
        }
    }
}

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn larger_mass_blows_up_no_later(y0 in 0.2f64..2.0, factor in 1.0f64..4.0) {
        let l = PI * PI;
        let psi = ScalarFunction::time_weight(0.5, l);
        let f = ScalarFunction::power(2.0);
        let cfg = KaplanConfig::default();
        let t_star = |y: f64| match kaplan_ode(&psi, &f, l, y, 10.0, &cfg).unwrap().status {
            OdeStatus::BlewUp { t_star } => t_star,
            s => panic!("{s:?}"),
        };
        prop_assert!(t_star(y0 * factor) <= t_star(y0) + 1e-9);
    }

    #[test]
    fn supersolution_is_nondecreasing_and_bounded(frac in 0.01f64..0.99, t_end in 0.1f64..5.0) {
        let l = PI * PI;
        let psi = ScalarFunction::constant(1.0);
        let z0 = frac * l;
        let cfg = SupersolutionConfig { z0: Z0::Value(z0), ..Default::default() };
        let path = SupersolutionPath::new(square(), &psi, l, 1.0, &cfg).unwrap();
        let times: Vec<f64> = (0..=20).map(|i| t_end * i as f64 / 20.0).collect();
        let z = path.trajectory(&times).unwrap();
        // With F_M(v) = 1/v the limit is F_M⁻¹[F_M(z0) − 1/λ0].
        let cap = 1.0 / (1.0 / z0 - 1.0 / l);
        prop_assert!(z.values.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
        prop_assert!(z.values.iter().all(|v| *v <= cap * (1.0 + 1e-9)));
    }

    #[test]
    fn simulations_stay_nonnegative(center in 0.1f64..0.9, width in 0.05f64..0.4, amp in 0.1f64..5.0) {
        let (g, e) = interval();
        let u0 = g.sample(|x| amp * (1.0 - ((x[0] - center) / width).powi(2)).max(0.0));
        prop_assume!(u0.iter().any(|v| *v > 0.0));
        let cfg = SimConfig { frames: FrameMode::EveryStep, exec: Exec::Sequential, ..Default::default() };
        let out = simulate(g, e, &ScalarFunction::constant(1.0), &ScalarFunction::power(2.0), &u0, 0.5, &cfg).unwrap();
        for fr in &out.frames {
            prop_assert!(fr.w.iter().all(|w| *w >= 0.0));
        }
    }
}
