//! Declarative descriptions of the reaction term `f(u)` and the time weight `ψ(t)`.

use serde::{Deserialize, Serialize};

use super::expr::{self, Expr, LogNum, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Kind {
    /// `coeff · u^exponent`
    Power { coeff: f64, exponent: f64 },
    /// `(u^p + u^q) / 2`; `p = 2, q = 1` gives `(u² + u)/2`.
    ShiftedPowerMix { p: f64, q: f64 },
    /// `e^u − 1`
    ExpMinusOne,
    /// `(t+1)^{-σ} e^{k t}`
    TimeWeight { sigma: f64, k: f64 },
    Constant { value: f64 },
    Expression { source: String, tree: Expr },
}

/// Monotonicity and convexity flags; `None` means undeclared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeFlags {
    pub nondecreasing: Option<bool>,
    pub convex: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFunction {
    pub kind: Kind,
    pub flags: ShapeFlags,
}

impl ScalarFunction {
    fn with_kind(kind: Kind) -> Self {
        let flags = builtin_flags(&kind);
        ScalarFunction { kind, flags }
    }

    pub fn power(p: f64) -> Self {
        Self::with_kind(Kind::Power { coeff: 1.0, exponent: p })
    }

    pub fn scaled_power(coeff: f64, p: f64) -> Self {
        Self::with_kind(Kind::Power { coeff, exponent: p })
    }

    pub fn shifted_power_mix(p: f64, q: f64) -> Self {
        Self::with_kind(Kind::ShiftedPowerMix { p, q })
    }

    pub fn exp_minus_one() -> Self {
        Self::with_kind(Kind::ExpMinusOne)
    }

    pub fn time_weight(sigma: f64, k: f64) -> Self {
        Self::with_kind(Kind::TimeWeight { sigma, k })
    }

    pub fn constant(value: f64) -> Self {
        Self::with_kind(Kind::Constant { value })
    }

    /// Parses an expression. Plain monomials (`u`, `u^p`, `c*u^p`) and
    /// numeric constants are recognized as the corresponding built-in family.
    pub fn parse(text: &str) -> Result<Self> {
        let tree = expr::parse(text)?;
        if tree.uses(Var::T) && tree.uses(Var::U) {
            return Err(Error::InvalidFunction(format!("`{text}` mixes t and u; f and ψ are separate functions")));
        }
        let kind = recognize(&tree).unwrap_or_else(|| Kind::Expression { source: text.trim().to_string(), tree });
        Ok(Self::with_kind(kind))
    }

    pub fn with_flags(mut self, flags: ShapeFlags) -> Self {
        if flags.nondecreasing.is_some() {
            self.flags.nondecreasing = flags.nondecreasing;
        }
        if flags.convex.is_some() {
            self.flags.convex = flags.convex;
        }
        self
    }

    pub fn family(&self) -> &'static str {
        match self.kind {
            Kind::Power { .. } => "power",
            Kind::ShiftedPowerMix { .. } => "shifted-power-mix",
            Kind::ExpMinusOne => "exp-minus-one",
            Kind::TimeWeight { .. } => "time-weight",
            Kind::Constant { .. } => "constant",
            Kind::Expression { .. } => "expression",
        }
    }

    pub fn source_text(&self) -> Option<&str> {
        match &self.kind {
            Kind::Expression { source, .. } => Some(source),
            _ => None,
        }
    }

    /// Exponent `p` when the function is `c·u^p`.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::Power { exponent, .. } => Some(exponent),
            _ => None,
        }
    }

    /// Value at `x` (`u` for reaction terms, `t` for time weights).
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Power { coeff, exponent } => coeff * x.powf(*exponent),
            Kind::ShiftedPowerMix { p, q } => 0.5 * (x.powf(*p) + x.powf(*q)),
            Kind::ExpMinusOne => x.exp_m1(),
            Kind::TimeWeight { sigma, k } => (x + 1.0).powf(-sigma) * (k * x).exp(),
            Kind::Constant { value } => *value,
            Kind::Expression { tree, .. } => tree.eval(x, x),
        }
    }

    /// `ln` of the value at `x`: `-inf` where the function vanishes, NaN where it is negative.
    pub fn ln_eval(&self, x: f64) -> f64 {
        if x > 0.0 {
            return self.ln_eval_exp(x.ln());
        }
        match &self.kind {
            Kind::Expression { tree, .. } => {
                let a = LogNum::from_f64(x);
                tree.eval_log(a, a).ln_value()
            }
            _ => {
                let v = self.eval(x);
                if v > 0.0 {
                    v.ln()
                } else if v == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::NAN
                }
            }
        }
    }

    /// `ln f(e^{lx})`, exact for arguments far outside the `f64` range.
    pub fn ln_eval_exp(&self, lx: f64) -> f64 {
        match &self.kind {
            Kind::Power { coeff, exponent } => {
                if *coeff <= 0.0 {
                    return if *coeff == 0.0 { f64::NEG_INFINITY } else { f64::NAN };
                }
                coeff.ln() + exponent * lx
            }
            Kind::ShiftedPowerMix { p, q } => crate::quadrature::ln_add(p * lx, q * lx) - std::f64::consts::LN_2,
            Kind::ExpMinusOne => {
                let x = lx.exp();
                if x > 30.0 {
                    x + (-(-x).exp()).ln_1p()
                } else if x < 1e-300 {
                    lx
                } else {
                    x.exp_m1().ln()
                }
            }
            Kind::TimeWeight { sigma, k } => {
                let t = lx.exp();
                -sigma * t.ln_1p() + k * t
            }
            Kind::Constant { value } => {
                if *value > 0.0 {
                    value.ln()
                } else if *value == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::NAN
                }
            }
            Kind::Expression { tree, .. } => {
                let a = LogNum::from_ln(lx);
                tree.eval_log(a, a).ln_value()
            }
        }
    }

    /// `ln lim_{α→0} f(αu)/f(α)` at `u = e^{ln_u}` when the family determines it.
    pub fn ln_ratio_limit_at_zero(&self, ln_u: f64) -> Option<f64> {
        match self.kind {
            Kind::Power { exponent, .. } => Some(exponent * ln_u),
            Kind::ShiftedPowerMix { p, q } => Some(p.min(q) * ln_u),
            Kind::ExpMinusOne => Some(ln_u),
            _ => None,
        }
    }

    /// Shape flags measured by finite differences on a log grid over `[1e-6, s_max]`.
    pub fn detect_shape(&self, s_max: f64) -> ShapeFlags {
        let n = 400;
        let (a, b) = (1e-6f64.ln(), s_max.ln());
        let xs: Vec<f64> = (0..=n).map(|i| (a + (b - a) * i as f64 / n as f64).exp()).collect();
        let lv: Vec<f64> = xs.iter().map(|&x| self.ln_eval(x)).collect();
        let nondecreasing = lv.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
        // Convexity from chord slopes where the values are representable.
        let vals: Vec<f64> = lv.iter().map(|l| l.exp()).collect();
        let mut convex = true;
        let mut prev_slope: Option<f64> = None;
        for i in 0..n {
            if !vals[i].is_finite() || !vals[i + 1].is_finite() || vals[i + 1] > 1e290 {
                break;
            }
            let slope = (vals[i + 1] - vals[i]) / (xs[i + 1] - xs[i]);
            if let Some(ps) = prev_slope {
                if slope < ps - 1e-7 * ps.abs().max(slope.abs()).max(1e-300) {
                    convex = false;
                    break;
                }
            }
            prev_slope = Some(slope);
        }
        ShapeFlags { nondecreasing: Some(nondecreasing), convex: Some(convex) }
    }

    /// Checks the reaction-term requirements: `f(0) = 0`, `f > 0` on `(0, s_max]`,
    /// and declared flags consistent with sampling. Returns the detected flags.
    pub fn validate_reaction(&self, s_max: f64) -> Result<ShapeFlags> {
        let f0 = self.eval(0.0);
        if f0 != 0.0 {
            return Err(Error::InvalidFunction(format!("f(0) = {f0}, expected 0")));
        }
        let n = 400;
        let (a, b) = (1e-8f64.ln(), s_max.ln());
        for i in 0..=n {
            let lx = a + (b - a) * i as f64 / n as f64;
            let l = self.ln_eval_exp(lx);
            if !(l > f64::NEG_INFINITY) {
                return Err(Error::InvalidFunction(format!("f is not positive at s = {:e}", lx.exp())));
            }
        }
        let detected = self.detect_shape(s_max);
        self.check_flags(detected)?;
        Ok(detected)
    }

    /// Checks `ψ(t) ≥ 0` on `[0, t_max]`.
    pub fn validate_weight(&self, t_max: f64) -> Result<()> {
        let n = 1000;
        for i in 0..=n {
            let t = t_max * i as f64 / n as f64;
            if self.ln_eval(t).is_nan() {
                return Err(Error::InvalidFunction(format!("ψ({t}) is negative or undefined")));
            }
        }
        Ok(())
    }

    fn check_flags(&self, detected: ShapeFlags) -> Result<()> {
        if self.flags.nondecreasing == Some(true) && detected.nondecreasing == Some(false) {
            return Err(Error::InvalidFunction("declared nondecreasing but sampling shows a decrease".into()));
        }
        if self.flags.convex == Some(true) && detected.convex == Some(false) {
            return Err(Error::InvalidFunction("declared convex but sampled chord slopes decrease".into()));
        }
        Ok(())
    }

    pub fn is_convex(&self) -> bool {
        self.flags.convex.unwrap_or_else(|| self.detect_shape(1e3).convex == Some(true))
    }

    /// Short human-readable description, e.g. `u^2` or `(t+1)^(-0.5)*exp(9.87*t)`.
    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Power { coeff, exponent } if *coeff == 1.0 => format!("u^{exponent}"),
            Kind::Power { coeff, exponent } => format!("{coeff}*u^{exponent}"),
            Kind::ShiftedPowerMix { p, q } => format!("(u^{p}+u^{q})/2"),
            Kind::ExpMinusOne => "exp(u)-1".into(),
            Kind::TimeWeight { sigma, k } => format!("(t+1)^(-{sigma})*exp({k}*t)"),
            Kind::Constant { value } => format!("{value}"),
            Kind::Expression { source, .. } => source.clone(),
        }
    }
}

fn builtin_flags(kind: &Kind) -> ShapeFlags {
    match *kind {
        Kind::Power { coeff, exponent } if coeff > 0.0 => {
            ShapeFlags { nondecreasing: Some(exponent >= 0.0), convex: Some(exponent >= 1.0 || exponent == 0.0) }
        }
        Kind::ShiftedPowerMix { p, q } => {
            ShapeFlags { nondecreasing: Some(p >= 0.0 && q >= 0.0), convex: Some(p >= 1.0 && q >= 1.0) }
        }
        Kind::ExpMinusOne => ShapeFlags { nondecreasing: Some(true), convex: Some(true) },
        _ => ShapeFlags::default(),
    }
}

fn number(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        Expr::Neg(inner) => number(inner).map(|v| -v),
        _ => None,
    }
}

fn monomial(e: &Expr) -> Option<f64> {
    use expr::BinOp;
    match e {
        Expr::Var(Var::U) => Some(1.0),
        Expr::Bin(BinOp::Pow, base, exp) if **base == Expr::Var(Var::U) => number(exp),
        Expr::Call(expr::Builtin::Pow, args) if args[0] == Expr::Var(Var::U) => number(&args[1]),
        _ => None,
    }
}

fn recognize(e: &Expr) -> Option<Kind> {
    use expr::BinOp;
    if let Some(value) = number(e) {
        return Some(Kind::Constant { value });
    }
    if let Some(p) = monomial(e) {
        return Some(Kind::Power { coeff: 1.0, exponent: p });
    }
    if let Expr::Bin(BinOp::Mul, a, b) = e {
        if let (Some(c), Some(p)) = (number(a), monomial(b)) {
            return Some(Kind::Power { coeff: c, exponent: p });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn monomials_become_power_family() {
        let f = ScalarFunction::parse("u^2").unwrap();
        assert_eq!(f.kind, Kind::Power { coeff: 1.0, exponent: 2.0 });
        assert_eq!(f.eval(3.0), 9.0);
        let f = ScalarFunction::parse("3*u^1.5").unwrap();
        assert_eq!(f.kind, Kind::Power { coeff: 3.0, exponent: 1.5 });
        assert_eq!(ScalarFunction::parse("u").unwrap().power_exponent(), Some(1.0));
    }

    #[test]
    fn general_expressions_stay_expressions() {
        let f = ScalarFunction::parse("(u^2+u)/2").unwrap();
        assert_eq!(f.family(), "expression");
        assert_eq!(f.eval(1.0), 1.0);
        let psi = ScalarFunction::parse("(t+1)^(-0.5)*exp(9.8696*t)").unwrap();
        assert_eq!(psi.eval(0.0), 1.0);
        assert_eq!(psi.source_text(), Some("(t+1)^(-0.5)*exp(9.8696*t)"));
    }

    #[test]
    fn mixed_variables_are_rejected() {
        assert!(matches!(ScalarFunction::parse("t*u"), Err(Error::InvalidFunction(_))));
    }

    #[test]
    fn log_evaluation_matches_direct() {
        let fams = [
            ScalarFunction::power(2.0),
            ScalarFunction::scaled_power(3.0, 1.5),
            ScalarFunction::shifted_power_mix(2.0, 1.0),
            ScalarFunction::exp_minus_one(),
            ScalarFunction::time_weight(0.5, 2.0),
            ScalarFunction::parse("(u^2+u)/2").unwrap(),
        ];
        for f in &fams {
            for &x in &[1e-7, 0.3, 1.0, 2.5, 40.0] {
                assert_relative_eq!(f.ln_eval(x), f.eval(x).ln(), max_relative = 1e-10, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn log_evaluation_beyond_float_range() {
        let f = ScalarFunction::exp_minus_one();
        assert_relative_eq!(f.ln_eval_exp(1000f64.ln()), 1000.0, max_relative = 1e-14);
        assert_relative_eq!(f.ln_eval_exp(-800.0), -800.0, max_relative = 1e-14);
        let w = ScalarFunction::time_weight(0.5, 9.8696);
        assert_relative_eq!(w.ln_eval(1e4), -0.5 * 10001f64.ln() + 98696.0, max_relative = 1e-14);
    }

    #[test]
    fn validation_of_reaction_terms() {
        assert!(ScalarFunction::power(2.0).validate_reaction(1e3).is_ok());
        assert!(ScalarFunction::exp_minus_one().validate_reaction(1e3).is_ok());
        assert!(ScalarFunction::constant(1.0).validate_reaction(1e3).is_err());
        assert!(ScalarFunction::parse("u - u^2").unwrap().validate_reaction(10.0).is_err());
        let wrong = ScalarFunction::parse("u^0.5").unwrap().with_flags(ShapeFlags { convex: Some(true), nondecreasing: None });
        assert!(wrong.validate_reaction(1e3).is_err());
        let flags = ScalarFunction::parse("(u^2+u)/2").unwrap().validate_reaction(1e3).unwrap();
        assert_eq!(flags, ShapeFlags { nondecreasing: Some(true), convex: Some(true) });
    }

    #[test]
    fn validation_of_weights() {
        assert!(ScalarFunction::time_weight(0.5, 9.87).validate_weight(100.0).is_ok());
        assert!(ScalarFunction::parse("1 - t").unwrap().validate_weight(2.0).is_err());
    }
}
