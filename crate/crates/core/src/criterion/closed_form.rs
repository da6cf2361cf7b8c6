use serde::{Deserialize, Serialize};

use crate::verdict::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClosedFormClass {
    NoGlobal,
    GlobalForSmallData,
}

impl ClosedFormClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ClosedFormClass::NoGlobal => "NoGlobal",
            ClosedFormClass::GlobalForSmallData => "GlobalForSmallData",
        }
    }

    /// The criterion label that corresponds to this class.
    pub fn expected_label(self) -> Label {
        match self {
            ClosedFormClass::NoGlobal => Label::Divergent,
            ClosedFormClass::GlobalForSmallData => Label::Convergent,
        }
    }
}

impl std::fmt::Display for ClosedFormClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Class of `ψ = (t+1)^{-σ} e^{kt}`, `f = u^p` (`p > 1`): no global solution iff
/// `k > (p−1)λ0`, or `k = (p−1)λ0` and `σ ≤ 1`. Equality is tested to 1e-9 relative.
pub fn closed_form_class(sigma: f64, k: f64, p: f64, lambda0: f64) -> ClosedFormClass {
    assert!(p > 1.0, "closed form needs p > 1");
    let crit = (p - 1.0) * lambda0;
    let on_boundary = (k - crit).abs() <= 1e-9 * crit.abs().max(1.0);
    if (!on_boundary && k > crit) || (on_boundary && sigma <= 1.0) {
        ClosedFormClass::NoGlobal
    } else {
        ClosedFormClass::GlobalForSmallData
    }
}

pub fn label_matches(label: Label, class: ClosedFormClass) -> bool {
    label == class.expected_label()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_cases() {
        let (p, l) = (2.0, 9.8696);
        assert_eq!(closed_form_class(0.5, 1.5 * l, p, l), ClosedFormClass::NoGlobal);
        assert_eq!(closed_form_class(0.5, 0.5 * l, p, l), ClosedFormClass::GlobalForSmallData);
        assert_eq!(closed_form_class(1.0, l, p, l), ClosedFormClass::NoGlobal);
        assert_eq!(closed_form_class(2.0, l, p, l), ClosedFormClass::GlobalForSmallData);
        assert_eq!(closed_form_class(-3.0, 2.0 * l, 3.0, l), ClosedFormClass::NoGlobal);
    }
}
