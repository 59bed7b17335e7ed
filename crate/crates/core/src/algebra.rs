//! Two-dimensional real algebras with basis `{1, i}` and `i² = p + q·i`.
//!
//! Every such algebra is isomorphic to exactly one of the complex, dual or
//! perplex (split-complex) numbers. Which one is decided by the sign of the
//! discriminant `D = p + q²/4`.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on the discriminant below which an algebra is classified as dual.
pub const DUAL_TOLERANCE: f64 = 1e-12;

/// The multiplication rule `i² = p + q·i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraClass {
    /// Isomorphic to the complex numbers, `J² = -1`.
    #[serde(rename = "complex")]
    ComplexIso,
    /// Isomorphic to the dual numbers, `J² = 0`.
    #[serde(rename = "dual")]
    DualIso,
    /// Isomorphic to the perplex numbers, `J² = 1`.
    #[serde(rename = "perplex")]
    PerplexIso,
}

impl AlgebraClass {
    pub fn name(self) -> &'static str {
        match self {
            AlgebraClass::ComplexIso => "complex",
            AlgebraClass::DualIso => "dual",
            AlgebraClass::PerplexIso => "perplex",
        }
    }
}

impl fmt::Display for AlgebraClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl AlgebraSpec {
    pub fn new(p: f64, q: f64) -> Self {
        AlgebraSpec { p, q }
    }

    /// `p + q²/4`.
    pub fn discriminant(&self) -> f64 {
        self.p + self.q * self.q / 4.0
    }

    fn check_finite(&self) -> Result<()> {
        if self.p.is_finite() && self.q.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "algebra coefficients must be finite, got p={}, q={}",
                self.p, self.q
            )))
        }
    }
}

pub fn classify_algebra(spec: AlgebraSpec) -> Result<AlgebraClass> {
    spec.check_finite()?;
    let d = spec.discriminant();
    Ok(if d.abs() <= DUAL_TOLERANCE {
        AlgebraClass::DualIso
    } else if d < 0.0 {
        AlgebraClass::ComplexIso
    } else {
        AlgebraClass::PerplexIso
    })
}

/// For a complex-class algebra, returns `(shift, scale)` such that
/// `i = shift + scale·J` with `J² = -1`.
pub fn complex_isomorphism_params(spec: AlgebraSpec) -> Result<(f64, f64)> {
    match classify_algebra(spec)? {
        AlgebraClass::ComplexIso => {
            let k = (-spec.discriminant()).sqrt();
            Ok((spec.q / 2.0, k))
        }
        other => Err(Error::Domain(format!(
            "algebra i² = {} + {}·i is {other}, not complex-isomorphic",
            spec.p, spec.q
        ))),
    }
}

/// Algebra whose squaring rule reproduces the ε-family map.
///
/// In the basis `e₁ = (1,0)`, `e₂ = (0,1)` the ε-map squares as
/// `e₁² = (1-ε, -ε)`, `e₂² = (-ε, 1-ε)`, `e₁e₂ = (ε, ε)`, the identity is
/// `e₁ + e₂` and the imaginary unit `i = e₁ - e₂` squares to `(1 - 4ε)·1`.
pub fn induced_algebra_epsilon(eps: f64) -> Result<AlgebraSpec> {
    if !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "eps must be finite, got {eps}"
        )));
    }
    Ok(AlgebraSpec::new(1.0 - 4.0 * eps, 0.0))
}

/// Algebra `i² = -1 + b·i` behind the b-family map.
pub fn induced_algebra_b(b: f64) -> Result<AlgebraSpec> {
    if !b.is_finite() {
        return Err(Error::InvalidArgument(format!("b must be finite, got {b}")));
    }
    Ok(AlgebraSpec::new(-1.0, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn class(p: f64, q: f64) -> AlgebraClass {
        classify_algebra(AlgebraSpec::new(p, q)).unwrap()
    }

    #[test]
    fn classification_examples() {
        assert_eq!(class(-1.0, 0.0), AlgebraClass::ComplexIso);
        assert_eq!(class(0.0, 0.0), AlgebraClass::DualIso);
        assert_eq!(class(-1.0, 2.0), AlgebraClass::DualIso);
        assert_eq!(class(1.0, 0.0), AlgebraClass::PerplexIso);
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(matches!(
            classify_algebra(AlgebraSpec::new(f64::NAN, 0.0)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(classify_algebra(AlgebraSpec::new(0.0, f64::INFINITY)).is_err());
        assert!(induced_algebra_epsilon(f64::NAN).is_err());
        assert!(induced_algebra_b(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn isomorphism_examples() {
        assert_eq!(
            complex_isomorphism_params(AlgebraSpec::new(-1.0, 0.0)).unwrap(),
            (0.0, 1.0)
        );
        let (s, k) = complex_isomorphism_params(AlgebraSpec::new(-1.0, 1.0)).unwrap();
        assert_eq!(s, 0.5);
        assert!((k - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((k - 0.866_025_403_784_438_6).abs() < 1e-15);
        assert_eq!(
            complex_isomorphism_params(AlgebraSpec::new(-4.0, 0.0)).unwrap(),
            (0.0, 2.0)
        );
    }

    #[test]
    fn isomorphism_rejects_other_classes() {
        assert!(matches!(
            complex_isomorphism_params(AlgebraSpec::new(0.0, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            complex_isomorphism_params(AlgebraSpec::new(1.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn epsilon_algebra_examples() {
        let a = induced_algebra_epsilon(0.5).unwrap();
        assert_eq!(a, AlgebraSpec::new(-1.0, 0.0));
        assert_eq!(classify_algebra(a).unwrap(), AlgebraClass::ComplexIso);
        let a = induced_algebra_epsilon(0.25).unwrap();
        assert_eq!(a, AlgebraSpec::new(0.0, 0.0));
        assert_eq!(classify_algebra(a).unwrap(), AlgebraClass::DualIso);
        let a = induced_algebra_epsilon(0.0).unwrap();
        assert_eq!(a, AlgebraSpec::new(1.0, 0.0));
        assert_eq!(classify_algebra(a).unwrap(), AlgebraClass::PerplexIso);
    }

    /// Recovers the algebra from the ε-map itself by polarizing its quadratic
    /// part: evaluate the squaring at (1,0), (0,1), (1,1) and expand
    /// `(e₁ - e₂)²`.
    #[test]
    fn epsilon_algebra_matches_polarization() {
        fn square(eps: f64, x: f64, y: f64) -> (f64, f64) {
            (x * x - eps * (y - x).powi(2), y * y - eps * (x - y).powi(2))
        }
        for &eps in &[0.0, 0.1, 0.25, 0.3, 0.5, 0.75, -0.4] {
            let e1 = square(eps, 1.0, 0.0);
            let e2 = square(eps, 0.0, 1.0);
            let sum = square(eps, 1.0, 1.0);
            // (e1 + e2)² = e1² + 2 e1e2 + e2²
            let e1e2 = ((sum.0 - e1.0 - e2.0) / 2.0, (sum.1 - e1.1 - e2.1) / 2.0);
            let i_sq = (e1.0 - 2.0 * e1e2.0 + e2.0, e1.1 - 2.0 * e1e2.1 + e2.1);
            // identity element (1,1) squares to itself
            assert_eq!(sum, (1.0, 1.0));
            let expected = induced_algebra_epsilon(eps).unwrap();
            assert!((i_sq.0 - expected.p).abs() < 1e-12, "eps={eps}");
            assert!((i_sq.1 - expected.p).abs() < 1e-12, "eps={eps}");
        }
    }

    #[test]
    fn b_algebra_examples() {
        let a = induced_algebra_b(0.0).unwrap();
        assert_eq!(a, AlgebraSpec::new(-1.0, 0.0));
        assert_eq!(classify_algebra(a).unwrap(), AlgebraClass::ComplexIso);
        let a = induced_algebra_b(-2.0).unwrap();
        assert_eq!(a, AlgebraSpec::new(-1.0, -2.0));
        assert_eq!(classify_algebra(a).unwrap(), AlgebraClass::DualIso);
        let a = induced_algebra_b(-3.0).unwrap();
        assert_eq!(classify_algebra(a).unwrap(), AlgebraClass::PerplexIso);
        assert_eq!(
            classify_algebra(induced_algebra_b(2.0).unwrap()).unwrap(),
            AlgebraClass::DualIso
        );
    }

    proptest! {
        #[test]
        fn class_is_symmetric_in_q(p in -10.0f64..10.0, q in -10.0f64..10.0) {
            prop_assert_eq!(class(p, q), class(p, -q));
        }

        #[test]
        fn epsilon_family_classes(eps in -2.0f64..2.0) {
            let c = classify_algebra(induced_algebra_epsilon(eps).unwrap()).unwrap();
            if eps > 0.25 + 1e-9 {
                prop_assert_eq!(c, AlgebraClass::ComplexIso);
            } else if eps < 0.25 - 1e-9 {
                prop_assert_eq!(c, AlgebraClass::PerplexIso);
            }
        }

        #[test]
        fn b_family_classes(b in -5.0f64..5.0) {
            let c = classify_algebra(induced_algebra_b(b).unwrap()).unwrap();
            if b.abs() < 2.0 - 1e-9 {
                prop_assert_eq!(c, AlgebraClass::ComplexIso);
            } else if b.abs() > 2.0 + 1e-9 {
                prop_assert_eq!(c, AlgebraClass::PerplexIso);
            }
        }

        #[test]
        fn isomorphism_squares_correctly(p in -10.0f64..0.0, q in -3.0f64..3.0) {
            let spec = AlgebraSpec::new(p, q);
            prop_assume!(spec.discriminant() < -1e-6);
            let (shift, scale) = complex_isomorphism_params(spec).unwrap();
            prop_assert!(scale > 0.0);
            prop_assert!((shift * shift - scale * scale - (p + q * shift)).abs() < 1e-12 * (1.0 + p.abs() + q * q));
            prop_assert!((2.0 * shift * scale - q * scale).abs() < 1e-12);
        }
    }
}
