//! Parametrized quadratic map families on the real plane.
//!
//! Each family is a one-step update `s ↦ F(s, c)` where `s = (x, y)` is the
//! state and `c = (c1, c2)` the parameter. All families reduce to the
//! classical map `z ↦ z² + c` at a distinguished parameter value.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        PlanePoint { x, y }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A point in the parameter plane. For the ε-family the pair is read as
/// `(λ₁, λ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamPoint {
    pub c1: f64,
    pub c2: f64,
}

impl ParamPoint {
    pub fn new(c1: f64, c2: f64) -> Self {
        ParamPoint { c1, c2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapFamily {
    /// `z ↦ z² + c`.
    Classical,
    /// `x ↦ x² − ε(y−x)² + λ₁`, `y ↦ y² − ε(x−y)² + λ₂`.
    #[serde(rename = "epsilon")]
    EpsilonAlgebra { eps: f64 },
    /// `z ↦ z² + c + a·z̄`.
    #[serde(rename = "conjugate")]
    ConjugatePerturbed { a: f64 },
    /// `x ↦ x² − y² + c1`, `y ↦ α·x·y + c2`.
    #[serde(rename = "alpha")]
    AlphaFamily { alpha: f64 },
    /// Squaring in the algebra `i² = −1 + b·i`.
    #[serde(rename = "balgebra")]
    BAlgebra { b: f64 },
}

/// The kind of a family without its parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Classical,
    Epsilon,
    Conjugate,
    Alpha,
    Balgebra,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Classical => "classical",
            FamilyKind::Epsilon => "epsilon",
            FamilyKind::Conjugate => "conjugate",
            FamilyKind::Alpha => "alpha",
            FamilyKind::Balgebra => "balgebra",
        }
    }

    pub fn parse(s: &str) -> Result<FamilyKind> {
        match s {
            "classical" => Ok(FamilyKind::Classical),
            "epsilon" => Ok(FamilyKind::Epsilon),
            "conjugate" => Ok(FamilyKind::Conjugate),
            "alpha" => Ok(FamilyKind::Alpha),
            "balgebra" => Ok(FamilyKind::Balgebra),
            other => Err(Error::InvalidArgument(format!("unknown family '{other}'"))),
        }
    }

    /// Instantiates the family at a parameter value. The classical family
    /// ignores it.
    pub fn with_param(self, value: f64) -> MapFamily {
        match self {
            FamilyKind::Classical => MapFamily::Classical,
            FamilyKind::Epsilon => MapFamily::EpsilonAlgebra { eps: value },
            FamilyKind::Conjugate => MapFamily::ConjugatePerturbed { a: value },
            FamilyKind::Alpha => MapFamily::AlphaFamily { alpha: value },
            FamilyKind::Balgebra => MapFamily::BAlgebra { b: value },
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl MapFamily {
    pub fn kind(&self) -> FamilyKind {
        match self {
            MapFamily::Classical => FamilyKind::Classical,
            MapFamily::EpsilonAlgebra { .. } => FamilyKind::Epsilon,
            MapFamily::ConjugatePerturbed { .. } => FamilyKind::Conjugate,
            MapFamily::AlphaFamily { .. } => FamilyKind::Alpha,
            MapFamily::BAlgebra { .. } => FamilyKind::Balgebra,
        }
    }

    /// The family parameter, `None` for the classical map.
    pub fn param(&self) -> Option<f64> {
        match *self {
            MapFamily::Classical => None,
            MapFamily::EpsilonAlgebra { eps } => Some(eps),
            MapFamily::ConjugatePerturbed { a } => Some(a),
            MapFamily::AlphaFamily { alpha } => Some(alpha),
            MapFamily::BAlgebra { b } => Some(b),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.param() {
            Some(v) if !v.is_finite() => Err(Error::InvalidArgument(format!(
                "{} family parameter must be finite, got {v}",
                self.kind()
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MapFamily::Classical => write!(f, "classical"),
            MapFamily::EpsilonAlgebra { eps } => write!(f, "epsilon(eps={eps})"),
            MapFamily::ConjugatePerturbed { a } => write!(f, "conjugate(a={a})"),
            MapFamily::AlphaFamily { alpha } => write!(f, "alpha(alpha={alpha})"),
            MapFamily::BAlgebra { b } => write!(f, "balgebra(b={b})"),
        }
    }
}

/// One application of the family's update rule.
#[inline]
pub fn step(family: MapFamily, s: PlanePoint, c: ParamPoint) -> PlanePoint {
    match family {
        MapFamily::Classical => classical_step(s, c),
        MapFamily::EpsilonAlgebra { eps } => epsilon_step(eps, s, c),
        MapFamily::ConjugatePerturbed { a } => conjugate_step(a, s, c),
        MapFamily::AlphaFamily { alpha } => alpha_step(alpha, s, c),
        MapFamily::BAlgebra { b } => balgebra_step(b, s, c),
    }
}

#[inline(always)]
pub(crate) fn classical_step(PlanePoint { x, y }: PlanePoint, c: ParamPoint) -> PlanePoint {
    PlanePoint {
        x: x * x - y * y + c.c1,
        y: 2.0 * x * y + c.c2,
    }
}

#[inline(always)]
pub(crate) fn epsilon_step(eps: f64, PlanePoint { x, y }: PlanePoint, c: ParamPoint) -> PlanePoint {
    // (x - y)² and (y - x)² are bitwise equal
    let d = y - x;
    let pert = eps * (d * d);
    PlanePoint {
        x: x * x - pert + c.c1,
        y: y * y - pert + c.c2,
    }
}

#[inline(always)]
pub(crate) fn conjugate_step(a: f64, PlanePoint { x, y }: PlanePoint, c: ParamPoint) -> PlanePoint {
    PlanePoint {
        x: x * x - y * y + c.c1 + a * x,
        y: 2.0 * x * y + c.c2 - a * y,
    }
}

#[inline(always)]
pub(crate) fn alpha_step(alpha: f64, PlanePoint { x, y }: PlanePoint, c: ParamPoint) -> PlanePoint {
    PlanePoint {
        x: x * x - y * y + c.c1,
        y: alpha * x * y + c.c2,
    }
}

#[inline(always)]
pub(crate) fn balgebra_step(b: f64, PlanePoint { x, y }: PlanePoint, c: ParamPoint) -> PlanePoint {
    PlanePoint {
        x: x * x - y * y + c.c1,
        y: 2.0 * x * y + b * y * y + c.c2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `(re, im) ↦ (re + im, re − im)`.
    ToEpsilon,
    /// `(u, v) ↦ ((u + v)/2, (u − v)/2)`.
    FromEpsilon,
}

/// Change of variables relating the classical map to the ε-family at
/// `ε = 1/2`. Applies equally to parameter and state points.
pub fn epsilon_transform(direction: Direction, pt: ParamPoint) -> ParamPoint {
    match direction {
        Direction::ToEpsilon => ParamPoint::new(pt.c1 + pt.c2, pt.c1 - pt.c2),
        Direction::FromEpsilon => ParamPoint::new((pt.c1 + pt.c2) / 2.0, (pt.c1 - pt.c2) / 2.0),
    }
}

pub fn epsilon_transform_state(direction: Direction, s: PlanePoint) -> PlanePoint {
    let p = epsilon_transform(direction, ParamPoint::new(s.x, s.y));
    PlanePoint::new(p.c1, p.c2)
}

/// Characteristic coordinates `(x + y, x − y)` in which perplex
/// multiplication splits into two independent real products.
pub fn characteristic_split(x: f64, y: f64) -> (f64, f64) {
    (x + y, x - y)
}
