//! Analytic oracles and seeded cross-checks tying the engine to known
//! ground truth: the real slice and main cardioid of the classical set, the
//! exact reduction identities between families, and the ε = 1/2 conjugacy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::engine::{escape_time, EscapeParams};
use crate::error::{Error, Result};
use crate::maps::{self, Direction, MapFamily, ParamPoint, PlanePoint};

pub const DEFAULT_SEED: u64 = 20_250_101;
pub const DEFAULT_SAMPLES: usize = 10_000;
/// Largest mismatch rate tolerated by the ε = 1/2 conjugacy check.
pub const EPSILON_HALF_MAX_RATE: f64 = 1e-3;
/// Orbits whose peak norm is this close to the radius may legitimately
/// classify differently under the two coordinate systems.
pub const GRAZING_TOL: f64 = 1e-9;
/// Half-width of the sampling square `[-3, 3]²`.
pub const SAMPLE_HALF_WIDTH: f64 = 3.0;

/// Exact bounded-orbit interval of `x ↦ x² + c1` from `x = 0`.
pub fn real_axis_oracle(c1: f64) -> bool {
    (-2.0..=0.25).contains(&c1)
}

/// Whether `c = μ/2 − μ²/4` for some `|μ| < 1`, i.e. `c` lies inside the
/// main cardioid where the classical map has an attracting fixed point.
pub fn cardioid_interior_test(c: ParamPoint) -> bool {
    // μ² − 2μ + 4c = 0  ⇒  μ = 1 ± √(1 − 4c)
    let (sr, si) = complex_sqrt(1.0 - 4.0 * c.c1, -4.0 * c.c2);
    [(1.0 + sr, si), (1.0 - sr, -si)]
        .iter()
        .any(|&(re, im)| re * re + im * im < 1.0)
}

/// Principal square root of `re + i·im`.
fn complex_sqrt(re: f64, im: f64) -> (f64, f64) {
    let r = re.hypot(im);
    let a = ((r + re) / 2.0).max(0.0).sqrt();
    let b = ((r - re) / 2.0).max(0.0).sqrt();
    (a, if im < 0.0 { -b } else { b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquivalenceKind {
    /// Conjugate-perturbed family at `a = 0`.
    #[serde(rename = "conj-zero")]
    ConjZero,
    /// α-family at `α = 2`.
    #[serde(rename = "alpha-two")]
    AlphaTwo,
    /// b-algebra family at `b = 0`.
    #[serde(rename = "b-zero")]
    BZero,
    /// ε-family at `ε = 1/2` in transformed coordinates.
    #[serde(rename = "epsilon-half")]
    EpsilonHalf,
}

impl EquivalenceKind {
    pub const ALL: [EquivalenceKind; 4] = [
        EquivalenceKind::ConjZero,
        EquivalenceKind::AlphaTwo,
        EquivalenceKind::BZero,
        EquivalenceKind::EpsilonHalf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EquivalenceKind::ConjZero => "conj-zero",
            EquivalenceKind::AlphaTwo => "alpha-two",
            EquivalenceKind::BZero => "b-zero",
            EquivalenceKind::EpsilonHalf => "epsilon-half",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown verification kind '{s}'")))
    }

    /// The family that should reproduce the classical map.
    pub fn family(self) -> MapFamily {
        match self {
            EquivalenceKind::ConjZero => MapFamily::ConjugatePerturbed { a: 0.0 },
            EquivalenceKind::AlphaTwo => MapFamily::AlphaFamily { alpha: 2.0 },
            EquivalenceKind::BZero => MapFamily::BAlgebra { b: 0.0 },
            EquivalenceKind::EpsilonHalf => MapFamily::EpsilonAlgebra { eps: 0.5 },
        }
    }
}

impl fmt::Display for EquivalenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub kind: EquivalenceKind,
    pub samples: usize,
    pub seed: u64,
    pub mismatches: usize,
    pub total: usize,
    /// Mismatches whose orbit peak norm lies within `GRAZING_TOL` of R.
    pub grazing: usize,
    pub pass: bool,
}

/// `n` points drawn uniformly from `[-3, 3]²`.
pub fn sample_square(n: usize, seed: u64) -> Vec<ParamPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            ParamPoint::new(
                rng.gen_range(-SAMPLE_HALF_WIDTH..=SAMPLE_HALF_WIDTH),
                rng.gen_range(-SAMPLE_HALF_WIDTH..=SAMPLE_HALF_WIDTH),
            )
        })
        .collect()
}

/// Largest orbit norm attained before escape or budget exhaustion.
fn peak_norm(family: MapFamily, c: ParamPoint, params: &EscapeParams) -> f64 {
    let mut s = PlanePoint::ORIGIN;
    let mut peak = 0.0f64;
    for _ in 0..params.max_iter {
        s = maps::step(family, s, c);
        let n = s.x.hypot(s.y);
        if !(n <= params.escape_radius) {
            return peak;
        }
        peak = peak.max(n);
    }
    peak
}

/// Compares the classical map against one of its reductions on seeded
/// random parameters. `params` are the classical escape parameters; for
/// the ε = 1/2 check the radius is scaled by √2, since the change of
/// variables multiplies Euclidean norms by √2.
pub fn equivalence_check(
    kind: EquivalenceKind,
    samples: usize,
    seed: u64,
    params: &EscapeParams,
) -> Result<EquivalenceReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    params.validate()?;
    let points = sample_square(samples, seed);
    let family = kind.family();
    let transformed = EscapeParams {
        escape_radius: params.escape_radius * std::f64::consts::SQRT_2,
        ..*params
    };

    let outcomes: Vec<(bool, bool)> = points
        .par_iter()
        .map(|&c| {
            let reference = escape_time(MapFamily::Classical, c, params);
            let other = match kind {
                EquivalenceKind::EpsilonHalf => escape_time(
                    family,
                    maps::epsilon_transform(Direction::ToEpsilon, c),
                    &transformed,
                ),
                _ => escape_time(family, c, params),
            };
            if reference == other {
                (false, false)
            } else {
                let peak = peak_norm(MapFamily::Classical, c, params);
                (true, (peak - params.escape_radius).abs() <= GRAZING_TOL)
            }
        })
        .collect();

    let mismatches = outcomes.iter().filter(|o| o.0).count();
    let grazing = outcomes.iter().filter(|o| o.1).count();
    let pass = match kind {
        EquivalenceKind::EpsilonHalf => mismatches as f64 / samples as f64 <= EPSILON_HALF_MAX_RATE,
        _ => mismatches == 0,
    };
    Ok(EquivalenceReport {
        kind,
        samples,
        seed,
        mismatches,
        total: samples,
        grazing,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub total: usize,
    /// Disagreements outside the tolerance bands.
    pub disagreements: usize,
    /// Disagreements inside the tolerance bands.
    pub excused: usize,
}

/// Classical escape on the real axis vs. the interval oracle, for `samples`
/// seeded points in `[lo, hi]`. Disagreements within 1e-6 of the parabolic
/// endpoint 1/4 or within 1e-9 of −2 are excused.
pub fn real_axis_agreement(
    samples: usize,
    seed: u64,
    (lo, hi): (f64, f64),
    params: &EscapeParams,
) -> AgreementReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs: Vec<f64> = (0..samples).map(|_| rng.gen_range(lo..=hi)).collect();
    let results: Vec<Option<bool>> = cs
        .par_iter()
        .map(|&c1| {
            let member =
                escape_time(MapFamily::Classical, ParamPoint::new(c1, 0.0), params).is_member();
            if member == real_axis_oracle(c1) {
                None
            } else {
                Some((c1 - 0.25).abs() < 1e-6 || (c1 + 2.0).abs() < 1e-9)
            }
        })
        .collect();
    AgreementReport {
        total: samples,
        disagreements: results.iter().filter(|r| **r == Some(false)).count(),
        excused: results.iter().filter(|r| **r == Some(true)).count(),
    }
}

/// ε = 0 membership vs. the product of two real-interval oracles in
/// `(λ₁, λ₂)`, sampling `[lo, hi]²`. Points within 1e-6 of an interval
/// endpoint in either coordinate are skipped.
pub fn perplex_rectangle_agreement(
    samples: usize,
    seed: u64,
    (lo, hi): (f64, f64),
    params: &EscapeParams,
) -> AgreementReport {
    let near_end = |v: f64| (v - 0.25).abs() <= 1e-6 || (v + 2.0).abs() <= 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<ParamPoint> = (0..samples)
        .map(|_| ParamPoint::new(rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)))
        .collect();
    let family = MapFamily::EpsilonAlgebra { eps: 0.0 };
    let results: Vec<Option<bool>> = pts
        .par_iter()
        .map(|&c| {
            let member = escape_time(family, c, params).is_member();
            let oracle = real_axis_oracle(c.c1) && real_axis_oracle(c.c2);
            if member == oracle {
                None
            } else {
                Some(near_end(c.c1) || near_end(c.c2))
            }
        })
        .collect();
    AgreementReport {
        total: samples,
        disagreements: results.iter().filter(|r| **r == Some(false)).count(),
        excused: results.iter().filter(|r| **r == Some(true)).count(),
    }
}
