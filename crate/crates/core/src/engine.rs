//! Escape-time membership of the zero orbit, pointwise and over raster grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{self, MapFamily, ParamPoint, PlanePoint};

/// Iteration budget for still images.
pub const DEFAULT_MAX_ITER: u32 = 1000;
/// Iteration budget for sweep previews.
pub const PREVIEW_MAX_ITER: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeParams {
    pub max_iter: u32,
    /// Escape happens when the Euclidean norm strictly exceeds this.
    pub escape_radius: f64,
    /// When set, orbits that return within this distance (per component)
    /// of an earlier point are reported as members without spending the
    /// rest of the budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_tol: Option<f64>,
}

impl EscapeParams {
    pub fn new(max_iter: u32, escape_radius: f64) -> Self {
        EscapeParams {
            max_iter,
            escape_radius,
            cycle_tol: None,
        }
    }

    /// R = 2 suffices for the classical map; the perturbed families use R = 4.
    pub fn default_radius(family: MapFamily) -> f64 {
        match family {
            MapFamily::Classical => 2.0,
            _ => 4.0,
        }
    }

    pub fn still(family: MapFamily) -> Self {
        Self::new(DEFAULT_MAX_ITER, Self::default_radius(family))
    }

    pub fn preview(family: MapFamily) -> Self {
        Self::new(PREVIEW_MAX_ITER, Self::default_radius(family))
    }

    pub fn with_cycle_check(mut self, tol: f64) -> Self {
        self.cycle_tol = Some(tol);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.escape_radius > 0.0 && self.escape_radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "escape radius must be positive and finite, got {}",
                self.escape_radius
            )));
        }
        if let Some(tol) = self.cycle_tol {
            if !(tol > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "cycle tolerance must be > 0, got {tol}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EscapeResult {
    /// First step `n` (1-based) at which the orbit left the disk.
    Escaped(u32),
    Member,
}

impl EscapeResult {
    pub fn is_member(self) -> bool {
        matches!(self, EscapeResult::Member)
    }
}

/// Squared-norm escape test. NaN compares false, so non-finite states count
/// as escaped; radii whose square overflows fall back to `hypot`.
#[derive(Clone, Copy)]
struct EscapeTest {
    radius: f64,
    r2: f64,
    overflow: bool,
}

impl EscapeTest {
    fn new(radius: f64) -> Self {
        let r2 = radius * radius;
        EscapeTest {
            radius,
            r2,
            overflow: !r2.is_finite(),
        }
    }

    #[inline(always)]
    fn escaped(&self, s: PlanePoint) -> bool {
        !(s.norm_sqr() <= self.r2) || (self.overflow && !(s.x.hypot(s.y) <= self.radius))
    }
}

#[inline(always)]
fn close(a: PlanePoint, b: PlanePoint, tol: f64) -> bool {
    (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol
}

#[inline(always)]
fn iterate<F>(f: F, params: &EscapeParams) -> EscapeResult
where
    F: Fn(PlanePoint) -> PlanePoint,
{
    let test = EscapeTest::new(params.escape_radius);
    let mut s = PlanePoint::ORIGIN;
    match params.cycle_tol {
        None => {
            for n in 1..=params.max_iter {
                s = f(s);
                if test.escaped(s) {
                    return EscapeResult::Escaped(n);
                }
            }
        }
        Some(tol) => {
            let mut saved = s;
            let mut next_save = 1u32;
            for n in 1..=params.max_iter {
                s = f(s);
                if test.escaped(s) {
                    return EscapeResult::Escaped(n);
                }
                if close(s, saved, tol) {
                    return EscapeResult::Member;
                }
                if n == next_save {
                    saved = s;
                    next_save = next_save.saturating_mul(2);
                }
            }
        }
    }
    EscapeResult::Member
}

/// Iterates `s₀ = 0`, `s_{k+1} = step(s_k, c)` and reports the first step
/// whose norm strictly exceeds the escape radius.
pub fn escape_time(family: MapFamily, c: ParamPoint, params: &EscapeParams) -> EscapeResult {
    // Dispatch once so the inner loop is monomorphic.
    match family {
        MapFamily::Classical => iterate(|s| maps::classical_step(s, c), params),
        MapFamily::EpsilonAlgebra { eps } => iterate(|s| maps::epsilon_step(eps, s, c), params),
        MapFamily::ConjugatePerturbed { a } => iterate(|s| maps::conjugate_step(a, s, c), params),
        MapFamily::AlphaFamily { alpha } => iterate(|s| maps::alpha_step(alpha, s, c), params),
        MapFamily::BAlgebra { b } => iterate(|s| maps::balgebra_step(b, s, c), params),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    /// `s₀ = (0,0)` followed by each finite iterate.
    pub points: Vec<PlanePoint>,
    /// Set when iteration stopped early because an iterate was non-finite.
    pub truncated: bool,
}

pub fn orbit(family: MapFamily, c: ParamPoint, n_steps: usize) -> Orbit {
    let mut points = Vec::with_capacity(n_steps + 1);
    let mut s = PlanePoint::ORIGIN;
    points.push(s);
    for _ in 0..n_steps {
        s = maps::step(family, s, c);
        if !s.is_finite() {
            return Orbit {
                points,
                truncated: true,
            };
        }
        points.push(s);
    }
    Orbit {
        points,
        truncated: false,
    }
}

/// Returns the period of the zero orbit if it comes back within `tol` of an
/// earlier iterate before escaping (Brent-style power-of-two checkpoints).
pub fn detect_cycle(
    family: MapFamily,
    c: ParamPoint,
    params: &EscapeParams,
    tol: f64,
) -> Option<u32> {
    let test = EscapeTest::new(params.escape_radius);
    let mut s = PlanePoint::ORIGIN;
    let mut saved = s;
    let mut saved_at = 0u32;
    let mut next_save = 1u32;
    for n in 1..=params.max_iter {
        s = maps::step(family, s, c);
        if test.escaped(s) {
            return None;
        }
        if close(s, saved, tol) {
            return Some(n - saved_at);
        }
        if n == next_save {
            saved = s;
            saved_at = n;
            next_save = next_save.saturating_mul(2);
        }
    }
    None
}

/// Rectangle of the parameter plane sampled at `width × height` pixel centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub min_c1: f64,
    pub max_c1: f64,
    pub min_c2: f64,
    pub max_c2: f64,
    pub width_px: usize,
    pub height_px: usize,
}

impl Viewport {
    pub fn new(
        (min_c1, max_c1): (f64, f64),
        (min_c2, max_c2): (f64, f64),
        width_px: usize,
        height_px: usize,
    ) -> Self {
        Viewport {
            min_c1,
            max_c1,
            min_c2,
            max_c2,
            width_px,
            height_px,
        }
    }

    /// `[-2.5, 1.5] × [-2, 2]`, which contains the whole classical set.
    pub fn classical(width_px: usize, height_px: usize) -> Self {
        Self::new((-2.5, 1.5), (-2.0, 2.0), width_px, height_px)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.min_c1, self.max_c1, self.min_c2, self.max_c2]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.min_c1 < self.max_c1) || !(self.min_c2 < self.max_c2) {
            return Err(Error::InvalidArgument(format!(
                "viewport bounds must be finite with min < max, got [{}, {}] x [{}, {}]",
                self.min_c1, self.max_c1, self.min_c2, self.max_c2
            )));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::InvalidArgument(
                "viewport pixel counts must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width_px * self.height_px
    }

    /// Parameter-plane area covered by one pixel.
    pub fn pixel_area(&self) -> f64 {
        ((self.max_c1 - self.min_c1) / self.width_px as f64)
            * ((self.max_c2 - self.min_c2) / self.height_px as f64)
    }

    /// Center of pixel `(col, row)`; row 0 is at the top (`max_c2`).
    ///
    /// Offsets are taken from the viewport midpoint using the integer
    /// `2i + 1 - n`, so mirrored pixels of a symmetric viewport land on
    /// exactly negated coordinates.
    pub fn pixel_center(&self, col: usize, row: usize) -> ParamPoint {
        let w = self.width_px as f64;
        let h = self.height_px as f64;
        let dx = (self.max_c1 - self.min_c1) / w;
        let dy = (self.max_c2 - self.min_c2) / h;
        let mid_x = 0.5 * (self.min_c1 + self.max_c1);
        let mid_y = 0.5 * (self.min_c2 + self.max_c2);
        let ox = (2 * col as i64 + 1 - self.width_px as i64) as f64 * 0.5;
        let oy = (self.height_px as i64 - 1 - 2 * row as i64) as f64 * 0.5;
        ParamPoint::new(mid_x + ox * dx, mid_y + oy * dy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeGrid {
    pub viewport: Viewport,
    pub family: MapFamily,
    pub params: EscapeParams,
    /// Row-major, `width_px * height_px` entries.
    pub cells: Vec<EscapeResult>,
}

impl EscapeGrid {
    pub fn width(&self) -> usize {
        self.viewport.width_px
    }

    pub fn height(&self) -> usize {
        self.viewport.height_px
    }

    pub fn get(&self, col: usize, row: usize) -> EscapeResult {
        self.cells[row * self.viewport.width_px + col]
    }

    pub fn member_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_member()).count()
    }

    pub fn area_estimate(&self) -> f64 {
        self.member_count() as f64 * self.viewport.pixel_area()
    }

    /// The grid flipped top to bottom.
    pub fn vertical_mirror(&self) -> EscapeGrid {
        let w = self.width();
        let cells = self
            .cells
            .chunks_exact(w)
            .rev()
            .flatten()
            .copied()
            .collect();
        EscapeGrid {
            cells,
            ..self.clone()
        }
    }
}

/// Evaluates every pixel center of the viewport in parallel on the current
/// rayon pool. Cells depend only on their own coordinates, so the result is
/// the same for any number of workers.
pub fn compute_grid(
    family: MapFamily,
    viewport: Viewport,
    params: EscapeParams,
) -> Result<EscapeGrid> {
    family.validate()?;
    viewport.validate()?;
    params.validate()?;

    let n = viewport
        .width_px
        .checked_mul(viewport.height_px)
        .ok_or_else(|| Error::Resource("grid dimensions overflow".into()))?;
    let mut cells: Vec<EscapeResult> = Vec::new();
    cells
        .try_reserve_exact(n)
        .map_err(|e| Error::Resource(format!("cannot allocate {n} grid cells: {e}")))?;
    cells.resize(n, EscapeResult::Member);

    cells
        .par_chunks_mut(viewport.width_px)
        .enumerate()
        .for_each(|(row, line)| {
            for (col, cell) in line.iter_mut().enumerate() {
                *cell = escape_time(family, viewport.pixel_center(col, row), &params);
            }
        });

    Ok(EscapeGrid {
        viewport,
        family,
        params,
        cells,
    })
}

/// Runs `f` on a dedicated pool with `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CLASSICAL: MapFamily = MapFamily::Classical;

    fn c(c1: f64, c2: f64) -> ParamPoint {
        ParamPoint::new(c1, c2)
    }

    #[test]
    fn escape_examples() {
        for &(n, r) in &[(1, 2.0), (50, 2.0), (1000, 10.0)] {
            assert_eq!(
                escape_time(CLASSICAL, c(0.0, 0.0), &EscapeParams::new(n, r)),
                EscapeResult::Member
            );
        }
        assert_eq!(
            escape_time(CLASSICAL, c(1.0, 0.0), &EscapeParams::new(100, 2.0)),
            EscapeResult::Escaped(3)
        );
        assert_eq!(
            escape_time(CLASSICAL, c(-2.0, 0.0), &EscapeParams::new(1000, 2.0)),
            EscapeResult::Member
        );
        assert_eq!(
            escape_time(
                MapFamily::ConjugatePerturbed { a: 0.3 },
                c(0.0, 0.0),
                &EscapeParams::new(500, 4.0)
            ),
            EscapeResult::Member
        );
    }

    #[test]
    fn non_finite_counts_as_escaped() {
        let huge = f64::MAX.sqrt() * 4.0;
        let r = escape_time(CLASSICAL, c(huge, 0.0), &EscapeParams::new(10, f64::MAX));
        assert!(matches!(r, EscapeResult::Escaped(n) if n <= 2));
    }

    #[test]
    fn orbit_examples() {
        let o = orbit(CLASSICAL, c(1.0, 0.0), 3);
        assert_eq!(
            o.points,
            vec![
                PlanePoint::new(0.0, 0.0),
                PlanePoint::new(1.0, 0.0),
                PlanePoint::new(2.0, 0.0),
                PlanePoint::new(5.0, 0.0)
            ]
        );
        assert!(!o.truncated);
        assert_eq!(
            orbit(MapFamily::AlphaFamily { alpha: 2.0 }, c(1.0, 0.0), 3),
            o
        );
        let o = orbit(CLASSICAL, c(0.0, 1.0), 2);
        assert_eq!(
            o.points,
            vec![
                PlanePoint::new(0.0, 0.0),
                PlanePoint::new(0.0, 1.0),
                PlanePoint::new(-1.0, 1.0)
            ]
        );
    }

    #[test]
    fn orbit_truncates_on_overflow() {
        let o = orbit(CLASSICAL, c(1e200, 0.0), 10);
        assert!(o.truncated);
        assert_eq!(o.points.len(), 2);
        assert!(o.points.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn cycle_examples() {
        let p = EscapeParams::new(1000, 2.0);
        assert_eq!(detect_cycle(CLASSICAL, c(0.0, 0.0), &p, 1e-12), Some(1));
        assert_eq!(detect_cycle(CLASSICAL, c(-1.0, 0.0), &p, 1e-12), Some(2));
        assert_eq!(detect_cycle(CLASSICAL, c(1.0, 0.0), &p, 1e-12), None);
        // attracting 3-cycle of the airplane-adjacent window
        assert_eq!(
            detect_cycle(CLASSICAL, c(-1.7548776662466927, 0.0), &p, 1e-9),
            Some(3)
        );
    }

    #[test]
    fn param_validation() {
        assert!(EscapeParams::new(0, 2.0).validate().is_err());
        assert!(EscapeParams::new(1, 0.0).validate().is_err());
        assert!(EscapeParams::new(1, f64::NAN).validate().is_err());
        assert!(EscapeParams::new(1, 2.0)
            .with_cycle_check(0.0)
            .validate()
            .is_err());
        assert!(Viewport::new((1.0, 1.0), (0.0, 1.0), 4, 4)
            .validate()
            .is_err());
        assert!(Viewport::new((0.0, 1.0), (0.0, 1.0), 0, 4)
            .validate()
            .is_err());
        assert!(compute_grid(
            CLASSICAL,
            Viewport::classical(0, 3),
            EscapeParams::new(10, 2.0)
        )
        .is_err());
        assert!(compute_grid(
            MapFamily::AlphaFamily { alpha: f64::NAN },
            Viewport::classical(2, 2),
            EscapeParams::new(10, 2.0)
        )
        .is_err());
    }

    #[test]
    fn pixel_centers() {
        let v = Viewport::new((0.0, 4.0), (0.0, 2.0), 4, 2);
        assert_eq!(v.pixel_center(0, 0), c(0.5, 1.5));
        assert_eq!(v.pixel_center(3, 1), c(3.5, 0.5));
        assert_eq!(v.pixel_area(), 1.0);
        let v = Viewport::classical(512, 512);
        for row in 0..256 {
            let a = v.pixel_center(7, row);
            let b = v.pixel_center(7, 511 - row);
            assert_eq!(a.c2, -b.c2);
            assert_eq!(a.c1, b.c1);
        }
    }

    #[test]
    fn grid_contains_origin_member() {
        let v = Viewport::classical(512, 512);
        let g = compute_grid(CLASSICAL, v, EscapeParams::new(256, 2.0)).unwrap();
        // c1 = -2.5 + (i + 0.5) * 4/512 is nearest 0 at i = 319 or 320
        let col = (0..512)
            .min_by(|&a, &b| {
                v.pixel_center(a, 0)
                    .c1
                    .abs()
                    .partial_cmp(&v.pixel_center(b, 0).c1.abs())
                    .unwrap()
            })
            .unwrap();
        let row = (0..512)
            .min_by(|&a, &b| {
                v.pixel_center(0, a)
                    .c2
                    .abs()
                    .partial_cmp(&v.pixel_center(0, b).c2.abs())
                    .unwrap()
            })
            .unwrap();
        assert_eq!(g.get(col, row), EscapeResult::Member);
    }

    #[test]
    fn degenerate_grid() {
        let center = c(-0.75, 0.125);
        let v = Viewport::new((-1.0, -0.5), (0.0, 0.25), 1, 1);
        assert_eq!(v.pixel_center(0, 0), center);
        for family in [
            CLASSICAL,
            MapFamily::EpsilonAlgebra { eps: 0.3 },
            MapFamily::ConjugatePerturbed { a: 0.2 },
            MapFamily::AlphaFamily { alpha: 0.7 },
            MapFamily::BAlgebra { b: -1.0 },
        ] {
            let p = EscapeParams::still(family);
            let g = compute_grid(family, v, p).unwrap();
            assert_eq!(g.cells, vec![escape_time(family, center, &p)]);
        }
    }

    #[test]
    fn classical_grid_is_mirror_symmetric() {
        for &(w, h) in &[(64, 64), (37, 50), (100, 2)] {
            let g = compute_grid(
                CLASSICAL,
                Viewport::classical(w, h),
                EscapeParams::new(200, 2.0),
            )
            .unwrap();
            assert_eq!(g.vertical_mirror().cells, g.cells, "{w}x{h}");
        }
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let v = Viewport::classical(96, 80);
        let f = MapFamily::ConjugatePerturbed { a: 0.3 };
        let p = EscapeParams::preview(f);
        let one = with_threads(1, || compute_grid(f, v, p)).unwrap().unwrap();
        let three = with_threads(3, || compute_grid(f, v, p)).unwrap().unwrap();
        assert_eq!(one.cells, three.cells);
    }

    #[test]
    fn cycle_check_preserves_classification() {
        let v = Viewport::classical(256, 256);
        let plain = EscapeParams::new(1000, 2.0);
        let fast = plain.with_cycle_check(1e-12);
        let a = compute_grid(CLASSICAL, v, plain).unwrap();
        let b = compute_grid(CLASSICAL, v, fast).unwrap();
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.is_member(), y.is_member());
            if let EscapeResult::Escaped(_) = y {
                assert_eq!(x, y);
            }
        }
    }

    proptest! {
        #[test]
        fn monotone_in_budget(c1 in -2.5f64..1.5, c2 in -2.0f64..2.0, extra in 0u32..500) {
            let r = escape_time(CLASSICAL, c(c1, c2), &EscapeParams::new(300, 2.0));
            if let EscapeResult::Escaped(n) = r {
                let r2 = escape_time(CLASSICAL, c(c1, c2), &EscapeParams::new(n + extra, 2.0));
                prop_assert_eq!(r2, EscapeResult::Escaped(n));
            }
        }

        #[test]
        fn escaped_step_within_budget(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, n in 1u32..200, a in -0.5f64..0.5) {
            let p = EscapeParams::new(n, 4.0);
            if let EscapeResult::Escaped(k) = escape_time(MapFamily::ConjugatePerturbed { a }, c(c1, c2), &p) {
                prop_assert!(k >= 1 && k <= n);
            }
        }

        #[test]
        fn classical_membership_monotone_in_radius(c1 in -2.5f64..1.5, c2 in -2.0f64..2.0, r in 2.0f64..50.0) {
            let small = escape_time(CLASSICAL, c(c1, c2), &EscapeParams::new(300, 2.0));
            let large = escape_time(CLASSICAL, c(c1, c2), &EscapeParams::new(300, r));
            if small.is_member() {
                prop_assert!(large.is_member());
            }
        }
    }
}
