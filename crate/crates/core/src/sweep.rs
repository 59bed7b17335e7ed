//! Parameter sweeps: frame sequences over a family parameter and the
//! area/boundary profile used to tell sharp transitions from smooth ones.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::engine::{compute_grid, EscapeGrid, EscapeParams, Viewport};
use crate::error::{Error, Result};
use crate::maps::{FamilyKind, MapFamily};
use crate::render::{boundary_pixel_count, write_image, ImageFormat, RenderMode};

/// Floor on the denominator of the relative area change.
pub const AREA_FLOOR: f64 = 1e-12;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const METRICS_HEADER: &str = "param,member_pixels,boundary_pixels,area_estimate";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: FamilyKind,
    /// First parameter value. May exceed `hi` for decreasing sweeps.
    pub lo: f64,
    pub hi: f64,
    pub frames: usize,
    pub viewport: Viewport,
    pub params: EscapeParams,
    pub format: ImageFormat,
    #[serde(default)]
    pub mode: RenderMode,
    pub outdir: PathBuf,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidArgument("sweep range must be finite".into()));
        }
        if self.frames == 0 {
            return Err(Error::InvalidArgument(
                "a sweep needs at least one frame".into(),
            ));
        }
        if self.frames == 1 && self.lo != self.hi {
            return Err(Error::InvalidArgument(
                "a single-frame sweep needs equal range endpoints".into(),
            ));
        }
        self.viewport.validate()?;
        self.params.validate()
    }

    /// `lo + k·(hi − lo)/(F − 1)`, with the last value pinned to `hi`.
    pub fn param_values(&self) -> Vec<f64> {
        let f = self.frames;
        if f <= 1 {
            return vec![self.lo; f];
        }
        let step = (self.hi - self.lo) / (f - 1) as f64;
        (0..f)
            .map(|k| {
                if k == f - 1 {
                    self.hi
                } else {
                    self.lo + k as f64 * step
                }
            })
            .collect()
    }

    pub fn family_at(&self, value: f64) -> MapFamily {
        self.family.with_param(value)
    }

    pub fn frame_name(&self, k: usize) -> String {
        format!("frame_{k:04}.{}", self.format.extension())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub param: f64,
    pub member_pixels: usize,
    pub boundary_pixels: usize,
    /// `member_pixels · pixel_area`, in parameter-plane units².
    pub area_estimate: f64,
}

impl ProfileRow {
    pub fn from_grid(param: f64, grid: &EscapeGrid) -> Self {
        let member_pixels = grid.member_count();
        ProfileRow {
            param,
            member_pixels,
            boundary_pixels: boundary_pixel_count(grid),
            area_estimate: member_pixels as f64 * grid.viewport.pixel_area(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransitionProfile {
    pub rows: Vec<ProfileRow>,
}

impl TransitionProfile {
    pub fn params(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.param).collect()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.area_estimate).collect()
    }

    /// `|A_{k+1} − A_k| / max(A_k, floor)` for each consecutive pair.
    pub fn relative_changes(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| relative_change(w[0].area_estimate, w[1].area_estimate))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(METRICS_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.param, r.member_pixels, r.boundary_pixels, r.area_estimate
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| {
            Error::InvalidArgument(format!("metrics line {}: {msg}", line + 1))
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == METRICS_HEADER => {}
            _ => return Err(bad(0, "missing or unexpected header")),
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i, "expected 4 columns"));
            }
            rows.push(ProfileRow {
                param: f[0].parse().map_err(|_| bad(i, "bad param"))?,
                member_pixels: f[1].parse().map_err(|_| bad(i, "bad member_pixels"))?,
                boundary_pixels: f[2].parse().map_err(|_| bad(i, "bad boundary_pixels"))?,
                area_estimate: f[3].parse().map_err(|_| bad(i, "bad area_estimate"))?,
            });
        }
        Ok(TransitionProfile { rows })
    }
}

pub fn relative_change(from: f64, to: f64) -> f64 {
    (to - from).abs() / from.max(AREA_FLOOR)
}

/// Computes the per-frame metrics without writing any images.
pub fn transition_profile(spec: &SweepSpec) -> Result<TransitionProfile> {
    spec.validate()?;
    let rows = spec
        .param_values()
        .into_iter()
        .map(|v| {
            let grid = compute_grid(spec.family_at(v), spec.viewport, spec.params)?;
            Ok(ProfileRow::from_grid(v, &grid))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionProfile { rows })
}

/// Parameter values `p_{k+1}` at which the relative area change from frame
/// `k` exceeds `threshold`.
pub fn detect_discontinuity(profile: &TransitionProfile, threshold: f64) -> Result<Vec<f64>> {
    if profile.rows.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "discontinuity detection needs at least 2 rows, got {}",
            profile.rows.len()
        )));
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be > 0, got {threshold}"
        )));
    }
    Ok(profile
        .rows
        .windows(2)
        .filter(|w| relative_change(w[0].area_estimate, w[1].area_estimate) > threshold)
        .map(|w| w[1].param)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub family: FamilyKind,
    pub params: Vec<f64>,
    pub files: Vec<String>,
    pub viewport: Viewport,
    pub escape_params: EscapeParams,
    pub format: ImageFormat,
    pub mode: RenderMode,
    /// False when an error stopped the sweep; `files` then lists only the
    /// frames that were written.
    pub complete: bool,
}

/// Renders every frame of the sweep into `spec.outdir` and writes
/// `manifest.json` and `metrics.csv` once all frames are done, or a partial
/// manifest if a frame fails.
pub fn generate_frames(spec: &SweepSpec) -> Result<Manifest> {
    spec.validate()?;
    fs::create_dir_all(&spec.outdir)?;

    let values = spec.param_values();
    let mut manifest = Manifest {
        family: spec.family,
        params: Vec::with_capacity(values.len()),
        files: Vec::with_capacity(values.len()),
        viewport: spec.viewport,
        escape_params: spec.params,
        format: spec.format,
        mode: spec.mode,
        complete: false,
    };
    let mut profile = TransitionProfile::default();

    for (k, &v) in values.iter().enumerate() {
        let name = spec.frame_name(k);
        let outcome = render_frame(spec, v, &spec.outdir.join(&name));
        match outcome {
            Ok(row) => {
                manifest.params.push(v);
                manifest.files.push(name);
                profile.rows.push(row);
            }
            Err(e) => {
                // best effort: the original error is what the caller needs
                let _ = write_outputs(&spec.outdir, &manifest, &profile);
                return Err(e);
            }
        }
    }

    manifest.complete = true;
    write_outputs(&spec.outdir, &manifest, &profile)?;
    Ok(manifest)
}

fn render_frame(spec: &SweepSpec, value: f64, path: &Path) -> Result<ProfileRow> {
    let grid = compute_grid(spec.family_at(value), spec.viewport, spec.params)?;
    write_image(&spec.mode.render(&grid), spec.format, path)?;
    Ok(ProfileRow::from_grid(value, &grid))
}

fn write_outputs(dir: &Path, manifest: &Manifest, profile: &TransitionProfile) -> Result<()> {
    let mut json = serde_json::to_string_pretty(manifest)?;
    json.push('\n');
    fs::write(dir.join(MANIFEST_FILE), json)?;
    fs::write(dir.join(METRICS_FILE), profile.to_csv())?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{decode_image, encode_image, membership_raster};

    fn spec(family: FamilyKind, lo: f64, hi: f64, frames: usize, dir: &Path) -> SweepSpec {
        SweepSpec {
            family,
            lo,
            hi,
            frames,
            viewport: Viewport::new((-2.0, 1.0), (-1.5, 1.5), 48, 40),
            params: EscapeParams::new(64, 4.0),
            format: ImageFormat::Pgm,
            mode: RenderMode::Membership,
            outdir: dir.to_path_buf(),
        }
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn parameter_spacing() {
        let d = Path::new("unused");
        let s = spec(FamilyKind::Conjugate, 0.1, 0.5, 5, d);
        assert!(close(&s.param_values(), &[0.1, 0.2, 0.3, 0.4, 0.5]));
        assert_eq!(*s.param_values().last().unwrap(), 0.5);
        let s = spec(FamilyKind::Alpha, 1.1, 0.5, 4, d);
        assert!(close(&s.param_values(), &[1.1, 0.9, 0.7, 0.5]));
        let s = spec(FamilyKind::Classical, 0.0, 0.0, 1, d);
        assert_eq!(s.param_values(), vec![0.0]);
        let s = spec(FamilyKind::Epsilon, 0.2, 0.3, 11, d);
        assert_eq!(s.param_values()[5], 0.25);
        let s = spec(FamilyKind::Balgebra, -2.5, -1.5, 11, d);
        assert_eq!(s.param_values()[5], -2.0);
    }

    #[test]
    fn spec_validation() {
        let d = Path::new("unused");
        assert!(spec(FamilyKind::Alpha, 0.0, 1.0, 0, d).validate().is_err());
        assert!(spec(FamilyKind::Alpha, 0.0, 1.0, 1, d).validate().is_err());
        assert!(spec(FamilyKind::Alpha, 1.0, 1.0, 1, d).validate().is_ok());
        assert!(spec(FamilyKind::Alpha, f64::NAN, 1.0, 3, d)
            .validate()
            .is_err());
    }

    #[test]
    fn discontinuity_examples() {
        let profile = |areas: &[f64]| TransitionProfile {
            rows: areas
                .iter()
                .enumerate()
                .map(|(i, &a)| ProfileRow {
                    param: i as f64,
                    member_pixels: 0,
                    boundary_pixels: 0,
                    area_estimate: a,
                })
                .collect(),
        };
        assert_eq!(
            detect_discontinuity(&profile(&[1.0, 1.0, 0.2]), 0.5).unwrap(),
            vec![2.0]
        );
        assert!(detect_discontinuity(&profile(&[3.0; 6]), 1e-9)
            .unwrap()
            .is_empty());
        assert!(detect_discontinuity(&profile(&[1.0]), 0.5).is_err());
        assert!(detect_discontinuity(&profile(&[1.0, 2.0]), 0.0).is_err());
        // zero area is floored rather than divided by
        assert_eq!(
            detect_discontinuity(&profile(&[0.0, 1e-3]), 0.5).unwrap(),
            vec![1.0]
        );
    }

    #[test]
    fn constant_family_profile() {
        let s = spec(FamilyKind::Classical, 0.3, 0.3, 3, Path::new("unused"));
        let p = transition_profile(&s).unwrap();
        assert_eq!(p.rows.len(), 3);
        assert!(p.rows.windows(2).all(|w| w[0] == w[1]));
        let r = p.rows[0];
        assert_eq!(
            r.area_estimate,
            r.member_pixels as f64 * s.viewport.pixel_area()
        );
    }

    #[test]
    fn csv_round_trip() {
        let s = spec(FamilyKind::Conjugate, 0.0, 0.4, 3, Path::new("unused"));
        let p = transition_profile(&s).unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("param,member_pixels,boundary_pixels,area_estimate\n"));
        assert_eq!(TransitionProfile::from_csv(&csv).unwrap(), p);
        assert!(TransitionProfile::from_csv("a,b\n").is_err());
    }

    #[test]
    fn frames_match_standalone_renders() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(FamilyKind::Conjugate, 0.1, 0.5, 5, dir.path());
        let manifest = generate_frames(&s).unwrap();
        assert!(manifest.complete);
        assert_eq!(manifest.files[4], "frame_0004.pgm");
        assert_eq!(read_manifest(dir.path()).unwrap(), manifest);
        for (k, &v) in manifest.params.iter().enumerate() {
            let grid = compute_grid(s.family_at(v), s.viewport, s.params).unwrap();
            let expected = encode_image(&membership_raster(&grid), ImageFormat::Pgm).unwrap();
            let written = fs::read(dir.path().join(&manifest.files[k])).unwrap();
            assert_eq!(written, expected);
            assert_eq!(decode_image(&written).unwrap(), membership_raster(&grid));
        }
        let csv = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
        assert_eq!(
            TransitionProfile::from_csv(&csv).unwrap(),
            transition_profile(&s).unwrap()
        );
    }

    #[test]
    fn failed_frame_leaves_partial_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(FamilyKind::Alpha, 2.0, 1.0, 3, dir.path());
        // a directory squatting on the second frame name makes its write fail
        fs::create_dir(dir.path().join(s.frame_name(1))).unwrap();
        assert!(generate_frames(&s).is_err());
        let m = read_manifest(dir.path()).unwrap();
        assert!(!m.complete);
        assert_eq!(m.files, vec!["frame_0000.pgm".to_string()]);
        assert_eq!(m.params, vec![2.0]);
    }
}
