//! Command-line front end. Every command can be driven by flags, by a JSON
//! job file (`--config`), or both; flags override file values.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::algebra::{self, AlgebraSpec};
use crate::engine::{self, compute_grid, EscapeParams, Viewport, PREVIEW_MAX_ITER};
use crate::error::{Error, Result};
use crate::maps::{FamilyKind, MapFamily};
use crate::render::{write_image, ImageFormat, RenderMode};
use crate::sweep::{self, SweepSpec};
use crate::validation::{self, EquivalenceKind};

pub const THREADS_ENV: &str = "QUASIMAP_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const RENDER_SIZE: (usize, usize) = (800, 800);
const SWEEP_SIZE: (usize, usize) = (256, 256);
const SWEEP_FRAMES: usize = 11;
const VERIFY_MAX_ITER: u32 = 512;
const VERIFY_RADIUS: f64 = 2.0;

#[derive(Debug, Parser)]
#[command(
    name = "quasimap",
    version,
    about = "Quasi-Mandelbrot sets of perturbed quadratic maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Render,
    Sweep,
    Profile,
    Classify,
    Verify,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render one escape-time image
    Render(JobFlags),
    /// Render a frame sequence over a family-parameter range
    Sweep(JobFlags),
    /// Print the area/boundary profile of a parameter range as CSV
    Profile(JobFlags),
    /// Classify the algebra i² = p + q·i
    Classify(JobFlags),
    /// Run a seeded reduction/conjugacy check and print a JSON report
    Verify(JobFlags),
}

impl Command {
    fn split(self) -> (CommandKind, JobFlags) {
        match self {
            Command::Render(f) => (CommandKind::Render, f),
            Command::Sweep(f) => (CommandKind::Sweep, f),
            Command::Profile(f) => (CommandKind::Profile, f),
            Command::Classify(f) => (CommandKind::Classify, f),
            Command::Verify(f) => (CommandKind::Verify, f),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct JobFlags {
    /// classical | epsilon | conjugate | alpha | balgebra
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    #[arg(long = "a", allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long = "b", allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// min_c1,max_c1,min_c2,max_c2
    #[arg(long, allow_hyphen_values = true)]
    pub viewport: Option<String>,
    /// WIDTHxHEIGHT
    #[arg(long)]
    pub size: Option<String>,
    #[arg(long)]
    pub max_iter: Option<u32>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// lo,hi
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    #[arg(long)]
    pub frames: Option<usize>,
    /// pgm | png
    #[arg(long)]
    pub format: Option<String>,
    /// membership | escape | boundary
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 = one per core
    #[arg(long)]
    pub threads: Option<usize>,
    /// Relative area change reported as a discontinuity by `profile`
    #[arg(long)]
    pub threshold: Option<f64>,
    /// conj-zero | alpha-two | b-zero | epsilon-half | all
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long = "p", allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long = "q", allow_negative_numbers = true)]
    pub q: Option<f64>,
}

/// A job as read from JSON. Every field is optional; absent fields fall
/// back to the command's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub command: Option<CommandKind>,
    pub family: Option<FamilyKind>,
    pub eps: Option<f64>,
    pub a: Option<f64>,
    pub alpha: Option<f64>,
    pub b: Option<f64>,
    /// `[min_c1, max_c1, min_c2, max_c2]`
    pub viewport: Option<[f64; 4]>,
    /// `[width, height]`
    pub size: Option<[usize; 2]>,
    pub max_iter: Option<u32>,
    pub radius: Option<f64>,
    /// `[lo, hi]`
    pub range: Option<[f64; 2]>,
    pub frames: Option<usize>,
    pub format: Option<ImageFormat>,
    pub mode: Option<RenderMode>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub threshold: Option<f64>,
    pub kind: Option<String>,
    pub samples: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        JobConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `top` win over fields in `self`.
    pub fn overlay(self, top: JobConfig) -> JobConfig {
        let base = self;
        overlay!(base, top; command, family, eps, a, alpha, b, viewport, size, max_iter,
                 radius, range, frames, format, mode, out, seed, threads, threshold, kind,
                 samples, p, q)
    }

    fn from_flags(command: CommandKind, f: &JobFlags) -> Result<Self> {
        Ok(JobConfig {
            command: Some(command),
            family: f.family.as_deref().map(FamilyKind::parse).transpose()?,
            eps: f.eps,
            a: f.a,
            alpha: f.alpha,
            b: f.b,
            viewport: f.viewport.as_deref().map(parse_viewport).transpose()?,
            size: f.size.as_deref().map(parse_size).transpose()?,
            max_iter: f.max_iter,
            radius: f.radius,
            range: f.range.as_deref().map(parse_range).transpose()?,
            frames: f.frames,
            format: f.format.as_deref().map(ImageFormat::parse).transpose()?,
            mode: f.mode.as_deref().map(RenderMode::parse).transpose()?,
            out: f.out.clone(),
            seed: f.seed,
            threads: f.threads,
            threshold: f.threshold,
            kind: f.kind.clone(),
            samples: f.samples,
            p: f.p,
            q: f.q,
        })
    }

    fn family_kind(&self) -> FamilyKind {
        self.family.unwrap_or(FamilyKind::Classical)
    }

    fn family_param(&self, kind: FamilyKind) -> Option<f64> {
        match kind {
            FamilyKind::Classical => Some(0.0),
            FamilyKind::Epsilon => self.eps,
            FamilyKind::Conjugate => self.a,
            FamilyKind::Alpha => self.alpha,
            FamilyKind::Balgebra => self.b,
        }
    }

    /// The fully parametrized family for single-frame commands.
    pub fn map_family(&self) -> Result<MapFamily> {
        let kind = self.family_kind();
        let value = self.family_param(kind).ok_or_else(|| {
            Error::InvalidArgument(format!("family {kind} needs --{}", param_flag(kind)))
        })?;
        let family = kind.with_param(value);
        family.validate()?;
        Ok(family)
    }

    pub fn viewport(&self, default_size: (usize, usize)) -> Result<Viewport> {
        let [min_c1, max_c1, min_c2, max_c2] = self.viewport.unwrap_or([-2.5, 1.5, -2.0, 2.0]);
        let [w, h] = self.size.unwrap_or([default_size.0, default_size.1]);
        let v = Viewport::new((min_c1, max_c1), (min_c2, max_c2), w, h);
        v.validate()?;
        Ok(v)
    }

    pub fn escape_params(&self, family: MapFamily, default_iter: u32) -> Result<EscapeParams> {
        let p = EscapeParams::new(
            self.max_iter.unwrap_or(default_iter),
            self.radius
                .unwrap_or_else(|| EscapeParams::default_radius(family)),
        );
        p.validate()?;
        Ok(p)
    }

    /// Thread count: flag or config, then `QUASIMAP_THREADS`, then auto.
    pub fn threads(&self) -> Result<usize> {
        if let Some(t) = self.threads {
            return Ok(t);
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("{THREADS_ENV} must be a thread count, got '{v}'"))
            }),
            Err(_) => Ok(0),
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let family = self.family_kind();
        let [lo, hi] = match (self.range, family) {
            (Some(r), _) => r,
            (None, FamilyKind::Classical) => [0.0, 0.0],
            (None, kind) => {
                return Err(Error::InvalidArgument(format!(
                    "sweeping {kind} needs --range lo,hi"
                )))
            }
        };
        let frames = self
            .frames
            .unwrap_or(if lo == hi { 1 } else { SWEEP_FRAMES });
        let probe = family.with_param(lo);
        let spec = SweepSpec {
            family,
            lo,
            hi,
            frames,
            viewport: self.viewport(SWEEP_SIZE)?,
            params: self.escape_params(probe, PREVIEW_MAX_ITER)?,
            format: self.format.unwrap_or(ImageFormat::Png),
            mode: self.mode.unwrap_or_default(),
            outdir: self.out.clone().unwrap_or_default(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn param_flag(kind: FamilyKind) -> &'static str {
    match kind {
        FamilyKind::Classical => "",
        FamilyKind::Epsilon => "eps",
        FamilyKind::Conjugate => "a",
        FamilyKind::Alpha => "alpha",
        FamilyKind::Balgebra => "b",
    }
}

fn parse_floats<const N: usize>(s: &str, what: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || {
        Error::InvalidArgument(format!(
            "{what}: expected {N} comma-separated numbers, got '{s}'"
        ))
    };
    if parts.len() != N {
        return Err(bad());
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| bad())?;
    }
    Ok(out)
}

pub fn parse_viewport(s: &str) -> Result<[f64; 4]> {
    parse_floats::<4>(s, "viewport")
}

pub fn parse_range(s: &str) -> Result<[f64; 2]> {
    parse_floats::<2>(s, "range")
}

pub fn parse_size(s: &str) -> Result<[usize; 2]> {
    let bad = || Error::InvalidArgument(format!("size: expected WIDTHxHEIGHT, got '{s}'"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok([
        w.trim().parse().map_err(|_| bad())?,
        h.trim().parse().map_err(|_| bad())?,
    ])
}

/// The subset of the equivalence report printed by `verify`.
#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub kind: EquivalenceKind,
    pub samples: usize,
    pub seed: u64,
    pub mismatches: usize,
    pub total: usize,
    pub pass: bool,
}

enum Outcome {
    Done,
    ValidationFailed,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn parse_and_dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let (command, flags) = cli.command.split();

    let job = match resolve_job(command, &flags) {
        Ok(job) => job,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };

    match run(command, &job, out, err) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::ValidationFailed) => EXIT_FAILURE,
        Err(e @ Error::InvalidArgument(_)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn resolve_job(command: CommandKind, flags: &JobFlags) -> Result<JobConfig> {
    let from_flags = JobConfig::from_flags(command, flags)?;
    let base = match &flags.config {
        Some(path) => {
            let file = JobConfig::load(path)?;
            if let Some(c) = file.command {
                if c != command {
                    return Err(Error::InvalidArgument(format!(
                        "config {} is a {c:?} job, not {command:?}",
                        path.display()
                    )));
                }
            }
            file
        }
        None => JobConfig::default(),
    };
    Ok(base.overlay(from_flags))
}

fn run(
    command: CommandKind,
    job: &JobConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Outcome> {
    let threads = job.threads()?;
    // validate everything before spinning up workers
    match command {
        CommandKind::Classify => return classify(job, out),
        CommandKind::Render => {
            job.map_family()?;
        }
        CommandKind::Sweep | CommandKind::Profile => {
            job.sweep_spec()?;
        }
        CommandKind::Verify => {}
    }
    // Output is buffered so the worker closure owns no borrowed writers.
    let mut buf_out = Vec::new();
    let mut buf_err = Vec::new();
    let result = engine::with_threads(threads, || match command {
        CommandKind::Render => render(job, &mut buf_out),
        CommandKind::Sweep => run_sweep(job, &mut buf_out),
        CommandKind::Profile => profile(job, &mut buf_out, &mut buf_err),
        CommandKind::Verify => verify(job, &mut buf_out),
        CommandKind::Classify => unreachable!(),
    })?;
    out.write_all(&buf_out)?;
    err.write_all(&buf_err)?;
    result
}

fn classify(job: &JobConfig, out: &mut dyn Write) -> Result<Outcome> {
    let spec = match (job.p, job.q, job.eps, job.b) {
        (Some(p), Some(q), None, None) => AlgebraSpec::new(p, q),
        (None, None, Some(eps), None) => algebra::induced_algebra_epsilon(eps)?,
        (None, None, None, Some(b)) => algebra::induced_algebra_b(b)?,
        _ => {
            return Err(Error::InvalidArgument(
                "classify needs either --p and --q, or exactly one of --eps / --b".into(),
            ))
        }
    };
    let class = algebra::classify_algebra(spec)?;
    writeln!(out, "{class}")?;
    Ok(Outcome::Done)
}

fn render(job: &JobConfig, out: &mut Vec<u8>) -> Result<Outcome> {
    let family = job.map_family()?;
    let viewport = job.viewport(RENDER_SIZE)?;
    let params = job.escape_params(family, engine::DEFAULT_MAX_ITER)?;
    let path = job
        .out
        .clone()
        .ok_or_else(|| Error::InvalidArgument("render needs --out <file>".into()))?;
    let format = job
        .format
        .or_else(|| ImageFormat::from_path(&path))
        .unwrap_or(ImageFormat::Png);
    let grid = compute_grid(family, viewport, params)?;
    let raster = job.mode.unwrap_or_default().render(&grid);
    write_image(&raster, format, &path)?;
    writeln!(
        out,
        "wrote {} ({family}, {} member pixels, area {})",
        path.display(),
        grid.member_count(),
        grid.area_estimate()
    )?;
    Ok(Outcome::Done)
}

fn run_sweep(job: &JobConfig, out: &mut Vec<u8>) -> Result<Outcome> {
    let spec = job.sweep_spec()?;
    if job.out.is_none() {
        return Err(Error::InvalidArgument(
            "sweep needs --out <directory>".into(),
        ));
    }
    let manifest = sweep::generate_frames(&spec)?;
    writeln!(
        out,
        "wrote {} frames, {} and {} to {}",
        manifest.files.len(),
        sweep::MANIFEST_FILE,
        sweep::METRICS_FILE,
        spec.outdir.display()
    )?;
    Ok(Outcome::Done)
}

fn profile(job: &JobConfig, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<Outcome> {
    let spec = job.sweep_spec()?;
    let profile = sweep::transition_profile(&spec)?;
    let csv = profile.to_csv();
    match &job.out {
        Some(path) => std::fs::write(path, &csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    if let Some(threshold) = job.threshold {
        for p in sweep::detect_discontinuity(&profile, threshold)? {
            writeln!(err, "discontinuity at {p}")?;
        }
    }
    Ok(Outcome::Done)
}

fn verify(job: &JobConfig, out: &mut Vec<u8>) -> Result<Outcome> {
    let kinds = match job.kind.as_deref() {
        None | Some("all") => EquivalenceKind::ALL.to_vec(),
        Some(k) => vec![EquivalenceKind::parse(k)?],
    };
    let params = EscapeParams::new(
        job.max_iter.unwrap_or(VERIFY_MAX_ITER),
        job.radius.unwrap_or(VERIFY_RADIUS),
    );
    params.validate()?;
    let samples = job.samples.unwrap_or(validation::DEFAULT_SAMPLES);
    let seed = job.seed.unwrap_or(validation::DEFAULT_SEED);
    let mut all_pass = true;
    for kind in kinds {
        let r = validation::equivalence_check(kind, samples, seed, &params)?;
        all_pass &= r.pass;
        let line = VerifyOutput {
            kind: r.kind,
            samples: r.samples,
            seed: r.seed,
            mismatches: r.mismatches,
            total: r.total,
            pass: r.pass,
        };
        writeln!(out, "{}", serde_json::to_string(&line)?)?;
    }
    Ok(if all_pass {
        Outcome::Done
    } else {
        Outcome::ValidationFailed
    })
}
