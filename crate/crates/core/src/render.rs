//! Grayscale rasters derived from escape grids, and their PGM/PNG encodings.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::engine::{EscapeGrid, EscapeResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// Row-major 8-bit gray levels.
    pub pixels: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "raster {width}x{height} cannot hold {} pixels",
                pixels.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            pixels,
        })
    }

    fn from_grid(grid: &EscapeGrid, f: impl Fn(EscapeResult) -> u8) -> Raster {
        Raster {
            width: grid.width(),
            height: grid.height(),
            pixels: grid.cells.iter().map(|&c| f(c)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Png => "png",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pgm" => Ok(ImageFormat::Pgm),
            "png" => Ok(ImageFormat::Png),
            other => Err(Error::InvalidArgument(format!(
                "unknown image format '{other}'"
            ))),
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()
            .and_then(|e| e.to_str())
            .and_then(|e| Self::parse(e).ok())
    }
}

impl fmt::Display for ImageFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

/// How an escape grid is turned into gray levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    #[default]
    Membership,
    Escape,
    Boundary,
}

impl RenderMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "membership" => Ok(RenderMode::Membership),
            "escape" => Ok(RenderMode::Escape),
            "boundary" => Ok(RenderMode::Boundary),
            other => Err(Error::InvalidArgument(format!(
                "unknown render mode '{other}'"
            ))),
        }
    }

    pub fn render(self, grid: &EscapeGrid) -> Raster {
        match self {
            RenderMode::Membership => membership_raster(grid),
            RenderMode::Escape => escape_colormap(grid),
            RenderMode::Boundary => extract_boundary(grid),
        }
    }
}

/// Members black, everything else white.
pub fn membership_raster(grid: &EscapeGrid) -> Raster {
    Raster::from_grid(grid, |c| if c.is_member() { 0 } else { 255 })
}

/// Members black; escaped cells ramp linearly from 55 (step 1) to 255
/// (step `max_iter`).
pub fn escape_colormap(grid: &EscapeGrid) -> Raster {
    let max_iter = grid.params.max_iter as u64;
    Raster::from_grid(grid, |c| escape_level(c, max_iter))
}

fn escape_level(cell: EscapeResult, max_iter: u64) -> u8 {
    match cell {
        EscapeResult::Member => 0,
        EscapeResult::Escaped(_) if max_iter <= 1 => 255,
        EscapeResult::Escaped(n) => {
            let n = (n as u64).max(1);
            let level = 55 + 200 * (n - 1) / (max_iter - 1);
            level.clamp(55, 255) as u8
        }
    }
}

/// Members with at least one escaped 4-neighbour inside the image.
pub fn extract_boundary(grid: &EscapeGrid) -> Raster {
    let (w, h) = (grid.width(), grid.height());
    let escaped = |col: usize, row: usize| !grid.cells[row * w + col].is_member();
    let mut pixels = vec![0u8; w * h];
    for row in 0..h {
        for col in 0..w {
            if !grid.cells[row * w + col].is_member() {
                continue;
            }
            let edge = (col > 0 && escaped(col - 1, row))
                || (col + 1 < w && escaped(col + 1, row))
                || (row > 0 && escaped(col, row - 1))
                || (row + 1 < h && escaped(col, row + 1));
            if edge {
                pixels[row * w + col] = 255;
            }
        }
    }
    Raster {
        width: w,
        height: h,
        pixels,
    }
}

pub fn boundary_pixel_count(grid: &EscapeGrid) -> usize {
    extract_boundary(grid)
        .pixels
        .iter()
        .filter(|&&p| p == 255)
        .count()
}

pub fn encode_image(raster: &Raster, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Pgm => Ok(encode_pgm(raster)),
        ImageFormat::Png => encode_png(raster),
    }
}

/// Binary P5 with maxval 255.
fn encode_pgm(raster: &Raster) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", raster.width, raster.height);
    let mut out = Vec::with_capacity(header.len() + raster.pixels.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&raster.pixels);
    out
}

fn encode_png(raster: &Raster) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, raster.width as u32, raster.height as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer
            .write_image_data(&raster.pixels)
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer.finish().map_err(|e| Error::Encode(e.to_string()))?;
    }
    Ok(out)
}

pub fn decode_image(bytes: &[u8]) -> Result<Raster> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else {
        decode_png(bytes)
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Raster> {
    let bad = |msg: &str| Error::InvalidArgument(format!("malformed PGM: {msg}"));
    // magic, width, height, maxval, each followed by one whitespace byte
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?);
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad("not binary graymap"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    let data = bytes
        .get(pos..pos + width * height)
        .ok_or_else(|| bad("truncated data"))?;
    Raster::new(width, height, data.to_vec())
}

fn decode_png(bytes: &[u8]) -> Result<Raster> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Encode(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Encode("png too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Encode(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Encode(format!(
            "expected 8-bit grayscale png, got {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    buf.truncate(info.buffer_size());
    Raster::new(info.width as usize, info.height as usize, buf)
}

pub fn write_image(raster: &Raster, format: ImageFormat, path: &Path) -> Result<()> {
    let bytes = encode_image(raster, format)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}
