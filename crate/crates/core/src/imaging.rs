//! Grayscale rasters as speed fields, and arrival-time maps over them.
//!
//! Only the two grayscale Netpbm encodings are handled: `P2` (ASCII) and
//! `P5` (binary, one byte per sample when `maxval < 256`, otherwise two
//! bytes big-endian).

use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::field::ValueField;
use crate::mesh::{structured_grid_mesh, MeshError, TriMesh};
use crate::model::{ModelError, ScalarGrid, SpeedCostModel};
use crate::solver::{solve, SolveError, SolveOptions};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("PGM data truncated: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("unsupported Netpbm format `{0}` (only P2 and P5)")]
    UnsupportedFormat(String),
    #[error("sample {value} exceeds maxval {max_val}")]
    SampleOutOfRange { value: u32, max_val: u16 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Row-major grayscale image, row 0 on top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    max_val: u16,
    pixels: Vec<u16>,
}

impl Raster {
    pub fn new(width: usize, height: usize, max_val: u16, pixels: Vec<u16>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || max_val == 0 {
            return Err(ImagingError::InvalidParams(format!("{width}x{height} raster with maxval {max_val}")));
        }
        if pixels.len() != width * height {
            return Err(ImagingError::InvalidParams(format!("{} pixels for a {width}x{height} raster", pixels.len())));
        }
        if let Some(&value) = pixels.iter().find(|&&p| p > max_val) {
            return Err(ImagingError::SampleOutOfRange { value: value as u32, max_val });
        }
        Ok(Self { width, height, max_val, pixels })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        max_val: u16,
        g: impl Fn(usize, usize) -> u16,
    ) -> Result<Self, ImagingError> {
        let pixels = (0..height).flat_map(|r| (0..width).map(move |c| (c, r))).map(|(c, r)| g(c, r)).collect();
        Self::new(width, height, max_val, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn max_val(&self) -> u16 {
        self.max_val
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn pixel(&self, col: usize, row: usize) -> u16 {
        self.pixels[row * self.width + col]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmEncoding {
    #[default]
    Ascii,
    Binary,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() && self.data[self.pos] != b'#' {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.data[start..self.pos])
    }

    fn header_number(&mut self, what: &str) -> Result<u32, ImagingError> {
        let tok = self.token().ok_or_else(|| ImagingError::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| ImagingError::MalformedHeader(format!("bad {what} `{}`", String::from_utf8_lossy(tok))))
    }
}

/// Parses a P2 or P5 image.
pub fn parse_pgm(data: &[u8]) -> Result<Raster, ImagingError> {
    if data.len() < 2 || data[0] != b'P' {
        return Err(ImagingError::UnsupportedFormat(String::from_utf8_lossy(&data[..data.len().min(2)]).into_owned()));
    }
    let binary = match data[1] {
        b'2' => false,
        b'5' => true,
        _ => return Err(ImagingError::UnsupportedFormat(String::from_utf8_lossy(&data[..2]).into_owned())),
    };
    let mut cur = Cursor { data, pos: 2 };
    let width = cur.header_number("width")? as usize;
    let height = cur.header_number("height")? as usize;
    let max_val = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImagingError::MalformedHeader(format!("empty image {width}x{height}")));
    }
    if max_val == 0 || max_val > 65535 {
        return Err(ImagingError::MalformedHeader(format!("maxval {max_val} not in 1..=65535")));
    }
    let max_val = max_val as u16;
    let expected = width * height;
    let mut pixels = Vec::with_capacity(expected);

    if binary {
        // Exactly one whitespace byte separates maxval from the raster.
        if cur.pos >= data.len() || !data[cur.pos].is_ascii_whitespace() {
            return Err(ImagingError::TruncatedData { expected, found: 0 });
        }
        let body = &data[cur.pos + 1..];
        let bytes_per = if max_val < 256 { 1 } else { 2 };
        let available = body.len() / bytes_per;
        if available < expected {
            return Err(ImagingError::TruncatedData { expected, found: available });
        }
        for i in 0..expected {
            let v = if bytes_per == 1 { body[i] as u16 } else { u16::from_be_bytes([body[2 * i], body[2 * i + 1]]) };
            if v > max_val {
                return Err(ImagingError::SampleOutOfRange { value: v as u32, max_val });
            }
            pixels.push(v);
        }
    } else {
        while pixels.len() < expected {
            let Some(tok) = cur.token() else {
                return Err(ImagingError::TruncatedData { expected, found: pixels.len() });
            };
            let v: u32 = std::str::from_utf8(tok).ok().and_then(|s| s.parse().ok()).ok_or_else(|| {
                ImagingError::MalformedHeader(format!("bad sample `{}`", String::from_utf8_lossy(tok)))
            })?;
            if v > max_val as u32 {
                return Err(ImagingError::SampleOutOfRange { value: v, max_val });
            }
            pixels.push(v as u16);
        }
    }
    Raster::new(width, height, max_val, pixels)
}

/// Encodes a raster. ASCII output puts magic, size and maxval on separate
/// lines and one image row per line.
pub fn encode_pgm(raster: &Raster, encoding: PgmEncoding) -> Vec<u8> {
    let magic = match encoding {
        PgmEncoding::Ascii => "P2",
        PgmEncoding::Binary => "P5",
    };
    let mut out = format!("{magic}\n{} {}\n{}\n", raster.width, raster.height, raster.max_val).into_bytes();
    match encoding {
        PgmEncoding::Ascii => {
            for row in raster.pixels.chunks(raster.width) {
                let line: Vec<String> = row.iter().map(u16::to_string).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
        PgmEncoding::Binary => {
            for &p in &raster.pixels {
                if raster.max_val < 256 {
                    out.push(p as u8);
                } else {
                    out.extend_from_slice(&p.to_be_bytes());
                }
            }
        }
    }
    out
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Raster, ImagingError> {
    parse_pgm(&std::fs::read(path)?)
}

pub fn save_pgm(raster: &Raster, path: impl AsRef<Path>, encoding: PgmEncoding) -> Result<(), ImagingError> {
    std::fs::write(path, encode_pgm(raster, encoding))?;
    Ok(())
}

/// Intensity-to-speed mapping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageModelParams {
    pub f_min: f64,
    pub f_max: f64,
    /// Dark pixels fast, bright pixels slow.
    pub invert: bool,
    pub l_const: f64,
    pub q_const: f64,
    /// Distance between neighbouring pixel centres.
    pub pixel_size: f64,
}

impl Default for ImageModelParams {
    fn default() -> Self {
        Self { f_min: 0.1, f_max: 1.0, invert: false, l_const: 1.0, q_const: 0.0, pixel_size: 1.0 }
    }
}

impl ImageModelParams {
    fn validate(&self) -> Result<(), ImagingError> {
        let ok = self.f_min > 0.0
            && self.f_min <= self.f_max
            && self.f_max.is_finite()
            && self.l_const > 0.0
            && self.l_const.is_finite()
            && self.q_const >= 0.0
            && self.q_const.is_finite()
            && self.pixel_size > 0.0
            && self.pixel_size.is_finite();
        if ok {
            Ok(())
        } else {
            Err(ImagingError::InvalidParams(format!("{self:?}")))
        }
    }
}

/// Isotropic model with `f = f_min + (f_max - f_min) I / maxval` (or with
/// `1 - I / maxval` when inverted), `I` interpolated bilinearly between
/// pixel centres. Pixel `(col, row)` sits at
/// `(col * pixel_size, (height - 1 - row) * pixel_size)`.
pub fn raster_to_model(raster: &Raster, params: &ImageModelParams) -> Result<SpeedCostModel, ImagingError> {
    params.validate()?;
    if raster.width < 2 || raster.height < 2 {
        return Err(ImagingError::InvalidParams(format!(
            "raster {}x{} needs at least 2x2 pixels",
            raster.width, raster.height
        )));
    }
    let max = raster.max_val as f64;
    let speeds = raster
        .pixels
        .iter()
        .map(|&p| {
            let s = p as f64 / max;
            let s = if params.invert { 1.0 - s } else { s };
            (params.f_min + (params.f_max - params.f_min) * s).clamp(params.f_min, params.f_max)
        })
        .collect();
    let s = params.pixel_size;
    let grid = ScalarGrid::new(
        raster.width,
        raster.height,
        speeds,
        (0.0, (raster.width - 1) as f64 * s),
        (0.0, (raster.height - 1) as f64 * s),
    )?;
    let (l, q) = (params.l_const, params.q_const);
    let bounds =
        crate::model::Bounds { f_min: params.f_min, f_max: params.f_max, l_min: l, l_max: l, q_min: q, q_max: q };
    Ok(SpeedCostModel::new("image_derived", move |p, _| grid.eval(p), move |_, _| l, move |_| q, bounds)?)
}

/// One mesh vertex per pixel centre.
pub fn raster_to_mesh(raster: &Raster, pixel_size: f64) -> Result<TriMesh, ImagingError> {
    if raster.width < 2 || raster.height < 2 || !(pixel_size > 0.0 && pixel_size.is_finite()) {
        return Err(ImagingError::InvalidParams(format!(
            "raster {}x{} with pixel size {pixel_size}",
            raster.width, raster.height
        )));
    }
    Ok(structured_grid_mesh(
        raster.width,
        raster.height,
        (0.0, (raster.width - 1) as f64 * pixel_size),
        (0.0, (raster.height - 1) as f64 * pixel_size),
    )?)
}

/// Exit-time arrival map over the image rectangle.
pub fn arrival_map(
    raster: &Raster,
    params: &ImageModelParams,
    opts: &SolveOptions,
) -> Result<ValueField, ImagingError> {
    let mesh = Arc::new(raster_to_mesh(raster, params.pixel_size)?);
    let model = raster_to_model(raster, params)?;
    Ok(solve(&mesh, &model, opts)?)
}
