//! Binary PGM (P5) images.
//!
//! Rows of the file are `ix`, columns are `iy`. Written images are 16-bit
//! with amplitude mapped linearly from `[0, max]` to `[0, 65535]`; `max` and
//! the pixel pitch go into a `.scale.csv` sidecar next to the image.

use std::path::{Path, PathBuf};

use arpam::{Error, LateralImage};
use ndarray::Array2;

use crate::error::{CliError, CliResult};

/// Encode amplitudes as a 16-bit P5 image, scaling `max` to 65535.
/// A zero `max` writes an all-black image.
pub fn encode16(pixels: &Array2<f64>, max: f64) -> Vec<u8> {
    let (rows, cols) = pixels.dim();
    let mut out = format!("P5\n{cols} {rows}\n65535\n").into_bytes();
    out.reserve(2 * rows * cols);
    for &v in pixels.iter() {
        let q = if max > 0.0 {
            (v / max * 65535.0).round().clamp(0.0, 65535.0) as u16
        } else {
            0
        };
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

/// Header tokens: whitespace separated, `#` starts a comment up to the end
/// of the line. Returns the tokens and the offset of the raster.
fn header(bytes: &[u8]) -> arpam::Result<([usize; 3], usize)> {
    let mut fields = [0usize; 3];
    let mut pos = 2;
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(Error::Format("truncated PGM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::Format(format!("bad PGM header field at byte {start}")))?;
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => Ok((fields, pos + 1)),
        _ => Err(Error::Format("missing whitespace after PGM header".into())),
    }
}

/// Decode an 8- or 16-bit P5 image into values in `[0, 1]`
/// (sample / maxval), shaped `(rows, cols)`.
pub fn decode(bytes: &[u8]) -> arpam::Result<Array2<f64>> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Format("not a binary PGM (P5) image".into()));
    }
    let ([cols, rows, maxval], offset) = header(bytes)?;
    if cols == 0 || rows == 0 {
        return Err(Error::Format("PGM has no pixels".into()));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(Error::Format(format!("PGM maxval {maxval} out of range")));
    }
    let depth = if maxval < 256 { 1 } else { 2 };
    let count = rows
        .checked_mul(cols)
        .filter(|n| n.checked_mul(depth).is_some())
        .ok_or_else(|| Error::Format("PGM dimensions overflow".into()))?;
    let raster = &bytes[offset..];
    if raster.len() != count * depth {
        return Err(Error::Format(format!(
            "PGM raster holds {} bytes, expected {}",
            raster.len(),
            count * depth
        )));
    }
    let scale = maxval as f64;
    let values: Vec<f64> = if depth == 1 {
        raster.iter().map(|&b| (b as f64).min(scale) / scale).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| (u16::from_be_bytes([c[0], c[1]]) as f64).min(scale) / scale)
            .collect()
    };
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked"))
}

/// Scale sidecar: the amplitude mapped to full white and the pixel pitch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub max: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Scale {
    pub fn to_csv(&self) -> String {
        format!("key,value\nmax,{}\ndx,{}\ndy,{}\n", self.max, self.dx, self.dy)
    }

    pub fn parse(text: &str) -> arpam::Result<Self> {
        let (mut max, mut dx, mut dy) = (None, None, None);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line == "key,value" {
                continue;
            }
            let (k, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse { line: i + 1, message: "expected key,value".into() })?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: i + 1, message: format!("bad number '{}'", v.trim()) })?;
            match k.trim() {
                "max" => max = Some(v),
                "dx" => dx = Some(v),
                "dy" => dy = Some(v),
                other => {
                    return Err(Error::Parse { line: i + 1, message: format!("unknown key '{other}'") })
                }
            }
        }
        match (max, dx, dy) {
            (Some(max), Some(dx), Some(dy)) => Ok(Scale { max, dx, dy }),
            _ => Err(Error::Format("scale sidecar needs max, dx and dy".into())),
        }
    }
}

pub fn sidecar_path(image: &Path) -> PathBuf {
    image.with_extension("scale.csv")
}

/// Write `img` as 16-bit PGM scaled to its peak, plus the sidecar.
pub fn write_image(path: &Path, img: &LateralImage) -> CliResult<()> {
    let scale = Scale { max: img.peak(), dx: img.dx, dy: img.dy };
    std::fs::write(path, encode16(img.pixels(), scale.max)).map_err(|e| CliError::io(path, e))?;
    let side = sidecar_path(path);
    std::fs::write(&side, scale.to_csv()).map_err(|e| CliError::io(&side, e))
}

/// Read a PGM image. With a sidecar the amplitudes and pitch are restored;
/// without one values stay in `[0, 1]` and `fallback_pitch` is used.
pub fn read_image(path: &Path, fallback_pitch: (f64, f64)) -> CliResult<LateralImage> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let values = decode(&bytes)?;
    let side = sidecar_path(path);
    let (values, dx, dy) = if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(|e| CliError::io(&side, e))?;
        let s = Scale::parse(&text)?;
        (values * s.max, s.dx, s.dy)
    } else {
        (values, fallback_pitch.0, fallback_pitch.1)
    };
    Ok(LateralImage::new(values, dx, dy)?)
}
