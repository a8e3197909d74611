//! Netpbm images and CSV series.
//!
//! Gray images are read from plain (P2) or raw (P5) PGM with 8-bit samples
//! and always written as raw P5. Color masks are written as raw P6 PPM.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::lattice::Grid;
use crate::{Error, Result};

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#' {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .token()
            .ok_or_else(|| Error::Image(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Image(format!("bad {what} '{}'", String::from_utf8_lossy(tok))))
    }
}

/// Parse an 8-bit PGM. Samples with a maxval below 255 are rescaled to the
/// full 0..=255 range.
pub fn parse_pgm(bytes: &[u8]) -> Result<Grid<u8>> {
    let mut h = Header { bytes, pos: 0 };
    let raw = match h.token() {
        Some(b"P2") => false,
        Some(b"P5") => true,
        Some(other) => {
            return Err(Error::Image(format!(
                "unsupported magic '{}' (expected P2 or P5)",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(Error::Image("empty file".into())),
    };
    let cols = h.number("width")?;
    let rows = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval == 0 {
        return Err(Error::Image("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::Image(format!(
            "16-bit PGM (maxval {maxval}) is not supported; convert to 8-bit"
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyImage);
    }
    let n = rows * cols;
    let mut data = Vec::with_capacity(n);
    if raw {
        // exactly one whitespace byte separates the header from the raster
        let start = h.pos + 1;
        let body = bytes.get(start..start + n).ok_or_else(|| {
            Error::Image(format!("raster holds fewer than {n} samples for {cols}x{rows}"))
        })?;
        data.extend_from_slice(body);
    } else {
        for k in 0..n {
            let v = h.number(&format!("sample {k}"))?;
            data.push(u8::try_from(v).ok().filter(|&v| v as usize <= maxval).ok_or_else(|| {
                Error::Image(format!("sample {v} exceeds maxval {maxval}"))
            })?);
        }
    }
    if let Some(&v) = data.iter().find(|&&v| v as usize > maxval) {
        return Err(Error::Image(format!("sample {v} exceeds maxval {maxval}")));
    }
    if maxval != 255 {
        for v in &mut data {
            *v = ((*v as usize * 255 + maxval / 2) / maxval) as u8;
        }
    }
    Grid::from_vec(rows, cols, data)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Grid<u8>> {
    parse_pgm(&fs::read(path)?)
}

pub fn encode_pgm(grid: &Grid<u8>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.cols(), grid.rows()).into_bytes();
    out.extend_from_slice(grid.as_slice());
    out
}

pub fn write_pgm(grid: &Grid<u8>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(grid))?;
    Ok(())
}

pub fn encode_ppm(grid: &Grid<[u8; 3]>) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", grid.cols(), grid.rows()).into_bytes();
    for px in grid.iter() {
        out.extend_from_slice(px);
    }
    out
}

pub fn write_ppm(grid: &Grid<[u8; 3]>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_ppm(grid))?;
    Ok(())
}

/// On cells red, off cells blue.
pub fn gate_colors(mask: &Grid<bool>) -> Grid<[u8; 3]> {
    mask.map(|&on| if on { [255, 0, 0] } else { [0, 0, 255] })
}

/// Float formatted with 17 significant digits, enough to round-trip.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Numeric CSV with one header row.
pub fn encode_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<String> {
    let mut out = header.join(",");
    out.push('\n');
    for (k, row) in rows.into_iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::InvalidParameter(format!(
                "csv row {k} has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        let fields: Vec<String> = row.iter().map(|&x| format_float(x)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>, path: impl AsRef<Path>) -> Result<()> {
    let text = encode_csv(header, rows)?;
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
