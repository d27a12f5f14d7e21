//! Matrix and image file formats.
//!
//! Text matrices are whitespace separated, one row per line; blank lines and
//! lines starting with `#` are skipped. Binary matrices start with the magic
//! `HAISMAT1`, then rows and columns as little-endian u32, then row-major
//! little-endian f64 values.

use std::fs;
use std::path::Path;

use crate::error::{HaisError, Result};
use crate::linalg::Matrix;
use crate::pipeline::patches::Image;

pub const BINARY_MAGIC: &[u8; 8] = b"HAISMAT1";
const HEADER_LEN: usize = 16;

fn io_err(path: &Path, source: std::io::Error) -> HaisError {
    HaisError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn parse_text_matrix(text: &str) -> Result<Matrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| HaisError::Input(format!("line {}: cannot parse `{tok}` as a number", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(HaisError::Input(format!(
                    "line {}: {} values, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, 0));
    }
    Matrix::from_rows(&rows)
}

pub fn format_text_matrix(m: &Matrix<f64>) -> String {
    let mut out = String::new();
    for r in m.iter_rows() {
        let line: Vec<String> = r.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn encode_binary_matrix(m: &Matrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.as_slice().len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary_matrix(bytes: &[u8]) -> Result<Matrix<f64>> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != BINARY_MAGIC {
        return Err(HaisError::Input("not a binary matrix file (bad magic)".into()));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| HaisError::Input("binary matrix header overflows".into()))?;
    if body.len() != expected {
        return Err(HaisError::Input(format!(
            "binary matrix {rows}x{cols} needs {expected} payload bytes, found {}",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_row_major(rows, cols, data)
}

/// Reads a matrix file, detecting the binary format by its magic.
pub fn read_matrix(path: &Path) -> Result<Matrix<f64>> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.starts_with(BINARY_MAGIC) {
        return decode_binary_matrix(&bytes).map_err(|e| prefix(path, e));
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| HaisError::Input(format!("{}: neither a text nor a binary matrix", path.display())))?;
    parse_text_matrix(&text).map_err(|e| prefix(path, e))
}

fn prefix(path: &Path, e: HaisError) -> HaisError {
    match e {
        HaisError::Input(m) => HaisError::Input(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn write_text_matrix(path: &Path, m: &Matrix<f64>) -> Result<()> {
    fs::write(path, format_text_matrix(m)).map_err(|e| io_err(path, e))
}

pub fn write_binary_matrix(path: &Path, m: &Matrix<f64>) -> Result<()> {
    fs::write(path, encode_binary_matrix(m)).map_err(|e| io_err(path, e))
}

struct PnmTokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PnmTokens<'a> {
    fn next_token(&mut self) -> Option<&'a str> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()
    }

    fn next_usize(&mut self, what: &str) -> Result<usize> {
        self.next_token()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| HaisError::Input(format!("PGM header: missing or bad {what}")))
    }
}

/// Decodes a binary (P5) or ASCII (P2) PGM with maxval up to 65535.
/// Pixel values are returned as raw integers in `f64`.
pub fn decode_pgm(name: &str, bytes: &[u8]) -> Result<Image> {
    let wrap = |m: String| HaisError::Input(format!("{name}: {m}"));
    let mut tok = PnmTokens { bytes, pos: 0 };
    let magic = tok.next_token().ok_or_else(|| wrap("empty file".into()))?;
    let binary = match magic {
        "P5" => true,
        "P2" => false,
        other => return Err(wrap(format!("unsupported image magic `{other}`, expected P5 or P2"))),
    };
    let width = tok.next_usize("width").map_err(|e| wrap(e.to_string()))?;
    let height = tok.next_usize("height").map_err(|e| wrap(e.to_string()))?;
    let maxval = tok.next_usize("maxval").map_err(|e| wrap(e.to_string()))?;
    if maxval == 0 || maxval > 65535 {
        return Err(wrap(format!("maxval {maxval} out of range")));
    }
    let n = width * height;
    let pixels: Vec<f64> = if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = tok.pos + 1;
        let bpp = if maxval < 256 { 1 } else { 2 };
        let raster = bytes.get(start..).unwrap_or(&[]);
        if raster.len() < n * bpp {
            return Err(wrap(format!(
                "raster has {} bytes, expected {}",
                raster.len(),
                n * bpp
            )));
        }
        if bpp == 1 {
            raster[..n].iter().map(|&b| b as f64).collect()
        } else {
            raster[..2 * n]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
                .collect()
        }
    } else {
        (0..n)
            .map(|_| tok.next_usize("pixel").map(|v| v as f64))
            .collect::<Result<_>>()
            .map_err(|e| wrap(e.to_string()))?
    };
    Image::new(name, width, height, pixels)
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    decode_pgm(&path.display().to_string(), &bytes)
}
