//! Masks as binary PBM (P4) plus a JSON sidecar, fields as CSV plus the same
//! sidecar. Every write goes through a temp file in the target directory and
//! a rename.
//!
//! The P4 image is `shape[0]` pixels wide and `Π_{i>0} shape[i]` rows tall;
//! row `j` holds the cells with linear indices `j·shape[0] ..`. A set cell is
//! a black pixel (bit 1), most significant bit first.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Bits, ExtensionRule, FieldExtension, GridGeometry, ScalarField};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub geometry: GridGeometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_extension: Option<FieldExtension>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn encode_p4(mask: &BinaryMask) -> Vec<u8> {
    let g = mask.geometry();
    let width = g.shape()[0];
    let height = g.len() / width;
    let stride = width.div_ceil(8);
    let mut out = format!("P4\n{width} {height}\n").into_bytes();
    let mut row = vec![0u8; stride];
    for j in 0..height {
        row.fill(0);
        for i in 0..width {
            if mask.get(j * width + i) {
                row[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

fn p4_tokens(data: &[u8]) -> Result<(usize, usize, usize)> {
    // Returns (width, height, offset of pixel data).
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 3 {
        while pos < data.len() && (data[pos].is_ascii_whitespace() || data[pos] == b'#') {
            if data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PBM header".into()));
        }
        tokens.push(std::str::from_utf8(&data[start..pos]).map_err(|_| Error::Format("non-ASCII header".into()))?);
    }
    if tokens[0] != "P4" {
        return Err(Error::Format(format!("expected P4 magic, found {}", tokens[0])));
    }
    let parse = |t: &str| t.parse::<usize>().map_err(|_| Error::Format(format!("bad PBM size `{t}`")));
    let (w, h) = (parse(tokens[1])?, parse(tokens[2])?);
    // exactly one whitespace byte separates the header from the raster
    Ok((w, h, pos + 1))
}

pub fn decode_p4(data: &[u8]) -> Result<(usize, usize, Bits)> {
    let (w, h, off) = p4_tokens(data)?;
    if w == 0 || h == 0 {
        return Err(Error::Format("PBM with zero extent".into()));
    }
    let stride = w.div_ceil(8);
    if data.len() < off + stride * h {
        return Err(Error::Format("PBM raster is truncated".into()));
    }
    let mut bits = bitvec![u64, Lsb0; 0; w * h];
    for j in 0..h {
        let row = &data[off + j * stride..off + (j + 1) * stride];
        for i in 0..w {
            if row[i / 8] & (0x80 >> (i % 8)) != 0 {
                bits.set(j * w + i, true);
            }
        }
    }
    Ok((w, h, bits))
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    atomic_write(path, &encode_p4(mask))?;
    let side = Sidecar {
        geometry: mask.geometry().clone(),
        extension: Some(mask.extension().clone()),
        field_extension: None,
    };
    write_json(&sidecar_path(path), &side)
}

/// Reads a P4 mask. Without a sidecar the image is taken as a 2-D grid with
/// unit spacing, origin 0 and an empty exterior.
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let data = fs::read(path)?;
    let (w, h, bits) = decode_p4(&data)?;
    let side = sidecar_path(path);
    if side.exists() {
        let sc: Sidecar = serde_json::from_slice(&fs::read(&side)?)?;
        let g = sc.geometry;
        if g.shape()[0] != w || g.len() != w * h {
            return Err(Error::Format(format!(
                "image is {w}x{h} but the sidecar geometry has shape {:?}",
                g.shape()
            )));
        }
        BinaryMask::from_bits(&g, bits, sc.extension.unwrap_or(ExtensionRule::ConstantOutside))
    } else {
        let g = GridGeometry::new(&[w, h], 1.0, &[0.0, 0.0])?;
        BinaryMask::from_bits(&g, bits, ExtensionRule::ConstantOutside)
    }
}

pub fn encode_csv(field: &ScalarField) -> String {
    let g = field.geometry();
    let width = g.shape()[0];
    let mut out = String::new();
    for (k, v) in field.values().iter().enumerate() {
        if k % width != 0 {
            out.push(',');
        }
        out.push_str(&format!("{v:?}"));
        if k % width == width - 1 {
            out.push('\n');
        }
    }
    out
}

pub fn write_field(path: &Path, field: &ScalarField) -> Result<()> {
    atomic_write(path, encode_csv(field).as_bytes())?;
    let side = Sidecar {
        geometry: field.geometry().clone(),
        extension: None,
        field_extension: Some(field.extension()),
    };
    write_json(&sidecar_path(path), &side)
}

pub fn parse_csv(text: &str) -> Result<(usize, Vec<f64>)> {
    let mut width = None;
    let mut values = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: bad number `{t}`", ln + 1)))
            })
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Format(format!("line {}: ragged row", ln + 1)));
            }
            _ => {}
        }
        values.extend(row);
    }
    let width = width.ok_or_else(|| Error::Format("empty CSV".into()))?;
    Ok((width, values))
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let (w, values) = parse_csv(&fs::read_to_string(path)?)?;
    let side = sidecar_path(path);
    if side.exists() {
        let sc: Sidecar = serde_json::from_slice(&fs::read(&side)?)?;
        if sc.geometry.shape()[0] != w {
            return Err(Error::Format("CSV width disagrees with the sidecar".into()));
        }
        ScalarField::new(&sc.geometry, values, sc.field_extension.unwrap_or(FieldExtension::Zero))
    } else {
        let h = values.len() / w;
        let g = GridGeometry::new(&[w, h], 1.0, &[0.0, 0.0])?;
        ScalarField::new(&g, values, FieldExtension::Zero)
    }
}
