//! Interchange formats.
//!
//! - PGM `P5`, maxval up to 255.
//! - PPM `P6`, maxval 255, for packed RGB frames.
//! - F32 grid: `FGRD`, u32 LE width, u32 LE height, then `width * height`
//!   little-endian IEEE-754 singles, row-major.
//! - LPTM remap dump: `LPTM`, u32 LE `rho_size`, `theta_size`, `in_width`,
//!   `in_height`, then one 9-byte record per entry with theta outer and rho
//!   inner: u32 LE x, u32 LE y, u8 valid. Invalid entries are written as
//!   `0, 0, 0`.

use std::fs;
use std::io::Write;
use std::path::Path;

use pmt_core::{Grid, RemapTable};

use crate::error::{FormatError, OppError, Result};

pub const F32_MAGIC: &[u8; 4] = b"FGRD";
pub const LPTM_MAGIC: &[u8; 4] = b"LPTM";

pub fn encode_pgm(grid: &Grid<u8>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    out.extend_from_slice(grid.data());
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Grid<u8>, FormatError> {
    let (width, height, data) = decode_netpbm(bytes, b"P5", 1)?;
    Ok(Grid::from_vec(width, height, data.to_vec()).expect("length checked"))
}

/// Binary PPM of an interleaved RGB888 buffer.
pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    debug_assert_eq!(rgb.len(), width * height * 3);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

/// Returns `(width, height, rgb)`.
pub fn decode_ppm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), FormatError> {
    let (width, height, data) = decode_netpbm(bytes, b"P6", 3)?;
    Ok((width, height, data.to_vec()))
}

fn decode_netpbm<'a>(
    bytes: &'a [u8],
    magic: &[u8; 2],
    channels: usize,
) -> Result<(usize, usize, &'a [u8]), FormatError> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(FormatError::new(
            0,
            format!("expected magic {}", String::from_utf8_lossy(magic)),
        ));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (k, name) in ["width", "height", "maxval"].iter().enumerate() {
        pos = skip_space_and_comments(bytes, pos);
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            let what = if pos >= bytes.len() {
                "end of file"
            } else {
                "non-digit"
            };
            return Err(FormatError::new(
                pos,
                format!("expected {name}, found {what}"),
            ));
        }
        fields[k] = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError::new(start, format!("{name} out of range")))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(FormatError::new(
            pos,
            format!("empty image {width}x{height}"),
        ));
    }
    if maxval == 0 || maxval > 255 {
        return Err(FormatError::new(
            pos,
            format!("unsupported maxval {maxval}"),
        ));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(FormatError::new(pos, "expected whitespace after header")),
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| FormatError::new(pos, "image too large"))?;
    let have = bytes.len() - pos;
    if have < need {
        return Err(FormatError::new(
            bytes.len(),
            format!("truncated pixel data: {have} of {need} bytes starting at {pos}"),
        ));
    }
    Ok((width, height, &bytes[pos..pos + need]))
}

fn skip_space_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

pub fn encode_f32(grid: &Grid<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * grid.data().len());
    out.extend_from_slice(F32_MAGIC);
    out.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    for v in grid.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_f32(bytes: &[u8]) -> Result<Grid<f32>, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(F32_MAGIC)?;
    let width = r.u32()? as usize;
    let height = r.u32()? as usize;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| FormatError::new(4, "grid too large"))?;
    r.need(n.saturating_mul(4), "grid values")?;
    let data = (0..n)
        .map(|_| r.u32().map(f32::from_bits))
        .collect::<Result<Vec<_>, _>>()?;
    r.finish()?;
    Ok(Grid::from_vec(width, height, data).expect("length checked"))
}

/// What an LPTM file carries: geometry and entries, without the step sizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LptmDump {
    pub rho_size: usize,
    pub theta_size: usize,
    pub in_width: usize,
    pub in_height: usize,
    /// Row-major, theta outer.
    pub entries: Vec<Option<(u32, u32)>>,
}

impl LptmDump {
    pub fn valid_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }
}

impl From<&RemapTable> for LptmDump {
    fn from(t: &RemapTable) -> Self {
        let entries = (0..t.theta_size())
            .flat_map(|j| (0..t.rho_size()).map(move |i| t.entry(i, j)))
            .collect();
        LptmDump {
            rho_size: t.rho_size(),
            theta_size: t.theta_size(),
            in_width: t.in_width(),
            in_height: t.in_height(),
            entries,
        }
    }
}

pub fn encode_lptm(table: &RemapTable) -> Vec<u8> {
    encode_lptm_dump(&LptmDump::from(table))
}

pub fn encode_lptm_dump(d: &LptmDump) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 9 * d.entries.len());
    out.extend_from_slice(LPTM_MAGIC);
    for v in [d.rho_size, d.theta_size, d.in_width, d.in_height] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for e in &d.entries {
        let (x, y, valid) = match *e {
            Some((x, y)) => (x, y, 1u8),
            None => (0, 0, 0),
        };
        out.extend_from_slice(&x.to_le_bytes());
        out.extend_from_slice(&y.to_le_bytes());
        out.push(valid);
    }
    out
}

pub fn decode_lptm(bytes: &[u8]) -> Result<LptmDump, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(LPTM_MAGIC)?;
    let rho_size = r.u32()? as usize;
    let theta_size = r.u32()? as usize;
    let in_width = r.u32()? as usize;
    let in_height = r.u32()? as usize;
    let n = rho_size
        .checked_mul(theta_size)
        .ok_or_else(|| FormatError::new(4, "table too large"))?;
    r.need(n.saturating_mul(9), "map entries")?;
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let at = r.pos;
        let x = r.u32()?;
        let y = r.u32()?;
        entries.push(match r.u8()? {
            0 => None,
            1 if (x as usize) < in_width && (y as usize) < in_height => Some((x, y)),
            1 => {
                return Err(FormatError::new(
                    at,
                    format!("source ({x}, {y}) out of bounds"),
                ))
            }
            v => return Err(FormatError::new(at + 8, format!("valid flag {v}"))),
        });
    }
    r.finish()?;
    Ok(LptmDump {
        rho_size,
        theta_size,
        in_width,
        in_height,
        entries,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| FormatError::new(self.bytes.len(), "unexpected end of file"))?;
        self.pos += n;
        Ok(s)
    }

    fn need(&self, n: usize, what: &str) -> Result<(), FormatError> {
        let have = self.bytes.len() - self.pos;
        if have < n {
            return Err(FormatError::new(
                self.bytes.len(),
                format!(
                    "truncated {what}: {have} of {n} bytes starting at {}",
                    self.pos
                ),
            ));
        }
        Ok(())
    }

    fn magic(&mut self, magic: &[u8; 4]) -> Result<(), FormatError> {
        if self.bytes.get(..4) != Some(magic.as_slice()) {
            return Err(FormatError::new(
                0,
                format!("expected magic {}", String::from_utf8_lossy(magic)),
            ));
        }
        self.pos = 4;
        Ok(())
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn finish(&self) -> Result<(), FormatError> {
        if self.pos != self.bytes.len() {
            return Err(FormatError::new(
                self.pos,
                format!("{} trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}

/// Load a real-valued image from a PGM or F32 grid file, chosen by magic.
pub fn read_image(path: impl AsRef<Path>) -> Result<Grid<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| OppError::io(path, e))?;
    let parsed = if bytes.starts_with(F32_MAGIC) {
        decode_f32(&bytes).map(|g| g.map(|&v| v as f64))
    } else {
        decode_pgm(&bytes).map(|g| g.map(|&v| v as f64))
    };
    parsed.map_err(|source| OppError::Format {
        path: path.to_owned(),
        source,
    })
}

/// Write `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| OppError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| OppError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| OppError::io(path, e))?;
    tmp.persist(path).map_err(|e| OppError::io(path, e.error))?;
    Ok(())
}
