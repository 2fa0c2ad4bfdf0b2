//! Point-stream file formats.
//!
//! - `csv`: one point per line, comma-separated decimal fields. In the
//!   weighted variant the first column is a positive integer weight.
//! - `bin`: the magic bytes `SCPT`, a little-endian `u32` version (1) and a
//!   `u32` dimension, followed by the points as little-endian `f64`s. In the
//!   weighted variant each point is preceded by a little-endian `u64` weight.
//!
//! Whether a file is weighted is not recorded in it; the caller says so.
//! An empty file is an empty stream.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::coreset::WeightedPoint;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SCPT";
pub const VERSION: u32 = 1;
const HEADER_LEN: u64 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Bin,
}

impl Format {
    /// Guesses the format from a file extension (`.bin` is binary, anything else csv).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("bin") => Format::Bin,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "bin" => Ok(Format::Bin),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

fn format_err(location: String, message: impl Into<String>) -> Error {
    Error::Format {
        location,
        message: message.into(),
    }
}

/// Streaming reader; holds one record at a time.
#[derive(Debug)]
pub struct PointReader<R> {
    inner: R,
    format: Format,
    weighted: bool,
    dim: Option<usize>,
    line: u64,
    offset: u64,
    text: String,
    bytes: Vec<u8>,
    done: bool,
}

impl PointReader<BufReader<File>> {
    pub fn open(path: &Path, format: Format, weighted: bool) -> Result<Self> {
        let file = File::open(path)?;
        Ok(Self::new(BufReader::new(file), format, weighted))
    }
}

impl<R: BufRead> PointReader<R> {
    pub fn new(inner: R, format: Format, weighted: bool) -> Self {
        Self {
            inner,
            format,
            weighted,
            dim: None,
            line: 0,
            offset: 0,
            text: String::new(),
            bytes: Vec::new(),
            done: false,
        }
    }

    /// Dimension of the stream, known after the first record (or the
    /// binary header) has been read.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// Reads the next record into `coords`; returns its weight, or `None`
    /// at the end of the stream.
    pub fn read_into(&mut self, coords: &mut Vec<f64>) -> Result<Option<u64>> {
        if self.done {
            return Ok(None);
        }
        let out = match self.format {
            Format::Csv => self.read_csv(coords),
            Format::Bin => self.read_bin(coords),
        };
        if !matches!(out, Ok(Some(_))) {
            self.done = true;
        }
        out
    }

    fn read_csv(&mut self, coords: &mut Vec<f64>) -> Result<Option<u64>> {
        loop {
            self.text.clear();
            if self.inner.read_line(&mut self.text)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            let record = self.text.trim();
            if !record.is_empty() {
                break;
            }
        }
        let location = || format!("line {}", self.line);
        let mut fields = self.text.trim().split(',');
        let weight = if self.weighted {
            let field = fields.next().unwrap_or("").trim();
            match field.parse::<u64>() {
                Ok(w) if w > 0 => w,
                _ => return Err(format_err(location(), format!("invalid weight `{field}`"))),
            }
        } else {
            1
        };
        coords.clear();
        for (i, field) in fields.enumerate() {
            let field = field.trim();
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => coords.push(v),
                _ => {
                    return Err(format_err(
                        location(),
                        format!("field {}: invalid number `{field}`", i + 1 + self.weighted as usize),
                    ))
                }
            }
        }
        self.check_dim(coords.len(), location())?;
        Ok(Some(weight))
    }

    fn check_dim(&mut self, got: usize, location: String) -> Result<()> {
        if got == 0 {
            return Err(format_err(location, "record has no coordinates"));
        }
        match self.dim {
            None => self.dim = Some(got),
            Some(d) if d != got => {
                return Err(format_err(location, format!("expected {d} coordinates, found {got}")));
            }
            Some(_) => {}
        }
        Ok(())
    }

    /// Fills `buf`; returns the number of bytes read before end of input.
    fn fill(&mut self, len: usize) -> Result<usize> {
        self.bytes.resize(len, 0);
        let mut filled = 0;
        while filled < len {
            match self.inner.read(&mut self.bytes[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(filled)
    }

    fn read_header(&mut self) -> Result<bool> {
        let got = self.fill(HEADER_LEN as usize)?;
        if got == 0 {
            return Ok(false);
        }
        if got < HEADER_LEN as usize {
            return Err(format_err(format!("byte {got}"), "truncated header"));
        }
        if &self.bytes[..4] != MAGIC {
            return Err(format_err("byte 0".into(), "bad magic, expected SCPT"));
        }
        let version = u32::from_le_bytes(self.bytes[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(format_err("byte 4".into(), format!("unsupported version {version}")));
        }
        let dim = u32::from_le_bytes(self.bytes[8..12].try_into().expect("4 bytes")) as usize;
        if dim == 0 {
            return Err(format_err("byte 8".into(), "dimension is zero"));
        }
        self.dim = Some(dim);
        self.offset = HEADER_LEN;
        Ok(true)
    }

    fn read_bin(&mut self, coords: &mut Vec<f64>) -> Result<Option<u64>> {
        if self.dim.is_none() && !self.read_header()? {
            return Ok(None);
        }
        let dim = self.dim.expect("header read");
        let prefix = if self.weighted { 8 } else { 0 };
        let len = prefix + 8 * dim;
        let got = self.fill(len)?;
        if got == 0 {
            return Ok(None);
        }
        let start = self.offset;
        if got < len {
            return Err(format_err(
                format!("byte {start}"),
                format!("truncated record: {got} of {len} bytes"),
            ));
        }
        self.offset += len as u64;
        let weight = if self.weighted {
            let w = u64::from_le_bytes(self.bytes[..8].try_into().expect("8 bytes"));
            if w == 0 {
                return Err(format_err(format!("byte {start}"), "zero weight"));
            }
            w
        } else {
            1
        };
        coords.clear();
        for (i, chunk) in self.bytes[prefix..].chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            if !v.is_finite() {
                let at = start + (prefix + 8 * i) as u64;
                return Err(format_err(format!("byte {at}"), "non-finite coordinate"));
            }
            coords.push(v);
        }
        Ok(Some(weight))
    }
}

impl<R: BufRead> Iterator for PointReader<R> {
    type Item = Result<WeightedPoint>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut coords = Vec::new();
        match self.read_into(&mut coords) {
            Ok(Some(weight)) => Some(Ok(WeightedPoint { coords, weight })),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    }
}

/// Streaming writer. The binary header is emitted with the first point, so
/// an empty stream produces an empty file.
#[derive(Debug)]
pub struct PointWriter<W: Write> {
    inner: W,
    format: Format,
    weighted: bool,
    dim: Option<usize>,
}

impl PointWriter<BufWriter<File>> {
    pub fn create(path: &Path, format: Format, weighted: bool) -> Result<Self> {
        Ok(Self::new(BufWriter::new(File::create(path)?), format, weighted))
    }
}

impl<W: Write> PointWriter<W> {
    pub fn new(inner: W, format: Format, weighted: bool) -> Self {
        Self {
            inner,
            format,
            weighted,
            dim: None,
        }
    }

    /// Writes one point. `weight` is ignored by the unweighted variant.
    pub fn write(&mut self, coords: &[f64], weight: u64) -> Result<()> {
        match self.dim {
            None => {
                if coords.is_empty() {
                    return Err(Error::InvalidInput("empty point".into()));
                }
                if self.format == Format::Bin {
                    let dim = u32::try_from(coords.len())
                        .map_err(|_| Error::InvalidArgument("dimension does not fit in u32".into()))?;
                    self.inner.write_all(MAGIC)?;
                    self.inner.write_all(&VERSION.to_le_bytes())?;
                    self.inner.write_all(&dim.to_le_bytes())?;
                }
                self.dim = Some(coords.len());
            }
            Some(d) if d != coords.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: coords.len(),
                })
            }
            Some(_) => {}
        }
        match self.format {
            Format::Csv => {
                if self.weighted {
                    write!(self.inner, "{weight},")?;
                }
                for (i, v) in coords.iter().enumerate() {
                    if i > 0 {
                        self.inner.write_all(b",")?;
                    }
                    write!(self.inner, "{v}")?;
                }
                self.inner.write_all(b"\n")?;
            }
            Format::Bin => {
                if self.weighted {
                    self.inner.write_all(&weight.to_le_bytes())?;
                }
                for v in coords {
                    self.inner.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Writes a weighted coreset.
pub fn write_coreset(path: &Path, format: Format, points: &[WeightedPoint]) -> Result<()> {
    let mut w = PointWriter::create(path, format, true)?;
    for p in points {
        w.write(&p.coords, p.weight)?;
    }
    w.finish().map(|_| ())
}
