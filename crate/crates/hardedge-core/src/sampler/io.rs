//! Serialization of sample sets.
//!
//! Two formats:
//!
//! * a compact little-endian binary container (magic `HEBD`) holding the
//!   model parameters, the master seed, and every `(x, y)` frame bit-exactly
//!   — the interchange format between the sampling and spectrum stages;
//! * a human-readable CSV rendering of a single sample with the parameters
//!   in `# key = value` header comments.
//!
//! The binary reader validates the magic, the format version, and the
//! declared dimensions before trusting any length field.

use std::io::{self, Read, Write};
use std::path::Path;

/// Version stamp written into every file this module produces.
pub const FORMAT_VERSION: u32 = 1;

const MAGIC: &[u8; 4] = b"HEBD";
/// Sanity bound on dimensions read from untrusted files.
const MAX_DIM: u64 = 1 << 32;

/// Errors from reading or writing sample files.
#[derive(Debug, thiserror::Error)]
pub enum SampleIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a bidiagonal sample file (bad magic)")]
    BadMagic,
    #[error("unsupported sample file format version {found} (this build reads {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("corrupt sample file: {what}")]
    Corrupt { what: String },
}

/// A set of samples drawn at common model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub n: usize,
    pub beta: f64,
    pub a: f64,
    /// Potential coefficients `g_1..g_d`.
    pub potential: Vec<f64>,
    /// Master seed the set was generated from.
    pub seed: u64,
    /// `(x, y)` frames, each with `x.len() = n`, `y.len() = n-1`.
    pub samples: Vec<(Vec<f64>, Vec<f64>)>,
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_exact_or_corrupt<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<(), SampleIoError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            SampleIoError::Corrupt {
                what: format!("truncated while reading {what}"),
            }
        } else {
            SampleIoError::Io(e)
        }
    })
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32, SampleIoError> {
    let mut b = [0u8; 4];
    read_exact_or_corrupt(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64, SampleIoError> {
    let mut b = [0u8; 8];
    read_exact_or_corrupt(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R, what: &str) -> Result<f64, SampleIoError> {
    let mut b = [0u8; 8];
    read_exact_or_corrupt(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}

fn read_f64_vec<R: Read>(r: &mut R, len: usize, what: &str) -> Result<Vec<f64>, SampleIoError> {
    let mut out = Vec::with_capacity(len);
    let mut buf = vec![0u8; len * 8];
    read_exact_or_corrupt(r, &mut buf, what)?;
    for chunk in buf.chunks_exact(8) {
        out.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Ok(out)
}

impl SampleSet {
    /// Serialize to any writer in the binary container format.
    pub fn write<W: Write>(&self, w: &mut W) -> Result<(), SampleIoError> {
        for (i, (x, y)) in self.samples.iter().enumerate() {
            if x.len() != self.n || y.len() != self.n.saturating_sub(1) {
                return Err(SampleIoError::Corrupt {
                    what: format!(
                        "sample {i} has lengths ({}, {}) but n = {}",
                        x.len(),
                        y.len(),
                        self.n
                    ),
                });
            }
        }
        w.write_all(MAGIC)?;
        write_u32(w, FORMAT_VERSION)?;
        write_u64(w, self.n as u64)?;
        write_u64(w, self.potential.len() as u64)?;
        write_f64(w, self.beta)?;
        write_f64(w, self.a)?;
        for &g in &self.potential {
            write_f64(w, g)?;
        }
        write_u64(w, self.seed)?;
        write_u64(w, self.samples.len() as u64)?;
        for (x, y) in &self.samples {
            for &v in x {
                write_f64(w, v)?;
            }
            for &v in y {
                write_f64(w, v)?;
            }
        }
        Ok(())
    }

    /// Deserialize from any reader, validating structure before lengths are
    /// trusted.
    pub fn read<R: Read>(r: &mut R) -> Result<Self, SampleIoError> {
        let mut magic = [0u8; 4];
        read_exact_or_corrupt(r, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(SampleIoError::BadMagic);
        }
        let version = read_u32(r, "format version")?;
        if version != FORMAT_VERSION {
            return Err(SampleIoError::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let n = read_u64(r, "n")?;
        let d = read_u64(r, "potential degree")?;
        if n == 0 || n > MAX_DIM {
            return Err(SampleIoError::Corrupt {
                what: format!("implausible n = {n}"),
            });
        }
        if d == 0 || d > 64 {
            return Err(SampleIoError::Corrupt {
                what: format!("implausible potential degree {d}"),
            });
        }
        let beta = read_f64(r, "beta")?;
        let a = read_f64(r, "a")?;
        let potential = read_f64_vec(r, d as usize, "potential coefficients")?;
        let seed = read_u64(r, "seed")?;
        let count = read_u64(r, "sample count")?;
        if count > MAX_DIM {
            return Err(SampleIoError::Corrupt {
                what: format!("implausible sample count {count}"),
            });
        }
        let n = n as usize;
        let mut samples = Vec::with_capacity(count as usize);
        for i in 0..count {
            let x = read_f64_vec(r, n, &format!("sample {i} x block"))?;
            let y = read_f64_vec(r, n - 1, &format!("sample {i} y block"))?;
            samples.push((x, y));
        }
        // A clean file ends exactly at the last frame.
        let mut probe = [0u8; 1];
        match r.read(&mut probe) {
            Ok(0) => {}
            Ok(_) => {
                return Err(SampleIoError::Corrupt {
                    what: "trailing bytes after final sample".to_string(),
                })
            }
            Err(e) => return Err(SampleIoError::Io(e)),
        }
        Ok(SampleSet {
            n,
            beta,
            a,
            potential,
            seed,
            samples,
        })
    }

    /// Write to a file path (buffered).
    pub fn write_path<P: AsRef<Path>>(&self, path: P) -> Result<(), SampleIoError> {
        let mut w = io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Read from a file path (buffered).
    pub fn read_path<P: AsRef<Path>>(path: P) -> Result<Self, SampleIoError> {
        let mut r = io::BufReader::new(std::fs::File::open(path)?);
        Self::read(&mut r)
    }
}

/// Render one sample as CSV with `# key = value` header comments.  The
/// final row's `y` field is empty (there are only `n-1` off-diagonals).
pub fn write_sample_csv<W: Write>(
    w: &mut W,
    set: &SampleSet,
    index: usize,
) -> Result<(), SampleIoError> {
    let (x, y) = set.samples.get(index).ok_or_else(|| SampleIoError::Corrupt {
        what: format!("sample index {index} out of range ({} samples)", set.samples.len()),
    })?;
    writeln!(w, "# format_version = {FORMAT_VERSION}")?;
    writeln!(w, "# n = {}", set.n)?;
    writeln!(w, "# beta = {}", set.beta)?;
    writeln!(w, "# a = {}", set.a)?;
    let coeffs: Vec<String> = set.potential.iter().map(|g| format!("{g}")).collect();
    writeln!(w, "# potential = [{}]", coeffs.join(", "))?;
    writeln!(w, "# seed = {}", set.seed)?;
    writeln!(w, "# sample_index = {index}")?;
    writeln!(w, "index,x,y")?;
    for k in 0..set.n {
        if k < set.n - 1 {
            writeln!(w, "{},{:.17e},{:.17e}", k + 1, x[k], y[k])?;
        } else {
            writeln!(w, "{},{:.17e},", k + 1, x[k])?;
        }
    }
    Ok(())
}
