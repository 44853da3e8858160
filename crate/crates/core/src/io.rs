//! Dataset ingestion, synthetic data, and on-disk formats.
//!
//! Three vector formats are read:
//!
//! * **idx** — the classic big-endian image format: magic `0x00000803`,
//!   then item/row/column counts, then one byte per pixel. Images are
//!   flattened row-major into vectors of `0..=255` values. A label file
//!   (magic `0x00000801`) passed by mistake is called out specifically.
//! * **fvecs** — per record: a little-endian 32-bit dimension, then that
//!   many little-endian 32-bit floats.
//! * **csv** — one vector per line; an optional header line is detected by
//!   a non-numeric first field.
//!
//! Loaders never hand back a partially-read dataset: anything malformed
//! (bad magic, truncation, ragged rows, non-finite values) is a hard error
//! carrying the offending byte offset or line number.
//!
//! Sampled hash families are serialized to a single file — a one-line JSON
//! header (method, shape, parameters, seed) followed by the family's
//! numbers as little-endian 64-bit floats in row-major order — so a family
//! can be reloaded bit-exactly and reused across runs. Codes are stored as
//! a little-endian blob of packed words next to a `<path>.json` sidecar
//! recording shape and provenance.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits::BitCode;
use crate::dataset::{validate_vectors, Dataset};
use crate::error::Error;
use crate::hashers::{
    AffineHyperplaneFamily, EclipseFamily, HashFamily, HypersphereFamily,
    LinearHyperplaneFamily, Method,
};
use crate::linalg::Matrix;
use crate::rng::{sample_standard_normal_matrix, Seed, StreamPurpose};
use crate::Result;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Standard-normal synthetic data: `n_records` records and `n_queries`
/// queries of dimension `dim`, drawn record-by-record from two independent
/// streams of `seed` (so changing one count never perturbs the other half).
pub fn gen_synthetic(dim: usize, n_records: usize, n_queries: usize, seed: Seed) -> Result<Dataset> {
    if dim == 0 || n_records == 0 {
        return Err(Error::InvalidParameter(
            "synthetic data needs dim >= 1 and at least one record".into(),
        ));
    }
    let records = sample_standard_normal_matrix(n_records, dim, &mut seed.stream(StreamPurpose::Records));
    let queries = sample_standard_normal_matrix(n_queries, dim, &mut seed.stream(StreamPurpose::Queries));
    let rows = |m: &Matrix| -> Vec<Vec<f64>> { (0..m.rows()).map(|r| m.row(r).to_vec()).collect() };
    Dataset::new(format!("synthetic-{dim}d"), rows(&records), rows(&queries))
}

/// Subtracts the record mean from records and queries alike.
///
/// Queries are shifted by the *record* mean — both halves must move
/// together or distances between them change. Exact nearest neighbors in
/// Euclidean distance are unaffected either way (translation invariance);
/// hashing is not, which is the point. Re-centering an already centered
/// dataset shifts it only by the accumulated rounding residual (below
/// 1e-12 of the data scale).
pub fn center_dataset(ds: &Dataset) -> Result<Dataset> {
    if ds.records().is_empty() {
        return Err(Error::EmptyRecords("centering needs records".into()));
    }
    let dim = ds.dim();
    let mut mean = vec![0.0f64; dim];
    for rec in ds.records() {
        for (m, v) in mean.iter_mut().zip(rec) {
            *m += v;
        }
    }
    let inv = 1.0 / ds.records().len() as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    let shift = |vectors: &[Vec<f64>]| -> Vec<Vec<f64>> {
        vectors
            .iter()
            .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
            .collect()
    };
    Dataset::new(ds.name().to_string(), shift(ds.records()), shift(ds.queries()))
}

fn read_exact_or(
    reader: &mut impl Read,
    buf: &mut [u8],
    path: &str,
    offset: usize,
    what: &str,
) -> Result<()> {
    reader.read_exact(buf).map_err(|_| {
        Error::format(path, format!("truncated at byte {offset}: expected {what}"))
    })
}

/// Loads an idx image file as flattened `[0, 255]`-valued vectors.
pub fn load_idx(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path_str = path.as_ref().display().to_string();
    let mut reader = BufReader::new(File::open(path.as_ref())?);
    let mut header = [0u8; 16];
    read_exact_or(&mut reader, &mut header, &path_str, 0, "a 16-byte idx image header")?;
    let word = |i: usize| u32::from_be_bytes(header[4 * i..4 * i + 4].try_into().unwrap());
    let magic = word(0);
    if magic == IDX_LABELS_MAGIC {
        return Err(Error::format(
            &path_str,
            "this is an idx *label* file (magic 0x00000801); pass the images file",
        ));
    }
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(
            &path_str,
            format!("bad idx magic {magic:#010x}, expected 0x00000803"),
        ));
    }
    let (count, rows, cols) = (word(1) as usize, word(2) as usize, word(3) as usize);
    let dim = rows
        .checked_mul(cols)
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::format(&path_str, format!("bad image shape {rows}x{cols}")))?;
    let mut pixels = vec![0u8; dim];
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        read_exact_or(
            &mut reader,
            &mut pixels,
            &path_str,
            16 + i * dim,
            &format!("{dim} pixels of image {i}"),
        )?;
        out.push(pixels.iter().map(|&p| f64::from(p)).collect());
    }
    let mut extra = [0u8; 1];
    if reader.read(&mut extra)? != 0 {
        return Err(Error::format(
            &path_str,
            format!("trailing bytes after the {count} images the header declares"),
        ));
    }
    Ok(out)
}

/// Loads an fvecs file. An empty file is an empty list; anything else must
/// be complete, uniform-dimension records with finite values.
pub fn load_fvecs(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path_str = path.as_ref().display().to_string();
    let mut reader = BufReader::new(File::open(path.as_ref())?);
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0usize;
    loop {
        let mut dim_bytes = [0u8; 4];
        match reader.read(&mut dim_bytes)? {
            0 => break,
            4 => {}
            n => {
                // Try to finish the partial header read before declaring it short.
                if reader.read_exact(&mut dim_bytes[n..]).is_err() {
                    return Err(Error::format(
                        &path_str,
                        format!("truncated dimension header at byte {offset}"),
                    ));
                }
            }
        }
        let dim = i32::from_le_bytes(dim_bytes);
        if dim <= 0 || dim > 1 << 24 {
            return Err(Error::format(
                &path_str,
                format!("implausible record dimension {dim} at byte {offset}"),
            ));
        }
        let dim = dim as usize;
        if let Some(first) = out.first() {
            if first.len() != dim {
                return Err(Error::format(
                    &path_str,
                    format!(
                        "record {} has dimension {dim}, earlier records have {}",
                        out.len(),
                        first.len()
                    ),
                ));
            }
        }
        let mut payload = vec![0u8; dim * 4];
        read_exact_or(
            &mut reader,
            &mut payload,
            &path_str,
            offset + 4,
            &format!("{dim} floats of record {}", out.len()),
        )?;
        let values: Vec<f64> = payload
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::format(
                &path_str,
                format!("non-finite value in record {} component {j}", out.len()),
            ));
        }
        out.push(values);
        offset += 4 + dim * 4;
    }
    Ok(out)
}

/// Writes vectors as fvecs (values are narrowed to 32-bit floats, as the
/// format requires).
pub fn write_fvecs(path: impl AsRef<Path>, vectors: &[Vec<f64>]) -> Result<()> {
    validate_vectors("fvecs", vectors, None)?;
    let mut writer = BufWriter::new(File::create(path.as_ref())?);
    for v in vectors {
        writer.write_all(&(v.len() as i32).to_le_bytes())?;
        for &x in v {
            writer.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Loads a CSV of numbers, one vector per line. The first line is skipped
/// as a header exactly when its first field does not parse as a number.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path_str = path.as_ref().display().to_string();
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 1 && fields[0].parse::<f64>().is_err() {
            continue; // header row
        }
        let mut values = Vec::with_capacity(fields.len());
        for (col, field) in fields.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::format(
                    &path_str,
                    format!("line {lineno}, field {}: '{field}' is not a number", col + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::format(
                    &path_str,
                    format!("line {lineno}, field {}: non-finite value", col + 1),
                ));
            }
            values.push(v);
        }
        if let Some(first) = out.first() {
            if first.len() != values.len() {
                return Err(Error::format(
                    &path_str,
                    format!(
                        "line {lineno} has {} fields, earlier rows have {}",
                        values.len(),
                        first.len()
                    ),
                ));
            }
        }
        out.push(values);
    }
    Ok(out)
}

/// Loads vectors from any supported format: `.csv` by extension, idx by
/// magic number, fvecs otherwise.
pub fn load_vectors(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let p = path.as_ref();
    if p.extension().and_then(|e| e.to_str()) == Some("csv") {
        return load_csv(p);
    }
    let mut head = [0u8; 4];
    let n = File::open(p)?.read(&mut head)?;
    if n == 4 {
        let magic = u32::from_be_bytes(head);
        if magic == IDX_IMAGES_MAGIC || magic == IDX_LABELS_MAGIC {
            return load_idx(p);
        }
    }
    load_fvecs(p)
}

/// JSON header at the top of a family file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyHeader {
    pub format: String,
    pub version: u32,
    pub method: Method,
    /// Data dimension `N`.
    pub n: usize,
    /// Code length `B`.
    pub b: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of 64-bit floats that follow the header line.
    pub blob_len: usize,
}

const FAMILY_FORMAT: &str = "eclipsehash-family";
const FAMILY_VERSION: u32 = 1;

fn family_blob(family: &HashFamily) -> Vec<f64> {
    match family {
        HashFamily::Lh(f) => f.weights().as_slice().to_vec(),
        HashFamily::Ah(f) => {
            let mut blob = f.weights().as_slice().to_vec();
            blob.extend_from_slice(f.offsets());
            blob
        }
        HashFamily::Hs(f) => {
            let mut blob = f.centers().as_slice().to_vec();
            blob.extend_from_slice(f.radii());
            blob
        }
        HashFamily::Eh(f) => {
            let mut blob = f.planes().as_slice().to_vec();
            blob.extend_from_slice(f.intersection());
            blob
        }
    }
}

fn expected_blob_len(method: Method, n: usize, b: usize) -> usize {
    match method {
        Method::Lh => b * n,
        Method::Ah => b * n + b,
        Method::Hs => b * n + b,
        Method::Eh => b * (n + 1) + (n + 1),
    }
}

/// Serializes a family with optional provenance (`seed`) so a later run can
/// reuse the exact same draws.
pub fn save_family(path: impl AsRef<Path>, family: &HashFamily, seed: Option<Seed>) -> Result<()> {
    let (c, d) = match family.eh_params() {
        Some((c, d)) => (Some(c), Some(d)),
        None => (None, None),
    };
    let blob = family_blob(family);
    let header = FamilyHeader {
        format: FAMILY_FORMAT.into(),
        version: FAMILY_VERSION,
        method: family.method(),
        n: family.dim(),
        b: family.code_len(),
        c,
        d,
        seed: seed.map(|s| s.0),
        blob_len: blob.len(),
    };
    let mut writer = BufWriter::new(File::create(path.as_ref())?);
    serde_json::to_writer(&mut writer, &header)?;
    writer.write_all(b"\n")?;
    for v in blob {
        writer.write_all(&v.to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a family file back, verifying format, version, and that the blob
/// holds exactly the floats the header's shape implies.
pub fn load_family(path: impl AsRef<Path>) -> Result<(HashFamily, FamilyHeader)> {
    let path_str = path.as_ref().display().to_string();
    let mut reader = BufReader::new(File::open(path.as_ref())?);
    let mut header_line = Vec::new();
    reader.read_until(b'\n', &mut header_line)?;
    if header_line.last() != Some(&b'\n') {
        return Err(Error::format(&path_str, "missing header line"));
    }
    let header: FamilyHeader = serde_json::from_slice(&header_line)
        .map_err(|e| Error::format(&path_str, format!("bad header: {e}")))?;
    if header.format != FAMILY_FORMAT {
        return Err(Error::format(
            &path_str,
            format!("not a family file (format '{}')", header.format),
        ));
    }
    if header.version != FAMILY_VERSION {
        return Err(Error::format(
            &path_str,
            format!("unsupported family version {}", header.version),
        ));
    }
    let expected = expected_blob_len(header.method, header.n, header.b);
    if header.blob_len != expected {
        return Err(Error::format(
            &path_str,
            format!(
                "header shape {}x{} implies {expected} floats, header claims {}",
                header.b, header.n, header.blob_len
            ),
        ));
    }
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != expected * 8 {
        return Err(Error::format(
            &path_str,
            format!(
                "blob holds {} bytes, header shape implies {}",
                bytes.len(),
                expected * 8
            ),
        ));
    }
    let blob: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (n, b) = (header.n, header.b);
    let family = match header.method {
        Method::Lh => HashFamily::Lh(LinearHyperplaneFamily::new(Matrix::from_vec(b, n, blob)?)?),
        Method::Ah => {
            let (w, offsets) = blob.split_at(b * n);
            HashFamily::Ah(AffineHyperplaneFamily::new(
                Matrix::from_vec(b, n, w.to_vec())?,
                offsets.to_vec(),
            )?)
        }
        Method::Hs => {
            let (centers, radii) = blob.split_at(b * n);
            HashFamily::Hs(HypersphereFamily::new(
                Matrix::from_vec(b, n, centers.to_vec())?,
                radii.to_vec(),
            )?)
        }
        Method::Eh => {
            let (planes, intersection) = blob.split_at(b * (n + 1));
            let d = header
                .d
                .ok_or_else(|| Error::format(&path_str, "eh family header lacks d"))?;
            HashFamily::Eh(EclipseFamily::new(
                Matrix::from_vec(b, n + 1, planes.to_vec())?,
                intersection.to_vec(),
                d,
            )?)
        }
    };
    Ok((family, header))
}

/// Sidecar describing a codes blob.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodesSidecar {
    pub format: String,
    pub version: u32,
    pub method: Method,
    /// Bits per code.
    pub bits: usize,
    /// Number of codes.
    pub count: usize,
    pub words_per_code: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

const CODES_FORMAT: &str = "eclipsehash-codes";
const CODES_VERSION: u32 = 1;

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    std::path::PathBuf::from(s)
}

/// Writes codes as a little-endian word blob at `path` with a JSON sidecar
/// at `<path>.json`.
pub fn save_codes(
    path: impl AsRef<Path>,
    codes: &[BitCode],
    family: &HashFamily,
    seed: Option<Seed>,
) -> Result<()> {
    let bits = family.code_len();
    if let Some(bad) = codes.iter().find(|c| c.len() != bits) {
        return Err(Error::CodeLengthMismatch {
            left: bits,
            right: bad.len(),
        });
    }
    let (c, d) = match family.eh_params() {
        Some((c, d)) => (Some(c), Some(d)),
        None => (None, None),
    };
    let sidecar = CodesSidecar {
        format: CODES_FORMAT.into(),
        version: CODES_VERSION,
        method: family.method(),
        bits,
        count: codes.len(),
        words_per_code: bits.div_ceil(64),
        c,
        d,
        seed: seed.map(|s| s.0),
    };
    let mut writer = BufWriter::new(File::create(path.as_ref())?);
    for code in codes {
        for word in code.words() {
            writer.write_all(&word.to_le_bytes())?;
        }
    }
    writer.flush()?;
    serde_json::to_writer_pretty(
        BufWriter::new(File::create(sidecar_path(path.as_ref()))?),
        &sidecar,
    )?;
    Ok(())
}

/// Reads a codes blob plus sidecar written by [`save_codes`].
pub fn load_codes(path: impl AsRef<Path>) -> Result<(Vec<BitCode>, CodesSidecar)> {
    let path_str = path.as_ref().display().to_string();
    let sidecar: CodesSidecar =
        serde_json::from_reader(BufReader::new(File::open(sidecar_path(path.as_ref()))?))
            .map_err(|e| Error::format(format!("{path_str}.json"), format!("bad sidecar: {e}")))?;
    if sidecar.format != CODES_FORMAT || sidecar.version != CODES_VERSION {
        return Err(Error::format(
            format!("{path_str}.json"),
            "not a version-1 codes sidecar",
        ));
    }
    if sidecar.words_per_code != sidecar.bits.div_ceil(64) {
        return Err(Error::format(
            format!("{path_str}.json"),
            format!(
                "{} bits need {} words per code, sidecar claims {}",
                sidecar.bits,
                sidecar.bits.div_ceil(64),
                sidecar.words_per_code
            ),
        ));
    }
    let mut bytes = Vec::new();
    File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    let expected = sidecar.count * sidecar.words_per_code * 8;
    if bytes.len() != expected {
        return Err(Error::format(
            &path_str,
            format!("blob holds {} bytes, sidecar implies {expected}", bytes.len()),
        ));
    }
    let mut codes = Vec::with_capacity(sidecar.count);
    for chunk in bytes.chunks_exact(sidecar.words_per_code * 8) {
        let words: Vec<u64> = chunk
            .chunks_exact(8)
            .map(|w| u64::from_le_bytes(w.try_into().unwrap()))
            .collect();
        codes.push(BitCode::from_words(sidecar.bits, words).map_err(|e| {
            Error::format(&path_str, format!("corrupt code blob: {e}"))
        })?);
    }
    Ok((codes, sidecar))
}
