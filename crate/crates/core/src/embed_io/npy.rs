//! NPY v1.0 reader and writer for the three dtypes this tool exchanges.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{EmbedError, EmbeddingMatrix, LabelVector};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const PREAMBLE_LEN: usize = 10;
const ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
    I64,
}

impl Dtype {
    pub fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
            Dtype::I64 => "<i8",
        }
    }

    fn from_descr(s: &str) -> Result<Self, EmbedError> {
        match s {
            "<f4" => Ok(Dtype::F32),
            "<f8" => Ok(Dtype::F64),
            "<i8" => Ok(Dtype::I64),
            other => Err(EmbedError::Dtype(other.to_string())),
        }
    }

    fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 | Dtype::I64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NpyData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    I64(Vec<i64>),
}

/// A decoded array: shape plus flat row-major data.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: NpyData,
}

/// What [`load_array`] found in a file.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedArray {
    Matrix(EmbeddingMatrix),
    Labels(LabelVector),
}

struct Header {
    dtype: Dtype,
    fortran_order: bool,
    shape: Vec<usize>,
}

fn format_err(msg: impl Into<String>) -> EmbedError {
    EmbedError::Format(msg.into())
}

/// Finds the value text following `'key':` in a Python dict literal.
fn dict_value<'a>(header: &'a str, key: &str) -> Result<&'a str, EmbedError> {
    let pat_single = format!("'{key}'");
    let pat_double = format!("\"{key}\"");
    let start = header
        .find(&pat_single)
        .map(|p| p + pat_single.len())
        .or_else(|| header.find(&pat_double).map(|p| p + pat_double.len()))
        .ok_or_else(|| format_err(format!("header is missing key '{key}'")))?;
    let rest = header[start..].trim_start();
    let rest = rest.strip_prefix(':').ok_or_else(|| format_err(format!("expected ':' after '{key}'")))?.trim_start();
    Ok(rest)
}

fn parse_header(text: &str) -> Result<Header, EmbedError> {
    let text = text.trim_end_matches(['\n', ' ', '\0']);
    if !(text.starts_with('{') && text.ends_with('}')) {
        return Err(format_err("header is not a dict literal"));
    }

    let descr_text = dict_value(text, "descr")?;
    let quote = descr_text
        .chars()
        .next()
        .filter(|c| *c == '\'' || *c == '"')
        .ok_or_else(|| format_err("descr must be a quoted string"))?;
    let descr_end = descr_text[1..].find(quote).ok_or_else(|| format_err("unterminated descr string"))?;
    let dtype = Dtype::from_descr(&descr_text[1..1 + descr_end])?;

    let fo = dict_value(text, "fortran_order")?;
    let fortran_order = if fo.starts_with("False") {
        false
    } else if fo.starts_with("True") {
        true
    } else {
        return Err(format_err("fortran_order must be True or False"));
    };

    let shape_text = dict_value(text, "shape")?;
    let shape_text = shape_text.strip_prefix('(').ok_or_else(|| format_err("shape must be a tuple"))?;
    let close = shape_text.find(')').ok_or_else(|| format_err("unterminated shape tuple"))?;
    let shape = shape_text[..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format_err(format!("bad shape entry {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Header { dtype, fortran_order, shape })
}

/// Decodes an NPY byte buffer.
pub fn read_npy(bytes: &[u8]) -> Result<NpyArray, EmbedError> {
    if bytes.len() < PREAMBLE_LEN || &bytes[..6] != MAGIC {
        return Err(format_err("missing NPY magic bytes"));
    }
    if bytes[6] != 1 || bytes[7] != 0 {
        return Err(format_err(format!("unsupported NPY version {}.{}", bytes[6], bytes[7])));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = PREAMBLE_LEN + header_len;
    if bytes.len() < data_start {
        return Err(format_err("file ends inside the header"));
    }
    let header_text =
        std::str::from_utf8(&bytes[PREAMBLE_LEN..data_start]).map_err(|_| format_err("header is not ASCII"))?;
    let header = parse_header(header_text)?;
    if header.fortran_order {
        return Err(format_err("fortran_order arrays are not supported"));
    }

    let count = header
        .shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| format_err("shape overflows"))?;
    let expected = count.checked_mul(header.dtype.size()).ok_or_else(|| format_err("shape overflows"))?;
    let payload = &bytes[data_start..];
    if payload.len() != expected {
        return Err(EmbedError::Truncation { expected, actual: payload.len() });
    }

    let data = match header.dtype {
        Dtype::F32 => {
            NpyData::F32(payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        }
        Dtype::F64 => {
            NpyData::F64(payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        }
        Dtype::I64 => {
            NpyData::I64(payload.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().unwrap())).collect())
        }
    };
    Ok(NpyArray { shape: header.shape, data })
}

fn header_bytes(dtype: Dtype, shape: &[usize]) -> Vec<u8> {
    let shape_str = match shape {
        [one] => format!("({one},)"),
        dims => format!("({})", dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")),
    };
    let mut dict = format!("{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}", dtype.descr(), shape_str);
    // Pad so that preamble + header (including the trailing newline) is 64-aligned.
    let unpadded = PREAMBLE_LEN + dict.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    dict.extend(std::iter::repeat_n(' ', pad));
    dict.push('\n');

    let mut out = Vec::with_capacity(PREAMBLE_LEN + dict.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out
}

/// Encodes an array in NPY v1.0 layout.
pub fn write_npy(array: &NpyArray) -> Vec<u8> {
    let (dtype, mut out) = match &array.data {
        NpyData::F32(_) => (Dtype::F32, Vec::new()),
        NpyData::F64(_) => (Dtype::F64, Vec::new()),
        NpyData::I64(_) => (Dtype::I64, Vec::new()),
    };
    out.extend(header_bytes(dtype, &array.shape));
    match &array.data {
        NpyData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        NpyData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        NpyData::I64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), EmbedError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| EmbedError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| EmbedError::io(path, e))?;
    tmp.persist(path).map_err(|e| EmbedError::io(path, e.error))?;
    Ok(())
}

pub fn write_matrix(path: impl AsRef<Path>, m: &EmbeddingMatrix) -> Result<(), EmbedError> {
    let array = NpyArray { shape: vec![m.rows(), m.dim()], data: NpyData::F32(m.values().to_vec()) };
    write_atomic(path.as_ref(), &write_npy(&array))
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelVector) -> Result<(), EmbedError> {
    let array = NpyArray {
        shape: vec![labels.len()],
        data: NpyData::I64(labels.as_slice().iter().map(|&v| v as i64).collect()),
    };
    write_atomic(path.as_ref(), &write_npy(&array))
}

/// Loads a float matrix (2-D `<f4`/`<f8`) or a label vector (1-D `<i8`).
pub fn load_array(path: impl AsRef<Path>) -> Result<LoadedArray, EmbedError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| EmbedError::io(path, e))?;
    let array = read_npy(&bytes)?;
    match (array.data, array.shape.as_slice()) {
        (NpyData::F32(v), &[rows, dim]) => Ok(LoadedArray::Matrix(EmbeddingMatrix::new(rows, dim, v)?)),
        (NpyData::F64(v), &[rows, dim]) => {
            Ok(LoadedArray::Matrix(EmbeddingMatrix::new(rows, dim, v.into_iter().map(|x| x as f32).collect())?))
        }
        (NpyData::I64(v), &[_]) => Ok(LoadedArray::Labels(LabelVector::from_i64(&v)?)),
        (NpyData::I64(_), shape) => Err(EmbedError::Shape(format!("label arrays must be 1-D, got shape {shape:?}"))),
        (_, shape) => Err(EmbedError::Shape(format!("embedding arrays must be 2-D, got shape {shape:?}"))),
    }
}
