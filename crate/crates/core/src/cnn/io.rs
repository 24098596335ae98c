//! Versioned little-endian weight file.
//!
//! ```text
//! "CNNW"                 4 bytes magic
//! format_version         u32
//! architecture           10 × u32: input_channels, input_side, conv1_channels,
//!                        conv2_channels, kernel, stride, padding (0 = valid),
//!                        pool, activation (0 = relu), classes
//! param_count            u64
//! params                 param_count × f64, in `model::layout` order
//! crc32                  u32 over every preceding byte
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::model::{Activation, Architecture, CnnModel, Padding};
use super::CnnError;

pub const MAGIC: &[u8; 4] = b"CNNW";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 10 * 4 + 8;

pub fn encode_model(model: &CnnModel) -> Vec<u8> {
    let a = model.architecture();
    let mut buf = Vec::with_capacity(HEADER_LEN + model.param_count() * 8 + 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let padding = match a.padding {
        Padding::Valid => 0u32,
    };
    let activation = match a.activation {
        Activation::Relu => 0u32,
    };
    for v in [
        a.input_channels,
        a.input_side,
        a.conv1_channels,
        a.conv2_channels,
        a.kernel,
        a.stride,
        padding,
        a.pool,
        activation,
        a.classes,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(model.param_count() as u64).to_le_bytes());
    for p in model.params() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode_model(bytes: &[u8]) -> Result<CnnModel, CnnError> {
    if bytes.len() < 8 {
        return Err(CnnError::Truncated);
    }
    if &bytes[..4] != MAGIC {
        return Err(CnnError::BadMagic);
    }
    let version = u32_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(CnnError::UnsupportedVersion(version));
    }
    if bytes.len() < HEADER_LEN + 4 {
        return Err(CnnError::Truncated);
    }
    let count = u64::from_le_bytes(bytes[HEADER_LEN - 8..HEADER_LEN].try_into().expect("8 bytes"));
    let expected = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN + 4))
        .ok_or(CnnError::Truncated)?;
    if bytes.len() < expected {
        return Err(CnnError::Truncated);
    }
    if bytes.len() > expected {
        return Err(CnnError::TrailingBytes(bytes.len() - expected));
    }
    let body = &bytes[..expected - 4];
    if crc32fast::hash(body) != u32_at(bytes, expected - 4) {
        return Err(CnnError::ChecksumMismatch);
    }
    let f = |i: usize| u32_at(bytes, 8 + 4 * i);
    let padding = match f(6) {
        0 => Padding::Valid,
        _ => return Err(CnnError::ArchitectureMismatch),
    };
    let activation = match f(8) {
        0 => Activation::Relu,
        _ => return Err(CnnError::ArchitectureMismatch),
    };
    let architecture = Architecture {
        input_channels: f(0),
        input_side: f(1),
        conv1_channels: f(2),
        conv2_channels: f(3),
        kernel: f(4),
        stride: f(5),
        padding,
        pool: f(7),
        activation,
        classes: f(9),
    };
    let params = body[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    CnnModel::from_parts(architecture, params)
}

pub fn save_model(model: &CnnModel, path: impl AsRef<Path>) -> Result<(), CnnError> {
    let path = path.as_ref();
    let io_err = |source| CnnError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    w.write_all(&encode_model(model)).and_then(|_| w.flush()).map_err(io_err)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CnnModel, CnnError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| CnnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_model(&bytes)
}
