//! Little-endian binary weights file.
//!
//! Layout: 4-byte magic, `u32` version, `u32` descriptor length, the
//! architecture as JSON, then every tensor as raw `f32` values in
//! declaration order (per layer: weights `(out, in·k·k)` row-major, then
//! biases).

use std::io::{Read, Write};
use std::path::Path;

use super::{Architecture, DetectorModel};
use crate::error::{Error, Result};

pub const WEIGHTS_MAGIC: [u8; 4] = *b"ALGD";
pub const WEIGHTS_VERSION: u32 = 1;

pub fn write_weights(model: &DetectorModel, mut w: impl Write) -> Result<()> {
    let json = serde_json::to_vec(model.architecture())?;
    let mut buf = Vec::with_capacity(12 + json.len() + 4 * model.parameter_count());
    buf.extend_from_slice(&WEIGHTS_MAGIC);
    buf.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    for t in model.tensors() {
        for &v in t {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    w.write_all(&buf)
        .map_err(|e| Error::Weights(format!("write failed: {e}")))
}

pub fn read_weights(mut r: impl Read) -> Result<DetectorModel> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::Weights(format!("read failed: {e}")))?;
    let take = |at: usize, n: usize| -> Result<&[u8]> {
        bytes
            .get(at..at + n)
            .ok_or_else(|| Error::Weights("truncated file".into()))
    };
    if take(0, 4)? != WEIGHTS_MAGIC {
        return Err(Error::Weights("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(4, 4)?.try_into().unwrap());
    if version != WEIGHTS_VERSION {
        return Err(Error::Weights(format!("unsupported version {version}")));
    }
    let len = u32::from_le_bytes(take(8, 4)?.try_into().unwrap()) as usize;
    let arch: Architecture = serde_json::from_slice(take(12, len)?)
        .map_err(|e| Error::Weights(format!("bad architecture descriptor: {e}")))?;
    let mut model = DetectorModel::zeros(arch)?;
    let mut at = 12 + len;
    for t in model.tensors_mut() {
        let raw = take(at, 4 * t.len())?;
        for (v, chunk) in t.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        }
        at += raw.len();
    }
    if at != bytes.len() {
        return Err(Error::Weights(format!(
            "{} trailing bytes after tensors",
            bytes.len() - at
        )));
    }
    Ok(model)
}

pub fn save_weights(model: &DetectorModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_weights(model, std::io::BufWriter::new(f))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<DetectorModel> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_weights(std::io::BufReader::new(f))
}
