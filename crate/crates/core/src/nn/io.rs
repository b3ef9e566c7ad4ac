//! Binary weights file.
//!
//! Layout (all integers little endian): magic `IPUW`, `u32` version (1),
//! `u32` layer count, then per layer `u32` in_dim, `u32` out_dim, `u8`
//! activation code, `f32` weights row-major `[out][in]`, `f32` biases.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use super::{Activation, Dense, Mlp};
use crate::{Error, Result};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"IPUW";
const VERSION: u32 = 1;

pub fn weights_to_bytes(model: &Mlp<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + model.parameter_count() * 4 + model.layers().len() * 9);
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    for l in model.layers() {
        out.extend_from_slice(&(l.in_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(l.out_dim() as u32).to_le_bytes());
        out.push(l.act.code());
        for w in l.weights.iter() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for b in l.bias.iter() {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!("weights file truncated at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn weights_from_bytes(bytes: &[u8]) -> Result<Mlp<f32>> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != WEIGHTS_MAGIC {
        return Err(Error::Format("missing IPUW magic".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported weights version {version}")));
    }
    let count = cur.u32()? as usize;
    let mut layers = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let in_dim = cur.u32()? as usize;
        let out_dim = cur.u32()? as usize;
        let code = cur.take(1)?[0];
        let act = Activation::from_code(code)
            .ok_or_else(|| Error::Format(format!("unknown activation code {code}")))?;
        let weights = Array2::from_shape_vec((out_dim, in_dim), cur.f32s(out_dim * in_dim)?)
            .map_err(|e| Error::Format(e.to_string()))?;
        let bias = Array1::from(cur.f32s(out_dim)?);
        layers.push(Dense { weights, bias, act });
    }
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last layer",
            bytes.len() - cur.pos
        )));
    }
    Mlp::from_layers(layers)
}

pub fn write_weights<W: Write>(mut w: W, model: &Mlp<f32>) -> Result<()> {
    w.write_all(&weights_to_bytes(model))?;
    Ok(())
}

pub fn read_weights<R: Read>(mut r: R) -> Result<Mlp<f32>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    weights_from_bytes(&bytes)
}

/// Git-style content hash (`sha256("blob <len>\0" + bytes)`) of the weights
/// files of one or more models, in order.
pub fn weights_hash<'a>(models: impl IntoIterator<Item = &'a Mlp<f32>>) -> String {
    let mut content = Vec::new();
    for m in models {
        content.extend_from_slice(&weights_to_bytes(m));
    }
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(&content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
