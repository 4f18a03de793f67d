//! RNBW weights container.
//!
//! Layout (all integers little-endian):
//!   magic "RNBW", u16 version = 1, u32 entry count, then per entry:
//!   u16 name length, UTF-8 name, u8 dtype (0 = f32, 1 = i8 codes + f32 scale),
//!   u8 rank, u32 dims[rank], payload.
//!
//! dtype 0 payload: numel f32 values. dtype 1 payload: one f32 scale followed
//! by numel i8 codes.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{QuantTensor, Tensor};

const MAGIC: &[u8; 4] = b"RNBW";
const VERSION: u16 = 1;

/// One named tensor in the container.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightEntry {
    Float(Tensor),
    Quantized(QuantTensor),
}

impl WeightEntry {
    /// Float view of the entry, dequantizing when needed.
    pub fn to_tensor(&self) -> Tensor {
        match self {
            WeightEntry::Float(t) => t.clone(),
            WeightEntry::Quantized(q) => crate::numerics::dequantize(q),
        }
    }
}

/// Named weights, ordered by name for deterministic serialization.
pub type WeightStore = BTreeMap<String, WeightEntry>;

pub fn write_weights<W: Write>(mut out: W, store: &WeightStore) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(store.len() as u32).to_le_bytes())?;
    for (name, entry) in store {
        let name_bytes = name.as_bytes();
        if name_bytes.len() > u16::MAX as usize {
            return Err(Error::Container(format!("name too long: {name}")));
        }
        out.write_all(&(name_bytes.len() as u16).to_le_bytes())?;
        out.write_all(name_bytes)?;
        match entry {
            WeightEntry::Float(t) => {
                out.write_all(&[0u8, t.rank() as u8])?;
                for &d in t.shape() {
                    out.write_all(&(d as u32).to_le_bytes())?;
                }
                for &v in t.data() {
                    out.write_all(&(v as f32).to_le_bytes())?;
                }
            }
            WeightEntry::Quantized(q) => {
                out.write_all(&[1u8, q.shape.len() as u8])?;
                for &d in &q.shape {
                    out.write_all(&(d as u32).to_le_bytes())?;
                }
                out.write_all(&(q.scale as f32).to_le_bytes())?;
                for &c in &q.codes {
                    out.write_all(&[c as u8])?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_weights<R: Read>(mut input: R) -> Result<WeightStore> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Container(format!("bad magic {magic:?}")));
    }
    let version = read_u16(&mut input)?;
    if version != VERSION {
        return Err(Error::Container(format!("unsupported version {version}")));
    }
    let count = read_u32(&mut input)? as usize;
    let mut store = WeightStore::new();
    for _ in 0..count {
        let name_len = read_u16(&mut input)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        input.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|e| Error::Container(format!("invalid name: {e}")))?;
        let mut head = [0u8; 2];
        input.read_exact(&mut head)?;
        let (dtype, rank) = (head[0], head[1] as usize);
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut input)? as usize);
        }
        let numel: usize = shape.iter().product();
        let entry = match dtype {
            0 => {
                let mut data = Vec::with_capacity(numel);
                for _ in 0..numel {
                    data.push(read_f32(&mut input)? as f64);
                }
                WeightEntry::Float(Tensor::new(shape, data)?)
            }
            1 => {
                let scale = read_f32(&mut input)? as f64;
                let mut codes = vec![0u8; numel];
                input.read_exact(&mut codes)?;
                let codes = codes.into_iter().map(|b| b as i8).collect();
                WeightEntry::Quantized(QuantTensor {
                    shape,
                    codes,
                    scale,
                })
            }
            other => return Err(Error::Container(format!("unknown dtype {other}"))),
        };
        store.insert(name, entry);
    }
    Ok(store)
}

pub fn write_weights_file(path: &Path, store: &WeightStore) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_weights(std::io::BufWriter::new(file), store)
}

pub fn read_weights_file(path: &Path) -> Result<WeightStore> {
    let file = std::fs::File::open(path)?;
    read_weights(std::io::BufReader::new(file))
}

fn read_u16<R: Read>(input: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    input.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32<R: Read>(input: &mut R) -> Result<f32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(f32::from_le_bytes(b))
}
