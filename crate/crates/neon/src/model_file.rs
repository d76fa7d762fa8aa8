//! Binary container for trained networks.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "NEONGAT1"
//! version  u32      1
//! count    u32      number of tensors
//! count times:
//!   name_len u16, name (UTF-8)
//!   rank     u8, dims u32 * rank
//!   data     f32 * product(dims), row-major
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use neon_core::gat::{GatDims, GatModel};

pub const MAGIC: &[u8; 8] = b"NEONGAT1";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("tensor name is not valid UTF-8")]
    BadName,
    #[error("tensor layout does not describe a known network: {0}")]
    Layout(String),
}

/// Name and shape of one stored tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorHeader {
    pub name: String,
    pub dims: Vec<usize>,
}

impl TensorHeader {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn write_model<W: Write>(w: &mut W, model: &GatModel<f32>) -> Result<(), ModelFileError> {
    let specs = model.dims.tensor_specs();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(specs.len() as u32).to_le_bytes())?;
    for ((name, dims), data) in specs.iter().zip(&model.tensors) {
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[dims.len() as u8])?;
        for &d in dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(data.len() * 4);
        for v in data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_preamble<R: Read>(r: &mut R) -> Result<usize, ModelFileError> {
    let mut magic = [0; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(ModelFileError::UnsupportedVersion(version));
    }
    Ok(read_u32(r)? as usize)
}

fn read_header<R: Read>(r: &mut R) -> Result<TensorHeader, ModelFileError> {
    let mut b2 = [0; 2];
    r.read_exact(&mut b2)?;
    let mut name = vec![0; u16::from_le_bytes(b2) as usize];
    r.read_exact(&mut name)?;
    let name = String::from_utf8(name).map_err(|_| ModelFileError::BadName)?;
    let mut rank = [0; 1];
    r.read_exact(&mut rank)?;
    let dims = (0..rank[0]).map(|_| read_u32(r).map(|d| d as usize)).collect::<io::Result<_>>()?;
    Ok(TensorHeader { name, dims })
}

/// Reads the tensor names and shapes, skipping the data.
pub fn read_headers<R: Read>(r: &mut R) -> Result<Vec<TensorHeader>, ModelFileError> {
    let count = read_preamble(r)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let h = read_header(r)?;
        let bytes = 4 * h.len() as u64;
        if io::copy(&mut r.take(bytes), &mut io::sink())? != bytes {
            return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into());
        }
        out.push(h);
    }
    Ok(out)
}

/// Recovers the network shape from the tensor list.
pub fn dims_from_headers(headers: &[TensorHeader]) -> Result<GatDims, ModelFileError> {
    let find = |name: &str| headers.iter().find(|h| h.name == name);
    let w_in = find("input.weight").ok_or_else(|| ModelFileError::Layout("missing input.weight".into()))?;
    let att = find("layer0.attention").ok_or_else(|| ModelFileError::Layout("missing layer0.attention".into()))?;
    if w_in.dims.len() != 2 || att.dims.len() != 2 {
        return Err(ModelFileError::Layout("input.weight and layer0.attention must be matrices".into()));
    }
    let layers = headers.iter().filter(|h| h.name.starts_with("layer") && h.name.ends_with(".weight")).count();
    let dims = GatDims { input: w_in.dims[0], hidden: w_in.dims[1], heads: att.dims[0], layers };
    let expected: Vec<TensorHeader> =
        dims.tensor_specs().into_iter().map(|(name, dims)| TensorHeader { name, dims }).collect();
    if expected != headers {
        return Err(ModelFileError::Layout(format!("tensors do not match {dims:?}")));
    }
    Ok(dims)
}

pub fn read_model<R: Read>(r: &mut R) -> Result<GatModel<f32>, ModelFileError> {
    let count = read_preamble(r)?;
    let mut headers = Vec::with_capacity(count);
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let h = read_header(r)?;
        let mut raw = vec![0; 4 * h.len()];
        r.read_exact(&mut raw)?;
        tensors.push(raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect());
        headers.push(h);
    }
    let dims = dims_from_headers(&headers)?;
    Ok(GatModel { dims, tensors })
}

pub fn save_model(path: &Path, model: &GatModel<f32>) -> Result<(), ModelFileError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<GatModel<f32>, ModelFileError> {
    read_model(&mut BufReader::new(File::open(path)?))
}

pub fn list_tensors(path: &Path) -> Result<Vec<TensorHeader>, ModelFileError> {
    read_headers(&mut BufReader::new(File::open(path)?))
}
