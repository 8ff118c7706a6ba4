//! Parameter checkpoint file format.
//!
//! Little-endian binary: magic `MEKT`, version `u32`, then one record per
//! tensor until EOF — name length `u32`, name bytes, rank `u32`, dims
//! `u32 x rank`, payload `f64 x product(dims)`. Tensors are written in
//! name-sorted order so identical stores produce identical bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::params::ParamStore;
use super::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"MEKT";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint magic (expected MEKT)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

pub fn save(store: &ParamStore, path: &Path) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for (name, tensor) in store.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes())?;
        for &dim in tensor.shape() {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for &v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ParamStore, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }

    let mut store = ParamStore::new();
    loop {
        let name_len = match try_read_u32(&mut r)? {
            Some(n) => n as usize,
            None => break,
        };
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| CheckpointError::Corrupt("non-utf8 tensor name".to_string()))?;
        let rank = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r)? as usize);
        }
        let count: usize = shape.iter().product();
        let mut data = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        if store.contains(&name) {
            return Err(CheckpointError::Corrupt(format!("duplicate tensor {name}")));
        }
        store.insert(&name, Tensor::new(shape, data));
    }
    Ok(store)
}

fn read_u32(r: &mut impl Read) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// None at clean EOF, Some(value) otherwise.
fn try_read_u32(r: &mut impl Read) -> Result<Option<u32>, CheckpointError> {
    let mut buf = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(CheckpointError::Corrupt("truncated record header".to_string()));
        }
        filled += n;
    }
    Ok(Some(u32::from_le_bytes(buf)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn round_trip_preserves_every_bit() {
        let mut rng = Rng::new(77);
        let mut store = ParamStore::new();
        store.insert("backbone.layer.w", Tensor::randn(&[4, 6], 1.0, &mut rng));
        store.insert("adapter.gate", Tensor::randn(&[3, 5], 0.5, &mut rng));
        store.insert("scalar", Tensor::scalar(-0.125));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save(&store, &path).unwrap();
        let loaded = load(&path).unwrap();

        assert_eq!(loaded.len(), store.len());
        for (name, tensor) in store.iter() {
            let got = loaded.get(name);
            assert_eq!(got.shape(), tensor.shape());
            for (a, b) in got.data().iter().zip(tensor.data()) {
                assert_eq!(a.to_bits(), b.to_bits(), "bit drift in {name}");
            }
        }
    }

    #[test]
    fn identical_stores_serialize_identically() {
        let mut rng = Rng::new(3);
        let mut store = ParamStore::new();
        store.insert("z", Tensor::randn(&[2, 2], 1.0, &mut rng));
        store.insert("a", Tensor::randn(&[1, 3], 1.0, &mut rng));

        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.ckpt"), dir.path().join("b.ckpt"));
        save(&store, &p1).unwrap();
        save(&store, &p2).unwrap();
        assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bogus.ckpt");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00").unwrap();
        assert!(matches!(load(&path), Err(CheckpointError::BadMagic)));
    }
}
