//! Binary checkpoint format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "FSHT" | version u16 | fish_id u32 | pigment u8 | env_step u64 | updates u64
//!        | seed u64 | config_hash u64 | policy_adam_t u64 | icm_adam_t u64
//!        | block count u32
//!        | blocks: name_len u16, name (UTF-8), ndim u8, dims u32 × ndim, f32 × prod(dims)
//!        | SHA-256 of every preceding byte
//! ```
//!
//! Blocks keep insertion order, so load followed by save reproduces the file byte for byte.

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::autodiff::{AdamState, ParamStore};
use crate::error::{ensure, Error, Result};
use crate::render::Pigment;

pub const MAGIC: &[u8; 4] = b"FSHT";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub fish_id: u32,
    pub pigment: Pigment,
    pub env_step: u64,
    /// PPO updates applied so far.
    pub updates: u64,
    pub seed: u64,
    pub config_hash: u64,
    /// Adam step counters; zero when optimizer state is absent.
    pub policy_adam_t: u64,
    pub icm_adam_t: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub blocks: Vec<ParamBlock>,
}

struct Reader<'b> {
    bytes: &'b [u8],
    pos: usize,
}

impl<'b> Reader<'b> {
    fn take(&mut self, n: usize) -> Result<&'b [u8]> {
        ensure!(self.bytes.len() - self.pos >= n, Checkpoint, "truncated at byte {}", self.pos);
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl Checkpoint {
    pub fn new(meta: CheckpointMeta) -> Self {
        Self { meta, blocks: Vec::new() }
    }

    /// Appends every parameter of `store` as an f32 block.
    pub fn push_store(&mut self, store: &ParamStore<f32>) {
        for (name, t) in store.iter() {
            self.blocks.push(ParamBlock { name: name.to_owned(), shape: t.shape().to_vec(), data: t.data().to_vec() });
        }
    }

    /// Appends Adam moments as `<prefix>.m/<param>` and `<prefix>.v/<param>` blocks.
    pub fn push_adam(&mut self, prefix: &str, store: &ParamStore<f32>, adam: &AdamState<f32>) {
        for (k, (name, t)) in store.iter().enumerate() {
            for (tag, buf) in [("m", &adam.m[k]), ("v", &adam.v[k])] {
                self.blocks.push(ParamBlock { name: format!("{prefix}.{tag}/{name}"), shape: t.shape().to_vec(), data: buf.clone() });
            }
        }
    }

    pub fn block(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Loads every parameter of `store` from blocks of the same name. Blocks
    /// outside `store` are ignored; a missing block or a shape mismatch is an error.
    pub fn load_store(&self, store: &mut ParamStore<f32>) -> Result<()> {
        let names: Vec<String> = store.iter().map(|(n, _)| n.to_owned()).collect();
        let mut wanted = Vec::with_capacity(names.len());
        for n in &names {
            let b = self.block(n).ok_or_else(|| Error::Checkpoint(format!("missing parameter block {n}")))?;
            wanted.push((b.name.as_str(), b.shape.as_slice(), b.data.as_slice()));
        }
        store.load_values(wanted)
    }

    /// Restores Adam moments written by [`Checkpoint::push_adam`]; `None` if absent.
    pub fn load_adam(&self, prefix: &str, store: &ParamStore<f32>, t: u64) -> Result<Option<AdamState<f32>>> {
        if !self.blocks.iter().any(|b| b.name.starts_with(&format!("{prefix}."))) {
            return Ok(None);
        }
        let mut adam = AdamState::new(store);
        for (k, (name, p)) in store.iter().enumerate() {
            for (tag, buf) in [("m", &mut adam.m[k]), ("v", &mut adam.v[k])] {
                let key = format!("{prefix}.{tag}/{name}");
                let b = self.block(&key).ok_or_else(|| Error::Checkpoint(format!("missing optimizer block {key}")))?;
                ensure!(b.shape == p.shape(), Checkpoint, "shape mismatch for {key}: expected {:?}, found {:?}", p.shape(), b.shape);
                buf.copy_from_slice(&b.data);
            }
        }
        adam.t = t;
        Ok(Some(adam))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let m = &self.meta;
        let mut out = Vec::with_capacity(64 + self.blocks.iter().map(|b| 16 + b.name.len() + 4 * b.data.len()).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&m.fish_id.to_le_bytes());
        out.push(match m.pigment {
            Pigment::Orange => 0,
            Pigment::Blue => 1,
        });
        for v in [m.env_step, m.updates, m.seed, m.config_hash, m.policy_adam_t, m.icm_adam_t] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        ensure!(self.blocks.len() <= u32::MAX as usize, Checkpoint, "too many blocks");
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for b in &self.blocks {
            ensure!(b.name.len() <= u16::MAX as usize, Checkpoint, "block name too long: {}", b.name);
            ensure!(b.shape.len() <= u8::MAX as usize, Checkpoint, "too many dimensions in {}", b.name);
            ensure!(b.shape.iter().product::<usize>() == b.data.len(), Checkpoint, "block {} has shape {:?} but {} values", b.name, b.shape, b.data.len());
            out.extend_from_slice(&(b.name.len() as u16).to_le_bytes());
            out.extend_from_slice(b.name.as_bytes());
            out.push(b.shape.len() as u8);
            for &d in &b.shape {
                ensure!(d <= u32::MAX as usize, Checkpoint, "dimension too large in {}", b.name);
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in &b.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        ensure!(bytes.len() >= 4 + 32, Checkpoint, "file too short ({} bytes)", bytes.len());
        ensure!(&bytes[..4] == MAGIC, Checkpoint, "bad magic bytes");
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        ensure!(Sha256::digest(body).as_slice() == digest, Checkpoint, "checksum mismatch");
        let mut r = Reader { bytes: body, pos: 4 };
        let version = r.u16()?;
        ensure!(version == VERSION, Checkpoint, "unsupported format version {version}");
        let fish_id = r.u32()?;
        let pigment = match r.u8()? {
            0 => Pigment::Orange,
            1 => Pigment::Blue,
            p => return Err(Error::Checkpoint(format!("unknown pigment code {p}"))),
        };
        let meta = CheckpointMeta {
            fish_id,
            pigment,
            env_step: r.u64()?,
            updates: r.u64()?,
            seed: r.u64()?,
            config_hash: r.u64()?,
            policy_adam_t: r.u64()?,
            icm_adam_t: r.u64()?,
        };
        let count = r.u32()? as usize;
        let mut blocks = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(len)?).map_err(|_| Error::Checkpoint("block name is not UTF-8".into()))?.to_owned();
            let ndim = r.u8()? as usize;
            let shape = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::Checkpoint(format!("block {name} is too large")))?)?;
            let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
            blocks.push(ParamBlock { name, shape, data });
        }
        ensure!(r.pos == body.len(), Checkpoint, "{} trailing bytes", body.len() - r.pos);
        Ok(Self { meta, blocks })
    }

    /// Writes through a temporary file so a crash never leaves a partial checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn sample() -> Checkpoint {
        let mut c = Checkpoint::new(CheckpointMeta {
            fish_id: 5,
            pigment: Pigment::Blue,
            env_step: 200_000,
            updates: 97,
            seed: 42,
            config_hash: 0xdead_beef,
            policy_adam_t: 291,
            icm_adam_t: 0,
        });
        c.blocks.push(ParamBlock { name: "a.w".into(), shape: vec![2, 3], data: vec![1.0, -2.5, 0.0, f32::MIN_POSITIVE, 3e7, -0.0] });
        c.blocks.push(ParamBlock { name: "a.b".into(), shape: vec![3], data: vec![0.1, 0.2, 0.3] });
        c
    }

    #[test]
    fn byte_identical_round_trip() {
        let c = sample();
        let bytes = c.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(&bytes[..4], b"FSHT");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), VERSION);
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = sample().to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut flipped = bytes.clone();
        flipped[40] ^= 1;
        assert!(matches!(Checkpoint::from_bytes(&flipped), Err(Error::Checkpoint(_))));
        let mut magic = bytes;
        magic[0] = b'X';
        assert!(Checkpoint::from_bytes(&magic).is_err());
    }

    #[test]
    fn store_shape_mismatch_is_an_error() {
        let c = sample();
        let mut s = ParamStore::<f32>::new();
        s.add("a.w", Tensor::zeros(&[3, 2]));
        assert!(matches!(c.load_store(&mut s), Err(Error::Checkpoint(_))));
        let mut ok = ParamStore::<f32>::new();
        ok.add("a.b", Tensor::zeros(&[3]));
        c.load_store(&mut ok).unwrap();
        assert_eq!(ok.iter().next().unwrap().1.data(), &[0.1, 0.2, 0.3]);
    }
}
