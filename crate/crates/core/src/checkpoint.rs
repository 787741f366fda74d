//! Binary parameter archive shared by all models.
//!
//! Layout (little-endian): magic `SNCK`, version `u32`, config text and the
//! phone LM table, then `u32` parameter count followed by, per parameter,
//! name, constraint byte, rank, extents and row-major `f64` values.

use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::lfmmi::PhoneLm;
use crate::numerics::{Constraint, ParamStore, Tensor};

const MAGIC: &[u8; 4] = b"SNCK";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedParam {
    pub name: String,
    pub constraint: Constraint,
    pub value: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: ExperimentConfig,
    pub lm: PhoneLm,
    pub params: Vec<NamedParam>,
}

impl Checkpoint {
    pub fn capture(config: &ExperimentConfig, lm: &PhoneLm, store: &ParamStore) -> Self {
        Self {
            config: config.clone(),
            lm: lm.clone(),
            params: store
                .iter()
                .map(|(_, p)| NamedParam {
                    name: p.name.clone(),
                    constraint: p.constraint,
                    value: p.value.clone(),
                })
                .collect(),
        }
    }

    /// Copies values into `store`; names and shapes must match exactly.
    pub fn restore_into(&self, store: &mut ParamStore) -> Result<()> {
        if self.params.len() != store.len() {
            return Err(Error::Parse(format!(
                "checkpoint holds {} parameters, model has {}",
                self.params.len(),
                store.len()
            )));
        }
        for p in &self.params {
            let id = store
                .id(&p.name)
                .ok_or_else(|| Error::Parse(format!("model has no parameter {:?}", p.name)))?;
            let slot = store.get_mut(id);
            if slot.value.shape() != p.value.shape() {
                return Err(Error::Parse(format!(
                    "parameter {:?}: checkpoint shape {:?}, model shape {:?}",
                    p.name,
                    p.value.shape(),
                    slot.value.shape()
                )));
            }
            slot.value = p.value.clone();
        }
        Ok(())
    }

    pub fn param(&self, name: &str) -> Option<&NamedParam> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_bytes(&mut out, self.config.to_text().as_bytes());
        out.extend_from_slice(&(self.lm.num_phones() as u32).to_le_bytes());
        for v in self.lm.table() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for p in &self.params {
            put_bytes(&mut out, p.name.as_bytes());
            out.push(match p.constraint {
                Constraint::None => 0,
                Constraint::SemiOrthogonal => 1,
            });
            out.extend_from_slice(&(p.value.shape().len() as u32).to_le_bytes());
            for &d in p.value.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in p.value.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Parse("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Parse(format!("unsupported checkpoint version {version}")));
        }
        let text = String::from_utf8(r.bytes()?.to_vec()).map_err(|_| Error::Parse("config is not UTF-8".into()))?;
        let config = ExperimentConfig::parse(&text)?;
        let phones = r.u32()? as usize;
        let table = (0..(phones + 1) * (phones + 1)).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let lm = PhoneLm::from_table(phones, table)?;
        let count = r.u32()? as usize;
        let mut params = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let name = String::from_utf8(r.bytes()?.to_vec()).map_err(|_| Error::Parse("name is not UTF-8".into()))?;
            let constraint = match r.take(1)?[0] {
                0 => Constraint::None,
                1 => Constraint::SemiOrthogonal,
                c => return Err(Error::Parse(format!("bad constraint tag {c}"))),
            };
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            if n.checked_mul(8).is_none_or(|b| b > r.remaining()) {
                return Err(Error::Parse(format!("parameter {name:?} truncated")));
            }
            let data = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let value = Tensor::new(shape, data).map_err(|e| Error::Parse(format!("parameter {name:?}: {e}")))?;
            params.push(NamedParam { name, constraint, value });
        }
        if r.remaining() != 0 {
            return Err(Error::Parse("trailing bytes after checkpoint".into()));
        }
        Ok(Self { config, lm, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    out.extend_from_slice(&(b.len() as u32).to_le_bytes());
    out.extend_from_slice(b);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Parse("checkpoint truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.u32()? as usize;
        self.take(n)
    }
}
