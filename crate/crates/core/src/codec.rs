//! Binary model format, little-endian throughout:
//!
//! | field            | type                     |
//! |------------------|--------------------------|
//! | magic            | `b"MLPL"`                |
//! | version          | `u16` (currently 1)      |
//! | seed             | `u64`                    |
//! | layer count `L`  | `u8` (input layer included) |
//! | layer sizes      | `L × u32`                |
//! | activation tags  | `(L-1) × u8` (0 tansig, 1 purelin, 2 logsig) |
//! | input norm       | `sizes[0] × (f64 min, f64 max)` |
//! | output norm      | `sizes[L-1] × (f64 min, f64 max)` |
//! | parameters       | `f64` per layer: row-major `fan_in × fan_out` weights, then biases |
//! | checksum         | `u32` CRC-32 (IEEE) of every preceding byte |

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::mlp::{Activation, MinMax, MlpModel};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"MLPL";
pub const VERSION: u16 = 1;

pub fn encode(model: &MlpModel) -> Vec<u8> {
    let sizes = model.layer_sizes();
    let mut out = Vec::with_capacity(32 + 8 * (model.parameter_count() + 2 * (sizes[0] + sizes[sizes.len() - 1])));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&model.seed().to_le_bytes());
    out.push(u8::try_from(sizes.len()).expect("at most 255 layers"));
    for &s in sizes {
        out.extend_from_slice(&u32::try_from(s).expect("layer width fits u32").to_le_bytes());
    }
    out.extend(model.activations().iter().map(|a| a.tag()));
    for n in model.input_norm().iter().chain(model.output_norm()) {
        out.extend_from_slice(&n.min.to_le_bytes());
        out.extend_from_slice(&n.max.to_le_bytes());
    }
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::CorruptModel(format!("truncated at byte {}", self.bytes.len())));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn minmax(&mut self) -> Result<MinMax> {
        Ok(MinMax { min: self.f64()?, max: self.f64()? })
    }
}

pub fn decode(bytes: &[u8]) -> Result<MlpModel> {
    let mut r = Reader { bytes, pos: 0 };
    // A short prefix of a valid header is truncation; anything else is not ours.
    let head = &bytes[..bytes.len().min(MAGIC.len())];
    if head != &MAGIC[..head.len()] {
        return Err(Error::Format("bad magic, not a model file".into()));
    }
    r.take(MAGIC.len())?;
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let seed = r.u64()?;
    let layers = r.u8()? as usize;
    let sizes = (0..layers).map(|_| r.u32().map(|s| s as usize)).collect::<Result<Vec<_>>>()?;
    if layers < 2 || sizes.contains(&0) {
        return Err(Error::CorruptModel("inconsistent layer sizes".into()));
    }
    let activations = (0..layers - 1)
        .map(|_| {
            let tag = r.u8()?;
            Activation::from_tag(tag).ok_or_else(|| Error::CorruptModel(format!("unknown activation tag {tag}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let params_len = sizes
        .windows(2)
        .try_fold(0usize, |acc, w| w[0].checked_mul(w[1])?.checked_add(w[1])?.checked_add(acc))
        .ok_or_else(|| Error::CorruptModel("parameter count overflows".into()))?;
    let needed = (sizes[0] + sizes[layers - 1])
        .checked_mul(16)
        .and_then(|n| params_len.checked_mul(8)?.checked_add(n)?.checked_add(4));
    match needed {
        Some(n) if n <= r.remaining() => {}
        _ => return Err(Error::CorruptModel("truncated payload".into())),
    }
    let input_norm = (0..sizes[0]).map(|_| r.minmax()).collect::<Result<Vec<_>>>()?;
    let output_norm = (0..sizes[layers - 1]).map(|_| r.minmax()).collect::<Result<Vec<_>>>()?;
    let params = (0..params_len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let body_end = r.pos;
    let stored = r.u32()?;
    if r.remaining() != 0 {
        return Err(Error::CorruptModel("trailing bytes after checksum".into()));
    }
    if crc32fast::hash(&bytes[..body_end]) != stored {
        return Err(Error::CorruptModel("checksum mismatch".into()));
    }
    MlpModel::from_parts(sizes, activations, params, input_norm, output_norm, seed)
        .map_err(|e| Error::CorruptModel(e.to_string()))
}
