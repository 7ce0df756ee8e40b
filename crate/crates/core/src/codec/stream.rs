//! Binary container for sequences of encoded indices.
//!
//! Layout:
//!
//! ```text
//! magic "CPC" 0x01 | n: varint | count: varint | records...
//! record = sphere: varint (zero-based)
//!        | permutation rank: big-endian, fixed width per subcode
//!        | sign bits: ⌈h/8⌉ bytes, first signed position in the MSB (Variant II only)
//! ```
//!
//! The rank width of subcode `j` is the byte length of `P_j - 1`, where `P_j`
//! is its permutation count, so a one-codeword subcode spends no rank bytes.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{ConcentricCode, EncodedIndex};
use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"CPC\x01";

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::CorruptStream(format!("truncated at byte {} (need {len} more)", self.pos))
        })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn varint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.take(1)?[0];
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(Error::CorruptStream(format!("overlong varint before byte {}", self.pos)))
    }
}

fn rank_width(code: &ConcentricCode, sphere: usize) -> usize {
    let perms = code.subcodes()[sphere].permutation_count();
    let max = perms - BigUint::one();
    if max.is_zero() {
        0
    } else {
        max.bits().div_ceil(8) as usize
    }
}

fn fixed_be(v: &BigUint, width: usize) -> Vec<u8> {
    let raw = if v.is_zero() { vec![] } else { v.to_bytes_be() };
    debug_assert!(raw.len() <= width);
    let mut out = vec![0u8; width - raw.len()];
    out.extend(raw);
    out
}

pub fn write_stream(code: &ConcentricCode, indices: &[EncodedIndex]) -> Result<Vec<u8>> {
    let mut out = MAGIC.to_vec();
    put_varint(&mut out, code.n() as u64);
    put_varint(&mut out, indices.len() as u64);
    for idx in indices {
        let cw = code.subcodes().get(idx.sphere).ok_or_else(|| Error::RankOutOfRange {
            rank: format!("sphere {}", idx.sphere),
            size: format!("{} spheres", code.j()),
        })?;
        if &idx.rank >= cw.size().value() {
            return Err(Error::RankOutOfRange { rank: idx.rank.to_string(), size: cw.size().to_string() });
        }
        put_varint(&mut out, idx.sphere as u64);
        let h = cw.sign_bits();
        let perm_rank = &idx.rank >> h;
        out.extend(fixed_be(&perm_rank, rank_width(code, idx.sphere)));
        if h > 0 {
            let signs = &idx.rank - (&perm_rank << h);
            let sign_bytes = h.div_ceil(8);
            // Left-align so the first signed position lands in the MSB.
            out.extend(fixed_be(&(signs << (sign_bytes * 8 - h)), sign_bytes));
        }
    }
    Ok(out)
}

pub fn read_stream(code: &ConcentricCode, bytes: &[u8]) -> Result<Vec<EncodedIndex>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).map_err(|_| Error::CorruptStream("missing header".into()))? != MAGIC {
        return Err(Error::CorruptStream("bad magic".into()));
    }
    let n = r.varint()?;
    if n != code.n() as u64 {
        return Err(Error::CorruptStream(format!("stream dimension {n} does not match codebook dimension {}", code.n())));
    }
    let count = r.varint()?;
    let mut out = Vec::new();
    for record in 0..count {
        let sphere = r.varint()? as usize;
        let cw = code
            .subcodes()
            .get(sphere)
            .ok_or_else(|| Error::CorruptStream(format!("record {record}: sphere {sphere} out of range")))?;
        let perm_rank = BigUint::from_bytes_be(r.take(rank_width(code, sphere))?);
        if perm_rank >= cw.permutation_count() {
            return Err(Error::CorruptStream(format!("record {record}: rank out of range")));
        }
        let h = cw.sign_bits();
        let mut rank = perm_rank << h;
        if h > 0 {
            let sign_bytes = h.div_ceil(8);
            let packed = BigUint::from_bytes_be(r.take(sign_bytes)?);
            let pad = sign_bytes * 8 - h;
            if pad > 0 && !(&packed & ((BigUint::one() << pad) - 1u32)).is_zero() {
                return Err(Error::CorruptStream(format!("record {record}: nonzero sign padding")));
            }
            rank |= packed >> pad;
        }
        out.push(EncodedIndex { sphere, rank });
    }
    if r.pos != bytes.len() {
        return Err(Error::CorruptStream(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(out)
}
