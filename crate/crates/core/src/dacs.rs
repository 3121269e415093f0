//! Directly Addressable Codes.
//!
//! A value is cut into chunks of `widths[0]`, `widths[1]`, ... bits. Level `j`
//! stores the `j`-th chunk of every value that still has bits left, plus a
//! continuation bitmap telling whether the value goes on to level `j + 1`.
//! The position of a value in the next level is the rank of its
//! continuation bit, so `access` costs one rank per level.

use crate::bitvec::{BitmapBuilder, RankBitmap};
use crate::codec::{self, Reader};
use crate::error::{Error, Result};

/// Default level cap used by the k²-raster.
pub const DEFAULT_MAX_LEVELS: usize = 3;

/// Fixed-width packed integer array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct PackedInts {
    words: Vec<u64>,
    width: u32,
    len: usize,
}

impl PackedInts {
    pub(crate) fn new(width: u32) -> Self {
        assert!(width <= 64);
        Self {
            words: Vec::new(),
            width,
            len: 0,
        }
    }

    pub(crate) fn push(&mut self, v: u64) {
        let w = self.width as usize;
        if w == 0 {
            self.len += 1;
            return;
        }
        debug_assert!(w == 64 || v >> w == 0);
        let pos = self.len * w;
        let needed = (pos + w).div_ceil(64);
        self.words.resize(needed, 0);
        let (wi, off) = (pos / 64, pos % 64);
        self.words[wi] |= v << off;
        if off + w > 64 {
            self.words[wi + 1] |= v >> (64 - off);
        }
        self.len += 1;
    }

    pub(crate) fn get(&self, i: usize) -> u64 {
        let w = self.width as usize;
        if w == 0 {
            return 0;
        }
        let pos = i * w;
        let (wi, off) = (pos / 64, pos % 64);
        let mask = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
        let mut v = self.words[wi] >> off;
        if off + w > 64 {
            v |= self.words[wi + 1] << (64 - off);
        }
        v & mask
    }

    pub(crate) fn bits(&self) -> usize {
        self.len * self.width as usize
    }

    fn write_to(&self, out: &mut Vec<u8>) {
        codec::put_u8(out, self.width as u8);
        codec::put_u64(out, self.len as u64);
        let nbytes = self.bits().div_ceil(8);
        out.extend(self.words.iter().flat_map(|w| w.to_le_bytes()).take(nbytes));
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let width = r.u8()? as u32;
        if width > 64 {
            return Err(Error::Format(format!("chunk width {width} exceeds 64")));
        }
        let len = r.u64()? as usize;
        let nbits = len
            .checked_mul(width as usize)
            .ok_or_else(|| Error::Format("packed array size overflow".into()))?;
        let bytes = r.take(nbits.div_ceil(8))?;
        let mut words: Vec<u64> = bytes
            .chunks(8)
            .map(|c| {
                let mut a = [0u8; 8];
                a[..c.len()].copy_from_slice(c);
                u64::from_le_bytes(a)
            })
            .collect();
        words.resize(nbits.div_ceil(64), 0);
        Ok(Self { words, width, len })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Level {
    chunks: PackedInts,
    /// Absent on the last level.
    more: Option<RankBitmap>,
}

/// Compressed sequence of non-negative integers with random access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DacsSequence {
    levels: Vec<Level>,
    len: usize,
}

fn bit_len(v: u64) -> usize {
    64 - v.leading_zeros() as usize
}

/// Chooses chunk widths minimising payload plus continuation bits with at
/// most `max_levels` levels. Dynamic program over bit boundaries, where
/// `over[t]` counts values needing more than `t` bits (`over[0]` counts all).
pub(crate) fn optimal_widths(values: &[u64], max_levels: usize) -> Vec<u32> {
    let top = values.iter().map(|&v| bit_len(v)).max().unwrap_or(0).max(1);
    let mut hist = vec![0usize; top + 1];
    for &v in values {
        hist[bit_len(v)] += 1;
    }
    let mut over = vec![0usize; top + 1];
    let mut acc = 0;
    for t in (0..top).rev() {
        acc += hist[t + 1];
        over[t] = acc;
    }
    over[0] = values.len();

    // cost[l][t]: cheapest encoding of bits t..top with at most l levels;
    // choice[l][t]: end boundary of the first level in that encoding.
    let inf = u128::MAX;
    let mut cost = vec![vec![inf; top + 1]; max_levels + 1];
    let mut choice = vec![vec![top; top + 1]; max_levels + 1];
    for l in 1..=max_levels {
        for t in (0..top).rev() {
            let c = over[t] as u128;
            let mut best = c * (top - t) as u128;
            let mut arg = top;
            if l > 1 {
                for end in t + 1..top {
                    let rest = cost[l - 1][end];
                    if rest == inf {
                        continue;
                    }
                    let here = c * ((end - t) as u128 + 1) + rest;
                    if here < best {
                        best = here;
                        arg = end;
                    }
                }
            }
            cost[l][t] = best;
            choice[l][t] = arg;
        }
    }
    let mut widths = Vec::new();
    let (mut t, mut l) = (0, max_levels);
    while t < top {
        let end = choice[l][t];
        widths.push((end - t) as u32);
        t = end;
        l -= 1;
    }
    widths
}

impl DacsSequence {
    pub fn encode(values: &[u64], max_levels: usize) -> Result<Self> {
        if max_levels == 0 {
            return Err(Error::InvalidConfig("DACs need at least one level".into()));
        }
        if values.is_empty() {
            return Ok(Self {
                levels: Vec::new(),
                len: 0,
            });
        }
        let widths = optimal_widths(values, max_levels);
        Ok(Self::encode_with_widths(values, &widths))
    }

    /// Rejects negative inputs, then encodes.
    pub fn encode_signed(values: &[i64], max_levels: usize) -> Result<Self> {
        let unsigned = values
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                u64::try_from(value).map_err(|_| Error::NegativeValue { index, value })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::encode(&unsigned, max_levels)
    }

    fn encode_with_widths(values: &[u64], widths: &[u32]) -> Self {
        let mut levels = Vec::with_capacity(widths.len());
        let mut current: Vec<u64> = values.to_vec();
        for (j, &w) in widths.iter().enumerate() {
            let last = j + 1 == widths.len();
            let mut chunks = PackedInts::new(w);
            let mut more = BitmapBuilder::with_capacity(if last { 0 } else { current.len() });
            let mut next = Vec::new();
            for &v in &current {
                let (low, high) = if w == 64 {
                    (v, 0)
                } else {
                    (v & ((1u64 << w) - 1), v >> w)
                };
                chunks.push(low);
                if !last {
                    more.push(high != 0);
                    if high != 0 {
                        next.push(high);
                    }
                } else {
                    debug_assert_eq!(high, 0);
                }
            }
            levels.push(Level {
                chunks,
                more: (!last).then(|| more.build()),
            });
            current = next;
        }
        Self {
            levels,
            len: values.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn widths(&self) -> Vec<u32> {
        self.levels.iter().map(|l| l.chunks.width).collect()
    }

    pub fn access(&self, i: usize) -> Result<u64> {
        if i >= self.len {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len,
            });
        }
        Ok(self.get(i))
    }

    /// Unchecked access for in-crate callers with validated indices.
    pub(crate) fn get(&self, mut i: usize) -> u64 {
        let mut value = 0u64;
        let mut shift = 0u32;
        for level in &self.levels {
            value |= level.chunks.get(i) << shift;
            shift += level.chunks.width;
            match &level.more {
                Some(more) if more.get(i) == Some(true) => i = more.rank_prefix(i),
                _ => break,
            }
        }
        value
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    /// Total encoded size in bits, rank directories included.
    pub fn size_bits(&self) -> usize {
        self.levels
            .iter()
            .map(|l| l.chunks.bits() + l.more.as_ref().map_or(0, |m| m.len() + m.directory_bits()))
            .sum()
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        codec::put_u64(out, self.len as u64);
        codec::put_u8(out, self.levels.len() as u8);
        for level in &self.levels {
            level.chunks.write_to(out);
            if let Some(more) = &level.more {
                more.write_to(out);
            }
        }
    }

    pub(crate) fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let len = r.u64()? as usize;
        let n = r.u8()? as usize;
        let mut levels = Vec::with_capacity(n);
        let mut expected = len;
        for j in 0..n {
            let chunks = PackedInts::read_from(r)?;
            if chunks.len != expected {
                return Err(Error::Format(format!(
                    "DACs level {j} holds {} chunks, expected {expected}",
                    chunks.len
                )));
            }
            let more = if j + 1 < n {
                let m = RankBitmap::read_from(r)?;
                if m.len() != expected {
                    return Err(Error::Format(format!(
                        "DACs level {j} bitmap length mismatch"
                    )));
                }
                expected = m.count_ones();
                Some(m)
            } else {
                None
            };
            levels.push(Level { chunks, more });
        }
        if n == 0 && len != 0 {
            return Err(Error::Format("DACs sequence without levels".into()));
        }
        Ok(Self { levels, len })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let s = Self::read_from(&mut r)?;
        if !r.is_empty() {
            return Err(Error::Format("trailing bytes after DACs sequence".into()));
        }
        Ok(s)
    }
}
