//! Plain bit sequence with a two-level rank directory.
//!
//! The directory keeps one absolute 64-bit count per 4096-bit superblock and
//! one 16-bit count (relative to the enclosing superblock) per 512-bit block.
//! Counts that are always zero (bit 0, superblock starts) are not stored, so
//! the directory costs at most 64/4096 + 16/512 ≈ 4.7% of the payload.

use crate::codec::{self, Reader};
use crate::error::{Error, Result};

const WORD: usize = 64;
const BLOCK_BITS: usize = 512;
const BLOCK_WORDS: usize = BLOCK_BITS / WORD;
const SUPER_BITS: usize = 4096;
const BLOCKS_PER_SUPER: usize = SUPER_BITS / BLOCK_BITS;

/// Growable bit buffer used while building bitmaps and packed arrays.
#[derive(Debug, Default, Clone)]
pub struct BitmapBuilder {
    words: Vec<u64>,
    len: usize,
}

impl BitmapBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(WORD)),
            len: 0,
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        if bit {
            self.words[self.len / WORD] |= 1 << (self.len % WORD);
        }
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn build(self) -> RankBitmap {
        RankBitmap::from_words(self.words, self.len)
    }
}

/// Immutable bitmap supporting `rank1` in constant time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankBitmap {
    words: Vec<u64>,
    len: usize,
    supers: Vec<u64>,
    blocks: Vec<u16>,
}

impl RankBitmap {
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut b = BitmapBuilder::new();
        for bit in bits {
            b.push(bit);
        }
        b.build()
    }

    /// Builds from packed little-endian words; bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(WORD), 0);
        if !len.is_multiple_of(WORD) {
            let last = words.len() - 1;
            words[last] &= (1u64 << (len % WORD)) - 1;
        }
        let (supers, blocks) = build_directory(&words, len);
        Self {
            words,
            len,
            supers,
            blocks,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| self.words[i / WORD] >> (i % WORD) & 1 == 1)
    }

    pub fn count_ones(&self) -> usize {
        self.rank_prefix(self.len)
    }

    /// Number of 1-bits in positions `0..=i`.
    pub fn rank1(&self, i: usize) -> Result<usize> {
        if i >= self.len {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len,
            });
        }
        Ok(self.rank_prefix(i + 1))
    }

    /// Number of 1-bits in positions `0..p` (`p <= len`).
    pub(crate) fn rank_prefix(&self, p: usize) -> usize {
        debug_assert!(p <= self.len);
        let block = p / BLOCK_BITS;
        let sup = block / BLOCKS_PER_SUPER;
        let mut count = if sup == 0 {
            0
        } else {
            self.supers[sup - 1] as usize
        };
        if !block.is_multiple_of(BLOCKS_PER_SUPER) {
            count += self.blocks[block - block / BLOCKS_PER_SUPER - 1] as usize;
        }
        let word = p / WORD;
        count += self.words[block * BLOCK_WORDS..word]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum::<usize>();
        let rem = p % WORD;
        if rem != 0 {
            count += (self.words[word] & ((1u64 << rem) - 1)).count_ones() as usize;
        }
        count
    }

    /// Bits used by the packed payload (whole words).
    pub fn payload_bits(&self) -> usize {
        self.words.len() * WORD
    }

    /// Bits used by the rank directory.
    pub fn directory_bits(&self) -> usize {
        self.supers.len() * 64 + self.blocks.len() * 16
    }

    /// Serialized form: u64 length followed by `ceil(len / 8)` payload bytes.
    /// The rank directory is rebuilt on load.
    pub fn write_to(&self, out: &mut Vec<u8>) {
        codec::put_u64(out, self.len as u64);
        let nbytes = self.len.div_ceil(8);
        out.extend(self.words.iter().flat_map(|w| w.to_le_bytes()).take(nbytes));
    }

    pub(crate) fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let len = usize::try_from(r.u64()?)
            .map_err(|_| Error::Format("bitmap length overflows usize".into()))?;
        let bytes = r.take(len.div_ceil(8))?;
        let words = bytes
            .chunks(8)
            .map(|c| {
                let mut a = [0u8; 8];
                a[..c.len()].copy_from_slice(c);
                u64::from_le_bytes(a)
            })
            .collect();
        Ok(Self::from_words(words, len))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let bm = Self::read_from(&mut r)?;
        if !r.is_empty() {
            return Err(Error::Format("trailing bytes after bitmap".into()));
        }
        Ok(bm)
    }
}

fn build_directory(words: &[u64], len: usize) -> (Vec<u64>, Vec<u16>) {
    let n_blocks = len / BLOCK_BITS;
    let mut supers = Vec::with_capacity(len / SUPER_BITS);
    let mut blocks = Vec::with_capacity(n_blocks);
    let mut total = 0u64;
    let mut in_super = 0u64;
    // Boundaries b*512 for b in 1..=n_blocks; all lie within `len`.
    for b in 1..=n_blocks {
        let ones: u64 = words[(b - 1) * BLOCK_WORDS..b * BLOCK_WORDS]
            .iter()
            .map(|w| w.count_ones() as u64)
            .sum();
        total += ones;
        in_super += ones;
        if b % BLOCKS_PER_SUPER == 0 {
            supers.push(total);
            in_super = 0;
        } else {
            blocks.push(in_super as u16);
        }
    }
    (supers, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_rank(bits: &[bool], i: usize) -> usize {
        bits[..=i].iter().filter(|&&b| b).count()
    }

    #[test]
    fn empty_bitmap_rejects_every_rank() {
        let bm = RankBitmap::from_bits([]);
        assert_eq!(bm.len(), 0);
        assert!(bm.rank1(0).is_err());
        assert_eq!(bm.count_ones(), 0);
    }

    #[test]
    fn small_fixtures() {
        let bm = RankBitmap::from_bits([true, false, true, true]);
        assert_eq!(bm.rank1(3).unwrap(), 3);
        let zeros = RankBitmap::from_bits([false; 4]);
        assert_eq!(zeros.rank1(3).unwrap(), 0);
        let ones = RankBitmap::from_bits([true; 3]);
        assert_eq!(ones.rank1(2).unwrap(), 3);
        assert!(ones.rank1(3).is_err());
    }

    #[test]
    fn random_10k_matches_prefix_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bits: Vec<bool> = (0..10_000).map(|_| rng.gen_bool(0.37)).collect();
        let bm = RankBitmap::from_bits(bits.iter().copied());
        let mut acc = 0;
        for (i, &b) in bits.iter().enumerate() {
            acc += b as usize;
            assert_eq!(bm.rank1(i).unwrap(), acc, "i={i}");
        }
        assert_eq!(bm.count_ones(), acc);
    }

    #[test]
    fn directory_boundaries() {
        for len in [511, 512, 513, 4095, 4096, 4097, 8192, 9000] {
            let bits: Vec<bool> = (0..len).map(|i| i % 3 == 0 || i % 7 == 0).collect();
            let bm = RankBitmap::from_bits(bits.iter().copied());
            for i in (0..len).step_by(37).chain([len - 1]) {
                assert_eq!(bm.rank1(i).unwrap(), naive_rank(&bits, i));
            }
        }
    }

    #[test]
    fn directory_overhead_below_six_percent() {
        for len in [
            0usize,
            1,
            100,
            512,
            513,
            4096,
            10_000,
            1 << 20,
            (1 << 20) + 77,
        ] {
            let bm = RankBitmap::from_words(vec![u64::MAX; len.div_ceil(64)], len);
            if len > 0 {
                let ratio = bm.directory_bits() as f64 / bm.payload_bits() as f64;
                assert!(ratio <= 0.06, "len={len} ratio={ratio}");
            }
        }
    }

    #[test]
    fn serialization_round_trip() {
        let bits: Vec<bool> = (0..5000).map(|i| (i * 7919) % 11 < 4).collect();
        let bm = RankBitmap::from_bits(bits);
        let bytes = bm.to_bytes();
        assert_eq!(bytes.len(), 8 + 5000usize.div_ceil(8));
        let back = RankBitmap::from_bytes(&bytes).unwrap();
        assert_eq!(back, bm);
    }
}
