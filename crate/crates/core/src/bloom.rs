//! Fixed-size bloom filter over 64-bit keys (two multiplicative hashes).

const H1: u64 = 0x9E37_79B9_7F4A_7C15;
const H2: u64 = 0xC2B2_AE3D_27D4_EB4F;

#[derive(Clone, Debug, Default)]
pub struct BloomFilter {
    words: Vec<u64>,
    nbits: u64,
}

impl BloomFilter {
    /// A filter of `bytes` bytes (rounded up to whole words). Zero bytes
    /// yields a filter that answers "maybe" for everything.
    pub fn with_bytes(bytes: usize) -> Self {
        let words = bytes.div_ceil(8);
        BloomFilter {
            words: vec![0; words],
            nbits: words as u64 * 64,
        }
    }

    /// Sized at `ceil(block_bytes / ratio)` bytes.
    pub fn for_block(block_bytes: usize, ratio: usize) -> Self {
        if ratio == 0 {
            return Self::with_bytes(0);
        }
        Self::with_bytes(block_bytes.div_ceil(ratio))
    }

    #[inline]
    fn positions(&self, key: u64) -> [u64; 2] {
        let k = key ^ (key >> 29);
        let a = k.wrapping_mul(H1);
        let b = k.wrapping_mul(H2);
        [
            ((a as u128 * self.nbits as u128) >> 64) as u64,
            ((b as u128 * self.nbits as u128) >> 64) as u64,
        ]
    }

    #[inline]
    pub fn insert(&mut self, key: u64) {
        if self.nbits == 0 {
            return;
        }
        for p in self.positions(key) {
            self.words[(p / 64) as usize] |= 1 << (p % 64);
        }
    }

    #[inline]
    pub fn may_contain(&self, key: u64) -> bool {
        if self.nbits == 0 {
            return true;
        }
        self.positions(key)
            .iter()
            .all(|&p| self.words[(p / 64) as usize] & (1 << (p % 64)) != 0)
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn byte_len(&self) -> usize {
        self.words.len() * 8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_false_negatives() {
        let mut b = BloomFilter::with_bytes(64);
        for k in (0..400).map(|i| i * 7919) {
            b.insert(k);
        }
        for k in (0..400).map(|i| i * 7919) {
            assert!(b.may_contain(k));
        }
    }

    #[test]
    fn sized_from_block() {
        assert_eq!(BloomFilter::for_block(1024, 16).byte_len(), 64);
        assert_eq!(BloomFilter::for_block(17, 16).byte_len(), 8);
    }

    #[test]
    fn false_positive_rate_is_moderate() {
        // 16 bits per key with k = 2 gives roughly 1% false positives.
        let mut b = BloomFilter::with_bytes(2048);
        for k in 0..1024u64 {
            b.insert(k);
        }
        let fp = (1_000_000..1_100_000u64).filter(|&k| b.may_contain(k)).count();
        assert!(fp < 3_000, "false positives {fp}");
    }
}
