//! Fixed-length bit patterns (labelings of an ordered point list).
//!
//! Bits are stored so that comparing the word arrays compares patterns in
//! lexicographic bit order (bit 0 is the most significant bit of word 0).

/// A binary labeling of `len` ordered points.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitPattern {
    len: usize,
    words: Vec<u64>,
}

impl BitPattern {
    pub fn zeros(len: usize) -> Self {
        BitPattern {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut p = BitPattern::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                p.set(i, true);
            }
        }
        p
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (63 - (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (63 - (i % 64));
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Appends one bit, returning a pattern of length `len + 1`.
    pub fn extended(&self, bit: bool) -> BitPattern {
        let mut p = self.clone();
        p.len += 1;
        if p.len.div_ceil(64) > p.words.len() {
            p.words.push(0);
        }
        p.set(p.len - 1, bit);
        p
    }

    /// If the two patterns differ at exactly one coordinate, returns it.
    pub fn single_difference(&self, other: &BitPattern) -> Option<usize> {
        debug_assert_eq!(self.len, other.len);
        let mut found: Option<usize> = None;
        for (w, (&a, &b)) in self.words.iter().zip(other.words.iter()).enumerate() {
            let x = a ^ b;
            if x == 0 {
                continue;
            }
            if x.count_ones() > 1 || found.is_some() {
                return None;
            }
            found = Some(w * 64 + x.leading_zeros() as usize);
        }
        found
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

impl std::fmt::Display for BitPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in self.bits() {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}
