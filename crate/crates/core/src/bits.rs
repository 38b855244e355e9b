//! Dense LSB-first bit buffer backed by `u64` words.

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BitBuf {
    words: Vec<u64>,
    len: u64,
}

impl BitBuf {
    pub fn zeros(len: u64) -> Self {
        BitBuf { words: vec![0; words_for(len)], len }
    }

    pub fn ones(len: u64) -> Self {
        let mut b = BitBuf { words: vec![u64::MAX; words_for(len)], len };
        b.clear_tail();
        b
    }

    /// Takes ownership of packed words; bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: u64) -> Self {
        words.resize(words_for(len), 0);
        let mut b = BitBuf { words, len };
        b.clear_tail();
        b
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: u64) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        (self.words[(i >> 6) as usize] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: u64, v: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let w = &mut self.words[(i >> 6) as usize];
        let m = 1u64 << (i & 63);
        if v {
            *w |= m;
        } else {
            *w &= !m;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn all(&self) -> bool {
        self.count_ones() == self.len
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Little-endian byte image, `ceil(len/8)` bytes.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8) as usize;
        self.words.iter().flat_map(|w| w.to_le_bytes()).take(n).collect()
    }

    pub fn from_le_bytes(bytes: &[u8], len: u64) -> Option<Self> {
        if (bytes.len() as u64) < len.div_ceil(8) {
            return None;
        }
        let mut words = vec![0u64; words_for(len)];
        for (i, chunk) in bytes.chunks(8).enumerate().take(words.len()) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words[i] = u64::from_le_bytes(buf);
        }
        Some(BitBuf::from_words(words, len))
    }

    fn clear_tail(&mut self) {
        let r = self.len & 63;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }
}

fn words_for(len: u64) -> usize {
    len.div_ceil(64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_count() {
        let mut b = BitBuf::zeros(130);
        b.set(0, true);
        b.set(64, true);
        b.set(129, true);
        assert!(b.get(129) && !b.get(128));
        assert_eq!(b.count_ones(), 3);
        b.set(64, false);
        assert_eq!(b.count_ones(), 2);
    }

    #[test]
    fn ones_has_clean_tail() {
        let b = BitBuf::ones(70);
        assert_eq!(b.count_ones(), 70);
        assert!(b.all());
    }

    #[test]
    fn byte_round_trip() {
        let mut b = BitBuf::zeros(77);
        for i in (0..77).step_by(3) {
            b.set(i, true);
        }
        let bytes = b.to_le_bytes();
        assert_eq!(bytes.len(), 10);
        assert_eq!(BitBuf::from_le_bytes(&bytes, 77).unwrap(), b);
    }
}
