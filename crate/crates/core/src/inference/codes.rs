use crate::error::{Error, Result};

/// `m × n` binary codes in {-1, +1}, bit-packed per point.
///
/// Point `i` owns words `i * w .. (i + 1) * w` where `w = ceil(m / 64)`;
/// bit `k` of the point lives in word `k / 64` at position `k % 64`, and a
/// set bit means `+1`. Bits at positions `>= m` are always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMatrix {
    m: usize,
    n: usize,
    words_per_point: usize,
    words: Vec<u64>,
}

pub fn words_for_bits(m: usize) -> usize {
    m.div_ceil(64)
}

impl CodeMatrix {
    /// All codes set to -1.
    pub fn new(m: usize, n: usize) -> Self {
        let w = words_for_bits(m);
        CodeMatrix { m, n, words_per_point: w, words: vec![0; w * n] }
    }

    /// Wraps raw packed words, rejecting stray bits beyond `m`.
    pub fn from_words(m: usize, n: usize, words: Vec<u64>) -> Result<Self> {
        let w = words_for_bits(m);
        if words.len() != w * n {
            return Err(Error::format(format!(
                "expected {} code words for {n} points of {m} bits, got {}",
                w * n,
                words.len()
            )));
        }
        let codes = CodeMatrix { m, n, words_per_point: w, words };
        if w > 0 && !m.is_multiple_of(64) {
            let mask = !((1u64 << (m % 64)) - 1);
            for i in 0..n {
                if codes.point(i)[w - 1] & mask != 0 {
                    return Err(Error::format(format!("point {i} has bits set beyond bit {m}")));
                }
            }
        }
        Ok(codes)
    }

    /// Builds codes from `rows[k][i] ∈ {-1, +1}`.
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut codes = CodeMatrix::new(m, n);
        for (k, r) in rows.iter().enumerate() {
            codes.set_row(k, r)?;
        }
        Ok(codes)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words_per_point(&self) -> usize {
        self.words_per_point
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per_point..(i + 1) * self.words_per_point]
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> i8 {
        debug_assert!(k < self.m && i < self.n);
        let w = self.words[i * self.words_per_point + k / 64];
        if (w >> (k % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, value: i8) {
        debug_assert!(k < self.m && i < self.n);
        let w = &mut self.words[i * self.words_per_point + k / 64];
        let bit = 1u64 << (k % 64);
        if value > 0 {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    pub fn row(&self, k: usize) -> Vec<i8> {
        (0..self.n).map(|i| self.get(k, i)).collect()
    }

    pub fn set_row(&mut self, k: usize, values: &[i8]) -> Result<()> {
        if k >= self.m || values.len() != self.n {
            return Err(Error::contract(format!(
                "row {k} of length {} does not fit a {}x{} code matrix",
                values.len(),
                self.m,
                self.n
            )));
        }
        if values.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::contract("code entries must be -1 or +1"));
        }
        for (i, &v) in values.iter().enumerate() {
            self.set(k, i, v);
        }
        Ok(())
    }

    /// `Σ_{p < bits} z_{p,i} z_{p,j}`, computed as `bits - 2 * popcount`.
    #[inline]
    pub fn prefix_agreement(&self, i: usize, j: usize, bits: usize) -> i64 {
        debug_assert!(bits <= self.m);
        let (a, b) = (self.point(i), self.point(j));
        let mut diff = 0u32;
        let full = bits / 64;
        for w in 0..full {
            diff += (a[w] ^ b[w]).count_ones();
        }
        let rest = bits % 64;
        if rest > 0 {
            let mask = (1u64 << rest) - 1;
            diff += ((a[full] ^ b[full]) & mask).count_ones();
        }
        bits as i64 - 2 * diff as i64
    }

    /// Keeps the first `bits` rows.
    pub fn truncated(&self, bits: usize) -> CodeMatrix {
        let bits = bits.min(self.m);
        let mut out = CodeMatrix::new(bits, self.n);
        for i in 0..self.n {
            for k in 0..bits {
                out.set(k, i, self.get(k, i));
            }
        }
        out
    }
}
