//! Packed bit storage for pool incidence matrices.

const WORD_BITS: usize = 64;

pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Fixed-width bit vector backed by `u64` words; trailing padding stays zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct BitVec {
    nbits: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(nbits: usize) -> Self {
        Self {
            nbits,
            words: vec![0; words_for(nbits)],
        }
    }

    pub fn ones(nbits: usize) -> Self {
        let mut v = Self {
            nbits,
            words: vec![u64::MAX; words_for(nbits)],
        };
        v.mask_padding();
        v
    }

    fn mask_padding(&mut self) {
        let rem = self.nbits % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn set(&mut self, bit: usize) {
        debug_assert!(bit < self.nbits);
        self.words[bit / WORD_BITS] |= 1u64 << (bit % WORD_BITS);
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    /// Clears every bit set in `other` (`self &= !other`).
    pub fn and_not(&mut self, other: &[u64]) {
        for (w, o) in self.words.iter_mut().zip(other) {
            *w &= !o;
        }
    }

    pub fn or_with(&mut self, other: &[u64]) {
        for (w, o) in self.words.iter_mut().zip(other) {
            *w |= o;
        }
    }

    pub fn copy_from(&mut self, other: &BitVec) {
        debug_assert_eq!(self.nbits, other.nbits);
        self.words.copy_from_slice(&other.words);
    }

    /// True when some bit of `self` falls outside `cover`.
    pub fn escapes(&self, cover: &[u64]) -> bool {
        self.words.iter().zip(cover).any(|(&w, &c)| w & !c != 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            core::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * WORD_BITS + b)
                }
            })
        })
    }
}

pub(crate) fn slices_intersect(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(&x, &y)| x & y != 0)
}

/// Row-major packed binary matrix; rows are pools, columns are elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        self.row_words(row)[col / WORD_BITS] >> (col % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, row: usize, col: usize) {
        debug_assert!(row < self.rows && col < self.cols);
        self.words[row * self.stride + col / WORD_BITS] |= 1u64 << (col % WORD_BITS);
    }

    pub fn clear(&mut self, row: usize, col: usize) {
        debug_assert!(row < self.rows && col < self.cols);
        self.words[row * self.stride + col / WORD_BITS] &= !(1u64 << (col % WORD_BITS));
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.words[row * self.stride..(row + 1) * self.stride]
    }

    pub fn row_ones(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(row).iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            core::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * WORD_BITS + b)
                }
            })
        })
    }

    #[cfg(test)]
    pub fn row_weight(&self, row: usize) -> usize {
        self.row_words(row)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// Per-column masks over rows: mask `c` has bit `r` set when row `r`
    /// contains column `c`.
    pub fn column_masks(&self) -> Vec<BitVec> {
        let mut masks = vec![BitVec::zeros(self.rows); self.cols];
        for r in 0..self.rows {
            for c in self.row_ones(r) {
                masks[c].set(r);
            }
        }
        masks
    }

    /// Row bits packed LSB-first into `ceil(cols / 8)` bytes: column `c`
    /// lives in byte `c / 8`, bit `c % 8`.
    pub fn row_bytes(&self, row: usize) -> Vec<u8> {
        let nbytes = self.cols.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes);
        for (wi, w) in self.row_words(row).iter().enumerate() {
            for j in 0..8 {
                if wi * 8 + j < nbytes {
                    out.push((w >> (8 * j)) as u8);
                }
            }
        }
        out
    }

    /// Inverse of [`Self::row_bytes`]; fails on length mismatch or nonzero
    /// padding bits past `cols`.
    pub fn set_row_from_bytes(&mut self, row: usize, bytes: &[u8]) -> Result<(), RowBytesError> {
        let nbytes = self.cols.div_ceil(8);
        if bytes.len() != nbytes {
            return Err(RowBytesError::Length {
                expected: nbytes,
                got: bytes.len(),
            });
        }
        let rem = self.cols % 8;
        if rem != 0 && bytes[nbytes - 1] >> rem != 0 {
            return Err(RowBytesError::Padding);
        }
        let stride = self.stride;
        let dst = &mut self.words[row * stride..(row + 1) * stride];
        dst.fill(0);
        for (i, &b) in bytes.iter().enumerate() {
            dst[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        Ok(())
    }
}

#[derive(Debug, PartialEq, Eq)]
pub(crate) enum RowBytesError {
    Length { expected: usize, got: usize },
    Padding,
}
