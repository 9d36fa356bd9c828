// SPDX-License-Identifier: MIT OR Apache-2.0

//! Packed bit matrix stored column by column.
//!
//! Each column is a run of `u64` words over the rows, so a whole indicator
//! can be scanned, masked and popcounted without touching other columns.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_col: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_col = rows.div_ceil(64);
        Self {
            rows,
            cols,
            words_per_col,
            words: vec![0; words_per_col * cols],
        }
    }

    /// Builds from raw column words; trailing bits past `rows` are cleared.
    pub fn from_words(rows: usize, cols: usize, mut words: Vec<u64>) -> Option<Self> {
        let words_per_col = rows.div_ceil(64);
        if words.len() != words_per_col * cols {
            return None;
        }
        if !rows.is_multiple_of(64) {
            let mask = (1u64 << (rows % 64)) - 1;
            for c in 0..cols {
                words[c * words_per_col + words_per_col - 1] &= mask;
            }
        }
        Some(Self {
            rows,
            cols,
            words_per_col,
            words,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn words_per_col(&self) -> usize {
        self.words_per_col
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        (self.words[col * self.words_per_col + row / 64] >> (row % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        let w = &mut self.words[col * self.words_per_col + row / 64];
        let bit = 1u64 << (row % 64);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    #[inline]
    pub fn column(&self, col: usize) -> &[u64] {
        &self.words[col * self.words_per_col..(col + 1) * self.words_per_col]
    }

    pub fn column_ones(&self, col: usize) -> usize {
        self.column(col)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn row(&self, row: usize) -> Vec<bool> {
        (0..self.cols).map(|c| self.get(row, c)).collect()
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), self.cols);
        for c in 0..self.cols {
            for (new_row, &r) in rows.iter().enumerate() {
                if self.get(r, c) {
                    out.set(new_row, c, true);
                }
            }
        }
        out
    }
}

/// Popcount of the intersection of two equally long bitsets.
#[inline]
pub fn and_count(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x & y).count_ones() as usize)
        .sum()
}

/// The first `rows` bits of a packed column, in row order.
pub fn iter_bits(words: &[u64], rows: usize) -> impl Iterator<Item = bool> + '_ {
    (0..rows).map(move |r| (words[r / 64] >> (r % 64)) & 1 == 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_and_counts() {
        let mut m = BitMatrix::zeros(130, 3);
        for r in (0..130).step_by(3) {
            m.set(r, 1, true);
        }
        m.set(129, 2, true);
        assert!(m.get(0, 1) && m.get(129, 1) && !m.get(1, 1));
        assert_eq!(m.column_ones(1), 44);
        assert_eq!(m.column_ones(0), 0);
        assert_eq!(and_count(m.column(1), m.column(2)), 1);
        m.set(129, 2, false);
        assert_eq!(m.column_ones(2), 0);
    }

    #[test]
    fn from_words_masks_padding() {
        let m = BitMatrix::from_words(3, 2, vec![u64::MAX, 0b010]).unwrap();
        assert_eq!(m.column_ones(0), 3);
        assert_eq!(m.row(1), vec![true, true]);
        assert!(BitMatrix::from_words(3, 2, vec![0]).is_none());
    }

    #[test]
    fn select_rows_reorders() {
        let mut m = BitMatrix::zeros(4, 2);
        m.set(3, 0, true);
        m.set(1, 1, true);
        let s = m.select_rows(&[3, 1]);
        assert_eq!(s.rows(), 2);
        assert_eq!(s.row(0), vec![true, false]);
        assert_eq!(s.row(1), vec![false, true]);
        assert_eq!(
            iter_bits(s.column(0), 2).collect::<Vec<_>>(),
            vec![true, false]
        );
    }
}
