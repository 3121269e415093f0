use std::fmt;

use crate::error::{Error, Result};

/// Axis-aligned rectangle in raster cell coordinates, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mbr {
    pub row_lo: usize,
    pub col_lo: usize,
    pub row_hi: usize,
    pub col_hi: usize,
}

impl Mbr {
    pub fn new(row_lo: usize, col_lo: usize, row_hi: usize, col_hi: usize) -> Result<Self> {
        if row_lo > row_hi || col_lo > col_hi {
            return Err(Error::InvalidRect(format!(
                "inverted bounds ({row_lo}, {col_lo})-({row_hi}, {col_hi})"
            )));
        }
        Ok(Self {
            row_lo,
            col_lo,
            row_hi,
            col_hi,
        })
    }

    pub fn cell(row: usize, col: usize) -> Self {
        Self {
            row_lo: row,
            col_lo: col,
            row_hi: row,
            col_hi: col,
        }
    }

    /// Square of `side` cells anchored at `(row0, col0)`; `side >= 1`.
    pub fn square(row0: usize, col0: usize, side: usize) -> Self {
        debug_assert!(side >= 1);
        Self {
            row_lo: row0,
            col_lo: col0,
            row_hi: row0 + side - 1,
            col_hi: col0 + side - 1,
        }
    }

    pub fn contains(&self, other: &Mbr) -> bool {
        self.row_lo <= other.row_lo
            && self.col_lo <= other.col_lo
            && other.row_hi <= self.row_hi
            && other.col_hi <= self.col_hi
    }

    pub fn contains_cell(&self, row: usize, col: usize) -> bool {
        (self.row_lo..=self.row_hi).contains(&row) && (self.col_lo..=self.col_hi).contains(&col)
    }

    pub fn intersects(&self, other: &Mbr) -> bool {
        self.row_lo <= other.row_hi
            && other.row_lo <= self.row_hi
            && self.col_lo <= other.col_hi
            && other.col_lo <= self.col_hi
    }

    pub fn intersection(&self, other: &Mbr) -> Option<Mbr> {
        self.intersects(other).then(|| Mbr {
            row_lo: self.row_lo.max(other.row_lo),
            col_lo: self.col_lo.max(other.col_lo),
            row_hi: self.row_hi.min(other.row_hi),
            col_hi: self.col_hi.min(other.col_hi),
        })
    }

    pub fn union(&self, other: &Mbr) -> Mbr {
        Mbr {
            row_lo: self.row_lo.min(other.row_lo),
            col_lo: self.col_lo.min(other.col_lo),
            row_hi: self.row_hi.max(other.row_hi),
            col_hi: self.col_hi.max(other.col_hi),
        }
    }

    /// Clip to a `n_rows x n_cols` grid anchored at the origin.
    pub fn clip(&self, n_rows: usize, n_cols: usize) -> Option<Mbr> {
        if n_rows == 0 || n_cols == 0 {
            return None;
        }
        self.intersection(&Mbr {
            row_lo: 0,
            col_lo: 0,
            row_hi: n_rows - 1,
            col_hi: n_cols - 1,
        })
    }

    pub fn rows(&self) -> usize {
        self.row_hi - self.row_lo + 1
    }

    pub fn cols(&self) -> usize {
        self.col_hi - self.col_lo + 1
    }

    pub fn area(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn center2(&self) -> (usize, usize) {
        (self.row_lo + self.row_hi, self.col_lo + self.col_hi)
    }

    /// All cells in ascending (row, col) order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.row_lo..=self.row_hi)
            .flat_map(move |r| (self.col_lo..=self.col_hi).map(move |c| (r, c)))
    }
}

impl fmt::Display for Mbr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {})-({}, {})",
            self.row_lo, self.col_lo, self.row_hi, self.col_hi
        )
    }
}

/// A grid cell as `(row, col)`.
pub type Cell = (usize, usize);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverted_rejected() {
        assert!(Mbr::new(3, 3, 0, 0).is_err());
        assert!(Mbr::new(0, 0, 0, 0).is_ok());
    }

    #[test]
    fn clip_and_intersect() {
        let m = Mbr::new(2, 2, 9, 9).unwrap();
        assert_eq!(m.clip(5, 4), Some(Mbr::new(2, 2, 4, 3).unwrap()));
        assert_eq!(Mbr::new(6, 6, 7, 7).unwrap().clip(5, 5), None);
        assert!(m.contains(&Mbr::cell(9, 2)));
        assert_eq!(m.area(), 64);
        assert_eq!(Mbr::square(4, 0, 4).cells().count(), 16);
    }
}
