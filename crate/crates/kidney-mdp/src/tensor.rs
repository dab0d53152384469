//! Dense 1-based matrices and rank-3 tensors.
//!
//! All public indexing in this crate is 1-based to match the external file
//! formats: patient states run over `1..=H+1`, kidney states over `1..=K+1`,
//! mismatch levels over `1..=M`. Internally data is stored row-major with a
//! plain `index - 1` offset.

use serde::{Deserialize, Serialize};

/// Row-major matrix with 1-based indexing.
///
/// When the matrix holds a transition kernel, rows index the conditioning
/// state and columns the target state, so `get(i, j)` reads as P(j | i).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix from equal-length rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        Self::try_from(rows.to_vec()).expect("ragged rows")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i >= 1 && i <= self.rows && j >= 1 && j <= self.cols);
        self.data[(i - 1) * self.cols + (j - 1)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i >= 1 && i <= self.rows && j >= 1 && j <= self.cols);
        self.data[(i - 1) * self.cols + (j - 1)] = value;
    }

    /// Row `i` (1-based) as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        debug_assert!(i >= 1 && i <= self.rows);
        &self.data[(i - 1) * self.cols..i * self.cols]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Suffix sums of a row: `tails[t-1] = Σ_{j>=t} row[j]`.
    pub fn row_tail_sums(&self, i: usize) -> Vec<f64> {
        let row = self.row(i);
        let mut tails = vec![0.0; row.len()];
        let mut acc = 0.0;
        for j in (0..row.len()).rev() {
            acc += row[j];
            tails[j] = acc;
        }
        tails
    }
}

impl TryFrom<Vec<Vec<f64>>> for Mat {
    type Error = String;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("matrix rows have unequal lengths".to_string());
        }
        Ok(Self { rows: nrows, cols: ncols, data: rows.into_iter().flatten().collect() })
    }
}

impl From<Mat> for Vec<Vec<f64>> {
    fn from(m: Mat) -> Self {
        m.data.chunks(m.cols.max(1)).map(|c| c.to_vec()).collect()
    }
}

/// Rank-3 tensor indexed by `(h, k, m)`, all 1-based, stored h-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct Tensor3 {
    nh: usize,
    nk: usize,
    nm: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(nh: usize, nk: usize, nm: usize) -> Self {
        Self { nh, nk, nm, data: vec![0.0; nh * nk * nm] }
    }

    pub fn extents(&self) -> (usize, usize, usize) {
        (self.nh, self.nk, self.nm)
    }

    #[inline]
    fn offset(&self, h: usize, k: usize, m: usize) -> usize {
        debug_assert!(h >= 1 && h <= self.nh && k >= 1 && k <= self.nk && m >= 1 && m <= self.nm);
        ((h - 1) * self.nk + (k - 1)) * self.nm + (m - 1)
    }

    #[inline]
    pub fn get(&self, h: usize, k: usize, m: usize) -> f64 {
        self.data[self.offset(h, k, m)]
    }

    #[inline]
    pub fn set(&mut self, h: usize, k: usize, m: usize, value: f64) {
        let o = self.offset(h, k, m);
        self.data[o] = value;
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
    }

    /// Sup-norm distance to another tensor of the same shape.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.extents(), other.extents(), "tensor shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()))
    }

    /// Iterates `(h, k, m, value)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let (nk, nm) = (self.nk, self.nm);
        self.data.iter().enumerate().map(move |(i, &v)| {
            let m = i % nm;
            let k = (i / nm) % nk;
            let h = i / (nm * nk);
            (h + 1, k + 1, m + 1, v)
        })
    }
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for Tensor3 {
    type Error = String;

    fn try_from(cube: Vec<Vec<Vec<f64>>>) -> Result<Self, Self::Error> {
        let nh = cube.len();
        let nk = cube.first().map_or(0, |p| p.len());
        let nm = cube.first().and_then(|p| p.first()).map_or(0, |r| r.len());
        for plane in &cube {
            if plane.len() != nk {
                return Err("tensor planes have unequal lengths".to_string());
            }
            for row in plane {
                if row.len() != nm {
                    return Err("tensor rows have unequal lengths".to_string());
                }
            }
        }
        Ok(Self { nh, nk, nm, data: cube.into_iter().flatten().flatten().collect() })
    }
}

impl From<Tensor3> for Vec<Vec<Vec<f64>>> {
    fn from(t: Tensor3) -> Self {
        t.data
            .chunks(t.nk.max(1) * t.nm.max(1))
            .map(|plane| plane.chunks(t.nm.max(1)).map(|r| r.to_vec()).collect())
            .collect()
    }
}
