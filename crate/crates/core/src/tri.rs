//! Ragged strictly-lower-triangular coefficient storage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients `x[i][k]` for `1 <= i <= s` and `0 <= k < i`.
///
/// Stage rows are 1-based to match the usual `v_i = ... v_k ...` indexing;
/// row `i` holds exactly `i` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct LowerTriangular {
    rows: Vec<Vec<f64>>,
}

impl LowerTriangular {
    pub fn zeros(stages: usize) -> Self {
        Self {
            rows: (1..=stages).map(|i| vec![0.0; i]).collect(),
        }
    }

    /// Builds from rows `1..=s`; row `i` (1-based) must have length `i`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (idx, row) in rows.iter().enumerate() {
            if row.len() != idx + 1 {
                return Err(Error::ShapeMismatch(format!(
                    "row {} has {} entries, expected {}",
                    idx + 1,
                    row.len(),
                    idx + 1
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn stages(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.rows[i - 1][k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, value: f64) {
        self.rows[i - 1][k] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i - 1]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.rows[i - 1]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i - 1].iter().sum()
    }

    /// Iterates `(i, k, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(k, &v)| (r + 1, k, v)))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.stages() == other.stages()
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }
}

impl TryFrom<Vec<Vec<f64>>> for LowerTriangular {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<LowerTriangular> for Vec<Vec<f64>> {
    fn from(t: LowerTriangular) -> Self {
        t.rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_mismatch() {
        assert!(LowerTriangular::from_rows(vec![vec![1.0], vec![1.0]]).is_err());
        assert!(LowerTriangular::from_rows(vec![vec![1.0], vec![0.5, 0.5]]).is_ok());
    }

    #[test]
    fn entries_are_row_major() {
        let t = LowerTriangular::from_rows(vec![vec![1.0], vec![2.0, 3.0]]).unwrap();
        let e: Vec<_> = t.entries().collect();
        assert_eq!(e, vec![(1, 0, 1.0), (2, 0, 2.0), (2, 1, 3.0)]);
    }
}
