use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Lag-embedded regression pairs `(X_i, Y_i)`; rows of `x` are inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedSet {
    x: Array2<f64>,
    y: Vec<f64>,
}

impl SupervisedSet {
    pub fn new(x: Array2<f64>, y: Vec<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Shape { expected: x.nrows(), got: y.len() });
        }
        Ok(SupervisedSet { x, y })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Argument("ragged input rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let x = Array2::from_shape_vec((rows.len(), d), flat).map_err(|e| Error::Argument(e.to_string()))?;
        Self::new(x, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).to_vec()
    }

    /// Rows `indices`, in order.
    pub fn select(&self, indices: &[usize]) -> SupervisedSet {
        SupervisedSet { x: self.x.select(Axis(0), indices), y: indices.iter().map(|&i| self.y[i]).collect() }
    }

    /// Contiguous rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> SupervisedSet {
        SupervisedSet { x: self.x.slice(ndarray::s![start..end, ..]).to_owned(), y: self.y[start..end].to_vec() }
    }

    /// Concatenation of `self` and `other`.
    pub fn concat(&self, other: &SupervisedSet) -> Result<SupervisedSet> {
        if self.dim() != other.dim() {
            return Err(Error::Shape { expected: self.dim(), got: other.dim() });
        }
        let x = ndarray::concatenate(Axis(0), &[self.x.view(), other.x.view()])
            .map_err(|e| Error::Argument(e.to_string()))?;
        let mut y = self.y.clone();
        y.extend_from_slice(&other.y);
        Ok(SupervisedSet { x, y })
    }
}
