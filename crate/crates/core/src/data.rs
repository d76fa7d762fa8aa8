//! Tabular inputs and symbolic-regression tasks.

use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::Expr;

/// Column-major matrix of input values: one column per variable, one row per example.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DataMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DataMatrix { rows, cols, data: alloc::vec![0.0; rows * cols] }
    }

    /// Builds a matrix from row-major example vectors.
    ///
    /// Panics if the rows are ragged.
    pub fn from_rows(cols: usize, rows: &[Vec<f64>]) -> Self {
        let mut m = DataMatrix::zeros(rows.len(), cols);
        for (j, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "row {j} has {} entries, expected {cols}", row.len());
            for (i, &v) in row.iter().enumerate() {
                m.set(j, i, v);
            }
        }
        m
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            assert_eq!(c.len(), rows, "ragged columns");
            data.extend(c);
        }
        DataMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.data[i * self.rows..(i + 1) * self.rows]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[col * self.rows + row] = v;
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        (0..self.cols).map(|i| self.get(j, i)).collect()
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DataMatrix {
        let mut out = DataMatrix::zeros(rows.len(), self.cols);
        for (k, &j) in rows.iter().enumerate() {
            for i in 0..self.cols {
                out.set(k, i, self.get(j, i));
            }
        }
        out
    }

    /// Stacks `other` below `self`. Both must have the same column count.
    pub fn vstack(&self, other: &DataMatrix) -> DataMatrix {
        assert_eq!(self.cols, other.cols);
        let rows = self.rows + other.rows;
        let mut data = Vec::with_capacity(rows * self.cols);
        for i in 0..self.cols {
            data.extend_from_slice(self.column(i));
            data.extend_from_slice(other.column(i));
        }
        DataMatrix { rows, cols: self.cols, data }
    }
}

/// A symbolic-regression problem instance: examples `(x_j, y_j)` and an
/// optional known generating expression.
#[derive(Clone, Debug, PartialEq)]
pub struct SrTask {
    pub id: String,
    pub inputs: DataMatrix,
    pub targets: Vec<f64>,
    pub ground_truth: Option<Expr>,
}

impl SrTask {
    /// Panics if the shapes disagree or a target is not finite.
    pub fn new(id: impl Into<String>, inputs: DataMatrix, targets: Vec<f64>, ground_truth: Option<Expr>) -> Self {
        assert!(inputs.rows() >= 1, "a task needs at least one example");
        assert_eq!(inputs.rows(), targets.len(), "inputs and targets disagree on n");
        assert!(targets.iter().all(|t| t.is_finite()), "targets must be finite");
        SrTask { id: id.into(), inputs, targets, ground_truth }
    }

    pub fn arity(&self) -> usize {
        self.inputs.cols()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}
