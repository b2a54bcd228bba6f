//! Labelled training samples.

use alloc::format;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Task {
    Regression,
    Classification,
}

/// N samples `(x̂ᵢ, ŷᵢ)` with inputs stored as the rows of an N×n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Matrix,
    outputs: Vec<f64>,
    task: Task,
}

impl Dataset {
    pub fn new(inputs: Matrix, outputs: Vec<f64>, task: Task) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::InvalidDataset("dataset has no samples".into()));
        }
        if inputs.cols() == 0 {
            return Err(Error::InvalidDataset("samples have no input features".into()));
        }
        if outputs.len() != inputs.rows() {
            return Err(Error::DimensionMismatch { expected: inputs.rows(), found: outputs.len() });
        }
        if let Some(pos) = inputs.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite input in row {}",
                pos / inputs.cols()
            )));
        }
        for (row, y) in outputs.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::InvalidDataset(format!("non-finite output in row {row}")));
            }
            if task == Task::Classification && *y != 1.0 && *y != -1.0 {
                return Err(Error::LabelError { row, value: *y });
            }
        }
        Ok(Self { inputs, outputs, task })
    }

    /// Convenience constructor from row slices.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], outputs: &[f64], task: Task) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?, outputs.to_vec(), task)
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn x(&self, i: usize) -> &[f64] {
        self.inputs.row(i)
    }

    pub fn y(&self, i: usize) -> f64 {
        self.outputs[i]
    }

    /// The samples with the given indices, in that order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let rows: Vec<&[f64]> = idx.iter().map(|&i| self.x(i)).collect();
        let outputs: Vec<f64> = idx.iter().map(|&i| self.y(i)).collect();
        let inputs = if rows.is_empty() { Matrix::zeros(0, self.dim()) } else { Matrix::from_rows(&rows)? };
        Self::new(inputs, outputs, self.task)
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: n });
        }
        Ok(())
    }

    pub(crate) fn require(&self, task: Task) -> Result<()> {
        if self.task != task {
            return Err(Error::InvalidDataset(format!("expected a {task:?} dataset")));
        }
        Ok(())
    }
}
