//! Dense Nyström discretization of the double-layer type operators `K`, `T`
//! and of the single layer `S`.

mod assemble;
mod export;
mod grid;

pub use assemble::{
    assemble, assemble_k, assemble_k_direct, assemble_regularized, assemble_s, assemble_t, cutoff, patch_radius,
    pv_diagonal_block, Assembled, KernelFamily, QuadratureOptions,
};
pub use export::{read_binary, write_binary, write_csv, CSV_LIMIT, MAGIC};
pub use grid::{build_flat_grid, build_grid, build_surface_grid, row_count, surface_frame, GridLayout, GridRow, QuadratureGrid, MIN_RESOLUTION};

use crate::geometry::GeometryError;
use crate::lame::{KernelError, LameParameters};
use crate::linalg::LinearOperator;
use faer::Mat;
use nalgebra::Matrix3;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NystromError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorTag {
    K,
    T,
    K2Part,
    S,
    Composite,
}

impl OperatorTag {
    pub fn code(self) -> u64 {
        match self {
            OperatorTag::K => 1,
            OperatorTag::T => 2,
            OperatorTag::K2Part => 3,
            OperatorTag::S => 4,
            OperatorTag::Composite => 5,
        }
    }

    pub fn from_code(code: u64) -> Option<Self> {
        Some(match code {
            1 => OperatorTag::K,
            2 => OperatorTag::T,
            3 => OperatorTag::K2Part,
            4 => OperatorTag::S,
            5 => OperatorTag::Composite,
            _ => return None,
        })
    }
}

/// Dense `3N × 3N` matrix of 3×3 blocks acting on nodal vector fields.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub tag: OperatorTag,
    pub matrix: Mat<f64>,
    /// Quadrature weight of every node (length N).
    pub weights: Vec<f64>,
    pub params: Option<LameParameters>,
    pub resolution: usize,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn block(&self, i: usize, j: usize) -> Matrix3<f64> {
        Matrix3::from_fn(|a, b| self.matrix[(3 * i + a, 3 * j + b)])
    }

    /// `α·A + β·B` with the metadata of `self`.
    pub fn combine(&self, alpha: f64, other: &OperatorMatrix, beta: f64, tag: OperatorTag) -> Result<OperatorMatrix, NystromError> {
        if self.dim() != other.dim() {
            return Err(NystromError::Shape(format!("{} vs {}", self.dim(), other.dim())));
        }
        let n = self.dim();
        let matrix = Mat::from_fn(n, n, |i, j| alpha * self.matrix[(i, j)] + beta * other.matrix[(i, j)]);
        Ok(OperatorMatrix {
            tag,
            matrix,
            weights: self.weights.clone(),
            params: self.params.or(other.params),
            resolution: self.resolution,
        })
    }

    /// Square roots of the weights repeated per component.
    pub fn sqrt_weights(&self) -> Vec<f64> {
        self.weights.iter().flat_map(|w| [w.sqrt(); 3]).collect()
    }

    /// `W^{1/2} A W^{-1/2}`: the matrix in the weighted L² inner product.
    pub fn weighted(&self) -> Mat<f64> {
        let s = self.sqrt_weights();
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| s[i] * self.matrix[(i, j)] / s[j])
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0_f64;
        for j in 0..self.dim() {
            for v in self.matrix.col_as_slice(j) {
                m = m.max(v.abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim()).all(|j| self.matrix.col_as_slice(j).iter().all(|v| v.is_finite()))
    }
}

impl LinearOperator for OperatorMatrix {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        crate::linalg::matvec(&self.matrix, x, y);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        crate::linalg::matvec_transpose(&self.matrix, x, y);
    }
}
