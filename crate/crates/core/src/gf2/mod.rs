//! Sparse linear algebra over GF(2).
//!
//! [`SparseBinaryMatrix`] holds detector matrices and cluster sub-matrices.
//! [`OtfFactorization`] is the incremental PLU factorization used to grow and
//! merge clusters: it eliminates one new column at a time against a log of
//! row operations and never revisits columns it has already reduced.

mod otf;
mod sparse;

pub use otf::{kernel_basis, plu_decompose, plu_decompose_ordered, ColumnOutcome, OtfFactorization, RowOp};
pub use sparse::{support_of, xor_supports, SparseBinaryMatrix};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("entry ({row}, {col}) is outside a {num_rows}x{num_cols} matrix")]
    EntryOutOfRange {
        row: usize,
        col: usize,
        num_rows: usize,
        num_cols: usize,
    },
    #[error("duplicate entry ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("column {0} is already part of the factorization")]
    DuplicateColumn(usize),
    #[error("row {0} is enclosed by both factorizations")]
    OverlappingRows(usize),
    #[error("right-hand side is not in the image of the matrix")]
    NotInImage,
}
