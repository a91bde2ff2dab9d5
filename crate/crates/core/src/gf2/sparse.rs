use std::fmt;

use super::Gf2Error;

/// Sparse binary matrix with both row-major and column-major adjacency.
///
/// Each row list holds the sorted column indices of its nonzero entries and
/// each column list the sorted row indices, so `rows[r]` is the neighbourhood
/// of detector `r` and `cols[c]` the neighbourhood of fault `c` in the Tanner
/// graph.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SparseBinaryMatrix {
    num_rows: usize,
    num_cols: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl SparseBinaryMatrix {
    pub fn zeros(num_rows: usize, num_cols: usize) -> Self {
        Self {
            num_rows,
            num_cols,
            rows: vec![Vec::new(); num_rows],
            cols: vec![Vec::new(); num_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_columns(n, (0..n).map(|i| vec![i]).collect()).expect("identity is well-formed")
    }

    /// Builds a matrix from `(row, col)` coordinates. Duplicates and
    /// out-of-range coordinates are rejected.
    pub fn from_entries(
        num_rows: usize,
        num_cols: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, Gf2Error> {
        let mut cols = vec![Vec::new(); num_cols];
        for (r, c) in entries {
            if r >= num_rows || c >= num_cols {
                return Err(Gf2Error::EntryOutOfRange {
                    row: r,
                    col: c,
                    num_rows,
                    num_cols,
                });
            }
            cols[c].push(r);
        }
        Self::from_columns(num_rows, cols)
    }

    /// Builds a matrix from per-column row supports.
    pub fn from_columns(num_rows: usize, mut cols: Vec<Vec<usize>>) -> Result<Self, Gf2Error> {
        let num_cols = cols.len();
        let mut rows = vec![Vec::new(); num_rows];
        for (c, col) in cols.iter_mut().enumerate() {
            col.sort_unstable();
            for w in col.windows(2) {
                if w[0] == w[1] {
                    return Err(Gf2Error::DuplicateEntry { row: w[0], col: c });
                }
            }
            for &r in col.iter() {
                if r >= num_rows {
                    return Err(Gf2Error::EntryOutOfRange {
                        row: r,
                        col: c,
                        num_rows,
                        num_cols,
                    });
                }
                rows[r].push(c);
            }
        }
        Ok(Self {
            num_rows,
            num_cols,
            rows,
            cols,
        })
    }

    /// Builds a matrix from per-row column supports.
    pub fn from_rows(num_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self, Gf2Error> {
        let num_rows = rows.len();
        let t = Self::from_columns(num_cols, rows).map_err(|e| match e {
            Gf2Error::DuplicateEntry { row, col } => Gf2Error::DuplicateEntry { row: col, col: row },
            Gf2Error::EntryOutOfRange { row, col, .. } => Gf2Error::EntryOutOfRange {
                row: col,
                col: row,
                num_rows,
                num_cols,
            },
            other => other,
        })?;
        Ok(t.transpose())
    }

    /// Builds a matrix from dense 0/1 rows.
    pub fn from_dense(dense: &[Vec<u8>]) -> Self {
        let num_cols = dense.first().map_or(0, Vec::len);
        let rows = dense
            .iter()
            .map(|row| {
                assert_eq!(row.len(), num_cols, "ragged dense matrix");
                row.iter()
                    .enumerate()
                    .filter(|(_, &b)| b & 1 == 1)
                    .map(|(c, _)| c)
                    .collect()
            })
            .collect();
        Self::from_rows(num_cols, rows).expect("dense rows are well-formed")
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut out = vec![vec![0u8; self.num_cols]; self.num_rows];
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                out[r][c] = 1;
            }
        }
        out
    }

    #[inline]
    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    #[inline]
    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    /// Sorted column indices of the nonzero entries in row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> &[usize] {
        &self.rows[r]
    }

    /// Sorted row indices of the nonzero entries in column `c`.
    #[inline]
    pub fn col(&self, c: usize) -> &[usize] {
        &self.cols[c]
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.cols[c].binary_search(&r).is_ok()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |&r| (r, c)))
    }

    pub fn transpose(&self) -> Self {
        Self {
            num_rows: self.num_cols,
            num_cols: self.num_rows,
            rows: self.cols.clone(),
            cols: self.rows.clone(),
        }
    }

    /// Computes `self · x` for a support vector `x` over the columns; the
    /// result is the sorted support over rows.
    pub fn mul_support(&self, x: &[usize]) -> Vec<usize> {
        let mut acc = vec![false; self.num_rows];
        for &c in x {
            for &r in &self.cols[c] {
                acc[r] ^= true;
            }
        }
        support_of(&acc)
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, other: &Self) -> Result<Self, Gf2Error> {
        if self.num_cols != other.num_rows {
            return Err(Gf2Error::ShapeMismatch {
                left: (self.num_rows, self.num_cols),
                right: (other.num_rows, other.num_cols),
            });
        }
        let cols = (0..other.num_cols)
            .map(|c| self.mul_support(other.col(c)))
            .collect();
        Self::from_columns(self.num_rows, cols)
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(Vec::is_empty)
    }

    /// Sub-matrix keeping the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let picked = cols.iter().map(|&c| self.cols[c].clone()).collect();
        Self::from_columns(self.num_rows, picked).expect("selected columns stay well-formed")
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self, Gf2Error> {
        if self.num_rows != other.num_rows {
            return Err(Gf2Error::ShapeMismatch {
                left: (self.num_rows, self.num_cols),
                right: (other.num_rows, other.num_cols),
            });
        }
        let cols = self.cols.iter().chain(other.cols.iter()).cloned().collect();
        Self::from_columns(self.num_rows, cols)
    }

    /// Kronecker product over GF(2).
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.num_rows * other.num_rows;
        let mut cols = Vec::with_capacity(self.num_cols * other.num_cols);
        for a in &self.cols {
            for b in &other.cols {
                let mut col = Vec::with_capacity(a.len() * b.len());
                for &ra in a {
                    for &rb in b {
                        col.push(ra * other.num_rows + rb);
                    }
                }
                cols.push(col);
            }
        }
        Self::from_columns(rows, cols).expect("kronecker product is well-formed")
    }

    /// GF(2) rank, via the incremental factorization.
    pub fn rank(&self) -> usize {
        super::plu_decompose(self).rank()
    }
}

impl fmt::Debug for SparseBinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparseBinaryMatrix({}x{}", self.num_rows, self.num_cols)?;
        if self.num_rows <= 16 && self.num_cols <= 32 {
            for row in self.to_dense() {
                f.write_str("\n  ")?;
                for b in row {
                    f.write_str(if b == 1 { "1" } else { "." })?;
                }
            }
        } else {
            write!(f, ", nnz={}", self.nnz())?;
        }
        f.write_str(")")
    }
}

/// Sorted support of a dense boolean vector.
pub fn support_of(bits: &[bool]) -> Vec<usize> {
    bits.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

/// Symmetric difference of two sorted supports.
pub fn xor_supports(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_and_column_views_agree() {
        let m = SparseBinaryMatrix::from_entries(3, 4, [(0, 1), (2, 3), (1, 1), (0, 0)]).unwrap();
        assert_eq!(m.col(1), &[0, 1]);
        assert_eq!(m.row(0), &[0, 1]);
        let mut from_rows: Vec<_> = (0..3)
            .flat_map(|r| m.row(r).iter().map(move |&c| (r, c)))
            .collect();
        let mut from_cols: Vec<_> = m.entries().collect();
        from_rows.sort_unstable();
        from_cols.sort_unstable();
        assert_eq!(from_rows, from_cols);
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(matches!(
            SparseBinaryMatrix::from_entries(2, 2, [(0, 0), (0, 0)]),
            Err(Gf2Error::DuplicateEntry { row: 0, col: 0 })
        ));
        assert!(matches!(
            SparseBinaryMatrix::from_entries(2, 2, [(2, 0)]),
            Err(Gf2Error::EntryOutOfRange { .. })
        ));
        assert!(matches!(
            SparseBinaryMatrix::from_rows(3, vec![vec![0, 0]]),
            Err(Gf2Error::DuplicateEntry { row: 0, col: 0 })
        ));
    }

    #[test]
    fn products() {
        let a = SparseBinaryMatrix::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]);
        assert_eq!(a.mul_support(&[0, 1, 2]), Vec::<usize>::new());
        assert_eq!(a.mul_support(&[1]), vec![0, 1]);
        let ata = a.mul(&a.transpose()).unwrap();
        assert_eq!(ata.to_dense(), vec![vec![0, 1], vec![1, 0]]);
        let k = SparseBinaryMatrix::identity(2).kron(&a);
        assert_eq!(k.num_rows(), 4);
        assert_eq!(k.num_cols(), 6);
        assert_eq!(k.row(3), &[4, 5]);
    }

    #[test]
    fn xor_of_supports() {
        assert_eq!(xor_supports(&[0, 2, 5], &[2, 3]), vec![0, 3, 5]);
        assert_eq!(xor_supports(&[], &[1]), vec![1]);
    }
}
