use std::collections::HashMap;

use super::{Gf2Error, SparseBinaryMatrix};

/// Elementary row addition `row[target] ^= row[source]`, in local row indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RowOp {
    pub target: usize,
    pub source: usize,
}

/// Result of eliminating one new column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnOutcome {
    /// The column gained a pivot at this local row.
    Pivot { row: usize },
    /// The column lies in the span of the previous columns.
    Dependent,
}

/// Incremental PLU factorization of a column-growing binary matrix.
///
/// Columns are added one at a time; each new column is pushed through the
/// logged row operations and then reduced on the rows that do not yet carry
/// a pivot, so previously eliminated columns are never touched again. The
/// row permutation is implicit: the pivot rows, in pivot order, form the
/// top of `U` and every other row is a zero row of `U`.
///
/// The factorization also tracks a syndrome on its rows. Rows entering the
/// factorization pick up their syndrome bit from the predicate passed to
/// [`add_column`](Self::add_column), and every logged row operation is applied
/// to it, so validity (`s ∈ image`) is answered without replaying the log.
///
/// Rows and columns are stored with local indices (position of insertion);
/// [`row_universe`](Self::row_universe) and [`col_order`](Self::col_order)
/// translate back to global ids.
#[derive(Clone, Debug, Default)]
pub struct OtfFactorization {
    rows: Vec<usize>,
    row_index: HashMap<usize, usize>,
    cols: Vec<usize>,
    col_index: HashMap<usize, usize>,
    // Original columns and their reduced images, local rows, sorted.
    columns: Vec<Vec<usize>>,
    reduced: Vec<Vec<usize>>,
    pivot_of_col: Vec<Option<usize>>,
    col_of_pivot_row: Vec<Option<usize>>,
    // Column positions in pivot order.
    pivots: Vec<usize>,
    log: Vec<RowOp>,
    syndrome: Vec<bool>,
    eliminated: Vec<bool>,
}

impl OtfFactorization {
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty factorization enclosing the given rows, in order.
    pub fn with_rows(
        rows: impl IntoIterator<Item = usize>,
        flipped: impl Fn(usize) -> bool,
    ) -> Self {
        let mut f = Self::new();
        for r in rows {
            f.enclose_row(r, &flipped);
        }
        f
    }

    /// Appends `row` to the row universe if it is not already enclosed.
    /// Returns its local index.
    pub fn enclose_row(&mut self, row: usize, flipped: impl Fn(usize) -> bool) -> usize {
        if let Some(&local) = self.row_index.get(&row) {
            return local;
        }
        let local = self.rows.len();
        self.rows.push(row);
        self.row_index.insert(row, local);
        self.col_of_pivot_row.push(None);
        let bit = flipped(row);
        self.syndrome.push(bit);
        self.eliminated.push(bit);
        local
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Global row ids, indexed by local row.
    pub fn row_universe(&self) -> &[usize] {
        &self.rows
    }

    /// Global column ids, indexed by column position.
    pub fn col_order(&self) -> &[usize] {
        &self.cols
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn contains_row(&self, row: usize) -> bool {
        self.row_index.contains_key(&row)
    }

    pub fn contains_col(&self, col: usize) -> bool {
        self.col_index.contains_key(&col)
    }

    pub fn local_row(&self, row: usize) -> Option<usize> {
        self.row_index.get(&row).copied()
    }

    /// Pivot local row of the column at `pos`, if it has one.
    pub fn pivot_row(&self, pos: usize) -> Option<usize> {
        self.pivot_of_col[pos]
    }

    /// `(column position, pivot local row)` pairs in pivot order.
    pub fn pivot_map(&self) -> Vec<(usize, usize)> {
        self.pivots
            .iter()
            .map(|&c| (c, self.pivot_of_col[c].expect("pivot column")))
            .collect()
    }

    /// Column positions without a pivot.
    pub fn dependent_cols(&self) -> Vec<usize> {
        (0..self.cols.len())
            .filter(|&c| self.pivot_of_col[c].is_none())
            .collect()
    }

    pub fn rowop_log(&self) -> &[RowOp] {
        &self.log
    }

    /// Reduced (`U`) column at `pos`, local rows.
    pub fn u_column(&self, pos: usize) -> &[usize] {
        &self.reduced[pos]
    }

    /// Original column at `pos`, local rows.
    pub fn original_column(&self, pos: usize) -> &[usize] {
        &self.columns[pos]
    }

    /// Global rows of the tracked syndrome, before elimination.
    pub fn syndrome_rows(&self) -> Vec<usize> {
        self.rows
            .iter()
            .zip(&self.syndrome)
            .filter_map(|(&r, &b)| b.then_some(r))
            .collect()
    }

    /// Tracked syndrome after all logged row operations, by local row.
    pub fn eliminated_syndrome(&self) -> &[bool] {
        &self.eliminated
    }

    /// Whether the tracked syndrome lies in the image of the enclosed columns.
    pub fn is_valid(&self) -> bool {
        self.eliminated
            .iter()
            .zip(&self.col_of_pivot_row)
            .all(|(&bit, pivot)| !bit || pivot.is_some())
    }

    fn apply_log(&self, v: &mut [bool]) {
        for op in &self.log {
            if v[op.source] {
                v[op.target] ^= true;
            }
        }
    }

    /// Adds column `col` with global row support `support`. Rows outside the
    /// current universe are appended, taking their syndrome bit from `flipped`.
    pub fn add_column(
        &mut self,
        col: usize,
        support: &[usize],
        flipped: impl Fn(usize) -> bool,
    ) -> Result<ColumnOutcome, Gf2Error> {
        if self.col_index.contains_key(&col) {
            return Err(Gf2Error::DuplicateColumn(col));
        }
        let mut local: Vec<usize> = support
            .iter()
            .map(|&r| self.enclose_row(r, &flipped))
            .collect();
        local.sort_unstable();
        if let Some(w) = local.windows(2).find(|w| w[0] == w[1]) {
            return Err(Gf2Error::DuplicateEntry {
                row: self.rows[w[0]],
                col,
            });
        }

        let pos = self.cols.len();
        self.cols.push(col);
        self.col_index.insert(col, pos);

        let mut v = vec![false; self.rows.len()];
        for &r in &local {
            v[r] = true;
        }
        self.apply_log(&mut v);

        let pivot = (0..v.len()).find(|&r| v[r] && self.col_of_pivot_row[r].is_none());
        let outcome = match pivot {
            Some(p) => {
                for t in p + 1..v.len() {
                    if v[t] && self.col_of_pivot_row[t].is_none() {
                        self.log.push(RowOp { target: t, source: p });
                        v[t] = false;
                        if self.eliminated[p] {
                            self.eliminated[t] ^= true;
                        }
                    }
                }
                self.col_of_pivot_row[p] = Some(pos);
                self.pivot_of_col.push(Some(p));
                self.pivots.push(pos);
                ColumnOutcome::Pivot { row: p }
            }
            None => {
                self.pivot_of_col.push(None);
                ColumnOutcome::Dependent
            }
        };
        self.columns.push(local);
        self.reduced.push(
            v.iter()
                .enumerate()
                .filter_map(|(r, &b)| b.then_some(r))
                .collect(),
        );
        Ok(outcome)
    }

    /// Concatenates a factorization over disjoint rows and columns into this
    /// one. The combined matrix is block diagonal, so both row-operation logs
    /// remain valid after shifting `other`'s local indices; the pivot rows of
    /// `other` are ordered after the pivot rows of `self`, which puts the
    /// zero rows of both blocks below every pivot. Nothing is re-eliminated.
    pub fn absorb(&mut self, other: OtfFactorization) -> Result<(), Gf2Error> {
        if let Some(&r) = other.rows.iter().find(|r| self.row_index.contains_key(r)) {
            return Err(Gf2Error::OverlappingRows(r));
        }
        if let Some(&c) = other.cols.iter().find(|c| self.col_index.contains_key(c)) {
            return Err(Gf2Error::DuplicateColumn(c));
        }
        let row_off = self.rows.len();
        let col_off = self.cols.len();

        for (i, &r) in other.rows.iter().enumerate() {
            self.row_index.insert(r, row_off + i);
        }
        self.rows.extend(other.rows);
        for (i, &c) in other.cols.iter().enumerate() {
            self.col_index.insert(c, col_off + i);
        }
        self.cols.extend(other.cols);
        let shift = |v: Vec<usize>| v.into_iter().map(|r| r + row_off).collect::<Vec<_>>();
        self.columns.extend(other.columns.into_iter().map(shift));
        self.reduced.extend(other.reduced.into_iter().map(shift));
        self.pivot_of_col
            .extend(other.pivot_of_col.into_iter().map(|p| p.map(|r| r + row_off)));
        self.col_of_pivot_row
            .extend(other.col_of_pivot_row.into_iter().map(|c| c.map(|c| c + col_off)));
        self.pivots
            .extend(other.pivots.into_iter().map(|c| c + col_off));
        self.log.extend(other.log.into_iter().map(|op| RowOp {
            target: op.target + row_off,
            source: op.source + row_off,
        }));
        self.syndrome.extend(other.syndrome);
        self.eliminated.extend(other.eliminated);
        Ok(())
    }

    /// Merges two factorizations over disjoint rows through a bridging column.
    pub fn merge(
        mut self,
        other: OtfFactorization,
        bridge_col: usize,
        support: &[usize],
        flipped: impl Fn(usize) -> bool,
    ) -> Result<Self, Gf2Error> {
        self.absorb(other)?;
        self.add_column(bridge_col, support, flipped)?;
        Ok(self)
    }

    fn reduce(&self, s: &[usize]) -> Option<Vec<bool>> {
        let mut v = vec![false; self.rows.len()];
        for r in s {
            match self.row_index.get(r) {
                Some(&l) => v[l] ^= true,
                None => return None,
            }
        }
        self.apply_log(&mut v);
        Some(v)
    }

    fn residual_is_pivotal(&self, v: &[bool]) -> bool {
        v.iter()
            .zip(&self.col_of_pivot_row)
            .all(|(&bit, pivot)| !bit || pivot.is_some())
    }

    /// Whether the global row support `s` lies in the image of the enclosed
    /// columns. Rows outside the universe are zero rows of the matrix.
    pub fn in_image(&self, s: &[usize]) -> bool {
        self.reduce(s).is_some_and(|v| self.residual_is_pivotal(&v))
    }

    fn back_substitute(&self, mut v: Vec<bool>) -> Vec<usize> {
        let mut x = Vec::new();
        for &c in self.pivots.iter().rev() {
            let p = self.pivot_of_col[c].expect("pivot column");
            if v[p] {
                x.push(self.cols[c]);
                for &r in &self.reduced[c] {
                    v[r] ^= true;
                }
            }
        }
        debug_assert!(v.iter().all(|b| !b));
        x.sort_unstable();
        x
    }

    /// Solves `A·x = s` with free variables set to zero; returns the sorted
    /// global column ids of `x`.
    pub fn solve(&self, s: &[usize]) -> Result<Vec<usize>, Gf2Error> {
        match self.reduce(s) {
            Some(v) if self.residual_is_pivotal(&v) => Ok(self.back_substitute(v)),
            _ => Err(Gf2Error::NotInImage),
        }
    }

    /// Solves for the tracked syndrome without replaying the log.
    pub fn solve_tracked(&self) -> Result<Vec<usize>, Gf2Error> {
        if !self.is_valid() {
            return Err(Gf2Error::NotInImage);
        }
        Ok(self.back_substitute(self.eliminated.clone()))
    }

    /// Replays the row-operation log against every original column and
    /// against the tracked syndrome, and checks the stored reduced forms.
    pub fn replay_matches(&self) -> bool {
        let n = self.rows.len();
        let cols_ok = self.columns.iter().zip(&self.reduced).all(|(orig, red)| {
            let mut v = vec![false; n];
            for &r in orig {
                v[r] = true;
            }
            self.apply_log(&mut v);
            let got: Vec<usize> = (0..n).filter(|&r| v[r]).collect();
            &got == red
        });
        let mut s = self.syndrome.clone();
        self.apply_log(&mut s);
        cols_ok && s == self.eliminated
    }

    /// The enclosed sub-matrix in local coordinates (rows in universe order,
    /// columns in insertion order).
    pub fn assembled(&self) -> SparseBinaryMatrix {
        SparseBinaryMatrix::from_columns(self.rows.len(), self.columns.clone())
            .expect("stored columns are well-formed")
    }
}

/// Factorizes `m` by adding its columns in order. Every row of `m` is
/// enclosed, so local and global row indices coincide.
pub fn plu_decompose(m: &SparseBinaryMatrix) -> OtfFactorization {
    plu_decompose_ordered(m, 0..m.num_cols())
}

/// Factorizes the columns of `m` in the given order.
pub fn plu_decompose_ordered(
    m: &SparseBinaryMatrix,
    order: impl IntoIterator<Item = usize>,
) -> OtfFactorization {
    let mut f = OtfFactorization::with_rows(0..m.num_rows(), |_| false);
    for c in order {
        f.add_column(c, m.col(c), |_| false)
            .expect("matrix columns are distinct and well-formed");
    }
    f
}

/// Basis of the right kernel of `m`, one sorted support per dependent column.
pub fn kernel_basis(m: &SparseBinaryMatrix) -> Vec<Vec<usize>> {
    let f = plu_decompose(m);
    f.dependent_cols()
        .into_iter()
        .map(|pos| {
            let c = f.col_order()[pos];
            let mut v = f.solve(m.col(c)).expect("column lies in the image");
            v.push(c);
            v.sort_unstable();
            v
        })
        .collect()
}
