//! Dense linear algebra over GF(q).
//!
//! Row reduction, null-space bases, row-space membership, dense and
//! sparsity-aware solvers, and [`NullTracker`], which keeps an explicit inverse
//! of a completed encoding matrix so that the null space of the received rows
//! can be read off and refreshed with one rank-one update per new row.
//!
//! Every pivot search is "lowest index first", so all outputs are deterministic.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::gfield::{parse_hex, Elem, Field, FieldError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("entry {value} at ({row}, {col}) is not an element of GF({q})")]
    InvalidEntry { row: usize, col: usize, value: u32, q: u32 },
    #[error("vector is not innovative for this tracker")]
    NotInnovative,
    #[error("row {row} has weight {weight} above the bound {bound}")]
    WeightBound { row: usize, weight: usize, bound: usize },
    #[error("matrix parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Row-major dense matrix over a finite field.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
    field: Field,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} over {:?}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0; rows * cols],
            field: field.clone(),
        }
    }

    pub fn identity(field: &Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from rows, validating shape and entries.
    pub fn from_rows<R: AsRef<[Elem]>>(field: &Field, cols: usize, rows: &[R]) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(field, 0, cols);
        for r in rows {
            m.push_row(r.as_ref())?;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Elem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Elem) {
        debug_assert!(self.field.contains(v));
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Elem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Elem] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[Elem]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn column(&self, c: usize) -> Vec<Elem> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn push_row(&mut self, row: &[Elem]) -> Result<(), LinalgError> {
        if row.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: row.len(),
            });
        }
        if let Some((c, &v)) = row.iter().enumerate().find(|(_, &v)| !self.field.contains(v)) {
            return Err(LinalgError::InvalidEntry {
                row: self.rows,
                col: c,
                value: u32::from(v),
                q: self.field.q(),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let cols = self.cols;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * cols);
        head[lo * cols..(lo + 1) * cols].swap_with_slice(&mut tail[..cols]);
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(&self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let f = &self.field;
        let mut out = Matrix::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            let mut acc = vec![0; other.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                f.axpy(&mut acc, a, other.row(k));
            }
            out.row_mut(r).copy_from_slice(&acc);
        }
        Ok(out)
    }

    /// `self * x` for a column vector `x`.
    pub fn mul_vec(&self, x: &[Elem]) -> Result<Vec<Elem>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok(self.row_iter().map(|row| self.field.dot(row, x)).collect())
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(&self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.data[r * cols.len() + j] = self.get(r, c);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn rank(&self) -> usize {
        rref(self).rank
    }

    /// Serializes in the line format `rows cols q [poly=<hex>]` followed by rows.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}", self.rows, self.cols, self.field.q());
        if self.field.degree() > 1 {
            s.push_str(&format!(" poly={:#x}", self.field.poly()));
        }
        s.push('\n');
        for row in self.row_iter() {
            s.push_str(&join_elems(row));
            s.push('\n');
        }
        s
    }
}

pub(crate) fn join_elems(v: &[Elem]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Parses a whitespace-separated row of `cols` elements.
pub(crate) fn parse_row(line: &str, cols: usize) -> Result<Vec<Elem>, LinalgError> {
    let row: Vec<Elem> = line
        .split_whitespace()
        .map(|t| t.parse::<Elem>().map_err(|_| LinalgError::Parse(format!("bad entry {t:?}"))))
        .collect::<Result<_, _>>()?;
    if row.len() != cols {
        return Err(LinalgError::DimensionMismatch {
            expected: cols,
            got: row.len(),
        });
    }
    Ok(row)
}

/// Parses the optional `poly=<hex>` token that may follow a field order.
pub(crate) fn field_from_tokens(q: &str, extra: Option<&str>) -> Result<Field, LinalgError> {
    let q: u32 = q
        .parse()
        .map_err(|_| LinalgError::Parse(format!("bad field order {q:?}")))?;
    match extra {
        None => Ok(Field::new(q)?),
        Some(tok) => {
            let hex = tok
                .strip_prefix("poly=")
                .and_then(parse_hex)
                .ok_or_else(|| LinalgError::Parse(format!("bad token {tok:?}")))?;
            Ok(Field::with_poly(q, hex)?)
        }
    }
}

impl FromStr for Matrix {
    type Err = LinalgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| LinalgError::Parse("empty input".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() < 3 || toks.len() > 4 {
            return Err(LinalgError::Parse(format!("bad header {header:?}")));
        }
        let parse_usize = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| LinalgError::Parse(format!("bad count {t:?}")))
        };
        let rows = parse_usize(toks[0])?;
        let cols = parse_usize(toks[1])?;
        let field = field_from_tokens(toks[2], toks.get(3).copied())?;
        let mut m = Matrix::zeros(&field, 0, cols);
        for _ in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| LinalgError::Parse("missing matrix row".into()))?;
            m.push_row(&parse_row(line, cols)?)?;
        }
        Ok(m)
    }
}

/// Reduced row-echelon form with its pivot structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RrefResult {
    /// RREF with zero rows removed.
    pub rref: Matrix,
    pub rank: usize,
    pub pivot_cols: Vec<usize>,
    /// Pivot columns followed by the free columns, both ascending. Reordering
    /// the columns of `rref` by this permutation gives `[I | A]`.
    pub col_perm: Vec<usize>,
}

impl RrefResult {
    pub fn free_cols(&self) -> &[usize] {
        &self.col_perm[self.rank..]
    }
}

/// Forward and backward elimination on `m` in place, pivoting only within the
/// first `pivot_limit` columns. Returns the pivot columns; pivot rows are
/// `0..pivots.len()` afterwards. Costs are charged as dense row operations.
fn gauss_jordan(m: &mut Matrix, pivot_limit: usize) -> Vec<usize> {
    let f = m.field.clone();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..pivot_limit {
        if rank == m.rows {
            break;
        }
        let Some(pr) = (rank..m.rows).find(|&r| m.get(r, col) != 0) else {
            continue;
        };
        m.swap_rows(rank, pr);
        let inv = f.inv(m.get(rank, col)).expect("nonzero pivot");
        f.scale(m.row_mut(rank), inv);
        let pivot_row = m.row(rank).to_vec();
        for r in 0..m.rows {
            if r != rank {
                let c = m.get(r, col);
                if c != 0 {
                    f.axpy_dense(m.row_mut(r), f.neg(c), &pivot_row);
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    pivots
}

/// Reduced row-echelon form. Pivot choice: leftmost nonzero column, then the
/// lowest row index holding a nonzero in it.
pub fn rref(m: &Matrix) -> RrefResult {
    let mut work = m.clone();
    let pivot_cols = gauss_jordan(&mut work, m.cols);
    let rank = pivot_cols.len();
    work.data.truncate(rank * work.cols);
    work.rows = rank;
    let mut col_perm = pivot_cols.clone();
    col_perm.extend((0..m.cols).filter(|c| !pivot_cols.contains(c)));
    RrefResult {
        rref: work,
        rank,
        pivot_cols,
        col_perm,
    }
}

/// Basis of the orthogonal complement of the row space of `c`, one row per free
/// column of the RREF, i.e. `[-A^T | I] P` for the RREF `[I | A] P`.
pub fn null_space_basis(c: &Matrix) -> Matrix {
    let f = &c.field;
    let red = rref(c);
    let n = c.cols;
    let mut b = Matrix::zeros(f, 0, n);
    let mut row = vec![0; n];
    for &free in red.free_cols() {
        row.iter_mut().for_each(|x| *x = 0);
        row[free] = 1;
        for (i, &p) in red.pivot_cols.iter().enumerate() {
            row[p] = f.neg(red.rref.get(i, free));
        }
        b.data.extend_from_slice(&row);
        b.rows += 1;
    }
    b
}

fn check_len(x: &[Elem], n: usize) -> Result<(), LinalgError> {
    if x.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

/// Row-space membership by rank comparison.
pub fn in_row_space(x: &[Elem], c: &Matrix) -> Result<bool, LinalgError> {
    check_len(x, c.cols)?;
    let base = c.rank();
    let mut ext = c.clone();
    ext.push_row(x)?;
    Ok(ext.rank() == base)
}

/// Row-space membership through the null-space basis: `x` lies in the row
/// space of `c` iff `B x = 0`.
pub fn in_row_space_dual(x: &[Elem], c: &Matrix) -> Result<bool, LinalgError> {
    check_len(x, c.cols)?;
    let b = null_space_basis(c);
    Ok(b.mul_vec(x)?.iter().all(|&v| v == 0))
}

/// Outcome of a linear solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    /// One solution per right-hand-side column, free variables set to zero,
    /// with the rank of the coefficient matrix.
    Found { x: Matrix, rank: usize },
    Inconsistent,
}

impl Solution {
    pub fn found(self) -> Option<Matrix> {
        match self {
            Solution::Found { x, .. } => Some(x),
            Solution::Inconsistent => None,
        }
    }
}

/// Solves `a X = rhs` by Gauss-Jordan elimination on the augmented matrix.
/// `rhs` has one row per equation; the result has `a.cols()` rows.
pub fn solve_dense(a: &Matrix, rhs: &Matrix) -> Result<Solution, LinalgError> {
    if a.rows != rhs.rows {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows,
            got: rhs.rows,
        });
    }
    let n = a.cols;
    let width = n + rhs.cols;
    let mut aug = Matrix::zeros(&a.field, a.rows, width);
    for r in 0..a.rows {
        aug.row_mut(r)[..n].copy_from_slice(a.row(r));
        aug.row_mut(r)[n..].copy_from_slice(rhs.row(r));
    }
    let pivots = gauss_jordan(&mut aug, n);
    let rank = pivots.len();
    if (rank..aug.rows).any(|r| aug.row(r)[n..].iter().any(|&v| v != 0)) {
        return Ok(Solution::Inconsistent);
    }
    let mut x = Matrix::zeros(&a.field, n, rhs.cols);
    for (i, &p) in pivots.iter().enumerate() {
        x.row_mut(p).copy_from_slice(&aug.row(i)[n..]);
    }
    Ok(Solution::Found { x, rank })
}

/// Sparse row: (column, value) pairs sorted by column, no zeros.
type SparseRow = Vec<(usize, Elem)>;

/// `dst += c * src` on sorted sparse rows; charges one op per entry of `src`.
fn sparse_axpy(f: &Field, dst: &SparseRow, c: Elem, src: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(dst.len() + src.len());
    let (mut i, mut j) = (0, 0);
    while i < dst.len() || j < src.len() {
        let take_dst = j == src.len() || (i < dst.len() && dst[i].0 < src[j].0);
        let take_src = i == dst.len() || (j < src.len() && src[j].0 < dst[i].0);
        if take_dst {
            out.push(dst[i]);
            i += 1;
        } else if take_src {
            out.push((src[j].0, f.mul(c, src[j].1)));
            j += 1;
        } else {
            let v = f.add(dst[i].1, f.mul(c, src[j].1));
            if v != 0 {
                out.push((dst[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    crate::ops::record(src.len() as u64, src.len() as u64);
    out
}

/// Solves `a X = rhs` with elimination that only touches stored nonzeros.
///
/// Columns are processed left to right and each eliminated column picks the
/// lightest available row as its pivot, so pivot columns (and therefore the
/// returned solution) coincide with [`solve_dense`] while fill-in stays low.
pub fn solve_sparse(a: &Matrix, rhs: &Matrix, weight_bound: usize) -> Result<Solution, LinalgError> {
    if a.rows != rhs.rows {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows,
            got: rhs.rows,
        });
    }
    let f = &a.field;
    let n = a.cols;
    let mut rows: Vec<SparseRow> = Vec::with_capacity(a.rows);
    for (r, row) in a.row_iter().enumerate() {
        let sp: SparseRow = row.iter().enumerate().filter(|(_, &v)| v != 0).map(|(c, &v)| (c, v)).collect();
        if sp.len() > weight_bound {
            return Err(LinalgError::WeightBound {
                row: r,
                weight: sp.len(),
                bound: weight_bound,
            });
        }
        rows.push(sp);
    }
    let mut rhs_rows: Vec<Vec<Elem>> = rhs.row_iter().map(<[Elem]>::to_vec).collect();

    // bucket rows by leading column; zero rows go to bucket n
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for (r, row) in rows.iter().enumerate() {
        buckets[row.first().map_or(n, |e| e.0)].push(r);
    }
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (column, row)
    for col in 0..n {
        let cands = std::mem::take(&mut buckets[col]);
        let Some(&prow) = cands.iter().min_by_key(|&&r| (rows[r].len(), r)) else {
            continue;
        };
        let inv = f.inv(rows[prow][0].1).expect("nonzero pivot");
        if inv != 1 {
            for e in rows[prow].iter_mut() {
                e.1 = f.mul(e.1, inv);
            }
            crate::ops::record(rows[prow].len() as u64, 0);
            f.scale(&mut rhs_rows[prow], inv);
        }
        let pivot_row = rows[prow].clone();
        let pivot_rhs = rhs_rows[prow].clone();
        for &r in cands.iter().filter(|&&r| r != prow) {
            let c = f.neg(rows[r][0].1);
            rows[r] = sparse_axpy(f, &rows[r], c, &pivot_row);
            f.axpy(&mut rhs_rows[r], c, &pivot_rhs);
            buckets[rows[r].first().map_or(n, |e| e.0)].push(r);
        }
        pivots.push((col, prow));
    }
    for &r in &buckets[n] {
        if rhs_rows[r].iter().any(|&v| v != 0) {
            return Ok(Solution::Inconsistent);
        }
    }
    // back substitution over the upper-triangular pivot rows
    let mut x = Matrix::zeros(f, n, rhs.cols);
    for &(col, prow) in pivots.iter().rev() {
        let mut val = rhs_rows[prow].clone();
        for &(c, v) in &rows[prow][1..] {
            f.axpy(&mut val, f.neg(v), x.row(c));
        }
        x.row_mut(col).copy_from_slice(&val);
    }
    Ok(Solution::Found { x, rank: pivots.len() })
}

/// Incremental null-space tracker for one receiver.
///
/// Holds an invertible completion `c_tilde` of the received rows together with
/// its exact inverse `b_tilde`. The first `rank` rows of `c_tilde` are the
/// received vectors in arrival order and the last `n - rank` columns of
/// `b_tilde` span their null space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NullTracker {
    c_tilde: Matrix,
    b_tilde: Matrix,
    rank: usize,
    /// `row_origin[i]` is the identity row that completion row `i` started as.
    row_origin: Vec<usize>,
}

impl NullTracker {
    pub fn new(n: usize, field: &Field) -> Self {
        assert!(n >= 1, "tracker needs at least one coordinate");
        NullTracker {
            c_tilde: Matrix::identity(field, n),
            b_tilde: Matrix::identity(field, n),
            rank: 0,
            row_origin: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.c_tilde.cols
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full(&self) -> bool {
        self.rank == self.n()
    }

    pub fn field(&self) -> &Field {
        &self.c_tilde.field
    }

    pub fn c_tilde(&self) -> &Matrix {
        &self.c_tilde
    }

    pub fn b_tilde(&self) -> &Matrix {
        &self.b_tilde
    }

    pub fn row_origin(&self) -> &[usize] {
        &self.row_origin
    }

    /// `w^T B~` restricted to columns `from..n`.
    fn project(&self, w: &[Elem], from: usize) -> Vec<Elem> {
        let n = self.n();
        let f = self.field();
        let mut d = vec![0; n - from];
        for (i, &wi) in w.iter().enumerate() {
            if wi != 0 {
                f.axpy(&mut d, wi, &self.b_tilde.row(i)[from..]);
            }
        }
        d
    }

    pub fn is_innovative(&self, w: &[Elem]) -> Result<bool, LinalgError> {
        check_len(w, self.n())?;
        Ok(self.project(w, self.rank).iter().any(|&v| v != 0))
    }

    /// Appends `w` as received row `rank + 1`, restoring the inverse with a
    /// Sherman-Morrison rank-one update.
    pub fn update(&mut self, w: &[Elem]) -> Result<(), LinalgError> {
        check_len(w, self.n())?;
        let r = self.rank;
        let mut d = self.project(w, 0);
        let j = (r..self.n()).find(|&j| d[j] != 0).ok_or(LinalgError::NotInnovative)?;
        if j != r {
            self.b_tilde.swap_cols(j, r);
            self.c_tilde.swap_rows(j, r);
            self.row_origin.swap(j, r);
            d.swap(j, r);
        }
        let f = self.field().clone();
        let denom_inv = f.inv(d[r]).expect("nonzero by choice of column");
        // u = w^T B~ - e_r^T
        d[r] = f.sub(d[r], 1);
        let pivot_col = self.b_tilde.column(r);
        for (i, &bir) in pivot_col.iter().enumerate() {
            if bir != 0 {
                let c = f.neg(f.mul(bir, denom_inv));
                f.axpy(self.b_tilde.row_mut(i), c, &d);
            }
        }
        self.c_tilde.row_mut(r).copy_from_slice(w);
        self.rank += 1;
        Ok(())
    }

    /// The received rows, `rank x n`.
    pub fn received(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(self.field(), self.rank, n);
        m.data.copy_from_slice(&self.c_tilde.data[..self.rank * n]);
        m
    }

    /// Null-space basis of the received rows, `(n - rank) x n`.
    pub fn null_basis(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(self.field(), n - self.rank, n);
        for (k, j) in (self.rank..n).enumerate() {
            for i in 0..n {
                m.data[k * n + i] = self.b_tilde.get(i, j);
            }
        }
        m
    }

    /// True iff `c_tilde * b_tilde` is the identity.
    pub fn check_inverse(&self) -> bool {
        crate::ops::uncounted(|| {
            self.c_tilde
                .mul(&self.b_tilde)
                .map(|p| p == Matrix::identity(self.field(), self.n()))
                .unwrap_or(false)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf(q: u32) -> Field {
        Field::new(q).unwrap()
    }

    fn random_matrix(f: &Field, rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        let data: Vec<Vec<Elem>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.gen_range(0..f.q()) as Elem).collect())
            .collect();
        Matrix::from_rows(f, cols, &data).unwrap()
    }

    /// Random matrix with a prescribed rank bound: product of rows x k and k x cols.
    fn random_low_rank(f: &Field, rows: usize, cols: usize, k: usize, rng: &mut impl Rng) -> Matrix {
        let a = random_matrix(f, rows, k, rng);
        let b = random_matrix(f, k, cols, rng);
        a.mul(&b).unwrap()
    }

    #[test]
    fn rref_identity() {
        let f = gf(5);
        let id = Matrix::identity(&f, 4);
        let r = rref(&id);
        assert_eq!(r.rref, id);
        assert_eq!(r.rank, 4);
        assert_eq!(r.pivot_cols, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rref_small_binary() {
        let f = gf(2);
        let m = Matrix::from_rows(&f, 5, &[[1, 1, 1, 0, 1], [0, 1, 0, 0, 1]]).unwrap();
        let r = rref(&m);
        assert_eq!(r.rank, 2);
        assert_eq!(r.pivot_cols, vec![0, 1]);
        assert_eq!(r.rref.row(0), &[1, 0, 1, 0, 0]);
        assert_eq!(r.rref.row(1), &[0, 1, 0, 0, 1]);
        assert_eq!(r.col_perm, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn rref_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for q in [2, 3, 7, 256] {
            let f = gf(q);
            for _ in 0..20 {
                let m = random_low_rank(&f, 6, 7, 4, &mut rng);
                let once = rref(&m);
                assert_eq!(rref(&once.rref).rref, once.rref);
            }
        }
    }

    #[test]
    fn null_basis_of_unit_row() {
        let f = gf(3);
        let c = Matrix::from_rows(&f, 4, &[[1, 0, 0, 0]]).unwrap();
        let b = null_space_basis(&c);
        assert_eq!(b.rows(), 3);
        assert_eq!(b.rank(), 3);
        assert!(b.column(0).iter().all(|&v| v == 0));
    }

    #[test]
    fn null_basis_full_rank_is_empty() {
        let f = gf(7);
        let b = null_space_basis(&Matrix::identity(&f, 3));
        assert_eq!((b.rows(), b.cols()), (0, 3));
    }

    #[test]
    fn null_basis_clause_example() {
        // clause rows for (not x1 or not x2 or x3) over four variables
        let f = gf(2);
        let b = Matrix::from_rows(&f, 5, &[[1, 0, 0, 0, 1], [0, 1, 0, 0, 1], [0, 0, 1, 0, 0]]).unwrap();
        let c = null_space_basis(&b);
        assert_eq!(c.row(0), &[0, 0, 0, 1, 0]);
        assert_eq!(c.row(1), &[1, 1, 0, 0, 1]);
        // and the reverse direction spans the clause rows
        let back = null_space_basis(&c);
        assert_eq!(rref(&back).rref, rref(&b).rref);
    }

    #[test]
    fn null_basis_duality_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for q in [2, 3, 5, 256] {
            let f = gf(q);
            for _ in 0..50 {
                let rows = rng.gen_range(0..7);
                let k = rng.gen_range(1..6);
                let c = random_low_rank(&f, rows, 6, k, &mut rng);
                let b = null_space_basis(&c);
                assert_eq!(c.rank() + b.rank(), 6);
                assert!(c.mul(&b.transpose()).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn membership_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for q in [2, 3, 256] {
            let f = gf(q);
            for _ in 0..100 {
                let c = random_low_rank(&f, 4, 5, rng.gen_range(1..5), &mut rng);
                let x: Vec<Elem> = if rng.gen_bool(0.5) {
                    // combination of rows: always a member
                    let coef = random_matrix(&f, 1, 4, &mut rng);
                    coef.mul(&c).unwrap().row(0).to_vec()
                } else {
                    (0..5).map(|_| rng.gen_range(0..q) as Elem).collect()
                };
                assert_eq!(in_row_space(&x, &c).unwrap(), in_row_space_dual(&x, &c).unwrap());
            }
        }
    }

    #[test]
    fn membership_edge_cases() {
        let f = gf(2);
        let c = Matrix::from_rows(&f, 2, &[[1, 0]]).unwrap();
        assert!(!in_row_space(&[1, 1], &c).unwrap());
        assert!(in_row_space(&[0, 0], &c).unwrap());
        assert!(in_row_space(&[1, 0], &c).unwrap());
        assert!(matches!(
            in_row_space(&[1, 0, 0], &c),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn solve_identity_and_parity() {
        let f = gf(2);
        let id = Matrix::identity(&f, 3);
        let rhs = Matrix::from_rows(&f, 1, &[[1], [0], [1]]).unwrap();
        assert_eq!(solve_dense(&id, &rhs).unwrap(), Solution::Found { x: rhs.clone(), rank: 3 });
        assert_eq!(solve_sparse(&id, &rhs, 1).unwrap(), Solution::Found { x: rhs, rank: 3 });

        let a = Matrix::from_rows(&f, 2, &[[1, 0], [0, 1], [1, 1]]).unwrap();
        let b = Matrix::from_rows(&f, 1, &[[1], [1], [1]]).unwrap();
        assert_eq!(solve_dense(&a, &b).unwrap(), Solution::Inconsistent);
        assert_eq!(solve_sparse(&a, &b, 2).unwrap(), Solution::Inconsistent);
    }

    #[test]
    fn solve_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = gf(256);
        let mut done = 0;
        while done < 30 {
            let a = random_matrix(&f, 8, 8, &mut rng);
            if a.rank() < 8 {
                continue;
            }
            let x = random_matrix(&f, 8, 2, &mut rng);
            let b = a.mul(&x).unwrap();
            assert_eq!(solve_dense(&a, &b).unwrap(), Solution::Found { x: x.clone(), rank: a.cols() });
            assert_eq!(solve_sparse(&a, &b, 8).unwrap(), Solution::Found { x, rank: a.cols() });
            done += 1;
        }
    }

    #[test]
    fn sparse_rejects_heavy_rows() {
        let f = gf(2);
        let a = Matrix::from_rows(&f, 3, &[[1, 1, 1]]).unwrap();
        let b = Matrix::from_rows(&f, 1, &[[1]]).unwrap();
        assert!(matches!(
            solve_sparse(&a, &b, 2),
            Err(LinalgError::WeightBound { row: 0, weight: 3, bound: 2 })
        ));
    }

    #[test]
    fn permutation_system_reads_off() {
        let f = gf(7);
        let a = Matrix::from_rows(&f, 3, &[[0, 0, 3], [2, 0, 0], [0, 5, 0]]).unwrap();
        let b = Matrix::from_rows(&f, 1, &[[3], [4], [5]]).unwrap();
        let x = solve_sparse(&a, &b, 1).unwrap().found().unwrap();
        assert_eq!(x.column(0), vec![2, 1, 1]);
    }

    #[test]
    fn tracker_fresh() {
        let f = gf(2);
        let t = NullTracker::new(3, &f);
        assert_eq!(t.rank(), 0);
        assert_eq!(t.c_tilde(), &Matrix::identity(&f, 3));
        assert_eq!(t.b_tilde(), &Matrix::identity(&f, 3));
        assert!(t.check_inverse());
        assert!(t.is_innovative(&[0, 1, 0]).unwrap());
        assert!(!t.is_innovative(&[0, 0, 0]).unwrap());
    }

    #[test]
    fn tracker_two_by_two() {
        let f = gf(2);
        let mut t = NullTracker::new(2, &f);
        t.update(&[1, 1]).unwrap();
        assert_eq!(t.c_tilde().row(0), &[1, 1]);
        assert!(t.check_inverse());
        // C~ = [[1,1],[0,1]] is its own inverse over GF(2)
        assert_eq!(t.b_tilde(), &Matrix::from_rows(&f, 2, &[[1, 1], [0, 1]]).unwrap());
        assert!(!t.is_innovative(&[1, 1]).unwrap());
        assert_eq!(t.update(&[1, 1]), Err(LinalgError::NotInnovative));
        t.update(&[0, 1]).unwrap();
        assert!(t.is_full());
        assert!(!t.is_innovative(&[1, 0]).unwrap());
    }

    #[test]
    fn tracker_matches_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for q in [2, 3, 256] {
            let f = gf(q);
            for _ in 0..10 {
                let n = rng.gen_range(2..8);
                let mut t = NullTracker::new(n, &f);
                let mut received = Matrix::zeros(&f, 0, n);
                for _ in 0..4 * n {
                    let w: Vec<Elem> = (0..n)
                        .map(|_| if rng.gen_bool(0.4) { rng.gen_range(0..q) as Elem } else { 0 })
                        .collect();
                    let innov = t.is_innovative(&w).unwrap();
                    assert_eq!(innov, !in_row_space(&w, &received).unwrap());
                    if innov {
                        t.update(&w).unwrap();
                        received.push_row(&w).unwrap();
                        assert!(t.check_inverse());
                        assert_eq!(t.received(), received);
                        let nb = t.null_basis();
                        assert_eq!(rref(&nb).rref, rref(&null_space_basis(&received)).rref);
                    }
                }
            }
        }
    }

    #[test]
    fn text_format_round_trip() {
        let f = Field::with_poly(256, 0x11B).unwrap();
        let m = Matrix::from_rows(&f, 3, &[[1, 2, 255], [0, 0, 7]]).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("2 3 256 poly=0x11b\n"));
        assert_eq!(text.parse::<Matrix>().unwrap(), m);
        assert!("1 2 3\n1 5\n".parse::<Matrix>().is_err());
        assert!("1 2 3\n1\n".parse::<Matrix>().is_err());
    }
}
