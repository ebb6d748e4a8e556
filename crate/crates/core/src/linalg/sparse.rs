//! Compressed sparse row storage and index-set extraction.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{FsiError, Result};

/// Anything that can apply `y = A x`.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Sorted, duplicate-free selection of indices with a descriptive tag.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexSet {
    indices: Vec<usize>,
    label: String,
}

impl IndexSet {
    /// Builds a set from arbitrary indices, sorting and deduplicating them.
    pub fn new(label: impl Into<String>, mut indices: Vec<usize>, dim: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(FsiError::IndexOutOfRange { index: last, dim });
            }
        }
        Ok(Self {
            indices,
            label: label.into(),
        })
    }

    pub fn range(label: impl Into<String>, start: usize, end: usize) -> Self {
        Self {
            indices: (start..end).collect(),
            label: label.into(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn union(&self, other: &IndexSet, label: impl Into<String>) -> IndexSet {
        let mut v = self.indices.clone();
        v.extend_from_slice(&other.indices);
        v.sort_unstable();
        v.dedup();
        IndexSet {
            indices: v,
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Validating constructor from raw CSR arrays.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(FsiError::DimensionMismatch {
                expected: n_rows + 1,
                got: row_offsets.len(),
                context: "row_offsets",
            });
        }
        if col_indices.len() != values.len() || row_offsets[n_rows] != values.len() {
            return Err(FsiError::DimensionMismatch {
                expected: row_offsets[n_rows],
                got: values.len(),
                context: "csr values",
            });
        }
        for i in 0..n_rows {
            if row_offsets[i] > row_offsets[i + 1] {
                return Err(FsiError::InvalidArgument(format!(
                    "row offsets decrease at row {i}"
                )));
            }
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(FsiError::InvalidArgument(format!(
                        "columns not strictly increasing in row {i}"
                    )));
                }
            }
            if let Some(&c) = cols.last() {
                if c >= n_cols {
                    return Err(FsiError::IndexOutOfRange {
                        index: c,
                        dim: n_cols,
                    });
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FsiError::InvalidArgument("non-finite matrix value".into()));
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            if r >= n_rows {
                return Err(FsiError::IndexOutOfRange { index: r, dim: n_rows });
            }
            if c >= n_cols {
                return Err(FsiError::IndexOutOfRange { index: c, dim: n_cols });
            }
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..n_rows {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_by_key(|e| e.0);
            for &(c, v) in &scratch {
                if col_indices.len() > row_offsets[i] && *col_indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Self::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    /// Sparsity pattern with all values zero. `pattern[i]` must be sorted and unique.
    pub fn from_pattern(n_cols: usize, pattern: &[Vec<usize>]) -> Self {
        let mut row_offsets = Vec::with_capacity(pattern.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        for row in pattern {
            col_indices.extend_from_slice(row);
            row_offsets.push(col_indices.len());
        }
        let nnz = col_indices.len();
        Self {
            n_rows: pattern.len(),
            n_cols,
            row_offsets,
            col_indices,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut t = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows.len(), n_cols, &t).expect("dense input is well-formed")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }
    pub fn nnz(&self) -> usize {
        self.values.len()
    }
    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }
    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    /// Position of entry (i, j) inside the value array, if stored.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_offsets[i];
        let cols = &self.col_indices[start..self.row_offsets[i + 1]];
        cols.binary_search(&j).ok().map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(FsiError::DimensionMismatch {
                expected: self.n_cols,
                got: x.len(),
                context: "spmv",
            });
        }
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without checks; summation runs left to right over each row.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n_rows) {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c];
            }
            *yi = s;
        }
    }

    /// `(A x)_i` for a single row.
    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        let mut s = 0.0;
        for (c, v) in cols.iter().zip(vals) {
            s += v * x[*c];
        }
        s
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut cols = vec![0; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (rc, rv) = self.row(i);
            for (c, v) in rc.iter().zip(rv) {
                cols[next[*c]] = i;
                vals[next[*c]] = *v;
                next[*c] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices: cols,
            values: vals,
        }
    }

    /// Submatrix `A[rows, cols]`; local numbering follows the order of the sets.
    pub fn extract_submatrix(&self, rows: &IndexSet, cols: &IndexSet) -> Result<SparseMatrix> {
        if let Some(&r) = rows.indices().last() {
            if r >= self.n_rows {
                return Err(FsiError::IndexOutOfRange { index: r, dim: self.n_rows });
            }
        }
        if let Some(&c) = cols.indices().last() {
            if c >= self.n_cols {
                return Err(FsiError::IndexOutOfRange { index: c, dim: self.n_cols });
            }
        }
        let mut local = vec![usize::MAX; self.n_cols];
        for (k, &c) in cols.indices().iter().enumerate() {
            local[c] = k;
        }
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for &r in rows.indices() {
            let (rc, rv) = self.row(r);
            // column order is preserved because `cols` is sorted
            for (c, v) in rc.iter().zip(rv) {
                let l = local[*c];
                if l != usize::MAX {
                    col_indices.push(l);
                    values.push(*v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            n_rows: rows.len(),
            n_cols: cols.len(),
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Dense row-major copy of `A[rows, cols]` for arbitrary (unsorted) index lists.
    pub fn extract_dense(&self, rows: &[usize], cols: &[usize], scratch: &mut Vec<usize>) -> Vec<f64> {
        if scratch.len() < self.n_cols {
            scratch.resize(self.n_cols, usize::MAX);
        }
        for (k, &c) in cols.iter().enumerate() {
            scratch[c] = k;
        }
        let m = cols.len();
        let mut out = vec![0.0; rows.len() * m];
        for (li, &r) in rows.iter().enumerate() {
            let (rc, rv) = self.row(r);
            for (c, v) in rc.iter().zip(rv) {
                let l = scratch[*c];
                if l != usize::MAX {
                    out[li * m + l] = *v;
                }
            }
        }
        for &c in cols {
            scratch[c] = usize::MAX;
        }
        out
    }

    /// `B[k, l] = A[row_perm[k], col_perm[l]]`.
    pub fn permute(&self, row_perm: &[usize], col_perm: &[usize]) -> SparseMatrix {
        assert_eq!(row_perm.len(), self.n_rows);
        assert_eq!(col_perm.len(), self.n_cols);
        let mut inv_col = vec![0usize; self.n_cols];
        for (new, &old) in col_perm.iter().enumerate() {
            inv_col[old] = new;
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for &old in row_perm {
            let (rc, rv) = self.row(old);
            scratch.clear();
            scratch.extend(rc.iter().zip(rv).map(|(c, v)| (inv_col[*c], *v)));
            scratch.sort_unstable_by_key(|e| e.0);
            for &(c, v) in &scratch {
                col_indices.push(c);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn scale_rows(&mut self, factors: &[f64]) {
        for i in 0..self.n_rows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                self.values[k] *= factors[i];
            }
        }
    }

    /// Replaces row `i` by the unit row `e_i` (requires a stored diagonal).
    pub fn set_identity_row(&mut self, i: usize) {
        for k in self.row_offsets[i]..self.row_offsets[i + 1] {
            self.values[k] = if self.col_indices[k] == i { 1.0 } else { 0.0 };
        }
    }

    /// Drops explicitly stored zeros.
    pub fn pruned(&self) -> SparseMatrix {
        let mut row_offsets = vec![0];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            let (rc, rv) = self.row(i);
            for (c, v) in rc.iter().zip(rv) {
                if *v != 0.0 {
                    col_indices.push(*c);
                    values.push(*v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in d.iter_mut().enumerate() {
            let (rc, rv) = self.row(i);
            for (c, v) in rc.iter().zip(rv) {
                row[*c] = *v;
            }
        }
        d
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.n_rows, self.n_cols, self.nnz());
        for i in 0..self.n_rows {
            let (rc, rv) = self.row(i);
            for (c, v) in rc.iter().zip(rv) {
                let _ = writeln!(s, "{} {} {:e}", i + 1, c + 1, v);
            }
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| FsiError::Io("empty matrix market file".into()))??;
        let h = header.to_ascii_lowercase();
        if !h.starts_with("%%matrixmarket matrix coordinate real general") {
            return Err(FsiError::Io(format!("unsupported header `{header}`")));
        }
        let mut dims: Option<(usize, usize, usize)> = None;
        let mut triplets = Vec::new();
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let parts: Vec<&str> = t.split_whitespace().collect();
            let bad = || FsiError::Io(format!("malformed line `{t}`"));
            if dims.is_none() {
                if parts.len() != 3 {
                    return Err(bad());
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| bad());
                dims = Some((p(parts[0])?, p(parts[1])?, p(parts[2])?));
                continue;
            }
            if parts.len() != 3 {
                return Err(bad());
            }
            let i: usize = parts[0].parse().map_err(|_| bad())?;
            let j: usize = parts[1].parse().map_err(|_| bad())?;
            let v: f64 = parts[2].parse().map_err(|_| bad())?;
            if i == 0 || j == 0 {
                return Err(bad());
            }
            triplets.push((i - 1, j - 1, v));
        }
        let (m, n, nnz) = dims.ok_or_else(|| FsiError::Io("missing size line".into()))?;
        if nnz != triplets.len() {
            return Err(FsiError::Io(format!(
                "expected {nnz} entries, found {}",
                triplets.len()
            )));
        }
        Self::from_triplets(m, n, &triplets)
    }
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        self.n_rows
    }
    fn ncols(&self) -> usize {
        self.n_cols
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn spmv_examples() {
        let id = SparseMatrix::identity(3);
        assert_eq!(id.spmv(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let z = SparseMatrix::zeros(3, 3);
        assert_eq!(z.spmv(&[4.0, -1.0, 9.0]).unwrap(), vec![0.0; 3]);
        let a = SparseMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        assert_eq!(a.spmv(&[1.0, 2.0]).unwrap(), vec![6.0, 7.0]);
        assert!(matches!(
            a.spmv(&[1.0]),
            Err(FsiError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn submatrix_examples() {
        let a = tridiag(4);
        let all = IndexSet::range("all", 0, 4);
        assert_eq!(a.extract_submatrix(&all, &all).unwrap(), a);
        let empty = IndexSet::range("none", 0, 0);
        let e = a.extract_submatrix(&empty, &empty).unwrap();
        assert_eq!((e.n_rows(), e.n_cols(), e.nnz()), (0, 0, 0));
        let lead = IndexSet::new("lead", vec![1, 0], 4).unwrap();
        let dense = a.to_dense();
        let sub = a.extract_submatrix(&lead, &lead).unwrap().to_dense();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(sub[i][j], dense[i][j]);
            }
        }
        assert!(IndexSet::new("bad", vec![5], 4).is_err());
    }

    #[test]
    fn rejects_invalid_csr() {
        assert!(SparseMatrix::new(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::new(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseMatrix::new(1, 2, vec![0, 1], vec![0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn matrix_market_roundtrip() {
        let a = tridiag(5);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
        assert!(text.contains("1 1 2e0"));
        let b = SparseMatrix::read_matrix_market(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn permute_and_transpose() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0, 0.0], vec![0.0, 3.0, 4.0], vec![5.0, 0.0, 6.0]]);
        let p = a.permute(&[2, 0, 1], &[1, 2, 0]);
        let d = a.to_dense();
        let pd = p.to_dense();
        for k in 0..3 {
            for l in 0..3 {
                assert_eq!(pd[k][l], d[[2, 0, 1][k]][[1, 2, 0][l]]);
            }
        }
        let t = a.transpose().to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t[i][j], d[j][i]);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn spmv_is_linear(vals in proptest::collection::vec(-10.0f64..10.0, 16),
                          x in proptest::collection::vec(-5.0f64..5.0, 4),
                          y in proptest::collection::vec(-5.0f64..5.0, 4),
                          alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let rows: Vec<Vec<f64>> = vals.chunks(4).map(|c| c.to_vec()).collect();
            let a = SparseMatrix::from_dense(&rows);
            let comb: Vec<f64> = x.iter().zip(&y).map(|(p, q)| alpha * p + beta * q).collect();
            let lhs = a.spmv(&comb).unwrap();
            let ax = a.spmv(&x).unwrap();
            let ay = a.spmv(&y).unwrap();
            let scale = 1.0 + norm_inf(&ax).max(norm_inf(&ay)) * (alpha.abs() + beta.abs());
            for i in 0..4 {
                let rhs = alpha * ax[i] + beta * ay[i];
                proptest::prop_assert!((lhs[i] - rhs).abs() <= 1e-13 * scale);
            }
        }

        #[test]
        fn submatrix_reembedding_is_bitwise(vals in proptest::collection::vec(-10.0f64..10.0, 25),
                                            rsel in proptest::collection::vec(0usize..5, 1..5),
                                            csel in proptest::collection::vec(0usize..5, 1..5)) {
            let rows: Vec<Vec<f64>> = vals.chunks(5).map(|c| c.to_vec()).collect();
            let a = SparseMatrix::from_dense(&rows);
            let r = IndexSet::new("r", rsel, 5).unwrap();
            let c = IndexSet::new("c", csel, 5).unwrap();
            let sub = a.extract_submatrix(&r, &c).unwrap().to_dense();
            for (li, &gi) in r.indices().iter().enumerate() {
                for (lj, &gj) in c.indices().iter().enumerate() {
                    proptest::prop_assert_eq!(sub[li][lj].to_bits(), rows[gi][gj].to_bits());
                }
            }
        }
    }
}
