//! Sparse direct solver: reverse Cuthill-McKee reordering followed by a banded
//! LU factorization with partial pivoting.

use std::collections::VecDeque;

use super::dense::PIVOT_TOLERANCE;
use super::sparse::SparseMatrix;
use crate::error::{FsiError, Result};

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity graph.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n_rows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, _) = a.row(i);
        for &j in cols {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited_mask: &[bool]| -> (usize, usize) {
        // returns (eccentricity, a node of minimum degree in the last level)
        let mut dist = vec![usize::MAX; n];
        let mut q = VecDeque::new();
        dist[start] = 0;
        q.push_back(start);
        let mut last = start;
        let mut ecc = 0;
        while let Some(v) = q.pop_front() {
            if dist[v] > ecc || (dist[v] == ecc && degree[v] < degree[last]) {
                ecc = dist[v];
                last = v;
            }
            for &w in &adj[v] {
                if !visited_mask[w] && dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        (ecc, last)
    };

    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start node
        let mut start = seed;
        let (mut ecc, mut cand) = bfs_levels(start, &visited);
        for _ in 0..4 {
            let (e2, c2) = bfs_levels(cand, &visited);
            if e2 > ecc {
                start = cand;
                ecc = e2;
                cand = c2;
            } else {
                break;
            }
        }
        let mut q = VecDeque::new();
        visited[start] = true;
        q.push_back(start);
        let mut nbrs = Vec::new();
        while let Some(v) = q.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Factorization `P A Q = L U` held in band storage.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<f64>,
    row_pivots: Vec<usize>,
    perm: Vec<usize>,
}

impl BandedLu {
    pub fn new(a: &SparseMatrix, label: &str) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(FsiError::InvalidArgument("direct solve needs a square matrix".into()));
        }
        let perm = reverse_cuthill_mckee(a);
        let b = a.permute(&perm, &perm);
        let (mut kl, mut ku) = (0usize, 0usize);
        for i in 0..n {
            let (cols, _) = b.row(i);
            if let (Some(&f), Some(&l)) = (cols.first(), cols.last()) {
                kl = kl.max(i.saturating_sub(f));
                ku = ku.max(l.saturating_sub(i));
            }
        }
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        let mut scale = vec![0.0f64; n];
        for i in 0..n {
            let (cols, vals) = b.row(i);
            for (c, v) in cols.iter().zip(vals) {
                band[i * width + (c + kl - i)] = *v;
                scale[i] = scale[i].max(v.abs());
            }
        }
        let idx = |i: usize, j: usize| i * width + (j + kl - i);
        let mut row_pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = band[idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = band[idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || best <= PIVOT_TOLERANCE * scale[p] {
                return Err(FsiError::SingularBlock {
                    label: label.to_string(),
                    column: perm[k],
                    pivot: best,
                });
            }
            row_pivots[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    band.swap(idx(k, j), idx(p, j));
                }
                scale.swap(k, p);
            }
            let pivot = band[idx(k, k)];
            let seg = last_col - k;
            for i in k + 1..=last_row {
                let f = band[idx(i, k)] / pivot;
                band[idx(i, k)] = f;
                if f == 0.0 || seg == 0 {
                    continue;
                }
                let (top, bottom) = band.split_at_mut(i * width);
                let krow_start = k * width + (k + 1 + kl - k);
                let krow = &top[krow_start..krow_start + seg];
                let irow_start = k + 1 + kl - i;
                let irow = &mut bottom[irow_start..irow_start + seg];
                for (x, y) in irow.iter_mut().zip(krow) {
                    *x -= f * y;
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            width,
            band,
            row_pivots,
            perm,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[f64], out: &mut [f64]) {
        let n = self.n;
        let (kl, ku, width) = (self.kl, self.ku, self.width);
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for k in 0..n {
            let p = self.row_pivots[k];
            if p != k {
                y.swap(k, p);
            }
            let yk = y[k];
            if yk != 0.0 {
                for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                    y[i] -= self.band[i * width + (k + kl - i)] * yk;
                }
            }
        }
        for i in (0..n).rev() {
            let last = (i + kl + ku).min(n - 1);
            let row = &self.band[i * width..(i + 1) * width];
            let mut s = y[i];
            for j in i + 1..=last {
                s -= row[j + kl - i] * y[j];
            }
            y[i] = s / row[kl];
        }
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = y[new];
        }
    }
}

/// Solves `A x = b` with the banded direct solver.
pub fn direct_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.n_rows() {
        return Err(FsiError::DimensionMismatch {
            expected: a.n_rows(),
            got: b.len(),
            context: "direct solve rhs",
        });
    }
    Ok(BandedLu::new(a, "direct")?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::norm2;
    use rand::{Rng, SeedableRng};

    fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
        let n = diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = sup[0] / diag[0];
        d[0] = rhs[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - sub[i] * c[i - 1];
            if i + 1 < n {
                c[i] = sup[i] / m;
            }
            d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![3.0, -1.0, 2.0];
        assert_eq!(direct_solve(&SparseMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn poisson_tridiagonal_matches_thomas() {
        let n = 10;
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
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let b = vec![1.0; n];
        let x = direct_solve(&a, &b).unwrap();
        let oracle = thomas(&vec![-1.0; n], &vec![2.0; n], &vec![-1.0; n], &b);
        for (p, q) in x.iter().zip(&oracle) {
            assert!((p - q).abs() <= 1e-12 * q.abs().max(1.0));
        }
    }

    #[test]
    fn random_sparse_system_with_zero_diagonal_blocks() {
        // saddle-point-like structure [[K, B^T], [B, 0]]
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let nu = 60;
        let np = 15;
        let n = nu + np;
        let mut t = Vec::new();
        for i in 0..nu {
            t.push((i, i, 4.0 + rng.gen_range(0.0..1.0)));
            for d in [1usize, 7] {
                if i + d < nu {
                    let v = rng.gen_range(-1.0..1.0);
                    t.push((i, i + d, v));
                    t.push((i + d, i, v));
                }
            }
        }
        for p in 0..np {
            for k in 0..4 {
                let u = (p * 4 + k) % nu;
                let v = rng.gen_range(0.5..1.5);
                t.push((nu + p, u, v));
                t.push((u, nu + p, v));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = direct_solve(&a, &b).unwrap();
        let ax = a.spmv(&x).unwrap();
        let r: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) <= 1e-9 * norm2(&b));
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(
            BandedLu::new(&a, "coarse"),
            Err(FsiError::SingularBlock { .. })
        ));
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = SparseMatrix::from_dense(&[
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0, 0.0],
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0, 1.0],
        ]);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, vec![0, 1, 2, 3]);
    }
}
