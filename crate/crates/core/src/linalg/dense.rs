//! Small dense kernels: LU with partial pivoting and the generalized power method.

use crate::error::{FsiError, Result};

/// Relative pivot threshold, measured against the largest entry of the pivot row.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend_from_slice(r);
        }
        Self { n, data }
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = *v;
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// LU factors `P A = L U` of a square block.
#[derive(Debug, Clone)]
pub struct DenseFactorization {
    dimension: usize,
    factors: Vec<f64>,
    pivot: Vec<usize>,
}

impl DenseFactorization {
    /// Factorizes a row-major `n x n` matrix. `label` identifies the block in errors.
    pub fn new(mut a: Vec<f64>, n: usize, label: &str) -> Result<Self> {
        if a.len() != n * n {
            return Err(FsiError::DimensionMismatch {
                expected: n * n,
                got: a.len(),
                context: "dense factorization",
            });
        }
        let row_scale: Vec<f64> = (0..n)
            .map(|i| a[i * n..(i + 1) * n].iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        let mut scale = row_scale.clone();
        let mut pivot: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= PIVOT_TOLERANCE * scale[p] || best == 0.0 {
                return Err(FsiError::SingularBlock {
                    label: label.to_string(),
                    column: k,
                    pivot: best,
                });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                pivot.swap(k, p);
                scale.swap(k, p);
            }
            let pk = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pk;
                if f == 0.0 {
                    continue;
                }
                a[i * n + k] = f;
                let (top, bottom) = a.split_at_mut(i * n);
                let krow = &top[k * n + k + 1..k * n + n];
                let irow = &mut bottom[k + 1..n];
                for (x, y) in irow.iter_mut().zip(krow) {
                    *x -= f * y;
                }
            }
        }
        Ok(Self {
            dimension: n,
            factors: a,
            pivot,
        })
    }

    pub fn from_matrix(m: &DenseMatrix, label: &str) -> Result<Self> {
        Self::new(m.data.clone(), m.n, label)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn pivot(&self) -> &[usize] {
        &self.pivot
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dimension];
        self.solve_into(b, &mut x);
        x
    }

    /// Solves `A x = b`; `x` and `b` must not alias.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.dimension;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = b[self.pivot[i]];
        }
        for i in 0..n {
            let row = &self.factors[i * n..i * n + i];
            let mut s = x[i];
            for (l, xj) in row.iter().zip(&x[..i]) {
                s -= l * xj;
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = &self.factors[i * n..(i + 1) * n];
            let mut s = x[i];
            for j in i + 1..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
    }

    /// Rebuilds `A` from the factors (used to audit factorizations).
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.dimension;
        let mut pa = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..=i.min(j) {
                    let l = if k == i { 1.0 } else { self.factors[i * n + k] };
                    s += l * self.factors[k * n + j];
                }
                pa[i * n + j] = s;
            }
        }
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            a.data[self.pivot[i] * n..(self.pivot[i] + 1) * n].copy_from_slice(&pa[i * n..(i + 1) * n]);
        }
        a
    }
}

/// Outcome of the generalized power iteration.
#[derive(Debug, Clone)]
pub struct EigenEstimate {
    pub lambda: f64,
    /// B-normalized eigenvector estimate.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of `A w = lambda B w` by power iteration on `B^{-1} A`.
///
/// `B` must be symmetric positive definite, `A` symmetric positive semidefinite.
/// Convergence requires a relative eigenvalue change below `tol` and
/// `‖A w − λ B w‖ ≤ tol λ ‖B w‖`. On non-convergence the last estimate is returned with `converged = false`.
pub fn power_method_generalized(
    a: &DenseMatrix,
    b: &DenseMatrix,
    tol: f64,
    max_it: usize,
) -> Result<EigenEstimate> {
    let n = a.n;
    if b.n != n {
        return Err(FsiError::DimensionMismatch {
            expected: n,
            got: b.n,
            context: "generalized eigenproblem",
        });
    }
    let lu = DenseFactorization::from_matrix(b, "power-method mass")?;
    // deterministic start vector with components in every direction
    let mut w: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let b_norm = |w: &[f64]| -> f64 {
        let bw = b.matvec(w);
        w.iter().zip(&bw).map(|(x, y)| x * y).sum::<f64>().sqrt()
    };
    let nrm = b_norm(&w);
    w.iter_mut().for_each(|v| *v /= nrm);
    let mut lambda = 0.0;
    for it in 1..=max_it {
        let aw = a.matvec(&w);
        let mut next = lu.solve(&aw);
        // Rayleigh quotient in the B inner product: (w, A w) / (w, B w) with (w, B w) = 1
        let new_lambda: f64 = w.iter().zip(&aw).map(|(x, y)| x * y).sum();
        let nrm = b_norm(&next);
        if nrm == 0.0 {
            return Ok(EigenEstimate {
                lambda: 0.0,
                vector: w,
                iterations: it,
                converged: true,
            });
        }
        next.iter_mut().for_each(|v| *v /= nrm);
        let change = (new_lambda - lambda).abs();
        lambda = new_lambda;
        w = next;
        if it > 1 && change <= tol * lambda.abs() {
            // accept only once the eigen-residual is also small
            let aw = a.matvec(&w);
            let bw = b.matvec(&w);
            let lam: f64 = w.iter().zip(&aw).map(|(x, y)| x * y).sum();
            let res = aw
                .iter()
                .zip(&bw)
                .map(|(p, q)| (p - lam * q).powi(2))
                .sum::<f64>()
                .sqrt();
            let bwn = bw.iter().map(|v| v * v).sum::<f64>().sqrt();
            if res <= tol * lam.abs() * bwn {
                return Ok(EigenEstimate {
                    lambda: lam,
                    vector: w,
                    iterations: it,
                    converged: true,
                });
            }
        }
    }
    Ok(EigenEstimate {
        lambda,
        vector: w,
        iterations: max_it,
        converged: false,
    })
}
