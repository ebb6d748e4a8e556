//! Schwarz sweeps over dense-factorized index blocks.

use crate::error::{FsiError, Result};
use crate::linalg::{DenseFactorization, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchwarzMode {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone)]
enum LocalSolver {
    Dense(DenseFactorization),
    /// Inverse diagonal entries.
    Diagonal(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SchwarzBlock {
    pub label: String,
    pub dofs: Vec<usize>,
    solver: LocalSolver,
}

impl SchwarzBlock {
    /// LU of the principal submatrix `a[dofs, dofs]`.
    pub fn dense(a: &SparseMatrix, dofs: Vec<usize>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let mut scratch = Vec::new();
        let data = a.extract_dense(&dofs, &dofs, &mut scratch);
        let f = DenseFactorization::new(data, dofs.len(), &label)?;
        Ok(Self {
            label,
            dofs,
            solver: LocalSolver::Dense(f),
        })
    }

    /// Point-Jacobi block on the diagonal entries of `a` at `dofs`.
    pub fn diagonal(a: &SparseMatrix, dofs: Vec<usize>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let mut inv = Vec::with_capacity(dofs.len());
        for &d in &dofs {
            let v = a.get(d, d);
            if v.is_nan() || v <= 0.0 {
                return Err(FsiError::SingularBlock {
                    label: label.clone(),
                    column: d,
                    pivot: v,
                });
            }
            inv.push(1.0 / v);
        }
        Ok(Self {
            label,
            dofs,
            solver: LocalSolver::Diagonal(inv),
        })
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match &self.solver {
            LocalSolver::Dense(f) => f.solve(rhs),
            LocalSolver::Diagonal(inv) => rhs.iter().zip(inv).map(|(r, i)| r * i).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchwarzSweep {
    pub blocks: Vec<SchwarzBlock>,
    pub mode: SchwarzMode,
    cover: Vec<f64>,
}

impl SchwarzSweep {
    pub fn new(n: usize, blocks: Vec<SchwarzBlock>, mode: SchwarzMode) -> Self {
        let mut cover = vec![0.0; n];
        for b in &blocks {
            for &d in &b.dofs {
                cover[d] += 1.0;
            }
        }
        Self { blocks, mode, cover }
    }

    /// One sweep from a zero initial guess against residual `r`.
    ///
    /// Multiplicative: each block sees the residual updated by all earlier
    /// blocks. Additive: every block sees `r`; overlapping corrections are
    /// averaged by their cover count.
    pub fn apply(&self, a: &SparseMatrix, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        match self.mode {
            SchwarzMode::Multiplicative => {
                for b in &self.blocks {
                    let res: Vec<f64> = b.dofs.iter().map(|&i| r[i] - a.row_dot(i, &z)).collect();
                    for (&i, dz) in b.dofs.iter().zip(b.solve(&res)) {
                        z[i] += dz;
                    }
                }
            }
            SchwarzMode::Additive => {
                for b in &self.blocks {
                    let res: Vec<f64> = b.dofs.iter().map(|&i| r[i]).collect();
                    for (&i, dz) in b.dofs.iter().zip(b.solve(&res)) {
                        z[i] += dz;
                    }
                }
                for (zi, c) in z.iter_mut().zip(&self.cover) {
                    if *c > 1.0 {
                        *zi /= c;
                    }
                }
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a3() -> SparseMatrix {
        SparseMatrix::from_dense(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ])
    }

    #[test]
    fn whole_system_block_is_exact() {
        let a = a3();
        let s = SchwarzSweep::new(3, vec![SchwarzBlock::dense(&a, vec![0, 1, 2], "all").unwrap()], SchwarzMode::Multiplicative);
        let r = vec![1.0, 2.0, 3.0];
        let z = s.apply(&a, &r);
        let az = a.spmv(&z).unwrap();
        for (p, q) in az.iter().zip(&r) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn block_diagonal_additive_is_exact() {
        let a = SparseMatrix::from_dense(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 2.0, 0.0],
            vec![0.0, 0.0, 5.0],
        ]);
        let s = SchwarzSweep::new(
            3,
            vec![
                SchwarzBlock::dense(&a, vec![0, 1], "b0").unwrap(),
                SchwarzBlock::dense(&a, vec![2], "b1").unwrap(),
            ],
            SchwarzMode::Additive,
        );
        let z = s.apply(&a, &[3.0, 3.0, 10.0]);
        assert!((z[0] - 1.0).abs() < 1e-15 && (z[1] - 1.0).abs() < 1e-15 && (z[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn multiplicative_two_blocks_is_block_gauss_seidel() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let s = SchwarzSweep::new(
            2,
            vec![
                SchwarzBlock::dense(&a, vec![0], "b0").unwrap(),
                SchwarzBlock::dense(&a, vec![1], "b1").unwrap(),
            ],
            SchwarzMode::Multiplicative,
        );
        let z = s.apply(&a, &[1.0, 1.0]);
        // z0 = 1/2, z1 = (1 − 1·z0)/3 = 1/6
        assert!((z[0] - 0.5).abs() < 1e-15 && (z[1] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_block_rejects_nonpositive_entries() {
        let a = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 3.0]]);
        assert!(SchwarzBlock::diagonal(&a, vec![0], "mass").is_err());
    }

    proptest! {
        #[test]
        fn additive_sweep_is_linear(r1 in proptest::collection::vec(-1.0f64..1.0, 3), r2 in proptest::collection::vec(-1.0f64..1.0, 3)) {
            let a = a3();
            let s = SchwarzSweep::new(
                3,
                vec![
                    SchwarzBlock::dense(&a, vec![0, 1], "b0").unwrap(),
                    SchwarzBlock::dense(&a, vec![1, 2], "b1").unwrap(),
                ],
                SchwarzMode::Additive,
            );
            let sum: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
            let (z1, z2, z) = (s.apply(&a, &r1), s.apply(&a, &r2), s.apply(&a, &sum));
            for i in 0..3 {
                prop_assert!((z[i] - z1[i] - z2[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn disjoint_multiplicative_equals_additive_on_block_diagonal(r in proptest::collection::vec(-1.0f64..1.0, 3)) {
            let a = SparseMatrix::from_dense(&[
                vec![2.0, 1.0, 0.0],
                vec![1.0, 2.0, 0.0],
                vec![0.0, 0.0, 5.0],
            ]);
            let blocks = || vec![
                SchwarzBlock::dense(&a, vec![0, 1], "b0").unwrap(),
                SchwarzBlock::dense(&a, vec![2], "b1").unwrap(),
            ];
            let m = SchwarzSweep::new(3, blocks(), SchwarzMode::Multiplicative).apply(&a, &r);
            let ad = SchwarzSweep::new(3, blocks(), SchwarzMode::Additive).apply(&a, &r);
            for i in 0..3 {
                prop_assert!((m[i] - ad[i]).abs() < 1e-14);
            }
        }
    }
}
