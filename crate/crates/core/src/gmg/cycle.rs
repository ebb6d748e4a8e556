//! Recursive V/F/W cycles over a stack of assembled levels.

use super::transfer::TransferPair;
use crate::error::{FsiError, Result};
use crate::linalg::{BandedLu, Preconditioner, SparseMatrix};
use crate::precond::{richardson_smooth, RichardsonConfig, Smoother};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleType {
    V,
    F,
    W,
}

impl std::str::FromStr for CycleType {
    type Err = FsiError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "V" => Ok(Self::V),
            "F" => Ok(Self::F),
            "W" => Ok(Self::W),
            _ => Err(FsiError::Config(format!("unknown cycle type '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleConfig {
    pub cycle: CycleType,
    pub pre: usize,
    pub post: usize,
    pub omega: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self { cycle: CycleType::V, pre: 1, post: 1, omega: 0.7 }
    }
}

/// One grid level: operator, smoother and the mask of constrained rows.
pub struct Level {
    pub a: SparseMatrix,
    pub smoother: Box<dyn Smoother>,
    pub constrained: Vec<bool>,
}

/// Multigrid hierarchy; `levels[0]` is the coarsest and is solved directly.
/// `transfers[l]` connects level `l` to `l + 1`.
pub struct Gmg {
    levels: Vec<Level>,
    transfers: Vec<TransferPair>,
    coarse: BandedLu,
    pub cfg: CycleConfig,
}

impl Gmg {
    pub fn new(levels: Vec<Level>, transfers: Vec<TransferPair>, cfg: CycleConfig) -> Result<Self> {
        if levels.is_empty() || transfers.len() + 1 != levels.len() {
            return Err(FsiError::InvalidArgument(format!(
                "{} levels need {} transfers, got {}",
                levels.len(),
                levels.len().saturating_sub(1),
                transfers.len()
            )));
        }
        for (l, t) in transfers.iter().enumerate() {
            let (nc, nf) = (levels[l].a.n_rows(), levels[l + 1].a.n_rows());
            if t.p.n_rows() != nf || t.p.n_cols() != nc || t.r.n_rows() != nc || t.r.n_cols() != nf {
                return Err(FsiError::DimensionMismatch { expected: nf, got: t.p.n_rows(), context: "multigrid transfer" });
            }
        }
        if !(cfg.omega > 0.0 && cfg.omega.is_finite()) {
            return Err(FsiError::Config(format!("Richardson damping must be positive, got {}", cfg.omega)));
        }
        if cfg.pre + cfg.post == 0 && levels.len() > 1 {
            return Err(FsiError::Config("pre- and post-smoothing counts cannot both be zero".into()));
        }
        let coarse = BandedLu::new(&levels[0].a, "coarse operator")?;
        Ok(Self { levels, transfers, coarse, cfg })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &SparseMatrix {
        &self.levels.last().expect("nonempty").a
    }

    /// One cycle from a zero initial guess on the finest level.
    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        self.cycle(self.levels.len() - 1, b, self.cfg.cycle)
    }

    fn cycle(&self, l: usize, b: &[f64], kind: CycleType) -> Vec<f64> {
        if l == 0 {
            return self.coarse.solve(b);
        }
        let lev = &self.levels[l];
        let rich = |sweeps| RichardsonConfig { omega: self.cfg.omega, sweeps };
        let mut x = vec![0.0; b.len()];
        richardson_smooth(&lev.a, lev.smoother.as_ref(), &mut x, b, &rich(self.cfg.pre));

        let t = &self.transfers[l - 1];
        let coarse = &self.levels[l - 1];
        let mut rc = t.r.spmv(&residual(&lev.a, &x, b)).expect("transfer dims");
        for (v, &c) in rc.iter_mut().zip(&coarse.constrained) {
            if c {
                *v = 0.0;
            }
        }
        let mut ec = self.cycle(l - 1, &rc, kind);
        if l > 1 {
            let second = match kind {
                CycleType::V => None,
                CycleType::W => Some(CycleType::W),
                CycleType::F => Some(CycleType::V),
            };
            if let Some(k) = second {
                let mut r2 = residual(&coarse.a, &ec, &rc);
                for (v, &c) in r2.iter_mut().zip(&coarse.constrained) {
                    if c {
                        *v = 0.0;
                    }
                }
                for (e, d) in ec.iter_mut().zip(self.cycle(l - 1, &r2, k)) {
                    *e += d;
                }
            }
        }
        let corr = t.p.spmv(&ec).expect("transfer dims");
        for ((xi, ci), &c) in x.iter_mut().zip(&corr).zip(&lev.constrained) {
            if !c {
                *xi += ci;
            }
        }
        richardson_smooth(&lev.a, lev.smoother.as_ref(), &mut x, b, &rich(self.cfg.post));
        x
    }
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut ax = vec![0.0; b.len()];
    a.spmv_into(x, &mut ax);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

impl Preconditioner for Gmg {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&Gmg::apply(self, r));
    }
}
