//! Restarted GMRES with right preconditioning.

use super::sparse::{dot, norm2, LinearOperator};
use crate::error::{FsiError, Result};

/// Approximate inverse `z = M r`. Must be a fixed linear map during a solve.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// `M = I`.
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

impl<F: Fn(&[f64], &mut [f64])> Preconditioner for F {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self(r, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovConfig {
    pub restart: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            restart: 60,
            max_iters: 500,
            rel_tol: 1e-8,
            abs_tol: 1e-14,
        }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restart == 0 {
            return Err(FsiError::InvalidArgument("gmres restart must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(FsiError::InvalidArgument("gmres tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    /// Residual norms: the true initial residual followed by the Arnoldi
    /// recurrence estimate after every iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub initial_residual: f64,
    /// True residual `‖b − A x‖` of the returned iterate.
    pub final_residual: f64,
    pub converged: bool,
    /// Set when the Arnoldi process broke down before reaching the tolerance.
    pub breakdown: bool,
}

const BREAKDOWN_TOL: f64 = 1e-14;

pub fn gmres(
    a: &dyn LinearOperator,
    m: &dyn Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &KrylovConfig,
) -> Result<GmresOutcome> {
    cfg.validate()?;
    let n = a.nrows();
    if a.ncols() != n {
        return Err(FsiError::InvalidArgument("gmres needs a square operator".into()));
    }
    if b.len() != n {
        return Err(FsiError::DimensionMismatch {
            expected: n,
            got: b.len(),
            context: "gmres rhs",
        });
    }
    let mut x = match x0 {
        Some(v) => v.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    let true_residual = |x: &[f64], r: &mut Vec<f64>| {
        a.apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        norm2(r)
    };
    let r0 = true_residual(&x, &mut r);
    let target = (cfg.rel_tol * r0).max(cfg.abs_tol);
    let mut history = vec![r0];
    let mut beta = r0;
    let mut iterations = 0;
    let mut breakdown = false;
    let restart = cfg.restart.min(n.max(1));

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
    let mut precond_dirs: Vec<Vec<f64>> = Vec::with_capacity(restart);
    let mut w = vec![0.0; n];

    while beta > target && iterations < cfg.max_iters && !breakdown {
        basis.clear();
        precond_dirs.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            let mut z = vec![0.0; n];
            m.apply(&basis[k], &mut z);
            a.apply(&z, &mut w);
            precond_dirs.push(z);
            for (j, vj) in basis.iter().enumerate() {
                let hjk = dot(&w, vj);
                h[j][k] = hjk;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hjk * vi;
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k_used = k + 1;
            let est = g[k + 1].abs();
            history.push(est);
            if est <= target || iterations >= cfg.max_iters {
                break;
            }
            if hn <= BREAKDOWN_TOL * beta {
                breakdown = true;
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (yj, zj) in y.iter().zip(&precond_dirs) {
            for (xi, zi) in x.iter_mut().zip(zj) {
                *xi += yj * zi;
            }
        }
        beta = true_residual(&x, &mut r);
        if breakdown && beta <= target.max(1e-12 * r0) {
            // lucky breakdown: the Krylov space contains the solution
            breakdown = false;
            break;
        }
    }
    Ok(GmresOutcome {
        x,
        history,
        iterations,
        initial_residual: r0,
        final_residual: beta,
        converged: beta <= target || (beta <= 1e-12 * r0 && r0 > 0.0) || r0 == 0.0,
        breakdown,
    })
}
