//! Newton iteration for one time step.

use super::{Assembler, Constraints, State};
use crate::error::Result;
use crate::linalg::{norm2, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_iter: 15,
        }
    }
}

/// Statistics of one linear solve: iteration count and r_N / r_0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearStats {
    pub iterations: usize,
    pub r0: f64,
    pub rn: f64,
    pub converged: bool,
}

impl LinearStats {
    pub fn rho(&self) -> f64 {
        if self.r0 == 0.0 {
            0.0
        } else {
            self.rn / self.r0
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Scaled residual norms, starting with the initial one.
    pub residuals: Vec<f64>,
    pub linear: Vec<LinearStats>,
    pub converged: bool,
}

/// Linear solver callback: `(jacobian, rhs, current iterate) -> (correction, stats)`.
pub type LinearSolve<'a> = dyn FnMut(&SparseMatrix, &[f64], &[f64]) -> Result<(Vec<f64>, LinearStats)> + 'a;

fn scaled_norm(r: &[f64], scale: &[f64]) -> f64 {
    norm2(&r.iter().zip(scale).map(|(a, s)| a * s).collect::<Vec<_>>())
}

/// Runs Newton from `guess` (Dirichlet values are lifted first). Convergence is
/// checked after each update on the row-scaled residual.
#[allow(clippy::too_many_arguments)]
pub fn newton_solve(
    asm: &Assembler,
    old: &State,
    guess: &[f64],
    dt: f64,
    t_new: f64,
    cons: &Constraints,
    row_scale: &[f64],
    solve: &mut LinearSolve<'_>,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let explicit = asm.explicit_part(old, dt)?;
    let mut x = guess.to_vec();
    cons.lift(&mut x, t_new);
    let mut residuals = Vec::new();
    let mut linear = Vec::new();
    let mut iterations = 0;
    loop {
        let (mut r, mut jac) = asm.residual_and_jacobian(&x, old, &explicit, dt, cons, t_new)?;
        cons.apply(Some(&mut jac), &mut r, &x, t_new);
        let norm = scaled_norm(&r, row_scale);
        residuals.push(norm);
        if iterations > 0 && norm <= (opts.rel_tol * residuals[0]).max(opts.abs_tol) {
            return Ok(NewtonOutcome {
                x,
                iterations,
                residuals,
                linear,
                converged: true,
            });
        }
        if iterations >= opts.max_iter || !norm.is_finite() {
            return Ok(NewtonOutcome {
                x,
                iterations,
                residuals,
                linear,
                converged: false,
            });
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let (dx, stats) = solve(&jac, &rhs, &x)?;
        linear.push(stats);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        iterations += 1;
    }
}

/// State after a converged step: stores the mesh velocity (d − dⁿ)/Δt.
pub fn advance_state(asm: &Assembler, old: &State, x: Vec<f64>, dt: f64) -> State {
    let wdot = (0..asm.mesh.n_nodes())
        .map(|n| {
            let (a, b) = (asm.node_disp(&x, n), asm.node_disp(&old.x, n));
            [(a[0] - b[0]) / dt, (a[1] - b[1]) / dt]
        })
        .collect();
    State {
        x,
        wdot,
        t: old.t + dt,
    }
}
