//! Time loop: Newton per step, with GMRES preconditioned by multigrid (AS or FS
//! smoothing) or the banded direct solver.

use std::time::Instant;

use crate::assembly::{
    advance_state, newton_solve, Assembler, BoundaryCondition, Constraints, LinearStats, NewtonOptions, PhysicsOptions,
    State,
};
use crate::error::{FsiError, Result};
use crate::gmg::{build_transfer, restrict_state, CycleConfig, Gmg, Level, TransferPair};
use crate::linalg::{gmres, norm2, BandedLu, KrylovConfig, SparseMatrix};
use crate::mesh::{Mesh, MeshHierarchy};
use crate::ordering::{OrderingKind, OrderingPlan};
use crate::precond::{AsPreconditioner, FsPreconditioner, SchwarzMode, Smoother};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Vanka-type Schwarz smoothing on the J1 ordering.
    As,
    /// Field-split smoothing on the J2 ordering.
    Fs,
    /// Banded LU on the full Jacobian.
    Direct,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::As => "as",
            Self::Fs => "fs",
            Self::Direct => "direct",
        }
    }

    pub fn ordering(self) -> OrderingKind {
        match self {
            Self::Fs => OrderingKind::J2,
            _ => OrderingKind::J1,
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = FsiError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "as" => Ok(Self::As),
            "fs" => Ok(Self::Fs),
            "direct" => Ok(Self::Direct),
            _ => Err(FsiError::Config(format!("unknown smoother '{s}' (expected as, fs or direct)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub cycle: CycleConfig,
    pub elems_per_block: usize,
    pub schwarz: SchwarzMode,
    pub krylov: KrylovConfig,
    pub newton: NewtonOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::As,
            cycle: CycleConfig::default(),
            elems_per_block: 4,
            schwarz: SchwarzMode::Multiplicative,
            krylov: KrylovConfig::default(),
            newton: NewtonOptions::default(),
        }
    }
}

/// One accepted time step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    /// Newton iterations of each substep (two entries after a halving).
    pub newton_iterations: Vec<usize>,
    pub linear: Vec<LinearStats>,
    pub residuals: Vec<f64>,
    pub wall_seconds: f64,
    pub halved: bool,
}

struct LevelData {
    asm: Assembler,
    cons: Constraints,
    old: State,
}

/// Full simulation state: per-level assemblers, transfers and the fine state.
pub struct Simulation {
    pub cfg: SolverConfig,
    pub hierarchy: MeshHierarchy,
    levels: Vec<LevelData>,
    plans: Vec<OrderingPlan>,
    transfers: Vec<TransferPair>,
    row_scale: Vec<f64>,
    state: State,
    steps: usize,
}

/// Per row family, 1 / median of the row max-abs entries over unconstrained rows.
pub fn row_scaling(asm: &Assembler, jac: &SparseMatrix, constrained: &[bool]) -> Vec<f64> {
    let mut per: [Vec<f64>; 6] = Default::default();
    for i in 0..jac.n_rows() {
        if constrained[i] {
            continue;
        }
        let m = jac.row(i).1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if m > 0.0 {
            per[asm.field_of_row(i).index()].push(m);
        }
    }
    let scale: Vec<f64> = per
        .iter_mut()
        .map(|v| {
            if v.is_empty() {
                return 1.0;
            }
            v.sort_by(f64::total_cmp);
            1.0 / v[v.len() / 2]
        })
        .collect();
    (0..jac.n_rows()).map(|i| scale[asm.field_of_row(i).index()]).collect()
}

impl Simulation {
    /// `n_levels` counts the coarse mesh; the solution lives on the finest level.
    pub fn new(
        coarse: Mesh,
        n_levels: usize,
        physics: PhysicsOptions,
        bcs: &[BoundaryCondition],
        cfg: SolverConfig,
    ) -> Result<Self> {
        if n_levels == 0 {
            return Err(FsiError::Config("levels must be at least 1".into()));
        }
        if cfg.elems_per_block == 0 {
            return Err(FsiError::Config("blocks must hold at least one element".into()));
        }
        cfg.krylov.validate()?;
        let hierarchy = MeshHierarchy::build(coarse, n_levels)?;
        let first = if cfg.kind == SolverKind::Direct { n_levels - 1 } else { 0 };
        let mut levels = Vec::new();
        for l in first..n_levels {
            let asm = Assembler::new(hierarchy.levels[l].clone(), physics)?;
            let cons = Constraints::build(&asm.mesh, &asm.map, bcs)?;
            let cons = if l + 1 == n_levels { cons } else { cons.homogeneous() };
            let old = asm.rest_state();
            levels.push(LevelData { asm, cons, old });
        }
        let plans: Vec<OrderingPlan> = levels.iter().map(|d| OrderingPlan::new(cfg.kind.ordering(), &d.asm.map)).collect();
        let mut transfers = Vec::new();
        for l in first..n_levels - 1 {
            let k = l - first;
            let t = build_transfer(&hierarchy, l, &levels[k].asm.map, &levels[k + 1].asm.map)?;
            transfers.push(t.permuted(&plans[k], &plans[k + 1]));
        }

        let fine = levels.last_mut().expect("at least one level");
        fine.cons.lift(&mut fine.old.x, 0.0);
        let state = fine.old.clone();
        let zero = vec![0.0; fine.asm.n_dofs()];
        let dt = 1.0;
        let (mut r, mut jac) = fine.asm.residual_and_jacobian(&state.x, &state, &zero, dt, &fine.cons, 0.0)?;
        fine.cons.apply(Some(&mut jac), &mut r, &state.x, 0.0);
        let row_scale = row_scaling(&fine.asm, &jac, &fine.cons.mask(jac.n_rows()));

        Ok(Self { cfg, hierarchy, levels, plans, transfers, row_scale, state, steps: 0 })
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn fine(&self) -> &Assembler {
        &self.levels.last().expect("nonempty").asm
    }

    pub fn fine_constraints(&self) -> &Constraints {
        &self.levels.last().expect("nonempty").cons
    }

    pub fn row_scale(&self) -> &[f64] {
        &self.row_scale
    }

    pub fn n_dofs(&self) -> usize {
        self.fine().n_dofs()
    }

    /// Advances by `dt`; a failed step is retried once as two half steps.
    pub fn step(&mut self, dt: f64) -> Result<StepRecord> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FsiError::Config(format!("time step must be positive, got {dt}")));
        }
        let start = Instant::now();
        let saved = self.state.clone();
        self.steps += 1;
        let mut rec = StepRecord {
            step: self.steps,
            time: saved.t + dt,
            dt,
            newton_iterations: Vec::new(),
            linear: Vec::new(),
            residuals: Vec::new(),
            wall_seconds: 0.0,
            halved: false,
        };
        if let Err(first) = self.substep(dt, &mut rec) {
            self.state = saved;
            rec.halved = true;
            rec.newton_iterations.clear();
            rec.linear.clear();
            rec.residuals.clear();
            for _ in 0..2 {
                self.substep(dt / 2.0, &mut rec).map_err(|second| FsiError::NewtonFailure {
                    step: rec.step,
                    time: rec.time,
                    reason: format!("{first}; after halving: {second}"),
                })?;
            }
        }
        rec.wall_seconds = start.elapsed().as_secs_f64();
        Ok(rec)
    }

    fn substep(&mut self, dt: f64, rec: &mut StepRecord) -> Result<()> {
        let old = self.state.clone();
        let n = self.levels.len();
        self.levels[n - 1].old = old.clone();
        for k in (0..n - 1).rev() {
            let l = self.hierarchy.n_levels() - n + k;
            let (c, f) = self.levels.split_at_mut(k + 1);
            let xc = restrict_state(&self.hierarchy, l, &c[k].asm.map, &f[0].asm.map, &f[0].old.x);
            let wdot = crate::gmg::coarse_to_fine_nodes(&self.hierarchy, l).iter().map(|&nf| f[0].old.wdot[nf]).collect();
            c[k].old = State { x: xc, wdot, t: old.t };
        }
        for lev in &mut self.levels {
            lev.asm.update_lambda(&lev.old)?;
        }

        let t_new = old.t + dt;
        let this = &*self;
        let fine = this.levels.last().expect("nonempty");
        let mut solve = |jac: &SparseMatrix, rhs: &[f64], x: &[f64]| this.linear_solve(jac, rhs, x, dt, t_new);
        let out = newton_solve(&fine.asm, &old, &old.x, dt, t_new, &fine.cons, &this.row_scale, &mut solve, &this.cfg.newton)?;
        rec.newton_iterations.push(out.iterations);
        rec.linear.extend(out.linear);
        rec.residuals.extend(&out.residuals);
        if !out.converged {
            return Err(FsiError::NewtonFailure {
                step: rec.step,
                time: t_new,
                reason: format!("no convergence in {} iterations, residuals {:?}", out.iterations, out.residuals),
            });
        }
        let new = advance_state(&fine.asm, &old, out.x, dt);
        self.state = new;
        Ok(())
    }

    fn linear_solve(&self, jac: &SparseMatrix, rhs: &[f64], x: &[f64], dt: f64, t: f64) -> Result<(Vec<f64>, LinearStats)> {
        let d = &self.row_scale;
        let b: Vec<f64> = rhs.iter().zip(d).map(|(v, s)| v * s).collect();
        let r0 = norm2(&b);
        if self.cfg.kind == SolverKind::Direct {
            let mut scaled = jac.clone();
            scaled.scale_rows(d);
            let lu = BandedLu::new(&scaled, "Jacobian")?;
            let dx = lu.solve(&b);
            let jx = scaled.spmv(&dx)?;
            let rn = norm2(&b.iter().zip(&jx).map(|(p, q)| p - q).collect::<Vec<_>>());
            return Ok((dx, LinearStats { iterations: 1, r0, rn, converged: true }));
        }
        let gmg = self.build_gmg(jac, x, dt, t)?;
        let plan = self.plans.last().expect("nonempty");
        let precond = |r: &[f64], z: &mut [f64]| {
            let unscaled: Vec<f64> = r.iter().zip(d).map(|(v, s)| v / s).collect();
            let zz = plan.cols_backward(&gmg.apply(&plan.rows_forward(&unscaled)));
            z.copy_from_slice(&zz);
        };
        let mut scaled = jac.clone();
        scaled.scale_rows(d);
        let out = gmres(&scaled, &precond, &b, None, &self.cfg.krylov)?;
        Ok((
            out.x,
            LinearStats { iterations: out.iterations, r0: out.initial_residual, rn: out.final_residual, converged: out.converged },
        ))
    }

    /// Multigrid for the current Newton iterate: fine Jacobian as given, coarse
    /// Jacobians reassembled from the restricted iterate.
    fn build_gmg(&self, jac: &SparseMatrix, x: &[f64], dt: f64, t: f64) -> Result<Gmg> {
        let n = self.levels.len();
        let mut iterates = vec![x.to_vec()];
        for k in (0..n - 1).rev() {
            let l = self.hierarchy.n_levels() - n + k;
            let xf = iterates.last().expect("nonempty");
            iterates.push(restrict_state(&self.hierarchy, l, &self.levels[k].asm.map, &self.levels[k + 1].asm.map, xf));
        }
        iterates.reverse();
        let mut levels = Vec::with_capacity(n);
        for (k, lev) in self.levels.iter().enumerate() {
            let native = if k + 1 == n {
                jac.clone()
            } else {
                let zero = vec![0.0; lev.asm.n_dofs()];
                let (mut r, mut j) = lev.asm.residual_and_jacobian(&iterates[k], &lev.old, &zero, dt, &lev.cons, t)?;
                lev.cons.apply(Some(&mut j), &mut r, &iterates[k], t);
                j
            };
            let plan = &self.plans[k];
            let a = plan.apply_matrix(&native);
            let smoother: Box<dyn Smoother> = match self.cfg.kind {
                SolverKind::Fs => Box::new(FsPreconditioner::new(&lev.asm.mesh, &lev.asm.map, &a, plan, self.cfg.elems_per_block)?),
                _ => Box::new(AsPreconditioner::new(&lev.asm.mesh, &lev.asm.map, &a, self.cfg.elems_per_block, self.cfg.schwarz)?),
            };
            let mask = lev.cons.mask(native.n_rows());
            let constrained = plan.row_perm.iter().map(|&o| mask[o]).collect();
            levels.push(Level { a, smoother, constrained });
        }
        Gmg::new(levels, self.transfers.clone(), self.cfg.cycle)
    }

    /// Constrained fine Jacobian (native ordering) of the next step, linearized at the current state.
    pub fn jacobian_at_state(&self, dt: f64) -> Result<SparseMatrix> {
        let old = &self.state;
        let fine = self.levels.last().expect("nonempty");
        let explicit = fine.asm.explicit_part(old, dt)?;
        let (mut r, mut jac) = fine.asm.residual_and_jacobian(&old.x, old, &explicit, dt, &fine.cons, old.t + dt)?;
        fine.cons.apply(Some(&mut jac), &mut r, &old.x, old.t + dt);
        Ok(jac)
    }

    /// Fine-level GMG operator for the current state (used by diagnostics and tests).
    pub fn gmg_at_state(&mut self, dt: f64) -> Result<(Gmg, SparseMatrix)> {
        let jac = self.jacobian_at_state(dt)?;
        let plan = self.plans.last().expect("nonempty");
        let g = self.build_gmg(&jac, &self.state.x, dt, self.state.t + dt)?;
        Ok((g, plan.apply_matrix(&jac)))
    }
}
