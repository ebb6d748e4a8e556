//! Level smoothers: Vanka additive Schwarz (AS) on the J1 ordering, field split
//! (FS) on the J2 ordering, and the damped Richardson iteration they drive.

pub mod schwarz;

pub use schwarz::{SchwarzBlock, SchwarzMode, SchwarzSweep};

use crate::error::{FsiError, Result};
use crate::fem::{DofMap, Field};
use crate::linalg::{IndexSet, SparseMatrix};
use crate::mesh::Mesh;
use crate::ordering::{build_vanka_blocks, one_layer_overlap, seed_patches, BlockRegion, OrderingPlan};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichardsonConfig {
    pub omega: f64,
    pub sweeps: usize,
}

impl Default for RichardsonConfig {
    fn default() -> Self {
        Self { omega: 0.7, sweeps: 1 }
    }
}

impl RichardsonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(FsiError::Config(format!("damping {} outside (0, 2)", self.omega)));
        }
        Ok(())
    }
}

/// Approximate inverse applied inside Richardson sweeps.
pub trait Smoother {
    fn precondition(&self, a: &SparseMatrix, r: &[f64]) -> Vec<f64>;
}

/// x ← x + ω M(b − A x), `sweeps` times.
pub fn richardson_smooth(a: &SparseMatrix, m: &dyn Smoother, x: &mut [f64], b: &[f64], cfg: &RichardsonConfig) {
    let mut ax = vec![0.0; b.len()];
    for _ in 0..cfg.sweeps {
        a.spmv_into(x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let z = m.precondition(a, &r);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += cfg.omega * zi;
        }
    }
}

/// Row sums of the solid velocity block `K_{u^s}` of a native-ordered Jacobian.
pub fn lumped_mass(a: &SparseMatrix, map: &DofMap) -> Result<Vec<f64>> {
    let us = map.field_range(Field::Us);
    us.clone()
        .map(|i| {
            let (cols, vals) = a.row(i);
            let s: f64 = cols.iter().zip(vals).filter(|(c, _)| us.contains(c)).map(|(_, v)| v).sum();
            if s > 0.0 {
                Ok(s)
            } else {
                Err(FsiError::SingularBlock {
                    label: "lumped solid mass".into(),
                    column: i,
                    pivot: s,
                })
            }
        })
        .collect()
}

/// Vanka AS on the native (J1) matrix: one sweep over the solid blocks, then the fluid blocks.
#[derive(Debug, Clone)]
pub struct AsPreconditioner {
    pub sweep: SchwarzSweep,
}

impl AsPreconditioner {
    pub fn new(mesh: &Mesh, map: &DofMap, a: &SparseMatrix, elems_per_block: usize, mode: SchwarzMode) -> Result<Self> {
        let mut blocks = Vec::new();
        for (i, vb) in build_vanka_blocks(mesh, map, elems_per_block).into_iter().enumerate() {
            let label = match vb.region {
                BlockRegion::Solid => format!("AS solid block {i}"),
                BlockRegion::Fluid => format!("AS fluid block {i}"),
            };
            blocks.push(SchwarzBlock::dense(a, vb.dofs, label)?);
        }
        Ok(Self {
            sweep: SchwarzSweep::new(a.n_rows(), blocks, mode),
        })
    }
}

impl Smoother for AsPreconditioner {
    fn precondition(&self, a: &SparseMatrix, r: &[f64]) -> Vec<f64> {
        self.sweep.apply(a, r)
    }
}

/// Field split on the J2 matrix: group 1 `[d^s, d^f, p^s]` and group 2
/// `[u^s, u^f, p^f]` are smoothed independently.
#[derive(Debug, Clone)]
pub struct FsPreconditioner {
    pub n1: usize,
    a11: SparseMatrix,
    a22: SparseMatrix,
    pub as1: SchwarzSweep,
    pub as2: SchwarzSweep,
}

impl FsPreconditioner {
    /// `a` is the J2-ordered matrix produced by `plan`.
    pub fn new(mesh: &Mesh, map: &DofMap, a: &SparseMatrix, plan: &OrderingPlan, elems_per_block: usize) -> Result<Self> {
        let n = a.n_rows();
        let n1 = map.field_range(Field::Ds).len() + map.field_range(Field::Df).len() + map.field_range(Field::Ps).len();
        let pos = plan.col_position();
        let g1 = IndexSet::range("group 1", 0, n1);
        let g2 = IndexSet::range("group 2", n1, n);
        let a11 = a.extract_submatrix(&g1, &g1)?;
        let a22 = a.extract_submatrix(&g2, &g2)?;
        let local = |dofs: &mut Vec<usize>, offset: usize| {
            for d in dofs.iter_mut() {
                *d = pos[*d] - offset;
            }
            dofs.sort_unstable();
            dofs.dedup();
        };

        let patches = seed_patches(mesh, elems_per_block);
        let mut b1 = Vec::new();
        let mut b2 = Vec::new();
        let us: Vec<usize> = map.field_range(Field::Us).map(|d| pos[d] - n1).collect();
        if !us.is_empty() {
            b2.push(SchwarzBlock::diagonal(&a22, us, "FS lumped solid mass")?);
        }
        for (i, (region, seeds)) in patches.iter().enumerate() {
            let nodes = |els: &[usize]| {
                let mut v: Vec<usize> = els.iter().flat_map(|&e| mesh.elements[e]).collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            match region {
                BlockRegion::Solid => {
                    let mut dofs: Vec<usize> = nodes(seeds).iter().flat_map(|&nd| [map.disp(nd, 0), map.disp(nd, 1)]).collect();
                    dofs.extend(seeds.iter().flat_map(|&e| (0..3).map(move |m| map.pressure(e, m))));
                    local(&mut dofs, 0);
                    b1.push(SchwarzBlock::dense(&a11, dofs, format!("FS solid block {i}"))?);
                }
                BlockRegion::Fluid => {
                    let wide = one_layer_overlap(mesh, seeds);
                    let mut dd: Vec<usize> = nodes(&wide)
                        .into_iter()
                        .filter(|&nd| !map.node_solid[nd])
                        .flat_map(|nd| [map.disp(nd, 0), map.disp(nd, 1)])
                        .collect();
                    local(&mut dd, 0);
                    if !dd.is_empty() {
                        b1.push(SchwarzBlock::dense(&a11, dd, format!("FS mesh block {i}"))?);
                    }
                    let mut up: Vec<usize> = nodes(seeds)
                        .into_iter()
                        .filter(|&nd| !map.node_solid[nd])
                        .flat_map(|nd| [map.vel(nd, 0), map.vel(nd, 1)])
                        .collect();
                    up.extend(seeds.iter().flat_map(|&e| (0..3).map(move |m| map.pressure(e, m))));
                    local(&mut up, n1);
                    b2.push(SchwarzBlock::dense(&a22, up, format!("FS fluid block {i}"))?);
                }
            }
        }
        // solid blocks precede the mesh-motion blocks within group 1
        b1.sort_by_key(|b| !b.label.starts_with("FS solid"));
        Ok(Self {
            n1,
            as1: SchwarzSweep::new(n1, b1, SchwarzMode::Multiplicative),
            as2: SchwarzSweep::new(n - n1, b2, SchwarzMode::Multiplicative),
            a11,
            a22,
        })
    }
}

impl Smoother for FsPreconditioner {
    fn precondition(&self, _a: &SparseMatrix, r: &[f64]) -> Vec<f64> {
        let mut z = self.as1.apply(&self.a11, &r[..self.n1]);
        z.extend(self.as2.apply(&self.a22, &r[self.n1..]));
        z
    }
}

/// Exact inverse through the banded direct solver (reference smoother).
pub struct ExactSmoother(pub crate::linalg::BandedLu);

impl Smoother for ExactSmoother {
    fn precondition(&self, _a: &SparseMatrix, r: &[f64]) -> Vec<f64> {
        self.0.solve(r)
    }
}
