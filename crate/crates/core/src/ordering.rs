//! Row/column orderings of the monolithic Jacobian, field-split groups and
//! Vanka block construction.
//!
//! The assembler's native layout is the J1 ordering: block rows
//! (S, A, K, F, V, W) against columns (d^s, d^f, u^s, u^f, p^s, p^f).

use std::collections::BTreeMap;

use crate::fem::{DofMap, Field};
use crate::linalg::SparseMatrix;
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingKind {
    J,
    J1,
    J2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingPlan {
    pub kind: OrderingKind,
    /// `row_perm[new] = native row`.
    pub row_perm: Vec<usize>,
    /// `col_perm[new] = native column`.
    pub col_perm: Vec<usize>,
    /// Block boundaries in the new numbering (7 offsets).
    pub row_blocks: [usize; 7],
    pub col_blocks: [usize; 7],
}

fn concat(map: &DofMap, order: [Field; 6]) -> (Vec<usize>, [usize; 7]) {
    let mut v = Vec::with_capacity(map.n_dofs());
    let mut b = [0; 7];
    for (k, f) in order.iter().enumerate() {
        v.extend(map.field_range(*f));
        b[k + 1] = v.len();
    }
    (v, b)
}

const NATIVE: [Field; 6] = Field::ALL;
const J_ROWS: [Field; 6] = [Field::Us, Field::Df, Field::Ds, Field::Uf, Field::Ps, Field::Pf];
const J2_ORDER: [Field; 6] = [Field::Ds, Field::Df, Field::Ps, Field::Us, Field::Uf, Field::Pf];

impl OrderingPlan {
    pub fn new(kind: OrderingKind, map: &DofMap) -> Self {
        let (rows, cols) = match kind {
            OrderingKind::J => (J_ROWS, NATIVE),
            OrderingKind::J1 => (NATIVE, NATIVE),
            OrderingKind::J2 => (J2_ORDER, J2_ORDER),
        };
        let (row_perm, row_blocks) = concat(map, rows);
        let (col_perm, col_blocks) = concat(map, cols);
        Self {
            kind,
            row_perm,
            col_perm,
            row_blocks,
            col_blocks,
        }
    }

    pub fn dim(&self) -> usize {
        self.row_perm.len()
    }

    pub fn apply_matrix(&self, a: &SparseMatrix) -> SparseMatrix {
        a.permute(&self.row_perm, &self.col_perm)
    }

    /// Native row-space vector to the new row numbering.
    pub fn rows_forward(&self, r: &[f64]) -> Vec<f64> {
        self.row_perm.iter().map(|&o| r[o]).collect()
    }

    /// New column-space vector back to native column numbering.
    pub fn cols_backward(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        for (k, &o) in self.col_perm.iter().enumerate() {
            out[o] = z[k];
        }
        out
    }

    pub fn cols_forward(&self, x: &[f64]) -> Vec<f64> {
        self.col_perm.iter().map(|&o| x[o]).collect()
    }

    pub fn rows_backward(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; r.len()];
        for (k, &o) in self.row_perm.iter().enumerate() {
            out[o] = r[k];
        }
        out
    }

    /// Inverse of `col_perm`: native index → new index.
    pub fn col_position(&self) -> Vec<usize> {
        let mut pos = vec![0; self.dim()];
        for (k, &o) in self.col_perm.iter().enumerate() {
            pos[o] = k;
        }
        pos
    }
}

pub fn build_orderings(map: &DofMap) -> [OrderingPlan; 3] {
    [
        OrderingPlan::new(OrderingKind::J, map),
        OrderingPlan::new(OrderingKind::J1, map),
        OrderingPlan::new(OrderingKind::J2, map),
    ]
}

/// Field-split groups in native numbering: `[d^s, d^f, p^s]` and `[u^s, u^f, p^f]`.
pub fn build_fieldsplit_sets(map: &DofMap) -> (Vec<usize>, Vec<usize>) {
    let g = |fs: [Field; 3]| fs.iter().flat_map(|f| map.field_range(*f)).collect::<Vec<_>>();
    (g([Field::Ds, Field::Df, Field::Ps]), g([Field::Us, Field::Uf, Field::Pf]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRegion {
    Solid,
    Fluid,
}

/// Dofs of one Vanka block in native numbering (sorted).
#[derive(Debug, Clone, PartialEq)]
pub struct VankaBlock {
    pub region: BlockRegion,
    pub seeds: Vec<usize>,
    pub dofs: Vec<usize>,
}

/// Seeds contiguous `px × py` element patches per region from the structured grid.
pub fn seed_patches(mesh: &Mesh, elems_per_block: usize) -> Vec<(BlockRegion, Vec<usize>)> {
    let n = elems_per_block.max(1);
    let px = (n as f64).sqrt().ceil() as usize;
    let py = n.div_ceil(px);
    let mut groups: BTreeMap<(u8, usize, usize), Vec<usize>> = BTreeMap::new();
    for e in 0..mesh.n_elements() {
        let [gx, gy] = mesh.grid[e];
        let solid = mesh.regions[e].is_solid();
        groups.entry((u8::from(!solid), gy / py, gx / px)).or_default().push(e);
    }
    groups
        .into_iter()
        .map(|((r, _, _), es)| (if r == 0 { BlockRegion::Solid } else { BlockRegion::Fluid }, es))
        .collect()
}

fn seed_nodes(mesh: &Mesh, seeds: &[usize]) -> Vec<usize> {
    let mut nodes: Vec<usize> = seeds.iter().flat_map(|&e| mesh.elements[e]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}

/// Vanka blocks: the seed pressures plus displacement and velocity of every node
/// whose support meets a seed element. Fluid blocks leave out interface nodes,
/// which carry solid dofs.
pub fn build_vanka_blocks(mesh: &Mesh, map: &DofMap, elems_per_block: usize) -> Vec<VankaBlock> {
    seed_patches(mesh, elems_per_block)
        .into_iter()
        .map(|(region, seeds)| {
            let mut dofs = Vec::new();
            for n in seed_nodes(mesh, &seeds) {
                if region == BlockRegion::Fluid && map.node_solid[n] {
                    continue;
                }
                for c in 0..2 {
                    dofs.push(map.disp(n, c));
                    dofs.push(map.vel(n, c));
                }
            }
            for &e in &seeds {
                dofs.extend((0..3).map(|m| map.pressure(e, m)));
            }
            dofs.sort_unstable();
            VankaBlock { region, seeds, dofs }
        })
        .collect()
}

/// Elements sharing a node with any seed element.
pub fn one_layer_overlap(mesh: &Mesh, seeds: &[usize]) -> Vec<usize> {
    let nodes = seed_nodes(mesh, seeds);
    let mut out: Vec<usize> = (0..mesh.n_elements())
        .filter(|&e| mesh.elements[e].iter().any(|n| nodes.binary_search(n).is_ok()))
        .collect();
    out.sort_unstable();
    out
}
