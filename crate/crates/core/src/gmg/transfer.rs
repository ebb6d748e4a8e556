//! Prolongation by natural injection and the block restriction with the
//! relocated interface coupling.

use crate::error::{FsiError, Result};
use crate::fem::reference::q2_values;
use crate::fem::{DofMap, Field};
use crate::linalg::SparseMatrix;
use crate::mesh::{MeshHierarchy, NodeOrigin};
use crate::ordering::OrderingPlan;

/// Coarse→fine prolongation `p` and fine→coarse restriction `r`.
#[derive(Debug, Clone)]
pub struct TransferPair {
    pub p: SparseMatrix,
    pub r: SparseMatrix,
}

const DROP: f64 = 1e-14;

/// Offset of child `k` of an element in the parent's reference square.
pub fn child_offset(child: usize) -> [f64; 2] {
    let k = child % 4;
    [-0.5 + (k % 2) as f64, -0.5 + (k / 2) as f64]
}

/// Per coarse node, the id of the coinciding fine node.
pub fn coarse_to_fine_nodes(h: &MeshHierarchy, coarse: usize) -> Vec<usize> {
    let mut out = vec![usize::MAX; h.levels[coarse].n_nodes()];
    for (f, o) in h.node_origin[coarse].iter().enumerate() {
        if let NodeOrigin::Coarse(c) = o {
            out[*c] = f;
        }
    }
    out
}

/// Natural injection P from level `coarse` to `coarse + 1` in native ordering.
pub fn prolongation(h: &MeshHierarchy, coarse: usize, map_c: &DofMap, map_f: &DofMap) -> Result<SparseMatrix> {
    let (mc, mf) = (&h.levels[coarse], &h.levels[coarse + 1]);
    if h.node_parent[coarse].len() != mf.n_nodes() || h.parent_map[coarse].len() != mf.n_elements() {
        return Err(FsiError::Geometry("hierarchy levels are inconsistent".into()));
    }
    let mut t = Vec::new();
    for (nf, o) in h.node_origin[coarse].iter().enumerate() {
        let weights: Vec<(usize, f64)> = match o {
            NodeOrigin::Coarse(c) => vec![(*c, 1.0)],
            _ => {
                let (e, xi) = h.node_parent[coarse][nf];
                let v = q2_values(xi[0], xi[1]);
                mc.elements[e].iter().zip(v).filter(|(_, w)| w.abs() > DROP).map(|(n, w)| (*n, w)).collect()
            }
        };
        for (nc, w) in weights {
            for c in 0..2 {
                t.push((map_f.disp(nf, c), map_c.disp(nc, c), w));
                t.push((map_f.vel(nf, c), map_c.vel(nc, c), w));
            }
        }
    }
    for (ef, &ec) in h.parent_map[coarse].iter().enumerate() {
        let [ox, oy] = child_offset(ef);
        let (a, b, c) = (map_c.pressure(ec, 0), map_c.pressure(ec, 1), map_c.pressure(ec, 2));
        let f0 = map_f.pressure(ef, 0);
        t.extend([(f0, a, 1.0), (f0, b, ox), (f0, c, oy)]);
        t.push((map_f.pressure(ef, 1), b, 0.5));
        t.push((map_f.pressure(ef, 2), c, 0.5));
    }
    SparseMatrix::from_triplets(map_f.n_dofs(), map_c.n_dofs(), &t)
}

/// Restriction built from the blocks of Pᵀ: field-diagonal blocks are kept, the
/// interface block (P_{d^f,d^s})ᵀ is moved from the `d^f` to the `u^f` columns of
/// the `d^s` rows, and (P_{u^f,u^s})ᵀ is dropped.
pub fn restriction(p: &SparseMatrix, map_c: &DofMap, map_f: &DofMap) -> Result<SparseMatrix> {
    let pt = p.transpose();
    let mut t = Vec::new();
    for i in 0..pt.n_rows() {
        let fr = map_c.field_of(i);
        let (cols, vals) = pt.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let fc = map_f.field_of(j);
            if fr == fc {
                t.push((i, j, v));
            } else if fr == Field::Ds && fc == Field::Df {
                // the fine d^f node index sits at the same slot offset in u^f
                let slot = j - map_f.offsets[Field::Df.index()];
                t.push((i, map_f.offsets[Field::Uf.index()] + slot, v));
            }
        }
    }
    SparseMatrix::from_triplets(pt.n_rows(), pt.n_cols(), &t)
}

pub fn build_transfer(h: &MeshHierarchy, coarse: usize, map_c: &DofMap, map_f: &DofMap) -> Result<TransferPair> {
    let p = prolongation(h, coarse, map_c, map_f)?;
    let r = restriction(&p, map_c, map_f)?;
    Ok(TransferPair { p, r })
}

impl TransferPair {
    /// Same operators in another ordering: P' = Π_f P Π_cᵀ, R' = Π_c R Π_fᵀ.
    pub fn permuted(&self, plan_c: &OrderingPlan, plan_f: &OrderingPlan) -> Self {
        Self {
            p: self.p.permute(&plan_f.col_perm, &plan_c.col_perm),
            r: self.r.permute(&plan_c.row_perm, &plan_f.row_perm),
        }
    }
}

/// Restricts a fine state to the coarse level: nodal values by injection,
/// pressures by L2 projection of the four children onto the parent's P1 modes.
pub fn restrict_state(h: &MeshHierarchy, coarse: usize, map_c: &DofMap, map_f: &DofMap, xf: &[f64]) -> Vec<f64> {
    let mut xc = vec![0.0; map_c.n_dofs()];
    for (nc, nf) in coarse_to_fine_nodes(h, coarse).into_iter().enumerate() {
        for c in 0..2 {
            xc[map_c.disp(nc, c)] = xf[map_f.disp(nf, c)];
            xc[map_c.vel(nc, c)] = xf[map_f.vel(nf, c)];
        }
    }
    let mut acc = vec![[0.0; 3]; h.levels[coarse].n_elements()];
    for (ef, &ec) in h.parent_map[coarse].iter().enumerate() {
        let [ox, oy] = child_offset(ef);
        let (a, b, c) = (xf[map_f.pressure(ef, 0)], xf[map_f.pressure(ef, 1)], xf[map_f.pressure(ef, 2)]);
        acc[ec][0] += a / 4.0;
        acc[ec][1] += 0.75 * (a * ox + b / 6.0);
        acc[ec][2] += 0.75 * (a * oy + c / 6.0);
    }
    for (ec, v) in acc.iter().enumerate() {
        for m in 0..3 {
            xc[map_c.pressure(ec, m)] = v[m];
        }
    }
    xc
}
