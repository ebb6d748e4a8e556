//! Global dof numbering and the six-field layout `[d^s | d^f | u^s | u^f | p^s | p^f]`.
//!
//! Nodes belonging to any solid element, interface nodes included, own solid
//! dofs. Within a field, dofs are ordered by node id then component; pressures
//! are three modal coefficients per element.

use crate::linalg::IndexSet;
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Ds,
    Df,
    Us,
    Uf,
    Ps,
    Pf,
}

impl Field {
    pub const ALL: [Field; 6] = [Field::Ds, Field::Df, Field::Us, Field::Uf, Field::Ps, Field::Pf];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Ds => "d_s",
            Field::Df => "d_f",
            Field::Us => "u_s",
            Field::Uf => "u_f",
            Field::Ps => "p_s",
            Field::Pf => "p_f",
        }
    }
}

/// Local layout of an element's 39 unknowns: displacement (2k+c), velocity
/// (18+2k+c), pressure modes (36+m).
pub const ELEM_DOFS: usize = 39;
pub const fn local_d(k: usize, c: usize) -> usize {
    2 * k + c
}
pub const fn local_u(k: usize, c: usize) -> usize {
    18 + 2 * k + c
}
pub const fn local_p(m: usize) -> usize {
    36 + m
}

#[derive(Debug, Clone)]
pub struct DofMap {
    /// Solid ownership per node.
    pub node_solid: Vec<bool>,
    /// Position of the node within its owner's node list.
    node_slot: Vec<usize>,
    /// Position of the element within its region's pressure list.
    elem_slot: Vec<usize>,
    elem_solid: Vec<bool>,
    /// Start offsets of the six fields followed by the total.
    pub offsets: [usize; 7],
}

impl DofMap {
    pub fn n_dofs(&self) -> usize {
        self.offsets[6]
    }

    pub fn field_range(&self, f: Field) -> std::ops::Range<usize> {
        self.offsets[f.index()]..self.offsets[f.index() + 1]
    }

    pub fn disp(&self, node: usize, c: usize) -> usize {
        let f = if self.node_solid[node] { Field::Ds } else { Field::Df };
        self.offsets[f.index()] + 2 * self.node_slot[node] + c
    }

    pub fn vel(&self, node: usize, c: usize) -> usize {
        let f = if self.node_solid[node] { Field::Us } else { Field::Uf };
        self.offsets[f.index()] + 2 * self.node_slot[node] + c
    }

    pub fn pressure(&self, e: usize, m: usize) -> usize {
        let f = if self.elem_solid[e] { Field::Ps } else { Field::Pf };
        self.offsets[f.index()] + 3 * self.elem_slot[e] + m
    }

    pub fn element_dofs(&self, mesh: &Mesh, e: usize) -> [usize; ELEM_DOFS] {
        let el = &mesh.elements[e];
        std::array::from_fn(|i| {
            if i < 18 {
                self.disp(el[i / 2], i % 2)
            } else if i < 36 {
                self.vel(el[(i - 18) / 2], i % 2)
            } else {
                self.pressure(e, i - 36)
            }
        })
    }

    pub fn field_of(&self, dof: usize) -> Field {
        let k = (0..6).find(|&k| dof < self.offsets[k + 1]).expect("dof in range");
        Field::ALL[k]
    }
}

#[derive(Debug, Clone)]
pub struct FieldLayout {
    pub sets: [IndexSet; 6],
    pub interface: Vec<usize>,
    pub n_dofs: usize,
}

impl FieldLayout {
    pub fn set(&self, f: Field) -> &IndexSet {
        &self.sets[f.index()]
    }
}

pub fn build_layout(mesh: &Mesh) -> (DofMap, FieldLayout) {
    let node_solid = mesh.solid_node_mask();
    let mut node_slot = vec![0; mesh.n_nodes()];
    let (mut ns, mut nf) = (0, 0);
    for (n, &s) in node_solid.iter().enumerate() {
        let c = if s { &mut ns } else { &mut nf };
        node_slot[n] = *c;
        *c += 1;
    }
    let elem_solid: Vec<bool> = mesh.regions.iter().map(|r| r.is_solid()).collect();
    let mut elem_slot = vec![0; mesh.n_elements()];
    let (mut es, mut ef) = (0, 0);
    for (e, &s) in elem_solid.iter().enumerate() {
        let c = if s { &mut es } else { &mut ef };
        elem_slot[e] = *c;
        *c += 1;
    }
    let sizes = [2 * ns, 2 * nf, 2 * ns, 2 * nf, 3 * es, 3 * ef];
    let mut offsets = [0; 7];
    for k in 0..6 {
        offsets[k + 1] = offsets[k] + sizes[k];
    }
    let sets = std::array::from_fn(|k| {
        IndexSet::range(Field::ALL[k].name(), offsets[k], offsets[k + 1])
    });
    let map = DofMap {
        node_solid,
        node_slot,
        elem_slot,
        elem_solid,
        offsets,
    };
    let layout = FieldLayout {
        sets,
        interface: mesh.interface_nodes(),
        n_dofs: offsets[6],
    };
    (map, layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_case, GeometryCase, MeshHierarchy, Region};

    fn one_quad(region: Region) -> Mesh {
        let mut m = build_case(&GeometryCase::unit_square(1)).unwrap();
        m.regions[0] = region;
        m
    }

    #[test]
    fn single_quad_counts() {
        let (_, l) = build_layout(&one_quad(Region::Fluid));
        let sizes: Vec<usize> = l.sets.iter().map(|s| s.len()).collect();
        assert_eq!(sizes, vec![0, 18, 0, 18, 0, 3]);
        assert_eq!(l.n_dofs, 39);
        let (_, l) = build_layout(&one_quad(Region::Solid));
        let sizes: Vec<usize> = l.sets.iter().map(|s| s.len()).collect();
        assert_eq!(sizes, vec![18, 0, 18, 0, 3, 0]);
    }

    #[test]
    fn shared_edge_nodes_are_solid_owned() {
        let mut case = GeometryCase::unit_square(1);
        case.nx = 2;
        let mut m = build_case(&case).unwrap();
        m.regions[1] = Region::Solid;
        let (map, l) = build_layout(&m);
        // the shared edge is the fluid element's right edge
        let shared = [m.elements[0][1], m.elements[0][5], m.elements[0][2]];
        assert_eq!(l.interface, {
            let mut s = shared.to_vec();
            s.sort();
            s
        });
        for n in shared {
            for c in 0..2 {
                assert!(l.set(Field::Ds).contains(map.disp(n, c)));
                assert!(l.set(Field::Us).contains(map.vel(n, c)));
            }
        }
        assert_eq!(l.set(Field::Ds).len(), 18);
        assert_eq!(l.set(Field::Df).len(), 12);
    }

    #[test]
    fn layouts_partition_all_dofs_on_every_level() {
        let h = MeshHierarchy::build(build_case(&GeometryCase::bulge(2e-3)).unwrap(), 3).unwrap();
        for m in &h.levels {
            let (map, l) = build_layout(m);
            let mut seen = vec![0u8; l.n_dofs];
            for s in &l.sets {
                for &i in s.indices() {
                    seen[i] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
            // continuity: every element's dof list is consistent with the node numbering
            for e in 0..m.n_elements() {
                let d = map.element_dofs(m, e);
                for (k, &n) in m.elements[e].iter().enumerate() {
                    assert_eq!(d[local_d(k, 1)], map.disp(n, 1));
                    assert_eq!(d[local_u(k, 0)], map.vel(n, 0));
                }
                let solid = m.regions[e].is_solid();
                assert_eq!(map.field_of(d[local_p(0)]) == Field::Ps, solid);
            }
        }
    }
}
