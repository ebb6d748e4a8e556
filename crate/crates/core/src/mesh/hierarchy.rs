//! Nested midpoint refinement. Children are placed by evaluating the parent's Q2
//! geometry map, so every fine level reproduces the coarse geometry exactly.

use std::collections::HashMap;

use super::{BoundaryFace, Mesh};
use crate::error::Result;
use crate::fem::reference::Q2_NODES;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeOrigin {
    /// Coincides with a node of the coarser level.
    Coarse(usize),
    /// Quarter point `quarter/4` along the coarse edge from node `from` to node `to`.
    Edge { from: usize, to: usize, quarter: u8 },
    /// Interior point of a coarse element at a reference location.
    Interior { element: usize, xi: [f64; 2] },
}

#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    pub levels: Vec<Mesh>,
    /// `parent_map[l][e]`: parent on level `l` of element `e` on level `l + 1`.
    pub parent_map: Vec<Vec<usize>>,
    /// `node_origin[l][n]`: origin on level `l` of node `n` on level `l + 1`.
    pub node_origin: Vec<Vec<NodeOrigin>>,
    /// `node_parent[l][n]`: a level-`l` element containing fine node `n` and the
    /// node's reference coordinates in it.
    pub node_parent: Vec<Vec<(usize, [f64; 2])>>,
}

#[derive(Hash, PartialEq, Eq)]
enum Key {
    Coarse(usize),
    Edge(usize, usize, u8),
    Interior(usize, u8, u8),
}

impl MeshHierarchy {
    pub fn new(coarse: Mesh) -> Self {
        Self {
            levels: vec![coarse],
            parent_map: Vec::new(),
            node_origin: Vec::new(),
            node_parent: Vec::new(),
        }
    }

    /// Coarse mesh refined `levels - 1` times.
    pub fn build(coarse: Mesh, levels: usize) -> Result<Self> {
        let mut h = Self::new(coarse);
        for _ in 1..levels.max(1) {
            h.refine();
        }
        h.finest().validate()?;
        Ok(h)
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &Mesh {
        self.levels.last().expect("hierarchy has at least one level")
    }

    /// Appends one level obtained by splitting every element of the finest level into four.
    pub fn refine(&mut self) {
        let coarse = self.finest();
        let mut keys: HashMap<Key, usize> = HashMap::new();
        let mut nodes: Vec<[f64; 2]> = Vec::new();
        let mut origin = Vec::new();
        let mut node_parent = Vec::new();
        let ne = coarse.n_elements();
        let mut elements = Vec::with_capacity(4 * ne);
        let mut regions = Vec::with_capacity(4 * ne);
        let mut grid = Vec::with_capacity(4 * ne);
        let mut parents = Vec::with_capacity(4 * ne);

        for e in 0..ne {
            let el = coarse.elements[e];
            // 5×5 lattice of parent reference points, indexed (p, q)
            let mut lattice = [[usize::MAX; 5]; 5];
            for q in 0..5u8 {
                for p in 0..5u8 {
                    let xi = [-1.0 + p as f64 / 2.0, -1.0 + q as f64 / 2.0];
                    let (key, org) = classify(&el, e, p, q, xi);
                    let id = *keys.entry(key).or_insert_with(|| {
                        let x = match org {
                            NodeOrigin::Coarse(n) => coarse.nodes[n],
                            _ => coarse.map_point(e, xi),
                        };
                        nodes.push(x);
                        origin.push(org);
                        node_parent.push((e, xi));
                        nodes.len() - 1
                    });
                    lattice[p as usize][q as usize] = id;
                }
            }
            let [gx, gy] = coarse.grid[e];
            for b in 0..2 {
                for a in 0..2 {
                    let child: [usize; 9] = std::array::from_fn(|k| {
                        let p = 2 * a + (Q2_NODES[k][0] + 1.0) as usize;
                        let q = 2 * b + (Q2_NODES[k][1] + 1.0) as usize;
                        lattice[p][q]
                    });
                    elements.push(child);
                    regions.push(coarse.regions[e]);
                    grid.push([2 * gx + a, 2 * gy + b]);
                    parents.push(e);
                }
            }
        }

        let mut faces = Vec::with_capacity(2 * coarse.faces.len());
        for f in &coarse.faces {
            let kids: [usize; 2] = match f.edge {
                0 => [0, 1],
                1 => [1, 3],
                2 => [3, 2],
                _ => [2, 0],
            };
            for k in kids {
                faces.push(BoundaryFace {
                    element: 4 * f.element + k,
                    edge: f.edge,
                    group: f.group,
                });
            }
        }

        let fine = Mesh {
            nodes,
            elements,
            regions,
            faces,
            groups: coarse.groups.clone(),
            grid,
            level: coarse.level + 1,
        };
        self.parent_map.push(parents);
        self.node_origin.push(origin);
        self.node_parent.push(node_parent);
        self.levels.push(fine);
    }
}

fn classify(el: &[usize; 9], e: usize, p: u8, q: u8, xi: [f64; 2]) -> (Key, NodeOrigin) {
    if p % 2 == 0 && q % 2 == 0 {
        let local = Q2_NODES
            .iter()
            .position(|n| n[0] == xi[0] && n[1] == xi[1])
            .expect("even lattice point is a Q2 node");
        let n = el[local];
        return (Key::Coarse(n), NodeOrigin::Coarse(n));
    }
    // (start corner, end corner, position along edge in quarters)
    let edge = if q == 0 {
        Some((el[0], el[1], p))
    } else if p == 4 {
        Some((el[1], el[2], q))
    } else if q == 4 {
        Some((el[2], el[3], 4 - p))
    } else if p == 0 {
        Some((el[3], el[0], 4 - q))
    } else {
        None
    };
    match edge {
        Some((s, t, k)) => {
            let (from, to, quarter) = if s < t { (s, t, k) } else { (t, s, 4 - k) };
            (
                Key::Edge(from, to, quarter),
                NodeOrigin::Edge { from, to, quarter },
            )
        }
        None => (
            Key::Interior(e, p, q),
            NodeOrigin::Interior { element: e, xi },
        ),
    }
}
