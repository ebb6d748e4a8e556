//! Structured quadrilateral meshes with Q2 geometry, region tags and boundary
//! groups, plus the nested refinement hierarchy.

pub mod cases;
pub mod hierarchy;
pub mod vtk;

pub use cases::{build_case, CaseKind, GeometryCase};
pub use hierarchy::{MeshHierarchy, NodeOrigin};

use crate::error::{FsiError, Result};
use crate::fem::reference::{q2_gradients, q2_values, QuadratureRule, EDGE_NODES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Fluid,
    Solid,
    /// Solid-like material patch inside the lumen; uses the solid constitutive law.
    Clot,
}

impl Region {
    pub fn is_solid(self) -> bool {
        !matches!(self, Region::Fluid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryRole {
    Inlet,
    Outlet,
    Clamped,
    Symmetry,
    FreeWall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGroup {
    pub name: String,
    pub role: BoundaryRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub element: usize,
    pub edge: usize,
    pub group: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Nine Q2 node ids per element, ordered as [`crate::fem::reference::Q2_NODES`].
    pub elements: Vec<[usize; 9]>,
    pub regions: Vec<Region>,
    pub faces: Vec<BoundaryFace>,
    pub groups: Vec<BoundaryGroup>,
    /// Structured (column, row) position of each element.
    pub grid: Vec<[usize; 2]>,
    pub level: usize,
}

pub fn jacobian_of(coords: &[[f64; 2]; 9], grads: &[[f64; 2]; 9]) -> [[f64; 2]; 2] {
    let mut j = [[0.0; 2]; 2];
    for (x, g) in coords.iter().zip(grads) {
        for r in 0..2 {
            for c in 0..2 {
                j[r][c] += x[r] * g[c];
            }
        }
    }
    j
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn corners(&self, e: usize) -> [usize; 4] {
        let n = &self.elements[e];
        [n[0], n[1], n[2], n[3]]
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 9] {
        self.elements[e].map(|n| self.nodes[n])
    }

    pub fn map_point(&self, e: usize, xi: [f64; 2]) -> [f64; 2] {
        let v = q2_values(xi[0], xi[1]);
        let c = self.element_coords(e);
        let mut p = [0.0; 2];
        for (x, w) in c.iter().zip(&v) {
            p[0] += w * x[0];
            p[1] += w * x[1];
        }
        p
    }

    /// Geometry Jacobian ∂x/∂ξ at a reference point.
    pub fn jacobian(&self, e: usize, xi: [f64; 2]) -> [[f64; 2]; 2] {
        jacobian_of(&self.element_coords(e), &q2_gradients(xi[0], xi[1]))
    }

    /// Area of element `e` by 3×3 quadrature of det(∂x/∂ξ).
    pub fn element_volume(&self, e: usize) -> Result<f64> {
        let rule = QuadratureRule::gauss(3);
        let c = self.element_coords(e);
        let mut area = 0.0;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let j = jacobian_of(&c, &q2_gradients(p[0], p[1]));
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det <= 0.0 {
                return Err(FsiError::InvertedElement { element: e, det });
            }
            area += w * det;
        }
        Ok(area)
    }

    pub fn region_area(&self, region: Region) -> Result<f64> {
        let mut a = 0.0;
        for e in 0..self.n_elements() {
            if self.regions[e] == region {
                a += self.element_volume(e)?;
            }
        }
        Ok(a)
    }

    /// Number of distinct element corner nodes.
    pub fn vertex_count(&self) -> usize {
        let mut seen = vec![false; self.n_nodes()];
        for e in 0..self.n_elements() {
            for c in self.corners(e) {
                seen[c] = true;
            }
        }
        seen.iter().filter(|s| **s).count()
    }

    /// Checks Jacobian positivity, tag consistency and face validity.
    pub fn validate(&self) -> Result<()> {
        let ne = self.n_elements();
        if self.regions.len() != ne || self.grid.len() != ne {
            return Err(FsiError::Geometry("per-element arrays have inconsistent lengths".into()));
        }
        for el in &self.elements {
            if el.iter().any(|&n| n >= self.n_nodes()) {
                return Err(FsiError::Geometry("element references a missing node".into()));
            }
        }
        let rule = QuadratureRule::gauss(3);
        for e in 0..ne {
            let c = self.element_coords(e);
            for p in &rule.points {
                let j = jacobian_of(&c, &q2_gradients(p[0], p[1]));
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if det <= 0.0 {
                    return Err(FsiError::InvertedElement { element: e, det });
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for f in &self.faces {
            if f.element >= ne || f.edge >= 4 || f.group >= self.groups.len() {
                return Err(FsiError::Geometry("boundary face out of range".into()));
            }
            if !seen.insert((f.element, f.edge)) {
                return Err(FsiError::Geometry(format!(
                    "face ({}, {}) tagged twice",
                    f.element, f.edge
                )));
            }
        }
        Ok(())
    }

    pub fn group_id(&self, name: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.name == name)
    }

    pub fn groups_with_role(&self, role: BoundaryRole) -> Vec<usize> {
        (0..self.groups.len())
            .filter(|&g| self.groups[g].role == role)
            .collect()
    }

    pub fn faces_in_group(&self, group: usize) -> impl Iterator<Item = &BoundaryFace> {
        self.faces.iter().filter(move |f| f.group == group)
    }

    /// Sorted ids of all Q2 nodes lying on faces of `group`.
    pub fn group_nodes(&self, group: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .faces_in_group(group)
            .flat_map(|f| EDGE_NODES[f.edge].map(|l| self.elements[f.element][l]))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Per node: does it belong to at least one solid-like element.
    pub fn solid_node_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n_nodes()];
        for (el, r) in self.elements.iter().zip(&self.regions) {
            if r.is_solid() {
                for &n in el {
                    m[n] = true;
                }
            }
        }
        m
    }

    /// Nodes shared by fluid and solid elements.
    pub fn interface_nodes(&self) -> Vec<usize> {
        let solid = self.solid_node_mask();
        let mut fluid = vec![false; self.n_nodes()];
        for (el, r) in self.elements.iter().zip(&self.regions) {
            if !r.is_solid() {
                for &n in el {
                    fluid[n] = true;
                }
            }
        }
        (0..self.n_nodes()).filter(|&n| solid[n] && fluid[n]).collect()
    }

    pub fn elements_in(&self, region: Region) -> Vec<usize> {
        (0..self.n_elements())
            .filter(|&e| self.regions[e] == region)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(coords: [[f64; 2]; 4]) -> Mesh {
        // build Q2 nodes from bilinear corners
        let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let [a, b, c, d] = coords;
        let center = [
            (a[0] + b[0] + c[0] + d[0]) / 4.0,
            (a[1] + b[1] + c[1] + d[1]) / 4.0,
        ];
        Mesh {
            nodes: vec![a, b, c, d, mid(a, b), mid(b, c), mid(c, d), mid(d, a), center],
            elements: vec![[0, 1, 2, 3, 4, 5, 6, 7, 8]],
            regions: vec![Region::Fluid],
            faces: vec![],
            groups: vec![],
            grid: vec![[0, 0]],
            level: 0,
        }
    }

    #[test]
    fn element_volume_examples() {
        let sq = single([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!((sq.element_volume(0).unwrap() - 1.0).abs() < 1e-14);
        let rect = single([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]);
        assert!((rect.element_volume(0).unwrap() - 2.0).abs() < 1e-14);
        let pts = [[0.0, 0.0], [2.0, 0.0], [1.5, 1.0], [0.5, 1.0]];
        let shoelace = 0.5
            * (0..4)
                .map(|i| {
                    let (p, q) = (pts[i], pts[(i + 1) % 4]);
                    p[0] * q[1] - q[0] * p[1]
                })
                .sum::<f64>();
        let trap = single(pts);
        assert!((trap.element_volume(0).unwrap() - shoelace).abs() < 1e-14);
    }

    #[test]
    fn inverted_element_is_reported() {
        let m = single([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(
            m.element_volume(0),
            Err(FsiError::InvertedElement { element: 0, .. })
        ));
        assert!(m.validate().is_err());
    }
}
