//! Parametric coarse meshes: flexible-wall channel, channel with a circular-arc
//! bulge, and the all-fluid unit square.

use super::{BoundaryFace, BoundaryGroup, BoundaryRole, Mesh, Region};
use crate::error::{FsiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Channel,
    Bulge,
    UnitSquare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryCase {
    pub name: String,
    pub kind: CaseKind,
    /// Channel length along x (m); channels span x ∈ [−length, 0].
    pub length: f64,
    /// Lumen height 2R (m).
    pub lumen_height: f64,
    pub wall_thickness: f64,
    /// Radius of the circular bulge on the upper wall, centered at x = −length/2.
    pub bulge_radius: f64,
    pub nx: usize,
    /// Fluid element rows across the lumen; must be even.
    pub ny_fluid: usize,
    /// Element rows in each wall.
    pub ny_wall: usize,
}

impl GeometryCase {
    pub fn channel() -> Self {
        Self {
            name: "channel".into(),
            kind: CaseKind::Channel,
            length: 10e-3,
            lumen_height: 2e-3,
            wall_thickness: 0.25e-3,
            bulge_radius: 0.0,
            nx: 10,
            ny_fluid: 2,
            ny_wall: 1,
        }
    }

    pub fn bulge(radius: f64) -> Self {
        Self {
            name: "bulge".into(),
            kind: CaseKind::Bulge,
            bulge_radius: radius,
            ..Self::channel()
        }
    }

    pub fn unit_square(n: usize) -> Self {
        Self {
            name: "unit_square".into(),
            kind: CaseKind::UnitSquare,
            length: 1.0,
            lumen_height: 1.0,
            wall_thickness: 0.0,
            bulge_radius: 0.0,
            nx: n,
            ny_fluid: n,
            ny_wall: 0,
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(FsiError::Geometry(m.to_string()));
        if !(self.length > 0.0 && self.lumen_height > 0.0) || self.nx == 0 || self.ny_fluid == 0 {
            return bad("channel dimensions and element counts must be positive");
        }
        if self.kind == CaseKind::UnitSquare {
            return Ok(());
        }
        if !(self.wall_thickness > 0.0) || self.ny_wall == 0 {
            return bad("wall thickness and wall rows must be positive");
        }
        if self.wall_thickness >= self.lumen_height {
            return bad("wall thickness must be smaller than the channel height");
        }
        if self.ny_fluid % 2 != 0 {
            return bad("fluid rows must be even");
        }
        if self.bulge_radius < 0.0 || 2.0 * self.bulge_radius >= self.length {
            return bad("bulge radius must lie in [0, length/2)");
        }
        Ok(())
    }

    /// Height of the bulge above the undeformed upper interface at `x`.
    pub fn bulge_height(&self, x: f64) -> f64 {
        if self.kind != CaseKind::Bulge {
            return 0.0;
        }
        let s = x + 0.5 * self.length;
        let r = self.bulge_radius;
        if s.abs() < r {
            (r * r - s * s).sqrt()
        } else {
            0.0
        }
    }
}

/// Structured lattice of Q2 nodes: `(2nx+1) × (2ny+1)` points.
fn lattice_mesh(
    nx: usize,
    ny: usize,
    point: impl Fn(usize, usize) -> [f64; 2],
    region: impl Fn(usize, usize) -> Region,
) -> Mesh {
    let w = 2 * nx + 1;
    let mut nodes = Vec::with_capacity(w * (2 * ny + 1));
    for j in 0..=2 * ny {
        for i in 0..w {
            nodes.push(point(i, j));
        }
    }
    let id = |i: usize, j: usize| j * w + i;
    let mut elements = Vec::with_capacity(nx * ny);
    let mut regions = Vec::with_capacity(nx * ny);
    let mut grid = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let (i, j) = (2 * ix, 2 * iy);
            elements.push([
                id(i, j),
                id(i + 2, j),
                id(i + 2, j + 2),
                id(i, j + 2),
                id(i + 1, j),
                id(i + 2, j + 1),
                id(i + 1, j + 2),
                id(i, j + 1),
                id(i + 1, j + 1),
            ]);
            regions.push(region(ix, iy));
            grid.push([ix, iy]);
        }
    }
    Mesh {
        nodes,
        elements,
        regions,
        faces: Vec::new(),
        groups: Vec::new(),
        grid,
        level: 0,
    }
}

pub fn build_case(case: &GeometryCase) -> Result<Mesh> {
    case.check()?;
    let mesh = match case.kind {
        CaseKind::UnitSquare => unit_square(case),
        CaseKind::Channel | CaseKind::Bulge => channel(case),
    };
    mesh.validate()?;
    Ok(mesh)
}

fn unit_square(case: &GeometryCase) -> Mesh {
    let (nx, ny) = (case.nx, case.ny_fluid);
    let (lx, ly) = (case.length, case.lumen_height);
    let mut m = lattice_mesh(
        nx,
        ny,
        |i, j| [lx * i as f64 / (2 * nx) as f64, ly * j as f64 / (2 * ny) as f64],
        |_, _| Region::Fluid,
    );
    for (name, role) in [
        ("bottom", BoundaryRole::Clamped),
        ("right", BoundaryRole::Clamped),
        ("top", BoundaryRole::Clamped),
        ("left", BoundaryRole::Clamped),
    ] {
        m.groups.push(BoundaryGroup {
            name: name.into(),
            role,
        });
    }
    for e in 0..m.n_elements() {
        let [ix, iy] = m.grid[e];
        let mut tag = |edge: usize, group: usize| {
            m.faces.push(BoundaryFace {
                element: e,
                edge,
                group,
            })
        };
        if iy == 0 {
            tag(0, 0);
        }
        if ix + 1 == nx {
            tag(1, 1);
        }
        if iy + 1 == ny {
            tag(2, 2);
        }
        if ix == 0 {
            tag(3, 3);
        }
    }
    m
}

fn channel(case: &GeometryCase) -> Mesh {
    let (nx, nf, nw) = (case.nx, case.ny_fluid, case.ny_wall);
    let ny = nf + 2 * nw;
    let r = 0.5 * case.lumen_height;
    let t = case.wall_thickness;
    // y of lattice row j (half element steps)
    let row_y = |j: usize| -> f64 {
        let s = j as f64 / 2.0;
        let (w, f) = (nw as f64, nf as f64);
        if s <= w {
            -r - t + t * s / w
        } else if s <= w + f {
            -r + 2.0 * r * (s - w) / f
        } else {
            r + t * (s - w - f) / w
        }
    };
    let point = |i: usize, j: usize| {
        let x = -case.length + case.length * i as f64 / (2 * nx) as f64;
        let y = row_y(j);
        let b = case.bulge_height(x);
        let y = if y <= 0.0 {
            y
        } else if y <= r {
            y * (r + b) / r
        } else {
            y + b
        };
        [x, y]
    };
    let region = |_: usize, iy: usize| {
        if iy < nw || iy >= nw + nf {
            Region::Solid
        } else {
            Region::Fluid
        }
    };
    let mut m = lattice_mesh(nx, ny, point, region);
    for (name, role) in [
        ("inlet", BoundaryRole::Inlet),
        ("outlet", BoundaryRole::Outlet),
        ("wall_ends", BoundaryRole::Clamped),
        ("outer_wall", BoundaryRole::FreeWall),
    ] {
        m.groups.push(BoundaryGroup {
            name: name.into(),
            role,
        });
    }
    for e in 0..m.n_elements() {
        let [ix, iy] = m.grid[e];
        let fluid = m.regions[e] == Region::Fluid;
        let mut tag = |edge: usize, group: usize| {
            m.faces.push(BoundaryFace {
                element: e,
                edge,
                group,
            })
        };
        if ix + 1 == nx {
            tag(1, if fluid { 0 } else { 2 });
        }
        if ix == 0 {
            tag(3, if fluid { 1 } else { 2 });
        }
        if iy == 0 {
            tag(0, 3);
        }
        if iy + 1 == ny {
            tag(2, 3);
        }
    }
    m
}

/// Fluid elements forming the bulge cavity: upper-half lumen elements whose
/// center lies over the arc.
pub fn cavity_elements(mesh: &Mesh, case: &GeometryCase) -> Vec<usize> {
    let xc = -0.5 * case.length;
    (0..mesh.n_elements())
        .filter(|&e| {
            let c = mesh.map_point(e, [0.0, 0.0]);
            mesh.regions[e] == Region::Fluid
                && c[1] > 0.0
                && (c[0] - xc).abs() < case.bulge_radius
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::reference::q2_gradients;
    use crate::mesh::jacobian_of;

    #[test]
    fn channel_mesh_audit() {
        let m = build_case(&GeometryCase::channel()).unwrap();
        for e in 0..m.n_elements() {
            let c = m.element_coords(e);
            for xi in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                for eta in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                    let j = jacobian_of(&c, &q2_gradients(xi, eta));
                    assert!(j[0][0] * j[1][1] - j[0][1] * j[1][0] > 0.0);
                }
            }
        }
        assert_eq!(m.groups_with_role(BoundaryRole::Inlet).len(), 1);
        assert_eq!(m.groups_with_role(BoundaryRole::Outlet).len(), 1);
        // lumen plus walls
        let fluid = m.region_area(Region::Fluid).unwrap();
        let solid = m.region_area(Region::Solid).unwrap();
        assert!((fluid - 10e-3 * 2e-3).abs() < 1e-18);
        assert!((solid - 2.0 * 10e-3 * 0.25e-3).abs() < 1e-18);
        // interface: two lines of 2nx+1 nodes
        assert_eq!(m.interface_nodes().len(), 2 * 21);
    }

    #[test]
    fn unit_square_has_four_groups() {
        let m = build_case(&GeometryCase::unit_square(3)).unwrap();
        assert_eq!(m.n_elements(), 9);
        assert_eq!(m.groups.len(), 4);
        for g in 0..4 {
            assert_eq!(m.faces_in_group(g).count(), 3);
        }
    }

    #[test]
    fn zero_bulge_is_the_straight_channel() {
        let a = build_case(&GeometryCase::channel()).unwrap();
        let b = build_case(&GeometryCase::bulge(0.0)).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.elements, b.elements);
    }

    #[test]
    fn bulge_nodes_lie_on_the_arc() {
        let case = GeometryCase::bulge(2e-3);
        let m = build_case(&case).unwrap();
        let r = 1e-3;
        let mut on_arc = 0;
        for p in &m.nodes {
            let b = case.bulge_height(p[0]);
            if b > 0.0 && (p[1] - (r + b)).abs() < 1e-15 {
                let d = ((p[0] + 5e-3).powi(2) + (p[1] - r).powi(2)).sqrt();
                assert!((d - 2e-3).abs() < 1e-15);
                on_arc += 1;
            }
        }
        assert!(on_arc > 0);
        assert!(!cavity_elements(&m, &case).is_empty());
    }

    #[test]
    fn degenerate_dimensions_are_rejected() {
        let mut c = GeometryCase::channel();
        c.wall_thickness = 0.0;
        assert!(build_case(&c).is_err());
        let mut c = GeometryCase::channel();
        c.wall_thickness = 3e-3;
        assert!(build_case(&c).is_err());
    }
}
