//! VTK legacy ASCII export (unstructured grid of 9-node quadrilaterals).

use std::fmt::Write as _;
use std::path::Path;

use super::Mesh;
use crate::error::Result;

/// Node-based vector field written alongside the mesh.
pub struct PointVector<'a> {
    pub name: &'a str,
    pub values: &'a [[f64; 2]],
}

pub fn to_vtk_string(mesh: &Mesh, fields: &[PointVector<'_>]) -> String {
    let mut s = String::new();
    let n = mesh.n_nodes();
    let ne = mesh.n_elements();
    s.push_str("# vtk DataFile Version 3.0\nfsi mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {ne} {}", ne * 10);
    for el in &mesh.elements {
        s.push('9');
        for id in el {
            let _ = write!(s, " {id}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("28\n");
    }
    let _ = writeln!(s, "CELL_DATA {ne}\nSCALARS region int 1\nLOOKUP_TABLE default");
    for r in &mesh.regions {
        let _ = writeln!(s, "{}", *r as i32);
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {n}");
        for f in fields {
            let _ = writeln!(s, "VECTORS {} double", f.name);
            for v in f.values {
                let _ = writeln!(s, "{:e} {:e} 0", v[0], v[1]);
            }
        }
    }
    s
}

pub fn write_vtk(mesh: &Mesh, fields: &[PointVector<'_>], path: &Path) -> Result<()> {
    std::fs::write(path, to_vtk_string(mesh, fields))?;
    Ok(())
}
