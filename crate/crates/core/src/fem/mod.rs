//! Finite element spaces: Q2 displacement/velocity, discontinuous P1 pressure.

pub mod dofs;
pub mod geometry;
pub mod reference;

pub use dofs::{build_layout, DofMap, Field, FieldLayout};
pub use reference::{QuadratureRule, ReferenceElement};

use crate::error::{FsiError, Result};
use crate::mesh::{jacobian_of, Mesh};
use reference::{q2_gradients, q2_values};

/// Evaluates a nodal Q2 field and its physical gradient at a reference point of element `e`.
pub fn interpolate(mesh: &Mesh, e: usize, values: &[f64; 9], xi: [f64; 2]) -> Result<(f64, [f64; 2])> {
    let v = q2_values(xi[0], xi[1]);
    let g = q2_gradients(xi[0], xi[1]);
    let j = jacobian_of(&mesh.element_coords(e), &g);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det.abs() <= f64::EPSILON * (j[0][0].abs() + j[1][1].abs()).powi(2) || det <= 0.0 {
        return Err(FsiError::InvertedElement { element: e, det });
    }
    // ∇_x N = J^{-T} ∇_ξ N
    let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    let mut val = 0.0;
    let mut grad = [0.0; 2];
    for k in 0..9 {
        val += values[k] * v[k];
        for r in 0..2 {
            grad[r] += values[k] * (g[k][0] * inv[0][r] + g[k][1] * inv[1][r]);
        }
    }
    Ok((val, grad))
}
