//! Physical shape-function derivatives on a (possibly deformed) Q2 element.

use crate::ad::Scalar;
use crate::error::{FsiError, Result};

#[derive(Debug, Clone, Copy)]
pub struct PointGeometry<T> {
    pub det: T,
    /// Inverse geometry Jacobian ∂ξ/∂x.
    pub inv: [[T; 2]; 2],
    /// ∇_x N_k.
    pub grads: [[T; 2]; 9],
    /// Physical second derivatives (xx, xy, yy) of N_k, when requested.
    pub hess: Option<[[T; 3]; 9]>,
}

/// Maps reference derivatives to physical ones for node positions `x`.
///
/// Second derivatives use H^x = G^{-T} (H^ξ − Σ_i ∂N/∂x_i H^ξ(x_i)) G^{-1}.
pub fn physical<T: Scalar>(
    x: &[[T; 2]; 9],
    grads: &[[f64; 2]; 9],
    hess: Option<&[[f64; 3]; 9]>,
) -> Result<PointGeometry<T>> {
    let mut g = [[T::zero(); 2]; 2];
    for (xk, gk) in x.iter().zip(grads) {
        for r in 0..2 {
            for c in 0..2 {
                g[r][c] += xk[r] * gk[c];
            }
        }
    }
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if det.value() <= 0.0 {
        return Err(FsiError::InvertedElement {
            element: usize::MAX,
            det: det.value(),
        });
    }
    let inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    let gx: [[T; 2]; 9] = std::array::from_fn(|k| {
        std::array::from_fn(|i| inv[0][i] * grads[k][0] + inv[1][i] * grads[k][1])
    });
    let hx = hess.map(|h| {
        // reference Hessian of the geometry map, per physical component
        let mut hgeo = [[T::zero(); 3]; 2];
        for (xk, hk) in x.iter().zip(h) {
            for i in 0..2 {
                for s in 0..3 {
                    hgeo[i][s] += xk[i] * hk[s];
                }
            }
        }
        std::array::from_fn(|k| {
            let mut m = [T::cst(h[k][0]), T::cst(h[k][1]), T::cst(h[k][2])];
            for i in 0..2 {
                for s in 0..3 {
                    m[s] -= gx[k][i] * hgeo[i][s];
                }
            }
            let mm = [[m[0], m[1]], [m[1], m[2]]];
            let entry = |p: usize, q: usize| {
                let mut v = T::zero();
                for a in 0..2 {
                    for b in 0..2 {
                        v += inv[a][p] * mm[a][b] * inv[b][q];
                    }
                }
                v
            };
            [entry(0, 0), entry(0, 1), entry(1, 1)]
        })
    });
    Ok(PointGeometry {
        det,
        inv,
        grads: gx,
        hess: hx,
    })
}
