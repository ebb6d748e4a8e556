//! Element residual kernels. Local unknowns follow [`crate::fem::dofs::local_d`]
//! and friends; local residual rows are momentum (2k+c), kinematic or mesh-motion
//! (18+2k+c) and continuity (36+m).

use crate::ad::Scalar;
use crate::constitutive::{deformation, inverse, MaterialParams};
use crate::error::Result;
use crate::fem::geometry::physical;
use crate::fem::reference::ReferenceElement;
use crate::supg::tau;

#[derive(Debug, Clone, Copy)]
pub struct ElementParams {
    pub solid: bool,
    pub dt: f64,
    pub theta: f64,
    pub material: MaterialParams,
    /// SUPG inverse-estimate constant (fluid only).
    pub lambda: f64,
    /// Mesh-motion stiffness (fluid only).
    pub k_mesh: f64,
    pub supg: bool,
    /// Density factor in the streamline test function τ·factor·((u − ḋ)·∇)φ.
    pub supg_density: f64,
    /// Evaluate fluid integrals on the reference instead of the current configuration.
    pub frozen_geometry: bool,
}

pub struct ElementData<'a, T> {
    pub xhat: &'a [[f64; 2]; 9],
    pub d: &'a [[T; 2]; 9],
    pub u: &'a [[T; 2]; 9],
    pub p: &'a [T; 3],
    pub d_old: &'a [[f64; 2]; 9],
    pub u_old: &'a [[f64; 2]; 9],
    /// ∫ N_k over the reference element; times ρ^s these are the lumped solid mass.
    pub lumped: &'a [f64; 9],
}

fn at<T: Scalar>(n: &[f64; 9], v: &[[T; 2]; 9]) -> [T; 2] {
    let mut r = [T::zero(); 2];
    for (nk, vk) in n.iter().zip(v) {
        r[0] += vk[0] * *nk;
        r[1] += vk[1] * *nk;
    }
    r
}

fn grad<T: Scalar, G: Copy + Into<T>>(g: &[[G; 2]; 9], v: &[[T; 2]; 9]) -> [[T; 2]; 2] {
    let mut r = [[T::zero(); 2]; 2];
    for (gk, vk) in g.iter().zip(v) {
        for c in 0..2 {
            for j in 0..2 {
                r[c][j] += vk[c] * gk[j].into();
            }
        }
    }
    r
}

pub fn element_residual<T: Scalar + From<f64>>(
    re: &ReferenceElement,
    data: &ElementData<'_, T>,
    par: &ElementParams,
) -> Result<[T; 39]> {
    if par.solid {
        solid_residual(re, data, par)
    } else {
        fluid_residual(re, data, par)
    }
}

/// Elastic part of the first Piola stress J (2C1 B − 2C2 B⁻¹) F^{-T} and the factor J F^{-T}.
fn piola_parts<T: Scalar>(grad_d: &[[T; 2]; 2], mat: &MaterialParams) -> Result<([[T; 2]; 2], [[T; 2]; 2])> {
    let s = deformation(grad_d)?;
    let bi = inverse(&s.b);
    let fi = inverse(&s.f);
    let (c1, c2) = (mat.c1(), mat.c2());
    let sig: [[T; 2]; 2] =
        std::array::from_fn(|r| std::array::from_fn(|c| s.b[r][c] * (2.0 * c1) - bi[r][c] * (2.0 * c2)));
    // J F^{-T}: (J F^{-T})_{cj} = J fi[j][c]
    let jft: [[T; 2]; 2] = std::array::from_fn(|c| std::array::from_fn(|j| s.j * fi[j][c]));
    let pel = std::array::from_fn(|c| {
        std::array::from_fn(|j| sig[c][0] * jft[0][j] + sig[c][1] * jft[1][j])
    });
    Ok((pel, jft))
}

fn solid_residual<T: Scalar + From<f64>>(
    re: &ReferenceElement,
    e: &ElementData<'_, T>,
    par: &ElementParams,
) -> Result<[T; 39]> {
    let mut r = [T::zero(); 39];
    let mat = &par.material;
    for q in 0..re.rule.len() {
        let g0 = physical::<f64>(e.xhat, &re.grads[q], None)?;
        let w = re.rule.weights[q] * g0.det;
        let n = &re.values[q];
        let u = at(n, e.u);
        let uo = at(n, &e.u_old.map(|v| v.map(T::cst)));
        let gd = grad(&g0.grads, e.d);
        let (pel, jft) = piola_parts(&gd, mat)?;
        let jac = jft[0][0] * jft[1][1] - jft[0][1] * jft[1][0];
        let ps = e.p[0] * re.pressure[q][0] + e.p[1] * re.pressure[q][1] + e.p[2] * re.pressure[q][2];
        let pk: [[T; 2]; 2] =
            std::array::from_fn(|c| std::array::from_fn(|j| (pel[c][j] - ps * jft[c][j]) * par.theta));
        let inertia = [(u[0] - uo[0]) * (mat.rho_s / par.dt), (u[1] - uo[1]) * (mat.rho_s / par.dt)];
        for k in 0..9 {
            let gk = g0.grads[k];
            for c in 0..2 {
                let v = inertia[c] * n[k] + pk[c][0] * gk[0] + pk[c][1] * gk[1];
                r[2 * k + c] += v * w;
            }
        }
        // J = det F; the J F^{-T} determinant equals J in 2D
        for m in 0..3 {
            r[36 + m] += (jac - 1.0) * (w * re.pressure[q][m]);
        }
    }
    for k in 0..9 {
        for c in 0..2 {
            let rate = (e.d[k][c] - e.d_old[k][c]) / par.dt;
            r[18 + 2 * k + c] = (e.u[k][c] - rate) * (e.lumped[k] * mat.rho_s);
        }
    }
    Ok(r)
}

fn fluid_residual<T: Scalar + From<f64>>(
    re: &ReferenceElement,
    e: &ElementData<'_, T>,
    par: &ElementParams,
) -> Result<[T; 39]> {
    let mut r = [T::zero(); 39];
    let mat = &par.material;
    let (rho, mu, dt, th) = (mat.rho_f, mat.mu, par.dt, par.theta);
    let x: [[T; 2]; 9] = if par.frozen_geometry {
        e.xhat.map(|p| p.map(T::cst))
    } else {
        std::array::from_fn(|k| [e.d[k][0] + e.xhat[k][0], e.d[k][1] + e.xhat[k][1]])
    };
    let wdot: [[T; 2]; 9] =
        std::array::from_fn(|k| std::array::from_fn(|c| (e.d[k][c] - e.d_old[k][c]) / dt));
    for q in 0..re.rule.len() {
        let n = &re.values[q];
        let g0 = physical::<f64>(e.xhat, &re.grads[q], None)?;
        let geo = physical(&x, &re.grads[q], par.supg.then_some(&re.hessians[q]))?;
        let w = geo.det * re.rule.weights[q];
        let u = at(n, e.u);
        let uo = at(n, &e.u_old.map(|v| v.map(T::cst)));
        let wm = at(n, &wdot);
        let gu = grad(&geo.grads, e.u);
        let psi = re.pressure[q];
        let p = e.p[0] * psi[0] + e.p[1] * psi[1] + e.p[2] * psi[2];
        let rel = [u[0] - wm[0], u[1] - wm[1]];
        let conv: [T; 2] = std::array::from_fn(|c| rel[0] * gu[c][0] + rel[1] * gu[c][1]);
        let sym: [[T; 2]; 2] = std::array::from_fn(|c| std::array::from_fn(|j| (gu[c][j] + gu[j][c]) * mu));
        let acc: [T; 2] = std::array::from_fn(|c| (u[c] - uo[c]) * (rho / dt));
        let div = gu[0][0] + gu[1][1];

        let mut strong = [T::zero(); 2];
        let mut tau_q = T::zero();
        if par.supg {
            let h = geo.hess.expect("hessians requested");
            // ∇p with p = p0 + p1 ξ + p2 η
            let gp: [T; 2] = std::array::from_fn(|i| e.p[1] * geo.inv[0][i] + e.p[2] * geo.inv[1][i]);
            let mut lap = [T::zero(); 2];
            let mut graddiv = [T::zero(); 2];
            for k in 0..9 {
                let hk = [[h[k][0], h[k][1]], [h[k][1], h[k][2]]];
                for c in 0..2 {
                    lap[c] += e.u[k][c] * (h[k][0] + h[k][2]);
                    graddiv[c] += e.u[k][0] * hk[c][0] + e.u[k][1] * hk[c][1];
                }
            }
            strong = std::array::from_fn(|c| acc[c] + conv[c] * rho + gp[c] - (lap[c] + graddiv[c]) * mu);
            let speed = (u[0] * u[0] + u[1] * u[1]).sqrt();
            tau_q = tau(speed, par.lambda, mat.nu_kin());
        }

        for k in 0..9 {
            let gk = geo.grads[k];
            let stream = if par.supg {
                (rel[0] * gk[0] + rel[1] * gk[1]) * tau_q * par.supg_density
            } else {
                T::zero()
            };
            for c in 0..2 {
                let mut v = acc[c] * n[k] + (conv[c] * (rho * n[k]) + sym[c][0] * gk[0] + sym[c][1] * gk[1]) * th
                    - p * gk[c];
                if par.supg {
                    v += stream * strong[c];
                }
                r[2 * k + c] += v * w;
            }
        }
        for m in 0..3 {
            r[36 + m] += div * (w * psi[m]);
        }
        // mesh motion on the reference configuration
        let gd = grad(&g0.grads, e.d);
        let w0 = g0.det * re.rule.weights[q] * par.k_mesh;
        for k in 0..9 {
            let gk = g0.grads[k];
            for c in 0..2 {
                let v = (gd[c][0] + gd[0][c]) * gk[0] + (gd[c][1] + gd[1][c]) * gk[1];
                r[18 + 2 * k + c] += v * w0;
            }
        }
    }
    Ok(r)
}

/// Explicit old-time momentum part, (1 − θ) times the full first Piola stress
/// (solid) or the convective plus viscous terms (fluid) on the previous state.
/// The solid pressure shares the θ weight: the rest prestress C1·I and p^s = C1
/// then cancel at both time levels.
pub fn element_explicit(
    re: &ReferenceElement,
    xhat: &[[f64; 2]; 9],
    d_old: &[[f64; 2]; 9],
    u_old: &[[f64; 2]; 9],
    wdot_old: &[[f64; 2]; 9],
    p_old: &[f64; 3],
    par: &ElementParams,
) -> Result<[f64; 18]> {
    let mut r = [0.0; 18];
    let f = 1.0 - par.theta;
    if f == 0.0 {
        return Ok(r);
    }
    let mat = &par.material;
    let x: [[f64; 2]; 9] = if par.frozen_geometry || par.solid {
        *xhat
    } else {
        std::array::from_fn(|k| [xhat[k][0] + d_old[k][0], xhat[k][1] + d_old[k][1]])
    };
    for q in 0..re.rule.len() {
        let geo = physical::<f64>(&x, &re.grads[q], None)?;
        let w = geo.det * re.rule.weights[q] * f;
        let n = &re.values[q];
        if par.solid {
            let gd = grad(&geo.grads, d_old);
            let (pel, jft) = piola_parts(&gd, mat)?;
            let psi = re.pressure[q];
            let ps = p_old[0] * psi[0] + p_old[1] * psi[1] + p_old[2] * psi[2];
            let pk: [[f64; 2]; 2] = std::array::from_fn(|c| std::array::from_fn(|j| pel[c][j] - ps * jft[c][j]));
            for k in 0..9 {
                for c in 0..2 {
                    r[2 * k + c] += w * (pk[c][0] * geo.grads[k][0] + pk[c][1] * geo.grads[k][1]);
                }
            }
        } else {
            let u = at(n, u_old);
            let wm = at(n, wdot_old);
            let gu = grad(&geo.grads, u_old);
            for k in 0..9 {
                let gk = geo.grads[k];
                for c in 0..2 {
                    let conv = (u[0] - wm[0]) * gu[c][0] + (u[1] - wm[1]) * gu[c][1];
                    let visc = mat.mu * ((gu[c][0] + gu[0][c]) * gk[0] + (gu[c][1] + gu[1][c]) * gk[1]);
                    r[2 * k + c] += w * (mat.rho_f * conv * n[k] + visc);
                }
            }
        }
    }
    Ok(r)
}
