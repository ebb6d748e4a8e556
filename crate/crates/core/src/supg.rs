//! Streamline-upwind stabilization: per-element inverse-estimate constant λ_k,
//! element Reynolds number and the stabilization parameter τ.

use crate::ad::Scalar;
use crate::error::{FsiError, Result};
use crate::fem::geometry::physical;
use crate::fem::reference::ReferenceElement;
use crate::linalg::{power_method_generalized, DenseMatrix};

pub const LAMBDA_TOL: f64 = 1e-8;

pub fn xi(re: f64) -> Result<f64> {
    if !(re >= 0.0) {
        return Err(FsiError::InvalidArgument(format!("negative Reynolds number {re}")));
    }
    Ok(re.min(1.0))
}

/// τ = ξ(Re)/(√λ |u|), Re = |u|/(4√λ ν). Below Re = 1 this is 1/(4λν).
pub fn tau<T: Scalar>(speed: T, lambda: f64, nu: f64) -> T {
    let sl = lambda.sqrt();
    let re = speed.value() / (4.0 * sl * nu);
    if re < 1.0 {
        T::cst(1.0 / (4.0 * lambda * nu))
    } else {
        T::cst(1.0) / (speed * sl)
    }
}

/// Streamline test-function contribution τ ρ ((u − ḋ)·∇) φ.
pub fn supg_test(u: [f64; 2], ddot: [f64; 2], grad_phi: [f64; 2], tau: f64, rho: f64) -> f64 {
    tau * rho * ((u[0] - ddot[0]) * grad_phi[0] + (u[1] - ddot[1]) * grad_phi[1])
}

/// Generalized eigenproblem matrices on the interior bubble space (center node × 2 components):
/// A = ∫ div(∇w+∇wᵀ)·div(∇φ+∇φᵀ), B = ∫ ∇w:∇φ.
pub fn bubble_matrices(x: &[[f64; 2]; 9], re: &ReferenceElement) -> Result<([f64; 4], [f64; 4])> {
    let mut a = [0.0; 4];
    let mut b = [0.0; 4];
    for q in 0..re.rule.len() {
        let geo = physical(x, &re.grads[q], Some(&re.hessians[q]))?;
        let w = re.rule.weights[q] * geo.det;
        let g = geo.grads[8];
        let h = geo.hess.expect("hessians requested")[8];
        let lap = h[0] + h[2];
        let hm = [[h[0], h[1]], [h[1], h[2]]];
        // div(∇w+∇wᵀ) for w = N e_c has components δ_ic ΔN + ∂_i∂_c N
        let dv = |c: usize| -> [f64; 2] {
            std::array::from_fn(|i| if i == c { lap } else { 0.0 } + hm[i][c])
        };
        let gg = g[0] * g[0] + g[1] * g[1];
        for c in 0..2 {
            for d in 0..2 {
                let (vc, vd) = (dv(c), dv(d));
                a[2 * c + d] += w * (vc[0] * vd[0] + vc[1] * vd[1]);
                if c == d {
                    b[2 * c + d] += w * gg;
                }
            }
        }
    }
    Ok((a, b))
}

/// Largest eigenvalue of the bubble eigenproblem for the element with node positions `x`.
pub fn element_lambda(x: &[[f64; 2]; 9], re: &ReferenceElement) -> Result<f64> {
    let (a, b) = bubble_matrices(x, re)?;
    let am = DenseMatrix::from_rows(&[vec![a[0], a[1]], vec![a[2], a[3]]]);
    let bm = DenseMatrix::from_rows(&[vec![b[0], b[1]], vec![b[2], b[3]]]);
    let est = power_method_generalized(&am, &bm, LAMBDA_TOL, 500)?;
    if est.converged && est.lambda > 0.0 {
        return Ok(est.lambda);
    }
    Ok(dense_lambda_2x2(&a, &b))
}

/// Closed-form largest generalized eigenvalue of symmetric 2×2 pencils with SPD `b`.
pub fn dense_lambda_2x2(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    // det(A − λB) = 0 as a quadratic in λ
    let qa = b[0] * b[3] - b[1] * b[2];
    let qb = -(a[0] * b[3] + a[3] * b[0] - a[1] * b[2] - a[2] * b[1]);
    let qc = a[0] * a[3] - a[1] * a[2];
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
    (-qb + disc) / (2.0 * qa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::reference::Q2_NODES;
    use proptest::prelude::*;

    fn element(scale: f64, shift: [f64; 2]) -> [[f64; 2]; 9] {
        Q2_NODES.map(|p| {
            let (s, t) = ((p[0] + 1.0) / 2.0, (p[1] + 1.0) / 2.0);
            [
                scale * (1.5 * s + 0.3 * t) + shift[0],
                scale * (0.1 * s + t) + shift[1],
            ]
        })
    }

    #[test]
    fn xi_branches() {
        assert_eq!(xi(0.5).unwrap(), 0.5);
        assert_eq!(xi(0.0).unwrap(), 0.0);
        assert_eq!(xi(10.0).unwrap(), 1.0);
        assert!(xi(-1.0).is_err());
    }

    #[test]
    fn tau_branches_and_continuity() {
        let (lam, nu) = (40.0, 0.01);
        let diff = 1.0 / (4.0 * lam * nu);
        assert_eq!(tau(0.0, lam, nu), diff);
        assert_eq!(tau(0.01, lam, nu), diff);
        let fast = 10.0;
        assert!((tau(fast, lam, nu) - 1.0 / (lam.sqrt() * fast)).abs() < 1e-15);
        let crit = 4.0 * lam.sqrt() * nu;
        assert!((tau(crit, lam, nu) - diff).abs() < 1e-12 * diff);
        assert!((tau(crit * (1.0 - 1e-12), lam, nu) - diff).abs() < 1e-12 * diff);
    }

    #[test]
    fn supg_test_examples() {
        assert_eq!(supg_test([1.0, 2.0], [1.0, 2.0], [3.0, 4.0], 0.5, 1035.0), 0.0);
        assert_eq!(supg_test([1.0, 0.0], [0.0, 0.0], [3.0, 4.0], 0.5, 1035.0), 0.5 * 1035.0 * 3.0);
        assert_eq!(supg_test([1.0, 0.0], [0.0, 0.0], [3.0, 4.0], 0.0, 1035.0), 0.0);
    }

    #[test]
    fn power_method_matches_dense_eigensolve() {
        let re = ReferenceElement::new(3);
        let x = Q2_NODES;
        let (a, b) = bubble_matrices(&x, &re).unwrap();
        let dense = dense_lambda_2x2(&a, &b);
        let lam = element_lambda(&x, &re).unwrap();
        assert!((lam - dense).abs() <= 1e-6 * dense);
    }

    #[test]
    fn lambda_scales_with_inverse_square_size() {
        let re = ReferenceElement::new(3);
        let big = {
            let (a, b) = bubble_matrices(&element(1.0, [0.0, 0.0]), &re).unwrap();
            dense_lambda_2x2(&a, &b)
        };
        let small = {
            let (a, b) = bubble_matrices(&element(0.5, [0.0, 0.0]), &re).unwrap();
            dense_lambda_2x2(&a, &b)
        };
        assert!((small / big - 4.0).abs() < 1e-6);
        let l3 = element_lambda(&element(3.0, [0.0, 0.0]), &re).unwrap();
        assert!((l3 * 9.0 - big).abs() <= 1e-6 * big);
    }

    proptest! {
        #[test]
        fn lambda_invariant_under_translation(dx in -10.0f64..10.0, dy in -10.0f64..10.0) {
            let re = ReferenceElement::new(3);
            let a = element_lambda(&element(1.0, [0.0, 0.0]), &re).unwrap();
            let b = element_lambda(&element(1.0, [dx, dy]), &re).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a);
        }

        #[test]
        fn tau_nonincreasing_in_speed(s in 0.0f64..100.0, f in 1.0f64..10.0) {
            prop_assert!(tau(s * f, 40.0, 0.01) <= tau(s, 40.0, 0.01));
        }
    }
}
