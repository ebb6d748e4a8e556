//! Kinematics, Mooney-Rivlin and Newtonian stresses, mesh-motion stiffness.

use crate::ad::Scalar;
use crate::error::{FsiError, Result};
use crate::mesh::Mesh;

pub type Mat2<T> = [[T; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub rho_s: f64,
    pub rho_f: f64,
    pub mu: f64,
    pub young: f64,
    pub poisson: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            rho_s: 1120.0,
            rho_f: 1035.0,
            mu: 3.5e-3,
            young: 1.0e6,
            poisson: 0.5,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.rho_s, self.rho_f, self.mu, self.young];
        if pos.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(FsiError::Config("material parameters must be positive".into()));
        }
        if !(self.poisson > 0.0 && self.poisson <= 0.5) {
            return Err(FsiError::Config("Poisson ratio must lie in (0, 0.5]".into()));
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    pub fn c1(&self) -> f64 {
        self.shear_modulus() / 3.0
    }

    pub fn c2(&self) -> f64 {
        0.5 * self.c1()
    }

    pub fn nu_kin(&self) -> f64 {
        self.mu / self.rho_f
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DeformationState<T> {
    pub f: Mat2<T>,
    pub j: T,
    pub b: Mat2<T>,
}

pub fn det<T: Scalar>(a: &Mat2<T>) -> T {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Inverse of a 2×2 matrix; the caller guarantees a nonzero determinant.
pub fn inverse<T: Scalar>(a: &Mat2<T>) -> Mat2<T> {
    let d = det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

pub fn deformation<T: Scalar>(grad_d: &Mat2<T>) -> Result<DeformationState<T>> {
    let f = [
        [grad_d[0][0] + 1.0, grad_d[0][1]],
        [grad_d[1][0], grad_d[1][1] + 1.0],
    ];
    let j = det(&f);
    if j.value() <= 0.0 {
        return Err(FsiError::InvertedElement {
            element: usize::MAX,
            det: j.value(),
        });
    }
    let b = std::array::from_fn(|r| {
        std::array::from_fn(|c| f[r][0] * f[c][0] + f[r][1] * f[c][1])
    });
    Ok(DeformationState { f, j, b })
}

/// σ = −p I + 2 C1 B − 2 C2 B⁻¹.
pub fn mooney_rivlin_stress<T: Scalar>(b: &Mat2<T>, p: T, params: &MaterialParams) -> Result<Mat2<T>> {
    let db = det(b);
    if db.value().abs() <= f64::MIN_POSITIVE {
        return Err(FsiError::InvalidArgument("singular left Cauchy-Green tensor".into()));
    }
    let bi = inverse(b);
    let (c1, c2) = (params.c1(), params.c2());
    Ok(std::array::from_fn(|r| {
        std::array::from_fn(|c| {
            let mut s = b[r][c] * (2.0 * c1) - bi[r][c] * (2.0 * c2);
            if r == c {
                s -= p;
            }
            s
        })
    }))
}

/// σ = −p I + μ (∇u + ∇uᵀ).
pub fn newtonian_stress<T: Scalar>(grad_u: &Mat2<T>, p: T, mu: f64) -> Mat2<T> {
    std::array::from_fn(|r| {
        std::array::from_fn(|c| {
            let mut s = (grad_u[r][c] + grad_u[c][r]) * mu;
            if r == c {
                s -= p;
            }
            s
        })
    })
}

pub fn mesh_stiffness_inverse_volume(mesh: &Mesh, e: usize) -> Result<f64> {
    Ok(1.0 / mesh.element_volume(e)?)
}

/// k = a / (1 + c·|x̂ − m|).
pub fn mesh_stiffness_distance(x: [f64; 2], m: [f64; 2], a: f64, c: f64) -> f64 {
    let k1 = ((x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2)).sqrt();
    a / (1.0 + c * k1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_case, GeometryCase, MeshHierarchy};
    use proptest::prelude::*;

    fn p() -> MaterialParams {
        MaterialParams::default()
    }

    #[test]
    fn deformation_examples() {
        let s = deformation(&[[0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!((s.j, s.b), (1.0, [[1.0, 0.0], [0.0, 1.0]]));
        let s = deformation(&[[0.3, 0.0], [0.0, 0.0]]).unwrap();
        assert!((s.j - 1.3).abs() < 1e-15);
        let t: f64 = 0.7;
        let s = deformation(&[[t.cos() - 1.0, -t.sin()], [t.sin(), t.cos() - 1.0]]).unwrap();
        assert!((s.j - 1.0).abs() < 1e-15);
        assert!((s.b[0][0] - 1.0).abs() < 1e-15 && s.b[0][1].abs() < 1e-15);
        assert!(deformation(&[[-1.0, 0.0], [0.0, 0.0]]).is_err());
    }

    #[test]
    fn mooney_rivlin_examples() {
        let c1 = p().c1();
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let s = mooney_rivlin_stress(&id, 0.0, &p()).unwrap();
        assert!((s[0][0] - c1).abs() < 1e-9 && (s[1][1] - c1).abs() < 1e-9 && s[0][1] == 0.0);
        let s = mooney_rivlin_stress(&id, c1, &p()).unwrap();
        assert!(s[0][0].abs() < 1e-9 && s[1][1].abs() < 1e-9);
        let pr = 7.0;
        let s = mooney_rivlin_stress(&[[4.0, 0.0], [0.0, 0.25]], pr, &p()).unwrap();
        let expect = -pr + 8.0 * c1 - p().c2() / 2.0;
        assert!((s[0][0] - expect).abs() < 1e-9 * expect.abs());
    }

    #[test]
    fn material_defaults() {
        let m = p();
        assert!((m.shear_modulus() - 1e6 / 3.0).abs() < 1e-6);
        assert!((m.c2() - m.c1() / 2.0).abs() < 1e-9);
        m.validate().unwrap();
    }

    #[test]
    fn newtonian_examples() {
        let mu = 3.5e-3;
        let s = newtonian_stress(&[[0.0, 0.0], [0.0, 0.0]], 2.0, mu);
        assert_eq!(s, [[-2.0, 0.0], [0.0, -2.0]]);
        let g = 5.0;
        let s = newtonian_stress(&[[0.0, g], [0.0, 0.0]], 2.0, mu);
        assert!((s[0][1] - mu * g).abs() < 1e-18 && (s[0][0] + s[1][1] + 4.0).abs() < 1e-15);
        // u = (1 − y², 0): ∂u_x/∂y = −2y
        let y = 0.3;
        let s = newtonian_stress(&[[0.0, -2.0 * y], [0.0, 0.0]], 0.0, mu);
        assert!((s[0][1] + 2.0 * mu * y).abs() < 1e-18);
    }

    #[test]
    fn stiffness_examples() {
        let m = build_case(&GeometryCase::unit_square(1)).unwrap();
        assert!((mesh_stiffness_inverse_volume(&m, 0).unwrap() - 1.0).abs() < 1e-14);
        let m2 = build_case(&GeometryCase::unit_square(2)).unwrap();
        assert!((mesh_stiffness_inverse_volume(&m2, 0).unwrap() - 4.0).abs() < 1e-12);
        let h = MeshHierarchy::build(build_case(&GeometryCase::channel()).unwrap(), 2).unwrap();
        for (child, &parent) in h.parent_map[0].iter().enumerate() {
            let kc = mesh_stiffness_inverse_volume(&h.levels[1], child).unwrap();
            let kp = mesh_stiffness_inverse_volume(&h.levels[0], parent).unwrap();
            assert!((kc / kp - 4.0).abs() < 1e-9);
        }
        assert_eq!(mesh_stiffness_distance([1.0, 2.0], [1.0, 2.0], 3.0, 10.0), 3.0);
        let k = mesh_stiffness_distance([0.01, 0.0], [0.0, 0.0], 1.0, 1e4);
        assert!((k - 1.0 / 101.0).abs() < 1e-15);
        let ratio = mesh_stiffness_distance([0.3, 0.1], [0.0, 0.0], 100.0, 1e4)
            / mesh_stiffness_distance([0.3, 0.1], [0.0, 0.0], 1.0, 1e4);
        assert!((ratio - 100.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn mooney_rivlin_symmetric_and_objective(
            a in 0.5f64..2.0, b in -0.4f64..0.4, c in 0.5f64..2.0, th in 0.0f64..6.3, pr in -10.0f64..10.0
        ) {
            // symmetric positive definite B
            let bm = [[a, b], [b, c]];
            let s = mooney_rivlin_stress(&bm, pr, &p()).unwrap();
            prop_assert_eq!(s[0][1], s[1][0]);
            let q = [[th.cos(), -th.sin()], [th.sin(), th.cos()]];
            let rot = |m: &Mat2<f64>| -> Mat2<f64> {
                std::array::from_fn(|i| std::array::from_fn(|j| {
                    let mut v = 0.0;
                    for k in 0..2 { for l in 0..2 { v += q[i][k] * m[k][l] * q[j][l]; } }
                    v
                }))
            };
            let s2 = mooney_rivlin_stress(&rot(&bm), pr, &p()).unwrap();
            let s1 = rot(&s);
            for i in 0..2 { for j in 0..2 {
                prop_assert!((s1[i][j] - s2[i][j]).abs() <= 1e-12 * (1.0 + s1[i][j].abs()));
            }}
        }

        #[test]
        fn newtonian_deviator_is_traceless(g00 in -1.0f64..1.0, g01 in -1.0f64..1.0, g10 in -1.0f64..1.0, pr in -5.0f64..5.0) {
            let mu = 3.5e-3;
            let s = newtonian_stress(&[[g00, g01], [g10, -g00]], pr, mu);
            prop_assert!((s[0][0] + s[1][1] + 2.0 * pr).abs() < 1e-14);
        }

        #[test]
        fn stiffness_positive(x in -1.0f64..1.0, y in -1.0f64..1.0, a in 1.0f64..100.0, c in 1.0f64..1e4) {
            let k = mesh_stiffness_distance([x, y], [0.0, 0.0], a, c);
            prop_assert!(k > 0.0 && k <= a);
        }
    }
}
