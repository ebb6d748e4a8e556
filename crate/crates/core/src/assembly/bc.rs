//! Boundary conditions: Dirichlet constraints (identity rows) and normal-stress loads.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{FsiError, Result};
use crate::fem::reference::EDGE_NODES;
use crate::fem::DofMap;
use crate::linalg::SparseMatrix;
use crate::mesh::Mesh;

/// Scalar time signal `offset + amplitude · sin(2π frequency t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSignal {
    pub offset: f64,
    pub amplitude: f64,
    pub frequency: f64,
}

impl TimeSignal {
    pub fn constant(v: f64) -> Self {
        Self {
            offset: v,
            amplitude: 0.0,
            frequency: 0.0,
        }
    }

    pub fn sine(amplitude: f64) -> Self {
        Self {
            offset: 0.0,
            amplitude,
            frequency: 1.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (2.0 * PI * self.frequency * t).sin()
    }
}

/// Prescribed vector value on a boundary group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Zero,
    Constant([f64; 2]),
    /// Axial parabola `peak (1 − ((y − center)/half_width)²)(1 + pulse sin 2πt)`, zero transverse part.
    Parabolic {
        peak: f64,
        center: f64,
        half_width: f64,
        pulse: f64,
    },
}

impl Profile {
    pub fn eval(&self, p: [f64; 2], t: f64) -> [f64; 2] {
        match *self {
            Profile::Zero => [0.0, 0.0],
            Profile::Constant(v) => v,
            Profile::Parabolic {
                peak,
                center,
                half_width,
                pulse,
            } => {
                let s = (p[1] - center) / half_width;
                let v = peak * (1.0 - s * s) * (1.0 + pulse * (2.0 * PI * t).sin());
                [v, 0.0]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BcKind {
    Velocity(Profile),
    Displacement(Profile),
    /// Normal traction `g(t)`; also fixes the displacement and the tangential velocity.
    NormalStress(TimeSignal),
    ZeroStress,
    Symmetry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    pub group: String,
    pub kind: BcKind,
}

#[derive(Debug, Clone, Copy)]
enum Value {
    Zero,
    Profile(Profile, [f64; 2], usize),
}

impl Value {
    fn eval(&self, t: f64) -> f64 {
        match *self {
            Value::Zero => 0.0,
            Value::Profile(p, x, c) => p.eval(x, t)[c],
        }
    }
}

/// Normal-stress load on one boundary face.
#[derive(Debug, Clone, Copy)]
pub struct FaceLoad {
    pub element: usize,
    pub edge: usize,
    pub signal: TimeSignal,
}

/// Resolved constraints and loads of one mesh level.
#[derive(Debug, Clone, Default)]
pub struct Constraints {
    dofs: Vec<usize>,
    values: Vec<Value>,
    pub loads: Vec<FaceLoad>,
}

const SAMPLE_TIMES: [f64; 5] = [0.0, 0.125, 0.25, 0.5, 0.75];

/// Axis of an axis-aligned face: 0 if x is constant along it, 1 if y is.
fn face_axis(mesh: &Mesh, element: usize, edge: usize) -> Result<usize> {
    let el = mesh.elements[element];
    let pts = EDGE_NODES[edge].map(|l| mesh.nodes[el[l]]);
    let span = [
        (pts[0][0] - pts[1][0]).abs().max((pts[0][0] - pts[2][0]).abs()),
        (pts[0][1] - pts[1][1]).abs().max((pts[0][1] - pts[2][1]).abs()),
    ];
    let len = span[0].max(span[1]);
    if span[0] <= 1e-12 * len {
        Ok(0)
    } else if span[1] <= 1e-12 * len {
        Ok(1)
    } else {
        Err(FsiError::Config(
            "normal constraints need axis-aligned boundary faces".into(),
        ))
    }
}

impl Constraints {
    pub fn build(mesh: &Mesh, map: &DofMap, bcs: &[BoundaryCondition]) -> Result<Self> {
        let mut table: BTreeMap<usize, Value> = BTreeMap::new();
        let mut loads = Vec::new();
        let mut put = |dof: usize, v: Value| -> Result<()> {
            if let Some(old) = table.get(&dof) {
                for t in SAMPLE_TIMES {
                    let (a, b) = (old.eval(t), v.eval(t));
                    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1e-300) {
                        return Err(FsiError::Config(format!(
                            "conflicting boundary values on dof {dof}: {a} vs {b} at t = {t}"
                        )));
                    }
                }
            } else {
                table.insert(dof, v);
            }
            Ok(())
        };
        for bc in bcs {
            let g = mesh
                .group_id(&bc.group)
                .ok_or_else(|| FsiError::Config(format!("unknown boundary group '{}'", bc.group)))?;
            let nodes = mesh.group_nodes(g);
            let value = |p: Profile, n: usize, c: usize| match p {
                Profile::Zero => Value::Zero,
                _ => Value::Profile(p, mesh.nodes[n], c),
            };
            match &bc.kind {
                BcKind::Velocity(p) => {
                    for &n in &nodes {
                        for c in 0..2 {
                            put(map.vel(n, c), value(*p, n, c))?;
                        }
                    }
                }
                BcKind::Displacement(p) => {
                    for &n in &nodes {
                        for c in 0..2 {
                            put(map.disp(n, c), value(*p, n, c))?;
                        }
                    }
                }
                BcKind::NormalStress(sig) => {
                    for f in mesh.faces_in_group(g) {
                        let normal = face_axis(mesh, f.element, f.edge)?;
                        let tangent = 1 - normal;
                        for l in EDGE_NODES[f.edge] {
                            let n = mesh.elements[f.element][l];
                            put(map.disp(n, 0), Value::Zero)?;
                            put(map.disp(n, 1), Value::Zero)?;
                            put(map.vel(n, tangent), Value::Zero)?;
                        }
                        loads.push(FaceLoad {
                            element: f.element,
                            edge: f.edge,
                            signal: *sig,
                        });
                    }
                }
                BcKind::Symmetry => {
                    for f in mesh.faces_in_group(g) {
                        let normal = face_axis(mesh, f.element, f.edge)?;
                        for l in EDGE_NODES[f.edge] {
                            let n = mesh.elements[f.element][l];
                            put(map.disp(n, normal), Value::Zero)?;
                            put(map.vel(n, normal), Value::Zero)?;
                        }
                    }
                }
                BcKind::ZeroStress => {}
            }
        }
        let (dofs, values) = table.into_iter().unzip();
        Ok(Self {
            dofs,
            values,
            loads,
        })
    }

    /// Constraints with every value replaced by zero (coarse-level corrections).
    pub fn homogeneous(&self) -> Self {
        Self {
            dofs: self.dofs.clone(),
            values: vec![Value::Zero; self.dofs.len()],
            loads: Vec::new(),
        }
    }

    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn values_at(&self, t: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.dofs.iter().zip(&self.values).map(move |(&d, v)| (d, v.eval(t)))
    }

    /// Writes the prescribed values at time `t` into `x`.
    pub fn lift(&self, x: &mut [f64], t: f64) {
        for (d, v) in self.values_at(t) {
            x[d] = v;
        }
    }

    /// Replaces constrained rows by identity rows with residual `x_i − g_i(t)`.
    pub fn apply(&self, jac: Option<&mut SparseMatrix>, res: &mut [f64], x: &[f64], t: f64) {
        for (d, v) in self.values_at(t) {
            res[d] = x[d] - v;
        }
        if let Some(j) = jac {
            for &d in &self.dofs {
                j.set_identity_row(d);
            }
        }
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &d in &self.dofs {
            m[d] = true;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_layout;
    use crate::mesh::{build_case, GeometryCase};

    fn inflow() -> Profile {
        Profile::Parabolic {
            peak: -0.05,
            center: 0.0,
            half_width: 1e-3,
            pulse: 0.75,
        }
    }

    #[test]
    fn inlet_profile_is_interpolated_nodally() {
        let m = build_case(&GeometryCase::channel()).unwrap();
        let (map, l) = build_layout(&m);
        let c = Constraints::build(
            &m,
            &map,
            &[BoundaryCondition {
                group: "inlet".into(),
                kind: BcKind::Velocity(inflow()),
            }],
        )
        .unwrap();
        let mut x = vec![0.0; l.n_dofs];
        c.lift(&mut x, 0.0);
        let g = m.group_id("inlet").unwrap();
        for n in m.group_nodes(g) {
            let y = m.nodes[n][1] / 1e-3;
            assert!((x[map.vel(n, 0)] - (-0.05 * (1.0 - y * y))).abs() < 1e-14);
            assert_eq!(x[map.vel(n, 1)], 0.0);
        }
    }

    #[test]
    fn conflicting_values_are_rejected() {
        let m = build_case(&GeometryCase::channel()).unwrap();
        let (map, _) = build_layout(&m);
        let bcs = [
            BoundaryCondition {
                group: "inlet".into(),
                kind: BcKind::Velocity(inflow()),
            },
            BoundaryCondition {
                group: "inlet".into(),
                kind: BcKind::Velocity(Profile::Constant([1.0, 0.0])),
            },
        ];
        assert!(matches!(Constraints::build(&m, &map, &bcs), Err(FsiError::Config(_))));
    }

    #[test]
    fn symmetry_constrains_normal_component_only() {
        let m = build_case(&GeometryCase::unit_square(2)).unwrap();
        let (map, l) = build_layout(&m);
        let c = Constraints::build(
            &m,
            &map,
            &[BoundaryCondition {
                group: "bottom".into(),
                kind: BcKind::Symmetry,
            }],
        )
        .unwrap();
        let mask = c.mask(l.n_dofs);
        for n in m.group_nodes(0) {
            assert!(mask[map.vel(n, 1)] && !mask[map.vel(n, 0)]);
            assert!(mask[map.disp(n, 1)] && !mask[map.disp(n, 0)]);
        }
    }

    #[test]
    fn all_dirichlet_zero_system_has_zero_solution() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let mut j = a.clone();
        let c = Constraints {
            dofs: vec![0, 1],
            values: vec![Value::Zero, Value::Zero],
            loads: vec![],
        };
        let x = [0.0, 0.0];
        let mut r = vec![5.0, -2.0];
        c.apply(Some(&mut j), &mut r, &x, 0.0);
        let sol = crate::linalg::direct_solve(&j, &r.iter().map(|v| -v).collect::<Vec<_>>()).unwrap();
        assert_eq!(sol, vec![0.0, 0.0]);
    }
}
