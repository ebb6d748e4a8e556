//! Monolithic residual and Jacobian assembly.
//!
//! Residual rows reuse the dof slots: momentum at solid-owned nodes sits in the
//! `d^s` rows, solid kinematics in the `u^s` rows, mesh motion in the `d^f` rows,
//! fluid momentum in the `u^f` rows and continuity in the pressure rows.

pub mod bc;
pub mod element;
pub mod newton;

pub use bc::{BcKind, BoundaryCondition, Constraints, Profile, TimeSignal};
pub use newton::{advance_state, newton_solve, LinearSolve, LinearStats, NewtonOptions, NewtonOutcome};

use crate::ad::{Dual, Scalar};
use crate::constitutive::{mesh_stiffness_distance, mesh_stiffness_inverse_volume, MaterialParams};
use crate::error::{FsiError, Result};
use crate::fem::dofs::ELEM_DOFS;
use crate::fem::reference::{edge_rule, q2_gradients, q2_values, ReferenceElement, EDGE_NODES};
use crate::fem::{build_layout, DofMap, Field, FieldLayout};
use crate::linalg::SparseMatrix;
use crate::mesh::Mesh;
use crate::supg::element_lambda;
use element::{element_explicit, element_residual, ElementData, ElementParams};

type D39 = Dual<ELEM_DOFS>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshStiffness {
    InverseVolume,
    /// k = a/(1 + c·|x̂_center − point|).
    Distance { point: [f64; 2], a: f64, c: f64 },
}

/// Density factor of the streamline test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupgDensity {
    /// τ ((u − ḋ)·∇)φ, consistent with τ in seconds.
    Unit,
    /// τ ρ^f ((u − ḋ)·∇)φ with ρ^f in kg/m³.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsOptions {
    pub material: MaterialParams,
    pub theta: f64,
    pub supg: bool,
    pub supg_density: SupgDensity,
    pub frozen_geometry: bool,
    pub quad_order: usize,
    pub stiffness: MeshStiffness,
}

impl Default for PhysicsOptions {
    fn default() -> Self {
        Self {
            material: MaterialParams::default(),
            theta: 0.5,
            supg: true,
            supg_density: SupgDensity::Unit,
            frozen_geometry: false,
            quad_order: 3,
            stiffness: MeshStiffness::InverseVolume,
        }
    }
}

/// Unknowns in global dof order plus the nodal mesh velocity of the step that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub x: Vec<f64>,
    pub wdot: Vec<[f64; 2]>,
    pub t: f64,
}

/// Per-level assembler; owns the mesh and its dof numbering.
#[derive(Debug, Clone)]
pub struct Assembler {
    pub mesh: Mesh,
    pub map: DofMap,
    pub layout: FieldLayout,
    pub opts: PhysicsOptions,
    re: ReferenceElement,
    lumped: Vec<[f64; 9]>,
    k_mesh: Vec<f64>,
    lambda: Vec<f64>,
    rows: Vec<[Option<usize>; ELEM_DOFS]>,
    pattern: SparseMatrix,
}

impl Assembler {
    pub fn new(mesh: Mesh, opts: PhysicsOptions) -> Result<Self> {
        opts.material.validate()?;
        let (map, layout) = build_layout(&mesh);
        let re = ReferenceElement::new(opts.quad_order);
        let mut lumped = Vec::with_capacity(mesh.n_elements());
        let mut k_mesh = Vec::with_capacity(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            let x = mesh.element_coords(e);
            let mut l = [0.0; 9];
            for q in 0..re.rule.len() {
                let j = crate::mesh::jacobian_of(&x, &re.grads[q]);
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                for k in 0..9 {
                    l[k] += re.rule.weights[q] * det * re.values[q][k];
                }
            }
            lumped.push(l);
            k_mesh.push(match opts.stiffness {
                MeshStiffness::InverseVolume => mesh_stiffness_inverse_volume(&mesh, e)?,
                MeshStiffness::Distance { point, a, c } => {
                    mesh_stiffness_distance(mesh.map_point(e, [0.0, 0.0]), point, a, c)
                }
            });
        }
        let rows: Vec<_> = (0..mesh.n_elements()).map(|e| row_map(&mesh, &map, e)).collect();
        let n = layout.n_dofs;
        let mut pat: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in 0..mesh.n_elements() {
            let cols = map.element_dofs(&mesh, e);
            for r in rows[e].iter().flatten() {
                pat[*r].extend_from_slice(&cols);
            }
        }
        for (i, p) in pat.iter_mut().enumerate() {
            p.push(i);
            p.sort_unstable();
            p.dedup();
        }
        let pattern = SparseMatrix::from_pattern(n, &pat);
        let lambda = vec![1.0; mesh.n_elements()];
        let mut a = Self {
            mesh,
            map,
            layout,
            opts,
            re,
            lumped,
            k_mesh,
            lambda,
            rows,
            pattern,
        };
        let rest = a.rest_state();
        a.update_lambda(&rest)?;
        Ok(a)
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.n_dofs
    }

    pub fn reference(&self) -> &ReferenceElement {
        &self.re
    }

    /// Zero displacement and velocity; solid pressure at the constant C1 that
    /// balances the Mooney-Rivlin stress of the undeformed state.
    pub fn rest_state(&self) -> State {
        let mut x = vec![0.0; self.n_dofs()];
        let c1 = self.opts.material.c1();
        for e in 0..self.mesh.n_elements() {
            if self.mesh.regions[e].is_solid() {
                x[self.map.pressure(e, 0)] = c1;
            }
        }
        State {
            x,
            wdot: vec![[0.0; 2]; self.mesh.n_nodes()],
            t: 0.0,
        }
    }

    pub fn node_disp(&self, x: &[f64], n: usize) -> [f64; 2] {
        [x[self.map.disp(n, 0)], x[self.map.disp(n, 1)]]
    }

    pub fn node_vel(&self, x: &[f64], n: usize) -> [f64; 2] {
        [x[self.map.vel(n, 0)], x[self.map.vel(n, 1)]]
    }

    /// Recomputes λ_k of every fluid element on the configuration of `state`.
    pub fn update_lambda(&mut self, state: &State) -> Result<()> {
        for e in 0..self.mesh.n_elements() {
            if self.mesh.regions[e].is_solid() {
                continue;
            }
            let el = self.mesh.elements[e];
            let x: [[f64; 2]; 9] = std::array::from_fn(|k| {
                let p = self.mesh.nodes[el[k]];
                if self.opts.frozen_geometry {
                    p
                } else {
                    let d = self.node_disp(&state.x, el[k]);
                    [p[0] + d[0], p[1] + d[1]]
                }
            });
            self.lambda[e] = element_lambda(&x, &self.re).map_err(|err| tag_element(err, e))?;
        }
        Ok(())
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    fn params(&self, e: usize, dt: f64) -> ElementParams {
        ElementParams {
            solid: self.mesh.regions[e].is_solid(),
            dt,
            theta: self.opts.theta,
            material: self.opts.material,
            lambda: self.lambda[e],
            k_mesh: self.k_mesh[e],
            supg: self.opts.supg,
            supg_density: match self.opts.supg_density {
                SupgDensity::Unit => 1.0,
                SupgDensity::Literal => self.opts.material.rho_f,
            },
            frozen_geometry: self.opts.frozen_geometry,
        }
    }

    fn gather(&self, x: &[f64], e: usize) -> ([[f64; 2]; 9], [[f64; 2]; 9], [f64; 3]) {
        let el = self.mesh.elements[e];
        (
            el.map(|n| self.node_disp(x, n)),
            el.map(|n| self.node_vel(x, n)),
            std::array::from_fn(|m| x[self.map.pressure(e, m)]),
        )
    }

    /// Constant old-time part of the momentum rows.
    pub fn explicit_part(&self, old: &State, dt: f64) -> Result<Vec<f64>> {
        let mut r = vec![0.0; self.n_dofs()];
        for e in 0..self.mesh.n_elements() {
            let (d, u, p) = self.gather(&old.x, e);
            let w = self.mesh.elements[e].map(|n| old.wdot[n]);
            let xh = self.mesh.element_coords(e);
            let loc = element_explicit(&self.re, &xh, &d, &u, &w, &p, &self.params(e, dt))
                .map_err(|err| tag_element(err, e))?;
            for (i, v) in loc.iter().enumerate() {
                if let Some(row) = self.rows[e][i] {
                    r[row] += v;
                }
            }
        }
        Ok(r)
    }

    fn add_loads(&self, r: &mut [f64], x: &[f64], cons: &Constraints, t: f64) {
        for load in &cons.loads {
            let g = load.signal.eval(t);
            if g == 0.0 {
                continue;
            }
            let el = self.mesh.elements[load.element];
            let pos: [[f64; 2]; 9] = std::array::from_fn(|k| {
                let p = self.mesh.nodes[el[k]];
                let d = self.node_disp(x, el[k]);
                [p[0] + d[0], p[1] + d[1]]
            });
            let [a, b, _] = EDGE_NODES[load.edge];
            let dir = [
                crate::fem::reference::Q2_NODES[b][0] - crate::fem::reference::Q2_NODES[a][0],
                crate::fem::reference::Q2_NODES[b][1] - crate::fem::reference::Q2_NODES[a][1],
            ];
            for (xi, w) in edge_rule(load.edge, 3) {
                let gr = q2_gradients(xi[0], xi[1]);
                let nv = q2_values(xi[0], xi[1]);
                // tangent dx/ds for the reference edge parameter s ∈ [−1, 1]
                let mut tan = [0.0; 2];
                for k in 0..9 {
                    let dn = 0.5 * (gr[k][0] * dir[0] + gr[k][1] * dir[1]);
                    tan[0] += pos[k][0] * dn;
                    tan[1] += pos[k][1] * dn;
                }
                // outward normal times the line element for counterclockwise edges
                let nds = [tan[1], -tan[0]];
                for k in 0..9 {
                    for c in 0..2 {
                        if let Some(row) = self.rows[load.element][2 * k + c] {
                            r[row] -= w * g * nds[c] * nv[k];
                        }
                    }
                }
            }
        }
    }

    /// Nonlinear residual at `new` (Dirichlet rows not yet applied).
    pub fn residual(&self, new: &[f64], old: &State, explicit: &[f64], dt: f64, cons: &Constraints, t: f64) -> Result<Vec<f64>> {
        let mut r = explicit.to_vec();
        for e in 0..self.mesh.n_elements() {
            let (d, u, p) = self.gather(new, e);
            let (d0, u0, _) = self.gather(&old.x, e);
            let xh = self.mesh.element_coords(e);
            let data = ElementData {
                xhat: &xh,
                d: &d,
                u: &u,
                p: &p,
                d_old: &d0,
                u_old: &u0,
                lumped: &self.lumped[e],
            };
            let loc: [f64; ELEM_DOFS] = element_residual(&self.re, &data, &self.params(e, dt))
                .map_err(|err| tag_element(err, e))?;
            for (i, v) in loc.iter().enumerate() {
                if let Some(row) = self.rows[e][i] {
                    r[row] += v;
                }
            }
        }
        self.add_loads(&mut r, new, cons, t);
        Ok(r)
    }

    /// Residual and exact Jacobian at `new` (Dirichlet rows not yet applied).
    pub fn residual_and_jacobian(
        &self,
        new: &[f64],
        old: &State,
        explicit: &[f64],
        dt: f64,
        cons: &Constraints,
        t: f64,
    ) -> Result<(Vec<f64>, SparseMatrix)> {
        let mut r = explicit.to_vec();
        let mut jac = self.pattern.clone();
        for e in 0..self.mesh.n_elements() {
            let (d, u, p) = self.gather(new, e);
            let (d0, u0, _) = self.gather(&old.x, e);
            let xh = self.mesh.element_coords(e);
            let dd: [[D39; 2]; 9] = std::array::from_fn(|k| std::array::from_fn(|c| D39::variable(d[k][c], 2 * k + c)));
            let ud: [[D39; 2]; 9] =
                std::array::from_fn(|k| std::array::from_fn(|c| D39::variable(u[k][c], 18 + 2 * k + c)));
            let pd: [D39; 3] = std::array::from_fn(|m| D39::variable(p[m], 36 + m));
            let data = ElementData {
                xhat: &xh,
                d: &dd,
                u: &ud,
                p: &pd,
                d_old: &d0,
                u_old: &u0,
                lumped: &self.lumped[e],
            };
            let loc = element_residual(&self.re, &data, &self.params(e, dt)).map_err(|err| tag_element(err, e))?;
            let cols = self.map.element_dofs(&self.mesh, e);
            for (i, v) in loc.iter().enumerate() {
                let Some(row) = self.rows[e][i] else { continue };
                r[row] += v.value();
                let start = jac.row_offsets()[row];
                let end = jac.row_offsets()[row + 1];
                for (k, &col) in cols.iter().enumerate() {
                    let dv = v.d[k];
                    if dv != 0.0 {
                        let off = start + jac.col_indices()[start..end].binary_search(&col).expect("pattern covers element");
                        jac.values_mut()[off] += dv;
                    }
                }
            }
        }
        self.add_loads(&mut r, new, cons, t);
        Ok((r, jac))
    }

    /// Element-mean |J − 1| over solid elements.
    pub fn max_solid_volume_error(&self, x: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for e in 0..self.mesh.n_elements() {
            if !self.mesh.regions[e].is_solid() {
                continue;
            }
            let (d, _, _) = self.gather(x, e);
            let xh = self.mesh.element_coords(e);
            let deformed: [[f64; 2]; 9] = std::array::from_fn(|k| [xh[k][0] + d[k][0], xh[k][1] + d[k][1]]);
            let mut v0 = 0.0;
            let mut v1 = 0.0;
            for q in 0..self.re.rule.len() {
                let g0 = crate::fem::geometry::physical::<f64>(&xh, &self.re.grads[q], None)?;
                let g1 = crate::fem::geometry::physical::<f64>(&deformed, &self.re.grads[q], None)
                    .map_err(|err| tag_element(err, e))?;
                v0 += self.re.rule.weights[q] * g0.det;
                v1 += self.re.rule.weights[q] * g1.det;
            }
            worst = worst.max((v1 / v0 - 1.0).abs());
        }
        Ok(worst)
    }

    pub fn field_of_row(&self, row: usize) -> Field {
        self.map.field_of(row)
    }
}

fn row_map(mesh: &Mesh, map: &DofMap, e: usize) -> [Option<usize>; ELEM_DOFS] {
    let el = mesh.elements[e];
    let solid = mesh.regions[e].is_solid();
    std::array::from_fn(|i| {
        if i < 18 {
            let n = el[i / 2];
            let c = i % 2;
            Some(if map.node_solid[n] { map.disp(n, c) } else { map.vel(n, c) })
        } else if i < 36 {
            let n = el[(i - 18) / 2];
            let c = i % 2;
            if solid {
                Some(map.vel(n, c))
            } else if map.node_solid[n] {
                None
            } else {
                Some(map.disp(n, c))
            }
        } else {
            Some(map.pressure(e, i - 36))
        }
    })
}

fn tag_element(err: FsiError, e: usize) -> FsiError {
    match err {
        FsiError::InvertedElement { det, .. } => FsiError::InvertedElement { element: e, det },
        other => other,
    }
}
