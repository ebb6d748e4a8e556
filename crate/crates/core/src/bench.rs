//! Benchmark driver and solver metrics: averaged GMRES iterations N, averaged
//! convergence rate ρ, mean Newton iterations s^max, the timing exponent α and
//! flux / volume quantities of interest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::assembly::{Assembler, State};
use crate::config::RunConfig;
use crate::error::{FsiError, Result};
use crate::fem::reference::EDGE_NODES;
use crate::fem::{DofMap, ReferenceElement};
use crate::mesh::{build_case, CaseKind, GeometryCase, Mesh, Region};
use crate::solver::{Simulation, SolverKind, StepRecord};

/// Period averages over all Newton steps of all time steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregates {
    /// Mean linear iterations per Newton step.
    pub n: f64,
    /// Mean of r_N / r_0 per Newton step.
    pub rho: f64,
    /// Mean Newton iterations per time step (halved steps count both halves).
    pub s_max: f64,
    pub total_seconds: f64,
    pub time_steps: usize,
    pub newton_steps: usize,
}

pub fn aggregate_metrics(log: &[StepRecord]) -> Result<Aggregates> {
    if log.is_empty() {
        return Err(FsiError::InvalidArgument("empty solver log".into()));
    }
    let lin: Vec<_> = log.iter().flat_map(|r| &r.linear).collect();
    let m = lin.len().max(1) as f64;
    let newton: usize = log.iter().map(|r| r.newton_iterations.iter().sum::<usize>()).sum();
    Ok(Aggregates {
        n: lin.iter().map(|s| s.iterations as f64).sum::<f64>() / m,
        rho: lin.iter().map(|s| s.rho()).sum::<f64>() / m,
        s_max: newton as f64 / log.len() as f64,
        total_seconds: log.iter().map(|r| r.wall_seconds).sum(),
        time_steps: log.len(),
        newton_steps: lin.len(),
    })
}

/// α ≈ ln(T₁/T₂) / ln(dofs₁/dofs₂).
pub fn estimate_alpha(t1: f64, dofs1: usize, t2: f64, dofs2: usize) -> Result<f64> {
    if !(t1 > 0.0 && t2 > 0.0 && t1.is_finite() && t2.is_finite()) || dofs1 == 0 || dofs2 == 0 || dofs1 == dofs2 {
        return Err(FsiError::InvalidArgument(format!(
            "alpha needs positive times and distinct positive dof counts, got ({t1}, {dofs1}), ({t2}, {dofs2})"
        )));
    }
    Ok((t1 / t2).ln() / (dofs1 as f64 / dofs2 as f64).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normal {
    /// Positive for flow into the domain.
    Inward,
    Outward,
}

/// ∫ u·n ds over a boundary group on the deformed configuration (m²/s in 2D).
pub fn boundary_flux(mesh: &Mesh, map: &DofMap, x: &[f64], group: &str, normal: Normal) -> Result<f64> {
    let gid = mesh
        .group_id(group)
        .ok_or_else(|| FsiError::InvalidArgument(format!("unknown boundary group '{group}'")))?;
    let faces: Vec<_> = mesh.faces_in_group(gid).collect();
    if faces.is_empty() {
        return Err(FsiError::InvalidArgument(format!("boundary group '{group}' has no faces")));
    }
    let sign = match normal {
        Normal::Inward => -1.0,
        Normal::Outward => 1.0,
    };
    // 3-point Gauss on [-1, 1]; edge nodes in order (start, end, middle)
    let g = (0.6f64).sqrt();
    let rule = [(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)];
    let mut q = 0.0;
    for f in faces {
        let el = mesh.elements[f.element];
        let ids = EDGE_NODES[f.edge].map(|k| el[k]);
        let pos = ids.map(|n| {
            let p = mesh.nodes[n];
            [p[0] + x[map.disp(n, 0)], p[1] + x[map.disp(n, 1)]]
        });
        let vel = ids.map(|n| [x[map.vel(n, 0)], x[map.vel(n, 1)]]);
        for (s, w) in rule {
            let n = [0.5 * s * (s - 1.0), 0.5 * s * (s + 1.0), 1.0 - s * s];
            let dn = [s - 0.5, s + 0.5, -2.0 * s];
            let mut t = [0.0; 2];
            let mut u = [0.0; 2];
            for k in 0..3 {
                for c in 0..2 {
                    t[c] += dn[k] * pos[k][c];
                    u[c] += n[k] * vel[k][c];
                }
            }
            // counter-clockwise elements: (t_y, −t_x) points outward, |t| ds absorbed
            q += sign * w * (u[0] * t[1] - u[1] * t[0]);
        }
    }
    Ok(q)
}

/// Trapezoidal running integral with Q(0) = 0.
pub fn cumulative_flux(q: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(q.len());
    let mut acc = 0.0;
    for (i, v) in q.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * dt * (q[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

fn deformed_area(mesh: &Mesh, map: &DofMap, x: &[f64], e: usize, re: &ReferenceElement, moved: bool) -> Result<f64> {
    let el = mesh.elements[e];
    let c: [[f64; 2]; 9] = std::array::from_fn(|k| {
        let p = mesh.nodes[el[k]];
        if moved {
            [p[0] + x[map.disp(el[k], 0)], p[1] + x[map.disp(el[k], 1)]]
        } else {
            p
        }
    });
    let mut a = 0.0;
    for q in 0..re.rule.len() {
        let j = crate::mesh::jacobian_of(&c, &re.grads[q]);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det <= 0.0 {
            return Err(FsiError::InvertedElement { element: e, det });
        }
        a += re.rule.weights[q] * det;
    }
    Ok(a)
}

/// (V(t) − V(0)) / V(0) over a set of elements.
pub fn cavity_volume_change(mesh: &Mesh, map: &DofMap, x: &[f64], cells: &[usize]) -> Result<f64> {
    if cells.is_empty() {
        return Err(FsiError::InvalidArgument("empty cavity element set".into()));
    }
    let re = ReferenceElement::new(3);
    let (mut v0, mut v) = (0.0, 0.0);
    for &e in cells {
        v0 += deformed_area(mesh, map, x, e, &re, false)?;
        v += deformed_area(mesh, map, x, e, &re, true)?;
    }
    Ok((v - v0) / v0)
}

/// Fluid elements under the bulge, or every fluid element for cases without one.
pub fn cavity_elements(mesh: &Mesh, case: &GeometryCase) -> Vec<usize> {
    let fluid = mesh.elements_in(Region::Fluid);
    if case.kind != CaseKind::Bulge || case.bulge_radius == 0.0 {
        return fluid;
    }
    fluid
        .into_iter()
        .filter(|&e| {
            let c = mesh.map_point(e, [0.0, 0.0]);
            (c[0] + 0.5 * case.length).abs() < case.bulge_radius && c[1] > 0.0
        })
        .collect()
}

/// One row of qoi.csv.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoiSample {
    pub time: f64,
    pub q1: f64,
    pub q2: f64,
    pub volume_change: f64,
}

pub fn sample_qoi(asm: &Assembler, state: &State, cavity: &[usize]) -> Result<QoiSample> {
    Ok(QoiSample {
        time: state.t,
        q1: boundary_flux(&asm.mesh, &asm.map, &state.x, "inlet", Normal::Inward)?,
        q2: boundary_flux(&asm.mesh, &asm.map, &state.x, "outlet", Normal::Outward)?,
        volume_change: cavity_volume_change(&asm.mesh, &asm.map, &state.x, cavity)?,
    })
}

/// Everything a run produced, also written as summary.json.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub case: String,
    pub smoother: String,
    pub levels: usize,
    pub dofs: usize,
    pub dt: f64,
    pub steps: usize,
    pub aggregates: Aggregates,
    pub max_solid_volume_error: f64,
    /// max |Q₁ − Q₂| / max |Q₁| over the run.
    pub flux_imbalance: f64,
    /// Relative max-norm difference of the final states, when a comparison solver ran.
    pub final_difference: Option<f64>,
}

pub struct RunResult {
    pub summary: RunSummary,
    pub log: Vec<StepRecord>,
    pub qoi: Vec<QoiSample>,
    pub final_state: State,
}

/// Relative discrete max-norm difference ‖a − b‖∞ / ‖b‖∞.
pub fn relative_max_difference(a: &[f64], b: &[f64]) -> f64 {
    let m = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = a.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    if m == 0.0 {
        d
    } else {
        d / m
    }
}

fn io<E: std::fmt::Display>(e: E) -> FsiError {
    FsiError::Io(e.to_string())
}

fn simulation(cfg: &RunConfig, kind: SolverKind) -> Result<Simulation> {
    let mesh = build_case(&cfg.geometry)?;
    let solver = crate::solver::SolverConfig { kind, ..cfg.solver };
    Simulation::new(mesh, cfg.levels, cfg.physics, &cfg.boundary_conditions(), solver)
}

fn write_report(path: &Path, log: &[StepRecord]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    writeln!(w, "step,time,dt,newton_step,linear_iterations,r0,rn,rho,step_wall_seconds,halved").map_err(io)?;
    for r in log {
        for (s, l) in r.linear.iter().enumerate() {
            writeln!(
                w,
                "{},{:.10e},{:.10e},{},{},{:.10e},{:.10e},{:.10e},{:.6},{}",
                r.step,
                r.time,
                r.dt,
                s + 1,
                l.iterations,
                l.r0,
                l.rn,
                l.rho(),
                r.wall_seconds,
                r.halved
            )
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

fn write_qoi(path: &Path, qoi: &[QoiSample], dt: f64) -> Result<()> {
    let q1 = cumulative_flux(&qoi.iter().map(|s| s.q1).collect::<Vec<_>>(), dt);
    let q2 = cumulative_flux(&qoi.iter().map(|s| s.q2).collect::<Vec<_>>(), dt);
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    writeln!(w, "time,q1,q2,Q1,Q2,volume_change").map_err(io)?;
    for (i, s) in qoi.iter().enumerate() {
        writeln!(w, "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}", s.time, s.q1, s.q2, q1[i], q2[i], s.volume_change)
            .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Legacy VTK with biquadratic quads on the deformed mesh.
pub fn write_vtk(path: &Path, asm: &Assembler, state: &State) -> Result<()> {
    let (mesh, map, x) = (&asm.mesh, &asm.map, &state.x);
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    let n = mesh.n_nodes();
    let ne = mesh.n_elements();
    writeln!(w, "# vtk DataFile Version 3.0\nt = {}\nASCII\nDATASET UNSTRUCTURED_GRID", state.t).map_err(io)?;
    writeln!(w, "POINTS {n} double").map_err(io)?;
    for (i, p) in mesh.nodes.iter().enumerate() {
        writeln!(w, "{:e} {:e} 0", p[0] + x[map.disp(i, 0)], p[1] + x[map.disp(i, 1)]).map_err(io)?;
    }
    writeln!(w, "CELLS {ne} {}", ne * 10).map_err(io)?;
    for el in &mesh.elements {
        let ids: Vec<String> = el.iter().map(|v| v.to_string()).collect();
        writeln!(w, "9 {}", ids.join(" ")).map_err(io)?;
    }
    writeln!(w, "CELL_TYPES {ne}").map_err(io)?;
    for _ in 0..ne {
        writeln!(w, "28").map_err(io)?;
    }
    writeln!(w, "POINT_DATA {n}\nVECTORS displacement double").map_err(io)?;
    for i in 0..n {
        writeln!(w, "{:e} {:e} 0", x[map.disp(i, 0)], x[map.disp(i, 1)]).map_err(io)?;
    }
    writeln!(w, "VECTORS velocity double").map_err(io)?;
    for i in 0..n {
        writeln!(w, "{:e} {:e} 0", x[map.vel(i, 0)], x[map.vel(i, 1)]).map_err(io)?;
    }
    writeln!(w, "CELL_DATA {ne}\nSCALARS pressure double 1\nLOOKUP_TABLE default").map_err(io)?;
    for e in 0..ne {
        // P1 pressure value at the element center
        writeln!(w, "{:e}", x[map.pressure(e, 0)]).map_err(io)?;
    }
    writeln!(w, "SCALARS solid int 1\nLOOKUP_TABLE default").map_err(io)?;
    for r in &mesh.regions {
        writeln!(w, "{}", u8::from(r.is_solid())).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn summary_for(cfg: &RunConfig, sim: &Simulation, kind: SolverKind, log: &[StepRecord], qoi: &[QoiSample], max_j: f64) -> Result<RunSummary> {
    let dt = cfg.dt();
    let q1 = cumulative_flux(&qoi.iter().map(|s| s.q1).collect::<Vec<_>>(), dt);
    let q2 = cumulative_flux(&qoi.iter().map(|s| s.q2).collect::<Vec<_>>(), dt);
    let peak = q1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = q1.iter().zip(&q2).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(RunSummary {
        case: cfg.case.clone(),
        smoother: kind.name().into(),
        levels: cfg.levels,
        dofs: sim.n_dofs(),
        dt,
        steps: log.len(),
        aggregates: aggregate_metrics(log)?,
        max_solid_volume_error: max_j,
        flux_imbalance: if peak > 0.0 { gap / peak } else { gap },
        final_difference: None,
    })
}

/// Runs the configured case with `kind`, sampling QoIs at t = 0 and after every step.
/// With `out`, writes report.csv, qoi.csv, summary.json and the optional dumps there.
pub fn run_case(cfg: &RunConfig, kind: SolverKind, out: Option<&Path>) -> Result<RunResult> {
    cfg.validate()?;
    let mut sim = simulation(cfg, kind)?;
    let cavity = cavity_elements(&sim.fine().mesh, &cfg.geometry);
    let dt = cfg.dt();
    let mut qoi = vec![sample_qoi(sim.fine(), sim.state(), &cavity)?];
    let mut log = Vec::with_capacity(cfg.n_steps());
    let mut max_j = 0.0f64;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(io)?;
        if cfg.vtk {
            write_vtk(&dir.join("step_0000.vtk"), sim.fine(), sim.state())?;
        }
    }
    for _ in 0..cfg.n_steps() {
        let rec = sim.step(dt)?;
        max_j = max_j.max(sim.fine().max_solid_volume_error(&sim.state().x)?);
        qoi.push(sample_qoi(sim.fine(), sim.state(), &cavity)?);
        if let (Some(dir), true) = (out, cfg.vtk) {
            write_vtk(&dir.join(format!("step_{:04}.vtk", rec.step)), sim.fine(), sim.state())?;
        }
        log.push(rec);
    }
    let summary = summary_for(cfg, &sim, kind, &log, &qoi, max_j)?;
    if let Some(dir) = out {
        write_report(&dir.join("report.csv"), &log)?;
        write_qoi(&dir.join("qoi.csv"), &qoi, dt)?;
        if cfg.dump_matrices {
            let jac = sim.jacobian_at_state(dt)?;
            let f = fs::File::create(dir.join("jacobian.mtx")).map_err(io)?;
            jac.write_matrix_market(BufWriter::new(f))?;
        }
        let json = serde_json::to_string_pretty(&summary).map_err(io)?;
        fs::write(dir.join("summary.json"), json).map_err(io)?;
    }
    Ok(RunResult {
        summary,
        log,
        qoi,
        final_state: sim.state().clone(),
    })
}

/// Runs the configured smoother and, when `compare` is set, the second solver
/// into `<out>/<name>`. Writes manifest.txt and, for two solvers,
/// difference.csv with the relative max-norm difference of the final states.
pub fn run_benchmark(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(io)?;
    fs::write(out.join("manifest.txt"), cfg.manifest()).map_err(io)?;
    let main = run_case(cfg, cfg.solver.kind, Some(out))?;
    let mut summary = main.summary;
    if let Some(other) = cfg.compare {
        let second = run_case(cfg, other, Some(&out.join(other.name())))?;
        let d = relative_max_difference(&main.final_state.x, &second.final_state.x);
        summary.final_difference = Some(d);
        fs::write(
            out.join("difference.csv"),
            format!("solver_a,solver_b,relative_max_difference\n{},{},{:.6e}\n", cfg.solver.kind.name(), other.name(), d),
        )
        .map_err(io)?;
        let json = serde_json::to_string_pretty(&summary).map_err(io)?;
        fs::write(out.join("summary.json"), json).map_err(io)?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{LinearStats, PhysicsOptions};
    use crate::fem::build_layout;
    use crate::fem::reference::Q2_NODES;

    fn rec(newton: &[usize], lin: &[(usize, f64)]) -> StepRecord {
        StepRecord {
            step: 1,
            time: 0.0,
            dt: 1.0,
            newton_iterations: newton.to_vec(),
            linear: lin
                .iter()
                .map(|&(n, rho)| LinearStats {
                    iterations: n,
                    r0: 1.0,
                    rn: rho,
                    converged: true,
                })
                .collect(),
            residuals: vec![],
            wall_seconds: 0.5,
            halved: false,
        }
    }

    #[test]
    fn aggregates_on_synthetic_logs() {
        let a = aggregate_metrics(&[rec(&[1], &[(7, 0.1)])]).unwrap();
        assert_eq!((a.n, a.rho, a.s_max), (7.0, 0.1, 1.0));
        let a = aggregate_metrics(&[rec(&[2], &[(6, 0.2), (8, 0.4)])]).unwrap();
        assert_eq!(a.n, 7.0);
        assert!((a.rho - 0.3).abs() < 1e-15);
        assert!(aggregate_metrics(&[]).is_err());
    }

    #[test]
    fn aggregates_reproduce_a_table_row_shape() {
        // 100 steps, 39 with four Newton steps and 61 with three: s^max = 3.39;
        // 251 solves with 9 iterations and 88 with 10: N = 3139/339 ≈ 9.26
        let mut log = Vec::new();
        let mut solves = (0..251).map(|_| 9).chain((0..88).map(|_| 10));
        for i in 0..100 {
            let s = if i < 39 { 4 } else { 3 };
            let lin: Vec<(usize, f64)> = (0..s).map(|_| (solves.next().unwrap(), 0.16)).collect();
            log.push(rec(&[s], &lin));
        }
        let a = aggregate_metrics(&log).unwrap();
        assert_eq!(format!("{:.2} {:.2} {:.2}", a.n, a.rho, a.s_max), "9.26 0.16 3.39");
        assert_eq!(a.newton_steps, 339);
    }

    #[test]
    fn alpha_examples() {
        assert!((estimate_alpha(1.0, 100, 4.0, 400).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(estimate_alpha(2.0, 100, 2.0, 400).unwrap(), 0.0);
        let a = estimate_alpha(37.58, 81492, 139.08, 323524).unwrap();
        assert!((a - 0.949).abs() < 1e-3, "{a}");
        assert!(estimate_alpha(1.0, 100, 2.0, 100).is_err());
        assert!(estimate_alpha(0.0, 100, 2.0, 200).is_err());
    }

    #[test]
    fn cumulative_flux_examples() {
        assert_eq!(cumulative_flux(&[2.0; 5], 0.25), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(cumulative_flux(&[0.0; 3], 0.1), vec![0.0; 3]);
        let n = 64;
        let dt = 1.0 / n as f64;
        let q: Vec<f64> = (0..=n).map(|i| (2.0 * std::f64::consts::PI * i as f64 * dt).sin()).collect();
        assert!(cumulative_flux(&q, dt)[n].abs() < 1e-12);
    }

    fn square(h: f64, n: usize) -> (Mesh, DofMap) {
        let case = GeometryCase {
            length: 1.0,
            lumen_height: h,
            ..GeometryCase::unit_square(n)
        };
        let m = build_case(&case).unwrap();
        let (map, _) = build_layout(&m);
        (m, map)
    }

    #[test]
    fn poiseuille_flux_is_four_thirds() {
        // y ∈ [0, 2] with u = (1 − (y − 1)², 0) through the left edge x = 0
        let (m, map) = square(2.0, 3);
        let mut x = vec![0.0; map.n_dofs()];
        for (n, p) in m.nodes.iter().enumerate() {
            x[map.vel(n, 0)] = 1.0 - (p[1] - 1.0).powi(2);
        }
        let q = boundary_flux(&m, &map, &x, "left", Normal::Inward).unwrap();
        assert!((q - 4.0 / 3.0).abs() < 1e-13, "{q}");
        let q = boundary_flux(&m, &map, &x, "right", Normal::Outward).unwrap();
        assert!((q - 4.0 / 3.0).abs() < 1e-13, "{q}");
        assert_eq!(boundary_flux(&m, &map, &vec![0.0; map.n_dofs()], "left", Normal::Inward).unwrap(), 0.0);
        assert!(boundary_flux(&m, &map, &x, "nowhere", Normal::Inward).is_err());
    }

    #[test]
    fn uniform_normal_velocity_gives_the_length() {
        let (m, map) = square(0.7, 2);
        let mut x = vec![0.0; map.n_dofs()];
        for n in 0..m.n_nodes() {
            x[map.vel(n, 1)] = -1.0;
        }
        // downward through the bottom edge of length 1
        let q = boundary_flux(&m, &map, &x, "bottom", Normal::Outward).unwrap();
        assert!((q - 1.0).abs() < 1e-14);
    }

    #[test]
    fn isotropic_expansion_scales_the_area() {
        let (m, map) = square(1.0, 2);
        let cells: Vec<usize> = (0..m.n_elements()).collect();
        let mut x = vec![0.0; map.n_dofs()];
        assert_eq!(cavity_volume_change(&m, &map, &x, &cells).unwrap(), 0.0);
        let eps = 0.03;
        for (n, p) in m.nodes.iter().enumerate() {
            x[map.disp(n, 0)] = eps * p[0];
            x[map.disp(n, 1)] = eps * p[1];
        }
        let v = cavity_volume_change(&m, &map, &x, &cells).unwrap();
        assert!((v - ((1.0 + eps).powi(2) - 1.0)).abs() < 1e-14);
        assert!(cavity_volume_change(&m, &map, &x, &[]).is_err());
    }

    #[test]
    fn bulge_cavity_lies_under_the_arc() {
        let g = GeometryCase::bulge(1.5e-3);
        let m = build_case(&g).unwrap();
        let cav = cavity_elements(&m, &g);
        assert!(!cav.is_empty() && cav.len() < m.elements_in(Region::Fluid).len());
        let a = Assembler::new(m, PhysicsOptions::default()).unwrap();
        assert_eq!(cavity_volume_change(&a.mesh, &a.map, &a.rest_state().x, &cav).unwrap(), 0.0);
    }

    #[test]
    fn q2_edge_nodes_match_the_reference_corners() {
        // the flux quadrature assumes (start, end, middle) per edge
        for e in EDGE_NODES {
            let (a, b, m) = (Q2_NODES[e[0]], Q2_NODES[e[1]], Q2_NODES[e[2]]);
            assert_eq!([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0], m);
        }
    }
}
