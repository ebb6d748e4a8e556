//! Flat `key = value` run configuration, case presets and the echo manifest.
//!
//! Lines are `key = value`; `#` starts a comment. Keys not listed in
//! [`RunConfig::keys`] are rejected. Setting `case` resets geometry and
//! boundary conditions to that preset, so it is applied before all other keys.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::assembly::{BcKind, BoundaryCondition, MeshStiffness, PhysicsOptions, Profile, SupgDensity, TimeSignal};
use crate::error::{FsiError, Result};
use crate::gmg::CycleType;
use crate::mesh::GeometryCase;
use crate::ordering::OrderingKind;
use crate::precond::SchwarzMode;
use crate::solver::{SolverConfig, SolverKind};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: String,
    pub geometry: GeometryCase,
    pub physics: PhysicsOptions,
    /// Boundary conditions keyed by group name.
    pub bcs: BTreeMap<String, BcKind>,
    /// Time steps per period.
    pub t_step: usize,
    /// Period length (s).
    pub period: f64,
    pub periods: usize,
    pub levels: usize,
    pub ordering: OrderingKind,
    pub solver: SolverConfig,
    /// Second solver run on the same case for comparison.
    pub compare: Option<SolverKind>,
    pub out: String,
    pub seed: u64,
    pub dump_matrices: bool,
    pub vtk: bool,
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(FsiError::Config(msg.into()))
}

fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return cfg_err(format!("line {}: expected key = value, got '{line}'", no + 1));
        };
        let k = k.trim().to_string();
        if pairs.iter().any(|(p, _)| *p == k) {
            return cfg_err(format!("line {}: duplicate key '{k}'", no + 1));
        }
        pairs.push((k, v.trim().to_string()));
    }
    Ok(pairs)
}

/// Inlet pressure `amp·sin(2πt)` against its negative at the outlet; the
/// traction σn = g n carries the opposite sign of the pressure.
fn channel_bcs(amp: f64) -> BTreeMap<String, BcKind> {
    let mut m = BTreeMap::new();
    m.insert("inlet".into(), BcKind::NormalStress(TimeSignal::sine(-amp)));
    m.insert("outlet".into(), BcKind::NormalStress(TimeSignal::sine(amp)));
    m.insert("wall_ends".into(), BcKind::Displacement(Profile::Zero));
    m
}

/// Names accepted by the `case` key.
pub const CASES: [&str; 2] = ["channel", "bulge"];

/// Preset geometry and boundary conditions.
pub fn case_preset(name: &str) -> Result<(GeometryCase, BTreeMap<String, BcKind>)> {
    match name {
        "channel" => Ok((GeometryCase::channel(), channel_bcs(15.0))),
        "bulge" => {
            let g = GeometryCase::bulge(1.5e-3);
            let mut bcs = BTreeMap::new();
            bcs.insert(
                "inlet".into(),
                BcKind::Velocity(Profile::Parabolic {
                    peak: -0.05,
                    center: 0.0,
                    half_width: 0.5 * g.lumen_height,
                    pulse: 0.75,
                }),
            );
            bcs.insert("outlet".into(), BcKind::ZeroStress);
            bcs.insert("wall_ends".into(), BcKind::Displacement(Profile::Zero));
            Ok((g, bcs))
        }
        _ => cfg_err(format!("unknown case '{name}' (expected one of {})", CASES.join(", "))),
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let (geometry, bcs) = case_preset("channel").expect("builtin preset");
        Self {
            case: "channel".into(),
            geometry,
            physics: PhysicsOptions::default(),
            bcs,
            t_step: 32,
            period: 1.0,
            periods: 1,
            levels: 3,
            ordering: OrderingKind::J1,
            solver: SolverConfig::default(),
            compare: None,
            out: "out".into(),
            seed: 0,
            dump_matrices: false,
            vtk: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().or_else(|_| cfg_err(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => cfg_err(format!("{key}: expected true or false, got '{v}'")),
    }
}

fn parse_profile(key: &str, words: &[&str]) -> Result<Profile> {
    let nums = |n: usize| -> Result<Vec<f64>> {
        if words.len() != n + 1 {
            return cfg_err(format!("{key}: '{}' takes {n} numbers", words[0]));
        }
        words[1..].iter().map(|w| parse::<f64>(key, w)).collect()
    };
    match words.first().copied() {
        Some("zero") => nums(0).map(|_| Profile::Zero),
        Some("constant") => nums(2).map(|v| Profile::Constant([v[0], v[1]])),
        Some("parabolic") => nums(4).map(|v| Profile::Parabolic {
            peak: v[0],
            center: v[1],
            half_width: v[2],
            pulse: v[3],
        }),
        _ => cfg_err(format!("{key}: profile must be zero, constant vx vy or parabolic peak center half_width pulse")),
    }
}

/// `None` removes the condition (`bc.<group> = none`).
fn parse_bc(key: &str, v: &str) -> Result<Option<BcKind>> {
    let words: Vec<&str> = v.split_whitespace().collect();
    let arity = |n: usize| {
        if words.len() == n {
            Ok(())
        } else {
            cfg_err(format!("{key}: '{}' takes {} arguments", words[0], n - 1))
        }
    };
    match words.first().copied() {
        Some("none") => arity(1).map(|_| None),
        Some("zero_stress") => arity(1).map(|_| Some(BcKind::ZeroStress)),
        Some("symmetry") => arity(1).map(|_| Some(BcKind::Symmetry)),
        Some("velocity") => Ok(Some(BcKind::Velocity(parse_profile(key, &words[1..])?))),
        Some("displacement") => Ok(Some(BcKind::Displacement(parse_profile(key, &words[1..])?))),
        Some("normal_stress") => {
            arity(4)?;
            Ok(Some(BcKind::NormalStress(TimeSignal {
                offset: parse(key, words[1])?,
                amplitude: parse(key, words[2])?,
                frequency: parse(key, words[3])?,
            })))
        }
        _ => cfg_err(format!(
            "{key}: expected none, zero_stress, symmetry, velocity <profile>, displacement <profile> \
             or normal_stress offset amplitude frequency"
        )),
    }
}

fn fmt_profile(p: &Profile) -> String {
    match *p {
        Profile::Zero => "zero".into(),
        Profile::Constant([a, b]) => format!("constant {a:?} {b:?}"),
        Profile::Parabolic {
            peak,
            center,
            half_width,
            pulse,
        } => format!("parabolic {peak:?} {center:?} {half_width:?} {pulse:?}"),
    }
}

fn fmt_bc(k: &BcKind) -> String {
    match k {
        BcKind::Velocity(p) => format!("velocity {}", fmt_profile(p)),
        BcKind::Displacement(p) => format!("displacement {}", fmt_profile(p)),
        BcKind::NormalStress(s) => format!("normal_stress {:?} {:?} {:?}", s.offset, s.amplitude, s.frequency),
        BcKind::ZeroStress => "zero_stress".into(),
        BcKind::Symmetry => "symmetry".into(),
    }
}

fn ordering_name(o: OrderingKind) -> &'static str {
    match o {
        OrderingKind::J => "j",
        OrderingKind::J1 => "j1",
        OrderingKind::J2 => "j2",
    }
}

fn cycle_name(c: CycleType) -> &'static str {
    match c {
        CycleType::V => "v",
        CycleType::F => "f",
        CycleType::W => "w",
    }
}

impl RunConfig {
    /// Every scalar key, in manifest order. `bc.<group>` keys come on top.
    pub fn keys() -> &'static [&'static str] {
        &[
            "case",
            "length",
            "lumen_height",
            "wall_thickness",
            "bulge_radius",
            "nx",
            "ny_fluid",
            "ny_wall",
            "rho_s",
            "rho_f",
            "mu",
            "young",
            "poisson",
            "theta",
            "supg",
            "supg_density",
            "frozen_geometry",
            "quad_order",
            "mesh_stiffness",
            "t_step",
            "period",
            "periods",
            "levels",
            "smoother",
            "ordering",
            "cycle",
            "pre",
            "post",
            "omega",
            "blocks",
            "schwarz",
            "gmres_restart",
            "gmres_max_iter",
            "gmres_rtol",
            "gmres_atol",
            "newton_rtol",
            "newton_atol",
            "newton_max_iter",
            "compare",
            "out",
            "seed",
            "dump_matrices",
            "vtk",
        ]
    }

    /// Time step Δt = period / t_step.
    pub fn dt(&self) -> f64 {
        self.period / self.t_step as f64
    }

    pub fn n_steps(&self) -> usize {
        self.t_step * self.periods
    }

    pub fn boundary_conditions(&self) -> Vec<BoundaryCondition> {
        self.bcs
            .iter()
            .map(|(g, k)| BoundaryCondition {
                group: g.clone(),
                kind: k.clone(),
            })
            .collect()
    }

    /// Applies one key. Does not validate cross-field consistency.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        if let Some(group) = key.strip_prefix("bc.") {
            if group.is_empty() {
                return cfg_err("bc.: missing group name");
            }
            match parse_bc(key, v)? {
                Some(k) => self.bcs.insert(group.to_string(), k),
                None => self.bcs.remove(group),
            };
            return Ok(());
        }
        let g = &mut self.geometry;
        let m = &mut self.physics.material;
        let s = &mut self.solver;
        match key {
            "case" => {
                let (geometry, bcs) = case_preset(v)?;
                self.case = v.to_string();
                self.geometry = geometry;
                self.bcs = bcs;
            }
            "length" => g.length = parse(key, v)?,
            "lumen_height" => g.lumen_height = parse(key, v)?,
            "wall_thickness" => g.wall_thickness = parse(key, v)?,
            "bulge_radius" => g.bulge_radius = parse(key, v)?,
            "nx" => g.nx = parse(key, v)?,
            "ny_fluid" => g.ny_fluid = parse(key, v)?,
            "ny_wall" => g.ny_wall = parse(key, v)?,
            "rho_s" => m.rho_s = parse(key, v)?,
            "rho_f" => m.rho_f = parse(key, v)?,
            "mu" => m.mu = parse(key, v)?,
            "young" => m.young = parse(key, v)?,
            "poisson" => m.poisson = parse(key, v)?,
            "theta" => self.physics.theta = parse(key, v)?,
            "supg" => self.physics.supg = parse_bool(key, v)?,
            "supg_density" => {
                self.physics.supg_density = match v {
                    "unit" => SupgDensity::Unit,
                    "literal" => SupgDensity::Literal,
                    _ => return cfg_err(format!("{key}: expected unit or literal, got '{v}'")),
                }
            }
            "frozen_geometry" => self.physics.frozen_geometry = parse_bool(key, v)?,
            "quad_order" => self.physics.quad_order = parse(key, v)?,
            "mesh_stiffness" => {
                let w: Vec<&str> = v.split_whitespace().collect();
                self.physics.stiffness = match w.as_slice() {
                    ["inverse_volume"] => MeshStiffness::InverseVolume,
                    ["distance", x, y, a, c] => MeshStiffness::Distance {
                        point: [parse(key, x)?, parse(key, y)?],
                        a: parse(key, a)?,
                        c: parse(key, c)?,
                    },
                    _ => return cfg_err(format!("{key}: expected inverse_volume or distance x y a c")),
                }
            }
            "t_step" => self.t_step = parse(key, v)?,
            "period" => self.period = parse(key, v)?,
            "periods" => self.periods = parse(key, v)?,
            "levels" => self.levels = parse(key, v)?,
            "smoother" => s.kind = v.parse()?,
            "ordering" => {
                self.ordering = match v.to_ascii_lowercase().as_str() {
                    "j" => OrderingKind::J,
                    "j1" => OrderingKind::J1,
                    "j2" => OrderingKind::J2,
                    _ => return cfg_err(format!("{key}: expected j, j1 or j2, got '{v}'")),
                }
            }
            "cycle" => s.cycle.cycle = v.parse()?,
            "pre" => s.cycle.pre = parse(key, v)?,
            "post" => s.cycle.post = parse(key, v)?,
            "omega" => s.cycle.omega = parse(key, v)?,
            "blocks" => s.elems_per_block = parse(key, v)?,
            "schwarz" => {
                s.schwarz = match v {
                    "additive" => SchwarzMode::Additive,
                    "multiplicative" => SchwarzMode::Multiplicative,
                    _ => return cfg_err(format!("{key}: expected additive or multiplicative, got '{v}'")),
                }
            }
            "gmres_restart" => s.krylov.restart = parse(key, v)?,
            "gmres_max_iter" => s.krylov.max_iters = parse(key, v)?,
            "gmres_rtol" => s.krylov.rel_tol = parse(key, v)?,
            "gmres_atol" => s.krylov.abs_tol = parse(key, v)?,
            "newton_rtol" => s.newton.rel_tol = parse(key, v)?,
            "newton_atol" => s.newton.abs_tol = parse(key, v)?,
            "newton_max_iter" => s.newton.max_iter = parse(key, v)?,
            "compare" => self.compare = if v == "none" { None } else { Some(v.parse()?) },
            "out" => self.out = v.to_string(),
            "seed" => self.seed = parse(key, v)?,
            "dump_matrices" => self.dump_matrices = parse_bool(key, v)?,
            "vtk" => self.vtk = parse_bool(key, v)?,
            _ => return cfg_err(format!("unknown key '{key}' (see the README for the list of keys)")),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. The ordering follows
    /// the smoother unless given explicitly. Does not validate.
    pub fn parse_str(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    /// File contents with `overrides` replacing or adding keys, validated.
    pub fn with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = parse_pairs(text)?;
        for (k, v) in overrides {
            match pairs.iter_mut().find(|(p, _)| p == k) {
                Some(slot) => slot.1 = v.clone(),
                None => pairs.push((k.clone(), v.clone())),
            }
        }
        let cfg = Self::from_pairs(&pairs)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some((_, v)) = pairs.iter().find(|(k, _)| k == "case") {
            cfg.set("case", v)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k != "case") {
            cfg.set(k, v)?;
        }
        if !pairs.iter().any(|(k, _)| k == "ordering") {
            cfg.ordering = cfg.solver.kind.ordering();
        }
        Ok(cfg)
    }

    /// Parses and validates.
    pub fn from_str_validated(text: &str) -> Result<Self> {
        let cfg = Self::parse_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let dt = self.dt();
        if !(dt.is_finite() && dt > 0.0) {
            return cfg_err(format!(
                "time step must be positive, got period/t_step = {}/{} (set period > 0 and t_step ≥ 1)",
                self.period, self.t_step
            ));
        }
        if self.periods == 0 {
            return cfg_err("periods must be at least 1");
        }
        let need = self.solver.kind.ordering();
        match (self.solver.kind, self.ordering) {
            (SolverKind::Direct, _) => {}
            (k, o) if o != need => {
                return cfg_err(format!(
                    "smoother={} requires ordering={}, got ordering={}",
                    k.name(),
                    ordering_name(need),
                    ordering_name(o)
                ))
            }
            _ => {}
        }
        if self.compare == Some(self.solver.kind) {
            return cfg_err(format!("compare={} repeats the main smoother", self.solver.kind.name()));
        }
        if self.levels == 0 {
            return cfg_err("levels must be at least 1");
        }
        let c = &self.solver.cycle;
        if c.pre + c.post == 0 {
            return cfg_err("pre and post smoothing steps cannot both be zero");
        }
        if !(c.omega > 0.0 && c.omega.is_finite()) {
            return cfg_err(format!("omega must be positive, got {}", c.omega));
        }
        if self.solver.elems_per_block == 0 {
            return cfg_err("blocks must be at least 1");
        }
        self.solver.krylov.validate().map_err(|e| FsiError::Config(e.to_string()))?;
        let n = &self.solver.newton;
        if n.max_iter == 0 || !(n.rel_tol > 0.0) || !(n.abs_tol >= 0.0) {
            return cfg_err("newton_max_iter must be ≥ 1, newton_rtol > 0 and newton_atol ≥ 0");
        }
        if !(0.0..=1.0).contains(&self.physics.theta) || self.physics.theta == 0.0 {
            return cfg_err(format!("theta must lie in (0, 1], got {}", self.physics.theta));
        }
        if !(1..=6).contains(&self.physics.quad_order) {
            return cfg_err(format!("quad_order must lie in 1..=6, got {}", self.physics.quad_order));
        }
        let m = &self.physics.material;
        if [m.rho_s, m.rho_f, m.mu, m.young].iter().any(|v| !(*v > 0.0)) {
            return cfg_err("rho_s, rho_f, mu and young must be positive");
        }
        if self.out.is_empty() {
            return cfg_err("out must not be empty");
        }
        Ok(())
    }

    /// Every effective value as `key = value`; parsing it back gives an equal config.
    pub fn manifest(&self) -> String {
        let (g, p, s) = (&self.geometry, &self.physics, &self.solver);
        let m = &p.material;
        let mut o = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(o, "{k} = {v}");
        };
        put("case", self.case.clone());
        put("length", format!("{:?}", g.length));
        put("lumen_height", format!("{:?}", g.lumen_height));
        put("wall_thickness", format!("{:?}", g.wall_thickness));
        put("bulge_radius", format!("{:?}", g.bulge_radius));
        put("nx", g.nx.to_string());
        put("ny_fluid", g.ny_fluid.to_string());
        put("ny_wall", g.ny_wall.to_string());
        put("rho_s", format!("{:?}", m.rho_s));
        put("rho_f", format!("{:?}", m.rho_f));
        put("mu", format!("{:?}", m.mu));
        put("young", format!("{:?}", m.young));
        put("poisson", format!("{:?}", m.poisson));
        put("theta", format!("{:?}", p.theta));
        put("supg", p.supg.to_string());
        put(
            "supg_density",
            match p.supg_density {
                SupgDensity::Unit => "unit",
                SupgDensity::Literal => "literal",
            }
            .into(),
        );
        put("frozen_geometry", p.frozen_geometry.to_string());
        put("quad_order", p.quad_order.to_string());
        put(
            "mesh_stiffness",
            match p.stiffness {
                MeshStiffness::InverseVolume => "inverse_volume".into(),
                MeshStiffness::Distance { point, a, c } => {
                    format!("distance {:?} {:?} {a:?} {c:?}", point[0], point[1])
                }
            },
        );
        put("t_step", self.t_step.to_string());
        put("period", format!("{:?}", self.period));
        put("periods", self.periods.to_string());
        put("levels", self.levels.to_string());
        put("smoother", s.kind.name().into());
        put("ordering", ordering_name(self.ordering).into());
        put("cycle", cycle_name(s.cycle.cycle).into());
        put("pre", s.cycle.pre.to_string());
        put("post", s.cycle.post.to_string());
        put("omega", format!("{:?}", s.cycle.omega));
        put("blocks", s.elems_per_block.to_string());
        put(
            "schwarz",
            match s.schwarz {
                SchwarzMode::Additive => "additive",
                SchwarzMode::Multiplicative => "multiplicative",
            }
            .into(),
        );
        put("gmres_restart", s.krylov.restart.to_string());
        put("gmres_max_iter", s.krylov.max_iters.to_string());
        put("gmres_rtol", format!("{:?}", s.krylov.rel_tol));
        put("gmres_atol", format!("{:?}", s.krylov.abs_tol));
        put("newton_rtol", format!("{:?}", s.newton.rel_tol));
        put("newton_atol", format!("{:?}", s.newton.abs_tol));
        put("newton_max_iter", s.newton.max_iter.to_string());
        put("compare", self.compare.map_or("none", |k| k.name()).into());
        put("out", self.out.clone());
        put("seed", self.seed.to_string());
        put("dump_matrices", self.dump_matrices.to_string());
        put("vtk", self.vtk.to_string());
        // presets may carry groups the manifest must clear explicitly
        let preset = case_preset(&self.case).map(|p| p.1).unwrap_or_default();
        for g in preset.keys().filter(|g| !self.bcs.contains_key(*g)) {
            put(&format!("bc.{g}"), "none".into());
        }
        for (g, k) in &self.bcs {
            put(&format!("bc.{g}"), fmt_bc(k));
        }
        o
    }
}
