//! Configuration files, CSV output, and run metadata.
//!
//! A configuration is a list of `key = value` lines; `#` starts a comment.
//! Model parameters are given either as the four dimensionless groups
//! (`St`, `beta`, `Re`, `Delta`) or as the eleven physical quantities, never
//! both. Numerics and sweep-range keys are optional. The metadata file
//! written next to every output uses the same syntax, so it can be fed back
//! as a configuration.

use crate::beam::BeamState;
use crate::config::{
    critical_curvature, nondimensionalize, CouplingScheme, DimensionlessParams, NumericsConfig,
    PhysicalParams,
};
use crate::damage::{CurvatureField, DamageComparison, DividingLineFit, SweepGrid};
use crate::dispersion::DispersionPoint;
use crate::error::{Error, Result};
use crate::lubrication::FlowState;
use crate::solver::{SolverReport, TimeHistory};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const DIMENSIONLESS_KEYS: [&str; 4] = ["St", "beta", "Re", "Delta"];

pub const PHYSICAL_KEYS: [&str; 11] = [
    "channel_length",
    "undeformed_height",
    "wall_thickness",
    "wall_density",
    "fluid_density",
    "fluid_viscosity",
    "youngs_modulus",
    "flexural_rigidity",
    "inlet_flow_rate",
    "material_strength",
    "horizon",
];

const NUMERICS_KEYS: [&str; 13] = [
    "num_particles",
    "dt",
    "phi1",
    "phi2",
    "fixed_point_tol",
    "fixed_point_max_iters",
    "steady_tol",
    "series_rel_tol",
    "relaxation_factor",
    "coupling",
    "st_override",
    "sample_stride",
    "max_steps",
];

const RANGE_KEYS: [&str; 14] = [
    "k_min",
    "k_max",
    "k_points",
    "omega_min",
    "omega_max",
    "omega_points",
    "st_min",
    "st_max",
    "st_points",
    "beta_min",
    "beta_max",
    "beta_points",
    "t_end",
    "C_cr",
];

/// Model parameters as supplied.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Physical(PhysicalParams),
    Dimensionless(DimensionlessParams),
}

/// Optional grids and limits used by individual subcommands.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ranges {
    pub k: Option<(f64, f64, usize)>,
    pub omega: Option<(f64, f64, usize)>,
    pub st: Option<(f64, f64, usize)>,
    pub beta: Option<(f64, f64, usize)>,
    pub t_end: Option<f64>,
    /// Dimensionless curvature threshold; derived from σ_cr for physical input.
    pub c_cr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub params: DimensionlessParams,
    pub numerics: NumericsConfig,
    pub ranges: Ranges,
    pub warnings: Vec<String>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// `key = value` pairs in file order; later duplicates are rejected.
fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(config_err(format!("line {}: empty key or value", lineno + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(config_err(format!("line {}: duplicate key `{k}`", lineno + 1)));
        }
    }
    Ok(out)
}

fn is_known(key: &str) -> bool {
    DIMENSIONLESS_KEYS.contains(&key)
        || PHYSICAL_KEYS.contains(&key)
        || NUMERICS_KEYS.contains(&key)
        || RANGE_KEYS.contains(&key)
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.0
            .get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| config_err(format!("malformed value for `{key}`: `{v}` is not a number")))
            })
            .transpose()
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.0
            .get(key)
            .map(|v| {
                // Accept integral values written in exponent form, e.g. 1e6.
                v.parse::<usize>().or_else(|_| match v.parse::<f64>() {
                    Ok(f) if f >= 0.0 && f.fract() == 0.0 && f <= usize::MAX as f64 => Ok(f as usize),
                    _ => Err(config_err(format!(
                        "malformed value for `{key}`: `{v}` is not a non-negative integer"
                    ))),
                })
            })
            .transpose()
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| config_err(format!("missing required key `{key}`")))
    }

    fn range(&self, prefix: &str) -> Result<Option<(f64, f64, usize)>> {
        let (lo, hi, n) = (
            format!("{prefix}_min"),
            format!("{prefix}_max"),
            format!("{prefix}_points"),
        );
        let parts = (self.f64(&lo)?, self.f64(&hi)?, self.usize(&n)?);
        match parts {
            (None, None, None) => Ok(None),
            (Some(a), Some(b), Some(c)) => Ok(Some((a, b, c))),
            _ => Err(config_err(format!(
                "range `{prefix}` needs all of `{lo}`, `{hi}`, `{n}`"
            ))),
        }
    }
}

/// Parses configuration text, applying `overrides` (`key=value`) afterwards.
pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut pairs = parse_pairs(text)?;
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| config_err(format!("override `{o}` is not of the form key=value")))?;
        pairs.insert(k.trim().to_string(), v.trim().to_string());
    }
    if let Some(bad) = pairs.keys().find(|k| !is_known(k)) {
        return Err(config_err(format!("unknown key `{bad}`")));
    }
    let v = Values(pairs);

    let any_dimless = DIMENSIONLESS_KEYS.iter().any(|k| v.has(k));
    let any_physical = PHYSICAL_KEYS.iter().any(|k| v.has(k));
    let missing = |keys: &[&str]| -> Vec<String> {
        keys.iter().filter(|k| !v.has(k)).map(|k| format!("`{k}`")).collect()
    };
    let mut warnings = Vec::new();
    let (model, params, derived_c_cr) = match (any_dimless, any_physical) {
        (true, true) => {
            return Err(config_err(
                "give either the dimensionless groups or the physical parameters, not both",
            ))
        }
        (false, true) => {
            let m = missing(&PHYSICAL_KEYS);
            if !m.is_empty() {
                return Err(config_err(format!("missing required keys: {}", m.join(", "))));
            }
            let p = PhysicalParams {
                channel_length: v.required("channel_length")?,
                undeformed_height: v.required("undeformed_height")?,
                wall_thickness: v.required("wall_thickness")?,
                wall_density: v.required("wall_density")?,
                fluid_density: v.required("fluid_density")?,
                fluid_viscosity: v.required("fluid_viscosity")?,
                youngs_modulus: v.required("youngs_modulus")?,
                flexural_rigidity: v.required("flexural_rigidity")?,
                inlet_flow_rate: v.required("inlet_flow_rate")?,
                material_strength: v.required("material_strength")?,
                horizon: v.required("horizon")?,
            };
            let d = nondimensionalize(&p)?;
            warnings.extend(p.warnings());
            let c_cr = critical_curvature(&p)?;
            (ModelParams::Physical(p), d, Some(c_cr))
        }
        _ => {
            let m = missing(&DIMENSIONLESS_KEYS);
            if !m.is_empty() {
                return Err(config_err(format!(
                    "missing required keys: {} (or give all physical parameters: {})",
                    m.join(", "),
                    PHYSICAL_KEYS.join(", ")
                )));
            }
            let d = DimensionlessParams::new(
                v.required("St")?,
                v.required("beta")?,
                v.required("Re")?,
                v.required("Delta")?,
            )?;
            (ModelParams::Dimensionless(d), d, None)
        }
    };

    let mut n = NumericsConfig::default();
    if let Some(x) = v.usize("num_particles")? {
        n.num_particles = x;
    }
    if let Some(x) = v.f64("dt")? {
        n.dt = x;
    }
    if let Some(x) = v.f64("phi1")? {
        n.phi1 = x;
    }
    if let Some(x) = v.f64("phi2")? {
        n.phi2 = x;
    }
    if let Some(x) = v.f64("fixed_point_tol")? {
        n.fixed_point_tol = x;
    }
    if let Some(x) = v.usize("fixed_point_max_iters")? {
        n.fixed_point_max_iters = x;
    }
    if let Some(x) = v.f64("steady_tol")? {
        n.steady_tol = x;
    }
    if let Some(x) = v.f64("series_rel_tol")? {
        n.series_rel_tol = x;
    }
    if let Some(x) = v.f64("relaxation_factor")? {
        n.relaxation_factor = x;
    }
    if let Some(s) = v.0.get("coupling") {
        n.coupling = CouplingScheme::parse(s).ok_or_else(|| {
            config_err(format!(
                "malformed value for `coupling`: `{s}` (expected `relaxed` or `added_mass`)"
            ))
        })?;
    }
    n.st_override = v.f64("st_override")?;
    if let Some(x) = v.usize("sample_stride")? {
        n.sample_stride = x;
    }
    if let Some(x) = v.usize("max_steps")? {
        n.max_steps = x;
    }
    n.validate()?;

    let c_cr = match (v.f64("C_cr")?, derived_c_cr) {
        (Some(_), Some(_)) => {
            return Err(config_err(
                "`C_cr` is derived from material_strength for physical input; do not set both",
            ))
        }
        (a, b) => a.or(b),
    };
    let ranges = Ranges {
        k: v.range("k")?,
        omega: v.range("omega")?,
        st: v.range("st")?,
        beta: v.range("beta")?,
        t_end: v.f64("t_end")?,
        c_cr,
    };
    Ok(RunConfig {
        model,
        params,
        numerics: n,
        ranges,
        warnings,
    })
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, overrides)
}

/// Effective configuration in re-readable form. `comments` become `#` lines.
pub fn metadata_text(cfg: &RunConfig, comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(s, "# {line}");
        }
    }
    match &cfg.model {
        ModelParams::Physical(p) => {
            let _ = writeln!(
                s,
                "# dimensionless groups: St = {}, beta = {}, Re = {}, Delta = {}",
                cfg.params.St, cfg.params.beta, cfg.params.Re, cfg.params.Delta
            );
            for (k, val) in [
                ("channel_length", p.channel_length),
                ("undeformed_height", p.undeformed_height),
                ("wall_thickness", p.wall_thickness),
                ("wall_density", p.wall_density),
                ("fluid_density", p.fluid_density),
                ("fluid_viscosity", p.fluid_viscosity),
                ("youngs_modulus", p.youngs_modulus),
                ("flexural_rigidity", p.flexural_rigidity),
                ("inlet_flow_rate", p.inlet_flow_rate),
                ("material_strength", p.material_strength),
                ("horizon", p.horizon),
            ] {
                let _ = writeln!(s, "{k} = {val}");
            }
        }
        ModelParams::Dimensionless(d) => {
            let _ = writeln!(s, "St = {}", d.St);
            let _ = writeln!(s, "beta = {}", d.beta);
            let _ = writeln!(s, "Re = {}", d.Re);
            let _ = writeln!(s, "Delta = {}", d.Delta);
        }
    }
    let n = &cfg.numerics;
    let _ = writeln!(s, "num_particles = {}", n.num_particles);
    let _ = writeln!(s, "dt = {}", n.dt);
    let _ = writeln!(s, "phi1 = {}", n.phi1);
    let _ = writeln!(s, "phi2 = {}", n.phi2);
    let _ = writeln!(s, "fixed_point_tol = {}", n.fixed_point_tol);
    let _ = writeln!(s, "fixed_point_max_iters = {}", n.fixed_point_max_iters);
    let _ = writeln!(s, "steady_tol = {}", n.steady_tol);
    let _ = writeln!(s, "series_rel_tol = {}", n.series_rel_tol);
    let _ = writeln!(s, "relaxation_factor = {}", n.relaxation_factor);
    let _ = writeln!(s, "coupling = {}", n.coupling.as_str());
    if let Some(st) = n.st_override {
        let _ = writeln!(s, "st_override = {st}");
    }
    let _ = writeln!(s, "sample_stride = {}", n.sample_stride);
    let _ = writeln!(s, "max_steps = {}", n.max_steps);
    let r = &cfg.ranges;
    for (prefix, range) in [("k", r.k), ("omega", r.omega), ("st", r.st), ("beta", r.beta)] {
        if let Some((lo, hi, pts)) = range {
            let _ = writeln!(s, "{prefix}_min = {lo}");
            let _ = writeln!(s, "{prefix}_max = {hi}");
            let _ = writeln!(s, "{prefix}_points = {pts}");
        }
    }
    if let Some(t) = r.t_end {
        let _ = writeln!(s, "t_end = {t}");
    }
    if let (Some(c), ModelParams::Dimensionless(_)) = (r.c_cr, &cfg.model) {
        let _ = writeln!(s, "C_cr = {c}");
    }
    s
}

pub fn write_metadata(path: &Path, cfg: &RunConfig, comments: &[String]) -> Result<()> {
    fs::write(path, metadata_text(cfg, comments))?;
    Ok(())
}

/// X, H, Q, P per node.
pub fn steady_csv(x: &[f64], beam: &BeamState, flow: &FlowState) -> String {
    let mut s = String::from("X,H,Q,P\n");
    for k in 0..x.len() {
        let _ = writeln!(s, "{},{},{},{}", x[k], beam.h[k], flow.q[k], flow.p[k]);
    }
    s
}

/// One row per sample and node: T, X, H, Q, P.
pub fn history_csv(h: &TimeHistory) -> String {
    let mut s = String::from("T,X,H,Q,P\n");
    for (i, t) in h.sample_times.iter().enumerate() {
        for (k, x) in h.positions.iter().enumerate() {
            let _ = writeln!(
                s,
                "{t},{x},{},{},{}",
                h.h_snapshots[i][k], h.q_snapshots[i][k], h.p_snapshots[i][k]
            );
        }
    }
    s
}

/// T, max bond curvature, mass-balance residual per sample.
pub fn history_summary_csv(h: &TimeHistory) -> String {
    let mut s = String::from("T,max_C_bond,mass_balance\n");
    for i in 0..h.len() {
        let _ = writeln!(
            s,
            "{},{},{}",
            h.sample_times[i], h.max_curvature_trace[i], h.mass_balance[i]
        );
    }
    s
}

/// k, Re ω, Im ω, v_p.
pub fn dispersion_csv(points: &[DispersionPoint]) -> String {
    let mut s = String::from("k,re_omega,im_omega,v_p\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.k.re, p.omega.re, p.omega.im, p.phase_velocity);
    }
    s
}

/// ω, Re k, Im k.
pub fn damping_csv(points: &[DispersionPoint]) -> String {
    let mut s = String::from("omega,re_k,im_k\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", p.omega.re, p.k.re, p.k.im);
    }
    s
}

/// T, X, C over the sampled transient.
pub fn curvature_csv(fields: &[CurvatureField], x: &[f64]) -> String {
    let mut s = String::from("T,X,C\n");
    for f in fields {
        for (x, c) in x.iter().zip(&f.particle) {
            let _ = writeln!(s, "{},{x},{c}", f.time);
        }
    }
    s
}

/// St, beta, Re, Delta, max_C_fsi, max_C_static, regime; failed cells carry
/// NaN maxima and the regime `failed`.
pub fn sweep_csv(grid: &SweepGrid) -> String {
    let mut s = String::from("St,beta,Re,Delta,max_C_fsi,max_C_static,regime\n");
    for c in &grid.cells {
        match &c.comparison {
            Ok(d) if d.failure.is_none() => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    c.st,
                    c.beta,
                    grid.re,
                    grid.delta,
                    d.max_c_fsi,
                    d.max_c_static,
                    d.regime.as_str()
                );
            }
            _ => {
                let _ = writeln!(s, "{},{},{},{},NaN,NaN,failed", c.st, c.beta, grid.re, grid.delta);
            }
        }
    }
    s
}

pub fn report_text(r: &SolverReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "steps_taken = {}", r.steps_taken);
    let _ = writeln!(s, "iterations_mean = {}", r.iterations.mean());
    let _ = writeln!(s, "iterations_min = {}", r.iterations.min);
    let _ = writeln!(s, "iterations_max = {}", r.iterations.max);
    let _ = writeln!(s, "final_residual = {}", r.final_residual);
    let _ = writeln!(s, "steady_reached = {}", r.steady_reached);
    if let Some(t) = r.steady_time {
        let _ = writeln!(s, "steady_time = {t}");
    }
    let _ = writeln!(s, "max_mass_balance = {}", r.max_mass_balance);
    if let Some(f) = &r.failure {
        let _ = writeln!(s, "failure = {f}");
    }
    s
}

pub fn damage_text(d: &DamageComparison, outcome: Option<(f64, &str)>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "max_C_fsi = {}", d.max_c_fsi);
    let _ = writeln!(s, "max_C_fsi_time = {}", d.max_c_fsi_time);
    let _ = writeln!(s, "max_C_fsi_node = {}", d.max_c_fsi_node);
    let _ = writeln!(s, "max_C_static = {}", d.max_c_static);
    let _ = writeln!(s, "regime = {}", d.regime.as_str());
    if let Some((c_cr, verdict)) = outcome {
        let _ = writeln!(s, "C_cr = {c_cr}");
        let _ = writeln!(s, "outcome = {verdict}");
    }
    if let Some(f) = &d.failure {
        let _ = writeln!(s, "failure = {f}");
    }
    s
}

pub fn fit_text(fit: &DividingLineFit, points: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "boundary_points = {points}");
    let _ = writeln!(s, "slope = {}", fit.slope);
    let _ = writeln!(s, "intercept = {}", fit.intercept);
    let _ = writeln!(s, "rms_residual = {}", fit.rms_residual);
    let _ = writeln!(s, "slope_stderr = {}", fit.slope_stderr);
    let _ = writeln!(s, "intercept_stderr = {}", fit.intercept_stderr);
    s
}

/// `lo:hi:n` as used by the range flags.
pub fn parse_range(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(config_err(format!("range `{s}` must be lo:hi:points")));
    }
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|_| config_err(format!("range `{s}`: `{p}` is not a number")))
    };
    let n = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|_| config_err(format!("range `{s}`: `{}` is not a count", parts[2])))?;
    Ok((num(parts[0])?, num(parts[1])?, n))
}

/// Logarithmically spaced values, both ends included.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}
