//! Physical and dimensionless parameters, numerics settings, and the
//! nondimensionalization that links them.
//!
//! Lengths along the channel are scaled by the channel length ℓ, heights by the
//! undeformed height h0, and time by the flow time scale h0·ℓ/q̂0. Four groups
//! survive: the Strouhal number `St` (wall inertia), the compliance number
//! `beta` (fluid-structure coupling strength), the effective Reynolds number
//! `Re` (flow inertia), and the dimensionless horizon `Delta` = δ/ℓ.

use crate::error::{Error, Result};

/// Dimensional inputs, SI units, per unit channel width.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// ℓ [m]
    pub channel_length: f64,
    /// h0 [m]
    pub undeformed_height: f64,
    /// hs [m]
    pub wall_thickness: f64,
    /// ρs [kg/m³]
    pub wall_density: f64,
    /// ρf [kg/m³]
    pub fluid_density: f64,
    /// μf [Pa·s]
    pub fluid_viscosity: f64,
    /// E_Y [Pa]
    pub youngs_modulus: f64,
    /// B [N·m], flexural rigidity per unit width
    pub flexural_rigidity: f64,
    /// q̂0 [m²/s]
    pub inlet_flow_rate: f64,
    /// σ_cr [Pa]
    pub material_strength: f64,
    /// δ [m]
    pub horizon: f64,
}

/// Relative mismatch tolerated between a supplied B and E_Y·hs³/12.
const RIGIDITY_CONSISTENCY: f64 = 0.01;

impl PhysicalParams {
    /// Flexural rigidity of a plate strip, B = E_Y·hs³/12.
    pub fn rigidity_from_modulus(youngs_modulus: f64, wall_thickness: f64) -> f64 {
        youngs_modulus * wall_thickness.powi(3) / 12.0
    }

    /// Checks positivity of every field and the B/E_Y consistency.
    pub fn validate(&self) -> Result<()> {
        let fields: [(&'static str, f64); 11] = [
            ("channel_length", self.channel_length),
            ("undeformed_height", self.undeformed_height),
            ("wall_thickness", self.wall_thickness),
            ("wall_density", self.wall_density),
            ("fluid_density", self.fluid_density),
            ("fluid_viscosity", self.fluid_viscosity),
            ("youngs_modulus", self.youngs_modulus),
            ("flexural_rigidity", self.flexural_rigidity),
            ("inlet_flow_rate", self.inlet_flow_rate),
            ("material_strength", self.material_strength),
            ("horizon", self.horizon),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be strictly positive, got {value}"),
                });
            }
        }
        let implied = Self::rigidity_from_modulus(self.youngs_modulus, self.wall_thickness);
        if ((self.flexural_rigidity - implied) / implied).abs() > RIGIDITY_CONSISTENCY {
            return Err(Error::InvalidParameter {
                field: "flexural_rigidity",
                reason: format!(
                    "B = {} disagrees with E_Y·hs³/12 = {implied} by more than 1%",
                    self.flexural_rigidity
                ),
            });
        }
        Ok(())
    }

    /// Advisory diagnostics that do not invalidate the parameters.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let aspect = self.undeformed_height / self.channel_length;
        if aspect > 0.1 {
            out.push(format!(
                "h0/ℓ = {aspect} exceeds 0.1; the lubrication approximation may be inaccurate"
            ));
        }
        out
    }
}

/// The four governing dimensionless groups.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    pub St: f64,
    pub beta: f64,
    pub Re: f64,
    pub Delta: f64,
}

impl DimensionlessParams {
    #[allow(non_snake_case)]
    pub fn new(St: f64, beta: f64, Re: f64, Delta: f64) -> Result<Self> {
        let p = Self {
            St,
            beta,
            Re,
            Delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in [("St", self.St), ("beta", self.beta), ("Re", self.Re)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and non-negative, got {value}"),
                });
            }
        }
        if !(self.Delta > 0.0 && self.Delta < 0.5) {
            return Err(Error::InvalidParameter {
                field: "Delta",
                reason: format!("must lie in (0, 0.5), got {}", self.Delta),
            });
        }
        Ok(())
    }
}

/// Maps dimensional inputs to (St, beta, Re, Delta).
pub fn nondimensionalize(p: &PhysicalParams) -> Result<DimensionlessParams> {
    p.validate()?;
    let l = p.channel_length;
    let h0 = p.undeformed_height;
    let q0 = p.inlet_flow_rate;
    let b = p.flexural_rigidity;
    let mass_per_area = p.wall_density * p.wall_thickness;
    let st = mass_per_area * q0 * q0 * l * l / (b * h0 * h0);
    let beta = p.fluid_viscosity * q0 * l.powi(5) / (b * h0.powi(4));
    let re = h0 * p.fluid_density * q0 / (l * p.fluid_viscosity);
    let delta = p.horizon / l;
    DimensionlessParams::new(st, beta, re, delta)
}

/// Dimensionless curvature threshold C_cr = 2ℓ²σ_cr / (E_Y·h0·hs).
pub fn critical_curvature(p: &PhysicalParams) -> Result<f64> {
    p.validate()?;
    Ok(critical_curvature_raw(
        p.channel_length,
        p.material_strength,
        p.youngs_modulus,
        p.undeformed_height,
        p.wall_thickness,
    ))
}

/// Unvalidated form of [`critical_curvature`]; accepts σ_cr = 0.
pub fn critical_curvature_raw(
    channel_length: f64,
    material_strength: f64,
    youngs_modulus: f64,
    undeformed_height: f64,
    wall_thickness: f64,
) -> f64 {
    2.0 * channel_length * channel_length * material_strength
        / (youngs_modulus * undeformed_height * wall_thickness)
}

/// How the pressure is updated between fixed-point iterations within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingScheme {
    /// P ← P + ω·(P_new − P), with ω halved when the residual keeps growing.
    Relaxed,
    /// Quasi-Newton update using the linearized flow response to wall
    /// acceleration (the fluid added-mass operator). Same fixed point as
    /// `Relaxed`, but stable when β·Re/St is large.
    AddedMass,
}

impl CouplingScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            CouplingScheme::Relaxed => "relaxed",
            CouplingScheme::AddedMass => "added_mass",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relaxed" => Some(CouplingScheme::Relaxed),
            "added_mass" => Some(CouplingScheme::AddedMass),
            _ => None,
        }
    }
}

/// Discretization and solver controls.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericsConfig {
    pub num_particles: usize,
    pub dt: f64,
    /// Newmark velocity weight φ₁.
    pub phi1: f64,
    /// Newmark displacement weight φ₂.
    pub phi2: f64,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iters: usize,
    pub steady_tol: f64,
    pub series_rel_tol: f64,
    pub relaxation_factor: f64,
    pub coupling: CouplingScheme,
    /// Optional Strouhal number used only by steady-state runs.
    pub st_override: Option<f64>,
    /// Steps between recorded history samples.
    pub sample_stride: usize,
    /// Step budget for steady-state runs.
    pub max_steps: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            num_particles: 201,
            dt: 1e-6,
            phi1: 1.0,
            phi2: 0.5625,
            fixed_point_tol: 1e-5,
            fixed_point_max_iters: 100,
            steady_tol: 1e-5,
            series_rel_tol: 1e-14,
            relaxation_factor: 1.0,
            coupling: CouplingScheme::AddedMass,
            st_override: None,
            sample_stride: 100,
            max_steps: 10_000_000,
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(Error::InvalidParameter { field, reason });
        if self.num_particles < 5 {
            return bad("num_particles", format!("need at least 5, got {}", self.num_particles));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        if self.phi1 < 0.5 {
            return bad("phi1", format!("must be >= 1/2 for stability, got {}", self.phi1));
        }
        if self.phi2 < 0.25 {
            return bad("phi2", format!("must be >= 1/4 for stability, got {}", self.phi2));
        }
        if !(self.fixed_point_tol > 0.0) {
            return bad("fixed_point_tol", format!("must be positive, got {}", self.fixed_point_tol));
        }
        if self.fixed_point_max_iters == 0 {
            return bad("fixed_point_max_iters", "must be at least 1".into());
        }
        if !(self.steady_tol > 0.0) {
            return bad("steady_tol", format!("must be positive, got {}", self.steady_tol));
        }
        if !(self.series_rel_tol > 0.0 && self.series_rel_tol < 1.0) {
            return bad("series_rel_tol", format!("must lie in (0, 1), got {}", self.series_rel_tol));
        }
        if !(self.relaxation_factor > 0.0 && self.relaxation_factor <= 1.0) {
            return bad(
                "relaxation_factor",
                format!("must lie in (0, 1], got {}", self.relaxation_factor),
            );
        }
        if let Some(st) = self.st_override {
            if !(st >= 0.0 && st.is_finite()) {
                return bad("st_override", format!("must be non-negative, got {st}"));
            }
        }
        if self.sample_stride == 0 {
            return bad("sample_stride", "must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PhysicalParams {
        let e = 1e6;
        let hs = 1e-4;
        PhysicalParams {
            channel_length: 1e-3,
            undeformed_height: 1e-4,
            wall_thickness: hs,
            wall_density: 1e3,
            fluid_density: 1e3,
            fluid_viscosity: 1e-3,
            youngs_modulus: e,
            flexural_rigidity: PhysicalParams::rigidity_from_modulus(e, hs),
            inlet_flow_rate: 1e-5,
            material_strength: 1e5,
            horizon: 1e-3 / 120.0,
        }
    }

    #[test]
    fn reynolds_number_from_lubrication_scaling() {
        let d = nondimensionalize(&sample()).unwrap();
        assert!((d.Re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn horizon_ratio() {
        let d = nondimensionalize(&sample()).unwrap();
        assert!((d.Delta - 1.0 / 120.0).abs() < 1e-15);
        assert!((d.Delta - 0.008333).abs() < 1e-6);
    }

    #[test]
    fn groups_vanish_with_flow_rate() {
        let mut p = sample();
        p.inlet_flow_rate = 1e-200;
        let d = nondimensionalize(&p).unwrap();
        assert!(d.St < 1e-300 && d.beta < 1e-150 && d.Re < 1e-150);
    }

    #[test]
    fn groups_match_formulas() {
        let p = sample();
        let d = nondimensionalize(&p).unwrap();
        let b = p.flexural_rigidity;
        let st = p.wall_density * p.wall_thickness * 1e-10 * 1e-6 / (b * 1e-8);
        let beta = 1e-3 * 1e-5 * 1e-15 / (b * 1e-16);
        assert!((d.St - st).abs() <= 1e-12 * st);
        assert!((d.beta - beta).abs() <= 1e-12 * beta);
    }

    #[test]
    fn critical_curvature_value_and_scaling() {
        let p = sample();
        assert!((critical_curvature(&p).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(critical_curvature_raw(1e-3, 0.0, 1e6, 1e-4, 1e-4), 0.0);
        let base = critical_curvature_raw(1e-3, 1e5, 1e6, 1e-4, 1e-4);
        let doubled = critical_curvature_raw(2e-3, 1e5, 1e6, 1e-4, 1e-4);
        assert!((doubled / base - 4.0).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_field_is_named() {
        let mut p = sample();
        p.fluid_viscosity = 0.0;
        let err = nondimensionalize(&p).unwrap_err().to_string();
        assert!(err.contains("fluid_viscosity"), "{err}");
    }

    #[test]
    fn rigidity_consistency_is_checked() {
        let mut p = sample();
        p.flexural_rigidity *= 1.005;
        assert!(p.validate().is_ok());
        p.flexural_rigidity *= 1.05;
        assert!(p.validate().is_err());
    }

    #[test]
    fn aspect_ratio_warning() {
        let mut p = sample();
        assert!(p.warnings().is_empty());
        p.undeformed_height = 2e-4;
        assert_eq!(p.warnings().len(), 1);
    }

    #[test]
    fn numerics_defaults() {
        let c = NumericsConfig::default();
        c.validate().unwrap();
        assert_eq!((c.phi1, c.phi2, c.dt), (1.0, 0.5625, 1e-6));
        assert!(c.num_particles >= 201);
        let mut bad = c.clone();
        bad.phi2 = 0.2;
        assert!(bad.validate().is_err());
    }
}
