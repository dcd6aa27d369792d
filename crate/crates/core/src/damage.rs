//! Nonlocal curvature fields, bond curvature maxima, the transient-versus-
//! static loading comparison, and the (St, β) failure-regime map.
//!
//! No bonds are broken here: curvatures are evaluated so that a material
//! threshold C_cr can be applied after the fact.

use crate::beam::{apply_mirror_bc, assemble_stiffness, nonlocal_curvature, static_solve};
use crate::config::{DimensionlessParams, NumericsConfig};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::solver::{Simulation, TimeHistory};
use rayon::prelude::*;

/// |C(x)| = |(1/Δ) Σ 𝒱/Ξ² (H_i − H_k)| at every real particle, with mirror ghosts.
pub fn particle_curvature(h: &[f64], grid: &Grid) -> Vec<f64> {
    let ext = apply_mirror_bc(h, grid);
    nonlocal_curvature(&ext, grid)
        .into_iter()
        .map(f64::abs)
        .collect()
}

/// Absolute particle curvatures at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub particle: Vec<f64>,
    pub time: f64,
    horizon_ratio: usize,
}

/// A bond curvature value and the two particles it joins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondMax {
    pub value: f64,
    pub bond: (usize, usize),
}

impl CurvatureField {
    pub fn from_height(h: &[f64], grid: &Grid, time: f64) -> Self {
        Self {
            particle: particle_curvature(h, grid),
            time,
            horizon_ratio: grid.horizon_ratio(),
        }
    }

    /// Wraps precomputed particle curvatures; absolute values are taken.
    pub fn from_particle_values(values: Vec<f64>, horizon_ratio: usize, time: f64) -> Self {
        Self {
            particle: values.into_iter().map(f64::abs).collect(),
            time,
            horizon_ratio,
        }
    }

    pub fn horizon_ratio(&self) -> usize {
        self.horizon_ratio
    }

    /// C(x, x′) = (|C(x)| + |C(x′)|)/2.
    pub fn bond(&self, a: usize, b: usize) -> f64 {
        0.5 * (self.particle[a] + self.particle[b])
    }

    /// Largest bond curvature among pairs of real particles within one horizon.
    pub fn max_bond(&self) -> BondMax {
        let n = self.particle.len();
        let mut best = BondMax {
            value: 0.0,
            bond: (0, 0),
        };
        for k in 0..n {
            for o in 1..=self.horizon_ratio {
                let j = k + o;
                if j >= n {
                    break;
                }
                let c = self.bond(k, j);
                if c > best.value {
                    best = BondMax {
                        value: c,
                        bond: (k, j),
                    };
                }
            }
        }
        best
    }

    /// Node index of the largest particle curvature.
    pub fn argmax(&self) -> usize {
        self.particle
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0
    }
}

/// Maximum of C(x, x′) over all bonds.
pub fn max_bond_curvature(field: &CurvatureField) -> f64 {
    field.max_bond().value
}

/// Which loading produced the larger peak bond curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    TransientDominated,
    StaticDominated,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::TransientDominated => "transient-dominated",
            Regime::StaticDominated => "static-dominated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DamageComparison {
    pub params: DimensionlessParams,
    /// Space-time maximum bond curvature over the coupled transient.
    pub max_c_fsi: f64,
    /// Time at which `max_c_fsi` occurred.
    pub max_c_fsi_time: f64,
    /// Node (lower index of the bond) where `max_c_fsi` occurred.
    pub max_c_fsi_node: usize,
    /// Maximum bond curvature of the static equilibrium under the steady pressure.
    pub max_c_static: f64,
    pub regime: Regime,
    /// Particle curvature of the static solution.
    pub static_curvature: Vec<f64>,
    /// Particle curvature of the final (steady) transient frame.
    pub steady_curvature: Vec<f64>,
    /// Solver failure, if the transient did not reach a steady state.
    pub failure: Option<String>,
}

/// Relative margin by which the transient peak must exceed the static one to
/// count as transient-dominated. The run ends on the steady frame, so in exact
/// arithmetic max_C_fsi ≥ max_C_static always; a steady state detected to
/// finite tolerance sits a little above or below the static solution, and
/// that noise must not decide the regime.
pub const REGIME_TIE_TOL: f64 = 1e-3;

/// max_C_fsi − (1 + tie tolerance)·max_C_static; positive means transient-dominated.
pub fn regime_margin(max_c_fsi: f64, max_c_static: f64) -> f64 {
    max_c_fsi - (1.0 + REGIME_TIE_TOL) * max_c_static
}

impl DamageComparison {
    fn classify(max_c_fsi: f64, max_c_static: f64) -> Regime {
        if regime_margin(max_c_fsi, max_c_static) > 0.0 {
            Regime::TransientDominated
        } else {
            Regime::StaticDominated
        }
    }
}

/// Runs the coupled transient to steady state while tracking the peak bond
/// curvature, then loads the wall statically with the steady pressure.
pub fn compare_fsi_vs_static(
    params: &DimensionlessParams,
    cfg: &NumericsConfig,
) -> Result<DamageComparison> {
    Ok(compare(params, cfg, false)?.0)
}

/// As [`compare_fsi_vs_static`], also returning the sampled transient.
pub fn compare_fsi_vs_static_recorded(
    params: &DimensionlessParams,
    cfg: &NumericsConfig,
) -> Result<(DamageComparison, TimeHistory)> {
    compare(params, cfg, true)
}

fn compare(
    params: &DimensionlessParams,
    cfg: &NumericsConfig,
    record: bool,
) -> Result<(DamageComparison, TimeHistory)> {
    let mut sim = Simulation::new(*params, cfg.clone())?;
    let (history, report) = if record {
        sim.run_to_steady_recorded()
    } else {
        (TimeHistory::default(), sim.run_to_steady())
    };
    let peak = sim.curvature_peak();
    let failure = report.failure.as_ref().map(|f| f.to_string()).or_else(|| {
        (!report.steady_reached).then(|| format!("no steady state within {} steps", report.steps_taken))
    });

    let grid = sim.grid().clone();
    let stiffness = assemble_stiffness(&grid);
    let static_state = static_solve(&stiffness, &sim.flow().p, params.beta)?;
    let field = CurvatureField::from_height(&static_state.h, &grid, sim.time());
    let max_c_static = field.max_bond().value;
    let comparison = DamageComparison {
        params: *params,
        max_c_fsi: peak.value,
        max_c_fsi_time: peak.time,
        max_c_fsi_node: peak.bond.0,
        max_c_static,
        regime: DamageComparison::classify(peak.value, max_c_static),
        static_curvature: field.particle,
        steady_curvature: particle_curvature(&sim.beam().h, &grid),
        failure,
    };
    Ok((comparison, history))
}

/// Particle curvature at every sample of a history, for space-time plots.
pub fn curvature_history(history: &TimeHistory, grid: &Grid) -> Vec<CurvatureField> {
    history
        .sample_times
        .iter()
        .zip(&history.h_snapshots)
        .map(|(&t, h)| CurvatureField::from_height(h, grid, t))
        .collect()
}

/// Post-hoc verdict for a given curvature threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrengthOutcome {
    Survives,
    FailsBoth,
    /// Fails under the transient load, safe under the equivalent static load.
    FailsDynamicOnly,
    /// Fails under the static load, safe under the transient load.
    FailsStaticOnly,
}

pub fn classify_against_strength(comparison: &DamageComparison, c_cr: f64) -> Result<StrengthOutcome> {
    if !(c_cr > 0.0) {
        return Err(Error::InvalidParameter {
            field: "C_cr",
            reason: format!("must be positive, got {c_cr}"),
        });
    }
    let dynamic = comparison.max_c_fsi > c_cr;
    let stat = comparison.max_c_static > c_cr;
    Ok(match (dynamic, stat) {
        (false, false) => StrengthOutcome::Survives,
        (true, true) => StrengthOutcome::FailsBoth,
        (true, false) => StrengthOutcome::FailsDynamicOnly,
        (false, true) => StrengthOutcome::FailsStaticOnly,
    })
}

/// One cell of the (St, β) map; `comparison` is an error message when the cell failed.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub st: f64,
    pub beta: f64,
    pub comparison: std::result::Result<DamageComparison, String>,
}

impl SweepCell {
    fn margin(&self) -> Option<f64> {
        match &self.comparison {
            Ok(c) if c.failure.is_none() => Some(regime_margin(c.max_c_fsi, c.max_c_static)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub st_values: Vec<f64>,
    pub beta_values: Vec<f64>,
    pub re: f64,
    pub delta: f64,
    /// Row-major over (β, St): index `ib * st_values.len() + is`.
    pub cells: Vec<SweepCell>,
    /// (log₁₀β, log₁₀St) where the regime flips.
    pub boundary_points: Vec<(f64, f64)>,
}

impl SweepGrid {
    pub fn cell(&self, ib: usize, is: usize) -> &SweepCell {
        &self.cells[ib * self.st_values.len() + is]
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.margin().is_none()).count()
    }
}

fn check_ascending(name: &'static str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidParameter {
            field: name,
            reason: "grid is empty".into(),
        });
    }
    if v.iter().any(|&x| !(x > 0.0)) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            field: name,
            reason: "values must be positive and strictly ascending".into(),
        });
    }
    Ok(())
}

/// Per β column, the log₁₀St where max_C_fsi − max_C_static changes sign,
/// linearly interpolated between adjacent usable cells.
pub fn extract_boundary(sweep_st: &[f64], sweep_beta: &[f64], cells: &[SweepCell]) -> Vec<(f64, f64)> {
    let ns = sweep_st.len();
    let mut out = Vec::new();
    for (ib, beta) in sweep_beta.iter().enumerate() {
        let column: Vec<(f64, f64)> = (0..ns)
            .filter_map(|is| cells[ib * ns + is].margin().map(|m| (sweep_st[is].log10(), m)))
            .collect();
        for w in column.windows(2) {
            let ((s0, m0), (s1, m1)) = (w[0], w[1]);
            if m0 == 0.0 {
                out.push((beta.log10(), s0));
            } else if m0.signum() != m1.signum() && m1 != 0.0 {
                let t = m0 / (m0 - m1);
                out.push((beta.log10(), s0 + t * (s1 - s0)));
            }
        }
        if let Some(&(s, m)) = column.last() {
            if m == 0.0 {
                out.push((beta.log10(), s));
            }
        }
    }
    out
}

/// Runs [`compare_fsi_vs_static`] on every (St, β) cell in parallel and
/// extracts the regime boundary. Results are ordered by cell index.
pub fn sweep_st_beta(
    st_values: &[f64],
    beta_values: &[f64],
    re: f64,
    delta: f64,
    cfg: &NumericsConfig,
) -> Result<SweepGrid> {
    check_ascending("st_values", st_values)?;
    check_ascending("beta_values", beta_values)?;
    let jobs: Vec<(f64, f64)> = beta_values
        .iter()
        .flat_map(|&b| st_values.iter().map(move |&s| (s, b)))
        .collect();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(st, beta)| {
            let comparison = DimensionlessParams::new(st, beta, re, delta)
                .and_then(|p| compare_fsi_vs_static(&p, cfg))
                .map_err(|e| e.to_string());
            SweepCell {
                st,
                beta,
                comparison,
            }
        })
        .collect();
    let boundary_points = extract_boundary(st_values, beta_values, &cells);
    Ok(SweepGrid {
        st_values: st_values.to_vec(),
        beta_values: beta_values.to_vec(),
        re,
        delta,
        cells,
        boundary_points,
    })
}

/// log₁₀St = slope·log₁₀β + intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DividingLineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    /// Standard errors of slope and intercept (zero for an exact fit).
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
}

impl DividingLineFit {
    /// Signed vertical distance of (log₁₀β, log₁₀St) above the line.
    pub fn offset(&self, log_beta: f64, log_st: f64) -> f64 {
        log_st - (self.slope * log_beta + self.intercept)
    }
}

/// Ordinary least squares through the boundary points.
pub fn fit_dividing_line(points: &[(f64, f64)]) -> Result<DividingLineFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "a dividing line needs at least 3 boundary points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData(
            "boundary points share a single β value".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let sigma2 = if n > 2 { ssr / (nf - 2.0) } else { 0.0 };
    Ok(DividingLineFit {
        slope,
        intercept,
        rms_residual: (ssr / nf).sqrt(),
        slope_stderr: (sigma2 / sxx).sqrt(),
        intercept_stderr: (sigma2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
    })
}
