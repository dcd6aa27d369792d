//! Segregated fluid–wall coupling: per-step fixed-point iteration between the
//! Newmark wall update and the lubrication flow, transient runs with sampled
//! history, and steady-state detection.

use crate::beam::{
    assemble_stiffness, classical_stiffness, BeamState, Newmark, StiffnessKind, Support,
};
use crate::config::{CouplingScheme, DimensionlessParams, NumericsConfig};
use crate::damage::CurvatureField;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lubrication::{
    cumulative_trapezoid, integrate_from_outlet, update_flow_rate, update_pressure, FlowHistory,
    FlowState,
};
use nalgebra::{DMatrix, DVector, LU};
use std::fmt;

/// Consecutive steps the steady criterion must hold before a run is declared steady.
const STEADY_WINDOW: usize = 10;

/// Iteration count above which the added-mass operator is rebuilt at the current H.
const REFRESH_ITERATIONS: usize = 6;

/// Linearized coupling operator `St·I + φ₂ΔT²·K_ff − β·J_ff`, where `J` maps a
/// wall acceleration to the pressure it induces through the unsteady and
/// viscous flow terms.
#[derive(Debug, Clone)]
struct AddedMass {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    leading: f64,
}

impl AddedMass {
    fn build(
        grid: &Grid,
        newmark: &Newmark,
        h: &[f64],
        leading: f64,
        params: &DimensionlessParams,
    ) -> Self {
        let n = grid.num_nodes();
        let dx = grid.spacing();
        let dt = newmark.dt();
        let free = newmark.free_dofs();
        let w: Vec<f64> = h
            .iter()
            .map(|&h| params.Re / h * leading / dt + 12.0 / (h * h * h))
            .collect();
        let kmat = newmark.stiffness().matrix();
        let c = newmark.phi2() * dt * dt;
        let mut m = DMatrix::from_fn(free.len(), free.len(), |i, j| c * kmat[(free[i], free[j])]);
        for i in 0..free.len() {
            m[(i, i)] += newmark.st();
        }
        let mut unit = vec![0.0; n];
        for (col, &j) in free.iter().enumerate() {
            unit[j] = 1.0;
            let q = cumulative_trapezoid(&unit, dx);
            unit[j] = 0.0;
            let g: Vec<f64> = q
                .iter()
                .zip(&w)
                .map(|(q, w)| newmark.phi1() * dt * w * q)
                .collect();
            let dp = integrate_from_outlet(&g, dx);
            for (row, &i) in free.iter().enumerate() {
                m[(row, col)] -= params.beta * dp[i];
            }
        }
        Self { lu: m.lu(), leading }
    }

    /// Newton correction `A·M⁻¹·r` on the free DOFs; `None` if M is singular.
    fn correction(&self, newmark: &Newmark, r_free: Vec<f64>) -> Option<Vec<f64>> {
        let y = self.lu.solve(&DVector::from_vec(r_free))?;
        Some(newmark.apply_effective_mass(y.as_slice()))
    }
}

/// Convergence details of one coupled step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    /// R_d = max_k |F(Pᴵ)_k − Pᴵ_k| at the accepted iterate.
    pub residual: f64,
    /// Relaxation factor in use when the step converged.
    pub relaxation: f64,
}

/// Per-step wall–flow coupling for fixed parameters and discretization.
#[derive(Debug, Clone)]
pub struct Coupler {
    grid: Grid,
    params: DimensionlessParams,
    cfg: NumericsConfig,
    newmark: Newmark,
    added_mass: Option<AddedMass>,
    last_iterations: usize,
}

impl Coupler {
    /// Clamped peridynamic wall.
    pub fn new(params: DimensionlessParams, cfg: NumericsConfig) -> Result<Self> {
        Self::with_model(params, cfg, StiffnessKind::Peridynamic, Support::Clamped)
    }

    pub fn with_model(
        params: DimensionlessParams,
        cfg: NumericsConfig,
        kind: StiffnessKind,
        support: Support,
    ) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        let grid = Grid::new(cfg.num_particles, params.Delta)?;
        let stiffness = match kind {
            StiffnessKind::Peridynamic => assemble_stiffness(&grid),
            StiffnessKind::Classical => classical_stiffness(&grid)?,
        };
        let newmark = Newmark::new(stiffness, params.St, cfg.dt, cfg.phi1, cfg.phi2, support)?;
        Ok(Self {
            grid,
            params,
            cfg,
            newmark,
            added_mass: None,
            last_iterations: 0,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &DimensionlessParams {
        &self.params
    }

    pub fn config(&self) -> &NumericsConfig {
        &self.cfg
    }

    pub fn newmark(&self) -> &Newmark {
        &self.newmark
    }

    /// F(Pᴵ): wall step under Pᴵ followed by the flow update.
    fn evaluate(
        &self,
        beam: &BeamState,
        history: FlowHistory<'_>,
        p_iter: &[f64],
    ) -> Result<(BeamState, Vec<f64>, Vec<f64>)> {
        let next = self.newmark.step(beam, p_iter, self.params.beta);
        next.check_open(&self.grid)?;
        let q = update_flow_rate(&next.hdot, &self.grid);
        let p = update_pressure(&next.h, &q, history, self.params.Re, self.cfg.dt, &self.grid)?;
        Ok((next, q, p))
    }

    fn refresh_added_mass(&mut self, h: &[f64], leading: f64) {
        let stale = match &self.added_mass {
            None => true,
            Some(am) => am.leading != leading || self.last_iterations > REFRESH_ITERATIONS,
        };
        if stale {
            self.added_mass = Some(AddedMass::build(&self.grid, &self.newmark, h, leading, &self.params));
        }
    }

    /// Advances (beam, flow) by one step, iterating on the pressure until
    /// R_d ≤ tol·max(1, ‖P‖∞). The first iterate is Pⁿ.
    pub fn step(&mut self, beam: &BeamState, flow: &FlowState) -> Result<(BeamState, FlowState, StepStats)> {
        let history = FlowHistory::from_state(flow);
        if self.cfg.coupling == CouplingScheme::AddedMass {
            self.refresh_added_mass(&beam.h, history.leading_coefficient());
        }
        let free = self.newmark.free_dofs().to_vec();
        let mut p_iter = flow.p.clone();
        let mut omega = self.cfg.relaxation_factor;
        let mut residuals: Vec<f64> = Vec::new();
        let mut growth = 0;
        // Last successfully evaluated iterate and the update direction taken from it,
        // kept so that an overshoot that closes the channel can be backtracked.
        let mut base: Option<(Vec<f64>, Vec<f64>)> = None;

        for iteration in 1..=self.cfg.fixed_point_max_iters {
            let (next, q, p) = match self.evaluate(beam, history, &p_iter) {
                Ok(v) => v,
                Err(e @ Error::ChannelCollapse { .. }) => {
                    // Only a collapse under a converged-looking iterate is physical;
                    // otherwise shorten the step along the last direction.
                    match &base {
                        Some((b, dir)) if omega > 1e-6 => {
                            omega *= 0.5;
                            residuals.push(f64::INFINITY);
                            p_iter = b.iter().zip(dir).map(|(b, d)| b + omega * d).collect();
                            continue;
                        }
                        _ => return Err(e),
                    }
                }
                Err(e) => return Err(e),
            };
            let r: Vec<f64> = p.iter().zip(&p_iter).map(|(a, b)| a - b).collect();
            let rd = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = p.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if !rd.is_finite() {
                residuals.push(rd);
                break;
            }
            if rd <= self.cfg.fixed_point_tol * scale {
                self.last_iterations = iteration;
                let flow_next = FlowState {
                    q,
                    p,
                    q_prev: Some(flow.q.clone()),
                };
                return Ok((
                    next,
                    flow_next,
                    StepStats {
                        iterations: iteration,
                        residual: rd,
                        relaxation: omega,
                    },
                ));
            }
            if let Some(&prev) = residuals.last() {
                growth = if rd > prev { growth + 1 } else { 0 };
                if growth >= 3 {
                    omega *= 0.5;
                    growth = 0;
                }
            }
            residuals.push(rd);

            let dir = match (&self.added_mass, self.cfg.coupling) {
                (Some(am), CouplingScheme::AddedMass) => {
                    let r_free: Vec<f64> = free.iter().map(|&i| r[i]).collect();
                    let delta = am.correction(&self.newmark, r_free).ok_or_else(|| {
                        Error::Singular("linearized coupling operator is singular".into())
                    })?;
                    // Pressure at pinned nodes does not act on the wall; take F's value.
                    let mut dir = r.clone();
                    for (&i, d) in free.iter().zip(&delta) {
                        dir[i] = *d;
                    }
                    dir
                }
                _ => r,
            };
            p_iter = p_iter.iter().zip(&dir).map(|(b, d)| b + omega * d).collect();
            base = Some((p_iter.iter().zip(&dir).map(|(v, d)| v - omega * d).collect(), dir));
        }
        self.last_iterations = self.cfg.fixed_point_max_iters;
        Err(Error::NoConvergence {
            iterations: residuals.len(),
            history: residuals,
        })
    }
}

/// Single coupled step from (beam, flow); returns the new states and the iteration count.
pub fn coupled_step(
    beam: &BeamState,
    flow: &FlowState,
    params: &DimensionlessParams,
    cfg: &NumericsConfig,
) -> Result<(BeamState, FlowState, usize)> {
    let mut coupler = Coupler::new(*params, cfg.clone())?;
    let (b, f, stats) = coupler.step(beam, flow)?;
    Ok((b, f, stats.iterations))
}

/// Sampled trajectories of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeHistory {
    pub positions: Vec<f64>,
    pub sample_times: Vec<f64>,
    pub h_snapshots: Vec<Vec<f64>>,
    pub p_snapshots: Vec<Vec<f64>>,
    pub q_snapshots: Vec<Vec<f64>>,
    /// Largest bond curvature at each sample.
    pub max_curvature_trace: Vec<f64>,
    /// Global mass-balance residual of the step that produced each sample.
    pub mass_balance: Vec<f64>,
    pub sampling_stride: usize,
}

impl TimeHistory {
    pub fn len(&self) -> usize {
        self.sample_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_times.is_empty()
    }
}

/// Running statistics of fixed-point iterations per step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IterationStats {
    pub total: usize,
    pub max: usize,
    pub min: usize,
    pub steps: usize,
}

impl IterationStats {
    fn record(&mut self, iterations: usize) {
        self.min = if self.steps == 0 { iterations } else { self.min.min(iterations) };
        self.max = self.max.max(iterations);
        self.total += iterations;
        self.steps += 1;
    }

    pub fn mean(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total as f64 / self.steps as f64
        }
    }
}

/// Where and when a run stopped abnormally.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverFailure {
    pub step: usize,
    pub time: f64,
    pub message: String,
    /// Axial position for channel collapse.
    pub position: Option<f64>,
}

impl fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {} (T = {}): {}", self.step, self.time, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverReport {
    pub steps_taken: usize,
    pub iterations: IterationStats,
    pub final_residual: f64,
    pub steady_reached: bool,
    pub steady_time: Option<f64>,
    /// Largest |global mass-balance residual| over all steps.
    pub max_mass_balance: f64,
    pub failure: Option<SolverFailure>,
}

/// Space-time maximum of the bond curvature seen so far.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CurvaturePeak {
    pub value: f64,
    pub time: f64,
    pub step: usize,
    pub bond: (usize, usize),
}

/// Time-stepping driver owning the wall and flow states.
#[derive(Debug, Clone)]
pub struct Simulation {
    coupler: Coupler,
    beam: BeamState,
    flow: FlowState,
    time: f64,
    step: usize,
    report: SolverReport,
    peak: CurvaturePeak,
    steady_count: usize,
    last_mass_balance: f64,
}

fn trapezoid(f: &[f64], dx: f64) -> f64 {
    let inner: f64 = f.iter().sum();
    dx * (inner - 0.5 * (f[0] + f[f.len() - 1]))
}

impl Simulation {
    /// Starts from rest with the clamped peridynamic wall.
    pub fn new(params: DimensionlessParams, cfg: NumericsConfig) -> Result<Self> {
        Self::from_coupler(Coupler::new(params, cfg)?)
    }

    pub fn with_model(
        params: DimensionlessParams,
        cfg: NumericsConfig,
        kind: StiffnessKind,
        support: Support,
    ) -> Result<Self> {
        Self::from_coupler(Coupler::with_model(params, cfg, kind, support)?)
    }

    fn from_coupler(coupler: Coupler) -> Result<Self> {
        let n = coupler.grid.num_nodes();
        Ok(Self {
            coupler,
            beam: BeamState::rest(n),
            flow: FlowState::rest(n),
            time: 0.0,
            step: 0,
            report: SolverReport::default(),
            peak: CurvaturePeak::default(),
            steady_count: 0,
            last_mass_balance: 0.0,
        })
    }

    /// Replaces the initial wall state; only meaningful before the first step.
    pub fn set_initial_beam(&mut self, beam: BeamState) -> Result<()> {
        if beam.h.len() != self.grid().num_nodes() {
            return Err(Error::InvalidParameter {
                field: "initial_state",
                reason: "length does not match the particle count".into(),
            });
        }
        beam.check_open(self.grid())?;
        self.beam = beam;
        self.peak = CurvaturePeak::default();
        self.observe_curvature();
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.coupler.grid
    }

    pub fn params(&self) -> &DimensionlessParams {
        &self.coupler.params
    }

    pub fn config(&self) -> &NumericsConfig {
        &self.coupler.cfg
    }

    pub fn beam(&self) -> &BeamState {
        &self.beam
    }

    pub fn flow(&self) -> &FlowState {
        &self.flow
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn report(&self) -> &SolverReport {
        &self.report
    }

    pub fn curvature_peak(&self) -> CurvaturePeak {
        self.peak
    }

    fn observe_curvature(&mut self) -> f64 {
        let field = CurvatureField::from_height(&self.beam.h, self.grid(), self.time);
        let m = field.max_bond();
        if m.value > self.peak.value {
            self.peak = CurvaturePeak {
                value: m.value,
                time: self.time,
                step: self.step,
                bond: m.bond,
            };
        }
        m.value
    }

    /// One coupled step. On error the state is left at the last good step.
    pub fn advance(&mut self) -> Result<StepStats> {
        let (beam, flow, stats) = match self.coupler.step(&self.beam, &self.flow) {
            Ok(v) => v,
            Err(e) => {
                self.record_failure(&e);
                return Err(e);
            }
        };
        let dt = self.coupler.cfg.dt;
        let dx = self.grid().spacing();
        let n = beam.h.len();
        let outflow = |q: &[f64]| q[0] - q[n - 1];
        let balance = (trapezoid(&beam.h, dx) - trapezoid(&self.beam.h, dx)) / dt
            - 0.5 * (outflow(&self.flow.q) + outflow(&flow.q));

        let change: f64 = beam
            .h
            .iter()
            .zip(&self.beam.h)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = self.beam.h.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rate = change / (dt * norm);

        self.beam = beam;
        self.flow = flow;
        self.step += 1;
        self.time = self.step as f64 * dt;
        self.last_mass_balance = balance;
        self.observe_curvature();

        let r = &mut self.report;
        r.steps_taken = self.step;
        r.iterations.record(stats.iterations);
        r.final_residual = stats.residual;
        r.max_mass_balance = r.max_mass_balance.max(balance.abs());

        let tol = self.coupler.cfg.steady_tol;
        let q_uniform = self.flow.q.iter().all(|q| (q - 1.0).abs() < 10.0 * tol);
        if self.step >= 3 && rate < tol && q_uniform {
            self.steady_count += 1;
        } else {
            self.steady_count = 0;
        }
        if self.steady_count >= STEADY_WINDOW && !r.steady_reached {
            r.steady_reached = true;
            r.steady_time = Some(self.time);
        }
        Ok(stats)
    }

    fn record_failure(&mut self, e: &Error) {
        let position = match e {
            Error::ChannelCollapse { position, .. } => Some(*position),
            _ => None,
        };
        self.report.failure = Some(SolverFailure {
            step: self.step + 1,
            time: (self.step + 1) as f64 * self.coupler.cfg.dt,
            message: e.to_string(),
            position,
        });
    }

    /// True once the steady criterion has held for the detection window.
    pub fn is_steady(&self) -> bool {
        self.report.steady_reached
    }

    fn sample(&self, history: &mut TimeHistory) {
        history.sample_times.push(self.time);
        history.h_snapshots.push(self.beam.h.clone());
        history.p_snapshots.push(self.flow.p.clone());
        history.q_snapshots.push(self.flow.q.clone());
        let c = CurvatureField::from_height(&self.beam.h, self.grid(), self.time).max_bond();
        history.max_curvature_trace.push(c.value);
        history.mass_balance.push(self.last_mass_balance);
    }

    /// Advances to `t_end`, sampling every `sample_stride` steps plus the
    /// initial and final states. A solver failure ends the run early and is
    /// recorded in the report.
    pub fn run_until(&mut self, t_end: f64) -> TimeHistory {
        let stride = self.coupler.cfg.sample_stride;
        let mut history = TimeHistory {
            positions: self.grid().positions(),
            sampling_stride: stride,
            ..Default::default()
        };
        self.sample(&mut history);
        let target = (t_end / self.coupler.cfg.dt).round() as usize;
        while self.step < target {
            if self.advance().is_err() {
                break;
            }
            if self.step % stride == 0 || self.step == target {
                self.sample(&mut history);
            }
        }
        history
    }

    /// Advances until steady or until `max_steps` steps have been taken.
    pub fn run_to_steady(&mut self) -> SolverReport {
        self.march_to_steady(None);
        self.report.clone()
    }

    /// As [`Simulation::run_to_steady`], also sampling the history every
    /// `sample_stride` steps and at the last step.
    pub fn run_to_steady_recorded(&mut self) -> (TimeHistory, SolverReport) {
        let stride = self.coupler.cfg.sample_stride;
        let mut history = TimeHistory {
            positions: self.grid().positions(),
            sampling_stride: stride,
            ..Default::default()
        };
        self.sample(&mut history);
        self.march_to_steady(Some(&mut history));
        if history.sample_times.last() != Some(&self.time) {
            self.sample(&mut history);
        }
        (history, self.report.clone())
    }

    fn march_to_steady(&mut self, mut history: Option<&mut TimeHistory>) {
        let stride = self.coupler.cfg.sample_stride;
        while !self.is_steady() && self.step < self.coupler.cfg.max_steps {
            if self.advance().is_err() {
                break;
            }
            if let Some(h) = history.as_deref_mut() {
                if self.step % stride == 0 {
                    self.sample(h);
                }
            }
        }
    }
}

/// Integrates from rest to `t_end`.
pub fn run_transient(
    params: &DimensionlessParams,
    cfg: &NumericsConfig,
    t_end: f64,
) -> Result<(TimeHistory, SolverReport)> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "t_end",
            reason: format!("must be non-negative, got {t_end}"),
        });
    }
    let mut sim = Simulation::new(*params, cfg.clone())?;
    let history = sim.run_until(t_end);
    Ok((history, sim.report().clone()))
}

/// Marches to steady state, using `cfg.st_override` in place of St when set.
/// The steady equations contain no St, so the override only changes the path.
pub fn run_to_steady(
    params: &DimensionlessParams,
    cfg: &NumericsConfig,
) -> Result<(BeamState, FlowState, SolverReport)> {
    let mut p = *params;
    if let Some(st) = cfg.st_override {
        p.St = st;
    }
    let mut sim = Simulation::new(p, cfg.clone())?;
    let report = sim.run_to_steady();
    Ok((sim.beam, sim.flow, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, dt: f64) -> NumericsConfig {
        NumericsConfig {
            num_particles: n,
            dt,
            ..Default::default()
        }
    }

    #[test]
    fn rigid_wall_recovers_poiseuille_flow() {
        let params = DimensionlessParams::new(10.0, 1e-8, 0.5, 0.1).unwrap();
        let mut sim = Simulation::new(params, cfg(41, 1e-3)).unwrap();
        for _ in 0..5 {
            let stats = sim.advance().unwrap();
            assert!(stats.iterations <= 2, "{stats:?}");
        }
        let x = sim.grid().positions();
        assert!(sim.beam().h.iter().all(|h| (h - 1.0).abs() < 1e-6));
        for (p, x) in sim.flow().p.iter().zip(&x) {
            assert!((p - 12.0 * (1.0 - x)).abs() < 1e-4, "{p} at {x}");
        }
    }

    #[test]
    fn converged_pressure_needs_one_iteration() {
        let params = DimensionlessParams::new(10.0, 20.0, 0.5, 0.1).unwrap();
        let mut c = Coupler::new(params, cfg(41, 1e-3)).unwrap();
        let beam = BeamState::rest(41);
        let flow = FlowState::rest(41);
        let (_, f1, _) = c.step(&beam, &flow).unwrap();
        // Restart the same step with the converged pressure as the initial iterate.
        let seeded = FlowState {
            p: f1.p.clone(),
            ..flow
        };
        let (_, _, stats) = c.step(&beam, &seeded).unwrap();
        assert_eq!(stats.iterations, 1);
        let scale = f1.p.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        assert!(stats.residual <= 1e-5 * scale);
    }

    #[test]
    fn schemes_share_the_fixed_point() {
        let params = DimensionlessParams::new(10.0, 20.0, 0.5, 0.1).unwrap();
        let mut tight = cfg(41, 1e-3);
        tight.fixed_point_tol = 1e-12;
        tight.fixed_point_max_iters = 500;
        let mut relaxed = tight.clone();
        relaxed.coupling = CouplingScheme::Relaxed;
        let beam = BeamState::rest(41);
        let flow = FlowState::rest(41);
        let (b1, f1, _) = coupled_step(&beam, &flow, &params, &tight).unwrap();
        let (b2, f2, _) = coupled_step(&beam, &flow, &params, &relaxed).unwrap();
        for (a, b) in b1.h.iter().zip(&b2.h) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in f1.p.iter().zip(&f2.p) {
            assert!((a - b).abs() < 1e-8 * f1.p[0].abs().max(1.0));
        }
    }

    #[test]
    fn plain_iteration_fails_when_fluid_added_mass_dominates() {
        // β·Re/St = 500: the unrelaxed map amplifies pressure errors by two orders of magnitude.
        let params = DimensionlessParams::new(1.0, 1000.0, 0.5, 0.1).unwrap();
        let mut c = cfg(41, 1e-3);
        c.coupling = CouplingScheme::Relaxed;
        c.fixed_point_max_iters = 50;
        let mut sim = Simulation::new(params, c.clone()).unwrap();
        let relaxed: Result<Vec<StepStats>> = (0..3).map(|_| sim.advance()).collect();
        assert!(relaxed.is_err());
        c.coupling = CouplingScheme::AddedMass;
        let mut sim = Simulation::new(params, c).unwrap();
        for _ in 0..3 {
            assert!(sim.advance().unwrap().iterations <= 6);
        }
    }

    #[test]
    fn zero_end_time_keeps_only_initial_state() {
        let params = DimensionlessParams::new(10.0, 20.0, 0.5, 0.1).unwrap();
        let (h, r) = run_transient(&params, &cfg(41, 1e-3), 0.0).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.sample_times, vec![0.0]);
        assert!(h.h_snapshots[0].iter().all(|&v| v == 1.0));
        assert_eq!(r.steps_taken, 0);
    }

    #[test]
    fn history_is_sampled_at_stride_and_end() {
        let params = DimensionlessParams::new(10.0, 20.0, 0.5, 0.1).unwrap();
        let mut c = cfg(41, 1e-3);
        c.sample_stride = 4;
        let (h, r) = run_transient(&params, &c, 0.01).unwrap();
        assert_eq!(r.steps_taken, 10);
        assert_eq!(h.len(), 4);
        assert!((h.sample_times[3] - 0.01).abs() < 1e-15);
        assert_eq!(h.h_snapshots.len(), h.max_curvature_trace.len());
    }

    #[test]
    fn collapse_is_reported() {
        let params = DimensionlessParams::new(1e-3, 1e6, 0.0, 0.1).unwrap();
        let mut c = cfg(41, 1e-2);
        c.phi2 = 0.25;
        c.phi1 = 0.5;
        let mut sim = Simulation::new(params, c).unwrap();
        let mut beam = BeamState::rest(41);
        beam.hdot = vec![-1e3; 41];
        beam.hdot[0] = 0.0;
        beam.hdot[40] = 0.0;
        sim.set_initial_beam(beam).unwrap();
        assert!(sim.advance().is_err());
        let f = sim.report().failure.clone().unwrap();
        assert!(f.message.contains("collapse"));
        assert!(f.position.is_some());
    }

    #[test]
    fn rigid_limit_reaches_steady_state() {
        let params = DimensionlessParams::new(10.0, 1e-10, 0.5, 0.1).unwrap();
        let mut c = cfg(41, 1e-3);
        c.max_steps = 100;
        let (beam, flow, r) = run_to_steady(&params, &c).unwrap();
        assert!(r.steady_reached);
        assert!(beam.h.iter().all(|h| (h - 1.0).abs() < 1e-8));
        assert!(flow.q.iter().all(|q| (q - 1.0).abs() < 1e-4));
        assert!((flow.p[0] - 12.0).abs() < 1e-6);
    }
}
