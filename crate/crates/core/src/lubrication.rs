//! Integrated lubrication equations: flow rate from wall velocity and
//! pressure from the depth-averaged momentum balance.
//!
//! ```text
//! ∂Q/∂X + ∂H/∂T = 0
//! Re[∂Q/∂T + (6/5)∂(Q²/H)/∂X] = −H ∂P/∂X − 12Q/H²
//! ```
//!
//! with Q(0) = 1 and P(1) = 0. Both are integrated in X with the cumulative
//! trapezoid rule on the particle nodes.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Nodal flow rate and pressure, plus the flow rate one step back for BDF2.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// Q one step before `q`; `None` until two levels exist.
    pub q_prev: Option<Vec<f64>>,
}

impl FlowState {
    /// Fluid at rest: Q ≡ 0, P ≡ 0.
    pub fn rest(n: usize) -> Self {
        Self {
            q: vec![0.0; n],
            p: vec![0.0; n],
            q_prev: None,
        }
    }
}

/// Time levels available for ∂Q/∂T at the new step.
#[derive(Debug, Clone, Copy)]
pub enum FlowHistory<'a> {
    /// Only Qⁿ: first-order backward difference.
    Single(&'a [f64]),
    /// Qⁿ and Qⁿ⁻¹: second-order backward difference.
    Double(&'a [f64], &'a [f64]),
}

impl<'a> FlowHistory<'a> {
    pub fn from_state(flow: &'a FlowState) -> Self {
        match &flow.q_prev {
            Some(prev) => FlowHistory::Double(&flow.q, prev),
            None => FlowHistory::Single(&flow.q),
        }
    }

    /// Coefficient of Qⁿ⁺¹ in the backward difference, times ΔT.
    pub fn leading_coefficient(&self) -> f64 {
        match self {
            FlowHistory::Single(_) => 1.0,
            FlowHistory::Double(..) => 1.5,
        }
    }

    fn time_derivative(&self, k: usize, q_new: f64, dt: f64) -> f64 {
        match self {
            FlowHistory::Single(qn) => (q_new - qn[k]) / dt,
            FlowHistory::Double(qn, qnm1) => (3.0 * q_new - 4.0 * qn[k] + qnm1[k]) / (2.0 * dt),
        }
    }
}

/// Cumulative trapezoid ∫₀^{X_k} f dX.
pub fn cumulative_trapezoid(f: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in f.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Q_k = 1 − ∫₀^{X_k} Ḣ dX.
pub fn update_flow_rate(hdot: &[f64], grid: &Grid) -> Vec<f64> {
    cumulative_trapezoid(hdot, grid.spacing())
        .into_iter()
        .map(|v| 1.0 - v)
        .collect()
}

/// Second-order derivative on a uniform grid: central inside, one-sided at the ends.
pub fn gradient(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 3, "gradient needs at least three nodes");
    let mut g = vec![0.0; n];
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    for k in 1..n - 1 {
        g[k] = (f[k + 1] - f[k - 1]) / (2.0 * dx);
    }
    g[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    g
}

/// Pressure gradient ∂P/∂X at the nodes from the momentum balance,
/// ∂P/∂X = −(Re/H)[∂Q/∂T + (6/5)∂(Q²/H)/∂X] − 12Q/H³.
pub fn pressure_gradient(
    h: &[f64],
    q: &[f64],
    history: FlowHistory<'_>,
    re: f64,
    dt: f64,
    grid: &Grid,
) -> Result<Vec<f64>> {
    if let Some(node) = h.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::ChannelCollapse {
            node,
            position: grid.position(node as isize),
            height: h[node],
        });
    }
    let flux: Vec<f64> = q.iter().zip(h).map(|(q, h)| q * q / h).collect();
    let dflux = gradient(&flux, grid.spacing());
    Ok((0..h.len())
        .map(|k| {
            let viscous = 12.0 * q[k] / (h[k] * h[k] * h[k]);
            if re == 0.0 {
                return -viscous;
            }
            let dqdt = history.time_derivative(k, q[k], dt);
            -(re / h[k]) * (dqdt + 1.2 * dflux[k]) - viscous
        })
        .collect())
}

/// P_k = ∫₁^{X_k} (∂P/∂X) dX, so that P(1) = 0.
pub fn integrate_from_outlet(gradient: &[f64], dx: f64) -> Vec<f64> {
    let n = gradient.len();
    let mut p = vec![0.0; n];
    for k in (0..n - 1).rev() {
        p[k] = p[k + 1] - 0.5 * dx * (gradient[k] + gradient[k + 1]);
    }
    p
}

/// Pressure field for the new time level.
pub fn update_pressure(
    h: &[f64],
    q: &[f64],
    history: FlowHistory<'_>,
    re: f64,
    dt: f64,
    grid: &Grid,
) -> Result<Vec<f64>> {
    let g = pressure_gradient(h, q, history, re, dt, grid)?;
    Ok(integrate_from_outlet(&g, grid.spacing()))
}
