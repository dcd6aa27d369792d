//! Peridynamic Euler–Bernoulli wall: nonlocal stiffness, mirror ghosts,
//! Newmark-β stepping, and static equilibrium.
//!
//! The semidiscrete wall equation is `St·Ḧ + K·H = β·P` with `K` positive
//! semidefinite. `K` is the composition of the discrete nonlocal curvature
//! operator with itself, scaled by 1/Δ²:
//!
//! ```text
//! S_k     = Σ_i 𝒱/Ξ²_{ik} (H_i − H_k)           (i within one horizon of k)
//! (K·H)_k = (1/Δ²) Σ_j 𝒱/Ξ²_{jk} (S_j − S_k)
//! ```
//!
//! Ghost values come from even reflection about the clamped ends, so
//! `K` annihilates constants and only the deflection `H − 1` is ever fed to it.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{bandwidths, BandedLu};
use nalgebra::{DMatrix, DVector};

/// Which discrete bending operator a [`StiffnessOperator`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StiffnessKind {
    Peridynamic,
    /// Five-point biharmonic stencil, the Δ → 0 reference.
    Classical,
}

/// How the wall is held at X = 0 and X = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// H = 1 and zero slope at both ends.
    Clamped,
    /// Zero slope only (mirror ghosts, end nodes free to move).
    Sliding,
}

/// Mirror-extends a nodal field into the fictitious region on both sides.
///
/// Ghost at X_b ± s receives the value at X_b ∓ s, i.e. an even extension
/// about each end, which zeroes the slope there.
pub fn apply_mirror_bc(field: &[f64], grid: &Grid) -> Vec<f64> {
    assert_eq!(field.len(), grid.num_nodes());
    let g = grid.ghost_count() as isize;
    let n = grid.num_nodes() as isize;
    (-g..n + g).map(|i| field[grid.mirror_source(i)]).collect()
}

/// Horizon sums S_k = Σ 𝒱/Ξ² (H_i − H_k) for every extended position whose
/// horizon lies inside `ext`. Entries closer than `m` to either edge are 0.
pub fn horizon_sums(ext: &[f64], grid: &Grid) -> Vec<f64> {
    let m = grid.horizon_ratio();
    let weights: Vec<(isize, f64)> = grid.offsets().map(|o| (o, grid.bond_weight(o))).collect();
    let mut s = vec![0.0; ext.len()];
    for e in m..ext.len() - m {
        let center = ext[e];
        s[e] = weights
            .iter()
            .map(|&(o, w)| w * (ext[(e as isize + o) as usize] - center))
            .sum();
    }
    s
}

/// Nonlocal curvature (1/Δ)·S at the real particles of an already extended field.
pub fn nonlocal_curvature(ext: &[f64], grid: &Grid) -> Vec<f64> {
    assert_eq!(ext.len(), grid.extended_len());
    let s = horizon_sums(ext, grid);
    let first = grid.ghost_count();
    s[first..first + grid.num_nodes()]
        .iter()
        .map(|v| v / grid.delta())
        .collect()
}

/// Matrix-free peridynamic force K·w for a deflection field `w`.
pub fn peridynamic_force(w: &[f64], grid: &Grid) -> Vec<f64> {
    let ext = apply_mirror_bc(w, grid);
    let s = horizon_sums(&ext, grid);
    let scale = 1.0 / (grid.delta() * grid.delta());
    let first = grid.ghost_count();
    let weights: Vec<(isize, f64)> = grid.offsets().map(|o| (o, grid.bond_weight(o))).collect();
    (0..grid.num_nodes())
        .map(|k| {
            let e = first + k;
            let sum: f64 = weights
                .iter()
                .map(|&(o, w)| w * (s[(e as isize + o) as usize] - s[e]))
                .sum();
            scale * sum
        })
        .collect()
}

/// Dense N×N stiffness with mirror ghosts eliminated.
#[derive(Debug, Clone)]
pub struct StiffnessOperator {
    kind: StiffnessKind,
    matrix: DMatrix<f64>,
    lower: usize,
    upper: usize,
}

impl StiffnessOperator {
    fn from_matrix(kind: StiffnessKind, matrix: DMatrix<f64>) -> Self {
        let (lower, upper) = bandwidths(&matrix);
        Self {
            kind,
            matrix,
            lower,
            upper,
        }
    }

    pub fn kind(&self) -> StiffnessKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }

    /// K·v exploiting the band structure.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(v.len(), n);
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.upper + 1).min(n);
                (lo..hi).map(|j| self.matrix[(i, j)] * v[j]).sum()
            })
            .collect()
    }

    /// K·(H − 1): the elastic restoring force of a height field.
    pub fn force(&self, h: &[f64]) -> Vec<f64> {
        let w: Vec<f64> = h.iter().map(|v| v - 1.0).collect();
        self.apply(&w)
    }

    /// Max-row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Assembles the peridynamic stiffness column by column from the
/// matrix-free operator.
pub fn assemble_stiffness(grid: &Grid) -> StiffnessOperator {
    let n = grid.num_nodes();
    let mut k = DMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        let col = peridynamic_force(&unit, grid);
        unit[j] = 0.0;
        for (i, v) in col.into_iter().enumerate() {
            k[(i, j)] = v;
        }
    }
    StiffnessOperator::from_matrix(StiffnessKind::Peridynamic, k)
}

/// Five-point biharmonic `[1, −4, 6, −4, 1]/ΔX⁴` with mirror ghosts at the ends.
pub fn classical_stiffness(grid: &Grid) -> Result<StiffnessOperator> {
    let n = grid.num_nodes();
    if n < 7 {
        return Err(Error::InvalidParameter {
            field: "num_particles",
            reason: format!("classical stencil needs at least 7 particles, got {n}"),
        });
    }
    let dx4 = grid.spacing().powi(4);
    let stencil = [1.0, -4.0, 6.0, -4.0, 1.0];
    let last = n as isize - 1;
    let mut k = DMatrix::zeros(n, n);
    for row in 0..n {
        for (s, c) in stencil.iter().enumerate() {
            let i = row as isize + s as isize - 2;
            let src = if i < 0 {
                -i
            } else if i > last {
                2 * last - i
            } else {
                i
            };
            k[(row, src as usize)] += c / dx4;
        }
    }
    Ok(StiffnessOperator::from_matrix(StiffnessKind::Classical, k))
}

/// Nodal wall height and its first two time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    pub h: Vec<f64>,
    pub hdot: Vec<f64>,
    pub hddot: Vec<f64>,
}

impl BeamState {
    /// Undeformed wall at rest.
    pub fn rest(n: usize) -> Self {
        Self {
            h: vec![1.0; n],
            hdot: vec![0.0; n],
            hddot: vec![0.0; n],
        }
    }

    /// Fails with the first node where the channel has closed.
    pub fn check_open(&self, grid: &Grid) -> Result<()> {
        match self.h.iter().position(|&v| !(v > 0.0)) {
            Some(node) => Err(Error::ChannelCollapse {
                node,
                position: grid.position(node as isize),
                height: self.h[node],
            }),
            None => Ok(()),
        }
    }
}

fn free_dofs(n: usize, support: Support) -> Vec<usize> {
    match support {
        Support::Clamped => (1..n - 1).collect(),
        Support::Sliding => (0..n).collect(),
    }
}

fn submatrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

/// Newmark-β integrator with the effective mass `St·I + φ₂ΔT²·K` factored once.
#[derive(Debug, Clone)]
pub struct Newmark {
    stiffness: StiffnessOperator,
    free: Vec<usize>,
    support: Support,
    st: f64,
    dt: f64,
    phi1: f64,
    phi2: f64,
    effective_mass: BandedLu,
}

impl Newmark {
    pub fn new(
        stiffness: StiffnessOperator,
        st: f64,
        dt: f64,
        phi1: f64,
        phi2: f64,
        support: Support,
    ) -> Result<Self> {
        let n = stiffness.dim();
        let free = free_dofs(n, support);
        let kff = submatrix(stiffness.matrix(), &free);
        let a = kff * (phi2 * dt * dt) + DMatrix::identity(free.len(), free.len()) * st;
        let (lo, hi) = bandwidths(&a);
        let effective_mass = BandedLu::factor(&a, lo, hi).map_err(|e| {
            Error::Singular(format!(
                "St·I + φ₂ΔT²·K cannot be factored (St = {st}, ΔT = {dt}): {e}"
            ))
        })?;
        Ok(Self {
            stiffness,
            free,
            support,
            st,
            dt,
            phi1,
            phi2,
            effective_mass,
        })
    }

    pub fn stiffness(&self) -> &StiffnessOperator {
        &self.stiffness
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn st(&self) -> f64 {
        self.st
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn phi1(&self) -> f64 {
        self.phi1
    }

    pub fn phi2(&self) -> f64 {
        self.phi2
    }

    /// Solves `(St·I + φ₂ΔT²·K_ff)·x = b` on the free DOFs.
    pub fn solve_effective_mass(&self, b: &mut [f64]) {
        self.effective_mass.solve_in_place(b);
    }

    /// `(St·I + φ₂ΔT²·K_ff)·x` on the free DOFs.
    pub fn apply_effective_mass(&self, x: &[f64]) -> Vec<f64> {
        let n = self.stiffness.dim();
        let mut full = vec![0.0; n];
        for (&i, v) in self.free.iter().zip(x) {
            full[i] = *v;
        }
        let kx = self.stiffness.apply(&full);
        let c = self.phi2 * self.dt * self.dt;
        self.free
            .iter()
            .zip(x)
            .map(|(&i, v)| self.st * v + c * kx[i])
            .collect()
    }

    /// Advances one step under the end-of-step pressure `pressure` scaled by `beta`.
    pub fn step(&self, state: &BeamState, pressure: &[f64], beta: f64) -> BeamState {
        let n = self.stiffness.dim();
        let dt = self.dt;
        let half_minus = 0.5 - self.phi2;
        let predictor: Vec<f64> = (0..n)
            .map(|i| state.h[i] + dt * state.hdot[i] + half_minus * dt * dt * state.hddot[i])
            .collect();
        let force = self.stiffness.force(&predictor);
        let mut acc: Vec<f64> = self
            .free
            .iter()
            .map(|&i| beta * pressure[i] - force[i])
            .collect();
        self.effective_mass.solve_in_place(&mut acc);

        let mut next = match self.support {
            Support::Clamped => BeamState::rest(n),
            Support::Sliding => BeamState {
                h: vec![0.0; n],
                hdot: vec![0.0; n],
                hddot: vec![0.0; n],
            },
        };
        for (&i, a) in self.free.iter().zip(acc) {
            next.hddot[i] = a;
            next.hdot[i] =
                state.hdot[i] + (1.0 - self.phi1) * dt * state.hddot[i] + self.phi1 * dt * a;
            next.h[i] = predictor[i] + self.phi2 * dt * dt * a;
        }
        next
    }
}

/// Static equilibrium `K·H = β·P` with clamped ends.
pub fn static_solve(stiffness: &StiffnessOperator, pressure: &[f64], beta: f64) -> Result<BeamState> {
    let n = stiffness.dim();
    assert_eq!(pressure.len(), n);
    let free = free_dofs(n, Support::Clamped);
    let kff = submatrix(stiffness.matrix(), &free);
    let lu = kff.clone().lu();
    let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| beta * pressure[i]));
    let mut w = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("clamped stiffness is singular".into()))?;
    // One round of iterative refinement; K is badly conditioned on fine grids.
    let r = &rhs - &kff * &w;
    if let Some(dw) = lu.solve(&r) {
        w += dw;
    }
    let mut state = BeamState::rest(n);
    for (&i, v) in free.iter().zip(w.iter()) {
        state.h[i] = 1.0 + v;
    }
    Ok(state)
}
