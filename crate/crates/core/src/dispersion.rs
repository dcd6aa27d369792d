//! Linear waves on the uniform base state H₀ = 1, Q₀ = 1, P₀ = 0.
//!
//! Harmonic perturbations ∝ e^{i(kX − ωT)} satisfy a·ω² + b·ω + c = 0 with
//!
//! ```text
//! a = St·k² + β·Re
//! b = −(12/5)·β·Re·k + 12iβ
//! c = (6/5)·k²·β·Re − 24ikβ − k²·𝒟(Δ, k)
//! ```
//!
//! where 𝒟 is the nonlocal bending symbol, 𝒟 → k⁴ as Δ → 0.

use crate::config::DimensionlessParams;
use crate::error::{Error, Result};
use crate::special::kernel_g;
use num_complex::Complex64;
use rayon::prelude::*;

/// Default truncation tolerance for the kernel series.
pub const SERIES_REL_TOL: f64 = 1e-14;

/// The base state perturbations are taken about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseState {
    pub h0: f64,
    pub q0: f64,
    pub p0: f64,
}

impl Default for BaseState {
    fn default() -> Self {
        Self {
            h0: 1.0,
            q0: 1.0,
            p0: 0.0,
        }
    }
}

/// A solution (k, ω) of the dispersion relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint {
    pub k: Complex64,
    pub omega: Complex64,
    /// Re ω / Re k.
    pub phase_velocity: f64,
    /// Im k.
    pub spatial_damping: f64,
    /// +1 for Re ω > 0, −1 for Re ω < 0, 0 for a single or standing root.
    pub branch_id: i8,
}

impl DispersionPoint {
    pub fn new(k: Complex64, omega: Complex64) -> Self {
        let branch_id = if omega.re > 0.0 {
            1
        } else if omega.re < 0.0 {
            -1
        } else {
            0
        };
        Self {
            k,
            omega,
            phase_velocity: omega.re / k.re,
            spatial_damping: k.im,
            branch_id,
        }
    }

    /// |aω² + bω + c| / (|a||ω|² + |b||ω| + |c|).
    pub fn relative_residual(&self, params: &DimensionlessParams) -> Result<f64> {
        let (a, b, c) = dispersion_coefficients(params, self.k)?;
        let w = self.omega;
        let scale = a.norm() * w.norm_sqr() + b.norm() * w.norm() + c.norm();
        Ok((a * w * w + b * w + c).norm() / scale.max(f64::MIN_POSITIVE))
    }
}

/// 𝒟(Δ, k) = (1/Δ²)(2k Σ_{n≥1} (−1)ⁿ(kΔ)^{2n−1}/((2n−1)(2n)!))² = 4g(kΔ)²/Δ⁴.
pub fn eval_d(delta: f64, k: Complex64) -> Result<Complex64> {
    eval_d_with_tol(delta, k, SERIES_REL_TOL)
}

pub fn eval_d_with_tol(delta: f64, k: Complex64, rel_tol: f64) -> Result<Complex64> {
    Ok(eval_d_and_derivative(delta, k, rel_tol)?.0)
}

/// 𝒟 and d𝒟/dk.
pub fn eval_d_and_derivative(delta: f64, k: Complex64, rel_tol: f64) -> Result<(Complex64, Complex64)> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter {
            field: "Delta",
            reason: format!("must be positive, got {delta}"),
        });
    }
    let (g, dg) = kernel_g(k * delta, rel_tol)?;
    let d4 = delta.powi(4);
    Ok((4.0 * g * g / d4, 8.0 * g * dg / (d4 / delta)))
}

/// (a, b, c) of a·ω² + b·ω + c = 0.
pub fn dispersion_coefficients(
    params: &DimensionlessParams,
    k: Complex64,
) -> Result<(Complex64, Complex64, Complex64)> {
    Ok(coefficients_and_derivatives(params, k, SERIES_REL_TOL)?.0)
}

type Triple = (Complex64, Complex64, Complex64);

fn coefficients_and_derivatives(
    params: &DimensionlessParams,
    k: Complex64,
    rel_tol: f64,
) -> Result<(Triple, Triple)> {
    let (st, beta, re) = (params.St, params.beta, params.Re);
    let i = Complex64::i();
    let (d, dd) = eval_d_and_derivative(params.Delta, k, rel_tol)?;
    let a = st * k * k + beta * re;
    let b = -2.4 * beta * re * k + 12.0 * i * beta;
    let c = 1.2 * k * k * beta * re - 24.0 * i * k * beta - k * k * d;
    let da = 2.0 * st * k;
    let db = Complex64::new(-2.4 * beta * re, 0.0);
    let dc = 2.4 * k * beta * re - 24.0 * i * beta - 2.0 * k * d - k * k * dd;
    Ok(((a, b, c), (da, db, dc)))
}

/// Roots of a·ω² + b·ω + c = 0, avoiding cancellation between −b and the root.
fn quadratic_roots(a: Complex64, b: Complex64, c: Complex64) -> Vec<Complex64> {
    let disc = (b * b - 4.0 * a * c).sqrt();
    let s = if (b.conj() * disc).re >= 0.0 { disc } else { -disc };
    let q = -0.5 * (b + s);
    if q.norm() == 0.0 {
        // b = 0 and a·c = 0 ⇒ c = 0: double root at zero.
        return vec![Complex64::new(0.0, 0.0); 2];
    }
    vec![q / a, c / q]
}

/// Frequencies for a real wavenumber k > 0, ordered by branch id (+1 first).
pub fn solve_omega(params: &DimensionlessParams, k: f64) -> Result<Vec<DispersionPoint>> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter {
            field: "k",
            reason: format!("must be positive, got {k}"),
        });
    }
    let kc = Complex64::new(k, 0.0);
    let (a, b, c) = dispersion_coefficients(params, kc)?;
    let roots = if a.norm() == 0.0 {
        if b.norm() == 0.0 {
            return Err(Error::Degenerate(format!(
                "a = b = 0 at k = {k}: the relation does not determine ω"
            )));
        }
        vec![-c / b]
    } else {
        quadratic_roots(a, b, c)
    };
    let mut pts: Vec<DispersionPoint> = roots.into_iter().map(|w| DispersionPoint::new(kc, w)).collect();
    pts.sort_by(|p, q| q.omega.re.total_cmp(&p.omega.re));
    Ok(pts)
}

/// The right-propagating root: Re ω > 0, least temporally damped.
pub fn propagating_omega(params: &DimensionlessParams, k: f64) -> Result<DispersionPoint> {
    solve_omega(params, k)?
        .into_iter()
        .filter(|p| p.omega.re > 0.0)
        .min_by(|p, q| p.omega.im.abs().total_cmp(&q.omega.im.abs()))
        .ok_or_else(|| Error::RootNotFound(format!("no propagating root at k = {k}")))
}

/// v_p(k) on the propagating branch, evaluated in parallel, in input order.
pub fn phase_velocity_curve(params: &DimensionlessParams, k_grid: &[f64]) -> Result<Vec<DispersionPoint>> {
    if k_grid.iter().any(|&k| !(k > 0.0)) || k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            field: "k_grid",
            reason: "wavenumbers must be positive and strictly ascending".into(),
        });
    }
    k_grid.par_iter().map(|&k| propagating_omega(params, k)).collect()
}

/// F(k) = a(k)ω² + b(k)ω + c(k), F′(k), and the scale |a||ω|² + |b||ω| + |c|.
fn residual(
    params: &DimensionlessParams,
    omega: f64,
    k: Complex64,
    rel_tol: f64,
) -> Result<(Complex64, Complex64, f64)> {
    let ((a, b, c), (da, db, dc)) = coefficients_and_derivatives(params, k, rel_tol)?;
    let w2 = omega * omega;
    let f = a * w2 + b * omega + c;
    let df = da * w2 + db * omega + dc;
    let scale = a.norm() * w2 + b.norm() * omega + c.norm();
    Ok((f, df, scale))
}

const NEWTON_MAX_ITERS: usize = 100;
const NEWTON_RESTARTS: usize = 5;
const NEWTON_TOL: f64 = 1e-10;

/// Damped Newton from `k0`; `None` if it does not reach the residual tolerance.
fn newton(params: &DimensionlessParams, omega: f64, k0: Complex64) -> Option<Complex64> {
    let tol = SERIES_REL_TOL;
    let mut k = k0;
    let (mut f, mut df, mut scale) = residual(params, omega, k, tol).ok()?;
    for _ in 0..NEWTON_MAX_ITERS {
        if f.norm() <= NEWTON_TOL * scale {
            // One more full step polishes the root cheaply.
            if df.norm() > 0.0 {
                let polished = k - f / df;
                if let Ok((f2, _, s2)) = residual(params, omega, polished, tol) {
                    if f2.norm() <= f.norm() * s2 / scale {
                        return Some(polished);
                    }
                }
            }
            return Some(k);
        }
        if !(df.norm() > 0.0) || !k.re.is_finite() || !k.im.is_finite() {
            return None;
        }
        let step = f / df;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = k - lambda * step;
            if let Ok((ft, dft, st)) = residual(params, omega, trial, tol) {
                if ft.norm() < f.norm() || ft.norm() <= NEWTON_TOL * st {
                    k = trial;
                    f = ft;
                    df = dft;
                    scale = st;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (f.norm() <= NEWTON_TOL * scale).then_some(k)
}

/// Roots of a monic-after-scaling complex polynomial (highest degree first)
/// by Durand–Kerner iteration. Used only to seed Newton.
fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[0];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let radius = 2.0
        * monic[1..]
            .iter()
            .enumerate()
            .map(|(j, c)| c.norm().powf(1.0 / (j + 1) as f64))
            .fold(1e-3, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / n as f64 + 0.4))
        .collect();
    let eval = |x: Complex64| monic.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c);
    for _ in 0..2000 {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(1e-12, 0.0);
            }
            let dz = eval(z[i]) / denom;
            z[i] -= dz;
            change = change.max(dz.norm() / z[i].norm().max(1e-300));
        }
        if change < 1e-14 {
            break;
        }
    }
    z
}

/// Starting points for the complex-k search.
fn seeds(params: &DimensionlessParams, omega: f64, hint: Option<Complex64>) -> Vec<Complex64> {
    let (st, beta, re, delta) = (params.St, params.beta, params.Re, params.Delta);
    let i = Complex64::i();
    let mut out = Vec::new();
    if let Some(h) = hint {
        out.push(h);
    }
    // Uncoupled classical beam: St·ω² = k⁴.
    let k0 = (st.sqrt() * omega).sqrt();
    if k0 > 0.0 {
        out.push(Complex64::new(k0, 0.0));
    }
    // Local (𝒟 = k⁴) sextic.
    let zero = Complex64::new(0.0, 0.0);
    let sextic = [
        Complex64::new(-1.0, 0.0),
        zero,
        zero,
        zero,
        Complex64::new(st * omega * omega + 1.2 * beta * re, 0.0),
        -(2.4 * beta * re * omega + 24.0 * i * beta),
        beta * re * omega * omega + 12.0 * i * beta * omega,
    ];
    out.extend(polynomial_roots(&sextic));
    // Short-wave limit 𝒟 ≈ π²k²/Δ²: a quadratic in k.
    let qa = Complex64::new(st * omega * omega + 1.2 * beta * re - (std::f64::consts::PI / delta).powi(2), 0.0);
    let qb = -(2.4 * beta * re * omega + 24.0 * i * beta);
    let qc = beta * re * omega * omega + 12.0 * i * beta * omega;
    if qa.norm() > 0.0 {
        out.extend(quadratic_roots(qa, qb, qc));
    }
    // Inviscid-flow-dominated long wave k ≈ ω/2.
    out.push(Complex64::new(0.5 * omega, 0.0));
    out
}

fn is_right_propagating(k: Complex64) -> bool {
    k.re > 1e-8 && k.re > 1e-10 * k.norm()
}

/// Complex k for a real frequency ω > 0: the root with Re k > 0 and the
/// smallest |Im k|. `branch_hint` is used as the first Newton seed.
pub fn solve_k(params: &DimensionlessParams, omega: f64, branch_hint: Option<Complex64>) -> Result<DispersionPoint> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter {
            field: "omega",
            reason: format!("must be positive, got {omega}"),
        });
    }
    let mut roots: Vec<Complex64> = Vec::new();
    for seed in seeds(params, omega, branch_hint) {
        let mut found = newton(params, omega, seed);
        // Deterministic perturbed restarts around the seed.
        for r in 0..NEWTON_RESTARTS {
            if found.is_some() {
                break;
            }
            let angle = 2.0 * std::f64::consts::PI * r as f64 / NEWTON_RESTARTS as f64;
            let jitter = Complex64::from_polar(0.1 * seed.norm().max(1e-3), angle);
            found = newton(params, omega, seed + jitter);
        }
        if let Some(k) = found {
            roots.push(k);
        }
    }
    let best = roots
        .into_iter()
        .filter(|&k| is_right_propagating(k))
        .min_by(|p, q| p.im.abs().total_cmp(&q.im.abs()).then(p.re.total_cmp(&q.re)))
        .ok_or_else(|| {
            Error::RootNotFound(format!(
                "no right-propagating wavenumber found at ω = {omega} after {NEWTON_RESTARTS} restarts per seed"
            ))
        })?;
    Ok(DispersionPoint::new(best, Complex64::new(omega, 0.0)))
}

/// Im k(ω) along an ascending frequency grid, seeding each point with the previous root.
pub fn damping_curve(params: &DimensionlessParams, omega_grid: &[f64]) -> Result<Vec<DispersionPoint>> {
    if omega_grid.iter().any(|&w| !(w > 0.0)) || omega_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            field: "omega_grid",
            reason: "frequencies must be positive and strictly ascending".into(),
        });
    }
    let mut out: Vec<DispersionPoint> = Vec::with_capacity(omega_grid.len());
    for &w in omega_grid {
        let hint = out.last().map(|p| p.k);
        out.push(solve_k(params, w, hint)?);
    }
    Ok(out)
}

/// Evenly spaced grid including both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn params(st: f64, beta: f64, re: f64, delta: f64) -> DimensionlessParams {
        DimensionlessParams::new(st, beta, re, delta).unwrap()
    }

    #[test]
    fn kernel_vanishes_at_zero_wavenumber() {
        assert_eq!(eval_d(0.1, c(0.0)).unwrap(), c(0.0));
    }

    #[test]
    fn kernel_recovers_classical_bending() {
        let d = eval_d(1e-3, c(PI)).unwrap();
        assert!((d.re - PI.powi(4)).abs() / PI.powi(4) < 1e-5);
        assert!((PI.powi(4) - 97.409).abs() < 1e-3);
    }

    #[test]
    fn kernel_is_even() {
        for &k in &[0.7, 12.0, 300.0] {
            let p = eval_d(0.05, c(k)).unwrap();
            let m = eval_d(0.05, c(-k)).unwrap();
            assert!((p - m).norm() <= 1e-13 * p.norm());
        }
    }

    #[test]
    fn kernel_derivative_matches_difference_quotient() {
        let delta = 0.05;
        for &k in &[Complex64::new(3.0, 0.2), Complex64::new(120.0, -4.0)] {
            let (_, dd) = eval_d_and_derivative(delta, k, 1e-15).unwrap();
            let h = 1e-5 * k.norm();
            let fd = (eval_d(delta, k + h).unwrap() - eval_d(delta, k - h).unwrap()) / (2.0 * h);
            assert!((dd - fd).norm() < 1e-6 * dd.norm(), "{dd} vs {fd}");
        }
    }

    #[test]
    fn uncoupled_coefficients() {
        let p = params(10.0, 0.0, 0.5, 0.05);
        let k = c(2.0);
        let (a, b, cc) = dispersion_coefficients(&p, k).unwrap();
        assert_eq!(a, c(40.0));
        assert_eq!(b, c(0.0));
        assert!((cc + 4.0 * eval_d(0.05, k).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn inertialess_coefficients() {
        let p = params(10.0, 3.0, 0.0, 0.05);
        let k = c(2.0);
        let (a, b, cc) = dispersion_coefficients(&p, k).unwrap();
        let i = Complex64::i();
        assert_eq!(a, c(40.0));
        assert_eq!(b, 36.0 * i);
        assert!((cc - (-144.0 * i - 4.0 * eval_d(0.05, k).unwrap())).norm() < 1e-12);
    }

    #[test]
    fn classical_beam_frequency() {
        let p = params(10.0, 0.0, 0.5, 1e-6);
        let pt = propagating_omega(&p, PI).unwrap();
        assert!((pt.omega.re - PI * PI / 10f64.sqrt()).abs() < 1e-6);
        assert!((pt.phase_velocity - 0.99346).abs() < 1e-5);
        let roots = solve_omega(&p, PI).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0].omega + roots[1].omega).norm() < 1e-9);
        assert!(roots.iter().all(|r| r.omega.im == 0.0));
    }

    #[test]
    fn single_root_without_inertia() {
        let p = params(0.0, 2.0, 0.0, 0.05);
        let roots = solve_omega(&p, 1.5).unwrap();
        assert_eq!(roots.len(), 1);
        assert!(roots[0].relative_residual(&p).unwrap() < 1e-12);
        let none = params(0.0, 0.0, 0.0, 0.05);
        assert!(matches!(solve_omega(&none, 1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn roots_satisfy_the_relation() {
        let p = params(10.0, 20.0, 0.5, 1.0 / 120.0);
        for &k in &[0.1, 3.0, 50.0, 800.0] {
            for r in solve_omega(&p, k).unwrap() {
                assert!(r.relative_residual(&p).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn uncoupled_wavenumber_is_real() {
        let p = params(10.0, 0.0, 0.5, 0.04);
        for &w in &[1.0, 10.0, 100.0, 1000.0] {
            let pt = solve_k(&p, w, None).unwrap();
            assert!(pt.k.im.abs() < 1e-10 * pt.k.re, "{pt:?}");
            assert!(pt.relative_residual(&p).unwrap() < 1e-10);
        }
    }

    #[test]
    fn curve_grids_are_validated() {
        let p = params(10.0, 0.0, 0.5, 0.04);
        assert!(phase_velocity_curve(&p, &[2.0, 1.0]).is_err());
        assert!(damping_curve(&p, &[0.0, 1.0]).is_err());
        assert!(solve_k(&p, -1.0, None).is_err());
        assert!(solve_omega(&p, 0.0).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(1.0, 2.0, 5);
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[4], 2.0);
    }
}
