//! Complex sine integral and the nonlocal bending kernel built from it.
//!
//! ```text
//! g(z) = Σ_{n≥1} (−1)ⁿ z²ⁿ / ((2n−1)(2n)!) = 1 − cos z − z·Si(z),   g′(z) = −Si(z)
//! ```
//!
//! The power series is summed directly for small |z|. For larger |z| the
//! alternating terms grow like e^{|z|}/√|z| before decaying, which destroys
//! every significant digit in double precision well before |z| = 40, so Si is
//! taken from the exponential integral continued fraction there instead.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Terms allowed before a power series is declared non-convergent.
pub const MAX_SERIES_TERMS: usize = 200;

/// Below this |z| the power series loses at most a few digits.
const SERIES_RADIUS: f64 = 4.0;

/// Σ_{n≥1} (−1)ⁿ z²ⁿ / ((2n−1)(2n)!), stopped once the next term is below
/// `rel_tol` times the partial sum. Returns the sum and the number of terms.
pub fn g_series(z: Complex64, rel_tol: f64) -> Result<(Complex64, usize)> {
    let z2 = z * z;
    let mut t = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..=MAX_SERIES_TERMS {
        let nf = n as f64;
        t *= -z2 / ((2.0 * nf - 1.0) * (2.0 * nf));
        let term = t / (2.0 * nf - 1.0);
        sum += term;
        if !(sum.re.is_finite() && sum.im.is_finite()) {
            break;
        }
        if term.norm() <= rel_tol * sum.norm() || sum.norm() == 0.0 {
            return Ok((sum, n));
        }
    }
    Err(Error::RootNotFound(format!(
        "kernel series did not converge in {MAX_SERIES_TERMS} terms at kΔ = {z}"
    )))
}

/// Si(z) = Σ_{n≥0} (−1)ⁿ z^{2n+1} / ((2n+1)(2n+1)!).
pub fn si_series(z: Complex64, rel_tol: f64) -> Result<Complex64> {
    let z2 = z * z;
    let mut t = z;
    let mut sum = z;
    if z.norm() == 0.0 {
        return Ok(sum);
    }
    for n in 1..=MAX_SERIES_TERMS {
        let nf = n as f64;
        t *= -z2 / ((2.0 * nf) * (2.0 * nf + 1.0));
        let term = t / (2.0 * nf + 1.0);
        sum += term;
        if !(sum.re.is_finite() && sum.im.is_finite()) {
            break;
        }
        if term.norm() <= rel_tol * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::RootNotFound(format!(
        "sine integral series did not converge in {MAX_SERIES_TERMS} terms at z = {z}"
    )))
}

/// E1(w) by the modified Lentz continued fraction; `None` if it stalls
/// (w on or very near the negative real axis).
fn e1_continued_fraction(w: Complex64) -> Option<Complex64> {
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 20_000;
    let one = Complex64::new(1.0, 0.0);
    let mut b = w + one;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = one / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = an * d + b;
        if d.norm() < TINY {
            d = Complex64::new(TINY, 0.0);
        }
        c = b + an / c;
        if c.norm() < TINY {
            c = Complex64::new(TINY, 0.0);
        }
        d = one / d;
        let del = c * d;
        h *= del;
        if (del - one).norm() < 1e-16 {
            return Some(h * (-w).exp());
        }
    }
    None
}

/// Complex sine integral.
pub fn sine_integral(z: Complex64, rel_tol: f64) -> Result<Complex64> {
    if z.norm() <= SERIES_RADIUS || z.re == 0.0 {
        return si_series(z, rel_tol);
    }
    // Si is odd; evaluate in the right half-plane.
    let (w, sign) = if z.re > 0.0 { (z, 1.0) } else { (-z, -1.0) };
    let i = Complex64::i();
    match (e1_continued_fraction(i * w), e1_continued_fraction(-i * w)) {
        (Some(ep), Some(em)) => Ok(sign * (FRAC_PI_2 + (ep - em) / (2.0 * i))),
        _ => si_series(z, rel_tol),
    }
}

/// g(z) and g′(z) = −Si(z).
pub fn kernel_g(z: Complex64, rel_tol: f64) -> Result<(Complex64, Complex64)> {
    if z.norm() <= SERIES_RADIUS {
        let (g, _) = g_series(z, rel_tol)?;
        return Ok((g, -si_series(z, rel_tol)?));
    }
    let si = sine_integral(z, rel_tol)?;
    Ok((1.0 - z.cos() - z * si, -si))
}
