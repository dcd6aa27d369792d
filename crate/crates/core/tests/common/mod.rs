#![allow(dead_code)]

use pdfsi::beam::{assemble_stiffness, BeamState, Newmark, Support};
use pdfsi::grid::Grid;
use quadrature::double_exponential;
use std::f64::consts::PI;

/// ∫₋Δ^Δ (cos kΘ − 1)/Θ² dΘ by panelled double-exponential quadrature.
///
/// cos kΘ − 1 is written as −2 sin²(kΘ/2) so the integrand stays accurate
/// near Θ = 0. The finite part of ∫ cos(kΘ)/Θ² over the same interval is this
/// value minus 2/Δ.
pub fn regularized_integral(k: f64, delta: f64) -> f64 {
    let f = |t: f64| {
        if t == 0.0 {
            return -0.5 * k * k;
        }
        let s = (0.5 * k * t).sin();
        -2.0 * s * s / (t * t)
    };
    // One panel per half oscillation keeps every panel smooth and short.
    let panels = ((k * delta / std::f64::consts::PI).ceil() as usize).max(1);
    let h = delta / panels as f64;
    let half: f64 = (0..panels)
        .map(|i| double_exponential::integrate(f, i as f64 * h, (i + 1) as f64 * h, 1e-15 * k * k * h).integral)
        .sum();
    2.0 * half
}

/// Quadrature form of the nonlocal bending symbol, (1/Δ²)(∫ (cos kΘ − 1)/Θ² dΘ)².
pub fn symbol_by_quadrature(k: f64, delta: f64) -> f64 {
    let i = regularized_integral(k, delta);
    i * i / (delta * delta)
}

/// Direct double sum over a mirror-extended copy of `h`, written without
/// any of the library's indexing helpers.
pub fn brute_force_force(h: &[f64], n: usize, m: usize) -> Vec<f64> {
    let dx = 1.0 / (n - 1) as f64;
    let delta = m as f64 * dx;
    let last = n as i64 - 1;
    let value = |i: i64| -> f64 {
        let j = if i < 0 {
            -i
        } else if i > last {
            2 * last - i
        } else {
            i
        };
        h[j as usize]
    };
    let s = |k: i64| -> f64 {
        let mut acc = 0.0;
        for i in k - m as i64..=k + m as i64 {
            if i == k {
                continue;
            }
            let xi = (i - k).abs() as f64 * dx;
            acc += dx / (xi * xi) * (value(i) - value(k));
        }
        acc
    };
    (0..n as i64)
        .map(|k| {
            let mut acc = 0.0;
            for j in k - m as i64..=k + m as i64 {
                if j == k {
                    continue;
                }
                let xi = (j - k).abs() as f64 * dx;
                acc += dx / (xi * xi) * (s(j) - s(k));
            }
            acc / (delta * delta)
        })
        .collect()
}

/// Amplitude of the cos(2πX) mode after free vibration to T = 1.
pub fn mode_error(dt: f64) -> f64 {
    let grid = Grid::new(61, 0.05).unwrap();
    let k = assemble_stiffness(&grid);
    let shape: Vec<f64> = grid.positions().iter().map(|x| (2.0 * PI * x).cos()).collect();
    // With even mirror ghosts the mode is an exact eigenvector of K.
    let ks = k.apply(&shape);
    let lambda = ks.iter().zip(&shape).map(|(a, b)| a * b).sum::<f64>()
        / shape.iter().map(|v| v * v).sum::<f64>();
    for (a, b) in ks.iter().zip(&shape) {
        assert!((a - lambda * b).abs() < 1e-9 * lambda);
    }
    let st = 1.0;
    let omega = (lambda / st).sqrt();
    let eps = 1e-3;
    let nm = Newmark::new(k.clone(), st, dt, 0.5, 0.25, Support::Sliding).unwrap();
    let h: Vec<f64> = shape.iter().map(|s| 1.0 + eps * s).collect();
    let hddot = k.force(&h).iter().map(|f| -f / st).collect();
    let mut state = BeamState { h, hdot: vec![0.0; 61], hddot };
    let steps = (1.0 / dt).round() as usize;
    let zero = vec![0.0; 61];
    for _ in 0..steps {
        state = nm.step(&state, &zero, 0.0);
    }
    let t = steps as f64 * dt;
    state
        .h
        .iter()
        .zip(&shape)
        .map(|(h, s)| (h - 1.0 - eps * (omega * t).cos() * s).abs())
        .fold(0.0, f64::max)
}

