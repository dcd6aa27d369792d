use pdfsi::config::{nondimensionalize, PhysicalParams};
use pdfsi::grid::Grid;
use pdfsi::lubrication::{update_flow_rate, update_pressure, FlowHistory};
use proptest::prelude::*;
use std::f64::consts::PI;

fn physical(l: f64, h0: f64, hs: f64, q0: f64, delta: f64) -> PhysicalParams {
    let e = 1.2e6;
    PhysicalParams {
        channel_length: l,
        undeformed_height: h0,
        wall_thickness: hs,
        wall_density: 1030.0,
        fluid_density: 1000.0,
        fluid_viscosity: 1e-3,
        youngs_modulus: e,
        flexural_rigidity: PhysicalParams::rigidity_from_modulus(e, hs),
        inlet_flow_rate: q0,
        material_strength: 2e5,
        horizon: delta,
    }
}

proptest! {
    #[test]
    fn groups_rescale_as_their_definitions_predict(
        l in 1e-3f64..1e-1,
        aspect in 1e-3f64..5e-2,
        q0 in 1e-7f64..1e-4,
        ratio in 1e-3f64..0.3,
        lambda in 0.1f64..10.0,
    ) {
        let h0 = aspect * l;
        let hs = 2.0 * h0;
        let base = nondimensionalize(&physical(l, h0, hs, q0, ratio * l)).unwrap();
        let scaled = nondimensionalize(&physical(lambda * l, lambda * h0, hs, lambda * q0, lambda * ratio * l)).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        // Re ∝ h0·q0/ℓ, St ∝ q0²ℓ²/h0², β ∝ q0ℓ⁵/h0⁴; hs and B held fixed.
        prop_assert!(close(scaled.Delta, base.Delta));
        prop_assert!(close(scaled.Re, base.Re * lambda));
        prop_assert!(close(scaled.St, base.St * lambda * lambda));
        prop_assert!(close(scaled.beta, base.beta * lambda * lambda));
    }

    #[test]
    fn neighbour_sets_are_mutual(n in 13usize..200, m in 3usize..6, node in 0usize..200) {
        prop_assume!(m * 4 < n);
        let g = Grid::new(n, m as f64 / (n - 1) as f64).unwrap();
        let k = (node % n) as isize;
        for j in g.neighbors(k) {
            prop_assert!(g.neighbors(j).contains(&k));
            prop_assert!(g.bond_length(j, k) <= g.delta() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn volumes_cover_the_domain(n in 13usize..500) {
        let g = Grid::new(n, 3.0 / (n - 1) as f64).unwrap();
        let total = g.volume() * n as f64;
        prop_assert!((total - 1.0).abs() <= g.spacing() * (1.0 + 1e-12));
    }
}

/// ∫ₓ¹ [(6/5)(Re/H)·∂(1/H)/∂X + 12/H³] dX̃ by Simpson's rule on a fine grid.
fn steady_pressure_oracle(h: impl Fn(f64) -> f64, dh: impl Fn(f64) -> f64, re: f64, x: f64) -> f64 {
    let n = 20_000;
    let step = (1.0 - x) / n as f64;
    let f = |s: f64| {
        let hv = h(s);
        1.2 * re * (-dh(s) / (hv * hv * hv)) + 12.0 / (hv * hv * hv)
    };
    let mut acc = f(x) + f(1.0);
    for i in 1..n {
        acc += f(x + i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * step / 3.0
}

#[test]
fn steady_pressure_on_deformed_wall_converges_at_second_order() {
    let h = |x: f64| 1.0 + 0.3 * (PI * x).sin().powi(2);
    let dh = |x: f64| 0.3 * PI * (2.0 * PI * x).sin();
    let re = 0.5;
    let err = |n: usize| {
        let g = Grid::new(n, 0.1).unwrap();
        let x = g.positions();
        let hv: Vec<f64> = x.iter().map(|&x| h(x)).collect();
        let q = vec![1.0; n];
        let p = update_pressure(&hv, &q, FlowHistory::Double(&q, &q), re, 1e-3, &g).unwrap();
        x.iter()
            .zip(&p)
            .map(|(&x, p)| (p - steady_pressure_oracle(h, dh, re, x)).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(61), err(121));
    assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "{e1:e} {e2:e}");
}

#[test]
fn flow_rate_from_manufactured_wall_motion_is_second_order() {
    // Ḣ = −sin(πX)·cos(T) at T = 0.3 ⇒ Q = 1 + cos(T)(1 − cos πX)/π.
    let t: f64 = 0.3;
    let err = |n: usize| {
        let g = Grid::new(n, 0.1).unwrap();
        let x = g.positions();
        let hdot: Vec<f64> = x.iter().map(|x| -(PI * x).sin() * t.cos()).collect();
        let q = update_flow_rate(&hdot, &g);
        x.iter()
            .zip(&q)
            .map(|(x, q)| (q - (1.0 + t.cos() * (1.0 - (PI * x).cos()) / PI)).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(61), err(121));
    assert!(e1 / e2 > 3.8 && e1 / e2 < 4.2, "{e1:e} {e2:e}");
}
