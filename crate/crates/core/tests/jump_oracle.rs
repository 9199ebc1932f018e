//! The jump operator against brute-force integration of the Gaussian jump density.

use bates_core::{build_grid, build_jump_operator, fit_order, BatesParams, Extension, GridSpec};
use statrs::distribution::{Continuous, Normal};

fn grid(h: f64) -> bates_core::Grid {
    build_grid(&GridSpec { r1: 4.0, l2: 0.2, r2: 2.2, h, expiry: 0.5, mesh_ratio: 0.4 }).unwrap()
}

#[test]
fn unit_data_gives_lambda() {
    let p = BatesParams::default();
    for h in [0.4, 0.2, 0.1, 0.05, 0.025] {
        let g = grid(h);
        let op = build_jump_operator(&p, &g, 1e-10).unwrap();
        let j = op.apply(&vec![1.0; g.len()], &g, 0.3, Extension::Constant { left: 1.0, right: 1.0 });
        assert!(j.iter().all(|v| (v - p.lambda).abs() < 1e-8), "h = {h}");
    }
}

/// λ∫u(x+z)p(z)dz by composite Simpson with 20 000 panels over ±12δ.
fn brute_force(p: &BatesParams, u: impl Fn(f64) -> f64, x: f64) -> f64 {
    let dens = Normal::new(p.gamma_j, p.delta_j).unwrap();
    let (a, b) = (p.gamma_j - 12.0 * p.delta_j, p.gamma_j + 12.0 * p.delta_j);
    let n = 20_000;
    let dz = (b - a) / n as f64;
    let f = |z: f64| u(x + z) * dens.pdf(z);
    let mut s = f(a) + f(b);
    for q in 1..n {
        s += if q % 2 == 1 { 4.0 } else { 2.0 } * f(a + q as f64 * dz);
    }
    p.lambda * s * dz / 3.0
}

#[test]
fn quadrature_is_fourth_order() {
    let p = BatesParams { gamma_j: -0.3, delta_j: 0.25, ..BatesParams::default() };
    let u = |x: f64| (-x * x).exp() * (1.0 + 0.3 * x);
    let mut pts = Vec::new();
    for h in [0.2, 0.1, 0.05, 0.025] {
        let g = grid(h);
        let op = build_jump_operator(&p, &g, 1e-12).unwrap();
        let vals: Vec<f64> = (0..g.ny()).flat_map(|_| g.x.iter().map(|&x| u(x))).collect();
        let j = op.apply(&vals, &g, 0.0, Extension::Constant { left: 0.0, right: 0.0 });
        let err = g
            .x
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() <= 2.0)
            .map(|(i, &x)| (j[g.idx(i, 1)] - brute_force(&p, u, x)).abs())
            .fold(0.0, f64::max);
        pts.push((h, err));
    }
    let fit = fit_order(&pts).unwrap();
    assert!(fit.m > 3.6, "{pts:?} -> {fit:?}");
}
