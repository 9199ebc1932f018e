//! Greeks on solved surfaces against independent references.

use std::sync::Arc;
use std::time::Duration;

use bates_core::greeks::theta;
use bates_core::{
    build_grid, compute, evaluate_at, mc_price, solve_pide, BatesParams, ContractSpec, GreekMode, GridSpec, McConfig,
    Quantity, SchemeKind, SolveReport, SolverOptions, Surface,
};

fn solve(p: &BatesParams, h: f64, scheme: SchemeKind) -> SolveReport {
    let g = build_grid(&GridSpec { h, ..GridSpec::default() }).unwrap();
    solve_pide(p, &ContractSpec::put(100.0, 0.5), &g, scheme, &SolverOptions::default()).unwrap()
}

#[test]
fn theta_of_frozen_surface_is_pure_discounting() {
    let p = BatesParams::default();
    let c = ContractSpec::put(100.0, 0.5);
    let g = Arc::new(build_grid(&GridSpec { h: 0.2, ..GridSpec::default() }).unwrap());
    let k = g.k;
    let level = |n: usize| Surface {
        grid: g.clone(),
        values: g.x.iter().cycle().take(g.len()).map(|&x| 0.2 + 0.1 * x.cos()).collect(),
        n,
        tau: n as f64 * k,
        scheme: SchemeKind::Hoc4,
    };
    let n = g.n_steps;
    let rep = SolveReport {
        surface: level(n),
        history: vec![level(n - 1), level(n - 2)],
        factor_count: 1,
        solve_count: n,
        refinement_count: 0,
        n_steps: n,
        n_unknowns: 0,
        bandwidth: 0,
        dominance_margin: 0.0,
        wall_time: Duration::ZERO,
        scheme: SchemeKind::Hoc4,
    };
    let th = theta(&rep, &p, &c).unwrap();
    let price = compute(Quantity::Price, &rep, &p, &c, GreekMode::Standard).unwrap();
    let gk = p.growth_rate() * k;
    for (t, v) in th.values.iter().zip(&price.values) {
        let want = p.growth_rate() * v;
        // BDF2 of an exponential: exact up to O((gk)²)
        assert!((t - want).abs() <= gk * gk * want.abs(), "{t} vs {want}");
    }
}

#[test]
fn deep_otm_theta_vanishes_without_rates_or_jumps() {
    let p = BatesParams { r: 0.0, lambda: 0.0, ..BatesParams::default() };
    let rep = solve(&p, 0.1, SchemeKind::Hoc4);
    let c = ContractSpec::put(100.0, 0.5);
    let th = compute(Quantity::Theta, &rep, &p, &c, GreekMode::Standard).unwrap();
    let v = evaluate_at(&th, 100.0 * 3.0f64.exp(), 0.02, &p).unwrap();
    assert!(v.abs() < 1e-6, "{v}");
}

#[test]
fn delta_is_a_monotone_put_delta() {
    let p = BatesParams::default();
    let c = ContractSpec::put(100.0, 0.5);
    for scheme in SchemeKind::ALL {
        let rep = solve(&p, 0.1, scheme);
        let d = compute(Quantity::Delta, &rep, &p, &c, GreekMode::Standard).unwrap();
        let g = &d.grid;
        for j in [20, 40] {
            let row: Vec<f64> = (d.i0..d.i0 + d.nxv).filter(|&i| g.x[i].abs() <= 3.0).map(|i| d.at(i, j)).collect();
            // D1 of u ≈ 1 − eˣ errs by h²/6 relative for the second-order stencil
            let tol = if scheme == SchemeKind::Hoc4 { 1e-4 } else { 0.1f64.powi(2) / 6.0 * 1.2 };
            assert!(row.iter().all(|&v| (-1.0 - tol..=tol).contains(&v)), "{scheme}");
            // deep in the money Δ ≈ −1 carries ~1e−6 discretisation wiggle
            assert!(row.windows(2).all(|w| w[1] >= w[0] - 1e-5), "{scheme} row {j}");
        }
    }
}

/// Central bump-and-reprice with common random numbers.
#[test]
fn delta_matches_mc_bump() {
    let p = BatesParams::default();
    let c = ContractSpec::put(100.0, 0.5);
    // h = 0.1 is too coarse at σ₀ = 0.04 (off by 0.016 at S = 85); 0.05 agrees to 1e−3
    let rep = solve(&p, 0.05, SchemeKind::Hoc4);
    let d = compute(Quantity::Delta, &rep, &p, &c, GreekMode::Standard).unwrap();
    let cfg = McConfig { n_paths: 400_000, n_steps: 100, seed: 5, drift_bump: 0.0 };
    let v0 = 0.04;
    for s in [85.0, 100.0, 115.0] {
        let ds = 1.0;
        let up = mc_price(&p, &c, s + ds, v0, &cfg).unwrap();
        let dn = mc_price(&p, &c, s - ds, v0, &cfg).unwrap();
        let mc = (up.price - dn.price) / (2.0 * ds);
        let pde = evaluate_at(&d, s, v0, &p).unwrap();
        assert!((mc - pde).abs() < 5e-3, "S = {s}: MC {mc} vs PIDE {pde}");
    }
}

#[test]
fn atm_theta_sign_matches_mc() {
    let p = BatesParams::default();
    let c = ContractSpec::put(100.0, 0.5);
    let rep = solve(&p, 0.1, SchemeKind::Hoc4);
    let th = compute(Quantity::Theta, &rep, &p, &c, GreekMode::Standard).unwrap();
    let v0 = 0.04;
    let pde = evaluate_at(&th, 100.0, v0, &p).unwrap();
    let cfg = McConfig { n_paths: 200_000, n_steps: 100, seed: 9, drift_bump: 0.0 };
    let now = mc_price(&p, &c, 100.0, v0, &cfg).unwrap();
    let later = mc_price(&p, &ContractSpec::put(100.0, 0.4), 100.0, v0, &cfg).unwrap();
    let mc = (later.price - now.price) / 0.1;
    let band = 3.0 * (now.stderr.powi(2) + later.stderr.powi(2)).sqrt() / 0.1;
    assert!(mc.abs() > band, "MC theta {mc} not resolved (band {band})");
    assert_eq!(mc.signum(), pde.signum(), "MC {mc} vs PIDE {pde}");
}
