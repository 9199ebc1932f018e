//! λ∫ ũ(x+z) p̃(z) dz with p̃ = N(γ, δ²), offsets on the x-lattice.
//!
//! Weights integrate piecewise-quadratic interpolants of u (one per pair of
//! lattice intervals) exactly against the Gaussian, so they are O(h⁴) for
//! smooth u and remain a proper quadrature even when δ ≪ h. Mass outside
//! the window is closed with the far-field values.

use rayon::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::dot;
use crate::model::BatesParams;
use crate::operator::{far_field_left, FarField};

#[derive(Clone, Debug, PartialEq)]
pub struct JumpOperator {
    pub lambda: f64,
    /// Lattice offset of the first weight: z_m = (m_lo + m)·h.
    pub m_lo: i64,
    pub weights: Vec<f64>,
    pub left_tail: f64,
    pub right_tail: f64,
    /// ∫_{−∞}^{z_lo} e^z p̃(z) dz, for the asymptotic far field.
    pub left_tail_exp: f64,
    pub z_lo: f64,
    pub z_hi: f64,
    params: BatesParams,
}

/// How ū continues past the grid edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extension {
    FarField(FarField),
    /// Constant values on each side (test hook).
    Constant { left: f64, right: f64 },
}

fn std_normal() -> Normal {
    Normal::standard()
}

pub fn build_jump_operator(params: &BatesParams, grid: &Grid, tol: f64) -> Result<JumpOperator> {
    if !(params.delta_j > 0.0) {
        return Err(Error::Config("delta_j must be > 0".into()));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config(format!("jump_tol = {tol} must lie in (0, 1)")));
    }
    let nd = std_normal();
    let h = grid.h();
    let (g, dl) = (params.gamma_j, params.delta_j);
    let w = -nd.inverse_cdf(0.5 * tol);
    let (lo, hi) = (g - w * dl, g + w * dl);
    let m_lo = (lo / h).floor() as i64;
    let mut m_hi = (hi / h).ceil() as i64;
    if (m_hi - m_lo) % 2 == 1 {
        m_hi += 1;
    }
    if m_hi == m_lo {
        m_hi += 2;
    }
    let width = (m_hi - m_lo) as f64 * h;
    if width > 2.0 * grid.spec.r1 {
        return Err(Error::Config(format!(
            "jump window of width {width:.4} exceeds 2·R1 = {}; increase R1 or coarsen jump_tol",
            2.0 * grid.spec.r1
        )));
    }
    let mut weights = vec![0.0; (m_hi - m_lo + 1) as usize];
    for p in 0..((m_hi - m_lo) / 2) as usize {
        let z0 = (m_lo + 2 * p as i64) as f64 * h;
        let zm = z0 + h;
        let (a, b) = ((z0 - g) / dl, (z0 + 2.0 * h - g) / dl);
        // moments of s = (z − γ)/δ over [a, b] against the standard density
        let m0 = nd.cdf(b) - nd.cdf(a);
        let (pa, pb) = (nd.pdf(a), nd.pdf(b));
        let s1 = pa - pb;
        let s2 = m0 + a * pa - b * pb;
        // t = (z − zm)/h = q + r·s
        let (q, r) = ((g - zm) / h, dl / h);
        let t1 = q * m0 + r * s1;
        let t2 = q * q * m0 + 2.0 * q * r * s1 + r * r * s2;
        weights[2 * p] += 0.5 * (t2 - t1);
        weights[2 * p + 1] += m0 - t2;
        weights[2 * p + 2] += 0.5 * (t2 + t1);
    }
    let (z_lo, z_hi) = (m_lo as f64 * h, m_hi as f64 * h);
    let left_tail = nd.cdf((z_lo - g) / dl);
    let right_tail = nd.cdf(-(z_hi - g) / dl);
    let left_tail_exp = (g + 0.5 * dl * dl).exp() * nd.cdf((z_lo - g - dl * dl) / dl);
    Ok(JumpOperator {
        lambda: params.lambda,
        m_lo,
        weights,
        left_tail,
        right_tail,
        left_tail_exp,
        z_lo,
        z_hi,
        params: *params,
    })
}

impl JumpOperator {
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.left_tail + self.right_tail
    }

    fn left_value(&self, x: f64, tau: f64, ext: Extension) -> f64 {
        match ext {
            Extension::FarField(ff) => far_field_left(&self.params, x, tau, ff),
            Extension::Constant { left, .. } => left,
        }
    }

    fn tails(&self, x: f64, tau: f64, ext: Extension) -> f64 {
        match ext {
            Extension::FarField(FarField::Asymptotic) => {
                let p = &self.params;
                self.left_tail * (p.lambda * tau).exp() - self.left_tail_exp * (x + p.growth_rate() * tau).exp()
            }
            Extension::FarField(FarField::Literal) => self.left_tail,
            Extension::Constant { left, right } => self.left_tail * left + self.right_tail * right,
        }
    }

    /// λ·(quadrature + tails) on every node; `u` is in grid order.
    pub fn apply(&self, u: &[f64], grid: &Grid, tau: f64, ext: Extension) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        self.apply_into(u, grid, tau, ext, &mut out);
        out
    }

    pub fn apply_into(&self, u: &[f64], grid: &Grid, tau: f64, ext: Extension, out: &mut [f64]) {
        let nx = grid.nx();
        assert_eq!(u.len(), grid.len());
        if self.lambda == 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let nl = (-self.m_lo).max(0) as usize;
        let nr = (self.m_lo + self.weights.len() as i64 - 1).max(0) as usize;
        let h = grid.h();
        // the extension does not depend on y, so build it once
        let left: Vec<f64> = (0..nl).map(|q| self.left_value(grid.x[0] - (nl - q) as f64 * h, tau, ext)).collect();
        let right_v = match ext {
            Extension::Constant { right, .. } => right,
            Extension::FarField(_) => 0.0,
        };
        let tails: Vec<f64> = grid.x.iter().map(|&x| self.tails(x, tau, ext)).collect();
        out.par_chunks_mut(nx).zip(u.par_chunks(nx)).for_each_init(
            || vec![0.0; nl + nx + nr],
            |ext_row, (o, row)| {
                ext_row[..nl].copy_from_slice(&left);
                ext_row[nl..nl + nx].copy_from_slice(row);
                ext_row[nl + nx..].iter_mut().for_each(|v| *v = right_v);
                for (i, oi) in o.iter_mut().enumerate() {
                    let start = (nl as i64 + i as i64 + self.m_lo) as usize;
                    *oi = self.lambda * (dot(&self.weights, &ext_row[start..]) + tails[i]);
                }
            },
        );
    }
}
