use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// x half-width: x ∈ [−R1, R1].
    pub r1: f64,
    pub l2: f64,
    pub r2: f64,
    pub h: f64,
    pub expiry: f64,
    /// Target parabolic mesh ratio k/h².
    pub mesh_ratio: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { r1: 4.0, l2: 0.05, r2: 6.05, h: 0.1, expiry: 0.5, mesh_ratio: 0.4 }
    }
}

impl GridSpec {
    pub fn with_h(&self, h: f64) -> Self {
        Self { h, ..*self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    /// x-nodes are i·h for i = −N..=N.
    pub n: usize,
    /// y-nodes are L2 + j·h for j = 0..=M.
    pub m: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub k: f64,
    pub n_steps: usize,
}

fn count(extent: f64, h: f64, what: &str) -> Result<usize> {
    let q = extent / h;
    let n = q.round();
    if n < 1.0 || (q - n).abs() > 1e-9 * q.max(1.0) {
        return Err(Error::Config(format!(
            "{what} = {extent} is not an integer multiple of h = {h}"
        )));
    }
    Ok(n as usize)
}

pub fn build_grid(spec: &GridSpec) -> Result<Grid> {
    if !(spec.h > 0.0 && spec.mesh_ratio > 0.0 && spec.expiry > 0.0) {
        return Err(Error::Config("h, mesh_ratio and expiry must be positive".into()));
    }
    let n_steps = (spec.expiry / (spec.mesh_ratio * spec.h * spec.h) - 1e-9).ceil().max(1.0) as usize;
    build_grid_with_steps(spec, n_steps)
}

/// Same nodes as [`build_grid`] but with an explicit step count (time-refinement studies).
pub fn build_grid_with_steps(spec: &GridSpec, n_steps: usize) -> Result<Grid> {
    if !(spec.h > 0.0 && spec.expiry > 0.0) || n_steps == 0 {
        return Err(Error::Config("h, expiry and step count must be positive".into()));
    }
    if !(spec.l2 > 0.0) {
        return Err(Error::Config(format!("L2 = {} must be > 0 (diffusion degenerates at y = 0)", spec.l2)));
    }
    if !(spec.r2 > spec.l2) {
        return Err(Error::Config(format!("R2 = {} must exceed L2 = {}", spec.r2, spec.l2)));
    }
    let n = count(spec.r1, spec.h, "R1")?;
    let m = count(spec.r2 - spec.l2, spec.h, "R2 - L2")?;
    if n < 3 || m < 4 {
        return Err(Error::Config(format!("grid too small: N = {n}, M = {m}")));
    }
    let x = (0..=2 * n).map(|i| (i as f64 - n as f64) * spec.h).collect();
    let y = (0..=m).map(|j| spec.l2 + j as f64 * spec.h).collect();
    Ok(Grid { spec: *spec, n, m, x, y, k: spec.expiry / n_steps as f64, n_steps })
}

impl Grid {
    pub fn h(&self) -> f64 {
        self.spec.h
    }
    pub fn nx(&self) -> usize {
        2 * self.n + 1
    }
    pub fn ny(&self) -> usize {
        self.m + 1
    }
    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Row-major, x fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }
}

/// Stride map from a coarse grid into a nested fine grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeMap {
    pub stride: usize,
}

impl NodeMap {
    #[inline]
    pub fn fine(&self, i: usize, j: usize) -> (usize, usize) {
        (i * self.stride, j * self.stride)
    }
}

pub fn common_nodes(coarse: &Grid, fine: &Grid) -> Result<NodeMap> {
    let q = coarse.h() / fine.h();
    let s = q.round();
    if s < 1.0 || (q - s).abs() > 1e-9 * q {
        return Err(Error::Config(format!(
            "grids do not nest: h = {} is not an integer multiple of {}",
            coarse.h(),
            fine.h()
        )));
    }
    let (a, b) = (&coarse.spec, &fine.spec);
    let tol = 1e-9 * (1.0 + a.r1.abs() + a.r2.abs());
    if (a.r1 - b.r1).abs() > tol || (a.l2 - b.l2).abs() > tol || (a.r2 - b.r2).abs() > tol {
        return Err(Error::Config("grids do not nest: domains differ".into()));
    }
    Ok(NodeMap { stride: s as usize })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(h: f64) -> GridSpec {
        GridSpec { r1: 4.0, l2: 0.1, r2: 4.1, h, expiry: 0.5, mesh_ratio: 0.4 }
    }

    #[test]
    fn counts() {
        let g = build_grid(&spec(0.4)).unwrap();
        assert_eq!((g.n, g.nx(), g.m, g.ny()), (10, 21, 10, 11));
        let g = build_grid(&spec(0.1)).unwrap();
        assert_eq!(g.n_steps, 125);
        assert!((g.k - 0.004).abs() < 1e-15);
        assert!((g.k * g.n_steps as f64 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn k_rounds_down() {
        for h in [0.4, 0.2, 0.1, 0.05, 0.025] {
            let g = build_grid(&spec(h)).unwrap();
            assert!(g.k <= 0.4 * h * h * (1.0 + 1e-12));
            assert!((g.k / (h * h) - 0.4).abs() <= 0.4 * g.k / 0.5 + 1e-12);
        }
    }

    #[test]
    fn non_divisible_bounds() {
        let e = build_grid(&GridSpec { r1: 4.1, ..spec(0.4) }).unwrap_err();
        assert!(e.to_string().contains("R1"));
        let e = build_grid(&GridSpec { r2: 4.0, ..spec(0.4) }).unwrap_err();
        assert!(e.to_string().contains("R2"));
        assert!(build_grid(&GridSpec { l2: 0.0, r2: 4.0, ..spec(0.4) }).is_err());
    }

    #[test]
    fn nesting() {
        let fine = build_grid(&spec(0.025)).unwrap();
        for (h, s) in [(0.4, 16), (0.2, 8), (0.1, 4), (0.05, 2)] {
            assert_eq!(common_nodes(&build_grid(&spec(h)).unwrap(), &fine).unwrap().stride, s);
        }
        let g = build_grid(&GridSpec { r1: 4.2, l2: 0.1, r2: 4.3, ..spec(0.3) }).unwrap();
        let f = build_grid(&GridSpec { r1: 4.2, l2: 0.1, r2: 4.3, ..spec(0.025) }).unwrap();
        assert_eq!(common_nodes(&g, &f).unwrap().stride, 12);
        let odd = build_grid(&GridSpec { r1: 0.035 * 100.0, l2: 0.1, r2: 0.1 + 0.035 * 100.0, ..spec(0.035) }).unwrap();
        let f2 = build_grid(&GridSpec { r1: 3.5, l2: 0.1, r2: 3.6, ..spec(0.025) }).unwrap();
        assert!(common_nodes(&odd, &f2).is_err());
    }
}
