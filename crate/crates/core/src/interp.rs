//! Tensor-product four-point Lagrange interpolation on a uniform node block.

use crate::error::{Error, Result};

/// Uniform nodes `origin + q·h`, q = 0..count.
#[derive(Clone, Copy, Debug)]
pub struct Axis {
    pub origin: f64,
    pub h: f64,
    pub count: usize,
}

impl Axis {
    pub fn end(&self) -> f64 {
        self.origin + (self.count - 1) as f64 * self.h
    }

    /// First node index and the weights of the stencil covering t.
    pub fn stencil(&self, t: f64, name: &str) -> Result<(usize, Vec<f64>)> {
        let p = (t - self.origin) / self.h;
        let last = (self.count - 1) as f64;
        if !(p >= -1e-9 && p <= last + 1e-9) {
            return Err(Error::Domain(format!(
                "{name} = {t} outside [{}, {}]",
                self.origin,
                self.end()
            )));
        }
        let r = p.round();
        if (p - r).abs() < 1e-9 {
            return Ok((r as usize, vec![1.0]));
        }
        if self.count < 4 {
            return Err(Error::Domain(format!("fewer than 4 nodes along {name}")));
        }
        let s = (p.floor() as i64 - 1).clamp(0, self.count as i64 - 4) as usize;
        let nodes: Vec<f64> = (0..4).map(|q| (s + q) as f64).collect();
        let w = (0..4)
            .map(|a| {
                (0..4).filter(|&b| b != a).map(|b| (p - nodes[b]) / (nodes[a] - nodes[b])).product()
            })
            .collect();
        Ok((s, w))
    }
}

/// `values[j·ax.count + i]` at (tx, ty).
pub fn interp2(ax: Axis, ay: Axis, values: &[f64], tx: f64, ty: f64) -> Result<f64> {
    let (si, wx) = ax.stencil(tx, "x")?;
    let (sj, wy) = ay.stencil(ty, "y")?;
    let mut acc = 0.0;
    for (b, wyb) in wy.iter().enumerate() {
        let row = &values[(sj + b) * ax.count..];
        let s: f64 = wx.iter().enumerate().map(|(a, w)| w * row[si + a]).sum();
        acc += wyb * s;
    }
    Ok(acc)
}
