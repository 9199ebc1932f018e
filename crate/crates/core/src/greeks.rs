//! Price, vega, gamma, delta and theta surfaces in market units.
//!
//! Derivative stencils match the producing scheme's order (five-point for
//! Hoc4, three-point for Central2); the differenced direction loses `trim`
//! nodes at each edge.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::interp::{interp2, Axis};
use crate::model::{BatesParams, ContractSpec};
use crate::operator::SchemeKind;
use crate::stepper::{SolveReport, Surface};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Price,
    Vega,
    Gamma,
    Delta,
    Theta,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Price => "price",
            Quantity::Vega => "vega",
            Quantity::Gamma => "gamma",
            Quantity::Delta => "delta",
            Quantity::Theta => "theta",
        }
    }
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "price" => Quantity::Price,
            "vega" => Quantity::Vega,
            "gamma" => Quantity::Gamma,
            "delta" => Quantity::Delta,
            "theta" => Quantity::Theta,
            _ => return Err(Error::Config(format!("unknown quantity '{s}'"))),
        })
    }
}

/// `PaperLiteral` uses the alternative vega (x-differenced, 1/σ_j) and
/// gamma (sign-flipped numerator, no −u_x term) formulas for comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreekMode {
    #[default]
    Standard,
    PaperLiteral,
}

#[derive(Clone, Debug)]
pub struct GreekSurface {
    pub kind: Quantity,
    pub scheme: SchemeKind,
    pub grid: Arc<Grid>,
    pub contract: ContractSpec,
    pub tau: f64,
    /// Valid block: grid nodes i0..i0+nxv, j0..j0+nyv.
    pub i0: usize,
    pub j0: usize,
    pub nxv: usize,
    pub nyv: usize,
    /// Row-major over the valid block.
    pub values: Vec<f64>,
}

impl GreekSurface {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i < self.i0 + self.nxv && j >= self.j0 && j < self.j0 + self.nyv
    }

    /// Value at grid node (i, j); the node must lie in the valid block.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(j - self.j0) * self.nxv + (i - self.i0)]
    }

    pub fn axes(&self) -> (Axis, Axis) {
        let g = &self.grid;
        (
            Axis { origin: g.x[self.i0], h: g.h(), count: self.nxv },
            Axis { origin: g.y[self.j0], h: g.h(), count: self.nyv },
        )
    }
}

/// Weights of the first and second central differences of the given order,
/// offsets −r..=r.
fn d1_weights(order: usize, h: f64) -> Vec<f64> {
    if order == 4 {
        [1.0, -8.0, 0.0, 8.0, -1.0].iter().map(|w| w / (12.0 * h)).collect()
    } else {
        [-0.5, 0.0, 0.5].iter().map(|w| w / h).collect()
    }
}

fn d2_weights(order: usize, h: f64) -> Vec<f64> {
    if order == 4 {
        [-1.0, 16.0, -30.0, 16.0, -1.0].iter().map(|w| w / (12.0 * h * h)).collect()
    } else {
        [1.0, -2.0, 1.0].iter().map(|w| w / (h * h)).collect()
    }
}

/// Symbols of the difference stencils on eˣ: D2(eˣ) = s2·eˣ, D1(eˣ) = s1·eˣ,
/// written without the cancelling constants.
fn exp_symbols(order: usize, h: f64) -> (f64, f64) {
    let (sh, sh2) = ((0.5 * h).sinh(), h.sinh());
    if order == 4 {
        let s2 = (64.0 * sh * sh - 4.0 * sh2 * sh2) / (12.0 * h * h);
        let s1 = (16.0 * sh2 - 2.0 * (2.0 * h).sinh()) / (12.0 * h);
        (s2, s1)
    } else {
        (4.0 * sh * sh / (h * h), sh2 / h)
    }
}

fn discount(params: &BatesParams, tau: f64) -> f64 {
    (-params.growth_rate() * tau).exp()
}

/// Σ w_q u_{c+q} written as Σ_{q>0} w_q·(u_{c+q} − u_c) + w_{−q}·(u_{c−q} − u_c),
/// valid for stencils whose weights sum to zero; constants give exactly 0.
fn diff_sum(w: &[f64], at: impl Fn(isize) -> f64) -> f64 {
    let r = (w.len() / 2) as isize;
    let c = at(0);
    (1..=r).map(|q| w[(r + q) as usize] * (at(q) - c) + w[(r - q) as usize] * (at(-q) - c)).sum()
}

fn apply_x(u: &Surface, w: &[f64], i: usize, j: usize) -> f64 {
    let base = u.grid.idx(i, j) as isize;
    diff_sum(w, |q| u.values[(base + q) as usize])
}

fn apply_y(u: &Surface, w: &[f64], i: usize, j: usize) -> f64 {
    let nx = u.grid.nx() as isize;
    let base = u.grid.idx(i, j) as isize;
    diff_sum(w, |q| u.values[(base + q * nx) as usize])
}

enum Dir {
    X,
    Y,
}

fn build(
    u: &Surface,
    contract: &ContractSpec,
    kind: Quantity,
    dir: Dir,
    trim: usize,
    f: impl Fn(usize, usize) -> f64,
) -> Result<GreekSurface> {
    let g = &u.grid;
    let (nx, ny) = (g.nx(), g.ny());
    let (i0, j0, nxv, nyv) = match dir {
        Dir::X => (trim, 0, nx.saturating_sub(2 * trim), ny),
        Dir::Y => (0, trim, nx, ny.saturating_sub(2 * trim)),
    };
    if nxv == 0 || nyv == 0 || nx < 2 * trim + 1 || ny < 2 * trim + 1 {
        return Err(Error::Config(format!("grid too small for a {}-point stencil", 2 * trim + 1)));
    }
    let mut values = Vec::with_capacity(nxv * nyv);
    for j in j0..j0 + nyv {
        for i in i0..i0 + nxv {
            values.push(f(i, j));
        }
    }
    Ok(GreekSurface {
        kind,
        scheme: u.scheme,
        grid: u.grid.clone(),
        contract: *contract,
        tau: u.tau,
        i0,
        j0,
        nxv,
        nyv,
        values,
    })
}

pub fn price(u: &Surface, params: &BatesParams, contract: &ContractSpec) -> GreekSurface {
    let scale = contract.strike * discount(params, u.tau);
    build(u, contract, Quantity::Price, Dir::X, 0, |i, j| scale * u.at(i, j)).expect("untrimmed surface")
}

pub fn vega(u: &Surface, params: &BatesParams, contract: &ContractSpec, mode: GreekMode) -> Result<GreekSurface> {
    let order = u.scheme.order();
    let w = d1_weights(order, u.grid.h());
    let scale = contract.strike * discount(params, u.tau) / params.sigma_v;
    match mode {
        GreekMode::Standard => build(u, contract, Quantity::Vega, Dir::Y, order / 2, |i, j| scale * apply_y(u, &w, i, j)),
        GreekMode::PaperLiteral => {
            let y = &u.grid.y;
            build(u, contract, Quantity::Vega, Dir::X, order / 2, |i, j| scale / y[j] * apply_x(u, &w, i, j))
        }
    }
}

/// Γ = e^{−(r+λ)τ}/K · (u_xx − u_x)/s², s = S/K.
///
/// The first-difference weights are rescaled by s2/s1 = 1 + O(h^order) so
/// that the discrete operator annihilates eˣ exactly, as the continuous one
/// does (V linear in S has no gamma).
pub fn gamma(u: &Surface, params: &BatesParams, contract: &ContractSpec, mode: GreekMode) -> Result<GreekSurface> {
    let order = u.scheme.order();
    let h = u.grid.h();
    let d2 = d2_weights(order, h);
    let x = &u.grid.x;
    let df = discount(params, u.tau);
    match mode {
        GreekMode::Standard => {
            let (s2, s1) = exp_symbols(order, h);
            let fit = s2 / s1;
            let op: Vec<f64> = d2.iter().zip(d1_weights(order, h)).map(|(a, b)| a - fit * b).collect();
            let scale = df / contract.strike;
            build(u, contract, Quantity::Gamma, Dir::X, order / 2, |i, j| {
                scale * apply_x(u, &op, i, j) * (-2.0 * x[i]).exp()
            })
        }
        GreekMode::PaperLiteral => {
            let scale = contract.strike * df;
            build(u, contract, Quantity::Gamma, Dir::X, order / 2, |i, j| {
                let s = contract.strike * x[i].exp();
                -scale * apply_x(u, &d2, i, j) / (s * s)
            })
        }
    }
}

pub fn delta(u: &Surface, params: &BatesParams, contract: &ContractSpec) -> Result<GreekSurface> {
    let order = u.scheme.order();
    let w = d1_weights(order, u.grid.h());
    let df = discount(params, u.tau);
    let x = &u.grid.x;
    build(u, contract, Quantity::Delta, Dir::X, order / 2, |i, j| df * apply_x(u, &w, i, j) * (-x[i]).exp())
}

/// Θ = ∂V/∂t = −∂V/∂τ by a second-order backward difference of the
/// discounted price over the last three levels.
pub fn theta(report: &SolveReport, params: &BatesParams, contract: &ContractSpec) -> Result<GreekSurface> {
    if report.history.len() < 2 {
        return Err(Error::Config("theta needs the last three time levels (at least two steps)".into()));
    }
    let (u0, u1, u2) = (&report.surface, &report.history[0], &report.history[1]);
    let k = u0.grid.k;
    let kk = contract.strike;
    let (d0, d1, d2) = (discount(params, u0.tau), discount(params, u1.tau), discount(params, u2.tau));
    build(u0, contract, Quantity::Theta, Dir::X, 0, |i, j| {
        let (v0, v1, v2) = (kk * d0 * u0.at(i, j), kk * d1 * u1.at(i, j), kk * d2 * u2.at(i, j));
        -(3.0 * v0 - 4.0 * v1 + v2) / (2.0 * k)
    })
}

pub fn compute(
    kind: Quantity,
    report: &SolveReport,
    params: &BatesParams,
    contract: &ContractSpec,
    mode: GreekMode,
) -> Result<GreekSurface> {
    let u = &report.surface;
    match kind {
        Quantity::Price => Ok(price(u, params, contract)),
        Quantity::Vega => vega(u, params, contract, mode),
        Quantity::Gamma => gamma(u, params, contract, mode),
        Quantity::Delta => delta(u, params, contract),
        Quantity::Theta => theta(report, params, contract),
    }
}

/// Bicubic Lagrange value at market point (S, σ).
pub fn evaluate_at(gs: &GreekSurface, spot: f64, variance: f64, params: &BatesParams) -> Result<f64> {
    if !(spot > 0.0 && variance > 0.0) {
        return Err(Error::Domain(format!("evaluation point S = {spot}, sigma = {variance} must be positive")));
    }
    let (ax, ay) = gs.axes();
    interp2(ax, ay, &gs.values, (spot / gs.contract.strike).ln(), variance / params.sigma_v).map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("{} evaluation outside the trimmed domain: {m}", gs.kind)),
        other => other,
    })
}
