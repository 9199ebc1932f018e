//! Spatial discretisation of
//!   u_τ = a(u_xx + u_yy) + e·u_xy + c·u_x + d·u_y   (+ λ·J[u])
//! with a = σ_v y/2, e = ρσ_v y, c = −(σ_v y/2 − r + λξ_B), d = κ(θ − σ_v y)/σ_v.
//!
//! Both schemes produce a 3×3 pair (A, B) per node with A·u ≈ B·(u_τ − λJ);
//! B is the identity for Central2. Unknowns are ordered y-fastest so the
//! one-sided Neumann closures stay inside a band of width M + 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::SparseMatrix;
use crate::model::BatesParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Central2,
    #[default]
    Hoc4,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 2] = [SchemeKind::Hoc4, SchemeKind::Central2];

    /// Spatial order, which is also the order of the matching Greek stencils.
    pub fn order(self) -> usize {
        match self {
            SchemeKind::Central2 => 2,
            SchemeKind::Hoc4 => 4,
        }
    }

    /// Nodes lost at each edge by the Greek stencils.
    pub fn trim(self) -> usize {
        self.order() / 2
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Central2 => "central2",
            SchemeKind::Hoc4 => "hoc4",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hoc4" => Ok(SchemeKind::Hoc4),
            "central2" => Ok(SchemeKind::Central2),
            _ => Err(Error::Config(format!("unknown scheme '{s}' (expected hoc4 or central2)"))),
        }
    }
}

/// Value of u as x → −∞.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FarField {
    /// u = e^{λτ} − e^{x+(r+λ)τ}: the discounted forward of a deep in-the-money put.
    #[default]
    Asymptotic,
    /// u = 1.
    Literal,
}

pub fn far_field_left(params: &BatesParams, x: f64, tau: f64, ff: FarField) -> f64 {
    match ff {
        FarField::Asymptotic => (params.lambda * tau).exp() - (x + params.growth_rate() * tau).exp(),
        FarField::Literal => 1.0,
    }
}

/// (left, right) Dirichlet values at x = ∓R1.
pub fn boundary_values(params: &BatesParams, grid: &Grid, tau: f64, ff: FarField) -> (f64, f64) {
    (far_field_left(params, grid.x[0], tau, ff), 0.0)
}

/// `s[di][dj]` multiplies u(x + (di−1)h, y + (dj−1)h).
pub type Stencil = [[f64; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub e: f64,
    pub c: f64,
    pub d: f64,
    /// y-derivatives a', e', c', d' (the coefficients are linear in y).
    pub da: f64,
    pub de: f64,
    pub dc: f64,
    pub dd: f64,
}

pub fn coefficients(p: &BatesParams, y: f64) -> Coefficients {
    let sv = p.sigma_v;
    Coefficients {
        a: 0.5 * sv * y,
        e: p.rho * sv * y,
        c: -(0.5 * sv * y - p.r + p.lambda * p.xi_b()),
        d: p.kappa * (p.theta - sv * y) / sv,
        da: 0.5 * sv,
        de: p.rho * sv,
        dc: -0.5 * sv,
        dd: -p.kappa,
    }
}

/// Correction coefficients of the compact scheme at height y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HocTerms {
    pub alpha: f64,
    pub beta: f64,
    /// Multipliers of δxxδyy, δxxδy, δxδyy, δxδy, δxx, δyy, δx, δy.
    pub k: [f64; 8],
}

/// Substituting the PDE (and its x/y derivatives) for the third and fourth
/// derivatives in the O(h²) truncation error of the central scheme.
pub fn hoc_terms(co: &Coefficients) -> HocTerms {
    let Coefficients { a, e, c, d, da, de, dc, dd } = *co;
    let ea = e / a;
    let alpha = c - ea * da;
    let beta = d - 2.0 * da;
    let k = [
        -2.0 * a - e * e / a,
        -d - 2.0 * da - ea * (c + de) - alpha * ea - beta,
        -c - 2.0 * de - ea * (d + da) - alpha - beta * ea,
        -2.0 * dc - ea * dd - alpha * d / a - beta * (c + de) / a,
        -ea * dc - alpha * c / a - beta * da / a,
        -2.0 * dd - beta * (d + da) / a,
        -beta * dc / a,
        -beta * dd / a,
    ];
    HocTerms { alpha, beta, k }
}

fn d2() -> [f64; 3] {
    [1.0, -2.0, 1.0]
}
fn d1() -> [f64; 3] {
    [-0.5, 0.0, 0.5]
}
fn id() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

/// Tensor product of 1-D x and y difference weights.
fn outer(wx: [f64; 3], wy: [f64; 3], scale: f64) -> Stencil {
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = scale * wx[i] * wy[j];
        }
    }
    s
}

fn axpy(acc: &mut Stencil, f: f64, s: &Stencil) {
    for i in 0..3 {
        for j in 0..3 {
            acc[i][j] += f * s[i][j];
        }
    }
}

pub fn stencils(scheme: SchemeKind, p: &BatesParams, y: f64, h: f64) -> (Stencil, Stencil) {
    let co = coefficients(p, y);
    let h2 = h * h;
    let dxx = outer(d2(), id(), 1.0 / h2);
    let dyy = outer(id(), d2(), 1.0 / h2);
    let dx = outer(d1(), id(), 1.0 / h);
    let dy = outer(id(), d1(), 1.0 / h);
    let dxy = outer(d1(), d1(), 1.0 / h2);
    let mut a = [[0.0; 3]; 3];
    axpy(&mut a, co.a, &dxx);
    axpy(&mut a, co.a, &dyy);
    axpy(&mut a, co.e, &dxy);
    axpy(&mut a, co.c, &dx);
    axpy(&mut a, co.d, &dy);
    let mut b = outer(id(), id(), 1.0);
    if scheme == SchemeKind::Central2 {
        return (a, b);
    }
    let t = hoc_terms(&co);
    let h4 = h2 * h2;
    let higher = [
        outer(d2(), d2(), 1.0 / h4),
        outer(d2(), d1(), 1.0 / (h2 * h)),
        outer(d1(), d2(), 1.0 / (h2 * h)),
        dxy,
        dxx,
        dyy,
        dx,
        dy,
    ];
    for (kk, s) in t.k.iter().zip(&higher) {
        axpy(&mut a, -h2 / 12.0 * kk, s);
    }
    let ea = co.e / co.a;
    let m = h2 / 12.0;
    axpy(&mut b, m, &dxx);
    axpy(&mut b, m, &dyy);
    axpy(&mut b, m * ea, &dxy);
    axpy(&mut b, m * t.alpha / co.a, &dx);
    axpy(&mut b, m * t.beta / co.a, &dy);
    (a, b)
}

/// One-sided zero-slope closures: u_0 = Σ w_l u_{1+l}.
pub fn neumann_weights(scheme: SchemeKind) -> &'static [f64] {
    match scheme {
        SchemeKind::Central2 => &[4.0 / 3.0, -1.0 / 3.0],
        SchemeKind::Hoc4 => &[48.0 / 25.0, -36.0 / 25.0, 16.0 / 25.0, -3.0 / 25.0],
    }
}

#[derive(Clone, Debug)]
pub struct OperatorMatrices {
    pub scheme: SchemeKind,
    pub k: f64,
    /// A and B over unknown rows and all grid nodes (columns in grid order).
    pub a_full: SparseMatrix,
    pub b_full: SparseMatrix,
    /// B − (k/2)A with Neumann rows eliminated and Dirichlet columns removed.
    pub a_impl: SparseMatrix,
    /// B + (k/2)A over all grid nodes.
    pub a_expl: SparseMatrix,
    /// Weights of B − (k/2)A on the left/right Dirichlet columns.
    pub lift_left: Vec<f64>,
    pub lift_right: Vec<f64>,
    /// Grid node (i, j) of each unknown.
    pub unknowns: Vec<(usize, usize)>,
    neumann: &'static [f64],
    nx: usize,
    m: usize,
}

pub fn assemble(scheme: SchemeKind, params: &BatesParams, grid: &Grid) -> Result<OperatorMatrices> {
    if let Some(y) = grid.y.iter().find(|&&y| !(y > 0.0)) {
        return Err(Error::Config(format!("y-node {y} <= 0: diffusion degenerates (L2 must be > 0)")));
    }
    let h = grid.h();
    assemble_with(grid, scheme, grid.k, |y| stencils(scheme, params, y, h))
}

/// Assembly from arbitrary per-row stencils; `scheme` selects the Neumann closure.
pub fn assemble_with(
    grid: &Grid,
    scheme: SchemeKind,
    k: f64,
    stencil: impl Fn(f64) -> (Stencil, Stencil),
) -> Result<OperatorMatrices> {
    let (nx, m) = (grid.nx(), grid.m);
    let neumann = neumann_weights(scheme);
    if m < neumann.len() + 1 {
        return Err(Error::Config(format!("need at least {} y-intervals, got {m}", neumann.len() + 1)));
    }
    let my = m - 1;
    let unk = |i: usize, j: usize| (i - 1) * my + (j - 1);
    let unknowns: Vec<(usize, usize)> = (1..nx - 1).flat_map(|i| (1..m).map(move |j| (i, j))).collect();
    let nu = unknowns.len();
    let nfull = grid.len();

    let cap = nu * 9;
    let (mut ta, mut tb, mut ti, mut te) =
        (Vec::with_capacity(cap), Vec::with_capacity(cap), Vec::with_capacity(cap * 2), Vec::with_capacity(cap));
    let (mut lift_left, mut lift_right) = (vec![0.0; nu], vec![0.0; nu]);
    for j in 1..m {
        let (sa, sb) = stencil(grid.y[j]);
        for i in 1..nx - 1 {
            let row = unk(i, j);
            for di in 0..3 {
                for dj in 0..3 {
                    let (av, bv) = (sa[di][dj], sb[di][dj]);
                    if av == 0.0 && bv == 0.0 {
                        continue;
                    }
                    let (ii, jj) = (i + di - 1, j + dj - 1);
                    let col = grid.idx(ii, jj);
                    ta.push((row, col, av));
                    tb.push((row, col, bv));
                    te.push((row, col, bv + 0.5 * k * av));
                    let imp = bv - 0.5 * k * av;
                    if ii == 0 {
                        lift_left[row] += imp;
                    } else if ii == nx - 1 {
                        lift_right[row] += imp;
                    } else if jj == 0 {
                        for (l, w) in neumann.iter().enumerate() {
                            ti.push((row, unk(ii, 1 + l), imp * w));
                        }
                    } else if jj == m {
                        for (l, w) in neumann.iter().enumerate() {
                            ti.push((row, unk(ii, m - 1 - l), imp * w));
                        }
                    } else {
                        ti.push((row, unk(ii, jj), imp));
                    }
                }
            }
        }
    }
    Ok(OperatorMatrices {
        scheme,
        k,
        a_full: SparseMatrix::from_triplets(nu, nfull, ta),
        b_full: SparseMatrix::from_triplets(nu, nfull, tb),
        a_impl: SparseMatrix::from_triplets(nu, nu, ti),
        a_expl: SparseMatrix::from_triplets(nu, nfull, te),
        lift_left,
        lift_right,
        unknowns,
        neumann,
        nx,
        m,
    })
}

impl OperatorMatrices {
    pub fn n_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    /// Contribution of the Dirichlet columns at the new time level.
    pub fn boundary_lift(&self, left: f64, right: f64) -> Vec<f64> {
        self.lift_left.iter().zip(&self.lift_right).map(|(l, r)| l * left + r * right).collect()
    }

    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.unknowns.iter().map(|&(i, j)| full[j * self.nx + i]).collect()
    }

    /// Full grid values from unknowns, Neumann closures and Dirichlet data.
    pub fn scatter(&self, w: &[f64], left: f64, right: f64, out: &mut [f64]) {
        let (nx, m, my) = (self.nx, self.m, self.m - 1);
        for (n, &(i, j)) in self.unknowns.iter().enumerate() {
            out[j * nx + i] = w[n];
        }
        for i in 1..nx - 1 {
            let col = &w[(i - 1) * my..i * my];
            let (mut lo, mut hi) = (0.0, 0.0);
            for (l, wt) in self.neumann.iter().enumerate() {
                lo += wt * col[l];
                hi += wt * col[my - 1 - l];
            }
            out[i] = lo;
            out[m * nx + i] = hi;
        }
        for j in 0..=m {
            out[j * nx] = left;
            out[j * nx + nx - 1] = right;
        }
    }
}

/// Per-row stencil table (y, A, B) for debugging and cross-validation.
pub fn coefficient_table(scheme: SchemeKind, params: &BatesParams, grid: &Grid) -> String {
    let mut s = String::from("j,y");
    for name in ["a", "b"] {
        for dj in -1..=1 {
            for di in -1..=1 {
                s.push_str(&format!(",{name}[{di}:{dj}]"));
            }
        }
    }
    s.push('\n');
    for (j, &y) in grid.y.iter().enumerate() {
        let (a, b) = stencils(scheme, params, y, grid.h());
        s.push_str(&format!("{j},{y:.17e}"));
        for st in [a, b] {
            for dj in 0..3 {
                for row in &st {
                    s.push_str(&format!(",{:.17e}", row[dj]));
                }
            }
        }
        s.push('\n');
    }
    s
}
