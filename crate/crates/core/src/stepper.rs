//! IMEX time stepping: Crank–Nicolson on the differential part, two-step
//! Adams–Bashforth on the jump integral, one LU factorisation per run.
//!
//! (B − k/2·A)u^{n+1} = (B + k/2·A)u^n + k·B·(3/2·J^n − 1/2·J^{n−1}) + lift
//!
//! The first step uses J^0 alone.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::interp::{interp2, Axis};
use crate::jump::{build_jump_operator, Extension, JumpOperator};
use crate::linalg::BandLu;
use crate::model::{from_solver_value, kreiss_payoff, put_payoff_transformed, BatesParams, ContractSpec};
use crate::operator::{assemble, boundary_values, FarField, OperatorMatrices, SchemeKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    /// Kreiss Φ4 for Hoc4, raw payoff for Central2.
    #[default]
    Auto,
    None,
    Kreiss4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub far_field: FarField,
    pub smoothing: Smoothing,
    pub jump_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { far_field: FarField::Asymptotic, smoothing: Smoothing::Auto, jump_tol: 1e-10 }
    }
}

impl SolverOptions {
    pub fn smooths(&self, scheme: SchemeKind) -> bool {
        match self.smoothing {
            Smoothing::Auto => scheme == SchemeKind::Hoc4,
            Smoothing::None => false,
            Smoothing::Kreiss4 => true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Surface {
    pub grid: Arc<Grid>,
    /// u in grid order (x fastest).
    pub values: Vec<f64>,
    pub n: usize,
    pub tau: f64,
    pub scheme: SchemeKind,
}

impl Surface {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Option value at market point (S, σ) for `contract`, interpolated in (x, y).
    pub fn price_at(&self, spot: f64, variance: f64, contract: &ContractSpec, params: &BatesParams) -> Result<f64> {
        let g = &self.grid;
        let ax = Axis { origin: g.x[0], h: g.h(), count: g.nx() };
        let ay = Axis { origin: g.y[0], h: g.h(), count: g.ny() };
        let u = interp2(ax, ay, &self.values, (spot / contract.strike).ln(), variance / params.sigma_v)?;
        Ok(from_solver_value(u, self.tau, contract, params))
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub surface: Surface,
    /// Levels n−1 and n−2 (most recent first), kept for theta.
    pub history: Vec<Surface>,
    pub factor_count: usize,
    pub solve_count: usize,
    pub refinement_count: usize,
    pub n_steps: usize,
    pub n_unknowns: usize,
    pub bandwidth: usize,
    pub dominance_margin: f64,
    pub wall_time: Duration,
    pub scheme: SchemeKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub scheme: SchemeKind,
    pub h: f64,
    pub k: f64,
    pub n_steps: usize,
    pub n_unknowns: usize,
    pub bandwidth: usize,
    pub factor_count: usize,
    pub solve_count: usize,
    pub refinement_count: usize,
    pub dominance_margin: f64,
    pub warnings: Vec<String>,
}

/// Below this relative diagonal-dominance margin the unpivoted LU is flagged.
pub const DOMINANCE_WARN: f64 = 0.1;

impl SolveReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.dominance_margin < DOMINANCE_WARN {
            w.push(format!(
                "implicit matrix diagonal-dominance margin {:.3} is below {DOMINANCE_WARN}; expect oscillations \
                 (convection-dominated rows; refine h)",
                self.dominance_margin
            ));
        }
        if self.refinement_count > 0 {
            w.push(format!("{} solves needed iterative refinement", self.refinement_count));
        }
        w
    }

    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            scheme: self.scheme,
            h: self.surface.grid.h(),
            k: self.surface.grid.k,
            n_steps: self.n_steps,
            n_unknowns: self.n_unknowns,
            bandwidth: self.bandwidth,
            factor_count: self.factor_count,
            solve_count: self.solve_count,
            refinement_count: self.refinement_count,
            dominance_margin: self.dominance_margin,
            warnings: self.warnings(),
        }
    }
}

/// Everything a time step needs; built once per run.
pub struct StepContext {
    pub params: BatesParams,
    pub grid: Arc<Grid>,
    pub opts: SolverOptions,
    pub mats: OperatorMatrices,
    pub jop: JumpOperator,
    pub lu: BandLu,
}

impl StepContext {
    pub fn new(params: &BatesParams, grid: Arc<Grid>, scheme: SchemeKind, opts: &SolverOptions) -> Result<Self> {
        let mats = assemble(scheme, params, &grid)?;
        Self::from_parts(params, grid, opts, mats)
    }

    pub fn from_parts(params: &BatesParams, grid: Arc<Grid>, opts: &SolverOptions, mats: OperatorMatrices) -> Result<Self> {
        let jop = build_jump_operator(params, &grid, opts.jump_tol)?;
        let lu = BandLu::factorize(&mats.a_impl).map_err(|z| {
            let (i, j) = mats.unknowns[z.row];
            Error::Singular { row: z.row, pivot: z.pivot, x: grid.x[i], y: grid.y[j] }
        })?;
        Ok(Self { params: *params, grid, opts: *opts, mats, jop, lu })
    }

    pub fn jump(&self, s: &Surface) -> Vec<f64> {
        self.jop.apply(&s.values, &self.grid, s.tau, Extension::FarField(self.opts.far_field))
    }

    pub fn initial_surface(&self) -> Surface {
        let g = &self.grid;
        let smooth = self.opts.smooths(self.mats.scheme);
        let row: Vec<f64> = g
            .x
            .iter()
            .map(|&x| if smooth { kreiss_payoff(x, g.h()) } else { put_payoff_transformed(x) })
            .collect();
        let mut values: Vec<f64> = (0..g.ny()).flat_map(|_| row.iter().copied()).collect();
        let (l, r) = boundary_values(&self.params, g, 0.0, self.opts.far_field);
        for j in 0..g.ny() {
            values[g.idx(0, j)] = l;
            values[g.idx(g.nx() - 1, j)] = r;
        }
        Surface { grid: self.grid.clone(), values, n: 0, tau: 0.0, scheme: self.mats.scheme }
    }

    /// Advance one level. `j_nm1 = None` selects the IMEX-Euler start.
    pub fn step(&self, u: &Surface, j_n: &[f64], j_nm1: Option<&[f64]>) -> Result<Surface> {
        let g = &self.grid;
        let k = self.mats.k;
        let tau1 = (u.n + 1) as f64 * g.k;
        let mut rhs = self.mats.a_expl.matvec(&u.values);
        if self.params.lambda != 0.0 {
            let comb: Vec<f64> = match j_nm1 {
                Some(jm) => j_n.iter().zip(jm).map(|(a, b)| 1.5 * a - 0.5 * b).collect(),
                None => j_n.to_vec(),
            };
            let bj = self.mats.b_full.matvec(&comb);
            for (r, v) in rhs.iter_mut().zip(&bj) {
                *r += k * v;
            }
        }
        let (l, r) = boundary_values(&self.params, g, tau1, self.opts.far_field);
        for (x, lift) in rhs.iter_mut().zip(self.mats.boundary_lift(l, r)) {
            *x -= lift;
        }
        self.lu.solve_in_place(&mut rhs)?;
        let mut values = vec![0.0; g.len()];
        self.mats.scatter(&rhs, l, r, &mut values);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: u.n + 1 });
        }
        Ok(Surface { grid: self.grid.clone(), values, n: u.n + 1, tau: tau1, scheme: u.scheme })
    }

    pub fn run(&self) -> Result<SolveReport> {
        let start = Instant::now();
        let mut u = self.initial_surface();
        let mut history: Vec<Surface> = Vec::with_capacity(3);
        let mut j_prev: Option<Vec<f64>> = None;
        for _ in 0..self.grid.n_steps {
            let j_n = if self.params.lambda != 0.0 { self.jump(&u) } else { Vec::new() };
            let next = self.step(&u, &j_n, j_prev.as_deref())?;
            j_prev = Some(j_n);
            history.insert(0, std::mem::replace(&mut u, next));
            history.truncate(2);
        }
        let (lo, up) = self.lu.bandwidths();
        Ok(SolveReport {
            surface: u,
            history,
            factor_count: self.lu.factor_count(),
            solve_count: self.lu.solve_count(),
            refinement_count: self.lu.refinement_count(),
            n_steps: self.grid.n_steps,
            n_unknowns: self.mats.n_unknowns(),
            bandwidth: lo.max(up),
            dominance_margin: self.lu.dominance_margin,
            wall_time: start.elapsed(),
            scheme: self.mats.scheme,
        })
    }
}

pub fn step(ctx: &StepContext, u_n: &Surface, j_n: &[f64], j_nm1: Option<&[f64]>) -> Result<Surface> {
    ctx.step(u_n, j_n, j_nm1)
}

pub fn solve_pide(
    params: &BatesParams,
    contract: &ContractSpec,
    grid: &Grid,
    scheme: SchemeKind,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    params.validate()?;
    contract.validate()?;
    if (grid.spec.expiry - contract.expiry).abs() > 1e-12 * contract.expiry {
        return Err(Error::Config(format!(
            "grid horizon {} differs from contract expiry {}",
            grid.spec.expiry, contract.expiry
        )));
    }
    StepContext::new(params, Arc::new(grid.clone()), scheme, opts)?.run()
}
