//! Error norms against a nested fine-grid reference and log-log order fits.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greeks::{compute, GreekMode, GreekSurface, Quantity};
use crate::grid::{build_grid, common_nodes, GridSpec};
use crate::model::{BatesParams, ContractSpec};
use crate::operator::SchemeKind;
use crate::stepper::{solve_pide, SolveReport, SolverOptions};

/// Physical rectangle over which nodal differences are taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormWindow {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl NormWindow {
    /// The coarsest grid's domain with `trim` nodes removed at every edge,
    /// restricted to variances ≥ `min_variance`.
    pub fn for_study(spec: &GridSpec, h_max: f64, trim: usize, min_variance: f64, params: &BatesParams) -> Self {
        let band = trim as f64 * h_max;
        Self {
            x_lo: -spec.r1 + band,
            x_hi: spec.r1 - band,
            y_lo: (spec.l2 + band).max(min_variance / params.sigma_v),
            y_hi: spec.r2 - band,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let eps = 1e-9;
        x >= self.x_lo - eps && x <= self.x_hi + eps && y >= self.y_lo - eps && y <= self.y_hi + eps
    }
}

/// (ε₂, ε_∞) over coarse nodes that coincide with valid reference nodes.
/// ε₂ = sqrt(h²·Σ diff²) with the coarse h.
pub fn error_norms(coarse: &GreekSurface, reference: &GreekSurface, window: Option<&NormWindow>) -> Result<(f64, f64)> {
    if coarse.kind != reference.kind {
        return Err(Error::Config(format!("cannot compare {} with {}", coarse.kind, reference.kind)));
    }
    let map = common_nodes(&coarse.grid, &reference.grid)?;
    let g = &coarse.grid;
    let (mut sum, mut max, mut count) = (0.0f64, 0.0f64, 0usize);
    for j in coarse.j0..coarse.j0 + coarse.nyv {
        for i in coarse.i0..coarse.i0 + coarse.nxv {
            if window.is_some_and(|w| !w.contains(g.x[i], g.y[j])) {
                continue;
            }
            let (fi, fj) = map.fine(i, j);
            if !reference.contains(fi, fj) {
                continue;
            }
            let d = coarse.at(i, j) - reference.at(fi, fj);
            sum += d * d;
            max = max.max(d.abs());
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Domain("norm window contains no common nodes".into()));
    }
    Ok(((g.h() * g.h() * sum).sqrt(), max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderFit {
    /// Slope in log ε = log C + m·log h.
    pub m: f64,
    pub c: f64,
}

pub fn fit_order(points: &[(f64, f64)]) -> Result<OrderFit> {
    if points.len() < 2 {
        return Err(Error::Config("order fit needs at least two mesh sizes".into()));
    }
    if points.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0)) {
        return Err(Error::Config("order fit needs positive h and errors".into()));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(h, e)| (h.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Config("order fit needs distinct mesh sizes".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let m = sxy / sxx;
    Ok(OrderFit { m, c: (my - m * mx).exp() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub h: f64,
    pub eps_l2: f64,
    pub eps_linf: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub scheme: SchemeKind,
    pub quantity: Quantity,
    pub h_ref: f64,
    pub rows: Vec<ErrorRow>,
    pub fit_l2: OrderFit,
    pub fit_linf: OrderFit,
    pub window: Option<NormWindow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StudySettings {
    pub h_ref: f64,
    /// Lower variance bound of the norm window; 0 keeps the whole trimmed domain.
    pub norm_min_variance: f64,
    pub mode: GreekMode,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self { h_ref: 0.025, norm_min_variance: 0.2, mode: GreekMode::Standard }
    }
}

pub const DEFAULT_H_LIST: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

/// One scheme solved on every mesh of a study plus the reference mesh.
#[derive(Clone, Debug)]
pub struct StudySolves {
    pub scheme: SchemeKind,
    pub params: BatesParams,
    pub contract: ContractSpec,
    pub base: GridSpec,
    pub reference: Arc<SolveReport>,
    /// Sorted by h descending.
    pub coarse: Vec<(f64, Arc<SolveReport>)>,
}

fn sorted_h_list(h_list: &[f64]) -> Result<Vec<f64>> {
    if h_list.is_empty() {
        return Err(Error::Config("h_list is empty".into()));
    }
    if h_list.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::Config("h_list entries must be positive".into()));
    }
    let mut hs = h_list.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    hs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    Ok(hs)
}

pub fn solve_study(
    scheme: SchemeKind,
    h_list: &[f64],
    h_ref: f64,
    base: &GridSpec,
    params: &BatesParams,
    contract: &ContractSpec,
    opts: &SolverOptions,
) -> Result<StudySolves> {
    let hs = sorted_h_list(h_list)?;
    let base = GridSpec { expiry: contract.expiry, ..*base };
    let fine = build_grid(&base.with_h(h_ref))?;
    let is_ref = |h: f64| (h - h_ref).abs() <= 1e-12 * h_ref;
    let mut grids = Vec::new();
    for &h in hs.iter().filter(|&&h| !is_ref(h)) {
        let g = build_grid(&base.with_h(h))?;
        common_nodes(&g, &fine)?;
        grids.push(g);
    }
    // reference first: it dominates the cost, so start it before the small runs
    let all: Vec<_> = std::iter::once(fine).chain(grids).collect();
    let solved = all
        .par_iter()
        .map(|g| solve_pide(params, contract, g, scheme, opts).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    let reference = solved[0].clone();
    let mut rest = solved.into_iter().skip(1);
    let coarse = hs
        .iter()
        .map(|&h| (h, if is_ref(h) { reference.clone() } else { rest.next().expect("one solve per mesh") }))
        .collect();
    Ok(StudySolves { scheme, params: *params, contract: *contract, base, reference, coarse })
}

impl StudySolves {
    pub fn h_max(&self) -> f64 {
        self.coarse.first().map_or(self.reference.surface.grid.h(), |c| c.0)
    }

    pub fn default_window(&self, settings: &StudySettings) -> NormWindow {
        NormWindow::for_study(&self.base, self.h_max(), 2, settings.norm_min_variance, &self.params)
    }

    pub fn report(&self, quantity: Quantity, settings: &StudySettings) -> Result<ConvergenceReport> {
        let window = self.default_window(settings);
        self.report_in(quantity, settings.mode, Some(window))
    }

    pub fn report_in(&self, quantity: Quantity, mode: GreekMode, window: Option<NormWindow>) -> Result<ConvergenceReport> {
        let (p, c) = (&self.params, &self.contract);
        let reference = compute(quantity, &self.reference, p, c, mode)?;
        let mut rows = Vec::with_capacity(self.coarse.len());
        for (h, rep) in &self.coarse {
            let gs = compute(quantity, rep, p, c, mode)?;
            let (eps_l2, eps_linf) = error_norms(&gs, &reference, window.as_ref())?;
            rows.push(ErrorRow { h: *h, eps_l2, eps_linf });
        }
        let pts = |f: fn(&ErrorRow) -> f64| rows.iter().map(|r| (r.h, f(r))).collect::<Vec<_>>();
        Ok(ConvergenceReport {
            scheme: self.scheme,
            quantity,
            h_ref: self.reference.surface.grid.h(),
            fit_l2: fit_order(&pts(|r| r.eps_l2))?,
            fit_linf: fit_order(&pts(|r| r.eps_linf))?,
            rows,
            window,
        })
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run_convergence_study(
    scheme: SchemeKind,
    quantity: Quantity,
    h_list: &[f64],
    params: &BatesParams,
    contract: &ContractSpec,
    base: &GridSpec,
    opts: &SolverOptions,
    settings: &StudySettings,
) -> Result<ConvergenceReport> {
    solve_study(scheme, h_list, settings.h_ref, base, params, contract, opts)?.report(quantity, settings)
}
