//! Ratio spreads: vega-neutral vertical put spread and gamma-neutral ratio
//! write spread with a delta hedge and theta verdict.
//!
//! The normalised solution u(x, y) does not depend on the strike, so one solve
//! prices both legs; each leg is a different market scaling of the same u.

use serde::{Deserialize, Serialize};

use crate::analysis::StudySolves;
use crate::error::{Error, Result};
use crate::greeks::{compute, evaluate_at, GreekMode, Quantity};
use crate::model::{BatesParams, ContractSpec};
use crate::operator::SchemeKind;
use crate::stepper::SolveReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HedgeGreek {
    Vega,
    Gamma,
}

impl HedgeGreek {
    pub fn quantity(self) -> Quantity {
        match self {
            HedgeGreek::Vega => Quantity::Vega,
            HedgeGreek::Gamma => Quantity::Gamma,
        }
    }
}

/// Write one put at `k_short`, buy `ratio` puts at `k_long`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpreadSpec {
    pub spot: f64,
    pub k_short: f64,
    pub k_long: f64,
    /// Evaluation variance σ₀.
    pub sigma0: f64,
    pub expiry: f64,
    pub greek: HedgeGreek,
}

impl SpreadSpec {
    pub fn example1() -> Self {
        Self { spot: 135.0, k_short: 100.0, k_long: 150.0, sigma0: 0.4, expiry: 0.5, greek: HedgeGreek::Vega }
    }

    pub fn example2() -> Self {
        Self { spot: 100.0, k_short: 120.0, k_long: 100.0, sigma0: 0.4, expiry: 0.5, greek: HedgeGreek::Gamma }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.spot) && ok(self.k_short) && ok(self.k_long) && ok(self.sigma0) && ok(self.expiry)) {
            return Err(Error::Config(format!("spread spec needs positive finite spot, strikes, sigma0 and expiry: {self:?}")));
        }
        Ok(())
    }

    fn legs(&self) -> (ContractSpec, ContractSpec) {
        (ContractSpec::put(self.k_short, self.expiry), ContractSpec::put(self.k_long, self.expiry))
    }
}

fn leg_value(report: &SolveReport, q: Quantity, params: &BatesParams, leg: &ContractSpec, spec: &SpreadSpec, mode: GreekMode) -> Result<f64> {
    let gs = compute(q, report, params, leg, mode)?;
    evaluate_at(&gs, spec.spot, spec.sigma0, params)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HedgeRatio {
    pub g_short: f64,
    pub g_long: f64,
    /// Long quantity per written option: G_short / G_long.
    pub ratio: f64,
}

impl HedgeRatio {
    /// Net greek of −1 short + ratio long, relative to the short leg.
    pub fn residual(&self) -> f64 {
        (self.ratio * self.g_long - self.g_short).abs() / self.g_short.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn hedge_ratio_from(report: &SolveReport, spec: &SpreadSpec, params: &BatesParams, mode: GreekMode) -> Result<HedgeRatio> {
    spec.validate()?;
    let (short, long) = spec.legs();
    let q = spec.greek.quantity();
    let g_short = leg_value(report, q, params, &short, spec, mode)?;
    let g_long = leg_value(report, q, params, &long, spec, mode)?;
    if !(g_long.abs() >= 1e-12) {
        return Err(Error::DegenerateHedge(format!("long-leg {} is {g_long:e} at S = {}, sigma = {}", q, spec.spot, spec.sigma0)));
    }
    Ok(HedgeRatio { g_short, g_long, ratio: g_short / g_long })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WriteSpread {
    pub ratio: f64,
    pub net_delta: f64,
    /// Units of the underlying to hold; negative means sell.
    pub underlying_qty: f64,
    pub net_theta: f64,
    pub recommend: bool,
}

pub fn gamma_write_spread(report: &SolveReport, spec: &SpreadSpec, params: &BatesParams, mode: GreekMode) -> Result<WriteSpread> {
    if spec.greek != HedgeGreek::Gamma {
        return Err(Error::Config("the ratio write spread is gamma-neutral; spec.greek must be gamma".into()));
    }
    let hr = hedge_ratio_from(report, spec, params, mode)?;
    let (short, long) = spec.legs();
    let net = |q| -> Result<f64> {
        Ok(hr.ratio * leg_value(report, q, params, &long, spec, mode)? - leg_value(report, q, params, &short, spec, mode)?)
    };
    let net_delta = net(Quantity::Delta)?;
    let net_theta = net(Quantity::Theta)?;
    Ok(WriteSpread { ratio: hr.ratio, net_delta, underlying_qty: -net_delta, net_theta, recommend: net_theta > 0.0 })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    /// Each scheme against its own h_ref ratio.
    #[default]
    OwnScheme,
    /// Both schemes against the Hoc4 h_ref ratio.
    Hoc4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HedgeRow {
    pub scheme: SchemeKind,
    pub h: f64,
    pub ratio: f64,
    pub ref_ratio: f64,
    pub pct_error: f64,
    pub write: Option<WriteSpread>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HedgeReport {
    pub spec: SpreadSpec,
    pub reference: ReferenceMode,
    pub h_ref: f64,
    /// Sorted by scheme (Hoc4 first) then h descending.
    pub rows: Vec<HedgeRow>,
    /// The h_ref evaluation per scheme; for gamma spreads this carries the verdict.
    pub references: Vec<HedgeRow>,
}

impl HedgeReport {
    pub fn rows_for(&self, scheme: SchemeKind) -> impl Iterator<Item = &HedgeRow> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    pub fn verdict(&self) -> Option<&WriteSpread> {
        let best = self.references.iter().find(|r| r.scheme == SchemeKind::Hoc4).or(self.references.first());
        best.and_then(|r| r.write.as_ref())
    }
}

pub fn pct_error(ratio: f64, reference: f64) -> f64 {
    100.0 * (ratio - reference).abs() / reference.abs()
}

/// Builds the table from solves already done for each scheme.
pub fn hedge_table(studies: &[StudySolves], spec: &SpreadSpec, mode: GreekMode, reference: ReferenceMode) -> Result<HedgeReport> {
    let mut studies: Vec<&StudySolves> = studies.iter().collect();
    studies.sort_by_key(|s| s.scheme != SchemeKind::Hoc4);
    let Some(first) = studies.first() else {
        return Err(Error::Config("hedge table needs at least one scheme".into()));
    };
    let params = first.params;
    let row = |scheme, h, rep: &SolveReport| -> Result<HedgeRow> {
        let hr = hedge_ratio_from(rep, spec, &params, mode)?;
        let write = match spec.greek {
            HedgeGreek::Gamma => Some(gamma_write_spread(rep, spec, &params, mode)?),
            HedgeGreek::Vega => None,
        };
        Ok(HedgeRow { scheme, h, ratio: hr.ratio, ref_ratio: hr.ratio, pct_error: 0.0, write })
    };
    let references =
        studies.iter().map(|s| row(s.scheme, s.reference.surface.grid.h(), &s.reference)).collect::<Result<Vec<_>>>()?;
    let hoc_ref = references.iter().find(|r| r.scheme == SchemeKind::Hoc4).map(|r| r.ratio);
    let mut rows = Vec::new();
    for (s, own) in studies.iter().zip(&references) {
        let ref_ratio = match reference {
            ReferenceMode::OwnScheme => own.ratio,
            ReferenceMode::Hoc4 => hoc_ref.ok_or_else(|| Error::Config("Hoc4 reference requested but Hoc4 was not solved".into()))?,
        };
        for (h, rep) in &s.coarse {
            let mut r = row(s.scheme, *h, rep)?;
            r.ref_ratio = ref_ratio;
            r.pct_error = pct_error(r.ratio, ref_ratio);
            rows.push(r);
        }
    }
    Ok(HedgeReport { spec: *spec, reference, h_ref: first.reference.surface.grid.h(), rows, references })
}

/// Expiry payoff of the spread: −1 put at K_s plus `ratio` puts at K_l.
pub fn spread_payoff(spec: &SpreadSpec, ratio: f64, spots: &[f64]) -> Vec<(f64, f64)> {
    spots
        .iter()
        .map(|&s| (s, ratio * (spec.k_long - s).max(0.0) - (spec.k_short - s).max(0.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};
    use crate::stepper::{solve_pide, SolverOptions};

    fn solve(scheme: SchemeKind) -> SolveReport {
        let g = build_grid(&GridSpec { h: 0.2, ..GridSpec::default() }).unwrap();
        solve_pide(&BatesParams::default(), &ContractSpec::put(100.0, 0.5), &g, scheme, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn identical_legs_give_unit_ratio_and_no_delta() {
        let rep = solve(SchemeKind::Hoc4);
        let p = BatesParams::default();
        let spec = SpreadSpec { k_short: 110.0, k_long: 110.0, ..SpreadSpec::example2() };
        let w = gamma_write_spread(&rep, &spec, &p, GreekMode::Standard).unwrap();
        assert_eq!(w.ratio, 1.0);
        assert_eq!(w.net_delta, 0.0);
        assert_eq!(w.underlying_qty, 0.0);
        let v = hedge_ratio_from(&rep, &SpreadSpec { k_short: 150.0, ..SpreadSpec::example1() }, &p, GreekMode::Standard).unwrap();
        assert_eq!(v.ratio, 1.0);
    }

    #[test]
    fn constructed_positions_are_neutral() {
        let rep = solve(SchemeKind::Hoc4);
        let p = BatesParams::default();
        for spec in [SpreadSpec::example1(), SpreadSpec::example2()] {
            let hr = hedge_ratio_from(&rep, &spec, &p, GreekMode::Standard).unwrap();
            assert!(hr.residual() < 1e-12, "{hr:?}");
            assert!(hr.ratio > 0.0);
        }
    }

    #[test]
    fn strike_scaling_matches_a_direct_resolve() {
        // u is strike-free: pricing K = 150 off a K = 100 solve must equal a K = 150 solve.
        let p = BatesParams::default();
        let g = build_grid(&GridSpec { h: 0.2, ..GridSpec::default() }).unwrap();
        let c150 = ContractSpec::put(150.0, 0.5);
        let direct = solve_pide(&p, &c150, &g, SchemeKind::Hoc4, &SolverOptions::default()).unwrap();
        let shared = solve(SchemeKind::Hoc4);
        let spec = SpreadSpec::example1();
        for q in [Quantity::Price, Quantity::Vega, Quantity::Gamma, Quantity::Delta] {
            let a = leg_value(&direct, q, &p, &c150, &spec, GreekMode::Standard).unwrap();
            let b = leg_value(&shared, q, &p, &c150, &spec, GreekMode::Standard).unwrap();
            assert_eq!(a, b, "{q}");
        }
    }

    #[test]
    fn gamma_spread_needs_gamma_and_rejects_flat_legs() {
        let rep = solve(SchemeKind::Central2);
        let p = BatesParams::default();
        assert!(gamma_write_spread(&rep, &SpreadSpec::example1(), &p, GreekMode::Standard).is_err());
        let mut flat = rep.clone();
        flat.surface.values.iter_mut().for_each(|v| *v = 0.0);
        let r = hedge_ratio_from(&flat, &SpreadSpec::example2(), &p, GreekMode::Standard);
        assert!(matches!(r, Err(Error::DegenerateHedge(_))), "{r:?}");
    }

    #[test]
    fn payoff_of_spread() {
        let spec = SpreadSpec::example1();
        let pay = spread_payoff(&spec, 0.5, &[50.0, 120.0, 200.0]);
        assert_eq!(pay, vec![(50.0, 0.5 * 100.0 - 50.0), (120.0, 15.0), (200.0, 0.0)]);
    }
}
