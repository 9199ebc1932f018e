//! JSON run configuration. Every section is optional; omitted fields take the
//! library defaults and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{StudySettings, DEFAULT_H_LIST};
use crate::error::{Error, Result};
use crate::greeks::{GreekMode, Quantity};
use crate::grid::GridSpec;
use crate::hedging::{ReferenceMode, SpreadSpec};
use crate::mc::McConfig;
use crate::model::{BatesParams, ContractSpec, MarketPoint};
use crate::operator::SchemeKind;
use crate::stepper::SolverOptions;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub r1: f64,
    pub l2: f64,
    pub r2: f64,
    pub h: f64,
    pub mesh_ratio: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        // h = 0.05: the coarser 0.1 misses the MC price by ~4 standard errors at σ₀ = 0.01
        let g = GridSpec::default();
        Self { r1: g.r1, l2: g.l2, r2: g.r2, h: 0.05, mesh_ratio: g.mesh_ratio }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuerySection {
    pub spot: f64,
    pub variance: f64,
}

impl Default for QuerySection {
    fn default() -> Self {
        Self { spot: 100.0, variance: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub h_list: Vec<f64>,
    pub h_ref: f64,
    pub quantity: Quantity,
    pub norm_min_variance: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        let s = StudySettings::default();
        Self { h_list: DEFAULT_H_LIST.to_vec(), h_ref: s.h_ref, quantity: Quantity::Price, norm_min_variance: s.norm_min_variance }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HedgeSection {
    pub example1: SpreadSpec,
    pub example2: SpreadSpec,
    pub reference: ReferenceMode,
}

impl Default for HedgeSection {
    fn default() -> Self {
        Self { example1: SpreadSpec::example1(), example2: SpreadSpec::example2(), reference: ReferenceMode::OwnScheme }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreeksSection {
    pub paper_literal: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: BatesParams,
    pub grid: GridSection,
    pub contract: ContractSpec,
    pub solver: SolverOptions,
    pub scheme: SchemeKind,
    pub query: QuerySection,
    pub study: StudySection,
    pub hedge: HedgeSection,
    pub mc: McConfig,
    pub greeks: GreeksSection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn grid_spec(&self) -> GridSpec {
        let g = &self.grid;
        GridSpec { r1: g.r1, l2: g.l2, r2: g.r2, h: g.h, expiry: self.contract.expiry, mesh_ratio: g.mesh_ratio }
    }

    pub fn greek_mode(&self) -> GreekMode {
        if self.greeks.paper_literal {
            GreekMode::PaperLiteral
        } else {
            GreekMode::Standard
        }
    }

    pub fn study_settings(&self) -> StudySettings {
        StudySettings { h_ref: self.study.h_ref, norm_min_variance: self.study.norm_min_variance, mode: self.greek_mode() }
    }

    pub fn market_point(&self) -> MarketPoint {
        MarketPoint { spot: self.query.spot, variance: self.query.variance, tau: self.contract.expiry }
    }

    /// Checks everything that does not need a grid; run before any solve.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.contract.validate()?;
        let g = &self.grid;
        for (name, v) in [("grid.r1", g.r1), ("grid.h", g.h), ("grid.mesh_ratio", g.mesh_ratio)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(g.l2 > 0.0 && g.r2 > g.l2) {
            return Err(Error::Config(format!("need 0 < grid.l2 < grid.r2, got l2 = {}, r2 = {}", g.l2, g.r2)));
        }
        if !(self.solver.jump_tol > 0.0 && self.solver.jump_tol < 1.0) {
            return Err(Error::Config(format!("solver.jump_tol must lie in (0, 1), got {}", self.solver.jump_tol)));
        }
        if !(self.query.spot > 0.0 && self.query.variance > 0.0) {
            return Err(Error::Config("query spot and variance must be positive".into()));
        }
        let s = &self.study;
        if s.h_list.is_empty() {
            return Err(Error::Config("study.h_list is empty".into()));
        }
        if s.h_list.iter().chain([&s.h_ref]).any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Config("study mesh sizes must be positive".into()));
        }
        if !(s.norm_min_variance >= 0.0) {
            return Err(Error::Config("study.norm_min_variance must be >= 0".into()));
        }
        self.hedge.example1.validate()?;
        self.hedge.example2.validate()?;
        self.mc.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
        assert_eq!(c.grid_spec(), GridSpec::default().with_h(0.05));
    }

    #[test]
    fn partial_sections_and_round_trip() {
        let c = RunConfig::from_json(r#"{"model": {"lambda": 0.0}, "scheme": "central2", "study": {"h_list": [0.2, 0.1]}}"#).unwrap();
        assert_eq!(c.model.lambda, 0.0);
        assert_eq!(c.model.kappa, BatesParams::default().kappa);
        assert_eq!(c.scheme, SchemeKind::Central2);
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_input() {
        let e = RunConfig::from_json("{\"model\": {\"kapa\": 1}}").unwrap_err();
        assert!(matches!(e, Error::Json(_)));
        let e = RunConfig::from_json("{\n  \"grid\": {\"h\": 0.1,,}\n}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let mut c = RunConfig::default();
        c.study.h_list.clear();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = RunConfig::default();
        c.mc.n_paths = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
