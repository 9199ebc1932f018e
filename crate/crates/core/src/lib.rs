//! Bates-model put pricing and hedging by finite differences.
//!
//! Two interchangeable spatial schemes — second-order central and
//! fourth-order compact — share one IMEX Crank–Nicolson/Adams–Bashforth
//! stepper whose implicit matrix is factorised exactly once per run.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod greeks;
pub mod grid;
pub mod hedging;
pub mod interp;
pub mod io;
pub mod jump;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod operator;
pub mod stepper;

pub use analysis::{
    error_norms, fit_order, run_convergence_study, solve_study, ConvergenceReport, ErrorRow, NormWindow, OrderFit,
    StudySettings, StudySolves,
};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use greeks::{compute, evaluate_at, GreekMode, GreekSurface, Quantity};
pub use grid::{build_grid, build_grid_with_steps, common_nodes, Grid, GridSpec, NodeMap};
pub use hedging::{
    gamma_write_spread, hedge_ratio_from, hedge_table, spread_payoff, HedgeGreek, HedgeRatio, HedgeReport, HedgeRow,
    ReferenceMode, SpreadSpec, WriteSpread,
};
pub use jump::{build_jump_operator, Extension, JumpOperator};
pub use linalg::{BandLu, SparseMatrix};
pub use mc::{mc_expectation, mc_price, McConfig, McResult};
pub use model::{BatesParams, ContractSpec, MarketPoint, OptionKind};
pub use operator::{assemble, FarField, OperatorMatrices, SchemeKind};
pub use stepper::{solve_pide, Smoothing, SolveReport, SolverOptions, StepContext, Surface};
