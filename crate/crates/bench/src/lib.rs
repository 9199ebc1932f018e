//! Fixtures shared by the benches.

use std::sync::Arc;

use bates_core::{build_grid, BatesParams, GridSpec, SchemeKind, SolverOptions, StepContext};

/// Assembled and factorised context on the default domain at mesh size `h`.
pub fn context(h: f64, scheme: SchemeKind) -> StepContext {
    let grid = Arc::new(build_grid(&GridSpec { h, ..GridSpec::default() }).expect("default domain nests h"));
    StepContext::new(&BatesParams::default(), grid, scheme, &SolverOptions::default()).expect("default problem factorises")
}
