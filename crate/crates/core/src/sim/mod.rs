//! Birth-death chain approximations of the diffusions and Monte Carlo
//! estimators built on them.

mod chain;
mod mc;

pub use chain::{
    build_chain, build_global_chain, natural_chain, simulate_path, EndMode, GridChain, GridSpec, Path, PathStep,
    SiteKind, TimeMode, MAX_CELLS,
};
pub use mc::{
    assign_atoms, hitting_probability, simulate_darned, simulate_trace_chain, HittingEstimate, McEstimate, Occupation,
    TraceMode, VisitTable, BATCH, DEFAULT_BUDGET,
};
