//! Competitive equilibrium toolkit for chore division under linear
//! disutilities: exact CEEI for rounded instances, an FPTAS for arbitrary
//! ones, EF1+PO integral allocations for bivalued instances, and the
//! polymatrix-game exchange-instance construction with its auditors.

pub mod balance;
pub mod bivalued;
pub mod gen;
pub mod instance;
pub mod json;
pub mod maxflow;
pub mod mpb;
pub mod polymatrix;
pub mod reduction;
pub mod scalar;
pub mod solver;
pub mod verify;

pub use balance::{balance_allocation, check_local_balance, BalanceResult};
pub use instance::{
    analyze_structure, decompose_ceei, Component, DisutilityMatrix, EndowmentMatrix, Entry,
    Instance, Model, StructureReport,
};
pub use maxflow::{max_flow, MaxFlowOutcome, MoneyFlow};
pub use mpb::{build_market_network, mpb_structure, MarketNetwork, MpbStructure};
pub use polymatrix::{brute_force_ne, validate_polymatrix, verify_polymatrix_ne, PolymatrixGame};
pub use reduction::{
    build_reduction, check_reduction_properties, check_symmetric_ce, extract_strategy,
    LayeredLabels, ReductionParams,
};
pub use scalar::{Rat, Scalar, Tol};
pub use solver::{
    init_prices, normalize_prices, solve_exact_rounded, solve_fptas, CeeiResult, SolveOptions,
    SolverError,
};
pub use verify::{earnings, nash_welfare, verify_ce, CeReport};
