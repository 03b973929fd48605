//! Contract-consistency analysis: block documents are compiled into
//! quantifier-free assertions and checked by a bounded solver.

pub mod analyze;
pub mod blocks;
pub mod encode;
pub mod logic;
pub mod model;
pub mod solve;

pub use analyze::{
    analysis_queries, exit_code, render_report, run_analysis, Analysis, AnalysisKind,
    AnalysisReport, ClaimVerdict, CoreBlock, ExecutionReport, ExecutionVerdict, Format, Query,
    QueryKind, TimelineEntry, Verdict,
};
pub use blocks::{
    parse_blocks, serialize_blocks, validate_blocks, AttrValue, Block, BlockDocument, BlockKind,
    Diagnostic, SourceSpan, SyntaxError,
};
pub use encode::{
    encode_consequence, encode_contract, encode_limitation, encode_performability, encode_spa,
    EncodeError, EncodedContract,
};
pub use logic::{
    evaluate_formula, Assertion, AssertionSet, Assignment, Domain, EvalError, Formula, Sort, Term,
    Value,
};
pub use model::{build_model, Claim, ClaimKind, ClaimTerms, ContractModel, Day, ModelError};
pub use solve::{
    emit_smtlib, maximize_soft, minimize_core, run_external, solve_bounded, Backend, Builtin,
    ExternalSolver, SolveError, SolveResult, SolverConfig,
};

/// The share purchase agreement used throughout the tests and examples.
pub const BAKERY_FIXTURE: &str = include_str!("../fixtures/bakery.spa");
