//! Satisfiability, soft-constraint maximization and unsat cores.
//!
//! The built-in solver enumerates bounded domains. Integer domains wider than
//! [`SolverConfig::full_domain_cap`] are explored through candidate values:
//! constants of the set (with pairwise sums, differences and ±1), declared
//! hints, and breakpoints of linear atoms once all other operands are fixed.

mod external;
mod search;
mod smtlib;

use serde::Serialize;
use thiserror::Error;

use crate::logic::{evaluate_formula, AssertionSet, Assignment, LogicError};

pub use external::{run_external, ExternalSolver};
pub use smtlib::emit_smtlib;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    /// Search nodes per solver call before giving up.
    pub max_nodes: u64,
    /// Integer domains up to this many values are enumerated in full.
    pub full_domain_cap: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_nodes: 5_000_000,
            full_domain_cap: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SolveResult {
    Sat {
        model: Assignment,
        /// Names of the soft assertions true in `model`.
        soft_satisfied: Vec<String>,
    },
    /// `core` is an unsatisfiable, 1-minimal subset of the hard assertions.
    Unsat { core: Vec<String> },
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat { .. })
    }

    pub fn model(&self) -> Option<&Assignment> {
        match self {
            SolveResult::Sat { model, .. } => Some(model),
            SolveResult::Unsat { .. } => None,
        }
    }

    pub fn core(&self) -> Option<&[String]> {
        match self {
            SolveResult::Unsat { core } => Some(core),
            SolveResult::Sat { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("search exceeded {nodes} nodes")]
    ResourceLimit { nodes: u64 },
    #[error("assertion set is satisfiable")]
    NotUnsat,
    #[error("solver unavailable: {0}")]
    SolverUnavailable(String),
    #[error("solver protocol error: {0}")]
    SolverProtocolError(String),
    #[error(transparent)]
    IllFormed(#[from] LogicError),
}

pub(crate) fn satisfied_softs(set: &AssertionSet, model: &Assignment) -> Vec<String> {
    set.soft
        .iter()
        .filter(|a| evaluate_formula(&a.formula, model).unwrap_or(false))
        .map(|a| a.name.clone())
        .collect()
}

fn builtin_unsat(set: &AssertionSet, cfg: &SolverConfig) -> Result<bool, SolveError> {
    let outcome = search::Problem::new(set).solve(cfg, false)?;
    Ok(!matches!(outcome, search::Outcome::Sat(_)))
}

fn run_builtin(
    set: &AssertionSet,
    cfg: &SolverConfig,
    maximize: bool,
) -> Result<SolveResult, SolveError> {
    set.check()?;
    let problem = search::Problem::new(set);
    match problem.solve(cfg, maximize)? {
        search::Outcome::Sat(model) => Ok(SolveResult::Sat {
            soft_satisfied: satisfied_softs(set, &model),
            model,
        }),
        search::Outcome::Unsat(core) => Ok(SolveResult::Unsat { core }),
        search::Outcome::UnsatComponent(names) => {
            let core = minimize_core_with(&set.restrict_hard(&names), |s| builtin_unsat(s, cfg))?;
            Ok(SolveResult::Unsat { core })
        }
    }
}

/// Finds a model of the hard assertions. Soft assertions are only reported.
pub fn solve_bounded(set: &AssertionSet, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    run_builtin(set, cfg, false)
}

/// Finds a model of the hard assertions satisfying as many soft assertions
/// as possible.
pub fn maximize_soft(set: &AssertionSet, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    run_builtin(set, cfg, true)
}

/// Shrinks the hard assertions of an unsatisfiable set to a 1-minimal core,
/// dropping assertions in declaration order.
pub fn minimize_core(set: &AssertionSet, cfg: &SolverConfig) -> Result<Vec<String>, SolveError> {
    set.check()?;
    minimize_core_with(set, |s| builtin_unsat(s, cfg))
}

/// Deletion-based core minimization over any decision procedure.
pub fn minimize_core_with<F>(set: &AssertionSet, mut is_unsat: F) -> Result<Vec<String>, SolveError>
where
    F: FnMut(&AssertionSet) -> Result<bool, SolveError>,
{
    let mut core = set.hard_names();
    if !is_unsat(&set.restrict_hard(&core))? {
        return Err(SolveError::NotUnsat);
    }
    let mut i = 0;
    while i < core.len() {
        let mut trial = core.clone();
        trial.remove(i);
        if is_unsat(&set.restrict_hard(&trial))? {
            core = trial;
        } else {
            i += 1;
        }
    }
    Ok(core)
}

/// A decision procedure the analyses can run on.
pub trait Backend {
    fn solve(&self, set: &AssertionSet) -> Result<SolveResult, SolveError>;
    fn maximize(&self, set: &AssertionSet) -> Result<SolveResult, SolveError>;
}

/// The built-in bounded solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct Builtin(pub SolverConfig);

impl Backend for Builtin {
    fn solve(&self, set: &AssertionSet) -> Result<SolveResult, SolveError> {
        solve_bounded(set, &self.0)
    }

    fn maximize(&self, set: &AssertionSet) -> Result<SolveResult, SolveError> {
        maximize_soft(set, &self.0)
    }
}
