use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use contractcheck_core::{
    analysis_queries, build_model, emit_smtlib, exit_code, parse_blocks, render_report,
    run_analysis, validate_blocks, Analysis, Backend, Builtin, ExternalSolver, Format,
    SolverConfig,
};

#[derive(Parser)]
#[command(
    name = "contractcheck",
    version,
    about = "Consistency analysis for block-structured contracts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse a contract file.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalysisArg {
    Performability,
    Execution,
    Limitation,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Builtin,
    External,
}

#[derive(clap::Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    analysis: AnalysisArg,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "builtin")]
    backend: BackendArg,
    /// Command line of an SMT-LIB2 solver reading the script on stdin.
    #[arg(long, value_name = "COMMAND")]
    solver_cmd: Option<String>,
    /// Write one SMT-LIB2 script per solver query into this directory.
    #[arg(long, value_name = "DIR")]
    emit_smt: Option<PathBuf>,
    /// Override the contract's analysis horizon.
    #[arg(long, value_name = "DAYS")]
    horizon: Option<i64>,
    /// Maximum search nodes per query for the built-in solver.
    #[arg(long, value_name = "ASSIGNMENTS")]
    limit: Option<u64>,
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn check(args: CheckArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => return usage_error(format_args!("{}: {e}", args.file.display())),
    };
    let doc = match parse_blocks(&text) {
        Ok(d) => d,
        Err(e) => return usage_error(format_args!("{}: {e}", args.file.display())),
    };
    let diagnostics = validate_blocks(&doc);
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            eprintln!("error: {}: {d}", args.file.display());
        }
        return ExitCode::from(2);
    }
    let mut model = match build_model(&doc) {
        Ok(m) => m,
        Err(e) => return usage_error(e),
    };
    if let Some(h) = args.horizon {
        model = match model.with_horizon(h) {
            Ok(m) => m,
            Err(e) => return usage_error(e),
        };
    }
    let which = match args.analysis {
        AnalysisArg::Performability => Analysis::Performability,
        AnalysisArg::Execution => Analysis::Execution,
        AnalysisArg::Limitation => Analysis::Limitation,
        AnalysisArg::All => Analysis::All,
    };

    if let Some(dir) = &args.emit_smt {
        if let Err(e) = emit_scripts(&model, which, dir) {
            return usage_error(format_args!("{}: {e}", dir.display()));
        }
    }

    let config = SolverConfig {
        max_nodes: args.limit.unwrap_or(SolverConfig::default().max_nodes),
        ..SolverConfig::default()
    };
    let backend: Box<dyn Backend> = match args.backend {
        BackendArg::Builtin => Box::new(Builtin(config)),
        BackendArg::External => {
            let Some(cmd) = args.solver_cmd.as_deref() else {
                return usage_error("--backend external requires --solver-cmd");
            };
            match ExternalSolver::new(cmd) {
                Ok(s) => Box::new(s),
                Err(e) => return usage_error(e),
            }
        }
    };

    let name = args.file.file_name().map_or_else(
        || args.file.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    let report = match run_analysis(&model, which, backend.as_ref(), &name) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    let format = match args.format {
        FormatArg::Text => Format::Text,
        FormatArg::Json => Format::Json,
    };
    print!("{}", render_report(&report, format));
    ExitCode::from(exit_code(&report) as u8)
}

fn emit_scripts(
    model: &contractcheck_core::ContractModel,
    which: Analysis,
    dir: &Path,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let queries = analysis_queries(model, which).map_err(std::io::Error::other)?;
    for q in queries {
        std::fs::write(dir.join(format!("{}.smt2", q.label())), emit_smtlib(&q.set))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Check(args) => check(args),
    }
}
