//! Runs the analyses over a contract and renders their results.

use std::fmt::Write;

use serde_json::{json, Map, Value as Json};

use crate::encode::{
    encode_consequence, encode_limitation, encode_performability, encode_spa, EncodeError,
};
use crate::logic::{evaluate_formula, Assertion, AssertionSet, Assignment, Formula, Term, Value};
use crate::model::{ClaimKind, ContractModel, Day};
use crate::solve::{Backend, SolveError, SolveResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Analysis {
    Performability,
    Execution,
    Limitation,
    All,
}

impl Analysis {
    fn includes(self, other: Analysis) -> bool {
        self == Analysis::All || self == other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisKind {
    Performability,
    Consequence,
    Limitation,
}

impl AnalysisKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisKind::Performability => "performability",
            AnalysisKind::Consequence => "consequence",
            AnalysisKind::Limitation => "limitation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Performable,
    NotPerformable,
    DefectFound,
    NoDefect,
    /// The solver gave no answer.
    Error(String),
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Performable => "performable",
            Verdict::NotPerformable => "not_performable",
            Verdict::DefectFound => "defect_found",
            Verdict::NoDefect => "no_defect",
            Verdict::Error(_) => "error",
        }
    }
}

/// A core assertion with the block it was compiled from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreBlock {
    pub assertion: String,
    pub block: String,
    pub line_start: usize,
    pub line_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimVerdict {
    pub claim: String,
    pub analysis: AnalysisKind,
    pub verdict: Verdict,
    pub witness: Option<Assignment>,
    pub core_blocks: Option<Vec<CoreBlock>>,
    /// Earliest assertion day of the warranty that lets a consequence
    /// outlast the limitation period.
    pub witness_assert_day: Option<Day>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimelineEntry {
    pub day: Day,
    pub claim: String,
    pub event: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecutionVerdict {
    Executable,
    NotExecutable,
    Error(String),
}

impl ExecutionVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExecutionVerdict::Executable => "executable",
            ExecutionVerdict::NotExecutable => "not_executable",
            ExecutionVerdict::Error(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionReport {
    pub verdict: ExecutionVerdict,
    pub soft_satisfied: Vec<String>,
    pub soft_violated: Vec<String>,
    pub timeline: Vec<TimelineEntry>,
    /// Claims left unperformed, with their status label.
    pub unperformed: Vec<(String, &'static str)>,
    pub witness: Option<Assignment>,
    pub core_blocks: Option<Vec<CoreBlock>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnalysisReport {
    pub contract: String,
    pub horizon: Option<Day>,
    pub verdicts: Vec<ClaimVerdict>,
    pub execution: Option<ExecutionReport>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn verdict(&self, analysis: AnalysisKind, claim: &str) -> Option<&ClaimVerdict> {
        self.verdicts
            .iter()
            .find(|v| v.analysis == analysis && v.claim == claim)
    }
}

/// One solver query of an analysis.
#[derive(Debug, Clone)]
pub struct Query {
    pub kind: QueryKind,
    /// Claim id, or `all` for the execution query.
    pub claim: String,
    pub set: AssertionSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    Claim(AnalysisKind),
    Execution,
}

impl Query {
    /// `<analysis>.<claim>`, the file stem used when scripts are written out.
    pub fn label(&self) -> String {
        let analysis = match self.kind {
            QueryKind::Claim(k) => k.as_str(),
            QueryKind::Execution => "execution",
        };
        format!("{analysis}.{}", self.claim)
    }
}

/// The solver queries `which` consists of, in report order.
pub fn analysis_queries(m: &ContractModel, which: Analysis) -> Result<Vec<Query>, EncodeError> {
    let mut out = Vec::new();
    if which.includes(Analysis::Performability) {
        for c in m.claims.values() {
            let (kind, set) = if c.kind().is_primary() {
                (
                    AnalysisKind::Performability,
                    encode_performability(m, &c.id)?,
                )
            } else {
                (AnalysisKind::Consequence, encode_consequence(m, &c.id)?)
            };
            out.push(Query {
                kind: QueryKind::Claim(kind),
                claim: c.id.clone(),
                set,
            });
        }
    }
    if which.includes(Analysis::Execution) {
        out.push(Query {
            kind: QueryKind::Execution,
            claim: "all".into(),
            set: encode_spa(m),
        });
    }
    if which.includes(Analysis::Limitation) {
        for c in m.claims.values() {
            if matches!(c.kind(), ClaimKind::Performance | ClaimKind::Compensation) {
                out.push(Query {
                    kind: QueryKind::Claim(AnalysisKind::Limitation),
                    claim: c.id.clone(),
                    set: encode_limitation(m, &c.id)?,
                });
            }
        }
    }
    Ok(out)
}

fn core_blocks(m: &ContractModel, set: &AssertionSet, core: &[String]) -> Vec<CoreBlock> {
    core.iter()
        .map(|name| {
            let block = set
                .assertion(name)
                .and_then(|a| a.block.as_deref())
                .expect("every assertion names its block");
            let (block, span) = m.block_of(block).expect("assertion blocks exist");
            CoreBlock {
                assertion: name.clone(),
                block: block.to_string(),
                line_start: span.line_start,
                line_end: span.line_end,
            }
        })
        .collect()
}

fn checked_witness(set: &AssertionSet, model: &Assignment) -> Result<(), String> {
    for a in &set.hard {
        if !evaluate_formula(&a.formula, model).unwrap_or(false) {
            return Err(format!("solver model violates {}", a.name));
        }
    }
    Ok(())
}

fn claim_verdict(
    m: &ContractModel,
    backend: &dyn Backend,
    kind: AnalysisKind,
    claim: &str,
    set: &AssertionSet,
) -> ClaimVerdict {
    let mut v = ClaimVerdict {
        claim: claim.to_string(),
        analysis: kind,
        verdict: Verdict::NoDefect,
        witness: None,
        core_blocks: None,
        witness_assert_day: None,
    };
    let result = match kind {
        AnalysisKind::Limitation => earliest_assertion(m, backend, claim, set),
        _ => backend.solve(set),
    };
    match result {
        Err(e) => v.verdict = Verdict::Error(e.to_string()),
        Ok(SolveResult::Sat { model, .. }) => {
            if let Err(e) = checked_witness(set, &model) {
                v.verdict = Verdict::Error(e);
                return v;
            }
            if kind == AnalysisKind::Limitation {
                v.verdict = Verdict::DefectFound;
                v.witness_assert_day = warranty_day(m, claim).and_then(|d| model.int(&d));
            } else {
                v.verdict = Verdict::Performable;
            }
            v.witness = Some(model);
        }
        Ok(SolveResult::Unsat { core }) => {
            if kind == AnalysisKind::Limitation {
                v.verdict = Verdict::NoDefect;
            } else {
                v.verdict = Verdict::NotPerformable;
                v.core_blocks = Some(core_blocks(m, set, &core));
            }
        }
    }
    v
}

fn warranty_day(m: &ContractModel, consequence: &str) -> Option<String> {
    let primary = m.claims.get(consequence)?.primary()?;
    Some(m.claims.get(primary)?.day_var.clone())
}

/// Solves a limitation query, then lowers the warranty's assertion day until
/// no earlier day works.
fn earliest_assertion(
    m: &ContractModel,
    backend: &dyn Backend,
    claim: &str,
    set: &AssertionSet,
) -> Result<SolveResult, SolveError> {
    let mut best = backend.solve(set)?;
    let Some(day_var) = warranty_day(m, claim) else {
        return Ok(best);
    };
    let primary = m.claims[claim].primary().expect("consequence").to_string();
    while let Some(day) = best.model().and_then(|w| w.int(&day_var)) {
        let mut earlier = set.clone();
        earlier.hard.push(Assertion::new(
            format!("earlier.{claim}"),
            Formula::lt(Term::var(&day_var), Term::int(day)),
            Some(&primary),
        ));
        match backend.solve(&earlier)? {
            SolveResult::Sat { model, .. } => {
                best = SolveResult::Sat {
                    model,
                    soft_satisfied: Vec::new(),
                }
            }
            SolveResult::Unsat { .. } => break,
        }
    }
    Ok(best)
}

fn event_label(kind: ClaimKind) -> &'static str {
    match kind {
        ClaimKind::Transfer | ClaimKind::Pay | ClaimKind::Performance => "performed",
        ClaimKind::Warranty => "asserted",
        ClaimKind::Compensation => "compensated",
        ClaimKind::Restitution => "restituted",
    }
}

fn execution(m: &ContractModel, backend: &dyn Backend, set: &AssertionSet) -> ExecutionReport {
    let mut report = ExecutionReport {
        verdict: ExecutionVerdict::NotExecutable,
        soft_satisfied: Vec::new(),
        soft_violated: Vec::new(),
        timeline: Vec::new(),
        unperformed: Vec::new(),
        witness: None,
        core_blocks: None,
    };
    match backend.maximize(set) {
        Err(e) => report.verdict = ExecutionVerdict::Error(e.to_string()),
        Ok(SolveResult::Unsat { core }) => report.core_blocks = Some(core_blocks(m, set, &core)),
        Ok(SolveResult::Sat {
            model,
            soft_satisfied,
        }) => {
            if let Err(e) = checked_witness(set, &model) {
                report.verdict = ExecutionVerdict::Error(e);
                return report;
            }
            report.verdict = ExecutionVerdict::Executable;
            report.soft_violated = set
                .soft
                .iter()
                .map(|a| a.name.clone())
                .filter(|n| !soft_satisfied.contains(n))
                .collect();
            report.soft_satisfied = soft_satisfied;
            for c in m.claims.values() {
                match model.int(&c.day_var) {
                    Some(day) if day >= 0 => report.timeline.push(TimelineEntry {
                        day,
                        claim: c.id.clone(),
                        event: event_label(c.kind()),
                    }),
                    _ => report.unperformed.push((
                        c.id.clone(),
                        if c.kind() == ClaimKind::Warranty {
                            "not asserted"
                        } else {
                            "not performed"
                        },
                    )),
                }
            }
            report.timeline.sort_by_key(|e| e.day);
            report.witness = Some(model);
        }
    }
    report
}

/// Runs the requested analyses. Each query is decided independently; a
/// failing query is reported in place.
pub fn run_analysis(
    m: &ContractModel,
    which: Analysis,
    backend: &dyn Backend,
    contract: &str,
) -> Result<AnalysisReport, EncodeError> {
    let mut report = AnalysisReport {
        contract: contract.to_string(),
        horizon: Some(m.horizon),
        ..Default::default()
    };
    for q in analysis_queries(m, which)? {
        match q.kind {
            QueryKind::Claim(kind) => report
                .verdicts
                .push(claim_verdict(m, backend, kind, &q.claim, &q.set)),
            QueryKind::Execution => report.execution = Some(execution(m, backend, &q.set)),
        }
    }
    let blocked: Vec<&str> = report
        .verdicts
        .iter()
        .filter(|v| v.verdict == Verdict::NotPerformable)
        .map(|v| v.claim.as_str())
        .collect();
    let executable = report
        .execution
        .as_ref()
        .is_some_and(|e| e.verdict == ExecutionVerdict::Executable);
    if executable && !blocked.is_empty() {
        report.warnings.push(format!(
            "inconsistent yet executable: the contract can be executed although {} cannot be performed",
            blocked.join(", ")
        ));
    }
    Ok(report)
}

/// 0 when everything is clean, 1 on defects, 3 when a solver gave no answer.
pub fn exit_code(r: &AnalysisReport) -> i32 {
    let errored = r
        .verdicts
        .iter()
        .any(|v| matches!(v.verdict, Verdict::Error(_)))
        || r.execution
            .as_ref()
            .is_some_and(|e| matches!(e.verdict, ExecutionVerdict::Error(_)));
    let defect = r
        .verdicts
        .iter()
        .any(|v| matches!(v.verdict, Verdict::NotPerformable | Verdict::DefectFound))
        || r.execution
            .as_ref()
            .is_some_and(|e| e.verdict == ExecutionVerdict::NotExecutable);
    if errored {
        3
    } else if defect {
        1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

fn witness_entries(w: &Assignment) -> Vec<(String, Value)> {
    let mut out: Vec<(String, Value)> =
        w.vars.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    for (f, table) in &w.functions {
        for (arg, result) in table {
            out.push((format!("{f}({arg})"), Value::Member(result.clone())));
        }
    }
    out
}

fn witness_json(w: &Assignment) -> Json {
    let map: Map<String, Json> = witness_entries(w)
        .into_iter()
        .map(|(k, v)| (k, serde_json::to_value(v).expect("plain value")))
        .collect();
    Json::Object(map)
}

fn cores_json(cores: &[CoreBlock]) -> Json {
    cores
        .iter()
        .map(|c| {
            json!({
                "assertion": c.assertion,
                "block": c.block,
                "line_start": c.line_start,
                "line_end": c.line_end,
            })
        })
        .collect()
}

fn report_json(r: &AnalysisReport) -> Json {
    let mut analyses = Map::new();
    let mut performability = Map::new();
    let mut limitation = Map::new();
    for v in &r.verdicts {
        let mut entry = Map::new();
        entry.insert("verdict".into(), json!(v.verdict.as_str()));
        if let Verdict::Error(e) = &v.verdict {
            entry.insert("error".into(), json!(e));
        }
        match v.analysis {
            AnalysisKind::Limitation => {
                if let Some(d) = v.witness_assert_day {
                    entry.insert("witness_assert_day".into(), json!(d));
                }
                limitation.insert(v.claim.clone(), Json::Object(entry));
            }
            _ => {
                if let Some(w) = &v.witness {
                    entry.insert("witness".into(), witness_json(w));
                }
                if let Some(c) = &v.core_blocks {
                    entry.insert("core_blocks".into(), cores_json(c));
                }
                performability.insert(v.claim.clone(), Json::Object(entry));
            }
        }
    }
    if !performability.is_empty() {
        analyses.insert("performability".into(), Json::Object(performability));
    }
    if let Some(e) = &r.execution {
        let mut entry = Map::new();
        entry.insert("verdict".into(), json!(e.verdict.as_str()));
        if let ExecutionVerdict::Error(msg) = &e.verdict {
            entry.insert("error".into(), json!(msg));
        }
        entry.insert("soft_satisfied".into(), json!(e.soft_satisfied));
        entry.insert("soft_violated".into(), json!(e.soft_violated));
        entry.insert(
            "timeline".into(),
            e.timeline
                .iter()
                .map(|t| json!({"day": t.day, "claim": t.claim, "event": t.event}))
                .collect(),
        );
        if let Some(c) = &e.core_blocks {
            entry.insert("core_blocks".into(), cores_json(c));
        }
        analyses.insert("execution".into(), Json::Object(entry));
    }
    if !limitation.is_empty() {
        analyses.insert("limitation".into(), Json::Object(limitation));
    }
    let mut root = Map::new();
    root.insert("contract".into(), json!(r.contract));
    if let Some(h) = r.horizon {
        root.insert("horizon".into(), json!(h));
    }
    root.insert("analyses".into(), Json::Object(analyses));
    if !r.warnings.is_empty() {
        root.insert("warnings".into(), json!(r.warnings));
    }
    Json::Object(root)
}

fn verdict_text(v: &ClaimVerdict) -> String {
    let mut s = match &v.verdict {
        Verdict::Performable => "performable".to_string(),
        Verdict::NotPerformable => "not performable".to_string(),
        Verdict::DefectFound => "defect found".to_string(),
        Verdict::NoDefect => "no defect".to_string(),
        Verdict::Error(e) => format!("error: {e}"),
    };
    if let Some(d) = v.witness_assert_day {
        let _ = write!(s, " (warranty asserted on day {d})");
    } else if let Some(w) = &v.witness {
        let parts: Vec<String> = witness_entries(w)
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect();
        let _ = write!(s, " [{}]", parts.join(", "));
    }
    s
}

fn cores_text(out: &mut String, title: &str, cores: &[CoreBlock]) {
    let _ = writeln!(out, "  {title}:");
    for c in cores {
        let _ = writeln!(
            out,
            "    {} -> {} (lines {}-{})",
            c.assertion, c.block, c.line_start, c.line_end
        );
    }
}

fn report_text(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "contract: {}", r.contract);
    if let Some(h) = r.horizon {
        let _ = write!(out, " (horizon {h} days)");
    }
    out.push('\n');
    for w in &r.warnings {
        let _ = writeln!(out, "WARNING: {w}");
    }
    if !r.verdicts.is_empty() {
        out.push_str("\nverdicts\n");
        for v in &r.verdicts {
            let _ = writeln!(
                out,
                "  {} {}: {}",
                v.analysis.as_str(),
                v.claim,
                verdict_text(v)
            );
        }
    }
    if let Some(e) = &r.execution {
        let _ = write!(out, "\nexecution: {}", e.verdict.as_str().replace('_', " "));
        match &e.verdict {
            ExecutionVerdict::Executable => {
                let total = e.soft_satisfied.len() + e.soft_violated.len();
                let _ = write!(
                    out,
                    " ({} of {total} soft constraints satisfied",
                    e.soft_satisfied.len()
                );
                if !e.soft_violated.is_empty() {
                    let _ = write!(out, "; violated: {}", e.soft_violated.join(", "));
                }
                out.push(')');
            }
            ExecutionVerdict::Error(msg) => {
                let _ = write!(out, ": {msg}");
            }
            ExecutionVerdict::NotExecutable => {}
        }
        out.push('\n');
        for t in &e.timeline {
            let _ = writeln!(out, "  day {}: {} {}", t.day, t.claim, t.event);
        }
        for (claim, status) in &e.unperformed {
            let _ = writeln!(out, "  {claim}: {status}");
        }
    }
    let cored: Vec<(String, &Vec<CoreBlock>)> = r
        .verdicts
        .iter()
        .filter_map(|v| {
            v.core_blocks
                .as_ref()
                .map(|c| (format!("{} ({})", v.claim, v.analysis.as_str()), c))
        })
        .chain(
            r.execution
                .iter()
                .filter_map(|e| e.core_blocks.as_ref().map(|c| ("execution".to_string(), c))),
        )
        .collect();
    if !cored.is_empty() {
        out.push_str("\ncores\n");
        for (title, cores) in cored {
            cores_text(&mut out, &title, cores);
        }
    }
    out
}

pub fn render_report(r: &AnalysisReport, format: Format) -> String {
    match format {
        Format::Text => report_text(r),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report_json(r)).expect("serializable");
            s.push('\n');
            s
        }
    }
}
