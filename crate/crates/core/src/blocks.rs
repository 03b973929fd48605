//! The structured block language.
//!
//! A contract is written as a sequence of blocks:
//!
//! ```text
//! block TransferClaim Transfer
//!   debtor: Eva
//!   creditor: Chris
//!   asset: Bakery
//!   due: closing
//! end
//! ```
//!
//! `#` starts a comment that runs to the end of the line and blank lines are
//! ignored. Attribute values are identifiers, integers, or comma separated
//! identifier lists. Parsing only checks the grammar; [`validate_blocks`]
//! checks required keys and cross references.

use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

/// Inclusive 1-based line range of a block in its source text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct SourceSpan {
    pub line_start: usize,
    pub line_end: usize,
}

impl SourceSpan {
    pub fn new(line_start: usize, line_end: usize) -> Self {
        debug_assert!(line_start >= 1 && line_start <= line_end);
        SourceSpan {
            line_start,
            line_end,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lines {}-{}", self.line_start, self.line_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BlockKind {
    Party,
    Asset,
    PropertyFact,
    ContractDates,
    TransferClaim,
    PayClaim,
    WarrantyClaim,
    PerformanceClaim,
    CompensationClaim,
    RestitutionClaim,
}

impl BlockKind {
    pub const ALL: [BlockKind; 10] = [
        BlockKind::Party,
        BlockKind::Asset,
        BlockKind::PropertyFact,
        BlockKind::ContractDates,
        BlockKind::TransferClaim,
        BlockKind::PayClaim,
        BlockKind::WarrantyClaim,
        BlockKind::PerformanceClaim,
        BlockKind::CompensationClaim,
        BlockKind::RestitutionClaim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Party => "Party",
            BlockKind::Asset => "Asset",
            BlockKind::PropertyFact => "PropertyFact",
            BlockKind::ContractDates => "ContractDates",
            BlockKind::TransferClaim => "TransferClaim",
            BlockKind::PayClaim => "PayClaim",
            BlockKind::WarrantyClaim => "WarrantyClaim",
            BlockKind::PerformanceClaim => "PerformanceClaim",
            BlockKind::CompensationClaim => "CompensationClaim",
            BlockKind::RestitutionClaim => "RestitutionClaim",
        }
    }

    pub fn parse(s: &str) -> Option<BlockKind> {
        BlockKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_claim(self) -> bool {
        matches!(
            self,
            BlockKind::TransferClaim
                | BlockKind::PayClaim
                | BlockKind::WarrantyClaim
                | BlockKind::PerformanceClaim
                | BlockKind::CompensationClaim
                | BlockKind::RestitutionClaim
        )
    }

    /// Keys whose value must be an integer literal.
    fn integer_keys(self) -> &'static [&'static str] {
        match self {
            BlockKind::Asset => &["amount"],
            BlockKind::ContractDates => &["closing", "horizon"],
            BlockKind::WarrantyClaim => &["threshold", "assert_window", "limitation"],
            BlockKind::PerformanceClaim => &["perform_window"],
            BlockKind::CompensationClaim => {
                &["perform_window", "pay_window", "rate", "unit", "minimum"]
            }
            _ => &[],
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Value of a block attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(untagged)]
pub enum AttrValue {
    Ident(String),
    Int(i64),
    List(Vec<String>),
}

impl AttrValue {
    pub fn as_ident(&self) -> Option<&str> {
        match self {
            AttrValue::Ident(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            AttrValue::Int(n) => Some(*n),
            _ => None,
        }
    }

    /// A single identifier is accepted as a one-element list.
    pub fn as_list(&self) -> Option<Vec<&str>> {
        match self {
            AttrValue::Ident(s) => Some(vec![s.as_str()]),
            AttrValue::List(items) => Some(items.iter().map(String::as_str).collect()),
            AttrValue::Int(_) => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Ident(s) => f.write_str(s),
            AttrValue::Int(n) => write!(f, "{n}"),
            AttrValue::List(items) => f.write_str(&items.join(", ")),
        }
    }
}

/// One `block … end` unit. Equality ignores the source span.
#[derive(Debug, Clone, Serialize)]
pub struct Block {
    pub kind: BlockKind,
    pub id: String,
    pub attrs: IndexMap<String, AttrValue>,
    pub span: SourceSpan,
}

impl PartialEq for Block {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.id == other.id && self.attrs == other.attrs
    }
}

impl Eq for Block {}

impl Block {
    pub fn new(kind: BlockKind, id: impl Into<String>) -> Self {
        Block {
            kind,
            id: id.into(),
            attrs: IndexMap::new(),
            span: SourceSpan::default(),
        }
    }

    pub fn with(mut self, key: &str, value: AttrValue) -> Self {
        self.attrs.insert(key.to_string(), value);
        self
    }

    pub fn attr(&self, key: &str) -> Option<&AttrValue> {
        self.attrs.get(key)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BlockDocument {
    pub blocks: Vec<Block>,
}

impl BlockDocument {
    pub fn get(&self, id: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.id == id)
    }

    pub fn of_kind(&self, kind: BlockKind) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(move |b| b.kind == kind)
    }

    /// Returns a copy without the blocks whose ids are listed.
    pub fn without(&self, ids: &[&str]) -> BlockDocument {
        BlockDocument {
            blocks: self
                .blocks
                .iter()
                .filter(|b| !ids.contains(&b.id.as_str()))
                .cloned()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

fn syntax(line: usize, message: impl Into<String>) -> SyntaxError {
    SyntaxError {
        line,
        message: message.into(),
    }
}

pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_integer(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn parse_value(raw: &str, line: usize) -> Result<AttrValue, SyntaxError> {
    if is_integer(raw) {
        return raw
            .parse()
            .map(AttrValue::Int)
            .map_err(|_| syntax(line, format!("integer out of range: {raw}")));
    }
    if raw.contains(',') {
        let items: Vec<String> = raw.split(',').map(|s| s.trim().to_string()).collect();
        if let Some(bad) = items.iter().find(|s| !is_ident(s)) {
            return Err(syntax(line, format!("invalid list item `{bad}`")));
        }
        return Ok(AttrValue::List(items));
    }
    if is_ident(raw) {
        return Ok(AttrValue::Ident(raw.to_string()));
    }
    Err(syntax(line, format!("invalid value `{raw}`")))
}

struct OpenBlock {
    block: Block,
    key_lines: Vec<usize>,
}

/// Parses block text. Returns the first syntax error; there are no partial
/// results.
pub fn parse_blocks(text: &str) -> Result<BlockDocument, SyntaxError> {
    let mut doc = BlockDocument::default();
    let mut open: Option<OpenBlock> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indented = content.starts_with(' ') || content.starts_with('\t');

        match open.as_mut() {
            None => {
                let mut words = trimmed.split_whitespace();
                if words.next() != Some("block") {
                    return Err(syntax(
                        line_no,
                        format!("expected `block`, found `{trimmed}`"),
                    ));
                }
                let (kind, id) = match (words.next(), words.next(), words.next()) {
                    (Some(kind), Some(id), None) => (kind, id),
                    _ => {
                        return Err(syntax(
                            line_no,
                            "malformed block header, expected `block <Kind> <Id>`",
                        ))
                    }
                };
                let kind = BlockKind::parse(kind)
                    .ok_or_else(|| syntax(line_no, format!("unknown block kind `{kind}`")))?;
                if !is_ident(id) {
                    return Err(syntax(line_no, format!("invalid block id `{id}`")));
                }
                if doc.get(id).is_some() {
                    return Err(syntax(line_no, format!("duplicate block id `{id}`")));
                }
                let mut block = Block::new(kind, id);
                block.span = SourceSpan::new(line_no, line_no);
                open = Some(OpenBlock {
                    block,
                    key_lines: Vec::new(),
                });
            }
            Some(current) => {
                if trimmed == "end" && !indented {
                    let mut finished = open.take().expect("open block").block;
                    finished.span.line_end = line_no;
                    doc.blocks.push(finished);
                    continue;
                }
                if !indented {
                    return Err(syntax(
                        current.block.span.line_start,
                        format!("unterminated block `{}`", current.block.id),
                    ));
                }
                let (key, raw_value) = trimmed
                    .split_once(':')
                    .ok_or_else(|| syntax(line_no, "expected `key: value`"))?;
                let key = key.trim();
                let raw_value = raw_value.trim();
                if !is_ident(key) {
                    return Err(syntax(line_no, format!("invalid key `{key}`")));
                }
                if raw_value.is_empty() {
                    return Err(syntax(line_no, format!("missing value for `{key}`")));
                }
                if current.block.attrs.contains_key(key) {
                    return Err(syntax(line_no, format!("duplicate key `{key}`")));
                }
                let value = parse_value(raw_value, line_no)?;
                if current.block.kind.integer_keys().contains(&key) && value.as_int().is_none() {
                    return Err(syntax(
                        line_no,
                        format!("`{key}` requires an integer, found `{raw_value}`"),
                    ));
                }
                current.block.attrs.insert(key.to_string(), value);
                current.key_lines.push(line_no);
            }
        }
    }

    if let Some(current) = open {
        return Err(syntax(
            current.block.span.line_start,
            format!("unterminated block `{}`", current.block.id),
        ));
    }
    Ok(doc)
}

/// Canonical text: two-space indentation, `, ` list separators, blocks
/// separated by one blank line.
pub fn serialize_blocks(doc: &BlockDocument) -> String {
    let mut out = String::new();
    for (i, block) in doc.blocks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("block {} {}\n", block.kind, block.id));
        for (key, value) in &block.attrs {
            out.push_str(&format!("  {key}: {value}\n"));
        }
        out.push_str("end\n");
    }
    out
}

/// A validation finding tied to a block when one is responsible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub block: Option<String>,
    pub span: Option<SourceSpan>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.block, &self.span) {
            (Some(block), Some(span)) => write!(f, "{block} ({span}): {}", self.message),
            (Some(block), None) => write!(f, "{block}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Expect {
    Ident,
    Int,
    List,
    /// Integer day or the identifier `closing`.
    Day,
}

fn schema(kind: BlockKind) -> &'static [(&'static str, Expect)] {
    use Expect::*;
    match kind {
        BlockKind::Party => &[("role", Ident)],
        BlockKind::Asset => &[("type", Ident)],
        BlockKind::PropertyFact => &[("asset", Ident), ("owner", Ident)],
        BlockKind::ContractDates => &[("closing", Int), ("horizon", Int)],
        BlockKind::TransferClaim | BlockKind::PayClaim => &[
            ("debtor", Ident),
            ("creditor", Ident),
            ("asset", Ident),
            ("due", Day),
        ],
        BlockKind::WarrantyClaim => &[
            ("debtor", Ident),
            ("creditor", Ident),
            ("measure", Ident),
            ("threshold", Int),
            ("assert_window", Int),
            ("limitation", Int),
            ("consequences", List),
        ],
        BlockKind::PerformanceClaim => &[("primary", Ident), ("perform_window", Int)],
        BlockKind::CompensationClaim => &[
            ("primary", Ident),
            ("perform_window", Int),
            ("pay_window", Int),
            ("rate", Int),
            ("unit", Int),
            ("minimum", Int),
        ],
        BlockKind::RestitutionClaim => &[("primary", Ident)],
    }
}

/// Optional keys beyond the schema.
fn optional_keys(kind: BlockKind) -> &'static [&'static str] {
    match kind {
        BlockKind::Asset => &["amount"],
        _ => &[],
    }
}

struct Validator<'a> {
    doc: &'a BlockDocument,
    out: Vec<Diagnostic>,
}

impl<'a> Validator<'a> {
    fn report(&mut self, block: &Block, message: impl Into<String>) {
        self.out.push(Diagnostic {
            block: Some(block.id.clone()),
            span: Some(block.span),
            message: message.into(),
        });
    }

    /// Checks that `key` names a block of one of `kinds`; returns the target.
    fn reference(&mut self, block: &Block, key: &str, kinds: &[BlockKind]) -> Option<&'a Block> {
        let target = block.attr(key)?.as_ident()?;
        match self.doc.get(target) {
            None => {
                self.report(block, format!("unresolved reference {target}"));
                None
            }
            Some(t) if !kinds.contains(&t.kind) => {
                let expected: Vec<&str> = kinds.iter().map(|k| k.as_str()).collect();
                self.report(
                    block,
                    format!(
                        "`{key}` must name a {} block, but {target} is a {}",
                        expected.join(" or "),
                        t.kind
                    ),
                );
                None
            }
            Some(t) => Some(t),
        }
    }

    fn non_negative(&mut self, block: &Block, key: &str) {
        if let Some(n) = block.attr(key).and_then(AttrValue::as_int) {
            if n < 0 {
                self.report(block, format!("`{key}` must not be negative"));
            }
        }
    }

    fn check_block(&mut self, block: &'a Block) {
        let schema = schema(block.kind);
        for (key, value) in &block.attrs {
            let Some((_, expect)) = schema.iter().find(|(k, _)| k == key) else {
                if !optional_keys(block.kind).contains(&key.as_str()) {
                    self.report(block, format!("unknown key `{key}`"));
                }
                continue;
            };
            let ok = match expect {
                Expect::Ident => value.as_ident().is_some(),
                Expect::Int => value.as_int().is_some(),
                Expect::List => value.as_list().is_some(),
                Expect::Day => value.as_int().is_some() || value.as_ident() == Some("closing"),
            };
            if !ok {
                self.report(block, format!("invalid value `{value}` for `{key}`"));
            }
        }
        for (key, _) in schema {
            if block.attr(key).is_none() {
                self.report(block, format!("missing key `{key}`"));
            }
        }

        const PARTIES: &[BlockKind] = &[BlockKind::Party];
        const ASSETS: &[BlockKind] = &[BlockKind::Asset];
        match block.kind {
            BlockKind::Party => {
                if let Some(role) = block.attr("role").and_then(AttrValue::as_ident) {
                    if !matches!(role, "Seller" | "Purchaser" | "Third") {
                        self.report(block, format!("unknown role `{role}`"));
                    }
                }
            }
            BlockKind::Asset => {
                let amount = block.attr("amount");
                match block.attr("type").and_then(AttrValue::as_ident) {
                    Some("Cash") => match amount.and_then(AttrValue::as_int) {
                        None if amount.is_none() => self.report(block, "missing key `amount`"),
                        Some(n) if n < 0 => self.report(block, "`amount` must not be negative"),
                        _ => {}
                    },
                    Some("Shares") => {
                        if amount.is_some() {
                            self.report(block, "`amount` is only allowed on Cash assets");
                        }
                    }
                    Some(other) => self.report(block, format!("unknown asset type `{other}`")),
                    None => {}
                }
            }
            BlockKind::PropertyFact => {
                self.reference(block, "asset", ASSETS);
                self.reference(block, "owner", PARTIES);
                if let Some(asset) = block.attr("asset").and_then(AttrValue::as_ident) {
                    let earlier = self
                        .doc
                        .of_kind(BlockKind::PropertyFact)
                        .find(|b| b.attr("asset").and_then(AttrValue::as_ident) == Some(asset));
                    if earlier.is_some_and(|b| b.id != block.id) {
                        self.report(block, format!("asset {asset} already has an owner fact"));
                    }
                }
            }
            BlockKind::ContractDates => {
                let closing = block.attr("closing").and_then(AttrValue::as_int);
                let horizon = block.attr("horizon").and_then(AttrValue::as_int);
                if let (Some(closing), Some(horizon)) = (closing, horizon) {
                    if closing < 0 || closing > horizon {
                        self.report(block, "`closing` must lie within [0, horizon]");
                    }
                }
            }
            BlockKind::TransferClaim | BlockKind::PayClaim => {
                self.reference(block, "debtor", PARTIES);
                self.reference(block, "creditor", PARTIES);
                let asset = self.reference(block, "asset", ASSETS);
                if block.kind == BlockKind::PayClaim {
                    if let Some(asset) = asset {
                        if asset.attr("type").and_then(AttrValue::as_ident) != Some("Cash") {
                            self.report(block, format!("paid asset {} is not Cash", asset.id));
                        }
                    }
                }
                self.non_negative(block, "due");
            }
            BlockKind::WarrantyClaim => {
                self.reference(block, "debtor", PARTIES);
                self.reference(block, "creditor", PARTIES);
                for key in ["threshold", "assert_window", "limitation"] {
                    self.non_negative(block, key);
                }
                if let Some(measure) = block.attr("measure").and_then(AttrValue::as_ident) {
                    if self.doc.get(measure).is_some() || reserved_symbol(measure) {
                        self.report(
                            block,
                            format!("measure name {measure} clashes with another symbol"),
                        );
                    }
                }
                if let Some(list) = block.attr("consequences").and_then(AttrValue::as_list) {
                    for target in list {
                        match self.doc.get(target) {
                            None => self.report(block, format!("unresolved reference {target}")),
                            Some(t)
                                if !matches!(
                                    t.kind,
                                    BlockKind::PerformanceClaim | BlockKind::CompensationClaim
                                ) =>
                            {
                                self.report(
                                    block,
                                    format!("consequence {target} is a {}, not a Performance or Compensation claim", t.kind),
                                )
                            }
                            Some(t) => {
                                if t.attr("primary").and_then(AttrValue::as_ident)
                                    != Some(block.id.as_str())
                                {
                                    self.report(
                                        block,
                                        format!("consequence {target} does not name {} as its primary", block.id),
                                    );
                                }
                            }
                        }
                    }
                }
            }
            BlockKind::PerformanceClaim | BlockKind::CompensationClaim => {
                let primary = self.reference(block, "primary", &[BlockKind::WarrantyClaim]);
                for key in ["perform_window", "pay_window", "rate", "minimum"] {
                    self.non_negative(block, key);
                }
                if let Some(unit) = block.attr("unit").and_then(AttrValue::as_int) {
                    if unit < 1 {
                        self.report(block, "`unit` must be at least 1");
                    }
                }
                if let Some(primary) = primary {
                    let listed = primary
                        .attr("consequences")
                        .and_then(AttrValue::as_list)
                        .is_some_and(|l| l.contains(&block.id.as_str()));
                    if !listed {
                        self.report(
                            block,
                            format!(
                                "{} does not list {} among its consequences",
                                primary.id, block.id
                            ),
                        );
                    }
                    if block.kind == BlockKind::CompensationClaim {
                        self.check_sibling_window(block, primary);
                    }
                }
            }
            BlockKind::RestitutionClaim => {
                self.reference(
                    block,
                    "primary",
                    &[BlockKind::TransferClaim, BlockKind::PayClaim],
                );
            }
        }
    }

    fn check_sibling_window(&mut self, block: &Block, primary: &Block) {
        let window = block.attr("perform_window").and_then(AttrValue::as_int);
        let sibling = self
            .doc
            .of_kind(BlockKind::PerformanceClaim)
            .find(|b| b.attr("primary").and_then(AttrValue::as_ident) == Some(primary.id.as_str()));
        if let (Some(window), Some(sibling)) = (window, sibling) {
            let expected = sibling.attr("perform_window").and_then(AttrValue::as_int);
            if expected.is_some_and(|w| w != window) {
                self.report(
                    block,
                    format!("`perform_window` differs from sibling {}", sibling.id),
                );
            }
        }
    }
}

/// Symbols generated by the encoder; a measure may not reuse them.
fn reserved_symbol(name: &str) -> bool {
    name == "owner" || ["d_", "k_", "l_"].iter().any(|p| name.starts_with(p))
}

/// Checks required keys, value kinds, and references. An empty result means
/// the document can be turned into a contract model. Diagnostics follow
/// block order; document-level findings come last.
pub fn validate_blocks(doc: &BlockDocument) -> Vec<Diagnostic> {
    let mut v = Validator {
        doc,
        out: Vec::new(),
    };
    let mut dates_seen = false;
    for block in &doc.blocks {
        if block.kind == BlockKind::ContractDates {
            if dates_seen {
                v.report(block, "duplicate ContractDates");
            }
            dates_seen = true;
        }
        v.check_block(block);
    }
    let mut global = |message: &str| {
        v.out.push(Diagnostic {
            block: None,
            span: None,
            message: message.to_string(),
        })
    };
    if !dates_seen {
        global("missing ContractDates");
    }
    let has_role = |role: &str| {
        doc.of_kind(BlockKind::Party)
            .any(|b| b.attr("role").and_then(AttrValue::as_ident) == Some(role))
    };
    if !doc.blocks.is_empty() && !has_role("Seller") {
        global("missing Seller party");
    }
    if !doc.blocks.is_empty() && !has_role("Purchaser") {
        global("missing Purchaser party");
    }
    v.out
}
