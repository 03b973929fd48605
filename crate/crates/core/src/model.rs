//! Typed contract object model built from a validated block document.

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::blocks::{validate_blocks, AttrValue, Block, BlockDocument, BlockKind, SourceSpan};

/// Days are offsets from signing, which is day 0.
pub type Day = i64;

pub const SIGNING_DAY: Day = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Role {
    Seller,
    Purchaser,
    Third,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Party {
    pub id: String,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AssetType {
    Shares,
    Cash,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Asset {
    pub id: String,
    pub asset_type: AssetType,
    /// Whole euros; set for cash only and used for reporting.
    pub amount: Option<i64>,
}

/// `owner(asset) = owner` as stated in the contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyFact {
    pub id: String,
    pub asset: String,
    pub owner: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ClaimKind {
    Transfer,
    Pay,
    Warranty,
    Performance,
    Compensation,
    Restitution,
}

impl ClaimKind {
    /// Transfer, pay and warranty claims are owed directly; the others are
    /// triggered by the breach of one of them.
    pub fn is_primary(self) -> bool {
        matches!(
            self,
            ClaimKind::Transfer | ClaimKind::Pay | ClaimKind::Warranty
        )
    }
}

/// Kind-specific parameters of a claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ClaimTerms {
    Transfer {
        asset: String,
        due: Day,
    },
    Pay {
        asset: String,
        due: Day,
    },
    Warranty {
        measure: String,
        threshold: i64,
        assert_window: Day,
        limitation: Day,
        consequences: Vec<String>,
    },
    Performance {
        primary: String,
        perform_window: Day,
    },
    Compensation {
        primary: String,
        perform_window: Day,
        pay_window: Day,
        rate: i64,
        unit: i64,
        minimum: i64,
    },
    Restitution {
        primary: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Claim {
    pub id: String,
    pub debtor: String,
    pub creditor: String,
    pub terms: ClaimTerms,
    /// Name of the integer variable holding the day the claim is performed
    /// (or asserted, for warranties); `-1` means not performed.
    pub day_var: String,
}

impl Claim {
    pub fn kind(&self) -> ClaimKind {
        match self.terms {
            ClaimTerms::Transfer { .. } => ClaimKind::Transfer,
            ClaimTerms::Pay { .. } => ClaimKind::Pay,
            ClaimTerms::Warranty { .. } => ClaimKind::Warranty,
            ClaimTerms::Performance { .. } => ClaimKind::Performance,
            ClaimTerms::Compensation { .. } => ClaimKind::Compensation,
            ClaimTerms::Restitution { .. } => ClaimKind::Restitution,
        }
    }

    pub fn primary(&self) -> Option<&str> {
        match &self.terms {
            ClaimTerms::Performance { primary, .. }
            | ClaimTerms::Compensation { primary, .. }
            | ClaimTerms::Restitution { primary } => Some(primary),
            _ => None,
        }
    }
}

pub fn day_var_name(claim_id: &str) -> String {
    format!("d_{claim_id}")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("internal error: model built from an invalid document: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContractModel {
    pub parties: IndexMap<String, Party>,
    pub assets: IndexMap<String, Asset>,
    pub facts: Vec<PropertyFact>,
    pub claims: IndexMap<String, Claim>,
    pub closing_day: Day,
    pub horizon: Day,
    /// Id of the ContractDates block; domain constraints are attributed to it.
    pub dates_block: String,
    /// Source span of every block; model elements carry their block's id.
    pub spans: IndexMap<String, SourceSpan>,
}

impl ContractModel {
    pub fn signing_day(&self) -> Day {
        SIGNING_DAY
    }

    pub fn claim(&self, id: &str) -> Option<&Claim> {
        self.claims.get(id)
    }

    /// Source block of a model element (party, asset, fact, claim or the
    /// contract dates).
    pub fn block_of(&self, element: &str) -> Option<(&str, SourceSpan)> {
        self.spans
            .get_full(element)
            .map(|(_, id, span)| (id.as_str(), *span))
    }

    /// Consequence claims attached to a primary claim, in declaration order.
    pub fn consequences_of(&self, primary: &str) -> Vec<&Claim> {
        match self.claims.get(primary).map(|c| &c.terms) {
            Some(ClaimTerms::Warranty { consequences, .. }) => consequences
                .iter()
                .filter_map(|id| self.claims.get(id))
                .collect(),
            Some(_) => self
                .claims
                .values()
                .filter(|c| c.kind() == ClaimKind::Restitution && c.primary() == Some(primary))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Due day of a transfer or pay claim.
    pub fn due_day(&self, claim: &str) -> Option<Day> {
        match self.claims.get(claim)?.terms {
            ClaimTerms::Transfer { due, .. } | ClaimTerms::Pay { due, .. } => Some(due),
            _ => None,
        }
    }

    /// Replaces the analysis horizon, keeping closing inside it.
    pub fn with_horizon(mut self, horizon: Day) -> Result<Self, ModelError> {
        if horizon < self.closing_day {
            return Err(ModelError::Internal(format!(
                "horizon {horizon} ends before closing day {}",
                self.closing_day
            )));
        }
        self.horizon = horizon;
        Ok(self)
    }
}

fn internal(msg: impl Into<String>) -> ModelError {
    ModelError::Internal(msg.into())
}

struct Reader<'a> {
    block: &'a Block,
}

impl<'a> Reader<'a> {
    fn ident(&self, key: &str) -> Result<String, ModelError> {
        self.block
            .attr(key)
            .and_then(AttrValue::as_ident)
            .map(str::to_string)
            .ok_or_else(|| internal(format!("{}: `{key}` is not an identifier", self.block.id)))
    }

    fn int(&self, key: &str) -> Result<i64, ModelError> {
        self.block
            .attr(key)
            .and_then(AttrValue::as_int)
            .ok_or_else(|| internal(format!("{}: `{key}` is not an integer", self.block.id)))
    }

    fn list(&self, key: &str) -> Result<Vec<String>, ModelError> {
        self.block
            .attr(key)
            .and_then(AttrValue::as_list)
            .map(|l| l.into_iter().map(str::to_string).collect())
            .ok_or_else(|| internal(format!("{}: `{key}` is not a list", self.block.id)))
    }

    fn day(&self, key: &str, closing: Day) -> Result<Day, ModelError> {
        match self.block.attr(key) {
            Some(AttrValue::Ident(s)) if s == "closing" => Ok(closing),
            _ => self.int(key),
        }
    }
}

/// Builds the contract model. The document must validate cleanly; anything
/// else is a caller bug reported as [`ModelError::Internal`].
pub fn build_model(doc: &BlockDocument) -> Result<ContractModel, ModelError> {
    let diagnostics = validate_blocks(doc);
    if let Some(first) = diagnostics.first() {
        return Err(internal(first.to_string()));
    }

    let dates = doc
        .of_kind(BlockKind::ContractDates)
        .next()
        .ok_or_else(|| internal("missing ContractDates"))?;
    let dates_reader = Reader { block: dates };
    let closing_day = dates_reader.int("closing")?;
    let horizon = dates_reader.int("horizon")?;

    let mut model = ContractModel {
        parties: IndexMap::new(),
        assets: IndexMap::new(),
        facts: Vec::new(),
        claims: IndexMap::new(),
        closing_day,
        horizon,
        dates_block: dates.id.clone(),
        spans: doc.blocks.iter().map(|b| (b.id.clone(), b.span)).collect(),
    };

    for block in &doc.blocks {
        let r = Reader { block };
        let id = block.id.clone();
        match block.kind {
            BlockKind::Party => {
                let role = match r.ident("role")?.as_str() {
                    "Seller" => Role::Seller,
                    "Purchaser" => Role::Purchaser,
                    _ => Role::Third,
                };
                model.parties.insert(id.clone(), Party { id, role });
            }
            BlockKind::Asset => {
                let asset_type = match r.ident("type")?.as_str() {
                    "Cash" => AssetType::Cash,
                    _ => AssetType::Shares,
                };
                let amount = match asset_type {
                    AssetType::Cash => Some(r.int("amount")?),
                    AssetType::Shares => None,
                };
                model.assets.insert(
                    id.clone(),
                    Asset {
                        id,
                        asset_type,
                        amount,
                    },
                );
            }
            BlockKind::PropertyFact => model.facts.push(PropertyFact {
                id,
                asset: r.ident("asset")?,
                owner: r.ident("owner")?,
            }),
            BlockKind::ContractDates => {}
            _ => {}
        }
    }

    // Claims second so consequence claims can inherit their primary's parties.
    for block in doc.blocks.iter().filter(|b| b.kind.is_claim()) {
        let r = Reader { block };
        let (debtor, creditor, terms) = match block.kind {
            BlockKind::TransferClaim | BlockKind::PayClaim => {
                let asset = r.ident("asset")?;
                let due = r.day("due", closing_day)?;
                let terms = if block.kind == BlockKind::TransferClaim {
                    ClaimTerms::Transfer { asset, due }
                } else {
                    ClaimTerms::Pay { asset, due }
                };
                (r.ident("debtor")?, r.ident("creditor")?, terms)
            }
            BlockKind::WarrantyClaim => (
                r.ident("debtor")?,
                r.ident("creditor")?,
                ClaimTerms::Warranty {
                    measure: r.ident("measure")?,
                    threshold: r.int("threshold")?,
                    assert_window: r.int("assert_window")?,
                    limitation: r.int("limitation")?,
                    consequences: r.list("consequences")?,
                },
            ),
            _ => {
                let primary = r.ident("primary")?;
                let parent = doc
                    .get(&primary)
                    .ok_or_else(|| internal(format!("unresolved primary {primary}")))?;
                let pr = Reader { block: parent };
                let terms = match block.kind {
                    BlockKind::PerformanceClaim => ClaimTerms::Performance {
                        primary,
                        perform_window: r.int("perform_window")?,
                    },
                    BlockKind::CompensationClaim => ClaimTerms::Compensation {
                        primary,
                        perform_window: r.int("perform_window")?,
                        pay_window: r.int("pay_window")?,
                        rate: r.int("rate")?,
                        unit: r.int("unit")?,
                        minimum: r.int("minimum")?,
                    },
                    _ => ClaimTerms::Restitution { primary },
                };
                (pr.ident("debtor")?, pr.ident("creditor")?, terms)
            }
        };
        model.claims.insert(
            block.id.clone(),
            Claim {
                id: block.id.clone(),
                debtor,
                creditor,
                terms,
                day_var: day_var_name(&block.id),
            },
        );
    }

    Ok(model)
}
