//! Privacy-preserving prediction between a provider and its clients: agree
//! on a shared context, reveal context-conditionals, predict the provider's
//! outcome with an entropy bound on the error.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{expected_row_entropy, InfoQuantity};
use crate::pipeline::debug::Policy;
use crate::table::Table;
use crate::transport::{approx_transport, TransportInputs};

/// Stakeholder id of the provider; every other id is a client.
pub const PROVIDER: usize = 0;

/// What one stakeholder discloses: the remaining uncertainty `H(X_k | C)`
/// for each context it is willing to share and, once a context is agreed,
/// its conditional `p(x_k | c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StakeholderDisclosure {
    pub stakeholder: usize,
    pub candidates: BTreeMap<String, InfoQuantity>,
    pub revealed: Option<Table>,
}

impl StakeholderDisclosure {
    pub fn new(stakeholder: usize, candidates: BTreeMap<String, InfoQuantity>) -> Result<Self> {
        if let Some((c, h)) = candidates.iter().find(|(_, h)| h.bits().is_nan() || h.bits() < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stakeholder {stakeholder}: entropy {h} for `{c}` is negative"
            )));
        }
        Ok(StakeholderDisclosure { stakeholder, candidates, revealed: None })
    }

    /// Reveal `p(x_k | c)` for the agreed context.
    pub fn reveal(mut self, conditional: Table) -> Self {
        self.revealed = Some(conditional);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextChoice {
    pub context: String,
    /// `Σ_k H(X_k | C)` over the clients.
    pub total: InfoQuantity,
}

/// Pick the shared context: among contexts every stakeholder accepts, the
/// one minimizing the clients' total remaining uncertainty; ties go to the
/// lexicographically smallest name. `None` when no context is acceptable to
/// all, in which case the procedure is abandoned.
pub fn pick_shared_context(disclosures: &[StakeholderDisclosure]) -> Result<Option<ContextChoice>> {
    if disclosures.len() < 2 {
        return Err(Error::InvalidParameter("context selection needs at least two stakeholders".into()));
    }
    let mut ids = BTreeSet::new();
    for d in disclosures {
        if !ids.insert(d.stakeholder) {
            return Err(Error::Duplicate { kind: "stakeholder", name: d.stakeholder.to_string() });
        }
    }
    let common: BTreeSet<&String> = disclosures[0]
        .candidates
        .keys()
        .filter(|c| disclosures[1..].iter().all(|d| d.candidates.contains_key(*c)))
        .collect();
    let mut best: Option<ContextChoice> = None;
    for c in common {
        let total: InfoQuantity = disclosures
            .iter()
            .filter(|d| d.stakeholder != PROVIDER)
            .map(|d| d.candidates[c])
            .sum();
        if best.as_ref().is_none_or(|b| total.bits() < b.total.bits()) {
            best = Some(ContextChoice { context: c.clone(), total });
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `p̄(Z | π_1..π_K)`.
    pub outcome: Table,
    /// `Σ_k H(X_k | C)` over the clients (plus the provider if requested).
    pub bound: InfoQuantity,
}

/// `p(y | c) = Σ_x π(y | x) p(x | c)`.
fn compose(policy: &Policy, px: &Table) -> Result<Table> {
    let pi = policy.table();
    if pi.given() != px.scope() {
        return Err(Error::ScopeMismatch(format!(
            "policy for `{}` acts on {:?}, disclosure is over {:?}",
            policy.variable(),
            pi.given_names(),
            px.scope_names()
        )));
    }
    let ny = pi.scope_size();
    let mut out = Vec::with_capacity(px.given_size() * ny);
    for row in px.rows() {
        let mut y = vec![0.0; ny];
        for (x, &p) in row.iter().enumerate() {
            for (o, &q) in y.iter_mut().zip(pi.row(x)) {
                *o += p * q;
            }
        }
        out.extend(y);
    }
    Table::from_weights(pi.scope().to_vec(), px.given().to_vec(), out)
}

/// Predict the provider's outcome from the revealed conditionals. `policies`
/// is aligned with `disclosures`; `None` means the stakeholder acts on its
/// variable directly (the mechanism then conditions on `X_k` itself). A provider
/// that reveals nothing contributes no `X_0` piece; clients must reveal.
pub fn predict_outcome(
    mechanism: &Table,
    policies: &[Option<Policy>],
    disclosures: &[StakeholderDisclosure],
    prior: &Table,
    include_x0: bool,
) -> Result<Prediction> {
    if policies.len() != disclosures.len() {
        return Err(Error::Shape(format!(
            "{} policies for {} stakeholders",
            policies.len(),
            disclosures.len()
        )));
    }
    let mut provider = None;
    let mut clients = Vec::new();
    let mut bound = InfoQuantity::ZERO;
    let mut order: Vec<usize> = (0..disclosures.len()).collect();
    order.sort_by_key(|&i| disclosures[i].stakeholder);
    for i in order {
        let d = &disclosures[i];
        let px = match (&d.revealed, d.stakeholder) {
            (Some(px), _) => px,
            (None, PROVIDER) => continue,
            (None, id) => {
                return Err(Error::InvalidParameter(format!("stakeholder {id} has not revealed p(x | c)")));
            }
        };
        let h = expected_row_entropy(px, prior)?;
        let piece = match &policies[i] {
            Some(pi) => compose(pi, px)?,
            None => px.clone(),
        };
        if d.stakeholder == PROVIDER {
            if include_x0 {
                bound = bound + h;
            }
            provider = Some(piece);
        } else {
            bound = bound + h;
            clients.push(piece);
        }
    }
    let t = TransportInputs::new(mechanism.clone(), provider, clients, prior.clone())?;
    Ok(Prediction { outcome: approx_transport(&t)?, bound })
}
