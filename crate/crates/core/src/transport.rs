//! Approximate integration of causal knowledge from separate sources.
//!
//! Given a mechanism `p(z | x_0..x_K)` and, from each source separately, the
//! context-conditionals `p(x_k | c)` plus a shared prior `p(c)`, predict
//!
//! ```text
//! p̄(z) = Σ_{x, c} p(z | x) Π_k p(x_k | c) p(c)
//! ```
//!
//! When `Z ⊥ C | X_0..X_K` holds, `D(p(Z) || p̄(Z)) ≤ Σ_{k≥1} H(X_k | C)`.
//! The provider variable `X_0` is optional and is left out of the bound by
//! default: the telescoping mutual-information argument produces no
//! `H(X_0 | C)` term.

use serde::Serialize;

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::info::{expected_row_entropy, kl_divergence, InfoQuantity};
use crate::table::{cardinalities, Table};
use crate::variable::{for_each_index, Variable};

/// Consistency tolerance between a full joint and the pieces derived from it.
pub const PIECE_TOLERANCE: f64 = 1e-6;
/// Tolerance of the exact conditional-independence test.
pub const CI_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportInputs {
    mechanism: Table,
    provider: Option<Table>,
    clients: Vec<Table>,
    context: Table,
}

impl TransportInputs {
    /// `mechanism` must condition on every piece's variable and may in
    /// addition condition on context variables. Each piece is `p(x_k | C)`
    /// with `C` exactly the scope of `context`.
    pub fn new(mechanism: Table, provider: Option<Table>, clients: Vec<Table>, context: Table) -> Result<Self> {
        if !context.is_joint() {
            return Err(Error::ScopeMismatch("context prior must be a joint table".into()));
        }
        if clients.is_empty() {
            return Err(Error::Empty("transport needs at least one client"));
        }
        let t = TransportInputs { mechanism, provider, clients, context };
        let mut seen: Vec<&str> = t.context.scope_names();
        for piece in t.pieces() {
            if piece.scope().len() != 1 {
                return Err(Error::ScopeMismatch(format!(
                    "piece over {:?} must have a single variable",
                    piece.scope_names()
                )));
            }
            if piece.given() != t.context.scope() {
                return Err(Error::ScopeMismatch(format!(
                    "piece p({} | {:?}) does not condition on the context {:?}",
                    piece.scope()[0],
                    piece.given_names(),
                    t.context.scope_names()
                )));
            }
            let name = piece.scope()[0].name();
            if seen.contains(&name) {
                return Err(Error::OverlappingSets(name.to_string()));
            }
            seen.push(name);
        }
        for g in t.mechanism.given() {
            let known = t.pieces().chain([&t.context]).find_map(|p| p.scope().iter().find(|v| v.name() == g.name()));
            match known {
                Some(v) if v == g => {}
                Some(_) => return Err(Error::ScopeMismatch(format!("`{}` has different states in the mechanism", g))),
                None => return Err(Error::ScopeMismatch(format!("mechanism conditions on unknown `{g}`"))),
            }
        }
        for piece in t.pieces() {
            let x = &piece.scope()[0];
            if !t.mechanism.given().contains(x) {
                return Err(Error::ScopeMismatch(format!("mechanism does not condition on `{x}`")));
            }
        }
        if let Some(z) = t.mechanism.scope().iter().find(|z| seen.contains(&z.name())) {
            return Err(Error::OverlappingSets(z.name().to_string()));
        }
        Ok(t)
    }

    pub fn mechanism(&self) -> &Table {
        &self.mechanism
    }

    pub fn provider(&self) -> Option<&Table> {
        self.provider.as_ref()
    }

    pub fn clients(&self) -> &[Table] {
        &self.clients
    }

    pub fn context(&self) -> &Table {
        &self.context
    }

    /// Provider piece (if any) followed by the clients.
    pub fn pieces(&self) -> impl Iterator<Item = &Table> {
        self.provider.iter().chain(&self.clients)
    }

    pub fn outcome_names(&self) -> Vec<&str> {
        self.mechanism.scope_names()
    }

    pub fn piece_names(&self) -> Vec<&str> {
        self.pieces().map(|p| p.scope()[0].name()).collect()
    }

    pub fn context_names(&self) -> Vec<&str> {
        self.context.scope_names()
    }
}

/// `p̄(z) = Σ_{x, c} p(z | x [, c]) Π_k p(x_k | c) p(c)`.
pub fn approx_transport(t: &TransportInputs) -> Result<Table> {
    let pieces: Vec<&Table> = t.pieces().collect();
    let k = pieces.len();
    let mut vars: Vec<Variable> = pieces.iter().map(|p| p.scope()[0].clone()).collect();
    vars.extend(t.context.scope().iter().cloned());
    let ctx_cards = cardinalities(t.context.scope());

    let mech = &t.mechanism;
    let mech_pos: Vec<usize> = mech
        .given()
        .iter()
        .map(|g| vars.iter().position(|v| v == g).expect("validated"))
        .collect();
    let mech_cards = cardinalities(mech.given());
    let width = mech.scope_size();
    let mut out = vec![0.0; width];

    for_each_index(&cardinalities(&vars), |idx| {
        let c = idx[k..].iter().zip(&ctx_cards).fold(0, |acc, (&s, &n)| acc * n + s);
        let mut w = t.context.values()[c];
        for (piece, &x) in pieces.iter().zip(&idx[..k]) {
            if w == 0.0 {
                break;
            }
            w *= piece.row(c)[x];
        }
        if w == 0.0 {
            return;
        }
        let g = mech_pos.iter().zip(&mech_cards).fold(0, |acc, (&p, &n)| acc * n + idx[p]);
        for (o, &p) in out.iter_mut().zip(mech.row(g)) {
            *o += w * p;
        }
    });
    Table::from_weights(mech.scope().to_vec(), Vec::new(), out)
}

/// `Σ_k H(X_k | C)` over the clients, plus the provider when `include_x0`.
pub fn transport_bound(t: &TransportInputs, include_x0: bool) -> Result<InfoQuantity> {
    let mut total = InfoQuantity::ZERO;
    if include_x0 {
        if let Some(p) = &t.provider {
            total = total + expected_row_entropy(p, &t.context)?;
        }
    }
    for c in &t.clients {
        total = total + expected_row_entropy(c, &t.context)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportCertificate {
    pub certificate: Certificate,
    /// Whether the provider's `H(X_0 | C)` was added to the bound.
    pub includes_x0: bool,
    pub p_true: Vec<f64>,
    pub p_bar: Vec<f64>,
}

fn check_piece(expected: &Table, actual: &Table, support: Option<&Table>, what: &str) -> Result<()> {
    for (row, (e, a)) in expected.rows().zip(actual.rows()).enumerate() {
        if support.is_some_and(|s| s.values()[row] <= 0.0) {
            continue;
        }
        let diff = e.iter().zip(a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if diff > PIECE_TOLERANCE {
            return Err(Error::Refused(format!(
                "{what} differs from the joint by {diff:.3e} in row {row}"
            )));
        }
    }
    Ok(())
}

/// Exact test of `A ⊥ B | G` on a joint table.
pub fn conditionally_independent(joint: &Table, a: &[&str], b: &[&str], given: &[&str], tol: f64) -> Result<bool> {
    let names: Vec<&str> = a.iter().chain(b).chain(given).copied().collect();
    let abg = joint.marginal(&names)?;
    let ag = joint.marginal(&a.iter().chain(given).copied().collect::<Vec<_>>())?;
    let bg = joint.marginal(&b.iter().chain(given).copied().collect::<Vec<_>>())?;
    let g = if given.is_empty() { None } else { Some(joint.marginal(given)?) };
    let cards = cardinalities(abg.scope());
    let (na, nb) = (a.len(), b.len());
    let mut ok = true;
    let mut flat = 0;
    for_each_index(&cards, |idx| {
        let fold = |range: &mut dyn Iterator<Item = usize>| range.fold(0, |acc, i| acc * cards[i] + idx[i]);
        let ai = fold(&mut (0..na));
        let bi = fold(&mut (na..na + nb));
        let gi = fold(&mut (na + nb..cards.len()));
        let g_card: usize = cards[na + nb..].iter().product();
        let pg = g.as_ref().map_or(1.0, |t| t.values()[gi]);
        let lhs = abg.values()[flat] * pg;
        let rhs = ag.values()[ai * g_card + gi] * bg.values()[bi * g_card + gi];
        if (lhs - rhs).abs() > tol {
            ok = false;
        }
        flat += 1;
    });
    Ok(ok)
}

/// Validate the pieces against a full joint over `(Z, X_0..X_K, C)` and
/// compare `D(p(Z) || p̄(Z))` with the bound. A failed independence test
/// yields `preconditions_ok = false`, not an error.
pub fn transport_certificate(full_joint: &Table, t: &TransportInputs, include_x0: bool) -> Result<TransportCertificate> {
    let ctx = t.context_names();
    let p_c = full_joint.marginal(&ctx)?;
    check_piece(&p_c, &t.context, None, "context prior")?;
    for piece in t.pieces() {
        let x = piece.scope()[0].name();
        check_piece(&full_joint.conditional_of(&[x], &ctx)?, piece, Some(&p_c), &format!("p({x} | C)"))?;
    }
    let mech_given = t.mechanism.given_names();
    let outcome = t.outcome_names();
    check_piece(
        &full_joint.conditional_of(&outcome, &mech_given)?,
        &t.mechanism,
        Some(&full_joint.marginal(&mech_given)?),
        "mechanism",
    )?;

    let p_true = full_joint.marginal(&outcome)?;
    let p_bar = approx_transport(t)?;
    let divergence = kl_divergence(&p_true, &p_bar)?;
    let bound = transport_bound(t, include_x0)?;
    let xs = t.piece_names();
    let preconditions_ok = conditionally_independent(full_joint, &outcome, &ctx, &xs, CI_TOLERANCE)?;
    Ok(TransportCertificate {
        certificate: Certificate { divergence, bound, preconditions_ok },
        includes_x0: include_x0 && t.provider.is_some(),
        p_true: p_true.values().to_vec(),
        p_bar: p_bar.values().to_vec(),
    })
}

/// Whether a candidate `p(Z)` lies in the set the certificate leaves open:
/// `D(candidate || p̄) <= bound (1 + eps)`.
pub fn within_certified_set(candidate: &Table, p_bar: &Table, bound: InfoQuantity, eps: f64) -> Result<bool> {
    match kl_divergence(candidate, p_bar) {
        Ok(d) => Ok(d.bits() <= bound.bits() * (1.0 + eps)),
        Err(Error::AbsoluteContinuity { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Pieces of a transport problem read off a full joint: the mechanism
/// `p(Z | X_0..X_K)`, each `p(X_k | C)` and `p(C)`.
pub fn inputs_from_joint(
    joint: &Table,
    outcome: &[&str],
    provider: Option<&str>,
    clients: &[&str],
    context: &[&str],
) -> Result<TransportInputs> {
    let xs: Vec<&str> = provider.into_iter().chain(clients.iter().copied()).collect();
    let mechanism = joint.conditional_of(outcome, &xs)?;
    let piece = |x: &str| joint.conditional_of(&[x], context);
    TransportInputs::new(
        mechanism,
        provider.map(piece).transpose()?,
        clients.iter().map(|c| piece(c)).collect::<Result<Vec<_>>>()?,
        joint.marginal(context)?,
    )
}
