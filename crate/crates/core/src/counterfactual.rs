//! Structural counterfactuals on functional models, approximate
//! counterfactuals on graphical models, and the KL certificate relating them.
//!
//! Both quantities share one shape: a posterior over a set `G` of variables
//! given the evidence, pushed through the post-interventional conditional
//! `p(y | do x', g)`:
//!
//! * exact: `G` = all exogenous variables of the FCM (backgrounds and
//!   observed roots) not intervened on,
//! * approximate: `G` = root nodes of the CGM not intervened on,
//! * generalized: `G` = a caller-supplied separating set minus `X`.
//!
//! The evidence-averaged KL between exact and approximate answers is bounded
//! by `H(E | G)` computed on the CGM.

use serde::Serialize;

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::info::{conditional_entropy, kl_divergence, InfoQuantity};
use crate::model::{CausalModel, FunctionalModel};
use crate::table::{cardinalities, strides, Table};
use crate::variable::{for_each_index, Assignment, Variable};

#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualQuery {
    do_: Assignment,
    targets: Vec<String>,
    evidence: Assignment,
}

impl CounterfactualQuery {
    /// `p(Y_{do X = x'} | e)`. Evidence may mention `X` (its factual value)
    /// but targets may not.
    pub fn new(do_: Assignment, targets: &[&str], evidence: Assignment) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Empty("counterfactual targets"));
        }
        if let Some(t) = targets.iter().find(|t| do_.contains(t)) {
            return Err(Error::OverlappingSets(t.to_string()));
        }
        Ok(CounterfactualQuery {
            do_,
            targets: targets.iter().map(|s| s.to_string()).collect(),
            evidence,
        })
    }

    pub fn do_assignment(&self) -> &Assignment {
        &self.do_
    }

    pub fn targets(&self) -> Vec<&str> {
        self.targets.iter().map(String::as_str).collect()
    }

    pub fn evidence(&self) -> &Assignment {
        &self.evidence
    }

    fn with_evidence(&self, evidence: Assignment) -> Self {
        CounterfactualQuery { evidence, ..self.clone() }
    }
}

/// Union of two name lists, preserving first-seen order.
fn union<'a>(a: &[&'a str], b: &[&'a str]) -> Vec<&'a str> {
    let mut out = a.to_vec();
    for n in b {
        if !out.contains(n) {
            out.push(n);
        }
    }
    out
}

/// `p(G | e)` from a joint table, as a table over `G` (in `G`'s order).
fn posterior(joint: &Table, g: &[&str], evidence: &Assignment) -> Result<Option<Table>> {
    if g.is_empty() {
        if joint.mass(evidence)? <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence(evidence.to_string()));
        }
        return Ok(None);
    }
    let names: Vec<&str> = evidence.names().collect();
    let sub = joint.marginal(&union(g, &names))?;
    let (cond, _) = sub.condition(evidence)?;
    Ok(Some(cond.marginal(g)?))
}

/// `Σ_g w(g) p_do(targets | g)` from the post-interventional joint.
fn push_forward(do_joint: &Table, g: &[&str], weights: Option<&Table>, targets: &[&str]) -> Result<Table> {
    let Some(weights) = weights else {
        return do_joint.marginal(targets);
    };
    let names = union(g, targets);
    let sub = do_joint.marginal(&names)?;
    let p_g = do_joint.marginal(g)?;
    let cards = cardinalities(sub.scope());
    let target_vars: Vec<Variable> = targets
        .iter()
        .map(|t| sub.variable(t).expect("target in union").clone())
        .collect();
    let t_pos: Vec<usize> = targets.iter().map(|t| names.iter().position(|n| n == t).unwrap()).collect();
    let t_strides = strides(&cardinalities(&target_vars));
    let g_strides = strides(&cards[..g.len()]);

    for (gi, (&w, &pg)) in weights.values().iter().zip(p_g.values()).enumerate() {
        if w > 0.0 && pg <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence(format!(
                "post-interventional conditioning cell {gi} over {g:?} has zero probability"
            )));
        }
    }

    let mut out = vec![0.0; target_vars.iter().map(Variable::cardinality).product()];
    let mut flat = 0;
    for_each_index(&cards, |idx| {
        let gi: usize = idx[..g.len()].iter().zip(&g_strides).map(|(a, b)| a * b).sum();
        let w = weights.values()[gi];
        if w > 0.0 {
            let ti: usize = t_pos.iter().zip(&t_strides).map(|(&p, s)| idx[p] * s).sum();
            out[ti] += w * sub.values()[flat] / p_g.values()[gi];
        }
        flat += 1;
    });
    Table::from_weights(target_vars, Vec::new(), out)
}

/// Shared evaluator: posterior over `g` in `model`, prediction in the
/// mutilated model. Joint tables are computed once and reused across
/// evidence values.
struct Evaluator {
    joint: Table,
    do_joint: Table,
    g: Vec<String>,
}

impl Evaluator {
    fn new(model: &CausalModel, do_: &Assignment, g: Vec<String>) -> Result<Self> {
        for (name, _) in do_.iter() {
            model.variable(name)?;
        }
        Ok(Evaluator {
            joint: model.joint()?,
            do_joint: model.intervene(do_)?.joint()?,
            g,
        })
    }

    fn eval(&self, q: &CounterfactualQuery) -> Result<Table> {
        let g: Vec<&str> = self.g.iter().map(String::as_str).collect();
        let w = posterior(&self.joint, &g, &q.evidence)?;
        push_forward(&self.do_joint, &g, w.as_ref(), &q.targets())
    }
}

fn exact_evaluator(f: &FunctionalModel, do_: &Assignment) -> Result<Evaluator> {
    let g = f
        .exogenous()
        .into_iter()
        .filter(|n| !do_.contains(n))
        .map(String::from)
        .collect();
    Evaluator::new(f.base(), do_, g)
}

fn root_set(m: &CausalModel, do_: &Assignment) -> Vec<String> {
    m.roots().into_iter().filter(|n| !do_.contains(n)).collect()
}

/// Structural counterfactual: abduction over all exogenous variables given
/// the evidence, action by mutilation, prediction of the targets.
pub fn exact_counterfactual(f: &FunctionalModel, q: &CounterfactualQuery) -> Result<Table> {
    exact_evaluator(f, &q.do_)?.eval(q)
}

/// Approximate counterfactual on a CGM:
/// `Σ_w p(y | do x', w) p(w | e)` with `w` ranging over the roots not in `X`.
pub fn approx_counterfactual(m: &CausalModel, q: &CounterfactualQuery) -> Result<Table> {
    Evaluator::new(m, &q.do_, root_set(m, &q.do_))?.eval(q)
}

/// Check the conditions under which a separating set `zset` may replace the
/// root nodes, returning `W = zset \ X` on success.
pub fn check_separating_set(m: &CausalModel, zset: &[&str], q: &CounterfactualQuery) -> Result<Vec<String>> {
    let dag = m.dag();
    for z in zset {
        m.variable(z)?;
    }
    let strict_ancestors: Vec<String> = dag
        .ancestors(zset)?
        .into_iter()
        .filter(|a| !zset.contains(&a.as_str()))
        .collect();
    let targets: Vec<&str> = q.targets().into_iter().filter(|t| !zset.contains(t)).collect();
    if let Some(t) = targets.iter().find(|t| strict_ancestors.iter().any(|a| a == *t)) {
        return Err(Error::Refused(format!(
            "d-separation check failed: target `{t}` is an ancestor of the separating set"
        )));
    }
    let anc: Vec<&str> = strict_ancestors.iter().map(String::as_str).collect();
    if !anc.is_empty() && !targets.is_empty() && !dag.d_separated(&targets, &anc, zset)? {
        return Err(Error::Refused(format!(
            "d-separation check failed: targets {targets:?} not separated from ancestors {anc:?} given {zset:?}"
        )));
    }
    let w: Vec<String> = zset
        .iter()
        .filter(|z| !q.do_.contains(z))
        .map(|z| z.to_string())
        .collect();
    let x: Vec<&str> = q.do_.names().collect();
    let w_ref: Vec<&str> = w.iter().map(String::as_str).collect();
    if !x.is_empty() && !w_ref.is_empty() && dag.has_directed_path(&x, &w_ref)? {
        return Err(Error::Refused(format!(
            "influence check failed: intervened {x:?} has a directed path into {w_ref:?}"
        )));
    }
    Ok(w)
}

/// `p^W`: the approximate counterfactual with the roots replaced by a
/// separating set. Errors name whichever precondition failed.
pub fn generalized_approx_counterfactual(m: &CausalModel, zset: &[&str], q: &CounterfactualQuery) -> Result<Table> {
    let w = check_separating_set(m, zset, q)?;
    Evaluator::new(m, &q.do_, w)?.eval(q)
}

/// One evidence cell's contribution to a counterfactual certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceTerm {
    pub evidence: Assignment,
    pub probability: f64,
    pub divergence: InfoQuantity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterfactualCertificate {
    pub certificate: Certificate,
    /// The conditioning set `W` of the approximation.
    pub conditioning: Vec<String>,
    pub terms: Vec<EvidenceTerm>,
}

/// Evidence-averaged `D(p(Y_{do x'} | E) || p̃(Y_{do x'} | E))` against the
/// bound `H(E | W)`, with `W` the non-intervened roots of the induced CGM.
pub fn counterfactual_certificate(
    f: &FunctionalModel,
    do_: &Assignment,
    targets: &[&str],
    evidence_vars: &[&str],
) -> Result<CounterfactualCertificate> {
    let m = f.induce_cgm()?;
    let w = root_set(&m, do_);
    certificate_with(f, &m, w, do_, targets, evidence_vars)
}

/// Certificate for the separating-set generalization.
pub fn generalized_certificate(
    f: &FunctionalModel,
    zset: &[&str],
    do_: &Assignment,
    targets: &[&str],
    evidence_vars: &[&str],
) -> Result<CounterfactualCertificate> {
    let m = f.induce_cgm()?;
    let probe = CounterfactualQuery::new(do_.clone(), targets, Assignment::new())?;
    let w = check_separating_set(&m, zset, &probe)?;
    certificate_with(f, &m, w, do_, targets, evidence_vars)
}

fn certificate_with(
    f: &FunctionalModel,
    m: &CausalModel,
    w: Vec<String>,
    do_: &Assignment,
    targets: &[&str],
    evidence_vars: &[&str],
) -> Result<CounterfactualCertificate> {
    let evidence_vars: Vec<&str> = union(&[], evidence_vars);
    for e in &evidence_vars {
        if f.background().contains(*e) {
            return Err(Error::InvalidParameter(format!("evidence variable `{e}` is a background variable")));
        }
    }
    let q = CounterfactualQuery::new(do_.clone(), targets, Assignment::new())?;
    let exact = exact_evaluator(f, do_)?;
    let approx = Evaluator::new(m, do_, w.clone())?;

    let cgm_joint = m.joint()?;
    let w_ref: Vec<&str> = w.iter().map(String::as_str).collect();
    let e_rest: Vec<&str> = evidence_vars.iter().copied().filter(|e| !w_ref.contains(e)).collect();
    let bound = if e_rest.is_empty() {
        InfoQuantity::ZERO
    } else {
        conditional_entropy(&cgm_joint, &e_rest, &w_ref)?
    };

    let mut terms = Vec::new();
    let mut divergence = 0.0;
    if evidence_vars.is_empty() {
        let d = kl_divergence(&exact.eval(&q)?, &approx.eval(&q)?)?;
        divergence = d.bits();
        terms.push(EvidenceTerm { evidence: Assignment::new(), probability: 1.0, divergence: d });
    } else {
        let p_e = cgm_joint.marginal(&evidence_vars)?;
        let vars = p_e.scope().to_vec();
        let mut flat = 0;
        let mut failure = None;
        for_each_index(&cardinalities(&vars), |idx| {
            let p = p_e.values()[flat];
            flat += 1;
            if p <= 0.0 || failure.is_some() {
                return;
            }
            let e: Assignment = vars.iter().zip(idx).map(|(v, &s)| (v.name().to_string(), s)).collect();
            let qe = q.with_evidence(e.clone());
            match exact
                .eval(&qe)
                .and_then(|ex| approx.eval(&qe).and_then(|ap| kl_divergence(&ex, &ap)))
            {
                Ok(d) => {
                    divergence += p * d.bits();
                    terms.push(EvidenceTerm { evidence: e, probability: p, divergence: d });
                }
                Err(err) => failure = Some(err),
            }
        });
        if let Some(err) = failure {
            return Err(err);
        }
    }
    Ok(CounterfactualCertificate {
        certificate: Certificate {
            divergence: InfoQuantity::from_bits(divergence),
            bound,
            preconditions_ok: true,
        },
        conditioning: w,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::fixtures::xor_chain;

    fn a(pairs: &[(&str, usize)]) -> Assignment {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn abduction_pins_noise_in_chain() {
        let f = xor_chain();
        let q = CounterfactualQuery::new(a(&[("X", 0)]), &["Y"], a(&[("X", 1), ("Y", 1)])).unwrap();
        let exact = exact_counterfactual(&f, &q).unwrap();
        assert!((exact.values()[0] - 1.0).abs() < 1e-12);
        let approx = approx_counterfactual(&f.induce_cgm().unwrap(), &q).unwrap();
        assert!((approx.values()[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn factual_do_gives_factual_outcome() {
        let f = xor_chain();
        let q = CounterfactualQuery::new(a(&[("X", 1)]), &["Y"], a(&[("X", 1), ("Y", 0)])).unwrap();
        assert_eq!(exact_counterfactual(&f, &q).unwrap().values(), &[1.0, 0.0]);
    }

    #[test]
    fn empty_evidence_is_interventional() {
        let f = xor_chain();
        let do_ = a(&[("X", 1)]);
        let q = CounterfactualQuery::new(do_.clone(), &["Y"], Assignment::new()).unwrap();
        let cf = exact_counterfactual(&f, &q).unwrap();
        let iv = f.base().interventional_query(&["Y"], &do_, &Assignment::new()).unwrap();
        assert!(cf.max_abs_diff(&iv).unwrap() < 1e-12);
        let m = f.induce_cgm().unwrap();
        let ap = approx_counterfactual(&m, &q).unwrap();
        assert!(ap.max_abs_diff(&iv).unwrap() < 1e-12);
    }

    #[test]
    fn evidence_on_roots_reduces_to_conditional() {
        let m = xor_chain().induce_cgm().unwrap();
        let q = CounterfactualQuery::new(a(&[("X", 0)]), &["Y"], a(&[("W", 1), ("Y", 1)])).unwrap();
        let ap = approx_counterfactual(&m, &q).unwrap();
        let direct = m
            .interventional_query(&["Y"], &a(&[("X", 0)]), &a(&[("W", 1)]))
            .unwrap();
        assert!(ap.max_abs_diff(&direct).unwrap() < 1e-12);
    }

    #[test]
    fn zero_probability_evidence_is_error() {
        let f = xor_chain();
        // X = W deterministically, so (W=0, X=1) is impossible.
        let q = CounterfactualQuery::new(a(&[("Y", 0)]), &["X"], a(&[("W", 0), ("X", 1)])).unwrap();
        assert!(matches!(exact_counterfactual(&f, &q), Err(Error::ZeroProbabilityEvidence(_))));
    }

    #[test]
    fn targets_may_not_be_intervened() {
        assert!(CounterfactualQuery::new(a(&[("X", 0)]), &["X"], Assignment::new()).is_err());
    }

    #[test]
    fn chain_certificate_is_tight() {
        let f = xor_chain();
        let c = counterfactual_certificate(&f, &a(&[("X", 0)]), &["Y"], &["X", "Y"]).unwrap();
        // Frozen from a brute-force enumeration of the four evidence cells:
        // 0.9 of the mass has KL = log2(1/0.9), 0.1 has KL = log2(10).
        let h = 0.468_995_593_589_281_3;
        assert!((c.certificate.bound.bits() - h).abs() < 1e-9);
        assert!((c.certificate.divergence.bits() - h).abs() < 1e-9);
        assert!(c.certificate.holds());
        assert_eq!(c.terms.len(), 4);
        let small = c.terms.iter().find(|t| t.evidence == a(&[("X", 1), ("Y", 1)])).unwrap();
        assert!((small.divergence.bits() - 0.152_003_093_445_050_06).abs() < 1e-9);
    }

    #[test]
    fn separating_set_roots_match_approx() {
        let m = xor_chain().induce_cgm().unwrap();
        let q = CounterfactualQuery::new(a(&[("X", 0)]), &["Y"], a(&[("X", 1), ("Y", 1)])).unwrap();
        let g = generalized_approx_counterfactual(&m, &["W"], &q).unwrap();
        assert!(g.max_abs_diff(&approx_counterfactual(&m, &q).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn separating_set_preconditions() {
        let m = xor_chain().induce_cgm().unwrap();
        // X is influenced by the intervened W.
        let q = CounterfactualQuery::new(a(&[("W", 0)]), &["Y"], Assignment::new()).unwrap();
        let err = generalized_approx_counterfactual(&m, &["X"], &q).unwrap_err();
        assert!(err.to_string().contains("influence"));
        // The target W is an ancestor of the separating set.
        let q = CounterfactualQuery::new(a(&[("X", 0)]), &["W"], Assignment::new()).unwrap();
        let err = generalized_approx_counterfactual(&m, &["Y"], &q).unwrap_err();
        assert!(err.to_string().contains("d-separation"));
    }
}
