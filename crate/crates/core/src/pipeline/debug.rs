//! Debugging and control of a system from its causal model: back-door
//! prediction, sandbox integration, policy search and observation-level
//! "what if" queries.

use serde::Serialize;

use crate::counterfactual::{approx_counterfactual, check_separating_set, generalized_approx_counterfactual, CounterfactualQuery};
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::info::{conditional_entropy, InfoQuantity};
use crate::model::{fit_cpt, CausalModel, Dataset, PartialModel, Provenance};
use crate::table::{cardinalities, Table};
use crate::variable::{for_each_index, Assignment, Variable};

/// Bound above which a debug answer is reported as low confidence. A
/// reporting convention only.
pub const LOW_CONFIDENCE_BITS: f64 = 0.5;

/// Largest number of candidate policies `optimize_policy` will enumerate.
pub const MAX_POLICIES: u128 = 1 << 20;

/// `p(y | do x) = Σ_z p(y | x, z) p(z)` from a joint table over (at least)
/// `x`, `y` and `adjust`, after checking that `adjust` is back-door admissible
/// in `dag`. The result is a conditional table `p(y | x)` read as
/// interventional. Strata `(x, z)` absent from the joint contribute a uniform
/// `p(y | x, z)`.
pub fn backdoor_predict(dag: &Dag, joint: &Table, x: &str, y: &str, adjust: &[&str]) -> Result<Table> {
    if !dag.backdoor_admissible(x, y, adjust)? {
        return Err(Error::Refused(format!(
            "{adjust:?} is not back-door admissible for the effect of `{x}` on `{y}`: \
             it leaves a back-door path open or contains a descendant of `{x}`"
        )));
    }
    let mut given = vec![x];
    given.extend_from_slice(adjust);
    let p_y = joint.conditional_of(&[y], &given)?;
    let xv = p_y.given()[0].clone();
    let yv = p_y.scope()[0].clone();
    let (nx, ny) = (xv.cardinality(), yv.cardinality());
    let mut out = vec![0.0; nx * ny];
    if adjust.is_empty() {
        out.copy_from_slice(p_y.values());
    } else {
        let p_z = joint.marginal(adjust)?;
        let nz = p_z.values().len();
        for xi in 0..nx {
            for (zi, &pz) in p_z.values().iter().enumerate() {
                if pz == 0.0 {
                    continue;
                }
                for (o, &p) in out[xi * ny..(xi + 1) * ny].iter_mut().zip(p_y.row(xi * nz + zi)) {
                    *o += pz * p;
                }
            }
        }
    }
    Table::from_weights(vec![yv], vec![xv], out)
}

/// Back-door prediction from an exact model.
pub fn backdoor_from_model(m: &CausalModel, x: &str, y: &str, adjust: &[&str]) -> Result<Table> {
    backdoor_predict(m.dag(), &m.joint()?, x, y, adjust)
}

/// Back-door prediction from observational data.
pub fn backdoor_from_data(dag: &Dag, data: &Dataset, x: &str, y: &str, adjust: &[&str]) -> Result<Table> {
    if data.provenance() != &Provenance::Observational {
        return Err(Error::Refused("back-door adjustment expects observational data".into()));
    }
    let mut names = vec![x, y];
    names.extend_from_slice(adjust);
    backdoor_predict(dag, &data.empirical_joint(&names)?, x, y, adjust)
}

/// Complete a model whose CPT for `x` is missing by fitting `p(x | pa_x)` on
/// data from a randomized experiment over all of `x`'s parents.
pub fn integrate_sandbox(m: &PartialModel, x: &str, d: &Dataset, smoothing: f64) -> Result<CausalModel> {
    let parents = m.dag().parents(x)?;
    match d.provenance() {
        Provenance::Observational => {
            return Err(Error::Refused(format!(
                "sandbox data for `{x}` must come from an experiment randomizing {parents:?}, got observational data"
            )))
        }
        Provenance::Interventional(set) => {
            if let Some(p) = parents.iter().find(|p| !set.contains(**p)) {
                return Err(Error::Refused(format!(
                    "parent `{p}` of `{x}` was not randomized in the sandbox experiment"
                )));
            }
        }
    }
    let declared = m.variables().iter().find(|v| v.name() == x).ok_or_else(|| Error::UnknownVariable(x.into()))?;
    if d.columns()[d.column_index(x)?] != *declared {
        return Err(Error::ScopeMismatch(format!("`{x}` has different states in the data")));
    }
    let cpt = fit_cpt(d, x, &parents, smoothing)?;
    let mut completed = m.clone();
    completed.install(x, cpt)?;
    completed.complete()
}

/// Real-valued utility over joint states of `targets`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Utility {
    targets: Vec<String>,
    values: Vec<f64>,
}

impl Utility {
    pub fn new(targets: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Empty("utility targets"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("utility value {v} is not finite")));
        }
        Ok(Utility { targets, values })
    }

    /// `[target = state]`.
    pub fn indicator(target: &Variable, state: usize) -> Result<Self> {
        target.check_index(state)?;
        let mut values = vec![0.0; target.cardinality()];
        values[state] = 1.0;
        Self::new(vec![target.name().to_string()], values)
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `E[u]` under a joint table containing the targets.
    pub fn expected(&self, joint: &Table) -> Result<f64> {
        let names: Vec<&str> = self.targets.iter().map(String::as_str).collect();
        let m = joint.marginal(&names)?;
        if m.values().len() != self.values.len() {
            return Err(Error::Shape(format!(
                "utility has {} values for {} target states",
                self.values.len(),
                m.values().len()
            )));
        }
        Ok(m.values().iter().zip(&self.values).map(|(p, u)| p * u).sum())
    }
}

/// A mechanism `π(x | pa_x)` chosen by a controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    table: Table,
}

impl Policy {
    pub fn new(table: Table) -> Result<Self> {
        if table.scope().len() != 1 {
            return Err(Error::Shape("a policy decides exactly one variable".into()));
        }
        Ok(Policy { table })
    }

    /// Deterministic policy choosing `choices[g]` in parent configuration `g`.
    pub fn deterministic(var: Variable, given: Vec<Variable>, choices: &[usize]) -> Result<Self> {
        let configs: usize = cardinalities(&given).iter().product();
        if choices.len() != configs {
            return Err(Error::Shape(format!("{} choices for {configs} parent configurations", choices.len())));
        }
        let mut i = 0;
        Self::new(Table::deterministic(var, given, |_| {
            i += 1;
            choices[i - 1]
        })?)
    }

    pub fn variable(&self) -> &Variable {
        &self.table.scope()[0]
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    /// State chosen in each parent configuration, if deterministic.
    pub fn choices(&self) -> Option<Vec<usize>> {
        self.table
            .rows()
            .map(|row| row.iter().position(|&p| p == 1.0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpace {
    Deterministic,
    /// Every row on the grid `{0, step, 2 step, .., 1}`; `1 / step` must be
    /// a whole number.
    StochasticGrid { step: f64 },
}

/// Rows of the probability grid with `parts` equal parts over `card` states,
/// in lexicographic order of their part counts.
fn grid_rows(card: usize, parts: usize) -> Vec<Vec<f64>> {
    fn rec(card: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == card {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(card, left - k, cur, out);
            cur.pop();
        }
    }
    let mut counts = Vec::new();
    rec(card, parts, &mut Vec::new(), &mut counts);
    counts
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / parts as f64).collect())
        .collect()
}

/// Exhaustive policy search: replace `x`'s CPT by each candidate, evaluate
/// `E[u]` exactly, keep the best. Candidates are visited in lexicographic
/// order of their encoding (per-configuration choices, first configuration
/// most significant) and a later candidate replaces the incumbent only if it
/// is better by more than `1e-12`, so ties go to the first in that order.
pub fn optimize_policy(m: &CausalModel, x: &str, u: &Utility, space: PolicySpace) -> Result<(Policy, f64)> {
    let var = m.variable(x)?.clone();
    let given = m.cpt(x)?.given().to_vec();
    let configs: usize = cardinalities(&given).iter().product();
    let rows: Vec<Vec<f64>> = match space {
        PolicySpace::Deterministic => (0..var.cardinality())
            .map(|s| (0..var.cardinality()).map(|t| if s == t { 1.0 } else { 0.0 }).collect())
            .collect(),
        PolicySpace::StochasticGrid { step } => {
            let parts = (1.0 / step).round();
            if !(step > 0.0 && step <= 1.0) || ((parts * step) - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("grid step {step} does not divide 1")));
            }
            grid_rows(var.cardinality(), parts as usize)
        }
    };
    let candidates = (rows.len() as u128).checked_pow(configs as u32).unwrap_or(u128::MAX);
    if candidates > MAX_POLICIES {
        return Err(Error::InvalidParameter(format!(
            "{candidates} candidate policies exceed the limit of {MAX_POLICIES}"
        )));
    }
    let cells = m.state_space();
    if cells > m.cell_cap() as u128 {
        return Err(Error::StateSpaceCap { cells, cap: m.cell_cap() });
    }

    let mut best: Option<(Table, f64)> = None;
    let mut failure = None;
    for_each_index(&vec![rows.len(); configs], |choice| {
        if failure.is_some() {
            return;
        }
        let values: Vec<f64> = choice.iter().flat_map(|&c| rows[c].iter().copied()).collect();
        let eval = Table::conditional(vec![var.clone()], given.clone(), values).and_then(|t| {
            let value = u.expected(&m.replace_cpt(x, t.clone())?.joint()?)?;
            Ok((t, value))
        });
        match eval {
            Ok((t, value)) => {
                if best.as_ref().is_none_or(|(_, b)| value > b + 1e-12) {
                    best = Some((t, value));
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (table, value) = best.expect("at least one candidate");
    Ok((Policy::new(table)?, value))
}

/// "Would `Y` have been `y'` had `X` been `x'`, given that we saw `x`, `y`
/// and the side evidence?"
#[derive(Debug, Clone, PartialEq)]
pub struct DebugQuery {
    pub x: String,
    pub x_factual: usize,
    pub x_counterfactual: usize,
    pub y: String,
    pub y_factual: usize,
    pub y_target: usize,
    pub side: Assignment,
}

impl DebugQuery {
    pub fn new(
        (x, x_factual, x_counterfactual): (&str, usize, usize),
        (y, y_factual, y_target): (&str, usize, usize),
        side: Assignment,
    ) -> Result<Self> {
        if x_factual == x_counterfactual && y_factual == y_target {
            return Err(Error::InvalidParameter(
                "vacuous query: neither the action nor the outcome differs from the facts".into(),
            ));
        }
        if x == y || side.contains(x) || side.contains(y) {
            return Err(Error::OverlappingSets(format!("{x}, {y}, side evidence")));
        }
        Ok(DebugQuery {
            x: x.into(),
            x_factual,
            x_counterfactual,
            y: y.into(),
            y_factual,
            y_target,
            side,
        })
    }

    pub fn evidence(&self) -> Assignment {
        self.side.clone().with(self.x.clone(), self.x_factual).with(self.y.clone(), self.y_factual)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DebugAnswer {
    /// `p̃(Y_{do X=x'} = y' | x, y, f)`.
    pub probability: f64,
    /// Full approximate counterfactual distribution of `Y`.
    pub distribution: Vec<f64>,
    /// `H(E | W)` with `E = {X, Y} ∪ F`.
    pub bound: InfoQuantity,
    pub conditioning: Vec<String>,
    pub low_confidence: bool,
}

/// Answer a debug query with the root-node approximation (or a separating
/// set when `zset` is given) and report its entropy bound.
///
/// When `x' = x` the answer is the factual conditional `p(y' | x, y, f)`,
/// which is what any structural model returns under the factual action.
pub fn debug_query(m: &CausalModel, q: &DebugQuery, zset: Option<&[&str]>) -> Result<DebugAnswer> {
    let y_var = m.variable(&q.y)?.clone();
    m.variable(&q.x)?.check_index(q.x_counterfactual)?;
    y_var.check_index(q.y_target)?;
    let do_ = Assignment::new().with(q.x.clone(), q.x_counterfactual);
    let cq = CounterfactualQuery::new(do_, &[&q.y], q.evidence())?;
    let (dist, w) = match zset {
        None => {
            let w: Vec<String> = m.roots().into_iter().filter(|r| *r != q.x).collect();
            (approx_counterfactual(m, &cq)?, w)
        }
        Some(z) => (generalized_approx_counterfactual(m, z, &cq)?, check_separating_set(m, z, &cq)?),
    };
    let distribution: Vec<f64> = if q.x_factual == q.x_counterfactual {
        (0..y_var.cardinality()).map(|s| if s == q.y_factual { 1.0 } else { 0.0 }).collect()
    } else {
        dist.values().to_vec()
    };

    let joint = m.joint()?;
    let w_ref: Vec<&str> = w.iter().map(String::as_str).collect();
    let e: Vec<&str> = q
        .evidence()
        .names()
        .filter(|n| !w_ref.contains(n))
        .map(|n| m.variable(n).map(Variable::name))
        .collect::<Result<_>>()?;
    let bound = if e.is_empty() { InfoQuantity::ZERO } else { conditional_entropy(&joint, &e, &w_ref)? };
    Ok(DebugAnswer {
        probability: distribution[q.y_target],
        distribution,
        bound,
        conditioning: w,
        low_confidence: bound.bits() > LOW_CONFIDENCE_BITS,
    })
}
