//! Causal graphical models: validation, exact inference by enumeration, and
//! interventions by mutilation.
//!
//! Inference enumerates the full joint state space. Every model this crate
//! works with is small, and enumeration also serves as the reference oracle
//! for the approximate quantities elsewhere. A hard cell cap (default
//! [`DEFAULT_CELL_CAP`]) guards against accidental blow-up.

mod builder;
mod dataset;
mod functional;
mod partial;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeSet};
use crate::table::{strides, Table};
use crate::variable::{for_each_index, Assignment, Variable};

pub use builder::ModelBuilder;
pub use dataset::{fit_cpt, Dataset, Provenance, DEFAULT_SMOOTHING};
pub use functional::FunctionalModel;
pub use partial::PartialModel;

pub const DEFAULT_CELL_CAP: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct CausalModel {
    dag: Dag,
    variables: Vec<Variable>,
    /// `cpts[i]` has scope `[variables[i]]` and given = parents in DAG order.
    cpts: Vec<Table>,
    cell_cap: usize,
}

/// Summary returned by a successful validation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub nodes: usize,
    pub edges: usize,
    pub state_space: u128,
    /// Largest |row sum - 1| over all CPT rows.
    pub max_residual: f64,
}

/// Check variables, edges and CPTs against every model invariant, failing on
/// the first violation.
pub fn validate(
    variables: &[Variable],
    edges: &[(String, String)],
    cpts: &BTreeMap<String, Table>,
) -> Result<ValidationReport> {
    let dag = Dag::new(
        variables.iter().map(|v| v.name().to_string()),
        edges.iter().map(|(p, c)| (p.clone(), c.clone())),
    )?;
    if let Some(extra) = cpts.keys().find(|k| !dag.contains(k)) {
        return Err(Error::UnknownVariable(extra.clone()));
    }
    let mut max_residual: f64 = 0.0;
    for var in variables {
        let cpt = cpts.get(var.name()).ok_or_else(|| Error::MissingCpt(var.name().to_string()))?;
        check_cpt(&dag, variables, var, cpt)?;
        for row in cpt.rows() {
            max_residual = max_residual.max((row.iter().sum::<f64>() - 1.0).abs());
        }
    }
    Ok(ValidationReport {
        nodes: dag.len(),
        edges: dag.edges().len(),
        state_space: variables.iter().map(|v| v.cardinality() as u128).product(),
        max_residual,
    })
}

fn check_cpt(dag: &Dag, variables: &[Variable], var: &Variable, cpt: &Table) -> Result<()> {
    let mismatch = |reason: String| Error::CptMismatch { node: var.name().to_string(), reason };
    if cpt.scope() != std::slice::from_ref(var) {
        return Err(mismatch(format!("scope is {:?}", cpt.scope_names())));
    }
    let parents = dag.parents(var.name())?;
    if cpt.given_names() != parents {
        return Err(mismatch(format!(
            "conditions on {:?}, graph parents are {:?}",
            cpt.given_names(),
            parents
        )));
    }
    for g in cpt.given() {
        let declared = variables.iter().find(|v| v.name() == g.name());
        if declared != Some(g) {
            return Err(mismatch(format!("parent `{}` has different states", g.name())));
        }
    }
    Ok(())
}

impl CausalModel {
    /// Validated construction; variables are kept in the given order.
    pub fn new(variables: Vec<Variable>, edges: Vec<(String, String)>, cpts: BTreeMap<String, Table>) -> Result<Self> {
        validate(&variables, &edges, &cpts)?;
        let dag = Dag::new(variables.iter().map(|v| v.name().to_string()), edges)?;
        let mut cpts = cpts;
        let cpts = variables
            .iter()
            .map(|v| cpts.remove(v.name()).expect("validated"))
            .collect();
        Ok(CausalModel { dag, variables, cpts, cell_cap: DEFAULT_CELL_CAP })
    }

    pub fn with_cell_cap(mut self, cap: usize) -> Self {
        self.cell_cap = cap;
        self
    }

    pub fn cell_cap(&self) -> usize {
        self.cell_cap
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(Variable::name).collect()
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        Ok(&self.variables[self.dag.idx(name)?])
    }

    pub fn cpt(&self, name: &str) -> Result<&Table> {
        Ok(&self.cpts[self.dag.idx(name)?])
    }

    pub fn cpts(&self) -> impl Iterator<Item = (&str, &Table)> {
        self.variables.iter().map(Variable::name).zip(&self.cpts)
    }

    pub fn roots(&self) -> NodeSet {
        self.dag.roots()
    }

    pub fn edges(&self) -> Vec<(String, String)> {
        self.dag
            .edges()
            .into_iter()
            .map(|(p, c)| (p.to_string(), c.to_string()))
            .collect()
    }

    pub fn validation_report(&self) -> ValidationReport {
        let cpts = self.cpts().map(|(n, t)| (n.to_string(), t.clone())).collect();
        validate(&self.variables, &self.edges(), &cpts).expect("model is valid by construction")
    }

    /// Model with one CPT swapped out; the replacement must condition on the
    /// same parents.
    pub fn replace_cpt(&self, name: &str, table: Table) -> Result<CausalModel> {
        let i = self.dag.idx(name)?;
        check_cpt(&self.dag, &self.variables, &self.variables[i], &table)?;
        let mut out = self.clone();
        out.cpts[i] = table;
        Ok(out)
    }

    pub fn state_space(&self) -> u128 {
        self.variables.iter().map(|v| v.cardinality() as u128).product()
    }

    /// Full joint `Π_X p(x | pa_X)` over all variables in declaration order.
    pub fn joint(&self) -> Result<Table> {
        let cells = self.state_space();
        if cells > self.cell_cap as u128 {
            return Err(Error::StateSpaceCap { cells, cap: self.cell_cap });
        }
        // For each CPT, the positions of (parents..., node) in the full index
        // and the matching strides into the CPT's flat storage.
        let factors: Vec<(Vec<usize>, Vec<usize>)> = self
            .cpts
            .iter()
            .enumerate()
            .map(|(i, cpt)| {
                let mut pos: Vec<usize> = cpt
                    .given()
                    .iter()
                    .map(|g| self.dag.idx(g.name()).expect("validated"))
                    .collect();
                pos.push(i);
                let mut cards: Vec<usize> = cpt.given().iter().map(Variable::cardinality).collect();
                cards.push(self.variables[i].cardinality());
                (pos, strides(&cards))
            })
            .collect();
        let cards: Vec<usize> = self.variables.iter().map(Variable::cardinality).collect();
        let mut values = Vec::with_capacity(cells as usize);
        for_each_index(&cards, |idx| {
            let mut p = 1.0;
            for (cpt, (pos, st)) in self.cpts.iter().zip(&factors) {
                let flat: usize = pos.iter().zip(st).map(|(&q, &s)| idx[q] * s).sum();
                p *= cpt.values()[flat];
                if p == 0.0 {
                    break;
                }
            }
            values.push(p);
        });
        Table::from_weights(self.variables.clone(), Vec::new(), values)
    }

    /// Exact `p(targets | evidence)` as a joint table over `targets`.
    pub fn query(&self, targets: &[&str], evidence: &Assignment) -> Result<Table> {
        if targets.is_empty() {
            return Err(Error::Empty("query targets"));
        }
        for n in evidence.names() {
            self.variable(n)?;
        }
        let (conditioned, _) = self.joint()?.condition(evidence)?;
        conditioned.marginal(targets)
    }

    /// Post-interventional model: each intervened variable becomes a root
    /// point mass at its do-value. Intervened variables stay in the graph so
    /// they can still be queried; descendants' CPTs are unchanged, which is
    /// equivalent to restricting them to the do-values.
    pub fn intervene(&self, do_: &Assignment) -> Result<CausalModel> {
        for (name, state) in do_.iter() {
            self.variable(name)?.check_index(state)?;
        }
        let edges: Vec<(String, String)> = self
            .edges()
            .into_iter()
            .filter(|(_, c)| !do_.contains(c))
            .collect();
        let dag = Dag::new(self.variables.iter().map(|v| v.name().to_string()), edges)?;
        let cpts = self
            .variables
            .iter()
            .zip(&self.cpts)
            .map(|(v, t)| match do_.get(v.name()) {
                Some(s) => Table::point_mass(v.clone(), s),
                None => Ok(t.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CausalModel { dag, variables: self.variables.clone(), cpts, cell_cap: self.cell_cap })
    }

    /// `p(targets | do, evidence)`; evidence and do-set must not share variables.
    pub fn interventional_query(&self, targets: &[&str], do_: &Assignment, evidence: &Assignment) -> Result<Table> {
        if let Some(n) = evidence.names().find(|n| do_.contains(n)) {
            return Err(Error::OverlappingSets(n.to_string()));
        }
        self.intervene(do_)?.query(targets, evidence)
    }
}
