//! Incremental model construction from CPTs.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::CausalModel;
use crate::table::Table;
use crate::variable::Variable;

/// Collects single-variable CPTs; the graph is read off each CPT's
/// conditioning variables. Variables keep insertion order.
#[derive(Debug, Default)]
pub struct ModelBuilder {
    variables: Vec<Variable>,
    edges: Vec<(String, String)>,
    cpts: BTreeMap<String, Table>,
    pending: Option<Error>,
}

impl ModelBuilder {
    pub fn add(&mut self, cpt: Table) -> &mut Self {
        if self.pending.is_some() {
            return self;
        }
        let [var] = cpt.scope() else {
            self.pending = Some(Error::Shape(format!("CPT over {:?} must have one variable", cpt.scope_names())));
            return self;
        };
        for g in cpt.given() {
            self.edges.push((g.name().to_string(), var.name().to_string()));
        }
        self.variables.push(var.clone());
        if self.cpts.insert(var.name().to_string(), cpt.clone()).is_some() {
            self.pending = Some(Error::Duplicate { kind: "variable", name: var.name().to_string() });
        }
        self
    }

    pub fn build(self) -> Result<CausalModel> {
        if let Some(e) = self.pending {
            return Err(e);
        }
        CausalModel::new(self.variables, self.edges, self.cpts)
    }
}
