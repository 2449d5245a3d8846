//! A causal diagram whose mechanisms are only partly known.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::model::{check_cpt, CausalModel};
use crate::table::Table;
use crate::variable::Variable;

#[derive(Debug, Clone, PartialEq)]
pub struct PartialModel {
    dag: Dag,
    variables: Vec<Variable>,
    cpts: BTreeMap<String, Table>,
}

impl PartialModel {
    /// Every supplied CPT is checked against the graph; absent ones are
    /// allowed.
    pub fn new(variables: Vec<Variable>, edges: Vec<(String, String)>, cpts: BTreeMap<String, Table>) -> Result<Self> {
        let dag = Dag::new(variables.iter().map(|v| v.name().to_string()), edges)?;
        for (name, cpt) in &cpts {
            let var = variables
                .iter()
                .find(|v| v.name() == name)
                .ok_or_else(|| Error::UnknownVariable(name.clone()))?;
            check_cpt(&dag, &variables, var, cpt)?;
        }
        Ok(PartialModel { dag, variables, cpts })
    }

    /// Drop the CPTs of `names` from a complete model.
    pub fn from_model(model: &CausalModel, missing: &[&str]) -> Result<Self> {
        for m in missing {
            model.variable(m)?;
        }
        let cpts = model
            .cpts()
            .filter(|(n, _)| !missing.contains(n))
            .map(|(n, t)| (n.to_string(), t.clone()))
            .collect();
        Self::new(model.variables().to_vec(), model.edges(), cpts)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn cpts(&self) -> &BTreeMap<String, Table> {
        &self.cpts
    }

    pub fn missing(&self) -> Vec<&str> {
        self.variables
            .iter()
            .map(Variable::name)
            .filter(|n| !self.cpts.contains_key(*n))
            .collect()
    }

    pub fn install(&mut self, name: &str, cpt: Table) -> Result<()> {
        let var = self
            .variables
            .iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        check_cpt(&self.dag, &self.variables, var, &cpt)?;
        self.cpts.insert(name.to_string(), cpt);
        Ok(())
    }

    pub fn complete(&self) -> Result<CausalModel> {
        let edges = self
            .dag
            .edges()
            .into_iter()
            .map(|(p, c)| (p.to_string(), c.to_string()))
            .collect();
        CausalModel::new(self.variables.clone(), edges, self.cpts.clone())
    }
}
