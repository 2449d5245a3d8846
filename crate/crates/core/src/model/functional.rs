//! Functional causal models in tabular form.
//!
//! Mechanisms are deterministic CPTs (entries in {0, 1}) over the variable's
//! parents and its background root. Observed roots may carry an arbitrary
//! prior; they are read as `X = U_X` with the background folded in.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::model::CausalModel;
use crate::table::{space_size, strides, Table};
use crate::variable::{for_each_index, Variable};

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalModel {
    base: CausalModel,
    background: NodeSet,
}

impl FunctionalModel {
    pub fn new<I, S>(base: CausalModel, background: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let background: NodeSet = background.into_iter().map(Into::into).collect();
        let dag = base.dag();
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for u in &background {
            if !dag.parents(u)?.is_empty() {
                return Err(Error::NotFunctional(format!("background `{u}` is not a root")));
            }
            let children = dag.children(u)?;
            let [child] = children.as_slice() else {
                return Err(Error::NotFunctional(format!(
                    "background `{u}` must have exactly one child, has {}",
                    children.len()
                )));
            };
            if background.contains(*child) {
                return Err(Error::NotFunctional(format!("background `{u}` points at background `{child}`")));
            }
            if let Some(prev) = owner.insert(child, u) {
                return Err(Error::NotFunctional(format!("`{child}` has two backgrounds `{prev}`, `{u}`")));
            }
        }
        for (name, cpt) in base.cpts() {
            if background.contains(name) || cpt.given().is_empty() {
                continue;
            }
            if !cpt.is_deterministic() {
                return Err(Error::NotFunctional(format!("mechanism for `{name}` is not deterministic")));
            }
        }
        Ok(FunctionalModel { base, background })
    }

    /// The model over observed and background variables together.
    pub fn base(&self) -> &CausalModel {
        &self.base
    }

    pub fn background(&self) -> &NodeSet {
        &self.background
    }

    pub fn observed(&self) -> Vec<&str> {
        self.base
            .names()
            .into_iter()
            .filter(|n| !self.background.contains(*n))
            .collect()
    }

    /// Variables whose joint value determines every other variable: the
    /// background roots plus the observed roots.
    pub fn exogenous(&self) -> Vec<&str> {
        let roots = self.base.roots();
        self.base
            .names()
            .into_iter()
            .filter(|n| self.background.contains(*n) || roots.contains(*n))
            .collect()
    }

    /// The CGM obtained by marginalizing every mechanism over its background
    /// variable's prior: `p(x | pa) = Σ_u [f(pa, u) = x] p(u)`.
    pub fn induce_cgm(&self) -> Result<CausalModel> {
        let observed: Vec<Variable> = self
            .base
            .variables()
            .iter()
            .filter(|v| !self.background.contains(v.name()))
            .cloned()
            .collect();
        let edges: Vec<(String, String)> = self
            .base
            .edges()
            .into_iter()
            .filter(|(p, _)| !self.background.contains(p))
            .collect();
        let mut cpts = BTreeMap::new();
        for var in &observed {
            let cpt = self.base.cpt(var.name())?;
            let u_pos = cpt.given().iter().position(|g| self.background.contains(g.name()));
            let table = match u_pos {
                None => cpt.clone(),
                Some(k) => marginalize_given(cpt, k, self.base.cpt(cpt.given()[k].name())?)?,
            };
            cpts.insert(var.name().to_string(), table);
        }
        Ok(CausalModel::new(observed, edges, cpts)?.with_cell_cap(self.base.cell_cap()))
    }
}

/// Sum a conditional `p(x | g_0..g_n)` over given variable `k` against `prior`.
fn marginalize_given(cpt: &Table, k: usize, prior: &Table) -> Result<Table> {
    let given = cpt.given();
    let rest: Vec<Variable> = given
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, v)| v.clone())
        .collect();
    let width = cpt.scope_size();
    let mut out = vec![0.0; space_size(&rest) * width];
    let cards: Vec<usize> = given.iter().map(Variable::cardinality).collect();
    let rest_strides = strides(&rest.iter().map(Variable::cardinality).collect::<Vec<_>>());
    let mut g = 0;
    for_each_index(&cards, |idx| {
        let r: usize = idx
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &s)| s)
            .zip(&rest_strides)
            .map(|(s, st)| s * st)
            .sum();
        let w = prior.values()[idx[k]];
        for (o, &p) in out[r * width..(r + 1) * width].iter_mut().zip(cpt.row(g)) {
            *o += w * p;
        }
        g += 1;
    });
    Table::from_weights(cpt.scope().to_vec(), rest, out)
}
