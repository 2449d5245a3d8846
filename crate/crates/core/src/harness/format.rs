//! File formats: JSON model documents, CSV datasets with a JSON sidecar, and
//! JSON table specifications.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::InfoQuantity;
use crate::model::{CausalModel, Dataset, FunctionalModel, PartialModel, Provenance};
use crate::pipeline::{Policy, StakeholderDisclosure};
use crate::table::{cardinalities, Table};
use crate::transport::TransportInputs;
use crate::variable::{for_each_index, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub states: Vec<String>,
}

impl VariableSpec {
    pub fn to_variable(&self) -> Result<Variable> {
        Variable::new(self.name.clone(), self.states.clone())
    }
}

impl From<&Variable> for VariableSpec {
    fn from(v: &Variable) -> Self {
        VariableSpec { name: v.name().to_string(), states: v.states().to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptSpec {
    pub parents: Vec<String>,
    /// One row per parent configuration (first parent most significant).
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpec {
    pub roots: Vec<String>,
    /// Observed variables whose mechanisms must be deterministic.
    #[serde(default)]
    pub mechanisms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub variables: Vec<VariableSpec>,
    pub edges: Vec<(String, String)>,
    pub cpts: BTreeMap<String, CptSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<BackgroundSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn find<'a>(vars: &'a [Variable], name: &str) -> Result<&'a Variable> {
    vars.iter().find(|v| v.name() == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
}

/// Permute the conditioning variables of `t` into `order`.
fn reorder_given(t: &Table, order: &[&str]) -> Result<Table> {
    if t.given_names() == order {
        return Ok(t.clone());
    }
    let given: Vec<Variable> = order
        .iter()
        .map(|n| t.given().iter().find(|g| g.name() == *n).cloned().ok_or_else(|| Error::UnknownVariable(n.to_string())))
        .collect::<Result<_>>()?;
    if given.len() != t.given().len() {
        return Err(Error::ScopeMismatch(format!("cannot reorder {:?} into {order:?}", t.given_names())));
    }
    let pos: Vec<usize> = t
        .given()
        .iter()
        .map(|g| order.iter().position(|n| *n == g.name()).expect("same set"))
        .collect();
    let old_cards = cardinalities(t.given());
    let mut values = Vec::with_capacity(t.values().len());
    for_each_index(&cardinalities(&given), |idx| {
        let old = pos.iter().zip(&old_cards).fold(0, |acc, (&p, &c)| acc * c + idx[p]);
        values.extend_from_slice(t.row(old));
    });
    Table::conditional(t.scope().to_vec(), given, values)
}

impl ModelDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn parts(&self) -> Result<(Vec<Variable>, BTreeMap<String, Table>)> {
        let vars: Vec<Variable> = self.variables.iter().map(VariableSpec::to_variable).collect::<Result<_>>()?;
        let mut cpts = BTreeMap::new();
        let parents_of = |child: &str| -> Vec<&str> {
            self.edges.iter().filter(|(_, c)| c == child).map(|(p, _)| p.as_str()).collect()
        };
        for (name, spec) in &self.cpts {
            let var = find(&vars, name)?.clone();
            let given: Vec<Variable> = spec.parents.iter().map(|p| find(&vars, p).cloned()).collect::<Result<_>>()?;
            let table = Table::conditional(vec![var], given, spec.rows.concat())?;
            let graph_parents = parents_of(name);
            let table = if graph_parents.len() == spec.parents.len() {
                reorder_given(&table, &graph_parents).map_err(|_| Error::CptMismatch {
                    node: name.clone(),
                    reason: format!("parents {:?} do not match the graph's {graph_parents:?}", spec.parents),
                })?
            } else {
                table
            };
            cpts.insert(name.clone(), table);
        }
        Ok((vars, cpts))
    }

    pub fn causal(&self) -> Result<CausalModel> {
        let (vars, cpts) = self.parts()?;
        CausalModel::new(vars, self.edges.clone(), cpts)
    }

    /// The model as an FCM; requires the `background` block.
    pub fn functional(&self) -> Result<FunctionalModel> {
        let bg = self
            .background
            .as_ref()
            .ok_or_else(|| Error::NotFunctional("model document has no `background` block".into()))?;
        let m = self.causal()?;
        for name in &bg.mechanisms {
            if !m.cpt(name)?.is_deterministic() {
                return Err(Error::NotFunctional(format!("mechanism for `{name}` is not deterministic")));
            }
        }
        FunctionalModel::new(m, bg.roots.iter().cloned())
    }

    /// The model with some CPTs possibly absent.
    pub fn partial(&self) -> Result<PartialModel> {
        let (vars, cpts) = self.parts()?;
        PartialModel::new(vars, self.edges.clone(), cpts)
    }

    fn from_parts<'a>(vars: &[Variable], edges: Vec<(String, String)>, cpts: impl Iterator<Item = (&'a str, &'a Table)>) -> Self {
        ModelDoc {
            variables: vars.iter().map(VariableSpec::from).collect(),
            edges,
            cpts: cpts
                .map(|(n, t)| {
                    let spec = CptSpec {
                        parents: t.given_names().iter().map(|s| s.to_string()).collect(),
                        rows: t.rows().map(<[f64]>::to_vec).collect(),
                    };
                    (n.to_string(), spec)
                })
                .collect(),
            background: None,
            seed: None,
        }
    }

    pub fn from_causal(m: &CausalModel) -> Self {
        Self::from_parts(m.variables(), m.edges(), m.cpts())
    }

    pub fn from_partial(m: &PartialModel) -> Self {
        let edges = m.dag().edges().into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        Self::from_parts(m.variables(), edges, m.cpts().iter().map(|(n, t)| (n.as_str(), t)))
    }

    pub fn from_functional(f: &FunctionalModel) -> Self {
        let mut doc = Self::from_causal(f.base());
        let mechanisms = f
            .observed()
            .into_iter()
            .filter(|n| f.base().cpt(n).is_ok_and(|t| !t.given().is_empty()))
            .map(String::from)
            .collect();
        doc.background = Some(BackgroundSpec { roots: f.background().iter().cloned().collect(), mechanisms });
        doc
    }
}

/// A table written against a list of declared variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub scope: Vec<String>,
    #[serde(default)]
    pub given: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TableSpec {
    pub fn to_table(&self, vars: &[Variable]) -> Result<Table> {
        let lookup = |names: &[String]| names.iter().map(|n| find(vars, n).cloned()).collect::<Result<Vec<_>>>();
        Table::conditional(lookup(&self.scope)?, lookup(&self.given)?, self.rows.concat())
    }

    pub fn from_table(t: &Table) -> Self {
        TableSpec {
            scope: t.scope_names().iter().map(|s| s.to_string()).collect(),
            given: t.given_names().iter().map(|s| s.to_string()).collect(),
            rows: t.rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

pub fn variables(specs: &[VariableSpec]) -> Result<Vec<Variable>> {
    specs.iter().map(VariableSpec::to_variable).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub columns: Vec<VariableSpec>,
    pub provenance: Provenance,
    pub seed: u64,
}

/// `data.csv` → `data.csv.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_dataset(path: &Path, d: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(d.columns().iter().map(Variable::name))?;
    for row in d.rows() {
        w.write_record(d.columns().iter().zip(row).map(|(c, &s)| c.states()[s].as_str()))?;
    }
    w.flush()?;
    let meta = DatasetMeta {
        columns: d.columns().iter().map(VariableSpec::from).collect(),
        provenance: d.provenance().clone(),
        seed: d.seed(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Read a dataset and its sidecar. Without a sidecar, `fallback` supplies
/// the variables and the data is taken as observational.
pub fn read_dataset(path: &Path, fallback: Option<&[Variable]>) -> Result<Dataset> {
    let meta_path = sidecar_path(path);
    let (declared, provenance, seed) = if meta_path.exists() {
        let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
        (variables(&meta.columns)?, meta.provenance, meta.seed)
    } else {
        let vars = fallback.ok_or_else(|| {
            Error::Parse(format!("{} has no sidecar {}", path.display(), meta_path.display()))
        })?;
        (vars.to_vec(), Provenance::Observational, 0)
    };
    let mut r = csv::Reader::from_path(path)?;
    let columns: Vec<Variable> = r.headers()?.iter().map(|h| find(&declared, h).cloned()).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let row = columns
            .iter()
            .zip(record.iter())
            .map(|(c, label)| c.state_index(label))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Dataset::new(columns, rows, provenance, seed)
}

/// Transport problem file: declared variables plus the pieces, and
/// optionally the full joint used to certify them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportDoc {
    pub variables: Vec<VariableSpec>,
    pub mechanism: TableSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<TableSpec>,
    pub clients: Vec<TableSpec>,
    pub context: TableSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<TableSpec>,
}

impl TransportDoc {
    pub fn inputs(&self) -> Result<TransportInputs> {
        let vars = variables(&self.variables)?;
        TransportInputs::new(
            self.mechanism.to_table(&vars)?,
            self.provider.as_ref().map(|p| p.to_table(&vars)).transpose()?,
            self.clients.iter().map(|c| c.to_table(&vars)).collect::<Result<_>>()?,
            self.context.to_table(&vars)?,
        )
    }

    pub fn joint(&self) -> Result<Table> {
        let vars = variables(&self.variables)?;
        self.joint
            .as_ref()
            .ok_or_else(|| Error::Parse("transport document has no `joint`".into()))?
            .to_table(&vars)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosureDoc {
    pub stakeholder: usize,
    #[serde(default)]
    pub candidates: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revealed: Option<TableSpec>,
    /// `π(y_k | x_k)`; absent means the stakeholder acts on `x_k` directly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<TableSpec>,
}

/// Input of context selection and outcome prediction. Selection only reads
/// `disclosures[].candidates`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyDoc {
    #[serde(default)]
    pub variables: Vec<VariableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanism: Option<TableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<TableSpec>,
    pub disclosures: Vec<DisclosureDoc>,
}

impl PrivacyDoc {
    pub fn disclosures(&self) -> Result<Vec<StakeholderDisclosure>> {
        let vars = variables(&self.variables)?;
        self.disclosures
            .iter()
            .map(|d| {
                let candidates = d.candidates.iter().map(|(c, &h)| (c.clone(), InfoQuantity::from_bits(h))).collect();
                let mut s = StakeholderDisclosure::new(d.stakeholder, candidates)?;
                if let Some(t) = &d.revealed {
                    s = s.reveal(t.to_table(&vars)?);
                }
                Ok(s)
            })
            .collect()
    }

    pub fn policies(&self) -> Result<Vec<Option<Policy>>> {
        let vars = variables(&self.variables)?;
        self.disclosures
            .iter()
            .map(|d| d.policy.as_ref().map(|p| Policy::new(p.to_table(&vars)?)).transpose())
            .collect()
    }

    pub fn mechanism(&self) -> Result<Table> {
        let vars = variables(&self.variables)?;
        self.mechanism
            .as_ref()
            .ok_or_else(|| Error::Parse("privacy document has no `mechanism`".into()))?
            .to_table(&vars)
    }

    pub fn prior(&self) -> Result<Table> {
        let vars = variables(&self.variables)?;
        self.prior
            .as_ref()
            .ok_or_else(|| Error::Parse("privacy document has no `prior`".into()))?
            .to_table(&vars)
    }
}
