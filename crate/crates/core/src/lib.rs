//! Discrete causal models for cloud-computing decisions: exact inference,
//! interventions, counterfactuals with information-theoretic error
//! certificates, and the integration of knowledge held by several parties.

pub mod certificate;
pub mod counterfactual;
pub mod error;
pub mod graph;
pub mod harness;
pub mod info;
pub mod model;
pub mod pipeline;
pub mod table;
pub mod transport;
pub mod variable;

pub use certificate::Certificate;
pub use error::{Error, Result};
pub use graph::{Dag, NodeSet};
pub use info::InfoQuantity;
pub use model::{CausalModel, Dataset, FunctionalModel, ModelBuilder, PartialModel, Provenance};
pub use table::Table;
pub use variable::{Assignment, Variable};
