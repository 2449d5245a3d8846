//! Small hand-built models with known closed-form answers.

use crate::error::Result;
use crate::model::{CausalModel, FunctionalModel, ModelBuilder};
use crate::table::Table;
use crate::variable::Variable;

/// `W → X → Y ← U_Y` with `W ~ Bernoulli(0.5)`, `X = W`, `Y = X xor U_Y`
/// and `U_Y ~ Bernoulli(0.1)`; `U_Y` is the only background variable.
pub fn xor_chain() -> FunctionalModel {
    build_xor_chain(0.1).expect("static model")
}

fn build_xor_chain(noise: f64) -> Result<FunctionalModel> {
    let [w, x, y, u] = ["W", "X", "Y", "U_Y"].map(Variable::binary);
    let mut b = ModelBuilder::default();
    b.add(Table::joint(vec![w.clone()], vec![0.5, 0.5])?);
    b.add(Table::deterministic(x, vec![w], |g| g[0])?);
    b.add(Table::joint(vec![u.clone()], vec![1.0 - noise, noise])?);
    b.add(Table::deterministic(y, vec![Variable::binary("X"), u], |g| g[0] ^ g[1])?);
    FunctionalModel::new(b.build()?, ["U_Y"])
}

/// The chain with a degenerate background: every observed variable is a
/// function of the root `W`, so approximate and exact counterfactuals agree.
pub fn root_determined_chain() -> FunctionalModel {
    build_xor_chain(0.0).expect("static model")
}

/// Binary confounded `H → R, H → S, (R, S) → L` with strictly positive CPTs.
pub fn confounded_latency() -> CausalModel {
    let [h, r, s, l] = ["H", "R", "S", "L"].map(Variable::binary);
    let mut b = ModelBuilder::default();
    let t = |scope: &Variable, given: &[&Variable], v: &[f64]| {
        Table::conditional(vec![scope.clone()], given.iter().map(|g| (*g).clone()).collect(), v.to_vec())
            .expect("static table")
    };
    b.add(t(&h, &[], &[0.6, 0.4]));
    b.add(t(&r, &[&h], &[0.8, 0.2, 0.3, 0.7]));
    b.add(t(&s, &[&h], &[0.9, 0.1, 0.2, 0.8]));
    b.add(t(&l, &[&r, &s], &[0.95, 0.05, 0.6, 0.4, 0.7, 0.3, 0.1, 0.9]));
    b.build().expect("static model")
}
