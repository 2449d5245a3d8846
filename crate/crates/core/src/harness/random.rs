//! Seeded random model corpora for property and acceptance suites.

use rand::Rng;

use crate::error::Result;
use crate::model::{CausalModel, FunctionalModel, ModelBuilder};
use crate::table::{space_size, Table};
use crate::variable::{for_each_index, Assignment, Variable};

/// A probability row with strictly positive entries.
pub fn random_row<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn random_weights<R: Rng>(rng: &mut R, k: usize, zero_prob: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k)
        .map(|_| if rng.gen_bool(zero_prob) { 0.0 } else { rng.gen::<f64>().powi(2) + 1e-3 })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..k)] = 1.0;
    }
    w
}

/// Random parent sets over `n` nodes in natural order, at most `max_parents`
/// each.
fn random_parents<R: Rng>(rng: &mut R, n: usize, max_parents: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|j| {
            let mut ps: Vec<usize> = (0..j).filter(|_| rng.gen_bool(0.5)).collect();
            while ps.len() > max_parents {
                ps.remove(rng.gen_range(0..ps.len()));
            }
            ps
        })
        .collect()
}

/// Random CGM on `n` nodes named `V0..`, cardinalities in `2..=max_card`,
/// strictly positive CPTs.
pub fn random_cgm<R: Rng>(rng: &mut R, n: usize, max_card: usize) -> Result<CausalModel> {
    let vars: Vec<Variable> = (0..n)
        .map(|i| Variable::indexed(format!("V{i}"), rng.gen_range(2..=max_card.max(2))))
        .collect::<Result<_>>()?;
    let parents = random_parents(rng, n, 3);
    let mut b = ModelBuilder::default();
    for (v, ps) in vars.iter().zip(&parents) {
        let given: Vec<Variable> = ps.iter().map(|&p| vars[p].clone()).collect();
        let values = (0..space_size(&given)).flat_map(|_| random_row(rng, v.cardinality())).collect();
        b.add(Table::conditional(vec![v.clone()], given, values)?);
    }
    b.build()
}

/// Random FCM with `2..=max_observed` binary observed variables `V0..`.
/// Non-root observed variables get a background `U_Vi` of cardinality 2 or 3
/// and a random deterministic mechanism; observed roots carry a random prior.
pub fn random_fcm<R: Rng>(rng: &mut R, max_observed: usize) -> Result<FunctionalModel> {
    let n = rng.gen_range(2..=max_observed.max(2));
    let parents = random_parents(rng, n, 3);
    let vars: Vec<Variable> = (0..n).map(|i| Variable::binary(format!("V{i}"))).collect();
    let mut b = ModelBuilder::default();
    let mut background = Vec::new();
    for (i, ps) in parents.iter().enumerate() {
        let mut given: Vec<Variable> = ps.iter().map(|&p| vars[p].clone()).collect();
        if given.is_empty() {
            b.add(Table::joint(vec![vars[i].clone()], random_row(rng, 2))?);
            continue;
        }
        let u = Variable::indexed(format!("U_V{i}"), rng.gen_range(2..=3))?;
        b.add(Table::joint(vec![u.clone()], random_row(rng, u.cardinality()))?);
        background.push(u.name().to_string());
        given.push(u);
        let rows = space_size(&given);
        let choices: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..2)).collect();
        let mut k = 0;
        b.add(Table::deterministic(vars[i].clone(), given, |_| {
            k += 1;
            choices[k - 1]
        })?);
    }
    FunctionalModel::new(b.build()?, background)
}

/// A counterfactual certificate problem on a random FCM.
#[derive(Debug, Clone)]
pub struct CounterfactualCase {
    pub model: FunctionalModel,
    pub do_: Assignment,
    pub targets: Vec<String>,
    pub evidence: Vec<String>,
}

fn pick<R: Rng>(rng: &mut R, from: &[String], k: usize) -> Vec<String> {
    let mut pool = from.to_vec();
    let mut out = Vec::new();
    for _ in 0..k.min(pool.len()) {
        out.push(pool.remove(rng.gen_range(0..pool.len())));
    }
    out.sort();
    out
}

pub fn random_counterfactual_case<R: Rng>(rng: &mut R, max_observed: usize) -> Result<CounterfactualCase> {
    let model = random_fcm(rng, max_observed)?;
    let observed: Vec<String> = model.observed().into_iter().map(String::from).collect();
    let n_do = if observed.len() > 2 && rng.gen_bool(0.3) { 2 } else { 1 };
    let do_vars = pick(rng, &observed, n_do);
    let do_: Assignment = do_vars.iter().map(|v| (v.clone(), rng.gen_range(0..2))).collect();
    let rest: Vec<String> = observed.iter().filter(|v| !do_vars.contains(v)).cloned().collect();
    let n_targets = rng.gen_range(1..=rest.len().min(2));
    let targets = pick(rng, &rest, n_targets);
    let n_evidence = rng.gen_range(1..=observed.len().min(3));
    let evidence = pick(rng, &observed, n_evidence);
    Ok(CounterfactualCase { model, do_, targets, evidence })
}

/// A transport problem: joint over `(Z, X_0.., C)` built as
/// `p(c, x) p(z | x)`, so that `Z ⊥ C | X` holds by construction.
#[derive(Debug, Clone)]
pub struct TransportCase {
    pub joint: Table,
    pub provider: Option<String>,
    pub clients: Vec<String>,
}

pub fn random_transport_case<R: Rng>(rng: &mut R, max_sources: usize) -> Result<TransportCase> {
    let k = rng.gen_range(1..=max_sources.max(1));
    let xs: Vec<Variable> = (0..k).map(|i| Variable::binary(format!("X_{i}"))).collect();
    let c = Variable::indexed("C", rng.gen_range(2..=3))?;
    let z = Variable::indexed("Z", rng.gen_range(2..=3))?;
    let nx = space_size(&xs);
    let p_xc = random_weights(rng, nx * c.cardinality(), 0.1);
    let p_z: Vec<Vec<f64>> = (0..nx).map(|_| random_row(rng, z.cardinality())).collect();

    let mut scope = vec![z.clone()];
    scope.extend(xs.iter().cloned());
    scope.push(c.clone());
    let mut values = Vec::with_capacity(space_size(&scope));
    let cards: Vec<usize> = scope.iter().map(Variable::cardinality).collect();
    for_each_index(&cards, |idx| {
        let x = idx[1..=k].iter().fold(0, |acc, &s| acc * 2 + s);
        values.push(p_xc[x * c.cardinality() + idx[k + 1]] * p_z[x][idx[0]]);
    });
    let joint = Table::from_weights(scope, Vec::new(), values)?;
    let names: Vec<String> = xs.iter().map(|v| v.name().to_string()).collect();
    let (provider, clients) = if k >= 2 && rng.gen_bool(0.5) {
        (Some(names[0].clone()), names[1..].to_vec())
    } else {
        (None, names)
    };
    Ok(TransportCase { joint, provider, clients })
}
