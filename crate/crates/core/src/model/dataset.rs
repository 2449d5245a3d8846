//! Seeded ancestral sampling and frequency estimation of CPTs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::model::CausalModel;
use crate::table::{space_size, Table};
use crate::variable::{Assignment, Variable};

/// Add-one smoothing keeps fitted CPTs strictly positive.
pub const DEFAULT_SMOOTHING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Observational,
    /// Rows drawn with the listed variables randomized by the experimenter.
    Interventional(NodeSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Variable>,
    rows: Vec<Vec<usize>>,
    provenance: Provenance,
    seed: u64,
}

impl Dataset {
    pub fn new(columns: Vec<Variable>, rows: Vec<Vec<usize>>, provenance: Provenance, seed: u64) -> Result<Self> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|d| d.name() == c.name()) {
                return Err(Error::Duplicate { kind: "column", name: c.name().to_string() });
            }
        }
        for row in &rows {
            if row.len() != columns.len() {
                return Err(Error::Shape(format!(
                    "row has {} cells, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            for (c, &s) in columns.iter().zip(row) {
                c.check_index(s)?;
            }
        }
        if let Provenance::Interventional(set) = &provenance {
            if let Some(missing) = set.iter().find(|n| !columns.iter().any(|c| c.name() == n.as_str())) {
                return Err(Error::UnknownVariable(missing.clone()));
            }
        }
        Ok(Dataset { columns, rows, provenance, seed })
    }

    pub fn columns(&self) -> &[Variable] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name() == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<impl Iterator<Item = usize> + '_> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(move |r| r[i]))
    }

    /// Keep only the named columns, in the given order. The intervened set is
    /// restricted to the kept columns.
    pub fn project(&self, names: &[&str]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        let provenance = match &self.provenance {
            Provenance::Observational => Provenance::Observational,
            Provenance::Interventional(s) => {
                Provenance::Interventional(s.iter().filter(|n| names.contains(&n.as_str())).cloned().collect())
            }
        };
        Dataset::new(
            idx.iter().map(|&i| self.columns[i].clone()).collect(),
            self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
            provenance,
            self.seed,
        )
    }

    /// Raw co-occurrence counts over `names`, flat in row-major order.
    pub fn counts(&self, names: &[&str]) -> Result<(Vec<Variable>, Vec<f64>)> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        let vars: Vec<Variable> = idx.iter().map(|&i| self.columns[i].clone()).collect();
        let mut counts = vec![0.0; space_size(&vars)];
        for row in &self.rows {
            let flat = idx
                .iter()
                .zip(&vars)
                .fold(0, |acc, (&i, v)| acc * v.cardinality() + row[i]);
            counts[flat] += 1.0;
        }
        Ok((vars, counts))
    }

    /// Empirical joint distribution over `names`.
    pub fn empirical_joint(&self, names: &[&str]) -> Result<Table> {
        if self.rows.is_empty() {
            return Err(Error::Empty("dataset has no rows"));
        }
        let (vars, counts) = self.counts(names)?;
        Table::from_weights(vars, Vec::new(), counts)
    }
}

fn draw(rng: &mut ChaCha8Rng, row: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

impl CausalModel {
    /// Ancestral sampling in lexicographic Kahn order with a ChaCha8 stream
    /// seeded from `seed`; one uniform draw per variable per row.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.sample_with_provenance(n, seed, Provenance::Observational)
    }

    /// Sample from a randomized experiment in which each of `randomized` is
    /// set uniformly at random, independently of everything else.
    pub fn sample_randomized(&self, randomized: &[&str], n: usize, seed: u64) -> Result<Dataset> {
        let mut m = self.clone();
        for &name in randomized {
            let v = self.variable(name)?.clone();
            let root = Table::uniform(vec![v], Vec::new())?;
            m = m.intervene(&Assignment::new().with(name, 0))?;
            let i = m.dag().idx(name)?;
            m.cpts[i] = root;
        }
        let set = randomized.iter().map(|s| s.to_string()).collect();
        m.sample_with_provenance(n, seed, Provenance::Interventional(set))
    }

    fn sample_with_provenance(&self, n: usize, seed: u64, provenance: Provenance) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        let order: Vec<usize> = self
            .dag()
            .topological_order()
            .into_iter()
            .map(|name| self.dag().idx(name).expect("node of own graph"))
            .collect();
        let parent_idx: Vec<Vec<usize>> = self
            .cpts
            .iter()
            .map(|t| t.given().iter().map(|g| self.dag().idx(g.name()).expect("validated")).collect())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = vec![0usize; self.variables.len()];
            for &v in &order {
                let cpt = &self.cpts[v];
                let g = parent_idx[v]
                    .iter()
                    .zip(cpt.given())
                    .fold(0, |acc, (&p, var)| acc * var.cardinality() + row[p]);
                row[v] = draw(&mut rng, cpt.row(g));
            }
            rows.push(row);
        }
        Dataset::new(self.variables.clone(), rows, provenance, seed)
    }
}

/// Frequency estimate of `p(x | pa)` with additive smoothing. Parent
/// configurations never observed get a uniform row.
///
/// An interventional dataset licenses reading the fit as `p(x | do pa)` only
/// when every parent was randomized, so anything less is refused.
pub fn fit_cpt(data: &Dataset, x: &str, parents: &[&str], smoothing: f64) -> Result<Table> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidParameter(format!("smoothing {smoothing} must be >= 0")));
    }
    if let Provenance::Interventional(set) = data.provenance() {
        if let Some(p) = parents.iter().find(|p| !set.contains(**p)) {
            return Err(Error::Refused(format!(
                "parent `{p}` of `{x}` was not randomized in the experiment"
            )));
        }
    }
    if parents.contains(&x) {
        return Err(Error::OverlappingSets(x.to_string()));
    }
    let names: Vec<&str> = parents.iter().copied().chain([x]).collect();
    let (vars, mut counts) = data.counts(&names)?;
    let (given, scope) = vars.split_at(parents.len());
    let width = scope[0].cardinality();
    for row in counts.chunks_mut(width) {
        row.iter_mut().for_each(|c| *c += smoothing);
        if row.iter().sum::<f64>() == 0.0 {
            row.iter_mut().for_each(|c| *c = 1.0);
        }
    }
    Table::from_weights(scope.to_vec(), given.to_vec(), counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::confounded;

    #[test]
    fn same_seed_same_rows() {
        let m = confounded();
        assert_eq!(m.sample(200, 7).unwrap(), m.sample(200, 7).unwrap());
        assert_ne!(m.sample(200, 7).unwrap().rows(), m.sample(200, 8).unwrap().rows());
    }

    #[test]
    fn point_mass_model_repeats() {
        let m = confounded()
            .intervene(&Assignment::new().with("H", 1).with("R", 0).with("S", 1).with("L", 1))
            .unwrap();
        let d = m.sample(50, 1).unwrap();
        assert!(d.rows().iter().all(|r| r == &vec![1, 0, 1, 1]));
    }

    #[test]
    fn zero_rows_rejected() {
        assert!(confounded().sample(0, 1).is_err());
    }

    #[test]
    fn fit_deterministic_copy_is_identity() {
        let [a, b] = ["A", "B"].map(Variable::binary);
        let rows = vec![vec![0, 0], vec![1, 1], vec![1, 1], vec![0, 0]];
        let d = Dataset::new(vec![a, b], rows, Provenance::Observational, 0).unwrap();
        let t = fit_cpt(&d, "B", &["A"], 0.0).unwrap();
        assert_eq!(t.values(), &[1.0, 0.0, 0.0, 1.0]);
        let smooth = fit_cpt(&d, "B", &["A"], 1e6).unwrap();
        assert!(smooth.values().iter().all(|v| (v - 0.5).abs() < 1e-5));
    }

    #[test]
    fn unseen_parent_configuration_is_uniform() {
        let [a, b] = ["A", "B"].map(Variable::binary);
        let d = Dataset::new(vec![a, b], vec![vec![0, 1]], Provenance::Observational, 0).unwrap();
        let t = fit_cpt(&d, "B", &["A"], 0.0).unwrap();
        assert_eq!(t.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn fit_refuses_unrandomized_parents() {
        let m = confounded();
        let d = m.sample_randomized(&["R"], 100, 3).unwrap();
        assert!(matches!(fit_cpt(&d, "L", &["R", "S"], 1.0), Err(Error::Refused(_))));
        let d = m.sample_randomized(&["R", "S"], 100, 3).unwrap();
        assert!(fit_cpt(&d, "L", &["R", "S"], 1.0).is_ok());
    }

    #[test]
    fn randomized_experiment_recovers_mechanism() {
        let m = confounded();
        let d = m.sample_randomized(&["R", "S"], 40_000, 11).unwrap();
        let fit = fit_cpt(&d, "L", &["R", "S"], 1.0).unwrap();
        // ~10k rows per parent cell: 4σ ≈ 0.02.
        assert!(fit.max_abs_diff(m.cpt("L").unwrap()).unwrap() < 0.02);
    }

    #[test]
    fn empirical_marginal_converges() {
        let m = confounded();
        let d = m.sample(100_000, 5).unwrap();
        let emp = d.empirical_joint(&["L"]).unwrap();
        let exact = m.query(&["L"], &Assignment::new()).unwrap();
        assert!(emp.max_abs_diff(&exact).unwrap() < 0.01);
    }
}
