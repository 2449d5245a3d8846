//! Probability tables over ordered variable tuples.
//!
//! A [`Table`] is either a joint table (empty `given`) or a conditional table
//! `p(scope | given)`. Entries are stored row-major: one row per assignment of
//! `given` (first variable most significant), each row laid out over the
//! assignments of `scope` in the same order. Every row sums to one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::variable::{for_each_index, Assignment, Variable};

/// Row-sum tolerance: rows closer than this to one are renormalized, rows
/// further away are rejected.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    scope: Vec<Variable>,
    given: Vec<Variable>,
    values: Vec<f64>,
}

pub(crate) fn cardinalities(vars: &[Variable]) -> Vec<usize> {
    vars.iter().map(Variable::cardinality).collect()
}

pub(crate) fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cards[i + 1];
    }
    s
}

pub(crate) fn space_size(vars: &[Variable]) -> usize {
    vars.iter().map(Variable::cardinality).product()
}

fn check_disjoint(scope: &[Variable], given: &[Variable]) -> Result<()> {
    let all: Vec<&Variable> = scope.iter().chain(given).collect();
    for (i, v) in all.iter().enumerate() {
        if all[..i].iter().any(|w| w.name() == v.name()) {
            return Err(Error::OverlappingSets(v.name().to_string()));
        }
    }
    Ok(())
}

impl Table {
    /// Conditional table `p(scope | given)`; rows are validated against the
    /// normalization tolerance.
    pub fn conditional(scope: Vec<Variable>, given: Vec<Variable>, values: Vec<f64>) -> Result<Self> {
        check_disjoint(&scope, &given)?;
        if scope.is_empty() {
            return Err(Error::Shape("table scope is empty".into()));
        }
        let expected = space_size(&scope) * space_size(&given);
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} entries, got {}",
                values.len()
            )));
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0 + NORMALIZATION_TOLERANCE).contains(&value) {
                return Err(Error::OutOfUnitRange { index, value });
            }
        }
        let mut t = Table { scope, given, values };
        let width = t.scope_size();
        for (row, chunk) in t.values.chunks_mut(width).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::Normalization { row, sum });
            }
            chunk.iter_mut().for_each(|v| *v = (*v / sum).min(1.0));
        }
        Ok(t)
    }

    pub fn joint(scope: Vec<Variable>, values: Vec<f64>) -> Result<Self> {
        Self::conditional(scope, Vec::new(), values)
    }

    /// Build a table by normalizing nonnegative weights row by row. A row of
    /// all zeros is an error.
    pub fn from_weights(scope: Vec<Variable>, given: Vec<Variable>, weights: Vec<f64>) -> Result<Self> {
        let width = space_size(&scope);
        if width == 0 || !weights.len().is_multiple_of(width) {
            return Err(Error::Shape("weight vector does not match scope".into()));
        }
        let mut values = weights;
        for (row, chunk) in values.chunks_mut(width).enumerate() {
            if chunk.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::Shape(format!("row {row} has a negative or non-finite weight")));
            }
            let sum: f64 = chunk.iter().sum();
            if sum <= 0.0 {
                return Err(Error::ZeroProbabilityEvidence(format!("row {row} has no mass")));
            }
            chunk.iter_mut().for_each(|v| *v /= sum);
        }
        Self::conditional(scope, given, values)
    }

    pub fn uniform(scope: Vec<Variable>, given: Vec<Variable>) -> Result<Self> {
        let width = space_size(&scope);
        let n = width * space_size(&given);
        Self::conditional(scope, given, vec![1.0 / width as f64; n])
    }

    /// Deterministic conditional `p(x | g) = [x = f(g)]`.
    pub fn deterministic<F>(var: Variable, given: Vec<Variable>, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> usize,
    {
        let width = var.cardinality();
        let mut values = vec![0.0; width * space_size(&given)];
        let mut row = 0;
        let mut bad = None;
        for_each_index(&cardinalities(&given), |g| {
            let x = f(g);
            if x < width {
                values[row * width + x] = 1.0;
            } else {
                bad.get_or_insert(x);
            }
            row += 1;
        });
        if let Some(index) = bad {
            return Err(Error::StateOutOfRange { variable: var.name().to_string(), index, cardinality: width });
        }
        Self::conditional(vec![var], given, values)
    }

    pub fn point_mass(var: Variable, state: usize) -> Result<Self> {
        var.check_index(state)?;
        let mut values = vec![0.0; var.cardinality()];
        values[state] = 1.0;
        Self::joint(vec![var], values)
    }

    pub fn scope(&self) -> &[Variable] {
        &self.scope
    }

    pub fn given(&self) -> &[Variable] {
        &self.given
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_joint(&self) -> bool {
        self.given.is_empty()
    }

    pub fn scope_size(&self) -> usize {
        space_size(&self.scope)
    }

    pub fn given_size(&self) -> usize {
        space_size(&self.given)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.scope_size())
    }

    pub fn row(&self, given_index: usize) -> &[f64] {
        let w = self.scope_size();
        &self.values[given_index * w..(given_index + 1) * w]
    }

    pub fn scope_names(&self) -> Vec<&str> {
        self.scope.iter().map(Variable::name).collect()
    }

    pub fn given_names(&self) -> Vec<&str> {
        self.given.iter().map(Variable::name).collect()
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.scope.iter().chain(&self.given).find(|v| v.name() == name)
    }

    fn scope_position(&self, name: &str) -> Result<usize> {
        self.scope
            .iter()
            .position(|v| v.name() == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Flat index of (scope states, given states).
    pub fn index_of(&self, scope_states: &[usize], given_states: &[usize]) -> usize {
        let s = flat(&cardinalities(&self.scope), scope_states);
        let g = flat(&cardinalities(&self.given), given_states);
        g * self.scope_size() + s
    }

    pub fn prob(&self, scope_states: &[usize], given_states: &[usize]) -> f64 {
        self.values[self.index_of(scope_states, given_states)]
    }

    /// Entry for an assignment binding every scope and given variable.
    pub fn get(&self, a: &Assignment) -> Result<f64> {
        let lookup = |vars: &[Variable]| -> Result<Vec<usize>> {
            vars.iter()
                .map(|v| {
                    let s = a.get(v.name()).ok_or_else(|| Error::UnknownVariable(v.name().to_string()))?;
                    v.check_index(s)?;
                    Ok(s)
                })
                .collect()
        };
        Ok(self.prob(&lookup(&self.scope)?, &lookup(&self.given)?))
    }

    /// True when every entry is 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn max_abs_diff(&self, other: &Table) -> Result<f64> {
        self.same_layout(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub(crate) fn same_layout(&self, other: &Table) -> Result<()> {
        if self.scope != other.scope || self.given != other.given {
            return Err(Error::ScopeMismatch(format!(
                "({:?} | {:?}) vs ({:?} | {:?})",
                self.scope_names(),
                self.given_names(),
                other.scope_names(),
                other.given_names()
            )));
        }
        Ok(())
    }

    fn require_joint(&self) -> Result<()> {
        if self.is_joint() {
            Ok(())
        } else {
            Err(Error::Shape("operation requires a joint table".into()))
        }
    }

    /// Marginal of a joint table onto `names`, in that order.
    pub fn marginal(&self, names: &[&str]) -> Result<Table> {
        self.require_joint()?;
        let positions = names
            .iter()
            .map(|n| self.scope_position(n))
            .collect::<Result<Vec<_>>>()?;
        let vars: Vec<Variable> = positions.iter().map(|&p| self.scope[p].clone()).collect();
        check_disjoint(&vars, &[])?;
        let out_strides = strides(&cardinalities(&vars));
        let mut out = vec![0.0; space_size(&vars)];
        let mut flat_index = 0;
        for_each_index(&cardinalities(&self.scope), |idx| {
            let o: usize = positions.iter().zip(&out_strides).map(|(&p, &s)| idx[p] * s).sum();
            out[o] += self.values[flat_index];
            flat_index += 1;
        });
        if vars.is_empty() {
            return Err(Error::Shape("marginal onto the empty set".into()));
        }
        Table::from_weights(vars, Vec::new(), out)
    }

    /// Restrict a joint table to cells consistent with `evidence`; returns the
    /// renormalized table over the same scope and the evidence probability.
    /// Evidence variables outside the scope are an error.
    pub fn condition(&self, evidence: &Assignment) -> Result<(Table, f64)> {
        self.require_joint()?;
        let mut checks = Vec::new();
        for (name, state) in evidence.iter() {
            let p = self.scope_position(name)?;
            self.scope[p].check_index(state)?;
            checks.push((p, state));
        }
        let mut out = self.values.clone();
        let mut mass = 0.0;
        let mut flat_index = 0;
        for_each_index(&cardinalities(&self.scope), |idx| {
            if checks.iter().all(|&(p, s)| idx[p] == s) {
                mass += out[flat_index];
            } else {
                out[flat_index] = 0.0;
            }
            flat_index += 1;
        });
        if mass <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence(evidence.to_string()));
        }
        out.iter_mut().for_each(|v| *v /= mass);
        Ok((Table { scope: self.scope.clone(), given: Vec::new(), values: out }, mass))
    }

    /// Probability of the (partial) assignment under a joint table.
    pub fn mass(&self, evidence: &Assignment) -> Result<f64> {
        self.require_joint()?;
        let mut checks = Vec::new();
        for (name, state) in evidence.iter() {
            let p = self.scope_position(name)?;
            self.scope[p].check_index(state)?;
            checks.push((p, state));
        }
        let mut mass = 0.0;
        let mut flat_index = 0;
        for_each_index(&cardinalities(&self.scope), |idx| {
            if checks.iter().all(|&(p, s)| idx[p] == s) {
                mass += self.values[flat_index];
            }
            flat_index += 1;
        });
        Ok(mass)
    }

    /// Conditional `p(targets | given)` derived from a joint table. Given
    /// configurations with zero mass get a uniform row, so the result is
    /// always a valid table; callers needing positivity must check `p(given)`.
    pub fn conditional_of(&self, targets: &[&str], given: &[&str]) -> Result<Table> {
        for t in targets {
            if given.contains(t) {
                return Err(Error::OverlappingSets(t.to_string()));
            }
        }
        let names: Vec<&str> = given.iter().chain(targets).copied().collect();
        let m = self.marginal(&names)?;
        let split = given.len();
        let given_vars = m.scope[..split].to_vec();
        let scope_vars = m.scope[split..].to_vec();
        let width = space_size(&scope_vars);
        let mut values = m.values;
        for chunk in values.chunks_mut(width) {
            let sum: f64 = chunk.iter().sum();
            if sum > 0.0 {
                chunk.iter_mut().for_each(|v| *v /= sum);
            } else {
                chunk.iter_mut().for_each(|v| *v = 1.0 / width as f64);
            }
        }
        Table::conditional(scope_vars, given_vars, values)
    }

    pub fn view(&self) -> TableView {
        TableView {
            scope: self.scope_names().iter().map(|s| s.to_string()).collect(),
            given: self.given_names().iter().map(|s| s.to_string()).collect(),
            rows: self.rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

/// Serializable snapshot of a table for CLI output.
#[derive(Debug, Clone, Serialize)]
pub struct TableView {
    pub scope: Vec<String>,
    pub given: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn flat(cards: &[usize], states: &[usize]) -> usize {
    debug_assert_eq!(cards.len(), states.len());
    states.iter().zip(cards).fold(0, |acc, (&s, &c)| acc * c + s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin(name: &str) -> Variable {
        Variable::binary(name)
    }

    #[test]
    fn rejects_bad_rows() {
        let err = Table::joint(vec![coin("A")], vec![0.5, 0.48]).unwrap_err();
        assert!(matches!(err, Error::Normalization { .. }));
        let err = Table::joint(vec![coin("A")], vec![-0.1, 1.1]).unwrap_err();
        assert!(matches!(err, Error::OutOfUnitRange { .. }));
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let t = Table::joint(vec![coin("A")], vec![0.3, 0.7 + 5e-10]).unwrap();
        assert!((t.values().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_scope_and_given() {
        let err = Table::conditional(vec![coin("A")], vec![coin("A")], vec![0.5; 4]).unwrap_err();
        assert!(matches!(err, Error::OverlappingSets(_)));
    }

    #[test]
    fn marginal_and_conditional() {
        // p(A, B) with A fair and B = A.
        let t = Table::joint(vec![coin("A"), coin("B")], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let b = t.marginal(&["B"]).unwrap();
        assert_eq!(b.values(), &[0.5, 0.5]);
        let c = t.conditional_of(&["B"], &["A"]).unwrap();
        assert_eq!(c.row(0), &[1.0, 0.0]);
        assert_eq!(c.row(1), &[0.0, 1.0]);
        let swapped = t.marginal(&["B", "A"]).unwrap();
        assert_eq!(swapped.prob(&[1, 1], &[]), 0.5);
    }

    #[test]
    fn condition_reports_mass() {
        let t = Table::joint(vec![coin("A"), coin("B")], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let (c, m) = t.condition(&Assignment::new().with("A", 1)).unwrap();
        assert!((m - 0.7).abs() < 1e-12);
        assert!((c.prob(&[1, 1], &[]) - 0.4 / 0.7).abs() < 1e-12);
        let zero = Table::joint(vec![coin("A")], vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            zero.condition(&Assignment::new().with("A", 1)),
            Err(Error::ZeroProbabilityEvidence(_))
        ));
    }
}
