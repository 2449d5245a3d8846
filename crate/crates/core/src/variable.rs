//! Finite-domain variables and assignments of state indices to them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named discrete variable with an ordered list of state labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variable {
    name: String,
    states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: S, states: Vec<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidVariable(name, "empty name".into()));
        }
        if states.is_empty() {
            return Err(Error::InvalidVariable(name, "no states".into()));
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(Error::Duplicate {
                    kind: "state",
                    name: format!("{name}.{s}"),
                });
            }
        }
        Ok(Variable { name, states })
    }

    /// Variable with states labelled `0..cardinality`.
    pub fn indexed<S: Into<String>>(name: S, cardinality: usize) -> Result<Self> {
        Self::new(name, (0..cardinality).map(|i| i.to_string()).collect())
    }

    pub fn binary<S: Into<String>>(name: S) -> Self {
        Self::indexed(name, 2).expect("binary variable is always valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::UnknownState {
                variable: self.name.clone(),
                state: label.to_string(),
            })
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.cardinality() {
            Ok(())
        } else {
            Err(Error::StateOutOfRange {
                variable: self.name.clone(),
                index,
                cardinality: self.cardinality(),
            })
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Map from variable name to state index. Ordered so that iteration (and
/// anything serialized from it) is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment(BTreeMap<String, usize>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with<S: Into<String>>(mut self, name: S, state: usize) -> Self {
        self.0.insert(name.into(), state);
        self
    }

    pub fn insert<S: Into<String>>(&mut self, name: S, state: usize) -> Option<usize> {
        self.0.insert(name.into(), state)
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Merge `other` into `self`; a variable bound to two different states
    /// is an error.
    pub fn merged(&self, other: &Assignment) -> Result<Assignment> {
        let mut out = self.clone();
        for (name, state) in other.iter() {
            match out.0.insert(name.to_string(), state) {
                Some(prev) if prev != state => {
                    return Err(Error::ZeroProbabilityEvidence(format!(
                        "`{name}` bound to both {prev} and {state}"
                    )))
                }
                _ => {}
            }
        }
        Ok(out)
    }

    /// Restriction to the given variable names (missing names are skipped).
    pub fn restrict<'a, I: IntoIterator<Item = &'a str>>(&self, names: I) -> Assignment {
        let mut out = Assignment::new();
        for n in names {
            if let Some(s) = self.get(n) {
                out.insert(n, s);
            }
        }
        out
    }

    pub fn without<'a, I: IntoIterator<Item = &'a str>>(&self, names: I) -> Assignment {
        let mut out = self.clone();
        for n in names {
            out.0.remove(n);
        }
        out
    }

    /// Parse `A=a,B=b` using the variables' state labels.
    pub fn parse(text: &str, variables: &[Variable]) -> Result<Assignment> {
        let mut out = Assignment::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, label) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected NAME=STATE, got `{part}`")))?;
            let var = variables
                .iter()
                .find(|v| v.name() == name.trim())
                .ok_or_else(|| Error::UnknownVariable(name.trim().to_string()))?;
            if out.insert(var.name(), var.state_index(label.trim())?).is_some() {
                return Err(Error::Duplicate {
                    kind: "binding",
                    name: var.name().to_string(),
                });
            }
        }
        Ok(out)
    }
}

impl FromIterator<(String, usize)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (String, usize)>>(iter: T) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Odometer over the joint state space of `cards`, last position fastest.
pub(crate) fn for_each_index(cards: &[usize], mut f: impl FnMut(&[usize])) {
    if cards.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; cards.len()];
    loop {
        f(&idx);
        let mut pos = cards.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < cards[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_states() {
        let err = Variable::new("X", vec!["a".into(), "a".into()]).unwrap_err();
        assert!(matches!(err, Error::Duplicate { .. }));
    }

    #[test]
    fn parse_assignment() {
        let vars = vec![Variable::binary("A"), Variable::indexed("B", 3).unwrap()];
        let a = Assignment::parse("A=1, B=2", &vars).unwrap();
        assert_eq!(a.get("A"), Some(1));
        assert_eq!(a.get("B"), Some(2));
        assert!(Assignment::parse("C=0", &vars).is_err());
        assert!(Assignment::parse("B=5", &vars).is_err());
    }

    #[test]
    fn merge_conflict_is_error() {
        let a = Assignment::new().with("X", 0);
        let b = Assignment::new().with("X", 1);
        assert!(a.merged(&b).is_err());
        assert_eq!(a.merged(&a).unwrap(), a);
    }

    #[test]
    fn odometer_order() {
        let mut seen = Vec::new();
        for_each_index(&[2, 3], |i| seen.push(i.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[1], vec![0, 1]);
        assert_eq!(seen[3], vec![1, 0]);
    }
}
