//! Information measures over discrete tables, in bits.
//!
//! Conventions: `0 log 0 = 0` and `0 log (0/q) = 0`. A KL term with `p > 0`
//! and `q = 0` is reported as [`Error::AbsoluteContinuity`] rather than
//! returning infinity.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::table::Table;

/// Numerical slack below zero tolerated for KL and mutual information before
/// clamping.
pub const NONNEGATIVE_SLACK: f64 = 1e-12;

/// An information quantity in bits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
pub struct InfoQuantity {
    bits: f64,
}

impl InfoQuantity {
    pub const ZERO: InfoQuantity = InfoQuantity { bits: 0.0 };

    pub fn from_bits(bits: f64) -> Self {
        InfoQuantity { bits }
    }

    pub fn bits(self) -> f64 {
        self.bits
    }

    pub fn nats(self) -> f64 {
        self.bits * std::f64::consts::LN_2
    }
}

impl std::ops::Add for InfoQuantity {
    type Output = InfoQuantity;
    fn add(self, rhs: Self) -> Self {
        InfoQuantity::from_bits(self.bits + rhs.bits)
    }
}

impl std::ops::Sub for InfoQuantity {
    type Output = InfoQuantity;
    fn sub(self, rhs: Self) -> Self {
        InfoQuantity::from_bits(self.bits - rhs.bits)
    }
}

impl std::iter::Sum for InfoQuantity {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(InfoQuantity::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for InfoQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} bits", self.bits)
    }
}

fn plogp_sum(values: &[f64]) -> f64 {
    -values
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Shannon entropy of a joint table.
pub fn entropy(p: &Table) -> Result<InfoQuantity> {
    if !p.is_joint() {
        return Err(Error::Shape("entropy requires a joint table".into()));
    }
    Ok(InfoQuantity::from_bits(plogp_sum(p.values()).max(0.0)))
}

fn disjoint(a: &[&str], b: &[&str]) -> Result<()> {
    match a.iter().find(|x| b.contains(x)) {
        Some(x) => Err(Error::OverlappingSets(x.to_string())),
        None => Ok(()),
    }
}

fn joint_entropy(joint: &Table, names: &[&str]) -> Result<f64> {
    if names.is_empty() {
        return Ok(0.0);
    }
    Ok(entropy(&joint.marginal(names)?)?.bits())
}

/// `H(targets | given) = H(targets, given) - H(given)` on a joint table.
pub fn conditional_entropy(joint: &Table, targets: &[&str], given: &[&str]) -> Result<InfoQuantity> {
    disjoint(targets, given)?;
    let all: Vec<&str> = targets.iter().chain(given).copied().collect();
    let h = joint_entropy(joint, &all)? - joint_entropy(joint, given)?;
    Ok(InfoQuantity::from_bits(h.max(0.0)))
}

/// `H(Y | X)` for a conditional table `p(y | x)` weighted by a prior `p(x)`
/// over exactly the table's given variables.
pub fn expected_row_entropy(cond: &Table, prior: &Table) -> Result<InfoQuantity> {
    if cond.given() != prior.scope() || !prior.is_joint() {
        return Err(Error::ScopeMismatch(
            "prior must be a joint table over the conditional's given variables".into(),
        ));
    }
    let h = cond
        .rows()
        .zip(prior.values())
        .filter(|(_, &w)| w > 0.0)
        .map(|(row, &w)| w * plogp_sum(row))
        .sum::<f64>();
    Ok(InfoQuantity::from_bits(h.max(0.0)))
}

/// `D(p || q)` for two tables with identical scope and state ordering. For
/// conditional tables this is the sum of row divergences.
pub fn kl_divergence(p: &Table, q: &Table) -> Result<InfoQuantity> {
    p.same_layout(q)?;
    let mut d = 0.0;
    for (&a, &b) in p.values().iter().zip(q.values()) {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::AbsoluteContinuity { p: a });
            }
            d += a * (a / b).log2();
        }
    }
    if d < -NONNEGATIVE_SLACK {
        return Err(Error::Shape(format!("negative divergence {d}")));
    }
    Ok(InfoQuantity::from_bits(d.max(0.0)))
}

/// `I(A : B | C) = H(A | C) - H(A | B, C)`.
pub fn mutual_information(joint: &Table, a: &[&str], b: &[&str], given: &[&str]) -> Result<InfoQuantity> {
    disjoint(a, b)?;
    disjoint(a, given)?;
    disjoint(b, given)?;
    let bc: Vec<&str> = b.iter().chain(given).copied().collect();
    let i = conditional_entropy(joint, a, given)?.bits() - conditional_entropy(joint, a, &bc)?.bits();
    Ok(InfoQuantity::from_bits(i.max(0.0)))
}

/// Nearest-rank percentile: the `ceil(q n / 100)`-th smallest sample.
pub fn percentile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("percentile of no samples"));
    }
    if !(q > 0.0 && q <= 100.0) {
        return Err(Error::InvalidParameter(format!("percentile {q} not in (0, 100]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64) / 100.0).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Percentile of a distribution over an ordered single-variable domain: the
/// smallest state whose cumulative mass reaches `q / 100`. This is the
/// infinite-sample limit of [`percentile`].
pub fn distribution_percentile(dist: &Table, q: f64) -> Result<usize> {
    if !dist.is_joint() || dist.scope().len() != 1 {
        return Err(Error::Shape("percentile needs a single-variable distribution".into()));
    }
    if !(q > 0.0 && q <= 100.0) {
        return Err(Error::InvalidParameter(format!("percentile {q} not in (0, 100]")));
    }
    let target = q / 100.0 - 1e-12;
    let mut acc = 0.0;
    for (i, p) in dist.values().iter().enumerate() {
        acc += p;
        if acc >= target {
            return Ok(i);
        }
    }
    Ok(dist.values().len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variable::Variable;

    fn bern(name: &str, p1: f64) -> Table {
        Table::joint(vec![Variable::binary(name)], vec![1.0 - p1, p1]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&bern("A", 0.5)).unwrap().bits(), 1.0);
        assert_eq!(entropy(&bern("A", 0.0)).unwrap().bits(), 0.0);
        // -0.2 log2 0.2 - 0.8 log2 0.8
        assert!((entropy(&bern("A", 0.2)).unwrap().bits() - 0.721_928_094_887_362_3).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        let p = bern("A", 0.41);
        assert_eq!(kl_divergence(&p, &p).unwrap().bits(), 0.0);
        let d = kl_divergence(&p, &bern("A", 0.25)).unwrap().bits();
        assert!((d - 0.088_371_655_816_693_73).abs() < 1e-12);
        let d = kl_divergence(&bern("A", 0.0), &bern("A", 0.1)).unwrap().bits();
        assert!((d - (1.0f64 / 0.9).log2()).abs() < 1e-12);
        assert!((d - 0.152_00).abs() < 1e-5);
    }

    #[test]
    fn kl_absolute_continuity_is_an_error() {
        let err = kl_divergence(&bern("A", 0.5), &bern("A", 0.0)).unwrap_err();
        assert!(matches!(err, Error::AbsoluteContinuity { .. }));
    }

    #[test]
    fn kl_scope_mismatch() {
        assert!(kl_divergence(&bern("A", 0.5), &bern("B", 0.5)).is_err());
    }

    #[test]
    fn conditional_entropy_examples() {
        let a = Variable::binary("A");
        let b = Variable::binary("B");
        let copy = Table::joint(vec![a.clone(), b.clone()], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(conditional_entropy(&copy, &["B"], &["A"]).unwrap().bits(), 0.0);
        let indep = Table::joint(vec![a, b], vec![0.25; 4]).unwrap();
        assert!((conditional_entropy(&indep, &["B"], &["A"]).unwrap().bits() - 1.0).abs() < 1e-12);
        assert!(conditional_entropy(&indep, &["A"], &["A"]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let a = Variable::binary("A");
        let b = Variable::binary("B");
        let copy = Table::joint(vec![a.clone(), b.clone()], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((mutual_information(&copy, &["A"], &["B"], &[]).unwrap().bits() - 1.0).abs() < 1e-12);
        let indep = Table::joint(vec![a, b], vec![0.06, 0.14, 0.24, 0.56]).unwrap();
        assert!(mutual_information(&indep, &["A"], &["B"], &[]).unwrap().bits() < 1e-12);
        assert!(mutual_information(&indep, &["A"], &["A"], &[]).is_err());
    }

    #[test]
    fn percentile_examples() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&xs, 99.0).unwrap(), 99.0);
        assert_eq!(percentile(&[7.5], 1.0).unwrap(), 7.5);
        assert_eq!(percentile(&[7.5], 100.0).unwrap(), 7.5);
        assert_eq!(percentile(&[30.0, 10.0, 20.0], 50.0).unwrap(), 20.0);
        assert!(percentile(&[], 50.0).is_err());
        assert!(percentile(&[1.0], 0.0).is_err());
    }

    #[test]
    fn distribution_percentile_matches_cdf() {
        let d = Table::joint(vec![Variable::indexed("L", 4).unwrap()], vec![0.5, 0.3, 0.19, 0.01]).unwrap();
        assert_eq!(distribution_percentile(&d, 50.0).unwrap(), 0);
        assert_eq!(distribution_percentile(&d, 80.0).unwrap(), 1);
        assert_eq!(distribution_percentile(&d, 99.0).unwrap(), 2);
        assert_eq!(distribution_percentile(&d, 100.0).unwrap(), 3);
    }
}
