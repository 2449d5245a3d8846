//! Two-client spot-market toy: shared context `C`, hidden confounder `D`,
//! demands `X_k = C xor D xor N_k`, purchases `Y_k = X_k`, provider outcome
//! `Z = Y_1 and Y_2`.

use crate::error::{Error, Result};
use crate::model::{FunctionalModel, ModelBuilder};
use crate::table::Table;
use crate::transport::{inputs_from_joint, TransportInputs};
use crate::variable::Variable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuctionParams {
    /// Confounder strength, in `[0, 0.5]`.
    pub r: f64,
    pub n: usize,
    pub seed: u64,
}

impl AuctionParams {
    pub fn new(r: f64, n: usize, seed: u64) -> Result<Self> {
        check_r(r)?;
        if n == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        Ok(AuctionParams { r, n, seed })
    }
}

fn check_r(r: f64) -> Result<()> {
    if (0.0..=0.5).contains(&r) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("r = {r} outside [0, 0.5]")))
    }
}

fn bernoulli(name: &str, p: f64) -> Result<Table> {
    Table::joint(vec![Variable::binary(name)], vec![1.0 - p, p])
}

/// `C ~ Bernoulli(0.5 - r)`, `D ~ Bernoulli(r)`, `N_k ~ Bernoulli(0.2 - 0.2 r)`.
/// `C` and `D` are observed roots; `N_1`, `N_2` are the background variables.
pub fn gen_auction_model(r: f64) -> Result<FunctionalModel> {
    check_r(r)?;
    let bin = |n: &str| Variable::binary(n);
    let mut b = ModelBuilder::default();
    b.add(bernoulli("C", 0.5 - r)?);
    b.add(bernoulli("D", r)?);
    for k in 1..=2 {
        b.add(bernoulli(&format!("N_{k}"), 0.2 - 0.2 * r)?);
        b.add(Table::deterministic(
            bin(&format!("X_{k}")),
            vec![bin("C"), bin("D"), bin(&format!("N_{k}"))],
            |g| g[0] ^ g[1] ^ g[2],
        )?);
        b.add(Table::deterministic(bin(&format!("Y_{k}")), vec![bin(&format!("X_{k}"))], |g| g[0])?);
    }
    b.add(Table::deterministic(bin("Z"), vec![bin("Y_1"), bin("Y_2")], |g| g[0] & g[1])?);
    FunctionalModel::new(b.build()?, ["N_1", "N_2"])
}

/// Names in the order used for the validation joint: outcome, demands,
/// context.
pub const TRANSPORT_NAMES: [&str; 4] = ["Z", "X_1", "X_2", "C"];

/// Exact joint over `(Z, X_1, X_2, C)` and the transport pieces read off it.
pub fn auction_transport(f: &FunctionalModel) -> Result<(Table, TransportInputs)> {
    let joint = f.base().joint()?.marginal(&TRANSPORT_NAMES)?;
    let t = inputs_from_joint(&joint, &["Z"], None, &["X_1", "X_2"], &["C"])?;
    Ok((joint, t))
}
