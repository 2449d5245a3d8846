//! Synthetic web-service latency system: hidden load `H` drives the request
//! counts `R` and `S`, which together set the latency bin `L`.
//!
//! All numeric defaults are invented for the surrogate; only the graph
//! `H → R, H → S, (R, S) → L` and the heavy tail matter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::latency_diagram;
use crate::info::distribution_percentile;
use crate::model::{fit_cpt, CausalModel, FunctionalModel, ModelBuilder, PartialModel};
use crate::pipeline::{backdoor_from_data, backdoor_predict, integrate_sandbox};
use crate::table::Table;
use crate::variable::{Assignment, Variable};

/// Percentile reported by the experiments.
pub const LATENCY_PERCENTILE: f64 = 99.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatencyParams {
    /// Cardinality of the hidden load `H`.
    pub h_levels: usize,
    pub r_levels: usize,
    pub s_levels: usize,
    /// Cardinality of the latency `L`.
    pub l_bins: usize,
    /// Bin index before request effects.
    pub base: f64,
    /// Bins added per unit of `R`.
    pub per_r: f64,
    /// Bins added per unit of `S`.
    pub per_s: f64,
    /// Half-width in bins of the symmetric three-point latency jitter.
    pub jitter: usize,
    /// Probability of the slow path.
    pub tail_weight: f64,
    /// Bins added on the slow path.
    pub tail_shift: usize,
    /// Probability that a request count ignores the load and is drawn
    /// uniformly; keeps every `(r, s)` cell reachable.
    pub spread: f64,
    /// Width of one latency bin in nanoseconds.
    pub bin_width_ns: f64,
}

impl Default for LatencyParams {
    fn default() -> Self {
        LatencyParams {
            h_levels: 8,
            r_levels: 4,
            s_levels: 4,
            l_bins: 32,
            base: 2.0,
            per_r: 2.0,
            per_s: 3.0,
            jitter: 1,
            tail_weight: 0.05,
            tail_shift: 8,
            spread: 0.2,
            bin_width_ns: 5e6,
        }
    }
}

impl LatencyParams {
    pub fn validate(&self) -> Result<()> {
        let cards = [
            ("h_levels", self.h_levels),
            ("r_levels", self.r_levels),
            ("s_levels", self.s_levels),
            ("l_bins", self.l_bins),
        ];
        if let Some((name, _)) = cards.iter().find(|(_, c)| *c == 0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive")));
        }
        for (name, v) in [("base", self.base), ("per_r", self.per_r), ("per_s", self.per_s)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} is not finite")));
            }
        }
        for (name, v) in [("tail_weight", self.tail_weight), ("spread", self.spread)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !(self.bin_width_ns > 0.0 && self.bin_width_ns.is_finite()) {
            return Err(Error::InvalidParameter("bin width must be positive".into()));
        }
        Ok(())
    }

    /// Upper edge of latency bin `b` in nanoseconds.
    pub fn latency_ns(&self, bin: usize) -> f64 {
        (bin + 1) as f64 * self.bin_width_ns
    }
}

fn clamp(v: f64, card: usize) -> usize {
    v.floor().clamp(0.0, (card - 1) as f64) as usize
}

/// Background for a request count: states `0..3` are a three-point jitter
/// around the load-driven level, states `3..` pick a level uniformly.
fn count_background(name: &str, levels: usize, spread: f64) -> Result<Table> {
    let mut w = vec![0.25 * (1.0 - spread), 0.5 * (1.0 - spread), 0.25 * (1.0 - spread)];
    w.extend(std::iter::repeat_n(spread / levels as f64, levels));
    Table::joint(vec![Variable::indexed(name, 3 + levels)?], w)
}

fn count_mechanism(name: &str, u: &str, p: &LatencyParams, levels: usize) -> Result<Table> {
    let h = Variable::indexed("H", p.h_levels)?;
    let u = Variable::indexed(u, 3 + levels)?;
    Table::deterministic(Variable::indexed(name, levels)?, vec![h, u], |g| {
        if g[1] >= 3 {
            return g[1] - 3;
        }
        let level = (g[0] * levels) as f64 / p.h_levels as f64;
        clamp(level + g[1] as f64 - 1.0, levels)
    })
}

/// FCM over `H, U_R, R, U_S, S, U_L, L`. `U_L` takes six states: a jitter
/// offset in `{-1, 0, 1}` (times `jitter`) on the normal path or on the slow
/// path shifted by `tail_shift`.
pub fn gen_latency_model(p: &LatencyParams) -> Result<FunctionalModel> {
    p.validate()?;
    let mut b = ModelBuilder::default();
    b.add(Table::uniform(vec![Variable::indexed("H", p.h_levels)?], Vec::new())?);
    b.add(count_background("U_R", p.r_levels, p.spread)?);
    b.add(count_mechanism("R", "U_R", p, p.r_levels)?);
    b.add(count_background("U_S", p.s_levels, p.spread)?);
    b.add(count_mechanism("S", "U_S", p, p.s_levels)?);
    let t = p.tail_weight;
    let ul = Variable::indexed("U_L", 6)?;
    let normal = [0.25 * (1.0 - t), 0.5 * (1.0 - t), 0.25 * (1.0 - t)];
    let slow = [0.25 * t, 0.5 * t, 0.25 * t];
    b.add(Table::joint(vec![ul.clone()], normal.iter().chain(&slow).copied().collect())?);
    let r = Variable::indexed("R", p.r_levels)?;
    let s = Variable::indexed("S", p.s_levels)?;
    b.add(Table::deterministic(Variable::indexed("L", p.l_bins)?, vec![r, s, ul], |g| {
        let offset = (g[2] % 3) as f64 - 1.0;
        let shift = if g[2] >= 3 { p.tail_shift as f64 } else { 0.0 };
        let bin = p.base + p.per_r * g[0] as f64 + p.per_s * g[1] as f64 + offset * p.jitter as f64 + shift;
        clamp(bin, p.l_bins)
    })?);
    FunctionalModel::new(b.build()?, ["U_R", "U_S", "U_L"])
}

/// Back-door experiment result for one value of `S`, in bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackdoorRow {
    pub s: usize,
    pub predicted_p99: usize,
    pub true_p99: usize,
    pub predicted_ns: f64,
    pub true_ns: f64,
}

/// Sandbox experiment result: predicted against true percentile of `p(l)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandboxResult {
    pub predicted_p99: usize,
    pub true_p99: usize,
    pub predicted_ns: f64,
    pub true_ns: f64,
    /// `predicted_ns / true_ns`.
    pub ratio: f64,
    /// `-1`, `0` or `1`: under-, exact or over-estimate.
    pub error_sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DebugExperiment {
    pub params: LatencyParams,
    pub n_obs: usize,
    pub n_int: usize,
    pub seed: u64,
    pub backdoor: Vec<BackdoorRow>,
    pub sandbox: SandboxResult,
}

fn p99(dist: &Table) -> Result<usize> {
    distribution_percentile(dist, LATENCY_PERCENTILE)
}

fn row_as_dist(t: &Table, row: usize) -> Result<Table> {
    Table::joint(t.scope().to_vec(), t.row(row).to_vec())
}

/// Exact `p(l | do s)` for every `s`, as a conditional table `p(L | S)`.
pub fn true_interventional(m: &CausalModel) -> Result<Table> {
    let s = m.variable("S")?.clone();
    let l = m.variable("L")?.clone();
    let mut values = Vec::new();
    for si in 0..s.cardinality() {
        let t = m.interventional_query(&["L"], &Assignment::new().with("S", si), &Assignment::new())?;
        values.extend_from_slice(t.values());
    }
    Table::conditional(vec![l], vec![s], values)
}

fn backdoor_rows(p: &LatencyParams, predicted: &Table, truth: &Table) -> Result<Vec<BackdoorRow>> {
    (0..truth.given_size())
        .map(|s| {
            let predicted_p99 = p99(&row_as_dist(predicted, s)?)?;
            let true_p99 = p99(&row_as_dist(truth, s)?)?;
            Ok(BackdoorRow {
                s,
                predicted_p99,
                true_p99,
                predicted_ns: p.latency_ns(predicted_p99),
                true_ns: p.latency_ns(true_p99),
            })
        })
        .collect()
}

fn sandbox_result(p: &LatencyParams, predicted: &Table, truth: &Table) -> Result<SandboxResult> {
    let (predicted_p99, true_p99) = (p99(predicted)?, p99(truth)?);
    let (predicted_ns, true_ns) = (p.latency_ns(predicted_p99), p.latency_ns(true_p99));
    Ok(SandboxResult {
        predicted_p99,
        true_p99,
        predicted_ns,
        true_ns,
        ratio: predicted_ns / true_ns,
        error_sign: predicted_p99.cmp(&true_p99) as i8,
    })
}

/// The operator's model of the production system: `R → S` factorizes the
/// observed `p(r, s)`, and `L`'s mechanism is left to the sandbox.
fn production_skeleton(cgm: &CausalModel, p_r: Table, p_s_given_r: Table) -> Result<PartialModel> {
    let vars: Vec<Variable> = ["R", "S", "L"].iter().map(|n| cgm.variable(n).cloned()).collect::<Result<_>>()?;
    let edges = [("R", "S"), ("R", "L"), ("S", "L")].map(|(a, b)| (a.to_string(), b.to_string()));
    let cpts = [("R".to_string(), p_r), ("S".to_string(), p_s_given_r)].into_iter().collect();
    PartialModel::new(vars, edges.to_vec(), cpts)
}

/// Both experiments on samples from the generator: back-door adjustment
/// over `R` from `n_obs` observational rows, and the sandbox pipeline
/// fitting `p(l | do r, s)` on `n_int` randomized rows.
pub fn run_debug_experiment(p: &LatencyParams, n_obs: usize, n_int: usize, seed: u64) -> Result<DebugExperiment> {
    let f = gen_latency_model(p)?;
    let cgm = f.induce_cgm()?;
    let dag = latency_diagram();

    let obs = f.base().sample(n_obs, seed)?.project(&["R", "S", "L"])?;
    let predicted = backdoor_from_data(&dag, &obs, "S", "L", &["R"])?;
    let backdoor = backdoor_rows(p, &predicted, &true_interventional(&cgm)?)?;

    let sandbox_data = f
        .base()
        .sample_randomized(&["R", "S"], n_int, seed.wrapping_add(1))?
        .project(&["R", "S", "L"])?;
    let skeleton = production_skeleton(&cgm, fit_cpt(&obs, "R", &[], 0.0)?, fit_cpt(&obs, "S", &["R"], 0.0)?)?;
    let completed = integrate_sandbox(&skeleton, "L", &sandbox_data, 0.0)?;
    let sandbox = sandbox_result(
        p,
        &completed.query(&["L"], &Assignment::new())?,
        &cgm.query(&["L"], &Assignment::new())?,
    )?;
    Ok(DebugExperiment { params: p.clone(), n_obs, n_int, seed, backdoor, sandbox })
}

/// Both experiments with exact tables in place of samples.
pub fn run_debug_experiment_exact(p: &LatencyParams) -> Result<DebugExperiment> {
    let cgm = gen_latency_model(p)?.induce_cgm()?;
    let joint = cgm.joint()?;
    let predicted = backdoor_predict(&latency_diagram(), &joint, "S", "L", &["R"])?;
    let backdoor = backdoor_rows(p, &predicted, &true_interventional(&cgm)?)?;

    let rs = joint.marginal(&["R", "S"])?;
    let mut skeleton = production_skeleton(&cgm, rs.marginal(&["R"])?, rs.conditional_of(&["S"], &["R"])?)?;
    skeleton.install("L", cgm.cpt("L")?.clone())?;
    let completed = skeleton.complete()?;
    let sandbox = sandbox_result(
        p,
        &completed.query(&["L"], &Assignment::new())?,
        &cgm.query(&["L"], &Assignment::new())?,
    )?;
    Ok(DebugExperiment { params: p.clone(), n_obs: 0, n_int: 0, seed: 0, backdoor, sandbox })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_mechanism_gives_constant_latency() {
        let p = LatencyParams { per_r: 0.0, per_s: 0.0, jitter: 0, tail_weight: 0.0, ..Default::default() };
        let cgm = gen_latency_model(&p).unwrap().induce_cgm().unwrap();
        let truth = true_interventional(&cgm).unwrap();
        for s in 0..p.s_levels {
            assert_eq!(truth.row(s)[2], 1.0);
        }
    }

    #[test]
    fn defaults_are_monotone_and_confounded() {
        let p = LatencyParams::default();
        let cgm = gen_latency_model(&p).unwrap().induce_cgm().unwrap();
        let truth = true_interventional(&cgm).unwrap();
        let p99s: Vec<usize> = (0..p.s_levels).map(|s| p99(&row_as_dist(&truth, s).unwrap()).unwrap()).collect();
        assert!(p99s.windows(2).all(|w| w[0] <= w[1]), "{p99s:?}");
        let observed = cgm.joint().unwrap().conditional_of(&["L"], &["S"]).unwrap();
        assert!(observed.max_abs_diff(&truth).unwrap() > 1e-3);
    }

    #[test]
    fn exact_tables_reproduce_truth() {
        let e = run_debug_experiment_exact(&LatencyParams::default()).unwrap();
        assert!(e.backdoor.iter().all(|r| r.predicted_p99 == r.true_p99));
        assert_eq!(e.sandbox.error_sign, 0);
    }

    #[test]
    fn invalid_params() {
        assert!(gen_latency_model(&LatencyParams { l_bins: 0, ..Default::default() }).is_err());
        assert!(gen_latency_model(&LatencyParams { tail_weight: 1.5, ..Default::default() }).is_err());
        assert!(gen_latency_model(&LatencyParams { base: f64::NAN, ..Default::default() }).is_err());
    }
}
