//! Confounder-strength sweep over the auction toy: how far the transported
//! prediction drifts from the truth, next to its entropy bound.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::harness::auction::{auction_transport, gen_auction_model, TRANSPORT_NAMES};
use crate::info::kl_divergence;
use crate::transport::{approx_transport, inputs_from_joint, transport_bound, transport_certificate, TransportInputs};

pub const SWEEP_HEADER: [&str; 9] = [
    "r",
    "p_true",
    "p_bar",
    "kl_bits",
    "bound_bits",
    "p_true_emp",
    "p_bar_emp",
    "kl_bits_emp",
    "bound_bits_emp",
];

pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub p_true: f64,
    pub p_bar: f64,
    pub kl_bits: f64,
    pub bound_bits: f64,
    pub p_true_emp: f64,
    pub p_bar_emp: f64,
    pub kl_bits_emp: f64,
    pub bound_bits_emp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub seed: u64,
    pub n: usize,
    pub rows: Vec<SweepRow>,
}

/// `r = 0.00, 0.01, .., 0.50`.
pub fn default_grid() -> Vec<f64> {
    grid(0.01)
}

/// `0, step, 2 step, ..` up to `0.5` inclusive.
pub fn grid(step: f64) -> Vec<f64> {
    let n = (0.5 / step + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

fn sweep_point(r: f64, n: usize, seed: u64) -> Result<SweepRow> {
    let f = gen_auction_model(r)?;
    let (joint, t) = auction_transport(&f)?;
    let exact = transport_certificate(&joint, &t, false)?;

    // Empirical pieces next to the known mechanism p(z | x_1, x_2).
    let data = f.base().sample(n, seed)?.project(&TRANSPORT_NAMES)?;
    let emp = data.empirical_joint(&TRANSPORT_NAMES)?;
    let pieces = inputs_from_joint(&emp, &["Z"], None, &["X_1", "X_2"], &["C"])?;
    let t_emp = TransportInputs::new(
        t.mechanism().clone(),
        None,
        pieces.clients().to_vec(),
        pieces.context().clone(),
    )?;
    let p_true_emp = emp.marginal(&["Z"])?;
    let p_bar_emp = approx_transport(&t_emp)?;

    Ok(SweepRow {
        r,
        p_true: exact.p_true[1],
        p_bar: exact.p_bar[1],
        kl_bits: exact.certificate.divergence.bits(),
        bound_bits: exact.certificate.bound.bits(),
        p_true_emp: p_true_emp.values()[1],
        p_bar_emp: p_bar_emp.values()[1],
        kl_bits_emp: kl_divergence(&p_true_emp, &p_bar_emp)?.bits(),
        bound_bits_emp: transport_bound(&t_emp, false)?.bits(),
    })
}

/// One row per grid point; point `i` samples with seed `seed ^ i`.
pub fn run_privacy_sweep(grid: &[f64], n: usize, seed: u64) -> Result<SweepResult> {
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &r)| sweep_point(r, n, seed ^ i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { seed, n, rows })
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_HEADER)?;
        for row in &self.rows {
            let r = format!("{:.2}", row.r);
            let rest = [
                row.p_true,
                row.p_bar,
                row.kl_bits,
                row.bound_bits,
                row.p_true_emp,
                row.p_bar_emp,
                row.kl_bits_emp,
                row.bound_bits_emp,
            ]
            .map(|v| v.to_string());
            w.write_record(std::iter::once(r).chain(rest))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    /// Sidecar header recording how the sweep was produced.
    pub fn meta_json(&self) -> String {
        let grid: Vec<f64> = self.rows.iter().map(|r| r.r).collect();
        serde_json::json!({ "seed": self.seed, "n": self.n, "grid": grid }).to_string()
    }
}
