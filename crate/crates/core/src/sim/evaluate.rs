use std::io::Write;

use serde::{Deserialize, Serialize};

use super::policy::Policy;
use super::state::SimState;
use crate::error::{Error, Result};
use crate::model::ProductParams;
use crate::rand_dist::{Domain, RngStream};
use crate::stats::{mean_ci95, std_error};

/// Monte-Carlo settings shared by every column of an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub replications: u32,
    /// Periods recorded per replication.
    pub horizon: u32,
    /// Periods discarded per replication before recording.
    pub warmup: u32,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { replications: 10, horizon: 9500, warmup: 5000, seed: 1 }
    }
}

impl SimConfig {
    /// Small configuration for quick runs.
    pub fn desk(seed: u64) -> Self {
        Self { replications: 5, horizon: 2000, warmup: 1000, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::param("replications", "need at least 2 replications for a CI"));
        }
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be > 0"));
        }
        Ok(())
    }

    pub fn periods(&self) -> usize {
        (self.warmup + self.horizon) as usize
    }
}

/// Largest relative 95% CI half-width accepted without flagging.
pub const MAX_CI_REL: f64 = 0.03;

/// Long-run rates of one (product, policy) pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    /// Holding + backlog + shipping cost per period.
    pub cost_rate: f64,
    /// Holding + backlog part of `cost_rate`.
    pub inventory_cost_rate: f64,
    /// kg CO₂ per period.
    pub emission_rate: f64,
    pub eq_fast: f64,
    pub eq_slow: f64,
    pub e_overshoot: f64,
    /// 95% CI half-width of `cost_rate` relative to the point estimate; zero
    /// for exact evaluations.
    pub ci_halfwidth_rel: f64,
    pub replications: u32,
    pub se_eq_fast: f64,
    pub se_eq_slow: f64,
    pub se_overshoot: f64,
    /// Realized mean demand over the recorded periods.
    pub demand_rate: f64,
}

impl ColumnStats {
    /// False when the CI exceeds [`MAX_CI_REL`]; callers may extend the run.
    pub fn is_precise(&self) -> bool {
        self.ci_halfwidth_rel <= MAX_CI_REL
    }

    /// Absolute 95% CI half-width of the cost rate.
    pub fn ci_halfwidth(&self) -> f64 {
        self.ci_halfwidth_rel * self.cost_rate.abs()
    }
}

/// Demand draws of one replication; shared by every policy evaluated for the
/// product (common random numbers).
pub fn demand_path(product: &ProductParams, cfg: &SimConfig, replication: u32) -> Result<Vec<i64>> {
    let sampler = product.demand.sampler()?;
    let mut rng = RngStream::derive(cfg.seed, Domain::Demand, product.id as u64, u64::from(replication)).rng();
    Ok((0..cfg.periods()).map(|_| sampler.sample_count(&mut rng)).collect())
}

#[derive(Default)]
struct Tally {
    cost: f64,
    inventory_cost: f64,
    q_fast: f64,
    q_slow: f64,
    overshoot: f64,
    demand: f64,
}

/// Simulates `policy` over independent replications and reports
/// warm-up-truncated averages.
pub fn evaluate(policy: &Policy, product: &ProductParams, cfg: &SimConfig) -> Result<ColumnStats> {
    policy.validate()?;
    product.validate()?;
    cfg.validate()?;
    let horizon = f64::from(cfg.horizon);
    let reps: Vec<Tally> = (0..cfg.replications)
        .map(|rep| {
            let demands = demand_path(product, cfg, rep)?;
            let mut state = SimState::new(product, policy);
            let mut tally = Tally::default();
            for (t, &d) in demands.iter().enumerate() {
                let o = state.step(product, policy, d);
                if t >= cfg.warmup as usize {
                    tally.cost += o.total_cost();
                    tally.inventory_cost += o.holding_cost + o.backlog_cost;
                    tally.q_fast += o.q_fast as f64;
                    tally.q_slow += o.q_slow as f64;
                    tally.overshoot += o.overshoot as f64;
                    tally.demand += d as f64;
                }
            }
            Ok(tally)
        })
        .collect::<Result<_>>()?;

    let per = |f: fn(&Tally) -> f64| -> Vec<f64> { reps.iter().map(|r| f(r) / horizon).collect() };
    let cost = per(|r| r.cost);
    let inv = per(|r| r.inventory_cost);
    let qf = per(|r| r.q_fast);
    let qs = per(|r| r.q_slow);
    let ov = per(|r| r.overshoot);
    let dem = per(|r| r.demand);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;

    let (cost_rate, hw) = mean_ci95(&cost);
    let (eq_fast, eq_slow, e_overshoot) = (mean(&qf), mean(&qs), mean(&ov));
    Ok(ColumnStats {
        cost_rate,
        inventory_cost_rate: mean(&inv),
        emission_rate: product.emission_fast * eq_fast + product.emission_slow * eq_slow,
        eq_fast,
        eq_slow,
        e_overshoot,
        ci_halfwidth_rel: if cost_rate != 0.0 { hw / cost_rate.abs() } else { 0.0 },
        replications: cfg.replications,
        se_eq_fast: std_error(&qf, eq_fast),
        se_eq_slow: std_error(&qs, eq_slow),
        se_overshoot: std_error(&ov, e_overshoot),
        demand_rate: mean(&dem),
    })
}

/// One row of a per-period trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    #[serde(rename = "D")]
    pub demand: i64,
    #[serde(rename = "Q_f")]
    pub q_fast: i64,
    #[serde(rename = "Q_s")]
    pub q_slow: i64,
    #[serde(rename = "O")]
    pub overshoot: i64,
    #[serde(rename = "I")]
    pub net_inventory: i64,
}

/// Runs `policy` against the given demand sequence.
pub fn trace(policy: &Policy, product: &ProductParams, demands: &[i64]) -> Result<Vec<TraceRow>> {
    policy.validate()?;
    let mut state = SimState::new(product, policy);
    Ok(demands
        .iter()
        .enumerate()
        .map(|(t, &d)| {
            let o = state.step(product, policy, d);
            TraceRow {
                t: t as u64,
                demand: d,
                q_fast: o.q_fast,
                q_slow: o.q_slow,
                overshoot: o.overshoot,
                net_inventory: o.net_inventory,
            }
        })
        .collect())
}

/// Writes a trace as CSV with header `t,D,Q_f,Q_s,O,I`.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
