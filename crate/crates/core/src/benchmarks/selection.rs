use serde::{Deserialize, Serialize};

use super::exact::exact_single_mode;
use crate::error::{Error, Result};
use crate::master::{branch_and_bound, Item, NODE_LIMIT};
use crate::model::ShipMode;
use crate::subproblem::{Column, PricerSet};
use crate::testbed::{Instance, TargetSpec};

/// Result of a benchmark approach: one column per product.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkSolution {
    pub columns: Vec<Column>,
    pub cost: f64,
    pub emission: f64,
}

impl BenchmarkSolution {
    fn from_columns(columns: Vec<Column>) -> Self {
        let cost = columns.iter().map(|c| c.stats.cost_rate).sum();
        let emission = columns.iter().map(|c| c.stats.emission_rate).sum();
        Self { columns, cost, emission }
    }

    /// Mode of each product when every column is single-mode.
    pub fn modes(&self) -> Vec<Option<ShipMode>> {
        use crate::sim::Policy;
        self.columns
            .iter()
            .map(|c| match c.policy {
                Policy::SlowOnly { .. } => Some(ShipMode::Slow),
                Policy::FastOnly { .. } => Some(ShipMode::Fast),
                Policy::DualIndex { .. } => None,
            })
            .collect()
    }
}

/// Static mode selection: one transport mode per product, assortment-wide
/// emission cap, solved exactly as a two-item multiple-choice knapsack.
pub fn solve_sms(instance: &Instance, target: &TargetSpec) -> Result<BenchmarkSolution> {
    let columns: Vec<[Column; 2]> = instance
        .products
        .iter()
        .map(|p| {
            let col = |mode| -> Result<Column> {
                let e = exact_single_mode(p, mode)?;
                Ok(Column { product: p.id, policy: e.policy(), stats: e.to_stats(p) })
            };
            Ok([col(ShipMode::Slow)?, col(ShipMode::Fast)?])
        })
        .collect::<Result<_>>()?;
    let classes: Vec<Vec<Item<f64>>> = columns
        .iter()
        .map(|cs| cs.iter().map(|c| Item::new(c.stats.cost_rate, c.stats.emission_rate)).collect())
        .collect();
    let sol = branch_and_bound(&classes, target.e_max, NODE_LIMIT)?;
    if !sol.proven {
        return Err(Error::Precondition("static mode selection hit the node limit".into()));
    }
    Ok(BenchmarkSolution::from_columns(sol.choice.iter().zip(&columns).map(|(&k, cs)| cs[k]).collect()))
}

/// Per-product cap placed a fraction `r` of the way from the product's
/// unconstrained emissions to its minimum.
pub fn product_caps(pricers: &PricerSet, r: f64) -> Result<Vec<TargetSpec>> {
    pricers
        .pricers
        .iter()
        .map(|p| {
            TargetSpec::between(p.unconstrained().stats.emission_rate, p.least_polluting().stats.emission_rate, r)
        })
        .collect()
}

/// Blanket mode selection: each product gets its own emission cap and picks
/// its cheapest candidate within it.
pub fn solve_bms(pricers: &PricerSet, r: f64) -> Result<BenchmarkSolution> {
    let caps = product_caps(pricers, r)?;
    let columns = pricers
        .pricers
        .iter()
        .zip(&caps)
        .map(|(p, cap)| {
            p.cheapest_within(cap.e_max)
                .ok_or_else(|| Error::Infeasible(format!("product {} has no column within its cap", p.product)))
        })
        .collect::<Result<_>>()?;
    Ok(BenchmarkSolution::from_columns(columns))
}
