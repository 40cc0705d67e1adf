use num_traits::Float;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::Result;
use crate::model::{ProductParams, ShipMode};
use crate::rand_dist::DistSpec;
use crate::sim::{ColumnStats, Policy};

/// Closed-form evaluation of a single-mode base-stock policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleModeEval {
    pub mode: ShipMode,
    pub base_stock: i64,
    /// Holding + backlog + shipping cost per period.
    pub cost_rate: f64,
    pub inventory_cost_rate: f64,
    pub emission_rate: f64,
}

impl SingleModeEval {
    pub fn policy(&self) -> Policy {
        match self.mode {
            ShipMode::Slow => Policy::SlowOnly { s_slow: self.base_stock },
            ShipMode::Fast => Policy::FastOnly { s_fast: self.base_stock },
        }
    }

    /// Column statistics with a zero-width confidence interval.
    pub fn to_stats(&self, product: &ProductParams) -> ColumnStats {
        let mu = product.mean_demand();
        let (eq_fast, eq_slow) = match self.mode {
            ShipMode::Slow => (0.0, mu),
            ShipMode::Fast => (mu, 0.0),
        };
        ColumnStats {
            cost_rate: self.cost_rate,
            inventory_cost_rate: self.inventory_cost_rate,
            emission_rate: self.emission_rate,
            eq_fast,
            eq_slow,
            e_overshoot: 0.0,
            ci_halfwidth_rel: 0.0,
            replications: 0,
            se_eq_fast: 0.0,
            se_eq_slow: 0.0,
            se_overshoot: 0.0,
            demand_rate: mu,
        }
    }
}

/// Law of the demand over `periods` consecutive periods.
pub fn convolved_demand(demand: &DistSpec, periods: u32) -> DistSpec {
    let n = f64::from(periods);
    match *demand {
        DistSpec::NegBinomial { mean, cv } => DistSpec::NegBinomial { mean: n * mean, cv: cv / n.sqrt() },
        DistSpec::Deterministic { value } => DistSpec::Deterministic { value: n * value },
        ref other => other.clone(),
    }
}

/// Negative-binomial probabilities `P(X = 0..=upto)` for size `r` and
/// success probability `p`.
pub fn neg_binomial_pmf<T: Float>(r: f64, p: f64, upto: i64) -> Vec<T> {
    let base = ln_gamma(r);
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    (0..=upto.max(0))
        .map(|k| {
            let k = k as f64;
            let ln = ln_gamma(k + r) - base - ln_gamma(k + 1.0) + r * lp + k * lq;
            T::from(ln.exp()).unwrap_or_else(T::zero)
        })
        .collect()
}

/// `(E[(S − X)⁺], E[(X − S)⁺])` for `X ≥ 0` with probabilities `pmf[0..]`
/// and mean `mean`.
pub fn newsvendor_parts<T: Float>(pmf: &[T], s: i64, mean: T) -> (T, T) {
    let mut over = T::zero();
    if s > 0 {
        for (k, &pk) in pmf.iter().enumerate().take(s as usize + 1) {
            over = over + T::from(s - k as i64).unwrap() * pk;
        }
    }
    let under = over + mean - T::from(s).unwrap();
    (over, under.max(T::zero()))
}

/// Optimal base-stock policy shipping everything with `mode`, evaluated
/// without simulation.
pub fn exact_single_mode(product: &ProductParams, mode: ShipMode) -> Result<SingleModeEval> {
    product.validate()?;
    let mu = product.mean_demand();
    let (h, p) = (product.holding, product.penalty);
    let lead = product.lead_time(mode) + 1;
    let law = convolved_demand(&product.demand, lead);
    let (base_stock, inventory_cost_rate) = match law {
        DistSpec::Deterministic { value } => (value as i64, 0.0),
        DistSpec::NegBinomial { mean, cv } => {
            let s = law.quantile(product.critical_ratio())? as i64;
            let (r, prob) = DistSpec::neg_binomial_params(mean, cv);
            let pmf = neg_binomial_pmf::<f64>(r, prob, s);
            let (over, under) = newsvendor_parts(&pmf, s, mean);
            (s, h * over + p * under)
        }
        _ => unreachable!("validated demand is negative binomial or deterministic"),
    };
    Ok(SingleModeEval {
        mode,
        base_stock,
        cost_rate: inventory_cost_rate + product.unit_cost(mode) * mu,
        inventory_cost_rate,
        emission_rate: product.unit_emission(mode) * mu,
    })
}
