//! Pricing: the cheapest policy of one product for given dual prices.
//!
//! For a fixed Δ the overshoot process does not depend on `S_f`, so each Δ is
//! simulated once and `S_f` is set to the newsvendor fractile of the
//! resulting inventory-shortfall samples. Column statistics do not depend on
//! the duals, which lets a [`Pricer`] evaluate its whole candidate set once
//! and answer every later pricing call by a scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::exact_single_mode;
use crate::error::{Error, Result};
use crate::model::{ProductParams, ShipMode};
use crate::sim::{demand_path, ColumnStats, OvershootChain, Policy, SimConfig};
use crate::stats::{mean_ci95, std_error};
use crate::testbed::{EmissionBounds, Instance};

/// Dual prices of the emission cap (`eta`) and of one product's convexity
/// row (`upsilon`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualPrices {
    /// Cost per kg CO₂; never positive.
    pub eta: f64,
    pub upsilon: f64,
}

impl DualPrices {
    pub fn new(eta: f64, upsilon: f64) -> Result<Self> {
        if !(eta <= 0.0) {
            return Err(Error::param("eta", format!("must be <= 0, got {eta}")));
        }
        Ok(Self { eta, upsilon })
    }
}

/// A priced policy of one product.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub product: usize,
    pub policy: Policy,
    pub stats: ColumnStats,
}

impl Column {
    pub fn reduced_cost(&self, duals: &DualPrices) -> f64 {
        self.stats.cost_rate - duals.eta * self.stats.emission_rate - duals.upsilon
    }
}

/// Search settings for the Δ grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Hard upper bound on Δ; the automatic bound applies when `None`.
    pub max_delta: Option<i64>,
}

/// Share of demand the slow mode must carry before the Δ grid stops.
const SLOW_SHARE_STOP: f64 = 0.999;
/// Quantile of `l`-period demand capping the Δ grid.
const DELTA_CAP_QUANTILE: f64 = 0.9999;

/// Smallest `S_f` whose empirical probability of covering
/// `lead_time_demand[i] − overshoot[i]` reaches `p/(p+h)`.
pub fn optimal_sf_given_delta(product: &ProductParams, overshoot: &[i64], lead_time_demand: &[i64]) -> Result<i64> {
    if overshoot.is_empty() || overshoot.len() != lead_time_demand.len() {
        return Err(Error::Precondition(format!(
            "need equally sized nonempty samples, got {} overshoot and {} demand",
            overshoot.len(),
            lead_time_demand.len()
        )));
    }
    let mut x: Vec<i64> = lead_time_demand.iter().zip(overshoot).map(|(d, o)| d - o).collect();
    x.sort_unstable();
    Ok(x[fractile_rank(x.len(), product.critical_ratio()) - 1])
}

/// Smallest `m ≥ 1` with `m / n ≥ q`.
fn fractile_rank(n: usize, q: f64) -> usize {
    let nf = n as f64;
    let mut m = ((q * nf).ceil() as usize).clamp(1, n);
    while m > 1 && (m - 1) as f64 / nf >= q {
        m -= 1;
    }
    while m < n && (m as f64) / nf < q {
        m += 1;
    }
    m
}

/// Pooled samples of `X = Σ_{k=t−l_f}^{t} D^k − O^{t−l_f}` for one Δ; the
/// end-of-period net inventory under any `S_f` is `S_f − X`.
#[derive(Clone, Debug)]
pub struct DeltaProfile {
    pub delta: i64,
    x_min: i64,
    counts: Vec<u64>,
    /// Per replication: recorded shortfall samples.
    reps: Vec<Vec<i64>>,
    overshoot_means: Vec<f64>,
    demand_means: Vec<f64>,
    /// Per replication: realized fast and slow order totals.
    flows: Vec<(i64, i64)>,
}

impl DeltaProfile {
    /// Simulates the overshoot recursion for every replication of `cfg`.
    pub fn simulate(product: &ProductParams, delta: i64, cfg: &SimConfig) -> Result<Self> {
        let paths = (0..cfg.replications)
            .map(|rep| demand_path(product, cfg, rep))
            .collect::<Result<Vec<_>>>()?;
        Self::from_paths(product, delta, cfg, &paths)
    }

    fn from_paths(product: &ProductParams, delta: i64, cfg: &SimConfig, paths: &[Vec<i64>]) -> Result<Self> {
        let lf = product.lead_fast as usize;
        let warmup = cfg.warmup as usize;
        if warmup < lf {
            return Err(Error::Precondition(format!("warm-up {warmup} shorter than fast lead time {lf}")));
        }
        let mut reps = Vec::with_capacity(paths.len());
        let mut overshoot_means = Vec::with_capacity(paths.len());
        let mut demand_means = Vec::with_capacity(paths.len());
        let mut flows = Vec::with_capacity(paths.len());
        for demands in paths {
            let mut chain = OvershootChain::new(delta, product.lead_diff())?;
            let mut overshoot = Vec::with_capacity(demands.len());
            let (o, mut qf, mut qs) = chain.initial();
            overshoot.push(o);
            let (mut fast, mut slow) = (0i64, 0i64);
            for (t, &d) in demands.iter().enumerate() {
                if t >= warmup {
                    fast += qf;
                    slow += qs;
                }
                if t + 1 < demands.len() {
                    let (o, f, s) = chain.step(d);
                    overshoot.push(o);
                    (qf, qs) = (f, s);
                }
            }
            flows.push((fast, slow));
            let mut window: i64 = demands[warmup - lf..warmup].iter().sum();
            let mut xs = Vec::with_capacity(demands.len() - warmup);
            let (mut o_sum, mut d_sum) = (0i64, 0i64);
            for t in warmup..demands.len() {
                window += demands[t];
                xs.push(window - overshoot[t - lf]);
                window -= demands[t - lf];
                o_sum += overshoot[t];
                d_sum += demands[t];
            }
            let n = xs.len() as f64;
            overshoot_means.push(o_sum as f64 / n);
            demand_means.push(d_sum as f64 / n);
            reps.push(xs);
        }
        let x_min = reps.iter().flatten().copied().min().unwrap_or(0);
        let x_max = reps.iter().flatten().copied().max().unwrap_or(0);
        let mut counts = vec![0u64; (x_max - x_min + 1) as usize];
        for &x in reps.iter().flatten() {
            counts[(x - x_min) as usize] += 1;
        }
        Ok(Self { delta, x_min, counts, reps, overshoot_means, demand_means, flows })
    }

    fn samples(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Empirical newsvendor fractile of the pooled samples.
    pub fn optimal_base_stock(&self, product: &ProductParams) -> i64 {
        let n = self.samples();
        let m = fractile_rank(n as usize, product.critical_ratio()) as u64;
        let mut cum = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            cum += c;
            if cum >= m {
                return self.x_min + i as i64;
            }
        }
        self.x_min + self.counts.len() as i64 - 1
    }

    /// Mean holding + backlog cost per period under base stock `s`.
    pub fn inventory_cost(&self, product: &ProductParams, s: i64) -> f64 {
        let costs = self.per_rep_inventory_cost(product, s);
        costs.iter().sum::<f64>() / costs.len() as f64
    }

    fn per_rep_inventory_cost(&self, product: &ProductParams, s: i64) -> Vec<f64> {
        let (h, p) = (product.holding, product.penalty);
        self.reps
            .iter()
            .map(|xs| {
                let (mut over, mut under) = (0i64, 0i64);
                for &x in xs {
                    if s >= x {
                        over += s - x;
                    } else {
                        under += x - s;
                    }
                }
                (h * over as f64 + p * under as f64) / xs.len() as f64
            })
            .collect()
    }

    /// Mean overshoot over all recorded periods.
    pub fn mean_overshoot(&self) -> f64 {
        self.overshoot_means.iter().sum::<f64>() / self.overshoot_means.len() as f64
    }

    pub fn mean_demand(&self) -> f64 {
        self.demand_means.iter().sum::<f64>() / self.demand_means.len() as f64
    }

    /// Realized fraction of the order flow shipped fast.
    pub fn fast_share(&self) -> f64 {
        let (f, s) = self.flows.iter().fold((0, 0), |(a, b), &(f, s)| (a + f, b + s));
        share(f, s, self.delta)
    }

    /// Column with the newsvendor-optimal `S_f`. Order flows are the exact
    /// mean demand split by the realized fast/slow shares, so a column that
    /// never ships fast emits exactly as little as the slow-only policy.
    pub fn column(&self, product: &ProductParams, cfg: &SimConfig) -> Column {
        let s = self.optimal_base_stock(product);
        let inv = self.per_rep_inventory_cost(product, s);
        let mu = product.mean_demand();
        let fast_reps: Vec<f64> = self.flows.iter().map(|&(f, s)| mu * share(f, s, self.delta)).collect();
        let costs: Vec<f64> = inv
            .iter()
            .zip(&fast_reps)
            .map(|(c, &f)| c + product.cost_fast * f + product.cost_slow * (mu - f))
            .collect();

        let e_overshoot = self.mean_overshoot();
        let eq_fast = mu * self.fast_share();
        let eq_slow = mu - eq_fast;
        let inventory_cost_rate = inv.iter().sum::<f64>() / inv.len() as f64;
        let cost_rate = inventory_cost_rate + product.cost_fast * eq_fast + product.cost_slow * eq_slow;
        let (_, hw) = mean_ci95(&costs);
        let fast_mean = fast_reps.iter().sum::<f64>() / fast_reps.len() as f64;
        let se_share = std_error(&fast_reps, fast_mean);
        Column {
            product: product.id,
            policy: Policy::DualIndex { s_fast: s, delta: self.delta },
            stats: ColumnStats {
                cost_rate,
                inventory_cost_rate,
                emission_rate: product.emission_fast * eq_fast + product.emission_slow * eq_slow,
                eq_fast,
                eq_slow,
                e_overshoot,
                ci_halfwidth_rel: if cost_rate != 0.0 { hw / cost_rate.abs() } else { 0.0 },
                replications: cfg.replications,
                se_eq_fast: se_share,
                se_eq_slow: se_share,
                se_overshoot: std_error(&self.overshoot_means, e_overshoot),
                demand_rate: self.mean_demand(),
            },
        }
    }
}

/// Fast share of `fast + slow`; without any orders, all-fast for Δ = 0 and
/// all-slow otherwise.
fn share(fast: i64, slow: i64, delta: i64) -> f64 {
    match fast + slow {
        0 if delta == 0 => 1.0,
        0 => 0.0,
        total => fast as f64 / total as f64,
    }
}

/// All candidate columns of one product, evaluated once.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Pricer {
    pub product: usize,
    /// Dual-index columns for Δ = 1, 2, … in order. Δ = 0 is the
    /// fast-only policy and is represented by `fast_only`.
    pub grid: Vec<Column>,
    pub slow_only: Column,
    pub fast_only: Column,
    unconstrained: usize,
    least_polluting: usize,
}

impl Pricer {
    pub fn build(product: &ProductParams, cfg: &SimConfig, search: &SearchConfig) -> Result<Self> {
        product.validate()?;
        cfg.validate()?;
        let single = |mode| -> Result<Column> {
            let e = exact_single_mode(product, mode)?;
            Ok(Column { product: product.id, policy: e.policy(), stats: e.to_stats(product) })
        };
        let slow_only = single(ShipMode::Slow)?;
        let fast_only = single(ShipMode::Fast)?;
        let mut grid = Vec::new();
        let l = product.lead_diff();
        if l >= 1 {
            let paths = (0..cfg.replications)
                .map(|rep| demand_path(product, cfg, rep))
                .collect::<Result<Vec<_>>>()?;
            let cap = match search.max_delta {
                Some(m) if m < 0 => return Err(Error::param("max_delta", "must be >= 0")),
                Some(m) => m,
                None => crate::benchmarks::convolved_demand(&product.demand, l)
                    .quantile(DELTA_CAP_QUANTILE)?
                    .ceil() as i64,
            };
            for delta in 1..=cap {
                let prof = DeltaProfile::from_paths(product, delta, cfg, &paths)?;
                let carried = (delta as f64 - prof.mean_overshoot()) / f64::from(l);
                grid.push(prof.column(product, cfg));
                if search.max_delta.is_none() && carried >= SLOW_SHARE_STOP * prof.mean_demand() {
                    break;
                }
            }
        }
        let mut pricer = Self { product: product.id, grid, slow_only, fast_only, unconstrained: 0, least_polluting: 0 };
        pricer.unconstrained = pricer.argmin(|c| c.stats.cost_rate);
        pricer.least_polluting = pricer.grid.len()
            + match product.least_polluting_mode() {
                ShipMode::Slow => 0,
                ShipMode::Fast => 1,
            };
        Ok(pricer)
    }

    /// Grid columns followed by the slow-only and fast-only columns.
    pub fn candidates(&self) -> impl Iterator<Item = &Column> + '_ {
        self.grid.iter().chain([&self.slow_only, &self.fast_only])
    }

    fn argmin(&self, score: impl Fn(&Column) -> f64) -> usize {
        let mut best = 0;
        let mut best_key = (f64::INFINITY, f64::INFINITY);
        for (i, c) in self.candidates().enumerate() {
            let key = (score(c), c.stats.emission_rate);
            if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
                best = i;
                best_key = key;
            }
        }
        best
    }

    fn nth(&self, i: usize) -> &Column {
        self.candidates().nth(i).expect("index in range")
    }

    /// Cheapest column ignoring emissions.
    pub fn unconstrained(&self) -> &Column {
        self.nth(self.unconstrained)
    }

    /// Single-mode column of the cleaner mode.
    pub fn least_polluting(&self) -> &Column {
        self.nth(self.least_polluting)
    }

    /// Column of minimum reduced cost; ties go to lower emissions.
    pub fn solve(&self, duals: &DualPrices) -> (Column, f64) {
        let c = *self.nth(self.argmin(|c| c.reduced_cost(duals)));
        (c, c.reduced_cost(duals))
    }

    /// Cheapest column under an emission cap `c_e` per kg CO₂.
    pub fn solve_carbon_priced(&self, c_e: f64) -> Result<Column> {
        if !(c_e >= 0.0) {
            return Err(Error::param("c_e", format!("must be >= 0, got {c_e}")));
        }
        Ok(self.solve(&DualPrices { eta: -c_e, upsilon: 0.0 }).0)
    }

    /// Cheapest column whose emission rate does not exceed `cap`.
    pub fn cheapest_within(&self, cap: f64) -> Option<Column> {
        self.candidates()
            .filter(|c| c.stats.emission_rate <= cap)
            .min_by(|a, b| {
                (a.stats.cost_rate, a.stats.emission_rate)
                    .partial_cmp(&(b.stats.cost_rate, b.stats.emission_rate))
                    .expect("finite statistics")
            })
            .copied()
    }
}

/// One-shot pricing of a single product.
pub fn solve_sp(
    product: &ProductParams,
    duals: &DualPrices,
    cfg: &SimConfig,
    search: &SearchConfig,
) -> Result<(Column, f64)> {
    Ok(Pricer::build(product, cfg, search)?.solve(duals))
}

/// Cheapest policy of one product when emissions cost `c_e` per kg CO₂.
pub fn solve_carbon_priced(product: &ProductParams, c_e: f64, cfg: &SimConfig, search: &SearchConfig) -> Result<Column> {
    Pricer::build(product, cfg, search)?.solve_carbon_priced(c_e)
}

/// Pricers for every product of an instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PricerSet {
    pub sim: SimConfig,
    pub pricers: Vec<Pricer>,
}

impl PricerSet {
    /// Builds the pricers in parallel; output does not depend on scheduling.
    pub fn build(instance: &Instance, cfg: &SimConfig, search: &SearchConfig) -> Result<Self> {
        let pricers = instance
            .products
            .par_iter()
            .map(|p| Pricer::build(p, cfg, search))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sim: *cfg, pricers })
    }

    pub fn len(&self) -> usize {
        self.pricers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pricers.is_empty()
    }
}

impl EmissionBounds for PricerSet {
    fn unconstrained_emission(&self, product: usize) -> f64 {
        self.pricers[product].unconstrained().stats.emission_rate
    }

    fn min_emission(&self, product: usize) -> f64 {
        self.pricers[product].least_polluting().stats.emission_rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::product;
    use crate::sim::evaluate;

    fn cfg() -> SimConfig {
        SimConfig { replications: 4, horizon: 20_000, warmup: 200, seed: 11 }
    }

    #[test]
    fn fractile_rank_is_exact() {
        assert_eq!(fractile_rank(10, 0.9), 9);
        assert_eq!(fractile_rank(10, 0.91), 10);
        assert_eq!(fractile_rank(3, 0.5), 2);
        assert_eq!(fractile_rank(1, 0.999), 1);
        assert_eq!(fractile_rank(100_000, 0.9), 90_000);
    }

    #[test]
    fn zero_delta_base_stock_is_demand_fractile() {
        let prod = product(20.0, 0.6);
        let d: Vec<i64> = (0..10).collect();
        let o = vec![0; 10];
        assert_eq!(optimal_sf_given_delta(&prod, &o, &d).unwrap(), 8);
        assert!(optimal_sf_given_delta(&prod, &[], &[]).is_err());
    }

    #[test]
    fn high_penalty_covers_worst_case() {
        let prod = ProductParams { penalty: 1e12, ..product(20.0, 0.6) };
        let d = [3, 9, 4, 7];
        let o = [1, 0, 2, 5];
        assert_eq!(optimal_sf_given_delta(&prod, &o, &d).unwrap(), 9);
    }

    #[test]
    fn profile_cost_matches_full_simulation() {
        let prod = product(25.0, 0.8);
        let cfg = cfg();
        let prof = DeltaProfile::simulate(&prod, 40, &cfg).unwrap();
        let col = prof.column(&prod, &cfg);
        let sim = evaluate(&col.policy, &prod, &cfg).unwrap();
        approx::assert_relative_eq!(col.stats.inventory_cost_rate, sim.inventory_cost_rate, max_relative = 1e-12);
        assert!((col.stats.e_overshoot - sim.e_overshoot).abs() < 1e-9);
        assert!((col.stats.eq_slow - sim.eq_slow).abs() <= 3.0 * sim.se_eq_slow + 0.01);
    }

    #[test]
    fn base_stock_is_locally_optimal() {
        let prod = product(25.0, 0.8);
        let prof = DeltaProfile::simulate(&prod, 30, &cfg()).unwrap();
        let s = prof.optimal_base_stock(&prod);
        let c = |s| prof.inventory_cost(&prod, s);
        assert!(c(s - 1) >= c(s) && c(s + 1) >= c(s));
    }

    #[test]
    fn carbon_price_extremes() {
        let prod = product(10.0, 0.7);
        let p = Pricer::build(&prod, &SimConfig::desk(2), &SearchConfig::default()).unwrap();
        let free = p.solve_carbon_priced(0.0).unwrap();
        assert_eq!(free.policy, p.unconstrained().policy);
        let dear = p.solve_carbon_priced(1e6).unwrap();
        assert_eq!(dear.policy, p.slow_only.policy);
        assert!(p.solve_carbon_priced(-1.0).is_err());
    }

    #[test]
    fn grid_reaches_slow_dominance() {
        let prod = product(10.0, 0.7);
        let p = Pricer::build(&prod, &SimConfig::desk(2), &SearchConfig::default()).unwrap();
        let last = p.grid.last().unwrap();
        assert!(last.stats.eq_slow >= 0.99 * 10.0, "{:?}", last.stats);
        assert_eq!(p.grid[0].policy.delta(), Some(1));
        assert_eq!(p.fast_only.stats.eq_slow, 0.0);
        let capped = Pricer::build(&prod, &SimConfig::desk(2), &SearchConfig { max_delta: Some(3) }).unwrap();
        assert_eq!(capped.grid.len(), 3);
    }

    #[test]
    fn equal_lead_times_use_single_mode_columns() {
        let prod = ProductParams { lead_slow: 0, ..product(10.0, 0.7) };
        let p = Pricer::build(&prod, &SimConfig::desk(2), &SearchConfig::default()).unwrap();
        assert!(p.grid.is_empty());
        assert_eq!(p.unconstrained().policy, p.slow_only.policy);
    }
}
