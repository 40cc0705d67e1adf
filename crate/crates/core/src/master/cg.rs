use std::io::Write;

use serde::{Deserialize, Serialize};

use super::bnb::{branch_and_bound, IntegerSolution, NODE_LIMIT};
use super::lp::{solve_lmckp, Item, LpSolution};
use crate::error::{Error, Result};
use crate::subproblem::{Column, DualPrices, PricerSet};
use crate::testbed::TargetSpec;

/// Iteration control of the column generation loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgConfig {
    pub max_iterations: usize,
    /// Improving threshold relative to the product's unconstrained cost.
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
    /// Keep pricing with `polish_tolerance` after the main loop converges,
    /// so the final bound is the optimum over the full candidate set.
    pub polish: bool,
    pub polish_tolerance: f64,
    pub max_polish_iterations: usize,
    pub node_limit: usize,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            rel_tolerance: 1e-3,
            abs_tolerance: 1e-6,
            polish: true,
            polish_tolerance: 1e-9,
            max_polish_iterations: 1000,
            node_limit: NODE_LIMIT,
        }
    }
}

/// One row of the iteration log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iter: usize,
    /// Restricted master LP value.
    pub lb: f64,
    /// Best Lagrangian lower bound on the full master LP so far.
    pub lagrangian_bound: f64,
    pub pool_size: usize,
    pub eta: f64,
    pub improving: usize,
    pub polish: bool,
}

/// Column pool and restricted-master solution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MasterState {
    pub target: TargetSpec,
    /// Columns per product; index 0 is the least-polluting column.
    pub pool: Vec<Vec<Column>>,
    pub lp: LpSolution<f64>,
    pub iterations: usize,
    pub lagrangian_bound: f64,
    pub converged: bool,
    pub log: Vec<IterationLog>,
}

impl MasterState {
    /// Value of the last restricted master LP.
    pub fn lb(&self) -> f64 {
        self.lp.value
    }

    pub fn pool_size(&self) -> usize {
        self.pool.iter().map(Vec::len).sum()
    }

    fn classes(&self) -> Vec<Vec<Item<f64>>> {
        self.pool
            .iter()
            .map(|cols| cols.iter().map(|c| Item::new(c.stats.cost_rate, c.stats.emission_rate)).collect())
            .collect()
    }

    pub fn duals(&self, product: usize) -> DualPrices {
        DualPrices { eta: self.lp.eta, upsilon: self.lp.upsilon[product] }
    }

    fn add(&mut self, col: Column) -> bool {
        let pool = &mut self.pool[col.product];
        if pool.iter().any(|c| c.policy == col.policy) {
            return false;
        }
        pool.push(col);
        true
    }
}

/// Integer finishing solution over the final pool.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CgSolution {
    pub columns: Vec<Column>,
    pub integer: IntegerSolution<f64>,
    pub lb: f64,
    /// `100 · (UB − LB) / LB`.
    pub gap_pct: f64,
    pub converged: bool,
}

impl CgSolution {
    pub fn cost(&self) -> f64 {
        self.integer.cost
    }

    pub fn emission(&self) -> f64 {
        self.integer.emission
    }
}

/// Seeds each product with its least-polluting and its unconstrained column.
pub fn init_pool(pricers: &PricerSet, target: &TargetSpec) -> Result<MasterState> {
    if pricers.is_empty() {
        return Err(Error::Precondition("instance has no products".into()));
    }
    let pool: Vec<Vec<Column>> = pricers
        .pricers
        .iter()
        .map(|p| {
            let mut cols = vec![*p.least_polluting()];
            if p.unconstrained().policy != cols[0].policy {
                cols.push(*p.unconstrained());
            }
            cols
        })
        .collect();
    let e_min: f64 = pool.iter().map(|c| c[0].stats.emission_rate).sum();
    if e_min > target.e_max {
        return Err(Error::Infeasible(format!("minimum emission {e_min} exceeds cap {}", target.e_max)));
    }
    let mut state = MasterState {
        target: *target,
        pool,
        lp: LpSolution { weights: vec![], eta: 0.0, upsilon: vec![], value: f64::INFINITY, emission: 0.0, fractional: None },
        iterations: 0,
        lagrangian_bound: f64::NEG_INFINITY,
        converged: false,
        log: Vec::new(),
    };
    solve_rmp_lp(&mut state)?;
    Ok(state)
}

/// Solves the restricted master LP exactly and stores primal and dual values.
pub fn solve_rmp_lp(state: &mut MasterState) -> Result<()> {
    state.lp = solve_lmckp(&state.classes(), state.target.e_max)?;
    Ok(())
}

/// Alternates restricted-master solves and pricing until no product has an
/// improving column, then solves the pool as an integer program.
pub fn run_column_generation(pricers: &PricerSet, target: &TargetSpec, cfg: &CgConfig) -> Result<(MasterState, CgSolution)> {
    let mut state = init_pool(pricers, target)?;
    let eps: Vec<f64> = pricers
        .pricers
        .iter()
        .map(|p| cfg.abs_tolerance.max(cfg.rel_tolerance * p.unconstrained().stats.cost_rate.abs()))
        .collect();
    let mut polish = false;
    let mut rounds = 0;
    loop {
        let mut improving = 0;
        let mut lagrangian = state.lp.eta * target.e_max;
        for (j, pricer) in pricers.pricers.iter().enumerate() {
            let (col, rc) = pricer.solve(&state.duals(j));
            lagrangian += state.lp.upsilon[j] + rc.min(0.0);
            let threshold = if polish { cfg.polish_tolerance * col.stats.cost_rate.abs().max(1.0) } else { eps[j] };
            if rc < -threshold && state.add(col) {
                improving += 1;
            }
        }
        state.lagrangian_bound = state.lagrangian_bound.max(lagrangian);
        state.log.push(IterationLog {
            iter: state.iterations,
            lb: state.lp.value,
            lagrangian_bound: state.lagrangian_bound,
            pool_size: state.pool_size(),
            eta: state.lp.eta,
            improving,
            polish,
        });
        state.iterations += 1;
        rounds += 1;
        if improving == 0 {
            if polish || !cfg.polish {
                state.converged = true;
                break;
            }
            polish = true;
            rounds = 0;
            continue;
        }
        let before = state.lp.value;
        solve_rmp_lp(&mut state)?;
        debug_assert!(state.lp.value <= before + 1e-9 * before.abs().max(1.0));
        let cap = if polish { cfg.max_polish_iterations } else { cfg.max_iterations };
        if rounds >= cap {
            // Polishing past the main tolerance is optional.
            state.converged = polish;
            break;
        }
    }
    let sol = solve_integer(&state, cfg.node_limit)?;
    Ok((state, sol))
}

/// Exact integer optimum over the current pool.
pub fn solve_integer(state: &MasterState, node_limit: usize) -> Result<CgSolution> {
    let classes = state.classes();
    let integer = match branch_and_bound(&classes, state.target.e_max, node_limit) {
        Ok(s) => s,
        Err(Error::Infeasible(_)) => {
            let choice = vec![0; classes.len()];
            let cost = classes.iter().map(|c| c[0].cost).sum();
            let emission = classes.iter().map(|c| c[0].emission).sum();
            IntegerSolution { choice, cost, emission, nodes: 0, proven: false }
        }
        Err(e) => return Err(e),
    };
    let columns = integer.choice.iter().enumerate().map(|(j, &k)| state.pool[j][k]).collect();
    let lb = state.lb();
    let gap_pct = if lb > 0.0 { 100.0 * (integer.cost - lb) / lb } else { 0.0 };
    Ok(CgSolution { columns, integer, lb, gap_pct, converged: state.converged })
}

/// Writes the iteration log as CSV.
pub fn write_iteration_log<W: Write>(log: &[IterationLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in log {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emissions::AssortmentType;
    use crate::sim::SimConfig;
    use crate::subproblem::SearchConfig;
    use crate::testbed::{generate_instance, resolve_target, Overrides};

    fn setup(kind: AssortmentType) -> PricerSet {
        let ov = Overrides { products: Some(6), ..Default::default() };
        let inst = generate_instance(kind, 5, &ov).unwrap();
        PricerSet::build(&inst, &SimConfig::desk(5), &SearchConfig::default()).unwrap()
    }

    #[test]
    fn full_reduction_selects_least_polluting() {
        let pricers = setup(AssortmentType::A1);
        let inst_len = pricers.len();
        let target = crate::testbed::TargetSpec::between(
            (0..inst_len).map(|j| pricers.pricers[j].unconstrained().stats.emission_rate).sum(),
            (0..inst_len).map(|j| pricers.pricers[j].least_polluting().stats.emission_rate).sum(),
            1.0,
        )
        .unwrap();
        let (state, sol) = run_column_generation(&pricers, &target, &CgConfig::default()).unwrap();
        assert!(state.converged);
        assert!(sol.gap_pct.abs() < 1e-9);
        for (j, c) in sol.columns.iter().enumerate() {
            assert_eq!(c.stats.eq_fast, 0.0);
            assert_eq!(c.stats.emission_rate, pricers.pricers[j].least_polluting().stats.emission_rate);
        }
        assert!(sol.emission() <= target.e_max);
    }

    #[test]
    fn bounds_and_duals_are_consistent() {
        let pricers = setup(AssortmentType::A3);
        let inst = generate_instance(AssortmentType::A3, 5, &Overrides { products: Some(6), ..Default::default() }).unwrap();
        let target = resolve_target(&inst, 0.5, &pricers).unwrap();
        let (state, sol) = run_column_generation(&pricers, &target, &CgConfig::default()).unwrap();
        assert!(state.converged);
        assert!(state.lp.fractional_count() <= 1);
        let dual: f64 = state.lp.upsilon.iter().sum::<f64>() + state.lp.eta * target.e_max;
        assert!((dual - state.lb()).abs() <= 1e-9 * state.lb());
        assert!(sol.cost() >= state.lb() - 1e-9);
        assert!(sol.emission() <= target.e_max);
        for (j, cols) in state.pool.iter().enumerate() {
            for c in cols {
                assert!(c.reduced_cost(&state.duals(j)) >= -1e-9 * c.stats.cost_rate.max(1.0));
            }
        }
        for w in state.log.windows(2) {
            assert!(w[1].lb <= w[0].lb + 1e-9);
            assert!(w[1].lagrangian_bound >= w[0].lagrangian_bound);
        }
        assert!(state.lagrangian_bound <= state.lb() + 1e-6);
        let mut buf = Vec::new();
        write_iteration_log(&state.log, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("iter,lb,lagrangian_bound,pool_size,eta,improving,polish\n"));
    }

    #[test]
    fn infeasible_target_is_rejected() {
        let pricers = setup(AssortmentType::A2);
        let t = TargetSpec { reduction: 1.0, e_max: 0.0, e_min: 1.0, e_unconstrained: 2.0 };
        assert!(matches!(init_pool(&pricers, &t), Err(Error::Infeasible(_))));
    }
}
