//! Experiment orchestration: target sweeps over the three approaches,
//! emission-reduction concentration, carbon pricing and report files.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{solve_bms, solve_sms, BenchmarkSolution};
use crate::emissions::AssortmentType;
use crate::error::{Error, Result};
use crate::master::{run_column_generation, CgConfig, CgSolution, MasterState};
use crate::sim::{Policy, SimConfig};
use crate::subproblem::{Column, PricerSet, SearchConfig};
use crate::testbed::{generate_instance, resolve_target, EmissionBounds, Instance, Overrides, TargetSpec};

/// Reduction fractions swept by default.
pub const DEFAULT_TARGETS: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Everything needed to reproduce a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub assortment_type: AssortmentType,
    pub seed: u64,
    pub overrides: Overrides,
    pub targets: Vec<f64>,
    pub sim: SimConfig,
    pub search: SearchConfig,
    pub cg: CgConfig,
}

impl ExperimentConfig {
    pub fn new(assortment_type: AssortmentType, seed: u64) -> Self {
        Self {
            assortment_type,
            seed,
            overrides: Overrides::default(),
            targets: DEFAULT_TARGETS.to_vec(),
            sim: SimConfig { seed, ..SimConfig::default() },
            search: SearchConfig::default(),
            cg: CgConfig::default(),
        }
    }

    pub fn instance(&self) -> Result<Instance> {
        generate_instance(self.assortment_type, self.seed, &self.overrides)
    }
}

/// The three solution approaches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Approach {
    Dms,
    Sms,
    Bms,
}

impl Approach {
    pub const ALL: [Approach; 3] = [Approach::Dms, Approach::Sms, Approach::Bms];
}

/// An instance with its candidate columns evaluated.
pub struct Experiment {
    pub instance: Instance,
    pub pricers: PricerSet,
    pub cg: CgConfig,
}

/// A column-generation run at one target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DmsRun {
    pub target: TargetSpec,
    pub state: MasterState,
    pub solution: CgSolution,
}

/// Per-approach outcome at one target.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub approach: Approach,
    pub columns: Vec<Column>,
    pub cost: f64,
    pub emission: f64,
    /// 95% half-width of the total cost, treating products as independent.
    pub cost_ci: f64,
}

impl Outcome {
    fn new(approach: Approach, columns: Vec<Column>, cost: f64, emission: f64) -> Self {
        let cost_ci = total_ci(&columns);
        Self { approach, columns, cost, emission, cost_ci }
    }

    fn from_benchmark(approach: Approach, b: BenchmarkSolution) -> Self {
        Self::new(approach, b.columns, b.cost, b.emission)
    }

    /// Mean fast-mode share of the order flow, in percent.
    pub fn pct_fast(&self) -> f64 {
        pct_fast(&self.columns)
    }
}

/// 95% half-width of a sum of independent column cost estimates.
pub fn total_ci(columns: &[Column]) -> f64 {
    columns.iter().map(|c| c.stats.ci_halfwidth().powi(2)).sum::<f64>().sqrt()
}

/// `100 · mean_j EQ_f / (EQ_f + EQ_s)`.
pub fn pct_fast(columns: &[Column]) -> f64 {
    let shares: f64 = columns
        .iter()
        .map(|c| {
            let total = c.stats.eq_fast + c.stats.eq_slow;
            if total > 0.0 {
                c.stats.eq_fast / total
            } else {
                0.0
            }
        })
        .sum();
    100.0 * shares / columns.len() as f64
}

/// All outcomes at one target.
#[derive(Clone, Debug)]
pub struct TargetResult {
    pub r: f64,
    pub target: TargetSpec,
    pub dms: DmsRun,
    pub sms: Outcome,
    pub bms: Outcome,
}

impl TargetResult {
    pub fn dms_outcome(&self) -> Outcome {
        let s = &self.dms.solution;
        Outcome::new(Approach::Dms, s.columns.clone(), s.cost(), s.emission())
    }
}

impl Experiment {
    pub fn prepare(instance: Instance, sim: &SimConfig, search: &SearchConfig, cg: CgConfig) -> Result<Self> {
        instance.validate()?;
        let pricers = PricerSet::build(&instance, sim, search)?;
        Ok(Self { instance, pricers, cg })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::prepare(cfg.instance()?, &cfg.sim, &cfg.search, cfg.cg)
    }

    pub fn target(&self, r: f64) -> Result<TargetSpec> {
        resolve_target(&self.instance, r, &self.pricers)
    }

    pub fn solve_dms(&self, r: f64) -> Result<DmsRun> {
        let target = self.target(r)?;
        let (state, solution) = run_column_generation(&self.pricers, &target, &self.cg)?;
        Ok(DmsRun { target, state, solution })
    }

    pub fn solve_target(&self, r: f64) -> Result<TargetResult> {
        let target = self.target(r)?;
        let dms = self.solve_dms(r)?;
        let sms = Outcome::from_benchmark(Approach::Sms, solve_sms(&self.instance, &target)?);
        let bms = Outcome::from_benchmark(Approach::Bms, solve_bms(&self.pricers, r)?);
        Ok(TargetResult { r, target, dms, sms, bms })
    }

    /// Solves every target in parallel; results keep the input order.
    pub fn sweep(&self, targets: &[f64]) -> Result<Vec<TargetResult>> {
        targets.par_iter().map(|&r| self.solve_target(r)).collect()
    }

    /// Cheapest columns when emissions cost `c_e` per kg CO₂.
    pub fn carbon_price(&self, c_e: f64) -> Result<CarbonPriceReport> {
        let columns = self
            .pricers
            .pricers
            .iter()
            .map(|p| p.solve_carbon_priced(c_e))
            .collect::<Result<Vec<_>>>()?;
        let cost = columns.iter().map(|c| c.stats.cost_rate).sum();
        let emission = columns.iter().map(|c| c.stats.emission_rate).sum();
        Ok(CarbonPriceReport { c_e, cost, emission, columns })
    }

    /// Emission-reduction concentration of a DMS solution.
    pub fn lorenz(&self, solution: &[Column]) -> LorenzReport {
        let reductions: Vec<f64> = solution
            .iter()
            .enumerate()
            .map(|(j, c)| self.pricers.unconstrained_emission(j) - c.stats.emission_rate)
            .collect();
        lorenz_curves(&reductions, &heuristic_key(&self.instance))
    }
}

/// `|e_f − e_s| / (c_f − c_s)` per product; infinite without a premium.
pub fn heuristic_key(instance: &Instance) -> Vec<f64> {
    instance
        .products
        .iter()
        .map(|p| {
            let de = (p.emission_fast - p.emission_slow).abs();
            let dc = p.cost_fast - p.cost_slow;
            if dc > 0.0 {
                de / dc
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Totals under a carbon price.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CarbonPriceReport {
    pub c_e: f64,
    pub cost: f64,
    pub emission: f64,
    pub columns: Vec<Column>,
}

/// One point of a cumulative reduction-share curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorenzPoint {
    pub ordering: &'static str,
    pub rank: usize,
    pub product: Option<usize>,
    pub product_share: f64,
    pub reduction_share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LorenzReport {
    pub realized: Vec<LorenzPoint>,
    pub heuristic: Vec<LorenzPoint>,
    pub top20_realized: f64,
    pub top20_heuristic: f64,
    /// Set when the total reduction is zero and all shares are reported as 0.
    pub zero_total: bool,
}

/// Share of products whose contribution the top-share statistic covers.
pub const TOP_SHARE: f64 = 0.2;

fn curve(name: &'static str, reductions: &[f64], order: &[usize], total: f64) -> Vec<LorenzPoint> {
    let n = reductions.len() as f64;
    let mut acc = 0.0;
    let mut out = vec![LorenzPoint { ordering: name, rank: 0, product: None, product_share: 0.0, reduction_share: 0.0 }];
    for (i, &j) in order.iter().enumerate() {
        acc += reductions[j];
        out.push(LorenzPoint {
            ordering: name,
            rank: i + 1,
            product: Some(j),
            product_share: (i + 1) as f64 / n,
            reduction_share: if total != 0.0 { acc / total } else { 0.0 },
        });
    }
    out
}

/// Cumulative reduction shares with products ordered by realized reduction
/// and by `key` (both descending, ties by product index).
pub fn lorenz_curves(reductions: &[f64], key: &[f64]) -> LorenzReport {
    let total: f64 = reductions.iter().sum();
    let zero_total = total == 0.0;
    let order_by = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
        idx
    };
    let realized = curve("realized", reductions, &order_by(reductions), total);
    let heuristic = curve("heuristic", reductions, &order_by(key), total);
    let k = ((TOP_SHARE * reductions.len() as f64).ceil() as usize).min(reductions.len());
    LorenzReport {
        top20_realized: realized[k].reduction_share,
        top20_heuristic: heuristic[k].reduction_share,
        realized,
        heuristic,
        zero_total,
    }
}

/// One line of the sweep report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub r: f64,
    pub approach: Approach,
    pub cost: f64,
    pub cost_ci: f64,
    pub emission: f64,
    pub e_max: f64,
    pub slack_pct: f64,
    /// DMS only.
    pub gap_pct: Option<f64>,
    pub pct_sms: f64,
    pub pct_bms: f64,
    pub pct_f: f64,
    /// Cost divided by the DMS cost at full reduction.
    pub normalized_cost_vs_r1: f64,
}

/// Report rows ordered by target then approach. `cost_at_full` is the DMS
/// cost at `r = 1`.
pub fn report_rows(results: &[TargetResult], cost_at_full: f64) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for res in results {
        let ub = res.dms.solution.cost();
        let pct = |c: f64| 100.0 * (c - ub) / ub;
        let (pct_sms, pct_bms) = (pct(res.sms.cost), pct(res.bms.cost));
        let e_max = res.target.e_max;
        for o in [res.dms_outcome(), res.sms.clone(), res.bms.clone()] {
            rows.push(ReportRow {
                r: res.r,
                approach: o.approach,
                cost: o.cost,
                cost_ci: o.cost_ci,
                emission: o.emission,
                e_max,
                slack_pct: if e_max > 0.0 { 100.0 * (e_max - o.emission) / e_max } else { 0.0 },
                gap_pct: (o.approach == Approach::Dms).then_some(res.dms.solution.gap_pct),
                pct_sms,
                pct_bms,
                pct_f: o.pct_fast(),
                normalized_cost_vs_r1: o.cost / cost_at_full,
            });
        }
    }
    rows
}

/// Sweep plus normalization; solves `r = 1` separately when not swept.
pub fn run_sweep(exp: &Experiment, targets: &[f64]) -> Result<(Vec<TargetResult>, Vec<ReportRow>)> {
    for &r in targets {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::param("targets", format!("reduction fractions must lie in [0, 1], got {r}")));
        }
    }
    let results = exp.sweep(targets)?;
    let full = match results.iter().find(|t| t.r == 1.0) {
        Some(t) => t.dms.solution.cost(),
        None => exp.solve_dms(1.0)?.solution.cost(),
    };
    let rows = report_rows(&results, full);
    Ok((results, rows))
}

pub fn write_csv<W: Write, R: Serialize>(rows: &[R], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-product entry of a solution file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductSolution {
    pub id: usize,
    pub policy: Policy,
    pub cost_rate: f64,
    pub emission_rate: f64,
    pub eq_fast: f64,
    pub eq_slow: f64,
    pub ci_halfwidth_rel: f64,
    pub unconstrained_emission: f64,
}

/// JSON form of a DMS run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub assortment_type: AssortmentType,
    pub seed: u64,
    pub r: f64,
    pub target: TargetSpec,
    pub lb: f64,
    pub ub: f64,
    pub gap_pct: f64,
    pub eta: f64,
    pub emission: f64,
    pub iterations: usize,
    pub converged: bool,
    pub proven: bool,
    pub products: Vec<ProductSolution>,
}

impl SolutionFile {
    pub fn new(exp: &Experiment, run: &DmsRun) -> Self {
        let s = &run.solution;
        Self {
            assortment_type: exp.instance.assortment_type,
            seed: exp.instance.seed,
            r: run.target.reduction,
            target: run.target,
            lb: s.lb,
            ub: s.cost(),
            gap_pct: s.gap_pct,
            eta: run.state.lp.eta,
            emission: s.emission(),
            iterations: run.state.iterations,
            converged: s.converged,
            proven: s.integer.proven,
            products: s
                .columns
                .iter()
                .map(|c| ProductSolution {
                    id: c.product,
                    policy: c.policy,
                    cost_rate: c.stats.cost_rate,
                    emission_rate: c.stats.emission_rate,
                    eq_fast: c.stats.eq_fast,
                    eq_slow: c.stats.eq_slow,
                    ci_halfwidth_rel: c.stats.ci_halfwidth_rel,
                    unconstrained_emission: exp.pricers.unconstrained_emission(c.product),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Realized per-product reductions against the unconstrained optimum.
    pub fn reductions(&self) -> Vec<f64> {
        self.products.iter().map(|p| p.unconstrained_emission - p.emission_rate).collect()
    }

    /// Reduction concentration curves of this solution.
    pub fn lorenz(&self, instance: &Instance) -> Result<LorenzReport> {
        if instance.products.len() != self.products.len() {
            return Err(Error::param("solution", "product count differs from the instance"));
        }
        Ok(lorenz_curves(&self.reductions(), &heuristic_key(instance)))
    }
}
