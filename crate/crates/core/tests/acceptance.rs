//! End-to-end acceptance checks. Each test prints one PASS/FAIL line and
//! fails when its criterion is not met.

use std::sync::OnceLock;
use std::time::Instant;

use dms_core::benchmarks::exact_single_mode;
use dms_core::emissions::{lanes, unit_emission, TransportMode, TripSpec};
use dms_core::harness::{run_sweep, Experiment, TargetResult};
use dms_core::master::{branch_and_bound, enumerate_best, solve_lmckp, CgConfig, Item, NODE_LIMIT};
use dms_core::rand_dist::DistSpec;
use dms_core::sim::{demand_path, evaluate, OvershootChain, SimState};
use dms_core::stats::{ks_critical_1pct, ks_statistic, pearson};
use dms_core::{generate_instance, AssortmentType, Overrides, Policy, ProductParams, SearchConfig, ShipMode, SimConfig};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;
const DESK_TARGETS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn report(id: u32, name: &str, pass: bool, detail: impl AsRef<str>) {
    println!("criterion {id:>2} {name}: {} ({})", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(pass, "criterion {id} {name} failed: {}", detail.as_ref());
}

struct DeskRun {
    kind: AssortmentType,
    exp: Experiment,
    results: Vec<TargetResult>,
    seconds: f64,
}

/// Desk-scale sweeps for the three assortment types, shared across tests.
fn desk() -> &'static [DeskRun] {
    static RUNS: OnceLock<Vec<DeskRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        AssortmentType::ALL
            .iter()
            .map(|&kind| {
                let start = Instant::now();
                let inst = generate_instance(kind, SEED, &Overrides { products: Some(20), ..Default::default() }).unwrap();
                let exp =
                    Experiment::prepare(inst, &SimConfig::desk(SEED), &SearchConfig::default(), CgConfig::default()).unwrap();
                let (results, _) = run_sweep(&exp, &DESK_TARGETS).unwrap();
                DeskRun { kind, exp, results, seconds: start.elapsed().as_secs_f64() }
            })
            .collect()
    })
}

fn sig4(x: f64) -> f64 {
    let mag = 10f64.powi(x.abs().log10().floor() as i32 - 3);
    (x / mag).round() * mag
}

#[test]
fn criterion_01_emission_constants() {
    let start = Instant::now();
    let cases = [
        (TransportMode::Sea, lanes::HAIPHONG_SEA_KM, 0.3552),
        (TransportMode::Air, lanes::TAN_SON_NHAT_AIR_KM, 5.127),
        (TransportMode::Sea, lanes::SHANGHAI_SEA_KM, 0.3891),
        (TransportMode::Road, lanes::STUTTGART_ROAD_KM, 3.093e-2),
    ];
    let mut got = Vec::new();
    let mut ok = true;
    for (mode, d, want) in cases {
        let e = unit_emission(&TripSpec::new(mode, d, 1.0).unwrap());
        ok &= (sig4(e) - want).abs() <= 1e-12 * want;
        got.push(format!("{:.4e}", e));
    }
    let secs = start.elapsed().as_secs_f64();
    report(1, "emission constants", ok && secs < 1.0, format!("{} in {secs:.3}s", got.join(", ")));
}

#[test]
fn criterion_02_exact_vs_simulation() {
    let inst = generate_instance(AssortmentType::A1, SEED, &Overrides { products: Some(20), ..Default::default() }).unwrap();
    let cfg = SimConfig { replications: 10, horizon: 1_000_000, warmup: 1000, seed: SEED };
    let mut misses = Vec::new();
    let mut worst_ci: f64 = 0.0;
    let mut checks = 0;
    for p in &inst.products {
        for mode in [ShipMode::Slow, ShipMode::Fast] {
            let exact = exact_single_mode(p, mode).unwrap();
            let sim = evaluate(&exact.policy(), p, &cfg).unwrap();
            worst_ci = worst_ci.max(sim.ci_halfwidth_rel);
            checks += 1;
            if (sim.cost_rate - exact.cost_rate).abs() > sim.ci_halfwidth() {
                misses.push(format!("p{} {:?}: sim {:.4} exact {:.4} hw {:.4}", p.id, mode, sim.cost_rate, exact.cost_rate, sim.ci_halfwidth()));
            }
        }
    }
    report(
        2,
        "exact vs simulation",
        misses.is_empty() && worst_ci <= 0.01,
        format!("{}/{checks} outside CI, widest CI {:.3}% {}", misses.len(), 100.0 * worst_ci, misses.join("; ")),
    );
}

fn random_product(rng: &mut ChaCha8Rng, id: usize) -> ProductParams {
    let lead_fast = rng.random_range(0..=2);
    let mean: f64 = rng.random_range(2.0..150.0);
    let cv = rng.random_range(0.3..1.5f64).max((1.1 / mean).sqrt());
    ProductParams {
        id,
        demand: DistSpec::NegBinomial { mean, cv },
        holding: rng.random_range(0.2..2.0),
        penalty: rng.random_range(1.0..20.0),
        cost_slow: 0.0,
        cost_fast: rng.random_range(0.1..5.0),
        lead_slow: lead_fast + rng.random_range(1..=4),
        lead_fast,
        emission_slow: rng.random_range(0.1..3.0),
        emission_fast: rng.random_range(0.1..3.0),
    }
}

#[test]
fn criterion_03_separability() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0;
    for case in 0..100 {
        let p = random_product(&mut rng, case);
        let delta = rng.random_range(0..=(4.0 * p.mean_demand()) as i64);
        let cfg = SimConfig { replications: 2, horizon: 1500, warmup: 500, seed: SEED + case as u64 };
        let demands = demand_path(&p, &cfg, 0).unwrap();
        let paths: Vec<Vec<(i64, i64, i64)>> = [-10, 0, 10]
            .iter()
            .map(|&s_fast| {
                let pol = Policy::DualIndex { s_fast, delta };
                let mut st = SimState::new(&p, &pol);
                demands.iter().map(|&d| {
                    let o = st.step(&p, &pol, d);
                    (o.overshoot, o.q_fast, o.q_slow)
                }).collect()
            })
            .collect();
        let mut chain = OvershootChain::new(delta, p.lead_diff()).unwrap();
        let mut rec = vec![chain.initial()];
        for &d in &demands[..demands.len() - 1] {
            rec.push(chain.step(d));
        }
        if paths[0] != paths[1] || paths[1] != paths[2] || paths[0] != rec {
            mismatches += 1;
        }
    }
    report(3, "separability", mismatches == 0, format!("{mismatches}/100 cases with differing paths"));
}

#[test]
fn criterion_04_flow_identities() {
    let inst = generate_instance(AssortmentType::A3, SEED, &Overrides { products: Some(100), ..Default::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x5eed);
    let cfg = SimConfig::desk(SEED);
    let n = f64::from(cfg.replications * cfg.horizon);
    let mut bad = Vec::new();
    for p in &inst.products {
        let mu = p.mean_demand();
        let l = f64::from(p.lead_diff());
        let delta = rng.random_range(0..=(l * mu * 1.5) as i64);
        let s_fast = rng.random_range(-(mu as i64)..=(2.0 * mu) as i64);
        let st = evaluate(&Policy::DualIndex { s_fast, delta }, p, &cfg).unwrap();
        let se_sum = (p.demand.variance() / n).sqrt();
        let flow_ok = (st.eq_fast + st.eq_slow - mu).abs() <= 3.0 * se_sum;
        let slow_ok = (st.eq_slow - (delta as f64 - st.e_overshoot) / l).abs() <= 3.0 * st.se_eq_slow.max(f64::EPSILON);
        if !(flow_ok && slow_ok) {
            bad.push(format!("p{} Δ={delta}: flows {:.3} vs {mu:.3}, EQ_s {:.3} vs {:.3}", p.id, st.eq_fast + st.eq_slow, st.eq_slow, (delta as f64 - st.e_overshoot) / l));
        }
    }
    report(4, "flow identities", bad.is_empty(), format!("{}/100 columns outside 3 SE {}", bad.len(), bad.join("; ")));
}

#[test]
fn criterion_05_knapsack_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let q = Rational64::from_integer;
    let (mut wrong, mut lp_above, mut multi_frac, mut lps) = (0, 0, 0, 0);
    for _ in 0..50 {
        let classes: Vec<Vec<Item<Rational64>>> = (0..rng.random_range(1..=6))
            .map(|_| {
                (0..rng.random_range(1..=5))
                    .map(|_| Item::new(q(rng.random_range(0..100)), q(rng.random_range(0..50))))
                    .collect()
            })
            .collect();
        let lo: Rational64 = classes.iter().map(|c| c.iter().map(|i| i.emission).min().unwrap()).sum();
        let hi: Rational64 = classes.iter().map(|c| c.iter().map(|i| i.emission).max().unwrap()).sum();
        for _ in 0..4 {
            let budget = lo + (hi - lo) * Rational64::new(rng.random_range(0..=97), 97);
            let lp = solve_lmckp(&classes, budget).unwrap();
            lps += 1;
            let int = branch_and_bound(&classes, budget, NODE_LIMIT).unwrap();
            let (_, best) = enumerate_best(&classes, budget).unwrap();
            wrong += usize::from(int.cost != best || !int.proven || int.emission > budget);
            lp_above += usize::from(lp.value > best);
            multi_frac += usize::from(lp.fractional_count() > 1);
        }
    }
    report(
        5,
        "knapsack exactness",
        wrong == 0 && lp_above == 0 && multi_frac == 0,
        format!("{lps} budgets: {wrong} integer mismatches, {lp_above} LP above optimum, {multi_frac} with >1 split"),
    );
}

#[test]
fn criterion_06_cg_quality() {
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut lines = Vec::new();
    for run in desk() {
        slowest = slowest.max(run.seconds);
        for res in &run.results {
            let g = res.dms.solution.gap_pct;
            worst = worst.max(g);
            lines.push(format!("{:?} r={}: {:.4}%", run.kind, res.r, g));
        }
    }
    report(6, "column generation gap", worst <= 0.5 && slowest <= 600.0, format!("max %GAP {worst:.4}, slowest type {slowest:.1}s; {}", lines.join(", ")));
}

#[test]
fn criterion_07_boundary_coincidence() {
    let mut bad = Vec::new();
    for run in desk() {
        for res in &run.results {
            let dms = res.dms_outcome();
            let pairs: &[(&str, f64, f64)] = if res.r == 1.0 {
                &[("SMS", res.sms.cost, res.sms.cost_ci), ("BMS", res.bms.cost, res.bms.cost_ci)]
            } else if res.r == 0.0 {
                &[("BMS", res.bms.cost, res.bms.cost_ci)]
            } else {
                &[]
            };
            for &(name, c, ci) in pairs {
                if (dms.cost - c).abs() > dms.cost_ci + ci {
                    bad.push(format!("{:?} r={} DMS {:.3} {name} {c:.3}", run.kind, res.r, dms.cost));
                }
            }
        }
    }
    report(7, "boundary coincidence", bad.is_empty(), if bad.is_empty() { "all within combined CI".into() } else { bad.join("; ") });
}

#[test]
fn criterion_08_dominance() {
    let mut bad = Vec::new();
    for run in desk() {
        for res in &run.results {
            let dms = res.dms_outcome();
            for other in [&res.sms, &res.bms] {
                if dms.cost > other.cost + dms.cost_ci + other.cost_ci {
                    bad.push(format!("{:?} r={} {:?}", run.kind, res.r, other.approach));
                }
            }
        }
    }
    report(8, "dominance", bad.is_empty(), format!("{} violations {}", bad.len(), bad.join("; ")));
}

#[test]
fn criterion_09_directional_figure() {
    let at_half: Vec<(f64, f64)> = desk()
        .iter()
        .map(|run| {
            let res = run.results.iter().find(|r| r.r == 0.5).unwrap();
            let ub = res.dms.solution.cost();
            (100.0 * (res.sms.cost - ub) / ub, 100.0 * (res.bms.cost - ub) / ub)
        })
        .collect();
    let ok = at_half.iter().all(|(s, _)| *s > 0.0) && at_half[1].1 > at_half[0].1;
    report(9, "directional reproduction", ok, format!("(%SMS, %BMS) per type at r=0.5: {at_half:.3?}"));
}

#[test]
fn criterion_10_monotone_lower_bound() {
    let mut bad = Vec::new();
    for run in desk() {
        let lbs: Vec<f64> = run.results.iter().map(|r| r.dms.solution.lb).collect();
        if lbs.windows(2).any(|w| w[0] > w[1]) {
            bad.push(format!("{:?}: {lbs:?}", run.kind));
        }
    }
    report(10, "lower bound monotone in target", bad.is_empty(), if bad.is_empty() { "nondecreasing for all types".into() } else { bad.join("; ") });
}

#[test]
fn criterion_11_copula() {
    let inst = generate_instance(AssortmentType::A1, SEED, &Overrides { products: Some(100_000), ..Default::default() }).unwrap();
    let mu: Vec<f64> = inst.products.iter().map(|p| p.mean_demand()).collect();
    let h: Vec<f64> = inst.products.iter().map(|p| p.holding).collect();
    let r = pearson(&mu, &h);
    let crit = ks_critical_1pct(mu.len());
    let ks_mu = ks_statistic(&mu, |x| DistSpec::Gamma { mean: 100.0, cv: 0.5 }.cdf(x));
    let ks_h = ks_statistic(&h, |x| DistSpec::Gamma { mean: 1.0, cv: 0.5 }.cdf(x));
    report(
        11,
        "copula",
        (r + 0.5).abs() <= 0.05 && ks_mu <= crit && ks_h <= crit,
        format!("pearson {r:.4}, KS mean demand {ks_mu:.5}, KS holding {ks_h:.5}, critical {crit:.5}"),
    );
}

#[test]
fn criterion_12_carbon_price_duality() {
    let mut bad = Vec::new();
    let mut lines = Vec::new();
    for run in desk() {
        for res in &run.results {
            let eta = res.dms.state.lp.eta;
            let priced = run.exp.carbon_price(-eta).unwrap();
            let target = res.dms.solution.emission();
            let rel = (priced.emission - target).abs() / target;
            lines.push(format!("{:?} r={} {:.2}%", run.kind, res.r, 100.0 * rel));
            if rel > 0.05 {
                bad.push(lines.last().unwrap().clone());
            }
        }
    }
    report(12, "carbon price duality", bad.is_empty(), lines.join(", "));
}
