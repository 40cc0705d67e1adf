//! Randomized invariants across sampling, simulation and the master LP.

use dms_core::benchmarks::{neg_binomial_pmf, newsvendor_parts};
use dms_core::master::{branch_and_bound, enumerate_best, solve_lmckp, Item, NODE_LIMIT};
use dms_core::rand_dist::DistSpec;
use dms_core::sim::SimState;
use dms_core::{Policy, ProductParams};
use num_rational::Rational64;
use proptest::prelude::*;

fn run(p: &ProductParams, pol: &Policy, demands: &[i64]) -> Vec<dms_core::sim::PeriodOutcome> {
    let mut s = SimState::new(p, pol);
    demands.iter().map(|&d| s.step(p, pol, d)).collect()
}

fn product(mean: f64, cv: f64) -> ProductParams {
    ProductParams {
        id: 0,
        demand: DistSpec::NegBinomial { mean, cv },
        holding: 1.0,
        penalty: 9.0,
        cost_slow: 0.0,
        cost_fast: 2.0,
        lead_slow: 3,
        lead_fast: 0,
        emission_slow: 0.4,
        emission_fast: 5.0,
    }
}

fn lead_pair() -> impl Strategy<Value = (u32, u32)> {
    (0u32..3, 1u32..4).prop_map(|(lf, gap)| (lf, lf + gap))
}

fn rational_classes() -> impl Strategy<Value = Vec<Vec<Item<Rational64>>>> {
    let item = (0i64..60, 0i64..40).prop_map(|(c, e)| Item::new(Rational64::from(c), Rational64::from(e)));
    prop::collection::vec(prop::collection::vec(item, 1..5), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nb_quantile_brackets_probability(mean in 1.0f64..300.0, extra in 0.05f64..1.5, q in 0.01f64..0.99) {
        let cv = (1.0 / mean).sqrt() + extra;
        let d = DistSpec::NegBinomial { mean, cv };
        let x = d.quantile(q).unwrap();
        prop_assert!(d.cdf(x) >= q - 1e-12);
        prop_assert!(x == 0.0 || d.cdf(x - 1.0) < q + 1e-12);
    }

    #[test]
    fn gamma_quantile_round_trips(mean in 0.5f64..50.0, cv in 0.1f64..2.0, q in 0.001f64..0.999) {
        let d = DistSpec::Gamma { mean, cv };
        let x = d.quantile(q).unwrap();
        prop_assert!((d.cdf(x) - q).abs() < 1e-8);
    }

    #[test]
    fn newsvendor_parts_balance(mean in 2.0f64..80.0, s in 0i64..200) {
        let cv = (1.2 / mean).sqrt() + 0.3;
        let (r, p) = DistSpec::neg_binomial_params(mean, cv);
        let pmf: Vec<f64> = neg_binomial_pmf(r, p, 4000);
        let (over, under) = newsvendor_parts(&pmf, s, mean);
        prop_assert!(over >= 0.0 && under >= 0.0);
        prop_assert!((over - under - (s as f64 - mean)).abs() < 1e-6);
    }

    #[test]
    fn lmckp_duality_and_single_split(classes in rational_classes(), slack in 0i64..80) {
        let floor: Rational64 = classes
            .iter()
            .map(|c| c.iter().map(|it| it.emission).min().unwrap())
            .sum();
        let budget = floor + Rational64::from(slack);
        let lp = solve_lmckp(&classes, budget).unwrap();
        prop_assert!(lp.fractional_count() <= 1);
        prop_assert!(lp.eta <= Rational64::from(0));
        prop_assert!(lp.emission <= budget);
        let dual: Rational64 = lp.upsilon.iter().copied().sum::<Rational64>() + lp.eta * budget;
        prop_assert_eq!(dual, lp.value);
        for (w, c) in lp.weights.iter().zip(&classes) {
            prop_assert_eq!(w.iter().copied().sum::<Rational64>(), Rational64::from(1));
            prop_assert_eq!(w.len(), c.len());
        }
        let (_, best) = enumerate_best(&classes, budget).unwrap();
        prop_assert!(lp.value <= best);
    }

    #[test]
    fn bnb_matches_enumeration(classes in rational_classes(), slack in 0i64..80) {
        let floor: Rational64 = classes
            .iter()
            .map(|c| c.iter().map(|it| it.emission).min().unwrap())
            .sum();
        let budget = floor + Rational64::from(slack);
        let got = branch_and_bound(&classes, budget, NODE_LIMIT).unwrap();
        let (_, best) = enumerate_best(&classes, budget).unwrap();
        prop_assert!(got.proven);
        prop_assert_eq!(got.cost, best);
        prop_assert!(got.emission <= budget);
    }

    #[test]
    fn zero_delta_is_fast_only(
        (lf, ls) in lead_pair(),
        s_fast in -10i64..40,
        demands in prop::collection::vec(0i64..25, 1..60),
    ) {
        let p = ProductParams { lead_fast: lf, lead_slow: ls, ..product(10.0, 0.6) };
        let dual = run(&p, &Policy::DualIndex { s_fast, delta: 0 }, &demands);
        let fast = run(&p, &Policy::FastOnly { s_fast }, &demands);
        prop_assert_eq!(dual, fast);
    }

    #[test]
    fn orders_replace_demand(
        (lf, ls) in lead_pair(),
        s_fast in -10i64..40,
        delta in 0i64..30,
        demands in prop::collection::vec(0i64..25, 2..60),
    ) {
        let p = ProductParams { lead_fast: lf, lead_slow: ls, ..product(10.0, 0.6) };
        let out = run(&p, &Policy::DualIndex { s_fast, delta }, &demands);
        let ordered: i64 = out.iter().map(|o| o.q_fast + o.q_slow).sum();
        let replaced: i64 = demands[..demands.len() - 1].iter().sum();
        prop_assert!(out.iter().all(|o| o.q_fast >= 0 && o.q_slow >= 0 && o.overshoot >= 0));
        prop_assert_eq!(ordered, delta + replaced);
    }

    #[test]
    fn backlog_falls_as_fast_level_rises(
        (lf, ls) in lead_pair(),
        s_fast in -10i64..30,
        step in 1i64..10,
        delta in 0i64..20,
        demands in prop::collection::vec(0i64..25, 1..60),
    ) {
        let p = ProductParams { lead_fast: lf, lead_slow: ls, ..product(10.0, 0.6) };
        let backlog = |s: i64| -> Vec<i64> {
            run(&p, &Policy::DualIndex { s_fast: s, delta }, &demands)
                .iter()
                .map(|o| (o.demand - o.net_inventory).max(0))
                .collect()
        };
        let (lo, hi) = (backlog(s_fast), backlog(s_fast + step));
        prop_assert!(lo.iter().zip(&hi).all(|(a, b)| b <= a));
    }
}
