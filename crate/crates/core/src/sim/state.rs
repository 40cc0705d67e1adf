use std::collections::VecDeque;

use super::policy::Policy;
use crate::error::{Error, Result};
use crate::model::ProductParams;

/// What happened in one simulated period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodOutcome {
    pub demand: i64,
    pub q_fast: i64,
    pub q_slow: i64,
    pub overshoot: i64,
    /// Net inventory after this period's arrivals, before demand.
    pub net_inventory: i64,
    pub holding_cost: f64,
    pub backlog_cost: f64,
    pub order_cost: f64,
}

impl PeriodOutcome {
    pub fn total_cost(&self) -> f64 {
        self.holding_cost + self.backlog_cost + self.order_cost
    }
}

/// Inventory state of one product between periods.
///
/// `fast_pipeline[k]` and `slow_pipeline[k]` hold the orders arriving `k`
/// periods from now; their lengths equal the mode lead times.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: u64,
    /// Net inventory carried into the period, before arrivals.
    pub net_inventory: i64,
    pub fast_pipeline: VecDeque<i64>,
    pub slow_pipeline: VecDeque<i64>,
    pub overshoot: i64,
}

impl SimState {
    /// Empty pipelines, zero overshoot, and net inventory at the policy's
    /// governing base-stock level.
    pub fn new(product: &ProductParams, policy: &Policy) -> Self {
        let start = policy.fast_level().or(policy.slow_level()).unwrap_or(0);
        Self {
            t: 0,
            net_inventory: start,
            fast_pipeline: VecDeque::from(vec![0; product.lead_fast as usize]),
            slow_pipeline: VecDeque::from(vec![0; product.lead_slow as usize]),
            overshoot: 0,
        }
    }

    /// Executes one period: arrivals, fast order, slow order, demand, costs.
    pub fn step(&mut self, product: &ProductParams, policy: &Policy, demand: i64) -> PeriodOutcome {
        let lf = product.lead_fast as usize;

        // 1. arrivals
        if let Some(q) = self.fast_pipeline.pop_front() {
            self.net_inventory += q;
        }
        if let Some(q) = self.slow_pipeline.pop_front() {
            self.net_inventory += q;
        }

        // 2. fast order against the fast inventory position
        let fast_position = self.net_inventory
            + self.fast_pipeline.iter().sum::<i64>()
            + self.slow_pipeline.iter().take(lf).sum::<i64>();
        let (q_fast, overshoot) = match policy.fast_level() {
            Some(s_fast) => {
                let q = (s_fast - fast_position).max(0);
                (q, fast_position + q - s_fast)
            }
            None => (0, 0),
        };
        if lf == 0 {
            self.net_inventory += q_fast;
        } else {
            self.fast_pipeline.push_back(q_fast);
        }

        // 3. slow order against the full inventory position
        let q_slow = match policy.slow_level() {
            Some(s_slow) => {
                let position = self.net_inventory
                    + self.fast_pipeline.iter().sum::<i64>()
                    + self.slow_pipeline.iter().sum::<i64>();
                s_slow - position
            }
            None => 0,
        };
        if product.lead_slow == 0 {
            self.net_inventory += q_slow;
        } else {
            self.slow_pipeline.push_back(q_slow);
        }

        // 4-5. demand and period costs
        let on_hand = self.net_inventory;
        let end = on_hand - demand;
        let outcome = PeriodOutcome {
            demand,
            q_fast,
            q_slow,
            overshoot,
            net_inventory: on_hand,
            holding_cost: product.holding * end.max(0) as f64,
            backlog_cost: product.penalty * (-end).max(0) as f64,
            order_cost: product.cost_fast * q_fast as f64 + product.cost_slow * q_slow as f64,
        };
        self.net_inventory = end;
        self.overshoot = overshoot;
        self.t += 1;
        outcome
    }
}

/// The overshoot process of a dual-index policy, tracked without reference
/// to the fast base-stock level.
///
/// Holds the overshoot and the last `l = l_s − l_f` slow orders (oldest
/// first). Starts from the state a [`SimState`] reaches after period 0:
/// zero overshoot, no fast order, and a slow order of `delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct OvershootChain {
    pub overshoot: i64,
    pub slow_window: VecDeque<i64>,
}

impl OvershootChain {
    pub fn new(delta: i64, lead_diff: u32) -> Result<Self> {
        if lead_diff == 0 {
            return Err(Error::Precondition(
                "overshoot recursion needs a positive lead-time difference".into(),
            ));
        }
        if delta < 0 {
            return Err(Error::param("delta", "must be >= 0"));
        }
        let mut slow_window = VecDeque::from(vec![0; lead_diff as usize]);
        *slow_window.back_mut().expect("nonempty") = delta;
        Ok(Self { overshoot: 0, slow_window })
    }

    /// `(O, Q_f, Q_s)` of period 0.
    pub fn initial(&self) -> (i64, i64, i64) {
        (self.overshoot, 0, *self.slow_window.back().expect("nonempty"))
    }

    /// Consumes the demand of the current period and returns `(O, Q_f, Q_s)`
    /// of the next one.
    pub fn step(&mut self, demand: i64) -> (i64, i64, i64) {
        overshoot_recursion_step(&mut self.overshoot, &mut self.slow_window, demand)
    }
}

/// One transition of the overshoot recursion: the oldest window order enters
/// the fast horizon, the overshoot absorbs demand, the fast mode covers any
/// deficit and the slow mode reorders the rest of the demand.
pub fn overshoot_recursion_step(overshoot: &mut i64, slow_window: &mut VecDeque<i64>, demand: i64) -> (i64, i64, i64) {
    let entering = slow_window.pop_front().expect("window length is the lead-time difference");
    let level = *overshoot + entering - demand;
    let next_overshoot = level.max(0);
    let q_fast = (-level).max(0);
    let q_slow = demand - q_fast;
    slow_window.push_back(q_slow);
    *overshoot = next_overshoot;
    (next_overshoot, q_fast, q_slow)
}
