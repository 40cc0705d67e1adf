use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Cost and emission coefficients of one column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Item<T> {
    pub cost: T,
    pub emission: T,
}

impl<T> Item<T> {
    pub fn new(cost: T, emission: T) -> Self {
        Self { cost, emission }
    }
}

/// Optimum of the linear multiple-choice knapsack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution<T> {
    /// `weights[j][k]` is the share of class `j` assigned to item `k`.
    pub weights: Vec<Vec<T>>,
    /// Dual of the budget row; `<= 0`.
    pub eta: T,
    /// Duals of the convexity rows.
    pub upsilon: Vec<T>,
    pub value: T,
    pub emission: T,
    /// Class split across two items, if any.
    pub fractional: Option<usize>,
}

impl<T: Scalar> LpSolution<T> {
    /// Number of classes with more than one positive weight.
    pub fn fractional_count(&self) -> usize {
        self.weights
            .iter()
            .filter(|w| w.iter().filter(|&&x| x > T::zero()).count() > 1)
            .count()
    }

    /// Item index per class when the solution is integral.
    pub fn integral_choice(&self) -> Option<Vec<usize>> {
        self.weights
            .iter()
            .map(|w| w.iter().position(|&x| x == T::one()))
            .collect()
    }
}

/// Lower convex hull of a class, walked from its cleanest item towards its
/// cheapest. Returns item indices.
fn hull<T: Scalar>(items: &[Item<T>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&items[a], &items[b]);
        x.emission
            .partial_cmp(&y.emission)
            .expect("comparable emission")
            .then(x.cost.partial_cmp(&y.cost).expect("comparable cost"))
            .then(a.cmp(&b))
    });
    let mut out: Vec<usize> = Vec::new();
    for k in order {
        let p = items[k];
        if let Some(&last) = out.last() {
            // Dominated: no cheaper than the previous hull point.
            if p.cost >= items[last].cost {
                continue;
            }
        }
        while out.len() >= 2 {
            let a = items[out[out.len() - 2]];
            let b = items[out[out.len() - 1]];
            // Drop b unless it lies strictly below segment a → p.
            let cross = (b.emission - a.emission) * (p.cost - a.cost) - (b.cost - a.cost) * (p.emission - a.emission);
            if cross <= T::zero() {
                out.pop();
            } else {
                break;
            }
        }
        out.push(k);
    }
    out
}

/// Solves `min Σ c·x` subject to `Σ e·x <= budget`, one unit of weight per
/// class, by the greedy walk along per-class convex hulls.
///
/// Segments are taken in order of cost saved per unit of extra emission;
/// ties go to the lower class index.
pub fn solve_lmckp<T: Scalar>(classes: &[Vec<Item<T>>], budget: T) -> Result<LpSolution<T>> {
    if classes.iter().any(|c| c.is_empty()) {
        return Err(Error::Precondition("every product needs at least one column".into()));
    }
    let hulls: Vec<Vec<usize>> = classes.iter().map(|c| hull(c)).collect();
    let mut pos = vec![0usize; classes.len()];
    let mut emission = T::zero();
    for (c, h) in classes.iter().zip(&hulls) {
        emission = emission + c[h[0]].emission;
    }
    if emission > budget {
        return Err(Error::Infeasible(format!(
            "cleanest columns emit {:?} > budget {:?}",
            emission.to_f64_lossy(),
            budget.to_f64_lossy()
        )));
    }
    let mut lambda = T::zero();
    let mut split: Option<(usize, T)> = None;
    loop {
        // Best next segment across classes; first class wins ties.
        let mut best: Option<(usize, T)> = None;
        for (j, h) in hulls.iter().enumerate() {
            if pos[j] + 1 < h.len() {
                let a = classes[j][h[pos[j]]];
                let b = classes[j][h[pos[j] + 1]];
                let rate = (a.cost - b.cost) / (b.emission - a.emission);
                if best.is_none_or(|(_, r)| rate > r) {
                    best = Some((j, rate));
                }
            }
        }
        let Some((j, rate)) = best else { break };
        let a = classes[j][hulls[j][pos[j]]];
        let b = classes[j][hulls[j][pos[j] + 1]];
        let extra = b.emission - a.emission;
        let room = budget - emission;
        if extra <= room {
            emission = emission + extra;
            pos[j] += 1;
        } else {
            lambda = rate;
            let theta = room / extra;
            if theta > T::zero() {
                emission = emission + theta * extra;
                split = Some((j, theta));
            }
            break;
        }
    }

    let mut weights: Vec<Vec<T>> = classes.iter().map(|c| vec![T::zero(); c.len()]).collect();
    let mut value = T::zero();
    for (j, h) in hulls.iter().enumerate() {
        let here = h[pos[j]];
        match split {
            Some((s, theta)) if s == j => {
                let next = h[pos[j] + 1];
                weights[j][here] = T::one() - theta;
                weights[j][next] = theta;
                value = value + (T::one() - theta) * classes[j][here].cost + theta * classes[j][next].cost;
            }
            _ => {
                weights[j][here] = T::one();
                value = value + classes[j][here].cost;
            }
        }
    }
    let upsilon = classes
        .iter()
        .map(|c| {
            c.iter()
                .map(|it| it.cost + lambda * it.emission)
                .reduce(|a, b| a.min_of(b))
                .expect("nonempty class")
        })
        .collect();
    Ok(LpSolution { weights, eta: -lambda, upsilon, value, emission, fractional: split.map(|(j, _)| j) })
}
