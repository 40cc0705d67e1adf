use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::lp::{solve_lmckp, Item, LpSolution};
use crate::error::{Error, Result};
use crate::num::Scalar;

/// Best integer assignment found by [`branch_and_bound`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerSolution<T> {
    /// Chosen item per class.
    pub choice: Vec<usize>,
    pub cost: T,
    pub emission: T,
    pub nodes: usize,
    /// False when the node limit stopped the search early.
    pub proven: bool,
}

/// Default cap on explored nodes.
pub const NODE_LIMIT: usize = 200_000;

struct Node<T> {
    bound: f64,
    seq: usize,
    fixed: Vec<Option<usize>>,
    lp: LpSolution<T>,
}

impl<T> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Node<T> {}
impl<T> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Node<T> {
    // Max-heap on the negated bound, so the smallest bound pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

fn totals<T: Scalar>(classes: &[Vec<Item<T>>], choice: &[usize]) -> (T, T) {
    classes.iter().zip(choice).fold((T::zero(), T::zero()), |(c, e), (items, &k)| {
        (c + items[k].cost, e + items[k].emission)
    })
}

fn restricted_lp<T: Scalar>(classes: &[Vec<Item<T>>], fixed: &[Option<usize>], budget: T) -> Result<LpSolution<T>> {
    let sub: Vec<Vec<Item<T>>> = classes
        .iter()
        .zip(fixed)
        .map(|(items, f)| match f {
            Some(k) => vec![items[*k]],
            None => items.clone(),
        })
        .collect();
    let mut lp = solve_lmckp(&sub, budget)?;
    for (j, f) in fixed.iter().enumerate() {
        if let Some(k) = *f {
            let mut w = vec![T::zero(); classes[j].len()];
            w[k] = T::one();
            lp.weights[j] = w;
        }
    }
    Ok(lp)
}

/// Rounds the split class of an LP solution to its cleaner endpoint.
fn round_down<T: Scalar>(classes: &[Vec<Item<T>>], lp: &LpSolution<T>) -> Vec<usize> {
    lp.weights
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let used = (0..w.len()).filter(|&k| w[k] > T::zero());
            used.min_by(|&a, &b| {
                classes[j][a].emission.partial_cmp(&classes[j][b].emission).expect("comparable")
            })
            .expect("class has positive weight")
        })
        .collect()
}

/// Exact multiple-choice knapsack: one item per class, total emission within
/// `budget`, minimum total cost. Branches on the split class of each LP
/// relaxation and explores nodes best bound first.
pub fn branch_and_bound<T: Scalar>(classes: &[Vec<Item<T>>], budget: T, node_limit: usize) -> Result<IntegerSolution<T>> {
    let root = solve_lmckp(classes, budget)?;
    let mut best = round_down(classes, &root);
    let (mut best_cost, mut best_emission) = totals(classes, &best);
    if best_emission > budget {
        return Err(Error::Infeasible("rounded root solution exceeds budget".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let mut nodes = 1;
    let mut proven = true;
    if root.fractional.is_some() && root.value < best_cost {
        heap.push(Node { bound: root.value.to_f64_lossy(), seq, fixed: vec![None; classes.len()], lp: root });
    }
    while let Some(node) = heap.pop() {
        if node.lp.value >= best_cost {
            continue;
        }
        let j = node.lp.fractional.expect("only split nodes are queued");
        for k in 0..classes[j].len() {
            if nodes >= node_limit {
                proven = false;
                heap.clear();
                break;
            }
            nodes += 1;
            let mut fixed = node.fixed.clone();
            fixed[j] = Some(k);
            let lp = match restricted_lp(classes, &fixed, budget) {
                Ok(lp) => lp,
                Err(Error::Infeasible(_)) => continue,
                Err(e) => return Err(e),
            };
            if lp.value >= best_cost {
                continue;
            }
            let rounded = round_down(classes, &lp);
            let (c, e) = totals(classes, &rounded);
            if e <= budget && c < best_cost {
                best = rounded;
                best_cost = c;
                best_emission = e;
            }
            if lp.fractional.is_some() && lp.value < best_cost {
                seq += 1;
                heap.push(Node { bound: lp.value.to_f64_lossy(), seq, fixed, lp });
            }
        }
    }
    Ok(IntegerSolution { choice: best, cost: best_cost, emission: best_emission, nodes, proven })
}

/// Exhaustive search over all assignments; for tests and tiny instances.
pub fn enumerate_best<T: Scalar>(classes: &[Vec<Item<T>>], budget: T) -> Option<(Vec<usize>, T)> {
    let mut choice = vec![0usize; classes.len()];
    let mut best: Option<(Vec<usize>, T)> = None;
    loop {
        let (c, e) = totals(classes, &choice);
        if e <= budget && best.as_ref().is_none_or(|(_, b)| c < *b) {
            best = Some((choice.clone(), c));
        }
        let mut j = 0;
        loop {
            if j == classes.len() {
                return best;
            }
            choice[j] += 1;
            if choice[j] < classes[j].len() {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
    }
}
