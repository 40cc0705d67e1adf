//! Single-mode newsvendor evaluation and the two benchmark approaches.

mod exact;
mod selection;

pub use exact::{convolved_demand, exact_single_mode, neg_binomial_pmf, newsvendor_parts, SingleModeEval};
pub use selection::{product_caps, solve_bms, solve_sms, BenchmarkSolution};
