//! Discrete-time simulation of one product under a shipping policy.

mod evaluate;
mod policy;
mod state;

pub use evaluate::{demand_path, evaluate, trace, write_trace_csv, ColumnStats, SimConfig, TraceRow, MAX_CI_REL};
pub use policy::Policy;
pub use state::{overshoot_recursion_step, OvershootChain, PeriodOutcome, SimState};
