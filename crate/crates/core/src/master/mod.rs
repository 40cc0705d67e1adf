//! Restricted master problem: the linear multiple-choice knapsack over the
//! column pool, its integer counterpart, and the column generation loop.

mod bnb;
mod cg;
mod lp;

pub use bnb::{branch_and_bound, enumerate_best, IntegerSolution, NODE_LIMIT};
pub use cg::{
    init_pool, run_column_generation, solve_integer, solve_rmp_lp, write_iteration_log, CgConfig, CgSolution,
    IterationLog, MasterState,
};
pub use lp::{solve_lmckp, Item, LpSolution};
