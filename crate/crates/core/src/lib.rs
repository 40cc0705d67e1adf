//! Carbon-constrained dual-mode inventory control for multi-product
//! assortments.
//!
//! Each product replenishes through a slow, cheap channel and a fast,
//! expensive one under a dual-index policy. A single cap on the assortment's
//! transport emissions couples the products; [`master`] handles that cap by
//! column generation over simulation-evaluated policies produced by
//! [`subproblem`]. [`benchmarks`] provides static and per-product-cap
//! alternatives and [`harness`] runs target sweeps over all three.

pub mod benchmarks;
pub mod emissions;
pub mod error;
pub mod harness;
pub mod master;
pub mod model;
pub mod num;
pub mod rand_dist;
pub mod sim;
pub mod stats;
pub mod subproblem;
pub mod testbed;

pub use emissions::{AssortmentType, TransportMode};
pub use error::{Error, Result};
pub use model::{ProductParams, ShipMode};
pub use sim::{ColumnStats, Policy, SimConfig};
pub use subproblem::{Column, DualPrices, Pricer, PricerSet, SearchConfig};
pub use testbed::{generate_instance, Instance, Overrides, TargetSpec};

/// Knapsack item with floating-point coefficients.
pub type ItemF64 = master::Item<f64>;
/// Knapsack item with exact rational coefficients.
pub type ItemExact = master::Item<num_rational::Rational64>;
pub type LpSolutionF64 = master::LpSolution<f64>;
pub type LpSolutionExact = master::LpSolution<num_rational::Rational64>;
pub type IntegerSolutionF64 = master::IntegerSolution<f64>;
pub type IntegerSolutionExact = master::IntegerSolution<num_rational::Rational64>;
pub type EmissionCoeffsF64 = emissions::EmissionCoeffs<f64>;
pub type TripSpecF64 = emissions::TripSpec<f64>;
