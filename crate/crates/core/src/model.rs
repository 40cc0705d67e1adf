use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rand_dist::DistSpec;

/// One of the two transport modes available to every product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShipMode {
    Slow,
    Fast,
}

/// Demand law, costs, lead times and emission units of a single product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductParams {
    pub id: usize,
    /// Per-period demand; integer valued (negative binomial or degenerate).
    pub demand: DistSpec,
    /// Holding cost per unit on hand at period end.
    pub holding: f64,
    /// Backlog penalty per unit short at period end.
    pub penalty: f64,
    pub cost_slow: f64,
    pub cost_fast: f64,
    pub lead_slow: u32,
    pub lead_fast: u32,
    /// kg CO₂ per unit shipped slow.
    pub emission_slow: f64,
    /// kg CO₂ per unit shipped fast.
    pub emission_fast: f64,
}

impl ProductParams {
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str| format!("products[{}].{name}", self.id);
        match self.demand {
            DistSpec::NegBinomial { .. } => self.demand.validate()?,
            DistSpec::Deterministic { value } if value >= 0.0 && value.fract() == 0.0 => {}
            _ => {
                return Err(Error::param(
                    field("demand"),
                    "demand must be negative binomial or a nonnegative integer constant",
                ))
            }
        }
        for (name, v) in [("holding", self.holding), ("penalty", self.penalty)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(field(name), format!("must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("cost_slow", self.cost_slow),
            ("cost_fast", self.cost_fast),
            ("emission_slow", self.emission_slow),
            ("emission_fast", self.emission_fast),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(field(name), format!("must be >= 0, got {v}")));
            }
        }
        if self.lead_slow < self.lead_fast {
            return Err(Error::param(field("lead_slow"), "slow lead time must be >= fast lead time"));
        }
        Ok(())
    }

    /// Lead-time difference `l_s − l_f`.
    pub fn lead_diff(&self) -> u32 {
        self.lead_slow - self.lead_fast
    }

    pub fn mean_demand(&self) -> f64 {
        self.demand.mean()
    }

    pub fn critical_ratio(&self) -> f64 {
        self.penalty / (self.penalty + self.holding)
    }

    pub fn unit_cost(&self, mode: ShipMode) -> f64 {
        match mode {
            ShipMode::Slow => self.cost_slow,
            ShipMode::Fast => self.cost_fast,
        }
    }

    pub fn unit_emission(&self, mode: ShipMode) -> f64 {
        match mode {
            ShipMode::Slow => self.emission_slow,
            ShipMode::Fast => self.emission_fast,
        }
    }

    pub fn lead_time(&self, mode: ShipMode) -> u32 {
        match mode {
            ShipMode::Slow => self.lead_slow,
            ShipMode::Fast => self.lead_fast,
        }
    }

    /// Mode with the lower emission per unit; slow on ties.
    pub fn least_polluting_mode(&self) -> ShipMode {
        if self.emission_fast < self.emission_slow {
            ShipMode::Fast
        } else {
            ShipMode::Slow
        }
    }

    /// `min(e_s, e_f) · E[D]`.
    pub fn min_emission_rate(&self) -> f64 {
        self.unit_emission(self.least_polluting_mode()) * self.mean_demand()
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::product;
    use super::*;

    #[test]
    fn validation_names_offending_field() {
        let mut p = product(10.0, 0.5);
        p.holding = 0.0;
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("products[0].holding"), "{err}");

        let mut p = product(10.0, 0.5);
        p.lead_fast = 4;
        assert!(p.validate().is_err());
    }

    #[test]
    fn least_polluting() {
        let mut p = product(10.0, 0.5);
        assert_eq!(p.least_polluting_mode(), ShipMode::Slow);
        assert!((p.min_emission_rate() - 4.0).abs() < 1e-12);
        p.emission_fast = 0.1;
        assert_eq!(p.least_polluting_mode(), ShipMode::Fast);
    }
}
