//! Randomized, reproducible problem instances and emission targets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::emissions::{sample_emission_pair, AssortmentType};
use crate::error::{Error, Result};
use crate::model::ProductParams;
use crate::rand_dist::{CorrelatedPair, DistSpec, Domain, RngStream};

pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

/// Comparative-statics knobs; `None` keeps the base-case value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Overrides {
    /// Number of products `|J|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub products: Option<usize>,
    /// Coefficient of variation of the mean-demand law.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv_mean_demand: Option<f64>,
    /// Shift of the Beta law of the demand coefficient of variation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demand_cv_shift: Option<f64>,
    /// Copula correlation between mean demand and holding cost.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_demand_holding: Option<f64>,
    /// Penalty-to-holding multiplier `ψ_p`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_ratio: Option<f64>,
    /// Standard deviation of the fast-premium fraction `χ^c`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub premium_sd: Option<f64>,
    /// Slow lead time `l_s`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lead_slow: Option<u32>,
    /// Multiplier `δ_e` applied to `|e_s − e_f|`, cleaner mode held fixed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emission_gap_scale: Option<f64>,
}

/// Fully resolved generation parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestbedParams {
    pub products: usize,
    pub cv_mean_demand: f64,
    pub demand_cv_shift: f64,
    pub rho_demand_holding: f64,
    pub penalty_ratio: f64,
    pub premium_sd: f64,
    pub lead_slow: u32,
    pub emission_gap_scale: f64,
}

impl Default for TestbedParams {
    fn default() -> Self {
        Self {
            products: 100,
            cv_mean_demand: 0.5,
            demand_cv_shift: 0.3,
            rho_demand_holding: -0.5,
            penalty_ratio: 9.0,
            premium_sd: 0.1,
            lead_slow: 3,
            emission_gap_scale: 1.0,
        }
    }
}

impl Overrides {
    pub fn resolve(&self) -> Result<TestbedParams> {
        let d = TestbedParams::default();
        let p = TestbedParams {
            products: self.products.unwrap_or(d.products),
            cv_mean_demand: self.cv_mean_demand.unwrap_or(d.cv_mean_demand),
            demand_cv_shift: self.demand_cv_shift.unwrap_or(d.demand_cv_shift),
            rho_demand_holding: self.rho_demand_holding.unwrap_or(d.rho_demand_holding),
            penalty_ratio: self.penalty_ratio.unwrap_or(d.penalty_ratio),
            premium_sd: self.premium_sd.unwrap_or(d.premium_sd),
            lead_slow: self.lead_slow.unwrap_or(d.lead_slow),
            emission_gap_scale: self.emission_gap_scale.unwrap_or(d.emission_gap_scale),
        };
        if p.products == 0 {
            return Err(Error::param("products", "assortment must be nonempty"));
        }
        if !(p.cv_mean_demand.is_finite() && p.cv_mean_demand > 0.0) {
            return Err(Error::param("cv_mean_demand", "must be > 0"));
        }
        if !(p.demand_cv_shift.is_finite() && p.demand_cv_shift > 0.0) {
            return Err(Error::param("demand_cv_shift", "must be > 0"));
        }
        if !(p.rho_demand_holding.abs() < 1.0) {
            return Err(Error::param("rho_demand_holding", "must lie in (-1, 1)"));
        }
        if !(p.penalty_ratio.is_finite() && p.penalty_ratio > 0.0) {
            return Err(Error::param("penalty_ratio", "must be > 0"));
        }
        if !(p.premium_sd > 0.0 && p.premium_sd * p.premium_sd < PREMIUM_MEAN * (1.0 - PREMIUM_MEAN)) {
            return Err(Error::param("premium_sd", "must be > 0 with sd² < 0.25·0.75"));
        }
        if p.lead_slow < 1 {
            return Err(Error::param("lead_slow", "must be >= 1"));
        }
        if !(p.emission_gap_scale.is_finite() && p.emission_gap_scale >= 0.0) {
            return Err(Error::param("emission_gap_scale", "must be >= 0"));
        }
        Ok(p)
    }
}

const MEAN_DEMAND: f64 = 100.0;
const DEMAND_CV_MEAN: f64 = 0.9;
const DEMAND_CV_SD: f64 = 0.25;
const HOLDING_MEAN: f64 = 1.0;
const HOLDING_CV: f64 = 0.5;
const PENALTY_NOISE: DistSpec = DistSpec::ShiftedBeta { mean: 0.98, sd: 0.1, shift: 0.02 };
const PREMIUM_MEAN: f64 = 0.25;
/// Smallest admissible variance-to-mean ratio of generated demand.
pub const MIN_DISPERSION: f64 = 1.05;

/// A generated assortment together with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub version: u32,
    pub assortment_type: AssortmentType,
    pub seed: u64,
    pub overrides: Overrides,
    pub products: Vec<ProductParams>,
}

impl Instance {
    /// Wraps hand-built products, e.g. for tests or external data.
    pub fn from_products(assortment_type: AssortmentType, products: Vec<ProductParams>) -> Result<Self> {
        let inst = Self {
            version: INSTANCE_SCHEMA_VERSION,
            assortment_type,
            seed: 0,
            overrides: Overrides::default(),
            products,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != INSTANCE_SCHEMA_VERSION {
            return Err(Error::param("version", format!("unsupported instance version {}", self.version)));
        }
        if self.products.is_empty() {
            return Err(Error::param("products", "assortment must be nonempty"));
        }
        for (j, p) in self.products.iter().enumerate() {
            if p.id != j {
                return Err(Error::param(format!("products[{j}].id"), "ids must equal positions"));
            }
            p.validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(s)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Generates an instance; identical arguments give a bit-identical result.
///
/// Product `j` draws its demand, cost and holding parameters from its own
/// stream, and its emission units from a separate one, so the three
/// assortment types share everything except emissions under a common seed.
pub fn generate_instance(kind: AssortmentType, seed: u64, overrides: &Overrides) -> Result<Instance> {
    let params = overrides.resolve()?;
    let copula = CorrelatedPair::new(
        DistSpec::Gamma { mean: MEAN_DEMAND, cv: params.cv_mean_demand },
        DistSpec::Gamma { mean: HOLDING_MEAN, cv: HOLDING_CV },
        params.rho_demand_holding,
    )?;
    let demand_cv = DistSpec::ShiftedBeta {
        mean: DEMAND_CV_MEAN,
        sd: DEMAND_CV_SD,
        shift: params.demand_cv_shift,
    }
    .sampler()?;
    let penalty_noise = PENALTY_NOISE.sampler()?;
    let premium = DistSpec::ShiftedBeta { mean: PREMIUM_MEAN, sd: params.premium_sd, shift: 0.0 }.sampler()?;

    let lead_fast = 0;
    let lead_slow = params.lead_slow;
    let lead_diff = f64::from(lead_slow - lead_fast);

    let products = (0..params.products)
        .map(|j| {
            let mut rng = RngStream::derive(seed, Domain::Instance, j as u64, 0).rng();
            let (mean, holding) = copula.sample(&mut rng)?;
            let cv_raw = demand_cv.sample(&mut rng);
            let penalty = params.penalty_ratio * penalty_noise.sample(&mut rng) * holding;
            let cost_fast = premium.sample(&mut rng) * penalty * lead_diff;
            let cv = cv_raw.max((MIN_DISPERSION / mean).sqrt());

            let mut erng = RngStream::derive(seed, Domain::Emission, j as u64, 0).rng();
            let (mut e_s, mut e_f) = sample_emission_pair(kind, &mut erng);
            let scale = params.emission_gap_scale;
            if scale != 1.0 {
                let clean = e_s.min(e_f);
                let dirty = clean + scale * (e_s - e_f).abs();
                if e_s > e_f {
                    e_s = dirty;
                } else {
                    e_f = dirty;
                }
            }

            Ok(ProductParams {
                id: j,
                demand: DistSpec::NegBinomial { mean, cv },
                holding,
                penalty,
                cost_slow: 0.0,
                cost_fast,
                lead_slow,
                lead_fast,
                emission_slow: e_s,
                emission_fast: e_f,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let inst = Instance {
        version: INSTANCE_SCHEMA_VERSION,
        assortment_type: kind,
        seed,
        overrides: overrides.clone(),
        products,
    };
    inst.validate()?;
    Ok(inst)
}

/// Per-product emission rates needed to place the assortment-wide target.
pub trait EmissionBounds {
    /// Emission rate of the product's cost-optimal policy without any cap.
    fn unconstrained_emission(&self, product: usize) -> f64;
    /// Lowest achievable emission rate of the product.
    fn min_emission(&self, product: usize) -> f64;
}

impl EmissionBounds for [(f64, f64)] {
    fn unconstrained_emission(&self, product: usize) -> f64 {
        self[product].0
    }
    fn min_emission(&self, product: usize) -> f64 {
        self[product].1
    }
}

/// Emission cap placed a fraction `reduction` of the way from the
/// unconstrained emissions down to the minimum achievable emissions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub reduction: f64,
    pub e_max: f64,
    pub e_min: f64,
    pub e_unconstrained: f64,
}

impl TargetSpec {
    pub fn reducible(&self) -> f64 {
        self.e_unconstrained - self.e_min
    }

    /// Places `e_max` between the two anchors, exact at both ends.
    pub fn between(e_unconstrained: f64, e_min: f64, reduction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&reduction) {
            return Err(Error::param("reduction", format!("must lie in [0, 1], got {reduction}")));
        }
        let tol = 1e-12 * e_min.abs().max(1.0);
        let e_unconstrained = if e_unconstrained < e_min - tol {
            e_min // degenerate: nothing reducible
        } else {
            e_unconstrained.max(e_min)
        };
        let e_max = if reduction == 0.0 {
            e_unconstrained
        } else if reduction == 1.0 {
            e_min
        } else {
            (e_unconstrained - reduction * (e_unconstrained - e_min)).clamp(e_min, e_unconstrained)
        };
        Ok(Self { reduction, e_max, e_min, e_unconstrained })
    }
}

/// Resolves the emission cap for `instance` at reduction fraction `r`.
pub fn resolve_target<B: EmissionBounds + ?Sized>(instance: &Instance, r: f64, bounds: &B) -> Result<TargetSpec> {
    let n = instance.products.len();
    let e_unc: f64 = (0..n).map(|j| bounds.unconstrained_emission(j)).sum();
    let e_min: f64 = (0..n).map(|j| bounds.min_emission(j)).sum();
    TargetSpec::between(e_unc, e_min, r)
}
