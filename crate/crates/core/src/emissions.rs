//! Per-unit transport emissions following the NTM methodology, and the
//! emission-unit laws of the three assortment types.

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rand_dist::DistSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMode {
    Sea,
    Air,
    Road,
}

/// `e = w · (a + b · d)` in kg CO₂ per unit, with `a` in kg CO₂/kg and `b`
/// in kg CO₂/(kg·km).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmissionCoeffs<T> {
    pub fixed: T,
    pub per_km: T,
}

impl<T: Float> EmissionCoeffs<T> {
    pub fn new(fixed: T, per_km: T) -> Result<Self> {
        if !(fixed >= T::zero()) {
            return Err(Error::param("fixed", "fixed term must be >= 0"));
        }
        if !(per_km > T::zero()) {
            return Err(Error::param("per_km", "variable term must be > 0"));
        }
        Ok(Self { fixed, per_km })
    }

    pub fn per_unit(&self, distance_km: T, unit_weight_kg: T) -> T {
        unit_weight_kg * (self.fixed + self.per_km * distance_km)
    }
}

impl TransportMode {
    /// NTM constants: container sea freight, A310-300F air cargo at 65% load,
    /// and European road haulage.
    pub fn coeffs<T: Float>(self) -> EmissionCoeffs<T> {
        let c = |x: f64| T::from(x).expect("constant fits scalar");
        match self {
            TransportMode::Sea => EmissionCoeffs { fixed: T::zero(), per_km: c(1.996e-5) },
            TransportMode::Air => EmissionCoeffs { fixed: c(1.525e-1), per_km: c(4.938e-4) },
            TransportMode::Road => EmissionCoeffs { fixed: c(3.214e-4), per_km: c(4.836e-5) },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripSpec<T> {
    pub mode: TransportMode,
    pub distance_km: T,
    pub unit_weight_kg: T,
}

impl<T: Float> TripSpec<T> {
    pub fn new(mode: TransportMode, distance_km: T, unit_weight_kg: T) -> Result<Self> {
        if !(distance_km > T::zero()) {
            return Err(Error::param("distance_km", "must be > 0"));
        }
        if !(unit_weight_kg > T::zero()) {
            return Err(Error::param("unit_weight_kg", "must be > 0"));
        }
        Ok(Self { mode, distance_km, unit_weight_kg })
    }
}

/// kg CO₂ emitted by shipping one unit on `trip`.
pub fn unit_emission<T: Float>(trip: &TripSpec<T>) -> T {
    trip.mode.coeffs::<T>().per_unit(trip.distance_km, trip.unit_weight_kg)
}

/// Reference lanes into Rotterdam used to derive the assortment laws.
pub mod lanes {
    /// Haiphong to Rotterdam by sea.
    pub const HAIPHONG_SEA_KM: f64 = 17_798.0;
    /// Shanghai to Rotterdam by sea.
    pub const SHANGHAI_SEA_KM: f64 = 19_492.0;
    /// Tan Son Nhat to Rotterdam The Hague by air.
    pub const TAN_SON_NHAT_AIR_KM: f64 = 10_073.0;
    /// Stuttgart to Rotterdam by road.
    pub const STUTTGART_ROAD_KM: f64 = 633.0;
}

/// The three assortment archetypes of the test-bed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssortmentType {
    /// Apparel: sea (slow) is cleaner than air (fast).
    A1,
    /// Industrial: road (fast) is cleaner than long-haul sea (slow).
    A2,
    /// Mixed: either mode may be dirtier.
    A3,
}

impl AssortmentType {
    pub const ALL: [AssortmentType; 3] = [AssortmentType::A1, AssortmentType::A2, AssortmentType::A3];

    pub fn index(self) -> u8 {
        match self {
            AssortmentType::A1 => 1,
            AssortmentType::A2 => 2,
            AssortmentType::A3 => 3,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(AssortmentType::A1),
            2 => Ok(AssortmentType::A2),
            3 => Ok(AssortmentType::A3),
            _ => Err(Error::param("type", format!("assortment type must be 1, 2 or 3, got {i}"))),
        }
    }
}

const fn gamma(mean: f64, cv: f64) -> DistSpec {
    DistSpec::Gamma { mean, cv }
}

/// Draws `(e_slow, e_fast)` in kg CO₂ per unit for one product.
pub fn sample_emission_pair<R: Rng + ?Sized>(kind: AssortmentType, rng: &mut R) -> (f64, f64) {
    let draw = |spec: DistSpec, rng: &mut R| spec.sample(rng).expect("constant law is valid");
    match kind {
        AssortmentType::A1 => {
            let e_s = draw(gamma(0.35, 0.21), rng);
            let gap = draw(DistSpec::LogNormal { mu_log: 1.52, sigma_log: 0.21 }, rng);
            (e_s, e_s + gap)
        }
        AssortmentType::A2 => {
            let e_f = draw(gamma(0.19, 1.27), rng);
            let gap = draw(gamma(2.19, 1.27), rng);
            (e_f + gap, e_f)
        }
        AssortmentType::A3 => {
            let e_f = draw(DistSpec::Weibull { scale: 0.87, shape: 0.77 }, rng);
            let e_s = draw(gamma(3.31, 1.34), rng);
            (e_s, e_f)
        }
    }
}
