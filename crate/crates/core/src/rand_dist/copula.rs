use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::spec::{std_normal_cdf, DistSpec};
use crate::error::{Error, Result};

/// Draws `(X, Y)` with marginals `spec_x`, `spec_y` coupled by a bivariate
/// Gaussian copula with normal-score correlation `rho`.
///
/// `W = A·Z` with `A = [[1, 0], [rho, sqrt(1 - rho²)]]` and independent
/// standard normals `Z`; each component is mapped through `Φ` and the
/// marginal's inverse CDF.
pub fn sample_correlated<R: Rng + ?Sized>(
    spec_x: &DistSpec,
    spec_y: &DistSpec,
    rho: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let pair = CorrelatedPair::new(*spec_x, *spec_y, rho)?;
    pair.sample(rng)
}

/// Validated copula sampler, reusable across draws.
#[derive(Clone, Copy, Debug)]
pub struct CorrelatedPair {
    pub x: DistSpec,
    pub y: DistSpec,
    pub rho: f64,
}

impl CorrelatedPair {
    pub fn new(x: DistSpec, y: DistSpec, rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::param("rho", format!("must satisfy |rho| < 1, got {rho}")));
        }
        x.validate()?;
        y.validate()?;
        Ok(Self { x, y, rho })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64)> {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let w1 = z1;
        let w2 = self.rho * z1 + (1.0 - self.rho * self.rho).sqrt() * z2;
        Ok((
            self.x.quantile(open_unit(std_normal_cdf(w1)))?,
            self.y.quantile(open_unit(std_normal_cdf(w2)))?,
        ))
    }
}

/// Keeps `Φ(w)` strictly inside (0, 1) when `|w|` is far in the tails.
fn open_unit(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}
