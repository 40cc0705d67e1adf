use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, LogNormal, Normal, Poisson, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

/// A univariate law, parameterized the way the test-bed describes it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    /// Negative binomial on {0, 1, ...} with the given mean and coefficient
    /// of variation; requires `cv² · mean > 1`.
    NegBinomial { mean: f64, cv: f64 },
    Gamma { mean: f64, cv: f64 },
    /// `Beta(mean, sd) + shift`, where `mean` and `sd` describe the
    /// unshifted Beta on [0, 1].
    ShiftedBeta { mean: f64, sd: f64, shift: f64 },
    /// `exp(N(mu_log, sigma_log²))`.
    LogNormal { mu_log: f64, sigma_log: f64 },
    Weibull { scale: f64, shape: f64 },
    Normal { mean: f64, sd: f64 },
    /// Point mass, used for degenerate demand.
    Deterministic { value: f64 },
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be finite and > 0, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be finite, got {v}")))
    }
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn std_normal_quantile(q: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * q)
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistSpec::NegBinomial { mean, cv } => {
                positive("mean", mean)?;
                positive("cv", cv)?;
                if cv * cv * mean <= 1.0 {
                    return Err(Error::param(
                        "cv",
                        format!("negative binomial needs cv²·mean > 1, got {}", cv * cv * mean),
                    ));
                }
                Ok(())
            }
            DistSpec::Gamma { mean, cv } => {
                positive("mean", mean)?;
                positive("cv", cv)
            }
            DistSpec::ShiftedBeta { mean, sd, shift } => {
                finite("shift", shift)?;
                positive("sd", sd)?;
                if !(mean > 0.0 && mean < 1.0) {
                    return Err(Error::param("mean", format!("must lie in (0, 1), got {mean}")));
                }
                if sd * sd >= mean * (1.0 - mean) {
                    return Err(Error::param(
                        "sd",
                        format!("sd² must be below mean·(1−mean) = {}", mean * (1.0 - mean)),
                    ));
                }
                Ok(())
            }
            DistSpec::LogNormal { mu_log, sigma_log } => {
                finite("mu_log", mu_log)?;
                positive("sigma_log", sigma_log)
            }
            DistSpec::Weibull { scale, shape } => {
                positive("scale", scale)?;
                positive("shape", shape)
            }
            DistSpec::Normal { mean, sd } => {
                finite("mean", mean)?;
                positive("sd", sd)
            }
            DistSpec::Deterministic { value } => finite("value", value),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, DistSpec::NegBinomial { .. } | DistSpec::Deterministic { .. })
    }

    /// `(size r, success probability p)` of a negative binomial.
    pub fn neg_binomial_params(mean: f64, cv: f64) -> (f64, f64) {
        let var = (cv * mean) * (cv * mean);
        (mean * mean / (var - mean), mean / var)
    }

    fn gamma_shape_scale(mean: f64, cv: f64) -> (f64, f64) {
        let shape = 1.0 / (cv * cv);
        (shape, mean / shape)
    }

    fn beta_alpha_beta(mean: f64, sd: f64) -> (f64, f64) {
        let nu = mean * (1.0 - mean) / (sd * sd) - 1.0;
        (mean * nu, (1.0 - mean) * nu)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistSpec::NegBinomial { mean, .. } | DistSpec::Gamma { mean, .. } => mean,
            DistSpec::ShiftedBeta { mean, shift, .. } => mean + shift,
            DistSpec::LogNormal { mu_log, sigma_log } => (mu_log + 0.5 * sigma_log * sigma_log).exp(),
            DistSpec::Weibull { scale, shape } => scale * ln_gamma(1.0 + 1.0 / shape).exp(),
            DistSpec::Normal { mean, .. } => mean,
            DistSpec::Deterministic { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            DistSpec::NegBinomial { mean, cv } | DistSpec::Gamma { mean, cv } => (cv * mean).powi(2),
            DistSpec::ShiftedBeta { sd, .. } | DistSpec::Normal { sd, .. } => sd * sd,
            DistSpec::LogNormal { mu_log, sigma_log } => {
                let s2 = sigma_log * sigma_log;
                (s2.exp() - 1.0) * (2.0 * mu_log + s2).exp()
            }
            DistSpec::Weibull { scale, shape } => {
                let g1 = ln_gamma(1.0 + 1.0 / shape).exp();
                let g2 = ln_gamma(1.0 + 2.0 / shape).exp();
                scale * scale * (g2 - g1 * g1)
            }
            DistSpec::Deterministic { .. } => 0.0,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x.is_infinite() {
            return if x > 0.0 { 1.0 } else { 0.0 };
        }
        match *self {
            DistSpec::NegBinomial { mean, cv } => {
                if x < 0.0 {
                    return 0.0;
                }
                let (r, p) = Self::neg_binomial_params(mean, cv);
                beta_reg(r, x.floor() + 1.0, p)
            }
            DistSpec::Gamma { mean, cv } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let (k, theta) = Self::gamma_shape_scale(mean, cv);
                gamma_lr(k, x / theta)
            }
            DistSpec::ShiftedBeta { mean, sd, shift } => {
                let y = x - shift;
                if y <= 0.0 {
                    0.0
                } else if y >= 1.0 {
                    1.0
                } else {
                    let (a, b) = Self::beta_alpha_beta(mean, sd);
                    beta_reg(a, b, y)
                }
            }
            DistSpec::LogNormal { mu_log, sigma_log } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - mu_log) / sigma_log)
                }
            }
            DistSpec::Weibull { scale, shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
            DistSpec::Normal { mean, sd } => std_normal_cdf((x - mean) / sd),
            DistSpec::Deterministic { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Density for continuous laws (zero for discrete ones).
    fn pdf(&self, x: f64) -> f64 {
        match *self {
            DistSpec::Gamma { mean, cv } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let (k, theta) = Self::gamma_shape_scale(mean, cv);
                ((k - 1.0) * x.ln() - x / theta - ln_gamma(k) - k * theta.ln()).exp()
            }
            DistSpec::ShiftedBeta { mean, sd, shift } => {
                let y = x - shift;
                if y <= 0.0 || y >= 1.0 {
                    return 0.0;
                }
                let (a, b) = Self::beta_alpha_beta(mean, sd);
                let ln_b = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
                ((a - 1.0) * y.ln() + (b - 1.0) * (-y).ln_1p() - ln_b).exp()
            }
            _ => 0.0,
        }
    }

    /// Inverse CDF. For discrete laws, the smallest support point `n` with
    /// `cdf(n) >= q`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::param("q", format!("quantile level must lie in (0, 1), got {q}")));
        }
        self.validate()?;
        Ok(match *self {
            DistSpec::NegBinomial { .. } => self.discrete_quantile(q),
            DistSpec::Gamma { mean, cv } => {
                let (k, theta) = Self::gamma_shape_scale(mean, cv);
                // Wilson-Hilferty start, refined on the log scale.
                let z = std_normal_quantile(q);
                let wh = k * (1.0 - 1.0 / (9.0 * k) + z / (3.0 * k.sqrt())).powi(3);
                let start = if wh > 0.0 { wh * theta } else { mean * q };
                self.invert_positive(q, start)
            }
            DistSpec::ShiftedBeta { shift, mean, .. } => {
                shift + self.invert_unit(q, mean, shift)
            }
            DistSpec::LogNormal { mu_log, sigma_log } => {
                (mu_log + sigma_log * std_normal_quantile(q)).exp()
            }
            DistSpec::Weibull { scale, shape } => scale * (-(-q).ln_1p()).powf(1.0 / shape),
            DistSpec::Normal { mean, sd } => mean + sd * std_normal_quantile(q),
            DistSpec::Deterministic { value } => value,
        })
    }

    fn discrete_quantile(&self, q: f64) -> f64 {
        let mut lo = -1.0f64; // cdf(lo) < q
        let mut hi = self.mean().ceil().max(1.0);
        while self.cdf(hi) < q {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 1.0 {
            let mid = ((lo + hi) * 0.5).floor();
            if self.cdf(mid) >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Safeguarded Newton on `ln x` for laws supported on (0, ∞).
    fn invert_positive(&self, q: f64, start: f64) -> f64 {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut y = start.max(f64::MIN_POSITIVE).ln();
        for _ in 0..400 {
            let x = y.exp();
            let f = self.cdf(x) - q;
            if f.abs() <= 1e-14 {
                return x;
            }
            if f < 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            if lo.is_finite() && hi.is_finite() && hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
            let slope = self.pdf(x) * x;
            let mut next = y - f / slope;
            if !(next.is_finite() && next > lo && next < hi) {
                next = match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo + 1.0,
                    (false, true) => hi - 1.0,
                    (false, false) => y,
                };
            }
            y = next;
        }
        if hi.is_finite() {
            hi.exp()
        } else {
            y.exp()
        }
    }

    /// Safeguarded Newton for the unshifted part of a shifted Beta.
    fn invert_unit(&self, q: f64, start: f64, shift: f64) -> f64 {
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let mut y = start;
        for _ in 0..2000 {
            let f = self.cdf(y + shift) - q;
            if f.abs() <= 1e-14 {
                return y;
            }
            if f < 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            if hi - lo <= 2.0 * f64::EPSILON * hi {
                break;
            }
            let next = y - f / self.pdf(y + shift);
            y = if next.is_finite() && next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        hi
    }

    /// Reusable sampler; validates once.
    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Ok(match *self {
            DistSpec::NegBinomial { mean, cv } => {
                let (r, p) = Self::neg_binomial_params(mean, cv);
                Sampler::NegBinomial(Gamma::new(r, (1.0 - p) / p).expect("validated"))
            }
            DistSpec::Gamma { mean, cv } => {
                let (k, theta) = Self::gamma_shape_scale(mean, cv);
                Sampler::Gamma(Gamma::new(k, theta).expect("validated"))
            }
            DistSpec::ShiftedBeta { mean, sd, shift } => {
                let (a, b) = Self::beta_alpha_beta(mean, sd);
                Sampler::ShiftedBeta(Beta::new(a, b).expect("validated"), shift)
            }
            DistSpec::LogNormal { mu_log, sigma_log } => {
                Sampler::LogNormal(LogNormal::new(mu_log, sigma_log).expect("validated"))
            }
            DistSpec::Weibull { scale, shape } => {
                Sampler::Weibull(Weibull::new(scale, shape).expect("validated"))
            }
            DistSpec::Normal { mean, sd } => Sampler::Normal(Normal::new(mean, sd).expect("validated")),
            DistSpec::Deterministic { value } => Sampler::Point(value),
        })
    }

    /// One draw. Negative binomial draws are integral.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.sampler()?.sample(rng))
    }
}

/// Pre-built sampler for a [`DistSpec`].
#[derive(Clone, Copy, Debug)]
pub enum Sampler {
    /// Gamma mixing law of the Gamma-Poisson representation.
    NegBinomial(Gamma<f64>),
    Gamma(Gamma<f64>),
    ShiftedBeta(Beta<f64>, f64),
    LogNormal(LogNormal<f64>),
    Weibull(Weibull<f64>),
    Normal(Normal<f64>),
    Point(f64),
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::NegBinomial(mix) => {
                let lambda = mix.sample(rng);
                if lambda > 0.0 {
                    Poisson::new(lambda).map(|p| p.sample(rng)).unwrap_or(0.0)
                } else {
                    0.0
                }
            }
            Sampler::Gamma(g) => g.sample(rng),
            Sampler::ShiftedBeta(b, s) => b.sample(rng) + s,
            Sampler::LogNormal(d) => d.sample(rng),
            Sampler::Weibull(d) => d.sample(rng),
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Point(v) => *v,
        }
    }

    /// Integer draw for count-valued laws.
    pub fn sample_count<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.sample(rng).round() as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rand_dist::RngStream;
    use approx::assert_abs_diff_eq;

    fn draws(spec: DistSpec, n: usize, id: u64) -> Vec<f64> {
        let s = spec.sampler().unwrap();
        let mut rng = RngStream::new(2024, id).rng();
        (0..n).map(|_| s.sample(&mut rng)).collect()
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn gamma_sample_mean() {
        let (m, _) = mean_var(&draws(DistSpec::Gamma { mean: 1.0, cv: 0.5 }, 1_000_000, 1));
        assert_abs_diff_eq!(m, 1.0, epsilon = 0.01);
    }

    #[test]
    fn neg_binomial_dispersion() {
        let xs = draws(DistSpec::NegBinomial { mean: 100.0, cv: 0.9 }, 1_000_000, 2);
        assert!(xs.iter().all(|x| *x >= 0.0 && x.fract() == 0.0));
        let (m, v) = mean_var(&xs);
        assert_abs_diff_eq!(v / m, 81.0, epsilon = 2.0);
    }

    #[test]
    fn shifted_beta_support() {
        let xs = draws(DistSpec::ShiftedBeta { mean: 0.9, sd: 0.25, shift: 0.3 }, 200_000, 3);
        assert!(xs.iter().all(|x| (0.3..=1.3).contains(x)));
    }

    #[test]
    fn moments_within_three_standard_errors() {
        let specs = [
            DistSpec::NegBinomial { mean: 40.0, cv: 0.6 },
            DistSpec::Gamma { mean: 0.19, cv: 1.27 },
            DistSpec::ShiftedBeta { mean: 0.98, sd: 0.1, shift: 0.02 },
            DistSpec::LogNormal { mu_log: 1.52, sigma_log: 0.21 },
            DistSpec::Weibull { scale: 0.87, shape: 0.77 },
            DistSpec::Normal { mean: -3.0, sd: 2.0 },
        ];
        let n = 1_000_000;
        for (i, spec) in specs.iter().enumerate() {
            let xs = draws(*spec, n, 100 + i as u64);
            let (m, v) = mean_var(&xs);
            let se_mean = (spec.variance() / n as f64).sqrt();
            assert!((m - spec.mean()).abs() <= 3.0 * se_mean, "{spec:?}: mean {m}");
            // Var of the sample variance is (mu4 - sigma^4)/n; bound with the
            // empirical fourth moment.
            let mu4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
            let se_var = ((mu4 - v * v) / n as f64).sqrt();
            assert!((v - spec.variance()).abs() <= 3.0 * se_var, "{spec:?}: var {v}");
        }
    }

    #[test]
    fn normal_median_is_zero() {
        let q = DistSpec::Normal { mean: 0.0, sd: 1.0 }.quantile(0.5).unwrap();
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn exponential_quantile() {
        let q = DistSpec::Gamma { mean: 1.0, cv: 1.0 }
            .quantile(1.0 - (-1.0f64).exp())
            .unwrap();
        assert_abs_diff_eq!(q, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn neg_binomial_median_matches_pmf_summation() {
        // Independent oracle: accumulate the pmf from zero.
        let (mean, cv) = (100.0, 0.9);
        let (r, p) = DistSpec::neg_binomial_params(mean, cv);
        let mut pmf = p.powf(r);
        let mut cum = pmf;
        let mut n = 0u64;
        while cum < 0.5 {
            pmf *= (n as f64 + r) / (n as f64 + 1.0) * (1.0 - p);
            n += 1;
            cum += pmf;
        }
        let q = DistSpec::NegBinomial { mean, cv }.quantile(0.5).unwrap();
        assert_eq!(q, n as f64);
    }

    #[test]
    fn rejects_bad_parameters() {
        let err = DistSpec::NegBinomial { mean: 2.0, cv: 0.5 }.validate().unwrap_err();
        assert!(matches!(err, Error::Parameter { ref field, .. } if field == "cv"));
        let err = DistSpec::Gamma { mean: -1.0, cv: 0.5 }.validate().unwrap_err();
        assert!(matches!(err, Error::Parameter { ref field, .. } if field == "mean"));
        let err = DistSpec::ShiftedBeta { mean: 0.5, sd: 0.6, shift: 0.0 }.validate().unwrap_err();
        assert!(matches!(err, Error::Parameter { ref field, .. } if field == "sd"));
        let err = DistSpec::Normal { mean: 0.0, sd: 1.0 }.quantile(1.0).unwrap_err();
        assert!(matches!(err, Error::Parameter { ref field, .. } if field == "q"));
    }
}
