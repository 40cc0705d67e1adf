//! Reproducible sampling: counter-based streams, the parametric laws used by
//! the test-bed, and Gaussian-copula pairs.

mod copula;
mod spec;
mod stream;

pub use copula::{sample_correlated, CorrelatedPair};
pub use spec::{std_normal_cdf, std_normal_quantile, DistSpec, Sampler};
pub use stream::{Domain, RngStream};
