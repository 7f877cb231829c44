//! Per-family closed forms for the probability that `k` i.i.d. sizes sum to `n`.
//!
//! For the three families with a closed form, the sum of `k` shifted draws is
//! again a shifted member of the family, so `w(n, k)` has an explicit pmf:
//!
//! * shifted Poisson: `Pois(n - k; k lambda)`
//! * shifted NB: `p^(n-k) (1-p)^(rk) C(n + k(r-1) - 1, n - k)`
//! * geometric: `p^k (1-p)^(n-k) C(n-1, k-1)`

use crate::distributions::{ClusterSizeSpec, Family};
use crate::error::{Error, Result};
use crate::logspace::{ln_binom, ln_gamma, xlog1my, xlogy};

pub(crate) fn unsupported(spec: &ClusterSizeSpec) -> Error {
    Error::Capability(format!(
        "no closed form for the {} family; use the dynamic-programming route",
        spec.kind_name()
    ))
}

/// `ln w(n, k)` for `k = 1..=n` (index `k - 1`).
pub(crate) fn log_composition_row(spec: &ClusterSizeSpec, n: usize) -> Result<Vec<f64>> {
    let nf = n as f64;
    let term: Box<dyn Fn(f64) -> f64> = match *spec.family() {
        Family::ShiftedPoisson { lambda } => Box::new(move |k: f64| {
            let rate = k * lambda;
            -rate + xlogy(nf - k, rate) - ln_gamma(nf - k + 1.0)
        }),
        Family::ShiftedNegativeBinomial { r, p } => Box::new(move |k: f64| {
            xlogy(nf - k, p) + xlog1my(r * k, p) + ln_binom(nf + k * (r - 1.0) - 1.0, nf - k)
        }),
        Family::Geometric { p } => Box::new(move |k: f64| {
            k * p.ln() + xlog1my(nf - k, p) + ln_binom(nf - 1.0, k - 1.0)
        }),
        Family::Zipf { .. } | Family::Explicit { .. } => return Err(unsupported(spec)),
    };
    Ok((1..=n).map(|k| term(k as f64)).collect())
}
