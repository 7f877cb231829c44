//! Renewal probabilities `u_m = Pr[E_m]`: the chance that some prefix of an
//! i.i.d. size sequence sums exactly to `m`.
//!
//! `u` satisfies `u_0 = 1` and the convolution `u_m = sum_s mu_s u_{m-s}`,
//! which is what [`renewal_table`] evaluates. Two independent routes exist
//! for cross-checking: the exact Bell-polynomial sum ([`prob_en_exact`]) and
//! the per-family closed forms ([`prob_en_closed`]).

use crate::bell::{exact_from_f64, ordinary_row_sum, ExactNumber};
use crate::closed_form::log_composition_row;
use crate::distributions::{ClusterSizeSpec, Family};
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, LINEAR_FLOOR};

/// Largest `n` accepted by [`prob_en_exact`] unless a bound is given.
pub const DEFAULT_EXACT_BOUND: usize = 30;

/// `ln u_0, ..., ln u_n` for one cluster-size distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalTable {
    spec: ClusterSizeSpec,
    log_u: Vec<f64>,
}

impl RenewalTable {
    pub fn spec(&self) -> &ClusterSizeSpec {
        &self.spec
    }

    /// Largest index in the table.
    pub fn n(&self) -> usize {
        self.log_u.len() - 1
    }

    pub fn log_u(&self) -> &[f64] {
        &self.log_u
    }

    pub fn u(&self, m: usize) -> f64 {
        self.log_u[m].exp()
    }

    /// Replaces `ln u_m`. Only used to test that verification catches faults.
    #[doc(hidden)]
    pub fn perturb(&mut self, m: usize, log_delta: f64) {
        self.log_u[m] += log_delta;
    }
}

/// Linear-space `mu_1..mu_n` (index `s`, with a zero at index 0) and the
/// largest `s` with a representable nonzero mass.
pub(crate) fn linear_masses(log_mu: &[f64]) -> (Vec<f64>, usize) {
    let mut lin = Vec::with_capacity(log_mu.len() + 1);
    lin.push(0.0);
    lin.extend(log_mu.iter().map(|x| x.exp()));
    let last = lin.iter().rposition(|&x| x > 0.0).unwrap_or(0);
    (lin, last)
}

/// Builds the table by the convolution recurrence in `O(n^2)` time.
///
/// Each entry is first accumulated in linear space; when that sum falls below
/// [`LINEAR_FLOOR`] the entry is recomputed with a full log-sum-exp, so the
/// result never loses mass to underflow. Unreachable `m` yields `-inf`.
pub fn renewal_table(spec: &ClusterSizeSpec, n: usize) -> RenewalTable {
    renewal_parts(spec, n).table
}

/// A renewal table together with the intermediate vectors samplers reuse.
pub(crate) struct RenewalParts {
    pub table: RenewalTable,
    pub log_mu: Vec<f64>,
    pub lin_mu: Vec<f64>,
    pub lin_u: Vec<f64>,
}

pub(crate) fn renewal_parts(spec: &ClusterSizeSpec, n: usize) -> RenewalParts {
    let log_mu: Vec<f64> = (1..=n).map(|s| spec.log_pmf(s)).collect();
    let (lin_mu, last) = linear_masses(&log_mu);
    let support = spec.max_size().unwrap_or(n).min(n);

    let mut log_u = Vec::with_capacity(n + 1);
    let mut lin_u = Vec::with_capacity(n + 1);
    log_u.push(0.0);
    lin_u.push(1.0);
    for m in 1..=n {
        let top = m.min(last);
        let sum = dot_reversed(&lin_mu[1..=top], &lin_u[m - top..m]);
        if sum >= LINEAR_FLOOR {
            log_u.push(sum.ln());
            lin_u.push(sum);
        } else {
            let lu = &log_u;
            let l = log_sum_exp((1..=m.min(support)).map(|s| log_mu[s - 1] + lu[m - s]));
            log_u.push(l);
            lin_u.push(l.exp());
        }
    }
    RenewalParts {
        table: RenewalTable {
            spec: spec.clone(),
            log_u,
        },
        log_mu,
        lin_mu,
        lin_u,
    }
}

/// `sum_i a[i] * b[len - 1 - i]` with four independent accumulators.
pub(crate) fn dot_reversed(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let mut ac = a.chunks_exact(4);
    let mut bc = b.rchunks_exact(4);
    for (x, y) in ac.by_ref().zip(bc.by_ref()) {
        for j in 0..4 {
            acc[j] += x[j] * y[3 - j];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ac.remainder().iter().zip(bc.remainder().iter().rev()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `Pr[E_n]` from the Bell-polynomial sum
/// `sum_k (k!/n!) B_{n,k}(1! mu_1, 2! mu_2, ...)`, in exact arithmetic.
///
/// The masses are the exact rational values of the `f64` pmf, so for explicit
/// weights this is the exact answer for the weights as stored.
pub fn prob_en_exact(spec: &ClusterSizeSpec, n: usize) -> Result<ExactNumber> {
    prob_en_exact_with_bound(spec, n, DEFAULT_EXACT_BOUND)
}

pub fn prob_en_exact_with_bound(
    spec: &ClusterSizeSpec,
    n: usize,
    bound: usize,
) -> Result<ExactNumber> {
    if n > bound {
        return Err(Error::Capability(format!(
            "exact oracle limited to n <= {bound}, got n={n}"
        )));
    }
    let mu = exact_masses(spec, n);
    prob_en_exact_weights(&mu, n)
}

/// Exact `mu_1..mu_n` of a spec.
pub fn exact_masses(spec: &ClusterSizeSpec, n: usize) -> Vec<ExactNumber> {
    (1..=n)
        .map(|k| {
            let w = match spec.family() {
                Family::Explicit { weights } => weights.get(k - 1).copied().unwrap_or(0.0),
                _ => spec.log_pmf(k).exp(),
            };
            exact_from_f64(w).expect("pmf values are finite")
        })
        .collect()
}

/// The Bell-polynomial sum for caller-supplied rational masses
/// `mu[0] = mu_1, mu[1] = mu_2, ...`; missing entries count as zero.
pub fn prob_en_exact_weights(mu: &[ExactNumber], n: usize) -> Result<ExactNumber> {
    use num_traits::{One, Zero};
    if n == 0 {
        return Ok(ExactNumber::one());
    }
    let mut x: Vec<ExactNumber> = mu.iter().take(n).cloned().collect();
    x.resize(n, ExactNumber::zero());
    Ok(ordinary_row_sum(n, &x))
}

/// `ln Pr[E_n]` from the family's closed form. Supported for shifted Poisson,
/// shifted negative binomial and geometric; other families return
/// [`Error::Capability`].
pub fn prob_en_closed(spec: &ClusterSizeSpec, n: usize) -> Result<f64> {
    if let Family::Geometric { p } = *spec.family() {
        // The binomial sum collapses: u_n = p for every n >= 1.
        return Ok(if n == 0 { 0.0 } else { p.ln() });
    }
    let row = log_composition_row(spec, n)?;
    if n == 0 {
        return Ok(0.0);
    }
    Ok(log_sum_exp(row.iter().copied()))
}

/// `lim u_n = 1 / E[S_1]`, which is 0 for an infinite mean.
pub fn renewal_limit(spec: &ClusterSizeSpec) -> f64 {
    let mean = spec.mean();
    if mean.is_infinite() {
        0.0
    } else {
        1.0 / mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{compositions, exact_ratio};
    use num_traits::{One, ToPrimitive, Zero};

    fn explicit(w: &[f64]) -> ClusterSizeSpec {
        ClusterSizeSpec::explicit(w.to_vec()).unwrap()
    }

    fn assert_u(table: &RenewalTable, want: &[f64], tol: f64) {
        assert_eq!(table.n() + 1, want.len());
        for (m, w) in want.iter().enumerate() {
            assert!((table.u(m) - w).abs() <= tol, "u_{m} = {} vs {w}", table.u(m));
        }
    }

    #[test]
    fn two_point_convolution() {
        let t = renewal_table(&explicit(&[0.5, 0.5]), 3);
        assert_u(&t, &[1.0, 0.5, 0.75, 0.625], 1e-15);
        assert_eq!(t.log_u()[0], 0.0);
    }

    #[test]
    fn geometric_is_flat() {
        let t = renewal_table(&ClusterSizeSpec::geometric(0.3).unwrap(), 1000);
        for m in 1..=1000 {
            assert!((t.u(m) - 0.3).abs() <= 1e-12);
        }
    }

    #[test]
    fn parity() {
        let t = renewal_table(&explicit(&[0.0, 1.0]), 5);
        assert_u(&t, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0], 0.0);
        assert_eq!(t.log_u()[5], f64::NEG_INFINITY);
    }

    #[test]
    fn zero_length_table() {
        let t = renewal_table(&ClusterSizeSpec::zipf(2.0).unwrap(), 0);
        assert_eq!(t.log_u(), &[0.0]);
    }

    #[test]
    fn deep_underflow_stays_in_log_space() {
        // Odd m needs an odd number of size-1 clusters, so
        // u_{2j+1} = (j+1) eps (1-eps)^j + O(eps^3), below the linear floor.
        let eps = 1e-250;
        let t = renewal_table(&explicit(&[eps, 1.0 - eps]), 41);
        for j in 0..=20usize {
            let want = ((j + 1) as f64).ln() + eps.ln();
            let got = t.log_u()[2 * j + 1];
            assert!((got - want).abs() <= 1e-12 * want.abs(), "m={}", 2 * j + 1);
            assert!((t.u(2 * j) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_oracle_examples() {
        let half = explicit(&[0.5, 0.5]);
        assert_eq!(prob_en_exact(&half, 2).unwrap(), exact_ratio(3, 4));
        assert_eq!(prob_en_exact(&explicit(&[1.0]), 5).unwrap(), ExactNumber::one());
        assert_eq!(prob_en_exact(&explicit(&[0.0, 1.0]), 3).unwrap(), ExactNumber::zero());
        assert!(matches!(
            prob_en_exact(&half, DEFAULT_EXACT_BOUND + 1),
            Err(Error::Capability(_))
        ));
        assert_eq!(prob_en_exact(&half, 0).unwrap(), ExactNumber::one());
    }

    fn brute_force(mu: &[ExactNumber], n: usize) -> ExactNumber {
        (1..=n)
            .flat_map(|k| compositions(n, k).unwrap())
            .map(|c| {
                c.iter().fold(ExactNumber::one(), |a, &s| {
                    a * mu.get(s - 1).cloned().unwrap_or_else(ExactNumber::zero)
                })
            })
            .fold(ExactNumber::zero(), |a, b| a + b)
    }

    #[test]
    fn exact_oracle_matches_brute_force_and_table() {
        let spec = explicit(&[0.4, 0.35, 0.25]);
        let table = renewal_table(&spec, 12);
        let mu = exact_masses(&spec, 12);
        for n in 1..=12 {
            let exact = prob_en_exact(&spec, n).unwrap();
            assert_eq!(exact, brute_force(&mu, n), "n={n}");
            let approx = exact.to_f64().unwrap();
            assert!((table.u(n) - approx).abs() <= 1e-12, "n={n}");
        }
    }

    #[test]
    fn closed_form_examples() {
        let pois = ClusterSizeSpec::shifted_poisson(2.0).unwrap();
        assert!((prob_en_closed(&pois, 1).unwrap() - (-2.0)).abs() < 1e-15);
        let geo = ClusterSizeSpec::geometric(0.5).unwrap();
        for n in [1, 2, 17, 400] {
            assert_eq!(prob_en_closed(&geo, n).unwrap(), 0.5f64.ln());
        }
        let nb = ClusterSizeSpec::shifted_negative_binomial(2.0, 0.5).unwrap();
        assert!((prob_en_closed(&nb, 2).unwrap().exp() - 0.3125).abs() < 1e-15);
        assert!(matches!(
            prob_en_closed(&ClusterSizeSpec::zipf(2.0).unwrap(), 3),
            Err(Error::Capability(_))
        ));
        assert!(matches!(
            prob_en_closed(&explicit(&[1.0]), 3),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn table_agrees_with_closed_forms() {
        let specs = [
            ClusterSizeSpec::shifted_poisson(0.5).unwrap(),
            ClusterSizeSpec::shifted_poisson(7.5).unwrap(),
            ClusterSizeSpec::shifted_negative_binomial(2.0, 0.5).unwrap(),
            ClusterSizeSpec::shifted_negative_binomial(0.7, 0.85).unwrap(),
            ClusterSizeSpec::geometric(0.05).unwrap(),
        ];
        for spec in &specs {
            let t = renewal_table(spec, 500);
            for n in 1..=500 {
                let closed = prob_en_closed(spec, n).unwrap().exp();
                let rel = (t.u(n) - closed).abs() / closed;
                assert!(rel <= 1e-10, "{spec:?} n={n}: {} vs {closed}", t.u(n));
            }
        }
    }

    #[test]
    fn recurrence_holds_entrywise() {
        let spec = ClusterSizeSpec::zipf(1.3).unwrap();
        let t = renewal_table(&spec, 300);
        let mu: Vec<f64> = spec.pmf_prefix(300).unwrap().iter().map(|x| x.exp()).collect();
        for m in 1..=300 {
            let conv: f64 = (1..=m).map(|s| mu[s - 1] * t.u(m - s)).sum();
            assert!((t.u(m) - conv).abs() <= 1e-12 * conv, "m={m}");
        }
    }

    #[test]
    fn limits() {
        assert!((renewal_limit(&ClusterSizeSpec::geometric(0.4).unwrap()) - 0.4).abs() < 1e-15);
        let pois = ClusterSizeSpec::shifted_poisson(2.0).unwrap();
        assert!((renewal_limit(&pois) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(renewal_limit(&ClusterSizeSpec::zipf(1.5).unwrap()), 0.0);
        let t = renewal_table(&pois, 2000);
        assert!((t.u(2000) - 1.0 / 3.0).abs() <= 1e-4);
    }
}
