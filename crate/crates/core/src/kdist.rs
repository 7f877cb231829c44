//! The law of the number of clusters `K_n` given `E_n`.
//!
//! `w(m, k) = Pr[S_1 + ... + S_k = m]` is the ordinary Bell polynomial
//! `B^_{m,k}(mu)`. Summing a row over `k` gives `u_m`, and normalizing row `n`
//! by `u_n` gives `Pr[K_n = k | E_n]`.

use crate::closed_form::log_composition_row;
use crate::distributions::ClusterSizeSpec;
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, LINEAR_FLOOR};
use crate::renewal::{linear_masses, prob_en_closed, RenewalTable};

/// Above this `n`, [`composition_table`] keeps only row `n`.
pub const DEFAULT_STREAMING_THRESHOLD: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major lower triangle: `(m, k)` lives at `m (m + 1) / 2 + k`.
    Full(Vec<f64>),
    /// `ln w(n, k)` for `k = 0..=n`.
    LastRow(Vec<f64>),
}

/// `ln w(m, k)` for `0 <= k <= m <= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionTable {
    spec: ClusterSizeSpec,
    n: usize,
    storage: Storage,
}

impl CompositionTable {
    pub fn spec(&self) -> &ClusterSizeSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// True when only row `n` was kept.
    pub fn is_streaming(&self) -> bool {
        matches!(self.storage, Storage::LastRow(_))
    }

    /// Row `m` as `ln w(m, 0), ..., ln w(m, m)`, if stored.
    pub fn row(&self, m: usize) -> Option<&[f64]> {
        if m > self.n {
            return None;
        }
        match &self.storage {
            Storage::Full(cells) => {
                let start = m * (m + 1) / 2;
                Some(&cells[start..=start + m])
            }
            Storage::LastRow(row) => (m == self.n).then_some(row.as_slice()),
        }
    }

    /// `ln w(m, k)`; `-inf` for `k > m`, `None` when row `m` is not stored.
    pub fn log_w(&self, m: usize, k: usize) -> Option<f64> {
        let row = self.row(m)?;
        Some(row.get(k).copied().unwrap_or(f64::NEG_INFINITY))
    }
}

/// Builds the table with the default streaming threshold.
pub fn composition_table(spec: &ClusterSizeSpec, n: usize) -> Result<CompositionTable> {
    composition_table_with_threshold(spec, n, DEFAULT_STREAMING_THRESHOLD)
}

/// Builds `w` column by column from `w(m, k) = sum_s mu_s w(m - s, k - 1)`.
///
/// Work is `O(n^2 d)` where `d` is the effective support of `mu` (at most
/// `n`). For `n > threshold` only row `n` is retained and memory is `O(n)`.
/// As in [`crate::renewal::renewal_table`], cells are summed in linear space
/// and recomputed by log-sum-exp when they fall below the underflow floor.
pub fn composition_table_with_threshold(
    spec: &ClusterSizeSpec,
    n: usize,
    threshold: usize,
) -> Result<CompositionTable> {
    if n == 0 {
        return Err(Error::Argument("composition table needs n >= 1".into()));
    }
    let log_mu = spec.pmf_prefix(n)?;
    let (lin_mu, last) = linear_masses(&log_mu);
    let support = spec.max_size().unwrap_or(n).min(n);
    let streaming = n > threshold;

    let mut full = if streaming {
        Vec::new()
    } else {
        let mut v = vec![f64::NEG_INFINITY; (n + 1) * (n + 2) / 2];
        v[0] = 0.0;
        v
    };
    let mut last_row = vec![f64::NEG_INFINITY; n + 1];

    let mut prev_log = vec![f64::NEG_INFINITY; n + 1];
    let mut prev_lin = vec![0.0; n + 1];
    prev_log[0] = 0.0;
    prev_lin[0] = 1.0;
    let mut cur_log = vec![f64::NEG_INFINITY; n + 1];
    let mut cur_lin = vec![0.0; n + 1];

    for k in 1..=n {
        cur_log[..k].fill(f64::NEG_INFINITY);
        cur_lin[..k].fill(0.0);
        for m in k..=n {
            let width = m - k + 1;
            let top = width.min(last);
            let sum: f64 = (1..=top).map(|s| lin_mu[s] * prev_lin[m - s]).sum();
            let (lw, lin) = if sum >= LINEAR_FLOOR {
                (sum.ln(), sum)
            } else {
                let pl = &prev_log;
                let l = log_sum_exp((1..=width.min(support)).map(|s| log_mu[s - 1] + pl[m - s]));
                (l, l.exp())
            };
            cur_log[m] = lw;
            cur_lin[m] = lin;
            if !streaming {
                full[m * (m + 1) / 2 + k] = lw;
            }
        }
        last_row[k] = cur_log[n];
        std::mem::swap(&mut prev_log, &mut cur_log);
        std::mem::swap(&mut prev_lin, &mut cur_lin);
    }

    let storage = if streaming {
        Storage::LastRow(last_row)
    } else {
        Storage::Full(full)
    };
    Ok(CompositionTable {
        spec: spec.clone(),
        n,
        storage,
    })
}

/// `Pr[K_n = k | E_n]` for `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct KDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl KDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry `k - 1` is `Pr[K_n = k]`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `Pr[K_n = k]`; zero outside `1..=n`.
    pub fn prob(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.probs.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }
}

/// Normalizes row `n` of the table by `u_n`. Both inputs must come from the
/// same spec and the same `n`.
pub fn k_distribution(table: &CompositionTable, renewal: &RenewalTable) -> Result<KDistribution> {
    if table.n() != renewal.n() {
        return Err(Error::Argument(format!(
            "composition table has n={} but renewal table has n={}",
            table.n(),
            renewal.n()
        )));
    }
    k_distribution_at(table, renewal, table.n())
}

/// The law of `K_m` for any `m` covered by both tables.
pub fn k_distribution_at(
    table: &CompositionTable,
    renewal: &RenewalTable,
    m: usize,
) -> Result<KDistribution> {
    if table.spec() != renewal.spec() {
        return Err(Error::Argument(
            "composition and renewal tables were built from different specs".into(),
        ));
    }
    if m == 0 || m > renewal.n() {
        return Err(Error::Argument(format!(
            "m={m} outside the renewal table (n={})",
            renewal.n()
        )));
    }
    let row = table
        .row(m)
        .ok_or_else(|| Error::Argument(format!("row m={m} is not stored in the table")))?;
    let log_u = renewal.log_u()[m];
    if log_u == f64::NEG_INFINITY {
        return Err(Error::Unreachable { n: m });
    }
    let probs = row[1..].iter().map(|lw| (lw - log_u).exp()).collect();
    Ok(KDistribution { n: m, probs })
}

/// The per-family closed form for `Pr[K_n = k | E_n]`, normalized by the
/// family's closed-form `u_n`. Zipf and explicit specs have no closed form.
pub fn k_distribution_closed(spec: &ClusterSizeSpec, n: usize) -> Result<KDistribution> {
    if n == 0 {
        return Err(Error::Argument("K_n needs n >= 1".into()));
    }
    let row = log_composition_row(spec, n)?;
    let log_u = prob_en_closed(spec, n)?;
    let probs = row.iter().map(|lw| (lw - log_u).exp()).collect();
    Ok(KDistribution { n, probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::renewal_table;

    fn explicit(w: &[f64]) -> ClusterSizeSpec {
        ClusterSizeSpec::explicit(w.to_vec()).unwrap()
    }

    fn both(spec: &ClusterSizeSpec, n: usize) -> (CompositionTable, RenewalTable) {
        (composition_table(spec, n).unwrap(), renewal_table(spec, n))
    }

    #[test]
    fn small_table_values() {
        let t = composition_table(&explicit(&[0.5, 0.5]), 3).unwrap();
        let w = |m, k| t.log_w(m, k).unwrap().exp();
        assert_eq!(w(0, 0), 1.0);
        assert_eq!(w(3, 0), 0.0);
        assert_eq!(w(3, 1), 0.0);
        assert!((w(3, 2) - 0.5).abs() < 1e-15);
        assert!((w(3, 3) - 0.125).abs() < 1e-15);
        assert_eq!(w(2, 3), 0.0);
    }

    #[test]
    fn first_row_is_mu_1() {
        for spec in [
            ClusterSizeSpec::zipf(2.5).unwrap(),
            ClusterSizeSpec::shifted_poisson(3.0).unwrap(),
        ] {
            let t = composition_table(&spec, 1).unwrap();
            assert!((t.log_w(1, 1).unwrap() - spec.log_pmf(1)).abs() < 1e-15);
        }
    }

    #[test]
    fn parity_table() {
        let t = composition_table(&explicit(&[0.0, 1.0]), 4).unwrap();
        for k in 0..=4 {
            let want = if k == 2 { 1.0 } else { 0.0 };
            assert_eq!(t.log_w(4, k).unwrap().exp(), want);
        }
    }

    #[test]
    fn k_law_examples() {
        let spec = explicit(&[0.5, 0.5]);
        let (t, r) = both(&spec, 3);
        let d = k_distribution(&t, &r).unwrap();
        // w(3, 2) = 2 mu_1 mu_2 = 0.5, w(3, 3) = mu_1^3 = 0.125, u_3 = 0.625.
        assert!((d.prob(2) - 0.8).abs() < 1e-15);
        assert!((d.prob(3) - 0.2).abs() < 1e-15);
        assert_eq!(d.prob(1), 0.0);

        let (t, r) = both(&explicit(&[1.0]), 5);
        assert_eq!(k_distribution(&t, &r).unwrap().prob(5), 1.0);

        let (t, r) = both(&explicit(&[0.0, 1.0]), 6);
        let d = k_distribution(&t, &r).unwrap();
        assert_eq!(d.probs(), &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mismatches_and_unreachable() {
        let spec = explicit(&[0.0, 1.0]);
        let (t, r) = both(&spec, 5);
        assert_eq!(k_distribution(&t, &r), Err(Error::Unreachable { n: 5 }));
        let r4 = renewal_table(&spec, 4);
        assert!(matches!(k_distribution(&t, &r4), Err(Error::Argument(_))));
        let other = renewal_table(&explicit(&[1.0]), 5);
        assert!(matches!(k_distribution(&t, &other), Err(Error::Argument(_))));
        // Rows below n are reusable.
        let d = k_distribution_at(&t, &r, 4).unwrap();
        assert_eq!(d.prob(2), 1.0);
        assert!(composition_table(&spec, 0).is_err());
    }

    #[test]
    fn closed_examples() {
        let geo = ClusterSizeSpec::geometric(0.5).unwrap();
        let d = k_distribution_closed(&geo, 4).unwrap();
        for (got, want) in d.probs().iter().zip([0.125, 0.375, 0.375, 0.125]) {
            assert!((got - want).abs() < 1e-15);
        }
        let pois = ClusterSizeSpec::shifted_poisson(1.7).unwrap();
        assert!((k_distribution_closed(&pois, 1).unwrap().prob(1) - 1.0).abs() < 1e-15);
        let nb = ClusterSizeSpec::shifted_negative_binomial(2.0, 0.5).unwrap();
        let d = k_distribution_closed(&nb, 2).unwrap();
        assert!((d.prob(1) - 0.8).abs() < 1e-15);
        assert!((d.prob(2) - 0.2).abs() < 1e-15);
        assert!(matches!(
            k_distribution_closed(&ClusterSizeSpec::zipf(2.0).unwrap(), 5),
            Err(Error::Capability(_))
        ));
        let degenerate = ClusterSizeSpec::geometric(1.0).unwrap();
        assert_eq!(k_distribution_closed(&degenerate, 3).unwrap().probs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn dp_matches_closed_forms() {
        for spec in [
            ClusterSizeSpec::shifted_poisson(0.5).unwrap(),
            ClusterSizeSpec::shifted_poisson(5.0).unwrap(),
            ClusterSizeSpec::shifted_negative_binomial(0.6, 0.7).unwrap(),
            ClusterSizeSpec::geometric(0.8).unwrap(),
        ] {
            let (t, r) = both(&spec, 300);
            for m in [1, 2, 7, 150, 300] {
                let dp = k_distribution_at(&t, &r, m).unwrap();
                let cf = k_distribution_closed(&spec, m).unwrap();
                let err = dp
                    .probs()
                    .iter()
                    .zip(cf.probs())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(err <= 1e-8, "{spec:?} m={m} err={err}");
            }
        }
    }

    #[test]
    fn rows_sum_to_renewal() {
        let spec = ClusterSizeSpec::zipf(1.2).unwrap();
        let (t, r) = both(&spec, 200);
        for m in 1..=200 {
            let total = log_sum_exp(t.row(m).unwrap().iter().copied()).exp();
            assert!((total - r.u(m)).abs() <= 1e-10 * r.u(m), "m={m}");
        }
    }

    #[test]
    fn streaming_matches_full() {
        let spec = ClusterSizeSpec::shifted_negative_binomial(1.5, 0.4).unwrap();
        let full = composition_table_with_threshold(&spec, 120, 1000).unwrap();
        let stream = composition_table_with_threshold(&spec, 120, 100).unwrap();
        assert!(stream.is_streaming() && !full.is_streaming());
        assert_eq!(full.row(120), stream.row(120));
        assert!(stream.row(119).is_none());
        assert_eq!(stream.log_w(119, 3), None);
    }

    #[test]
    fn underflowing_cells_use_log_space() {
        // w(n, n) = mu_1^n = 0.5^1500 underflows f64.
        let spec = ClusterSizeSpec::geometric(0.5).unwrap();
        let t = composition_table_with_threshold(&spec, 1500, 0).unwrap();
        let got = t.log_w(1500, 1500).unwrap();
        assert!((got - 1500.0 * 0.5f64.ln()).abs() <= 1e-9);
    }
}
