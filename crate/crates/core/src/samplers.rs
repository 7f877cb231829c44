//! Drawing ESC cluster-size sequences and partitions.
//!
//! [`sample_sizes`] is the rejection-free sequential sampler: with `m` items
//! left it draws the next size `s` with probability
//! `mu_s u_{m-s} / u_m`, so every draw is consistent with eventually hitting
//! `n` exactly and the output has law `prod_j mu_{s_j} / u_n`.
//! [`NaiveSampler`] is the rejection baseline: i.i.d. sizes until the running
//! total hits `n` (accept) or overshoots (restart).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::distributions::ClusterSizeSpec;
use crate::error::{Error, Result};
use crate::logspace::LINEAR_FLOOR;
use crate::renewal::{renewal_parts, RenewalParts, RenewalTable};

/// The generator family every sampler in this crate is tested against.
///
/// ChaCha with 8 rounds is counter-based, so a given 64-bit seed yields the
/// same stream on every platform and across releases of this crate.
pub type EscRng = rand_chacha::ChaCha8Rng;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_240_519;

/// Cap on rejection attempts per accepted sequence.
pub const DEFAULT_MAX_ATTEMPTS: u64 = 1_000_000;

pub fn rng_from_seed(seed: u64) -> EscRng {
    EscRng::seed_from_u64(seed)
}

/// How the per-step categorical distributions are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerMode {
    /// Weights are evaluated while scanning, `O(n)` memory.
    #[default]
    OnDemand,
    /// Every cumulative row is built up front, `O(n^2)` memory, and each step
    /// is a binary search.
    Precomputed,
}

impl fmt::Display for SamplerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerMode::OnDemand => "ondemand",
            SamplerMode::Precomputed => "precomputed",
        })
    }
}

impl FromStr for SamplerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ondemand" | "on-demand" => Ok(SamplerMode::OnDemand),
            "precomputed" => Ok(SamplerMode::Precomputed),
            other => Err(Error::Argument(format!("unknown sampler mode {other:?}"))),
        }
    }
}

/// Cluster sizes `S_1, ..., S_K`, each at least one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SizeSequence(Vec<usize>);

impl SizeSequence {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::Argument(format!(
                "cluster sizes must be non-empty and positive, got {sizes:?}"
            )));
        }
        Ok(Self(sizes))
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    /// `K`, the number of clusters.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `n`, the number of items.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

/// A labelled partition of `n` items; `labels[i]` is the 1-based cluster of
/// item `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    sizes: SizeSequence,
    labels: Vec<usize>,
}

impl Partition {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> &SizeSequence {
        &self.sizes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Immutable state for the sequential sampler. Share it freely between
/// threads; each worker brings its own rng.
#[derive(Debug, Clone)]
pub struct SamplerTables {
    n: usize,
    mode: SamplerMode,
    log_mu: Vec<f64>,
    lin_mu: Vec<f64>,
    renewal: RenewalTable,
    lin_u: Vec<f64>,
    // Precomputed mode only: cum[m - 1][s - 1] is the cumulative step
    // probability through size s, truncated after the last admissible size.
    cum: Vec<Vec<f64>>,
    // Initial capacity for size vectors.
    len_hint: usize,
}

/// Computes `u_0..u_n` (and, in precomputed mode, every step distribution).
/// Fails with [`Error::Unreachable`] when `u_n = 0`.
pub fn prepare(spec: &ClusterSizeSpec, n: usize, mode: SamplerMode) -> Result<SamplerTables> {
    if n == 0 {
        return Err(Error::Argument("sampling needs n >= 1".into()));
    }
    let RenewalParts {
        table: renewal,
        log_mu,
        lin_mu,
        lin_u,
    } = renewal_parts(spec, n);
    if renewal.log_u()[n] == f64::NEG_INFINITY {
        return Err(Error::Unreachable { n });
    }
    let mut tables = SamplerTables {
        n,
        mode,
        log_mu,
        lin_mu,
        renewal,
        lin_u,
        cum: Vec::new(),
        len_hint: (n as f64 / spec.mean() * 1.25) as usize + 8,
    };
    if mode == SamplerMode::Precomputed {
        tables.cum = (1..=n).map(|m| tables.cumulative_row(m)).collect();
    }
    Ok(tables)
}

impl SamplerTables {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> SamplerMode {
        self.mode
    }

    pub fn spec(&self) -> &ClusterSizeSpec {
        self.renewal.spec()
    }

    pub fn renewal(&self) -> &RenewalTable {
        &self.renewal
    }

    /// Whether row `m` is scanned in linear space. Linear rows use the
    /// unnormalized weights `mu_s u_{m-s}` against a target scaled by `u_m`;
    /// rows with `u_m` below the floor use normalized log-space weights.
    fn linear_row(&self, m: usize) -> bool {
        self.lin_u[m] >= LINEAR_FLOOR
    }

    fn log_weight(&self, m: usize, s: usize) -> f64 {
        let lu = self.renewal.log_u();
        (self.log_mu[s - 1] + lu[m - s] - lu[m]).exp()
    }

    fn cumulative_row(&self, m: usize) -> Vec<f64> {
        let (mut row, last) = if self.linear_row(m) {
            let mu = &self.lin_mu[1..=m];
            let u = &self.lin_u[..m];
            let last = (0..m).rev().find(|&i| mu[i] * u[m - 1 - i] > 0.0);
            (linear_cumulative(mu, u), last)
        } else {
            let w: Vec<f64> = (1..=m).map(|s| self.log_weight(m, s)).collect();
            let mut cum = 0.0;
            let row = w
                .iter()
                .map(|x| {
                    cum += x;
                    cum
                })
                .collect();
            (row, w.iter().rposition(|&x| x > 0.0))
        };
        row.truncate(last.map_or(0, |i| i + 1));
        row
    }

    /// The step distribution `Pr[X = s; m] = mu_s u_{m-s} / u_m` for
    /// `s = 1..=m` (index `s - 1`). All zero when `u_m = 0`.
    pub fn step_distribution(&self, m: usize) -> Vec<f64> {
        assert!(m >= 1 && m <= self.n, "m={m} outside 1..={}", self.n);
        if self.renewal.log_u()[m] == f64::NEG_INFINITY {
            return vec![0.0; m];
        }
        if self.linear_row(m) {
            (1..=m)
                .map(|s| self.lin_mu[s] * self.lin_u[m - s] / self.lin_u[m])
                .collect()
        } else {
            (1..=m).map(|s| self.log_weight(m, s)).collect()
        }
    }

    /// Inverse-CDF draw of the next size given `m` items remain and a uniform
    /// `u` in `[0, 1)`. Both modes accumulate the same weights in the same
    /// order, so they make identical decisions for identical `u`.
    #[inline(always)]
    fn draw_size(&self, m: usize, u: f64) -> usize {
        if self.mode == SamplerMode::OnDemand && self.linear_row(m) {
            scan_linear(&self.lin_mu[1..=m], &self.lin_u[..m], u * self.lin_u[m])
        } else {
            self.draw_size_slow(m, u)
        }
    }

    #[inline(never)]
    fn draw_size_slow(&self, m: usize, u: f64) -> usize {
        let target = if self.linear_row(m) {
            u * self.lin_u[m]
        } else {
            u
        };
        match self.mode {
            SamplerMode::OnDemand => scan((1..=m).map(|s| self.log_weight(m, s)), target),
            SamplerMode::Precomputed => {
                let row = &self.cum[m - 1];
                let idx = row.partition_point(|&c| c <= target);
                if idx < row.len() {
                    idx + 1
                } else {
                    row.len()
                }
            }
        }
    }
}

/// Running sums through a block of four weights starting from `cum`. The
/// in-block prefix does not depend on `cum`, which keeps the dependency chain
/// short; rounding is monotone, so the sums are still nondecreasing, and a
/// zero weight leaves the sum unchanged.
#[inline(always)]
fn block_sums(cum: f64, w: [f64; 4]) -> [f64; 4] {
    let q1 = w[0] + w[1];
    let q2 = q1 + w[2];
    let q3 = q1 + (w[2] + w[3]);
    [cum + w[0], cum + q1, cum + q2, cum + q3]
}

/// Cumulative weights of a linear row: blocks of four, then a sequential tail.
fn linear_cumulative(mu: &[f64], u: &[f64]) -> Vec<f64> {
    let m = mu.len();
    let w = |i: usize| mu[i] * u[m - 1 - i];
    let mut out = Vec::with_capacity(m);
    let mut cum = 0.0;
    let mut i = 0;
    while i + 4 <= m {
        let c = block_sums(cum, [w(i), w(i + 1), w(i + 2), w(i + 3)]);
        out.extend_from_slice(&c);
        cum = c[3];
        i += 4;
    }
    while i < m {
        cum += w(i);
        out.push(cum);
        i += 1;
    }
    out
}

/// First size whose entry of [`linear_cumulative`] exceeds `target`, without
/// building the row; falls back to the last admissible size.
#[inline(always)]
fn scan_linear(mu: &[f64], u: &[f64], target: f64) -> usize {
    let m = mu.len();
    let u = &u[..m];
    let below = |c: &[f64; 4]| {
        let le = |x: f64| usize::from(x <= target);
        (le(c[0]) + le(c[1])) + (le(c[2]) + le(c[3]))
    };
    let mut cum = 0.0;
    let mut i = 0;
    let mut mu8 = mu.chunks_exact(8);
    let mut u8 = u.rchunks_exact(8);
    for (x, y) in mu8.by_ref().zip(u8.by_ref()) {
        let x: &[f64; 8] = x.try_into().expect("chunk of 8");
        let y: &[f64; 8] = y.try_into().expect("chunk of 8");
        let a = block_sums(cum, [x[0] * y[7], x[1] * y[6], x[2] * y[5], x[3] * y[4]]);
        let b = block_sums(a[3], [x[4] * y[3], x[5] * y[2], x[6] * y[1], x[7] * y[0]]);
        if b[3] > target {
            return i + 1 + below(&a) + below(&b);
        }
        cum = b[3];
        i += 8;
    }
    let (x, y) = (mu8.remainder(), u8.remainder());
    let r = x.len();
    let w = |j: usize| x[j] * y[r - 1 - j];
    let mut j = 0;
    if r >= 4 {
        let a = block_sums(cum, [w(0), w(1), w(2), w(3)]);
        if a[3] > target {
            return i + 1 + below(&a);
        }
        cum = a[3];
        j = 4;
    }
    while j < r {
        cum += w(j);
        if cum > target {
            return i + j + 1;
        }
        j += 1;
    }
    (0..m).rev().find(|&k| mu[k] * u[m - 1 - k] > 0.0).map_or(0, |k| k + 1)
}

/// First size whose cumulative weight exceeds `target`, skipping zero
/// weights; falls back to the last admissible size when round-off leaves the
/// total just short of the target.
fn scan(weights: impl Iterator<Item = f64> + Clone, target: f64) -> usize {
    // target >= 0, so the first crossing always lands on a positive weight
    let mut cum = 0.0;
    for (i, w) in weights.clone().enumerate() {
        cum += w;
        if cum > target {
            return i + 1;
        }
    }
    weights
        .enumerate()
        .filter(|&(_, w)| w > 0.0)
        .last()
        .map_or(0, |(i, _)| i + 1)
}

/// Draws one size sequence summing to `n` from the ESC law.
pub fn sample_sizes<R: Rng + ?Sized>(tables: &SamplerTables, rng: &mut R) -> SizeSequence {
    let mut sizes = Vec::with_capacity(tables.len_hint.min(tables.n));
    let mut m = tables.n;
    while m > 0 {
        let s = tables.draw_size(m, rng.gen::<f64>());
        debug_assert!(s >= 1 && s <= m, "reachable m always has an admissible size");
        sizes.push(s);
        m -= s;
    }
    let seq = SizeSequence(sizes);
    assert_eq!(seq.total(), tables.n);
    seq
}

/// Draws a size sequence and assigns labels.
pub fn sample_partition<R: Rng + ?Sized>(tables: &SamplerTables, rng: &mut R) -> Partition {
    let sizes = sample_sizes(tables, rng);
    assemble_partition(sizes, rng)
}

/// Labels items by a uniformly random permutation of
/// `(1 x S_1, 2 x S_2, ..., K x S_K)`.
pub fn assemble_partition<R: Rng + ?Sized>(sizes: SizeSequence, rng: &mut R) -> Partition {
    let mut labels = Vec::with_capacity(sizes.total());
    for (i, &s) in sizes.sizes().iter().enumerate() {
        labels.extend(std::iter::repeat(i + 1).take(s));
    }
    labels.shuffle(rng);
    Partition { sizes, labels }
}

/// An accepted rejection-sampler draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveDraw {
    pub sizes: SizeSequence,
    /// Attempts used, including the accepted one.
    pub attempts: u64,
}

/// The rejection baseline.
///
/// Sizes are drawn from `mu` by inverse CDF over `mu_1..mu_n`; a uniform that
/// lands past `mu_n` means a size above `n`, which always overshoots.
#[derive(Debug, Clone)]
pub struct NaiveSampler {
    n: usize,
    cdf: Vec<f64>,
    max_attempts: u64,
}

impl NaiveSampler {
    pub fn new(spec: &ClusterSizeSpec, n: usize, max_attempts: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("sampling needs n >= 1".into()));
        }
        if max_attempts == 0 {
            return Err(Error::Argument("max_attempts must be positive".into()));
        }
        let mut total = 0.0;
        let cdf = spec
            .pmf_prefix(n)?
            .iter()
            .map(|lp| {
                total += lp.exp();
                total
            })
            .collect();
        Ok(Self {
            n,
            cdf,
            max_attempts,
        })
    }

    fn draw_size<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.gen::<f64>();
        self.cdf.partition_point(|&c| c <= u) + 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NaiveDraw> {
        let mut sizes = Vec::new();
        for attempt in 1..=self.max_attempts {
            sizes.clear();
            let mut left = self.n;
            while left > 0 {
                let s = self.draw_size(rng);
                if s > left {
                    break;
                }
                sizes.push(s);
                left -= s;
            }
            if left == 0 {
                return Ok(NaiveDraw {
                    sizes: SizeSequence(sizes),
                    attempts: attempt,
                });
            }
        }
        Err(Error::Exhausted {
            attempts: self.max_attempts,
        })
    }
}

/// One rejection-sampled size sequence.
pub fn sample_sizes_naive<R: Rng + ?Sized>(
    spec: &ClusterSizeSpec,
    n: usize,
    rng: &mut R,
    max_attempts: u64,
) -> Result<SizeSequence> {
    NaiveSampler::new(spec, n, max_attempts)?
        .sample(rng)
        .map(|d| d.sizes)
}
