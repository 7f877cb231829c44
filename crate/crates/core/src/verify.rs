//! A self-contained suite cross-checking the independent routes to the same
//! quantities: Bell identities, the renewal recurrence against the Bell-sum
//! oracle and closed forms, and the composition DP against closed forms.

use std::fmt;

use num_traits::{One, Pow, Zero};
use rand::Rng;

use crate::bell::{
    bell_exponential, bell_ordinary, binomial, compositions, exact_int, exact_ratio, factorial,
    ExactNumber,
};
use crate::distributions::ClusterSizeSpec;
use crate::kdist::{composition_table, k_distribution, k_distribution_closed};
use crate::renewal::{prob_en_closed, prob_en_exact, renewal_table, RenewalTable};
use crate::samplers::{prepare, rng_from_seed, SamplerMode, DEFAULT_SEED};

/// Default largest `n` for checks that run exact arithmetic.
pub const DEFAULT_MAX_N: usize = 12;

/// Relative size of the fault injected into `u_n`.
pub const FAULT_SIZE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// Exact-oracle checks cover `n <= max_n`.
    pub max_n: usize,
    /// Multiply the last entry of every renewal table by `1 + FAULT_SIZE`.
    /// Exists so tests can confirm the suite notices.
    pub inject_fault: bool,
    /// Seed for the random exact inputs.
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            max_n: DEFAULT_MAX_N,
            inject_fault: false,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    /// `0.0` for exact checks.
    pub tolerance: f64,
    /// Largest error seen; for exact checks, the number of mismatches.
    pub max_error: f64,
    pub cases: usize,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        if self.tolerance == 0.0 {
            write!(
                f,
                "{status} {} exact cases={} mismatches={}",
                self.name, self.cases, self.max_error
            )
        } else {
            write!(
                f,
                "{status} {} tol={:e} max_err={:e} cases={}",
                self.name, self.tolerance, self.max_error, self.cases
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

struct Tally {
    max_error: f64,
    cases: usize,
}

impl Tally {
    fn new() -> Self {
        Self {
            max_error: 0.0,
            cases: 0,
        }
    }

    fn error(&mut self, e: f64) {
        self.cases += 1;
        if e.is_nan() || e > self.max_error {
            self.max_error = if e.is_nan() { f64::INFINITY } else { e };
        }
    }

    fn exact(&mut self, ok: bool) {
        self.cases += 1;
        if !ok {
            self.max_error += 1.0;
        }
    }

    fn finish(self, name: &'static str, tolerance: f64) -> CheckResult {
        CheckResult {
            name,
            tolerance,
            max_error: self.max_error,
            cases: self.cases,
        }
    }
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn random_rational<R: Rng>(rng: &mut R) -> ExactNumber {
    exact_ratio(rng.gen_range(-20..=20), rng.gen_range(1..=12))
}

fn random_vector<R: Rng>(rng: &mut R, len: usize) -> Vec<ExactNumber> {
    (0..len).map(|_| random_rational(rng)).collect()
}

fn nonzero_rational<R: Rng>(rng: &mut R) -> ExactNumber {
    loop {
        let r = random_rational(rng);
        if !r.is_zero() {
            return r;
        }
    }
}

fn table(spec: &ClusterSizeSpec, n: usize, config: &VerifyConfig) -> RenewalTable {
    let mut t = renewal_table(spec, n);
    if config.inject_fault {
        t.perturb(n, FAULT_SIZE.ln_1p());
    }
    t
}

/// `B_{n,k}(a^i b x_i) = a^n b^k B_{n,k}(x_i)`.
fn check_bell_scaling<R: Rng>(rng: &mut R, max_n: usize, cases: usize) -> CheckResult {
    let mut t = Tally::new();
    for n in 1..=max_n {
        for _ in 0..cases {
            let k = rng.gen_range(1..=n);
            let x = random_vector(rng, n);
            let a = nonzero_rational(rng);
            let b = nonzero_rational(rng);
            let scaled: Vec<_> = x
                .iter()
                .enumerate()
                .map(|(i, xi)| Pow::pow(&a, (i + 1) as u32) * &b * xi)
                .collect();
            let lhs = bell_exponential(n, k, &scaled).expect("valid arguments");
            let rhs = Pow::pow(&a, n as u32)
                * Pow::pow(&b, k as u32)
                * bell_exponential(n, k, &x).expect("valid arguments");
            t.exact(lhs == rhs);
        }
    }
    t.finish("bell_scaling", 0.0)
}

/// `B_{n,k}(c, 2c, 3c, ...) = c^k binom(n, k) k^{n-k}`.
fn check_bell_idempotent<R: Rng>(rng: &mut R, max_n: usize, cases: usize) -> CheckResult {
    let mut t = Tally::new();
    for n in 1..=max_n {
        for k in 1..=n {
            let x: Vec<_> = (1..=n as i64).map(exact_int).collect();
            let expected = ExactNumber::from(binomial(n, k) * num_bigint::BigInt::from(k).pow(n - k));
            t.exact(bell_exponential(n, k, &x).expect("valid arguments") == expected);
        }
        for _ in 0..cases {
            let k = rng.gen_range(1..=n);
            let c = nonzero_rational(rng);
            let x: Vec<_> = (1..=n as i64).map(|i| exact_int(i) * &c).collect();
            let expected = Pow::pow(&c, k as u32)
                * ExactNumber::from(binomial(n, k) * num_bigint::BigInt::from(k).pow(n - k));
            t.exact(bell_exponential(n, k, &x).expect("valid arguments") == expected);
        }
    }
    t.finish("bell_idempotent", 0.0)
}

/// `B_{n,k}(c 1!, c 2!, ...) = c^k binom(n-1, k-1) n!/k!`.
fn check_bell_factorial<R: Rng>(rng: &mut R, max_n: usize, cases: usize) -> CheckResult {
    let mut t = Tally::new();
    let value = |n: usize, k: usize| {
        ExactNumber::new(binomial(n - 1, k - 1) * factorial(n), factorial(k))
    };
    for n in 1..=max_n {
        let x: Vec<_> = (1..=n).map(|i| ExactNumber::from(factorial(i))).collect();
        for k in 1..=n {
            t.exact(bell_exponential(n, k, &x).expect("valid arguments") == value(n, k));
        }
        for _ in 0..cases {
            let k = rng.gen_range(1..=n);
            let c = nonzero_rational(rng);
            let xc: Vec<_> = x.iter().map(|xi| xi * &c).collect();
            let expected = Pow::pow(&c, k as u32) * value(n, k);
            t.exact(bell_exponential(n, k, &xc).expect("valid arguments") == expected);
        }
    }
    t.finish("bell_factorial", 0.0)
}

/// Ordinary Bell polynomial against the sum over compositions.
fn check_ordinary_vs_compositions<R: Rng>(rng: &mut R, max_n: usize) -> CheckResult {
    let mut t = Tally::new();
    for n in 1..=max_n.min(10) {
        let x = random_vector(rng, n);
        for k in 1..=n {
            let brute = compositions(n, k)
                .expect("valid arguments")
                .map(|c| {
                    c.iter()
                        .fold(ExactNumber::one(), |acc, &s| acc * &x[s - 1])
                })
                .fold(ExactNumber::zero(), |acc, p| acc + p);
            t.exact(bell_ordinary(n, k, &x).expect("valid arguments") == brute);
        }
    }
    t.finish("ordinary_bell_vs_compositions", 0.0)
}

/// The renewal recurrence against the exact Bell-sum value of `u_n`.
fn check_renewal_vs_oracle(config: &VerifyConfig) -> CheckResult {
    let mut t = Tally::new();
    let specs = [
        ClusterSizeSpec::explicit(vec![0.4, 0.35, 0.25]).expect("valid weights"),
        ClusterSizeSpec::explicit(vec![0.5, 0.0, 0.25, 0.25]).expect("valid weights"),
        ClusterSizeSpec::shifted_poisson(2.0).expect("valid lambda"),
    ];
    for spec in &specs {
        for n in 1..=config.max_n {
            let exact = prob_en_exact(spec, n).expect("within oracle bound");
            let exact = num_traits::ToPrimitive::to_f64(&exact).expect("finite");
            t.error(relative(table(spec, n, config).u(n), exact));
        }
    }
    t.finish("renewal_vs_bell_oracle", 1e-12)
}

fn closed_specs() -> Vec<ClusterSizeSpec> {
    vec![
        ClusterSizeSpec::shifted_poisson(0.5).expect("valid lambda"),
        ClusterSizeSpec::shifted_poisson(2.0).expect("valid lambda"),
        ClusterSizeSpec::shifted_poisson(5.0).expect("valid lambda"),
        ClusterSizeSpec::shifted_negative_binomial(2.0, 0.5).expect("valid r, p"),
        ClusterSizeSpec::geometric(0.3).expect("valid p"),
    ]
}

/// The renewal recurrence against closed forms.
fn check_renewal_vs_closed(config: &VerifyConfig, n: usize) -> CheckResult {
    let mut t = Tally::new();
    for spec in closed_specs() {
        let table = table(&spec, n, config);
        for m in 1..=n {
            let closed = prob_en_closed(&spec, m).expect("closed form exists");
            t.error(relative(table.log_u()[m].exp(), closed.exp()));
        }
    }
    t.finish("renewal_vs_closed_form", 1e-10)
}

/// The composition DP law of `K_n` against closed forms.
fn check_kdist_vs_closed(config: &VerifyConfig, n: usize) -> CheckResult {
    let mut t = Tally::new();
    for spec in closed_specs() {
        let comp = composition_table(&spec, n).expect("n >= 1");
        let dp = k_distribution(&comp, &table(&spec, n, config)).expect("matching tables");
        let closed = k_distribution_closed(&spec, n).expect("closed form exists");
        for (a, b) in dp.probs().iter().zip(closed.probs()) {
            t.error((a - b).abs());
        }
    }
    t.finish("kdist_dp_vs_closed_form", 1e-8)
}

/// Row sums of the composition table equal `u_n`, and the `K_n` law is
/// normalized, for a family without closed forms.
fn check_zipf(config: &VerifyConfig, n: usize) -> (CheckResult, CheckResult) {
    let spec = ClusterSizeSpec::zipf(2.0).expect("valid alpha");
    let comp = composition_table(&spec, n).expect("n >= 1");
    let renewal = table(&spec, n, config);
    let mut rows = Tally::new();
    let row = comp.row(n).expect("last row is kept");
    let total = crate::log_sum_exp(row.iter().copied());
    rows.error(relative(total.exp(), renewal.u(n)));
    let mut norm = Tally::new();
    let dist = k_distribution(&comp, &renewal).expect("matching tables");
    norm.error((dist.probs().iter().sum::<f64>() - 1.0).abs());
    (
        rows.finish("composition_rows_sum_to_u", 1e-9),
        norm.finish("kdist_normalized", 1e-10),
    )
}

/// Every step distribution of the sequential sampler sums to one.
fn check_step_distributions(n: usize) -> CheckResult {
    let mut t = Tally::new();
    let specs = [
        ClusterSizeSpec::zipf(1.5).expect("valid alpha"),
        ClusterSizeSpec::shifted_negative_binomial(2.0, 0.5).expect("valid r, p"),
        ClusterSizeSpec::explicit(vec![0.0, 0.5, 0.5]).expect("valid weights"),
    ];
    for spec in &specs {
        let tables = prepare(spec, n, SamplerMode::OnDemand).expect("reachable");
        for m in (1..=n).filter(|&m| tables.renewal().u(m) > 0.0) {
            t.error((tables.step_distribution(m).iter().sum::<f64>() - 1.0).abs());
        }
    }
    t.finish("step_distributions_normalized", 1e-12)
}

/// Geometric sizes give `u_n = p` for every `n`.
fn check_geometric(config: &VerifyConfig, n: usize) -> CheckResult {
    let mut t = Tally::new();
    for p in [0.1, 0.5, 0.9] {
        let spec = ClusterSizeSpec::geometric(p).expect("valid p");
        let table = table(&spec, n, config);
        for m in 1..=n {
            t.error((table.u(m) - p).abs());
        }
    }
    t.finish("geometric_u_equals_p", 1e-12)
}

/// Runs every check. Exact checks are limited to `n <= config.max_n`.
pub fn run(config: &VerifyConfig) -> VerifyReport {
    let mut rng = rng_from_seed(config.seed);
    let exact_n = config.max_n;
    let (zipf_rows, zipf_norm) = check_zipf(config, 200);
    VerifyReport {
        checks: vec![
            check_bell_scaling(&mut rng, exact_n, 10),
            check_bell_idempotent(&mut rng, exact_n, 10),
            check_bell_factorial(&mut rng, exact_n, 10),
            check_ordinary_vs_compositions(&mut rng, exact_n),
            check_renewal_vs_oracle(config),
            check_renewal_vs_closed(config, 300),
            check_kdist_vs_closed(config, 200),
            zipf_rows,
            zipf_norm,
            check_step_distributions(200),
            check_geometric(config, 500),
        ],
    }
}
