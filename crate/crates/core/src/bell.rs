//! Exact partial Bell polynomials and integer compositions.
//!
//! Everything here works over arbitrary-precision rationals so that the
//! combinatorial identities can be checked with equality rather than a
//! tolerance. This module is the ground truth the floating-point tables in
//! [`crate::renewal`] and [`crate::kdist`] are tested against.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always kept in lowest terms.
pub type ExactNumber = BigRational;

pub fn exact_int(v: i64) -> ExactNumber {
    BigRational::from_integer(BigInt::from(v))
}

pub fn exact_ratio(num: i64, den: i64) -> ExactNumber {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// The exact rational value of a finite `f64`.
pub fn exact_from_f64(x: f64) -> Option<ExactNumber> {
    BigRational::from_float(x)
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn check_args(n: usize, k: usize, len: usize) -> Result<()> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::Argument(format!(
            "Bell polynomial needs 1 <= k <= n, got n={n}, k={k}"
        )));
    }
    if len < n - k + 1 {
        return Err(Error::Argument(format!(
            "B_{{{n},{k}}} needs {} arguments, got {len}",
            n - k + 1
        )));
    }
    Ok(())
}

/// Table of `B_{m,j}(x)` for `0 <= j <= k`, `0 <= m <= n`, indexed `[j][m]`,
/// from `B_{m,j} = sum_i C(m-1, i-1) x_i B_{m-i,j-1}` with `B_{0,0} = 1`.
fn exponential_table(n: usize, k: usize, x: &[ExactNumber]) -> Vec<Vec<ExactNumber>> {
    let mut table = vec![vec![ExactNumber::zero(); n + 1]; k + 1];
    table[0][0] = ExactNumber::one();
    // Pascal rows C(m-1, .) for m = 1..=n.
    let binoms: Vec<Vec<BigInt>> = (0..n)
        .map(|top| (0..=top).map(|i| binomial(top, i)).collect())
        .collect();
    for j in 1..=k {
        let (done, rest) = table.split_at_mut(j);
        let prev = &done[j - 1];
        let cur = &mut rest[0];
        for m in j..=n {
            let mut acc = ExactNumber::zero();
            // Only B_{m-i, j-1} with m - i >= j - 1 can be nonzero. Entries
            // needing arguments past the end of `x` are never read by the
            // caller's target entry, so truncating them is harmless.
            for i in 1..=(m + 1 - j).min(x.len()) {
                let p = &prev[m - i];
                if p.is_zero() || x[i - 1].is_zero() {
                    continue;
                }
                let c = ExactNumber::from_integer(binoms[m - 1][i - 1].clone());
                acc += c * &x[i - 1] * p;
            }
            cur[m] = acc;
        }
    }
    table
}

/// Partial exponential Bell polynomial `B_{n,k}(x_1, ..., x_{n-k+1})`.
///
/// `x` may be longer than `n - k + 1`; extra entries are ignored.
pub fn bell_exponential(n: usize, k: usize, x: &[ExactNumber]) -> Result<ExactNumber> {
    check_args(n, k, x.len())?;
    let table = exponential_table(n, k, &x[..n - k + 1]);
    Ok(table[k][n].clone())
}

/// Partial ordinary Bell polynomial `B^_{n,k}(x)`, the sum over compositions
/// of `n` into `k` parts of `prod x_{s_i}`.
///
/// Evaluated as `(k!/n!) B_{n,k}(1! x_1, 2! x_2, ...)`.
pub fn bell_ordinary(n: usize, k: usize, x: &[ExactNumber]) -> Result<ExactNumber> {
    check_args(n, k, x.len())?;
    let scaled = scale_by_factorials(&x[..n - k + 1]);
    let b = bell_exponential(n, k, &scaled)?;
    Ok(b * ExactNumber::new(factorial(k), factorial(n)))
}

/// `(1! x_1, 2! x_2, ...)`.
pub(crate) fn scale_by_factorials(x: &[ExactNumber]) -> Vec<ExactNumber> {
    let mut f = BigInt::one();
    x.iter()
        .enumerate()
        .map(|(i, xi)| {
            f *= BigInt::from(i + 1);
            xi * ExactNumber::from_integer(f.clone())
        })
        .collect()
}

/// `sum_{k=1}^{n} (k!/n!) B_{n,k}(1! x_1, 2! x_2, ...)`, i.e. the total of the
/// ordinary Bell polynomials over all `k`, sharing one recurrence table.
pub(crate) fn ordinary_row_sum(n: usize, x: &[ExactNumber]) -> ExactNumber {
    let scaled = scale_by_factorials(&x[..n]);
    let table = exponential_table(n, n, &scaled);
    let n_fact = factorial(n);
    (1..=n)
        .map(|k| &table[k][n] * ExactNumber::new(factorial(k), n_fact.clone()))
        .fold(ExactNumber::zero(), |a, b| a + b)
}

/// All compositions of `n` into exactly `k` positive parts, in lexicographic
/// order. There are `C(n-1, k-1)` of them.
pub fn compositions(n: usize, k: usize) -> Result<Compositions> {
    if k == 0 || k > n {
        return Err(Error::Argument(format!(
            "compositions need 1 <= k <= n, got n={n}, k={k}"
        )));
    }
    let mut first = vec![1; k];
    first[k - 1] = n - k + 1;
    Ok(Compositions { next: Some(first) })
}

#[derive(Debug, Clone)]
pub struct Compositions {
    next: Option<Vec<usize>>,
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let k = current.len();
        // Bump the rightmost non-final part whose tail still has slack, then
        // reset the tail to (1, ..., 1, rest).
        let mut tail_sum = current[k - 1];
        let mut succ = None;
        for i in (0..k.saturating_sub(1)).rev() {
            let tail_len = k - 1 - i;
            if tail_sum > tail_len {
                let mut c = current.clone();
                c[i] += 1;
                let rest = tail_sum - 1;
                for slot in c.iter_mut().skip(i + 1) {
                    *slot = 1;
                }
                c[k - 1] = rest - (tail_len - 1);
                succ = Some(c);
                break;
            }
            tail_sum += current[i];
        }
        self.next = succ;
        Some(current)
    }
}
