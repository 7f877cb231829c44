//! Small log-space numerics shared by the table builders.

/// Values below this are treated as "possibly underflowed" by the linear-space
/// fast paths, which then fall back to exact log-sum-exp.
pub(crate) const LINEAR_FLOOR: f64 = 1e-200;

/// Numerically stable `ln(sum(exp(x)))`. Returns `-inf` for an empty input or
/// when every term is `-inf`.
pub fn log_sum_exp<I>(terms: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = terms.into_iter();
    let max = iter.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = iter.map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// `x * ln(y)` with the convention `0 * ln(0) = 0`.
pub(crate) fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `x * ln(1 - y)` with the convention `0 * ln(0) = 0`.
pub(crate) fn xlog1my(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (-y).ln_1p()
    }
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln C(a, m)` for real `a` and integer `m >= 0` with `a - m + 1 > 0`.
pub(crate) fn ln_binom(a: f64, m: f64) -> f64 {
    ln_gamma(a + 1.0) - ln_gamma(m + 1.0) - ln_gamma(a - m + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive_sum() {
        let xs = [0.1f64.ln(), 0.2f64.ln(), 0.3f64.ln()];
        assert!((log_sum_exp(xs) - 0.6f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn lse_survives_extreme_magnitudes() {
        let xs = [-1000.0, -1000.0];
        assert!((log_sum_exp(xs) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
    }

    #[test]
    fn binom_small() {
        assert!((ln_binom(5.0, 2.0).exp() - 10.0).abs() < 1e-12);
        assert!((ln_binom(3.5, 0.0)).abs() < 1e-14);
    }
}
