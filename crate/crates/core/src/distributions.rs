//! Cluster-size distributions on the positive integers.
//!
//! Every family puts zero mass on size 0. All probabilities are handled as
//! natural logarithms; a size with zero probability has log-mass `-inf`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::{ln_gamma, xlog1my, xlogy};

/// Explicit weights whose total is within this distance of 1 are silently
/// renormalized; anything further off is rejected.
pub const EXPLICIT_SUM_TOLERANCE: f64 = 1e-9;

/// The parametric family and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `1 + Poisson(lambda)`.
    ShiftedPoisson { lambda: f64 },
    /// `1 + Z` where `Z` counts successes (probability `p`) before the
    /// `r`-th failure. `r` need not be an integer.
    ShiftedNegativeBinomial { r: f64, p: f64 },
    /// `mu_k = (1 - p)^(k - 1) p`.
    Geometric { p: f64 },
    /// `mu_k = k^(-alpha) / zeta(alpha)` on `k = 1, 2, ...`.
    Zipf { alpha: f64 },
    /// `weights[i]` is the mass on size `i + 1`.
    Explicit { weights: Vec<f64> },
}

/// A validated cluster-size distribution `mu`.
///
/// Construct through the named constructors or by deserializing the JSON
/// object `{"kind": ..., "params": {...}}`; both paths validate parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct ClusterSizeSpec {
    family: Family,
    // ln zeta(alpha) for Zipf, 0 otherwise.
    log_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
enum SpecRepr {
    ShiftedPoisson { lambda: f64 },
    ShiftedNb { r: f64, p: f64 },
    Geometric { p: f64 },
    Zipf { alpha: f64 },
    Explicit { weights: Vec<f64> },
}

impl TryFrom<SpecRepr> for ClusterSizeSpec {
    type Error = Error;

    fn try_from(repr: SpecRepr) -> Result<Self> {
        match repr {
            SpecRepr::ShiftedPoisson { lambda } => Self::shifted_poisson(lambda),
            SpecRepr::ShiftedNb { r, p } => Self::shifted_negative_binomial(r, p),
            SpecRepr::Geometric { p } => Self::geometric(p),
            SpecRepr::Zipf { alpha } => Self::zipf(alpha),
            SpecRepr::Explicit { weights } => Self::explicit(weights),
        }
    }
}

impl From<ClusterSizeSpec> for SpecRepr {
    fn from(spec: ClusterSizeSpec) -> Self {
        match spec.family {
            Family::ShiftedPoisson { lambda } => SpecRepr::ShiftedPoisson { lambda },
            Family::ShiftedNegativeBinomial { r, p } => SpecRepr::ShiftedNb { r, p },
            Family::Geometric { p } => SpecRepr::Geometric { p },
            Family::Zipf { alpha } => SpecRepr::Zipf { alpha },
            Family::Explicit { weights } => SpecRepr::Explicit { weights },
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl ClusterSizeSpec {
    fn plain(family: Family) -> Self {
        Self {
            family,
            log_norm: 0.0,
        }
    }

    pub fn shifted_poisson(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid(format!("shifted Poisson needs lambda > 0, got {lambda}")));
        }
        Ok(Self::plain(Family::ShiftedPoisson { lambda }))
    }

    /// `p = 1` is rejected: every size would have zero mass.
    pub fn shifted_negative_binomial(r: f64, p: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid(format!("shifted negative binomial needs r > 0, got {r}")));
        }
        if !(0.0..1.0).contains(&p) {
            return Err(invalid(format!(
                "shifted negative binomial needs 0 <= p < 1, got {p}"
            )));
        }
        Ok(Self::plain(Family::ShiftedNegativeBinomial { r, p }))
    }

    pub fn geometric(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(invalid(format!("geometric needs 0 < p <= 1, got {p}")));
        }
        Ok(Self::plain(Family::Geometric { p }))
    }

    pub fn zipf(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(invalid(format!("Zipf needs alpha > 1, got {alpha}")));
        }
        let z = zeta(alpha)?;
        Ok(Self {
            family: Family::Zipf { alpha },
            log_norm: z.ln(),
        })
    }

    /// Weights for sizes `1, 2, ...`. Totals within
    /// [`EXPLICIT_SUM_TOLERANCE`] of one are renormalized.
    pub fn explicit(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("explicit weights must be non-empty"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(invalid(format!(
                "explicit weights must be finite and nonnegative, got {w}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > EXPLICIT_SUM_TOLERANCE {
            return Err(invalid(format!("explicit weights sum to {total}, expected 1")));
        }
        // Anything within summation round-off of 1 is kept verbatim, which
        // makes renormalization idempotent across serialization.
        let weights = if (total - 1.0).abs() <= f64::EPSILON * weights.len() as f64 {
            weights
        } else {
            weights.into_iter().map(|w| w / total).collect()
        };
        Ok(Self::plain(Family::Explicit { weights }))
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// The JSON `kind` tag.
    pub fn kind_name(&self) -> &'static str {
        match self.family {
            Family::ShiftedPoisson { .. } => "shifted_poisson",
            Family::ShiftedNegativeBinomial { .. } => "shifted_nb",
            Family::Geometric { .. } => "geometric",
            Family::Zipf { .. } => "zipf",
            Family::Explicit { .. } => "explicit",
        }
    }

    /// Compact `name=value` rendering of the parameters, `;`-separated.
    pub fn params_label(&self) -> String {
        match &self.family {
            Family::ShiftedPoisson { lambda } => format!("lambda={lambda}"),
            Family::ShiftedNegativeBinomial { r, p } => format!("r={r};p={p}"),
            Family::Geometric { p } => format!("p={p}"),
            Family::Zipf { alpha } => format!("alpha={alpha}"),
            Family::Explicit { weights } => {
                let ws: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                format!("weights={}", ws.join(";"))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Argument(format!("bad spec JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serialization cannot fail")
    }

    /// `ln mu_k`. Size 0 always has log-mass `-inf`.
    pub fn log_pmf(&self, k: usize) -> f64 {
        if k == 0 {
            return f64::NEG_INFINITY;
        }
        let j = (k - 1) as f64;
        match &self.family {
            Family::ShiftedPoisson { lambda } => j * lambda.ln() - lambda - ln_gamma(j + 1.0),
            Family::ShiftedNegativeBinomial { r, p } => {
                // C(j + r - 1, j) through the gamma function handles fractional r.
                ln_gamma(j + r) - ln_gamma(j + 1.0) - ln_gamma(*r) + xlog1my(*r, *p) + xlogy(j, *p)
            }
            Family::Geometric { p } => xlog1my(j, *p) + p.ln(),
            Family::Zipf { alpha } => -alpha * (k as f64).ln() - self.log_norm,
            Family::Explicit { weights } => weights
                .get(k - 1)
                .map_or(f64::NEG_INFINITY, |w| w.ln()),
        }
    }

    /// `(ln mu_1, ..., ln mu_n)`.
    pub fn pmf_prefix(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Argument("pmf prefix length must be at least 1".into()));
        }
        Ok((1..=n).map(|k| self.log_pmf(k)).collect())
    }

    /// `E[S_1]`, or `+inf` when the first moment diverges.
    pub fn mean(&self) -> f64 {
        match &self.family {
            Family::ShiftedPoisson { lambda } => lambda + 1.0,
            Family::ShiftedNegativeBinomial { r, p } => 1.0 + r * p / (1.0 - p),
            Family::Geometric { p } => 1.0 / p,
            Family::Zipf { alpha } => {
                if *alpha <= 2.0 {
                    f64::INFINITY
                } else {
                    zeta(alpha - 1.0).expect("alpha - 1 > 1") / self.log_norm.exp()
                }
            }
            Family::Explicit { weights } => weights
                .iter()
                .enumerate()
                .map(|(i, w)| (i + 1) as f64 * w)
                .sum(),
        }
    }

    /// Largest size with positive mass, when the support is finite.
    pub fn max_size(&self) -> Option<usize> {
        match &self.family {
            Family::Explicit { weights } => weights.iter().rposition(|w| *w > 0.0).map(|i| i + 1),
            Family::Geometric { p } if *p == 1.0 => Some(1),
            Family::ShiftedNegativeBinomial { p, .. } if *p == 0.0 => Some(1),
            _ => None,
        }
    }
}

// B_2, B_4, ..., B_20 divided by (2j)!.
const BERNOULLI_OVER_FACTORIAL: [f64; 10] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
    43867.0 / 798.0 / 6402373705728000.0,
    -174611.0 / 330.0 / 2432902008176640000.0,
];

/// Riemann zeta function for real `alpha > 1`.
///
/// Sums the first terms directly and closes the tail with an
/// Euler-Maclaurin correction.
pub fn zeta(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::Argument(format!("zeta needs alpha > 1, got {alpha}")));
    }
    if alpha == 2.0 {
        return Ok(PI * PI / 6.0);
    }
    const CUT: f64 = 16.0;
    let head: f64 = (1..CUT as u32)
        .rev()
        .map(|k| f64::from(k).powf(-alpha))
        .sum();
    let n_pow = CUT.powf(-alpha);
    let mut tail = CUT * n_pow / (alpha - 1.0) + 0.5 * n_pow;
    // d^(2j-1)/dx^(2j-1) of x^(-alpha) at CUT, up to sign.
    let mut deriv = alpha * n_pow / CUT;
    for (j, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        tail += coef * deriv;
        let m = 2.0 * j as f64;
        deriv *= (alpha + m + 1.0) * (alpha + m + 2.0) / (CUT * CUT);
    }
    Ok(head + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn geometric_prefix() {
        let spec = ClusterSizeSpec::geometric(0.5).unwrap();
        let lp = spec.pmf_prefix(2).unwrap();
        assert!(close(lp[0], 0.5f64.ln(), 1e-15));
        assert!(close(lp[1], 0.25f64.ln(), 1e-15));
    }

    #[test]
    fn poisson_prefix() {
        let spec = ClusterSizeSpec::shifted_poisson(1.0).unwrap();
        assert!(close(spec.pmf_prefix(1).unwrap()[0], -1.0, 1e-15));
    }

    #[test]
    fn nb_prefix() {
        let spec = ClusterSizeSpec::shifted_negative_binomial(2.0, 0.5).unwrap();
        let lp = spec.pmf_prefix(2).unwrap();
        assert!(close(lp[0], 0.25f64.ln(), 1e-14));
        assert!(close(lp[1], 0.25f64.ln(), 1e-14));
    }

    #[test]
    fn nb_with_zero_p_is_a_point_mass() {
        let spec = ClusterSizeSpec::shifted_negative_binomial(1.5, 0.0).unwrap();
        assert_eq!(spec.log_pmf(1), 0.0);
        assert_eq!(spec.log_pmf(2), f64::NEG_INFINITY);
        assert_eq!(spec.max_size(), Some(1));
    }

    #[test]
    fn zipf_prefix() {
        let spec = ClusterSizeSpec::zipf(2.0).unwrap();
        let lp = spec.pmf_prefix(1).unwrap();
        assert!(close(lp[0], (6.0 / (PI * PI)).ln(), 1e-14));
        assert!(close(lp[0].exp(), 0.607927, 1e-6));
    }

    #[test]
    fn zero_length_prefix_is_an_error() {
        let spec = ClusterSizeSpec::geometric(0.5).unwrap();
        assert!(matches!(spec.pmf_prefix(0), Err(Error::Argument(_))));
    }

    #[test]
    fn means() {
        assert_eq!(ClusterSizeSpec::geometric(0.5).unwrap().mean(), 2.0);
        assert_eq!(ClusterSizeSpec::shifted_poisson(2.0).unwrap().mean(), 3.0);
        assert_eq!(ClusterSizeSpec::zipf(1.5).unwrap().mean(), f64::INFINITY);
        assert_eq!(ClusterSizeSpec::zipf(2.0).unwrap().mean(), f64::INFINITY);
        let nb = ClusterSizeSpec::shifted_negative_binomial(2.0, 0.5).unwrap();
        assert!(close(nb.mean(), 3.0, 1e-15));
        let ex = ClusterSizeSpec::explicit(vec![0.5, 0.5]).unwrap();
        assert!(close(ex.mean(), 1.5, 1e-15));
        // zeta(2) / zeta(3)
        let z = ClusterSizeSpec::zipf(3.0).unwrap();
        assert!(close(z.mean(), 1.3684327776202058, 1e-12));
    }

    #[test]
    fn zeta_known_values() {
        assert!(close(zeta(2.0).unwrap(), 1.6449340668482264, 1e-13));
        assert!(close(zeta(2.0000001).unwrap(), 1.6449339731, 1e-9));
        assert!(close(zeta(4.0).unwrap(), PI.powi(4) / 90.0, 1e-13));
        assert!(close(zeta(50.0).unwrap(), 1.0 + 2f64.powi(-50), 1e-15));
        assert!(matches!(zeta(1.0), Err(Error::Argument(_))));
        assert!(matches!(zeta(0.5), Err(Error::Argument(_))));
    }

    // Independent oracle: 10^7 direct terms plus the midpoint integral tail
    // int_{N+1/2}^inf x^-a dx, whose error is O(N^(-a-2)).
    fn zeta_brute(alpha: f64) -> f64 {
        const N: u32 = 10_000_000;
        let head: f64 = (1..=N).rev().map(|k| f64::from(k).powf(-alpha)).sum();
        let tail = (f64::from(N) + 0.5).powf(1.0 - alpha) / (alpha - 1.0);
        head + tail
    }

    #[test]
    fn zeta_matches_brute_force() {
        for alpha in [1.5, 2.5, 3.7] {
            let oracle = zeta_brute(alpha);
            let got = zeta(alpha).unwrap();
            assert!(close(got, oracle, 1e-12), "alpha={alpha}: {got} vs {oracle}");
        }
        assert!(close(zeta(1.5).unwrap(), 2.6123753487, 1e-10));
    }

    #[test]
    fn validation() {
        assert!(ClusterSizeSpec::shifted_poisson(0.0).is_err());
        assert!(ClusterSizeSpec::shifted_poisson(f64::NAN).is_err());
        assert!(ClusterSizeSpec::shifted_negative_binomial(0.0, 0.5).is_err());
        assert!(ClusterSizeSpec::shifted_negative_binomial(2.0, 1.0).is_err());
        assert!(ClusterSizeSpec::shifted_negative_binomial(2.0, -0.1).is_err());
        assert!(ClusterSizeSpec::geometric(0.0).is_err());
        assert!(ClusterSizeSpec::geometric(1.0).is_ok());
        assert!(ClusterSizeSpec::zipf(1.0).is_err());
        assert!(ClusterSizeSpec::explicit(vec![]).is_err());
        assert!(ClusterSizeSpec::explicit(vec![0.5, -0.1, 0.6]).is_err());
        assert!(ClusterSizeSpec::explicit(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn explicit_renormalizes_round_off() {
        let spec = ClusterSizeSpec::explicit(vec![0.5, 0.5 + 5e-10]).unwrap();
        let Family::Explicit { weights } = spec.family() else {
            unreachable!()
        };
        assert!(close(weights.iter().sum::<f64>(), 1.0, 1e-15));
        assert_eq!(spec.log_pmf(3), f64::NEG_INFINITY);
        assert_eq!(spec.max_size(), Some(2));
    }

    #[test]
    fn json_round_trip_and_names() {
        let text = r#"{"kind":"shifted_nb","params":{"r":2.0,"p":0.5}}"#;
        let spec = ClusterSizeSpec::from_json(text).unwrap();
        assert_eq!(spec, ClusterSizeSpec::shifted_negative_binomial(2.0, 0.5).unwrap());
        assert_eq!(spec.to_json(), text);
        for (text, kind) in [
            (r#"{"kind":"shifted_poisson","params":{"lambda":2}}"#, "shifted_poisson"),
            (r#"{"kind":"geometric","params":{"p":0.3}}"#, "geometric"),
            (r#"{"kind":"zipf","params":{"alpha":2}}"#, "zipf"),
            (r#"{"kind":"explicit","params":{"weights":[0.5,0.5]}}"#, "explicit"),
        ] {
            assert_eq!(ClusterSizeSpec::from_json(text).unwrap().kind_name(), kind);
        }
        assert!(ClusterSizeSpec::from_json(r#"{"kind":"geometric","params":{"p":2}}"#).is_err());
        assert!(ClusterSizeSpec::from_json(r#"{"kind":"binomial","params":{}}"#).is_err());
    }

    // Independent check of the gamma-function route against a product of
    // integers for integer r.
    fn nb_direct(r: u64, p: f64, k: u64) -> f64 {
        // C(k + r - 2, k - 1) (1 - p)^r p^(k - 1), computed in log space from
        // an explicit product so that k up to 200 stays finite.
        let j = k - 1;
        let mut log_c = 0.0;
        for i in 1..=j {
            log_c += ((r - 1 + i) as f64).ln() - (i as f64).ln();
        }
        log_c + r as f64 * (1.0 - p).ln() + j as f64 * p.ln()
    }

    #[test]
    fn nb_integer_r_matches_direct_factorials() {
        for (r, p) in [(1u64, 0.3), (2, 0.5), (5, 0.8), (12, 0.1)] {
            let spec = ClusterSizeSpec::shifted_negative_binomial(r as f64, p).unwrap();
            for k in 1..=200u64 {
                let got = spec.log_pmf(k as usize).exp();
                let want = nb_direct(r, p, k).exp();
                assert!(
                    (got - want).abs() <= 1e-12 * want.max(f64::MIN_POSITIVE),
                    "r={r} p={p} k={k}: {got} vs {want}"
                );
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_spec() -> impl Strategy<Value = ClusterSizeSpec> {
            prop_oneof![
                (0.01f64..50.0).prop_map(|l| ClusterSizeSpec::shifted_poisson(l).unwrap()),
                (0.05f64..20.0, 0.0f64..0.99)
                    .prop_map(|(r, p)| ClusterSizeSpec::shifted_negative_binomial(r, p).unwrap()),
                (0.001f64..=1.0).prop_map(|p| ClusterSizeSpec::geometric(p).unwrap()),
                (1.01f64..8.0).prop_map(|a| ClusterSizeSpec::zipf(a).unwrap()),
                prop::collection::vec(0.0f64..1.0, 1..30).prop_filter_map("zero", |w| {
                    let t: f64 = w.iter().sum();
                    (t > 0.0).then(|| {
                        ClusterSizeSpec::explicit(w.iter().map(|x| x / t).collect()).unwrap()
                    })
                }),
            ]
        }

        proptest! {
            #[test]
            fn prefix_entries_are_probabilities(spec in any_spec(), n in 1usize..2000) {
                let lp = spec.pmf_prefix(n).unwrap();
                prop_assert_eq!(lp.len(), n);
                for x in &lp {
                    prop_assert!(!x.is_nan());
                    prop_assert!(*x <= 1e-12);
                    let e = x.exp();
                    prop_assert!((0.0..=1.0).contains(&e));
                }
            }

            #[test]
            fn geometric_partial_sums(p in 0.001f64..=1.0, n in 1usize..500) {
                let spec = ClusterSizeSpec::geometric(p).unwrap();
                let total: f64 = spec.pmf_prefix(n).unwrap().iter().map(|x| x.exp()).sum();
                prop_assert!((total - (1.0 - (1.0 - p).powi(n as i32))).abs() <= 1e-12);
            }

            #[test]
            fn explicit_prefix_mass(w in prop::collection::vec(0.0f64..1.0, 1..20), extra in 0usize..10) {
                let t: f64 = w.iter().sum();
                prop_assume!(t > 0.0);
                let spec = ClusterSizeSpec::explicit(w.iter().map(|x| x / t).collect()).unwrap();
                let full: f64 = spec.pmf_prefix(w.len() + extra).unwrap().iter().map(|x| x.exp()).sum();
                prop_assert!((full - 1.0).abs() <= 1e-12);
                let part: f64 = spec.pmf_prefix(1 + w.len() / 2).unwrap().iter().map(|x| x.exp()).sum();
                prop_assert!(part <= 1.0 + 1e-12);
            }

            #[test]
            fn json_round_trip(spec in any_spec()) {
                let back = ClusterSizeSpec::from_json(&spec.to_json()).unwrap();
                prop_assert_eq!(back, spec);
            }
        }
    }
}
