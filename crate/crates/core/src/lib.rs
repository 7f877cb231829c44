//! Sampling and exact distribution theory for Exchangeable Sequence of
//! Clusters (ESC) random partition models.
//!
//! An ESC model draws cluster sizes `S_1, S_2, ...` i.i.d. from a distribution
//! `mu` on the positive integers, conditioned on some prefix summing exactly
//! to `n`. This crate provides
//!
//! * [`distributions`]: the cluster-size families,
//! * [`renewal`]: the renewal probabilities `u_m = Pr[E_m]`,
//! * [`kdist`]: the exact law of the number of clusters `K_n`,
//! * [`samplers`]: a rejection-free sequential sampler, the rejection
//!   baseline, and partition assembly,
//! * [`bell`]: exact Bell polynomials and compositions used as oracles,
//! * [`verify`]: a cross-check suite tying the routes together.

pub mod bell;
mod closed_form;
pub mod distributions;
pub mod error;
pub mod kdist;
mod logspace;
pub mod renewal;
pub mod samplers;
pub mod verify;

pub use distributions::{ClusterSizeSpec, Family};
pub use error::{Error, Result};
pub use logspace::log_sum_exp;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/cluster_sizes.md")]
    mod cluster_sizes {}
    #[doc = include_str!("../../../book/src/renewal.md")]
    mod renewal {}
    #[doc = include_str!("../../../book/src/bell.md")]
    mod bell {}
    #[doc = include_str!("../../../book/src/kdist.md")]
    mod kdist {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
