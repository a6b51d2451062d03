//! Softmax attention, exactly and by the polynomial method.
//!
//! * [`attention::exact_attention`] computes `D⁻¹AV` with
//!   `A = exp(QKᵀ/d)` in `O(n²d)` time and `O(nd)` memory.
//! * [`attention::poly_attention`] approximates it to additive error
//!   `eps_a` in `O(nrd)` time, where `r` is the number of monomial
//!   features of a certified polynomial approximation of `exp`.
//! * [`annreduce`] decides gap approximate nearest neighbour instances in
//!   Hamming space with one call to any [`attention::AttentionSolver`].
//! * [`bench`] generates seeded instances and runs timing sweeps.
//!
//! ```
//! use polyattn::attention::{error_report, exact_attention, poly_attention};
//! use polyattn::bench::generate_instance;
//!
//! let inst = generate_instance(128, 8, 0.5, 1e-3, 7).unwrap();
//! let (approx, report) = poly_attention(&inst).unwrap();
//! assert!(error_report(&exact_attention(&inst), &approx).unwrap() <= 1e-3);
//! assert!(report.rank < 128 * 128);
//! ```
//!
//! The guide in `book/` walks through each module; its listings are
//! compiled as doc-tests of this crate.

pub mod annreduce;
pub mod attention;
pub mod bench;
pub mod error;
pub mod expoly;
pub mod featuremap;
pub mod linalg;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/softmax.md")]
    mod softmax {}
    #[doc = include_str!("../../../book/src/polynomial.md")]
    mod polynomial {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/polyattention.md")]
    mod polyattention {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
}
