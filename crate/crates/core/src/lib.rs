//! Random-matrix analysis of cross-correlations in daily market returns.
//!
//! The pipeline runs from a wide table of closing prices to a per-window
//! report:
//!
//! 1. [`ingest`]: load prices, drop dates on which too many markets were
//!    closed, forward-fill the remaining gaps, and slice named windows;
//! 2. [`returns`]: log returns, volatilities, and normalized returns;
//! 3. [`correlation`]: the equal-time correlation matrix and the
//!    distribution of its coefficients;
//! 4. [`spectral`]: a Jacobi eigensolver with fixed ordering and sign
//!    conventions;
//! 5. [`rmt`]: the Marchenko–Pastur null model and seeded surrogates;
//! 6. [`analysis`]: inverse participation ratios, cross-window sign flips,
//!    and [`analysis::build_report`].
//!
//! ```
//! use marketrmt::rmt::mp_bounds;
//!
//! let model = mp_bounds(19.4).unwrap();
//! assert_eq!(format!("{:.3} {:.3}", model.lambda_minus, model.lambda_plus), "0.597 1.506");
//! ```

pub mod analysis;
pub mod cli;
pub mod correlation;
pub mod error;
pub mod histogram;
pub mod ingest;
pub mod matrix;
pub mod returns;
pub mod rmt;
pub mod spectral;
pub mod synthetic;

pub use error::{Error, Result};

/// Fixed six-decimal formatting used by every text table.
pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

// The guide's code listings compile and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    mod alignment {}
    #[doc = include_str!("../../../book/src/returns.md")]
    mod returns {}
    #[doc = include_str!("../../../book/src/correlation.md")]
    mod correlation {}
    #[doc = include_str!("../../../book/src/eigensolver.md")]
    mod eigensolver {}
    #[doc = include_str!("../../../book/src/marchenko-pastur.md")]
    mod marchenko_pastur {}
    #[doc = include_str!("../../../book/src/eigenvectors.md")]
    mod eigenvectors {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
