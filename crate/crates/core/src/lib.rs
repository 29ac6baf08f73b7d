//! Verification laboratory for the Cauchy-Jensen additive functional
//! equation `f((x+y+z)/2) + f((x−y+z)/2) = f(x) + f(z)`.
//!
//! The crate synthesizes approximately additive functions, constructs their
//! additive approximant A by the direct method (iterated dyadic rescaling)
//! and by the fixed-point method (Diaz-Margolis iteration on a generalized
//! metric space of functions), and machine-checks the stability bound of
//! each theorem in four ambient settings: classical real norms, the
//! non-Archimedean field Q_p with exact ultrametric arithmetic, random
//! normed spaces, and fuzzy normed spaces.

pub mod carrier;
pub mod certify;
pub mod config;
pub mod direct;
pub mod error;
pub mod exact;
pub mod fixedpoint;
pub mod funceq;
pub mod padic;
pub mod report;
pub mod runner;
pub mod spaces;

pub use error::{Error, Result};
