//! Numerical laboratory for the semilinear equation `-Δu = f(|x|, u)` on ℝ^N,
//! with the Hénon nonlinearity `|x|^(-ℓ) u^q` as the main model.
//!
//! The crate is organised bottom-up:
//!
//! * [`regimes`] holds the closed-form exponent algebra and the (ℓ, q) classifier;
//! * [`nonlinearity`] represents `f(r, u)` with its partials and audits growth hypotheses;
//! * [`radial`] shoots radial solutions, works in Emden–Fowler variables and classifies decay;
//! * [`sphere`] solves the zonal problem on S^(N-1) and assembles non-radial solutions;
//! * [`halfspace`] covers the comparison function, a discrete maximum principle harness
//!   and moving-plane reflection scans;
//! * [`pipeline`] ties these together behind a serialisable run configuration.

pub mod config;
pub mod halfspace;
pub mod interp;
pub mod nonlinearity;
pub mod ode;
pub mod pipeline;
pub mod radial;
pub mod regimes;
pub mod roots;
pub mod sphere;

pub use config::Tolerances;
pub use nonlinearity::Nonlinearity;
pub use regimes::{classify, derive_constants, DerivedConstants, ProblemParams, RegimeTag};
