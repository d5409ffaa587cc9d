//! Numerical toolkit for the Bianchi–Egnell stability quotient of the
//! fractional Sobolev inequality, evaluated on finite superpositions of
//! Talenti bubbles.
//!
//! Every `Ḣˢ` quantity is reduced to `L¹` pairings through the bubble
//! equation `(−Δ)ˢB = S_d B^{2*−1}`, so no fractional Laplacian is ever
//! discretized. The remaining integrals are radial (concentric
//! configurations) or axisymmetric (collinear configurations) and are
//! evaluated by adaptive Gauss–Kronrod quadrature.

pub mod bubbles;
pub mod cli;
pub mod constants;
pub mod error;
pub mod expansion;
pub mod functional;
pub mod inequalities;
pub mod optimize;
pub mod quadrature;
pub mod thresholds;

pub use bubbles::{BubbleAlgebra, BubbleParam, Geometry, Superposition};
pub use constants::{Ambient, SharpConstants};
pub use error::{Error, Result};
pub use functional::{Functional, FunctionalReport, MOptimum};
pub use quadrature::{QuadratureConfig, QuadratureResult};
