//! Numerical toolkit for the boundary dynamics of left iterated function
//! systems of holomorphic self-maps of the unit disc.
//!
//! Modules, bottom-up:
//! - [`geometry`]: hyperbolic metric, midpoints, automorphisms and involutions.
//! - [`holomap`]: expression trees for self-maps, evaluation, derivatives, preimages.
//! - [`measure`]: boundary arc sets, Lebesgue and harmonic measure.
//! - [`hardy`]: H² norms, Nevanlinna counting, composition-operator bounds.
//! - [`ifs`]: left iterated function systems and the elliptic perturbation scheme.
//! - [`simcli`]: scenarios, Monte Carlo boundary experiments and reports.

pub mod geometry;
pub mod hardy;
pub mod holomap;
pub mod ifs;
pub mod measure;
pub mod quadrature;
pub mod simcli;

pub use geometry::{DiscAutomorphism, DiscPoint, Involution};
pub use holomap::MapExpr;
pub use measure::BoundaryArcSet;
