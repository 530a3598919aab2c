//! modcup: numerical cup products of Eichler cocycles for real-weight
//! modular forms on SL2(Z).
//!
//! The library computes the trilinear form T(f1, f2, f3) attached to three
//! real-weight eta-power forms whose weights sum to 4, via two independent
//! routes (a rapidly convergent series of elementary integrals, and direct
//! contour quadrature of the defining double integral), together with the
//! supporting cast: q-expansions, period polynomials and Eichler cocycles,
//! polar-part projectors, and coinvariant dimension counts.

pub mod cli;
pub mod cocycle;
pub mod error;
pub mod forms;
pub mod polar;
pub mod quad;
pub mod special;
pub mod triform;

pub use error::{McError, McResult};
