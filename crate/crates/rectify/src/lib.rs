//! Density deviation, dyadic transport maps and rectifiability certificates
//! for Delone sets.

pub mod certify;
pub mod density;
pub mod error;
pub mod moduli;
pub mod pointset;
pub mod tol;
pub mod transport;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/point-sets.md")]
    pub mod point_sets {}
    #[doc = include_str!("../../../book/src/moduli.md")]
    pub mod moduli {}
    #[doc = include_str!("../../../book/src/densities.md")]
    pub mod densities {}
    #[doc = include_str!("../../../book/src/transport.md")]
    pub mod transport {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    pub mod certificates {}
}
