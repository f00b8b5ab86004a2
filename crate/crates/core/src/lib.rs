//! Numerical toolkit for almost-Fuchsian germs over a genus-2 surface:
//! surface-group construction and bending, triangulated fundamental domains,
//! holomorphic quadratic differentials, the germ PDE, volume entropy,
//! limit-set statistics and rigidity bounds.

pub mod ball;
pub mod cover;
pub mod entropy;
pub mod error;
pub mod germ;
pub mod group;
pub mod io;
pub mod limits;
pub mod linalg;
pub mod mesh;
pub mod moebius;
pub mod quaddiff;
pub mod rigidity;
pub mod svg;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
