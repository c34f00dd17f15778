//! Computational toolkit for twisted obstruction theory on finite models.
//!
//! The crate is organised bottom-up:
//!
//! * [`nerve`] — finite ordered simplicial complexes standing in for the nerve
//!   of an open cover;
//! * [`coeffs`] — coefficient groups, finite groups given by tables,
//!   semidirect products `G ⋊ Z₂` and central extension data;
//! * [`cech`] — twisted Čech cochains, cohomology through Smith normal form,
//!   coboundary solving with certificates and the Bockstein map;
//! * [`lifting`] — non-abelian twisted transition data and the lifting
//!   obstruction cocycle;
//! * [`connection`] — barycentric pullback connections on gridded two-chart
//!   bases, curvature and Chern numbers;
//! * [`schwinger`] — band-limited matrix loops and the Schwinger cocycle.

pub mod cech;
pub mod coeffs;
pub mod connection;
pub mod lifting;
mod error;
pub mod nerve;
pub mod schwinger;
pub mod selfcheck;
pub mod snf;

pub use cech::{
    BocksteinClass, Certificate, Cochain, Cohomology, CoboundaryOutcome, IntCochain, RealCochain,
    TwistedLocalSystem,
};
pub use coeffs::{
    Automorphism, CentralExtension, CoefficientGroup, CoefficientKind, FiniteGroup, Involution,
    SemidirectElement,
};
pub use error::{Error, Result};
pub use lifting::{LiftChoice, Obstruction, TransitionData, Trivialization};
pub use nerve::{Nerve, Simplex};
pub use schwinger::{BlockOperator, CentralElement, LoopPolynomial};

/// Complex scalar used throughout the numerical modules.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
